#!/usr/bin/env python3
"""
Clone reports

One CloneReport per (input, layer): the two clone fidelities and the three
pairwise concurrences of the final three-qubit state, serialisable to a
JSON object or a flat CSV row.
"""

import csv
import json
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Dict, Iterable, List, Union

import numpy as np
import structlog

from metrics.entanglement import concurrence, state_fidelity
from numkit.errors import NumericalFailure
from numkit.linalg import CMatrix, SubsystemShape, partial_trace
from protocol.states import InputState

logger = structlog.get_logger(__name__)

LAYERS = ("ideal", "pulse", "noisy", "tomography")
REPORT_TOL = 1e-9

CSV_FIELDS = [
    "input", "layer", "fidelity_q2", "fidelity_q3",
    "concurrence_q1q2", "concurrence_q1q3", "concurrence_q2q3",
]


@dataclass
class CloneReport:
    """Reported quantities of one cloning run"""
    input: str
    layer: str
    fidelity_q2: float
    fidelity_q3: float
    concurrence_q1q2: float
    concurrence_q1q3: float
    concurrence_q2q3: float

    def __post_init__(self):
        if self.layer not in LAYERS:
            raise ValueError(f"Unknown layer '{self.layer}'")
        for name in CSV_FIELDS[2:]:
            value = getattr(self, name)
            if not -REPORT_TOL <= value <= 1.0 + REPORT_TOL:
                raise NumericalFailure(f"{name} = {value} outside [0, 1]")

    @property
    def fidelities(self) -> Dict[str, float]:
        return {"Q2": self.fidelity_q2, "Q3": self.fidelity_q3}

    @property
    def concurrences(self) -> Dict[str, float]:
        return {"Q1Q2": self.concurrence_q1q2, "Q1Q3": self.concurrence_q1q3, "Q2Q3": self.concurrence_q2q3}

    def to_dict(self) -> Dict[str, Union[str, float]]:
        return asdict(self)

    def to_row(self, digits: int = 6) -> Dict[str, str]:
        row = {"input": self.input, "layer": self.layer}
        for name in CSV_FIELDS[2:]:
            row[name] = f"{getattr(self, name):.{digits}f}"
        return row


def clone_report(state: InputState, rho3: CMatrix, layer: str) -> CloneReport:
    """
    Build a CloneReport from a three-qubit density matrix (or state vector)

    Args:
        state: The Q1 input the clones are compared against
        rho3: Final Q1 Q2 Q3 state
        layer: ideal, pulse, noisy or tomography
    """
    shape = SubsystemShape.qubits(3)
    report = CloneReport(
        input=state.label,
        layer=layer,
        fidelity_q2=state_fidelity(state, partial_trace(rho3, shape, [1])),
        fidelity_q3=state_fidelity(state, partial_trace(rho3, shape, [2])),
        concurrence_q1q2=concurrence(partial_trace(rho3, shape, [0, 1])),
        concurrence_q1q3=concurrence(partial_trace(rho3, shape, [0, 2])),
        concurrence_q2q3=concurrence(partial_trace(rho3, shape, [1, 2])),
    )
    logger.debug("Clone report", **report.to_dict())
    return report


def write_reports_csv(path: Union[str, Path], reports: Iterable[CloneReport]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=CSV_FIELDS)
        writer.writeheader()
        for report in reports:
            writer.writerow(report.to_row())
    return path


def write_reports_json(path: Union[str, Path], reports: Iterable[CloneReport]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        json.dump([r.to_dict() for r in reports], f, indent=2, sort_keys=True)
        f.write("\n")
    return path


def read_reports_json(path: Union[str, Path]) -> List[CloneReport]:
    with open(path) as f:
        return [CloneReport(**item) for item in json.load(f)]


def matrix_to_json_dict(matrix: CMatrix, **metadata) -> Dict[str, object]:
    m = np.asarray(matrix, dtype=complex)
    payload = {"shape": list(m.shape), "re": m.real.tolist(), "im": m.imag.tolist()}
    payload.update(metadata)
    return payload


def write_matrix_json(path: Union[str, Path], matrix: CMatrix, **metadata) -> Path:
    """One matrix per file, real and imaginary parts as separate nested lists"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        json.dump(matrix_to_json_dict(matrix, **metadata), f, indent=2, sort_keys=True)
        f.write("\n")
    return path


def read_matrix_json(path: Union[str, Path]) -> CMatrix:
    with open(path) as f:
        payload = json.load(f)
    m = np.asarray(payload["re"], dtype=float) + 1j * np.asarray(payload["im"], dtype=float)
    return m.reshape(payload["shape"])
