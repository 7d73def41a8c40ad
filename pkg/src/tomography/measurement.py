#!/usr/bin/env python3
"""
Tomographic measurement simulation

Pre-rotations I, X/2 = exp(-i pi/4 X) and Y/2 = exp(-i pi/4 Y) followed by
a computational-basis readout with per-qubit assignment fidelities
F0 = P(read 0 | 0) and F1 = P(read 1 | 1). X/2 turns the sigma_y
measurement into sigma_z, Y/2 turns -sigma_x into sigma_z.

Counts are stored per setting as bitstrings with qubit 1 leftmost.
"""

import csv
import itertools
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
import structlog

from numkit.errors import ShapeMismatch, SingularConfusion
from numkit.linalg import PAULI_X, PAULI_Y, PAULI_Z, CMatrix, kron_all, require_density_matrix

logger = structlog.get_logger(__name__)

PRE_ROTATIONS: Dict[str, CMatrix] = {
    "I": np.eye(2, dtype=complex),
    "X/2": np.cos(np.pi / 4) * np.eye(2) - 1j * np.sin(np.pi / 4) * PAULI_X,
    "Y/2": np.cos(np.pi / 4) * np.eye(2) - 1j * np.sin(np.pi / 4) * PAULI_Y,
}

Setting = Tuple[str, ...]


def all_settings(n_qubits: int) -> List[Setting]:
    """Every combination of pre-rotations, 3^n settings"""
    return [tuple(s) for s in itertools.product(PRE_ROTATIONS, repeat=n_qubits)]


def setting_label(setting: Setting) -> str:
    return "-".join(setting)


def parse_setting(label: str) -> Setting:
    parts = tuple(label.split("-"))
    if any(p not in PRE_ROTATIONS for p in parts):
        raise ValueError(f"Unknown setting '{label}'")
    return parts


def bitstrings(n_qubits: int) -> List[str]:
    return ["".join(b) for b in itertools.product("01", repeat=n_qubits)]


def measured_observable(tag: str) -> CMatrix:
    """U^dag Z U for the pre-rotation U named by tag"""
    u = PRE_ROTATIONS[tag]
    return u.conj().T @ PAULI_Z @ u


def exact_probabilities(rho: CMatrix, setting: Setting) -> np.ndarray:
    """Infinite-shot outcome probabilities (perfect readout) in bitstring order"""
    rho = np.asarray(rho, dtype=complex)
    n = len(setting)
    if rho.shape != (2 ** n, 2 ** n):
        raise ShapeMismatch(f"State of shape {rho.shape} does not match {n} qubits")
    u = kron_all(*(PRE_ROTATIONS[tag] for tag in setting))
    p = np.real(np.diag(u @ rho @ u.conj().T))
    p = np.clip(p, 0.0, None)
    return p / p.sum()


def confusion_matrix(f0: float, f1: float) -> np.ndarray:
    """Columns are true states, rows are reported outcomes"""
    return np.array([[f0, 1.0 - f1], [1.0 - f0, f1]])


def _confusion(f0: Sequence[float], f1: Sequence[float]) -> np.ndarray:
    return kron_all(*(confusion_matrix(a, b) for a, b in zip(f0, f1))).real


@dataclass
class MeasurementRecord:
    """Counts of one tomography setting"""
    setting: Setting
    shots: int
    counts: Dict[str, int]
    seed: Optional[int] = None

    @property
    def n_qubits(self) -> int:
        return len(self.setting)

    def frequencies(self) -> np.ndarray:
        keys = bitstrings(self.n_qubits)
        c = np.array([self.counts.get(k, 0) for k in keys], dtype=float)
        return c / max(1, c.sum())

    def to_rows(self) -> List[Dict[str, Union[str, int]]]:
        return [
            {"setting": setting_label(self.setting), "outcome": k, "count": self.counts.get(k, 0),
             "shots": self.shots, "seed": "" if self.seed is None else self.seed}
            for k in bitstrings(self.n_qubits)
        ]


def simulate_counts(
    rho: CMatrix,
    setting: Setting,
    shots: int,
    f0: Optional[Sequence[float]] = None,
    f1: Optional[Sequence[float]] = None,
    seed: Optional[int] = None,
) -> MeasurementRecord:
    """
    Sample counts for one setting, optionally through readout confusion

    Raises:
        NotDensityMatrix: If rho is not a density matrix
        ValueError: If shots is not positive
    """
    if shots < 1:
        raise ValueError(f"shots must be positive, got {shots}")
    rho = require_density_matrix(rho)
    p = exact_probabilities(rho, setting)
    n = len(setting)
    if f0 is not None and f1 is not None:
        p = _confusion(f0[:n], f1[:n]) @ p
        p = np.clip(p, 0.0, None)
        p = p / p.sum()
    rng = np.random.default_rng(seed)
    draws = rng.multinomial(shots, p)
    counts = {k: int(c) for k, c in zip(bitstrings(n), draws)}
    return MeasurementRecord(setting=tuple(setting), shots=shots, counts=counts, seed=seed)


@dataclass
class CorrectedProbabilities:
    """Readout-corrected probabilities and the negative mass clipped away"""
    probabilities: np.ndarray
    clipped_mass: float = 0.0


def readout_correct(probabilities: Sequence[float], f0: Sequence[float], f1: Sequence[float]) -> CorrectedProbabilities:
    """
    Invert per-qubit assignment errors

    Negative entries produced by the inversion are clipped to zero and the
    vector renormalised; the clipped mass is reported.

    Raises:
        SingularConfusion: If F0 + F1 <= 1 for any qubit
    """
    p = np.asarray(probabilities, dtype=float)
    n = int(round(np.log2(p.size)))
    if 2 ** n != p.size:
        raise ShapeMismatch(f"Probability vector of length {p.size} is not 2^n")
    for a, b in zip(f0[:n], f1[:n]):
        if a + b - 1.0 <= 1e-12:
            raise SingularConfusion(f"Confusion matrix singular for F0={a}, F1={b}")
    inverse = kron_all(*(np.linalg.inv(confusion_matrix(a, b)) for a, b in zip(f0[:n], f1[:n]))).real
    q = inverse @ p
    clipped = float(-q[q < 0].sum())
    q = np.clip(q, 0.0, None)
    total = q.sum()
    if total <= 0:
        raise SingularConfusion("Readout correction removed all probability mass")
    return CorrectedProbabilities(q / total, clipped)


def tomography_records(
    rho: CMatrix,
    n_qubits: int,
    shots: int,
    seed: int,
    f0: Optional[Sequence[float]] = None,
    f1: Optional[Sequence[float]] = None,
) -> List[MeasurementRecord]:
    """Records for every setting, setting k seeded from (seed, k)"""
    records = []
    for k, setting in enumerate(all_settings(n_qubits)):
        sub_seed = int(np.random.SeedSequence(seed, spawn_key=(k,)).generate_state(1)[0])
        records.append(simulate_counts(rho, setting, shots, f0, f1, sub_seed))
    return records


def write_records_csv(path: Union[str, Path], records: Iterable[MeasurementRecord]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=["setting", "outcome", "count", "shots", "seed"])
        writer.writeheader()
        for record in records:
            writer.writerows(record.to_rows())
    logger.debug("Counts written", path=str(path))
    return path


def read_records_csv(path: Union[str, Path]) -> List[MeasurementRecord]:
    grouped: Dict[str, MeasurementRecord] = {}
    with open(path, newline="") as f:
        for row in csv.DictReader(f):
            label = row["setting"]
            if label not in grouped:
                seed = int(row["seed"]) if row.get("seed") else None
                grouped[label] = MeasurementRecord(parse_setting(label), int(row["shots"]), {}, seed)
            grouped[label].counts[row["outcome"]] = int(row["count"])
    return list(grouped.values())
