#!/usr/bin/env python3
"""
State and process reconstruction

State tomography: Pauli expectations from the 3^n settings, linear
inversion, then projection onto the nearest physical density matrix.
Process tomography: least-squares chi matrix in the {I, X, Y, Z} basis
from (input, output) pairs, E(rho) = sum_mn chi_mn P_m rho P_n.
"""

import itertools
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import structlog

from numkit.errors import IncompleteSettings, RankDeficient, ShapeMismatch
from numkit.linalg import (
    PAULIS,
    CMatrix,
    hermitize,
    kron_all,
    nearest_density_matrix,
)
from tomography.measurement import (
    MeasurementRecord,
    Setting,
    all_settings,
    bitstrings,
    measured_observable,
    readout_correct,
)

logger = structlog.get_logger(__name__)

PAULI_LABELS = ("I", "X", "Y", "Z")


def _pauli_sign(tag: str, pauli: str) -> float:
    """Coefficient of `pauli` in the observable measured after pre-rotation `tag`"""
    return float(np.real(np.trace(measured_observable(tag) @ PAULIS[pauli])) / 2)


def _tag_for(pauli: str) -> str:
    for tag in ("I", "X/2", "Y/2"):
        if abs(_pauli_sign(tag, pauli)) > 0.5:
            return tag
    raise ValueError(f"No pre-rotation measures {pauli}")


@dataclass
class StateTomographyResult:
    """Raw linear-inversion estimate and its physical projection"""
    raw: CMatrix
    projected: CMatrix
    n_qubits: int
    shots: Optional[int] = None
    clipped_mass: float = 0.0
    expectations: Dict[str, float] = field(default_factory=dict)
    records: List[MeasurementRecord] = field(default_factory=list)


def reconstruct_from_probabilities(probabilities: Mapping[Setting, Sequence[float]],
                                   n_qubits: int) -> StateTomographyResult:
    """
    Linear inversion from per-setting outcome probabilities

    Every Pauli string is estimated from all settings that measure it and
    the estimates averaged.

    Raises:
        IncompleteSettings: If any of the 3^n settings is missing
    """
    missing = [s for s in all_settings(n_qubits) if s not in probabilities]
    if missing:
        raise IncompleteSettings(f"Missing settings: {missing}")
    keys = bitstrings(n_qubits)
    bits = np.array([[int(c) for c in k] for k in keys])  # (2^n, n)
    signs = 1 - 2 * bits  # +1 for outcome 0

    rho = np.zeros((2 ** n_qubits, 2 ** n_qubits), dtype=complex)
    expectations = {}
    for paulis in itertools.product(PAULI_LABELS, repeat=n_qubits):
        label = "".join(paulis)
        active = [j for j, p in enumerate(paulis) if p != "I"]
        if not active:
            value = 1.0
        else:
            tags = {j: _tag_for(paulis[j]) for j in active}
            coeff = np.prod([_pauli_sign(tags[j], paulis[j]) for j in active])
            estimates = []
            for setting, p in probabilities.items():
                if len(setting) != n_qubits or any(setting[j] != tags[j] for j in active):
                    continue
                parity = np.prod(signs[:, active], axis=1)
                estimates.append(coeff * float(np.dot(np.asarray(p, dtype=float), parity)))
            value = float(np.mean(estimates))
        expectations[label] = value
        rho += value * kron_all(*(PAULIS[p] for p in paulis))
    rho /= 2 ** n_qubits
    return StateTomographyResult(raw=rho, projected=nearest_density_matrix(rho), n_qubits=n_qubits,
                                 expectations=expectations)


def reconstruct_state(
    records: Sequence[MeasurementRecord],
    n_qubits: int,
    f0: Optional[Sequence[float]] = None,
    f1: Optional[Sequence[float]] = None,
) -> StateTomographyResult:
    """
    Linear inversion from measured counts, with optional readout correction

    Raises:
        IncompleteSettings: If the records do not cover every setting
        SingularConfusion: If a readout confusion matrix is singular
    """
    probabilities = {}
    clipped = 0.0
    shots = None
    for record in records:
        if record.n_qubits != n_qubits:
            raise ShapeMismatch(f"Record for {record.n_qubits} qubits in a {n_qubits}-qubit reconstruction")
        p = record.frequencies()
        if f0 is not None and f1 is not None:
            corrected = readout_correct(p, f0, f1)
            p = corrected.probabilities
            clipped += corrected.clipped_mass
        probabilities[tuple(record.setting)] = p
        shots = record.shots if shots is None else min(shots, record.shots)
    result = reconstruct_from_probabilities(probabilities, n_qubits)
    result.shots = shots
    result.clipped_mass = clipped
    result.records = list(records)
    logger.debug("State reconstructed", n_qubits=n_qubits, settings=len(records), clipped_mass=clipped)
    return result


def bootstrap_std(
    records: Sequence[MeasurementRecord],
    n_qubits: int,
    statistic: Callable[[CMatrix], float],
    n_resamples: int = 200,
    seed: int = 0,
    f0: Optional[Sequence[float]] = None,
    f1: Optional[Sequence[float]] = None,
) -> float:
    """
    Bootstrap standard deviation of a statistic of the projected state

    Each resample redraws every setting's counts multinomially from its
    observed frequencies with the original shot number.
    """
    rng = np.random.default_rng(seed)
    keys = bitstrings(n_qubits)
    values = []
    for _ in range(n_resamples):
        resampled = []
        for record in records:
            draws = rng.multinomial(record.shots, record.frequencies())
            resampled.append(MeasurementRecord(record.setting, record.shots,
                                               {k: int(c) for k, c in zip(keys, draws)}))
        values.append(statistic(reconstruct_state(resampled, n_qubits, f0, f1).projected))
    return float(np.std(values, ddof=1)) if n_resamples > 1 else 0.0


@dataclass
class ChiMatrix:
    """Process matrix in the {I, X, Y, Z} operator basis"""
    matrix: CMatrix
    labels: Tuple[str, ...] = PAULI_LABELS

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=complex)
        if self.matrix.shape != (4, 4):
            raise ShapeMismatch(f"Single-qubit chi must be 4x4, got {self.matrix.shape}")

    def fidelity(self, other: "ChiMatrix") -> float:
        return process_fidelity(self, other)

    def projected(self) -> "ChiMatrix":
        """Nearest positive semidefinite unit-trace chi"""
        return ChiMatrix(nearest_density_matrix(self.matrix))


def chi_identity() -> ChiMatrix:
    chi = np.zeros((4, 4), dtype=complex)
    chi[0, 0] = 1.0
    return ChiMatrix(chi)


def chi_of_unitary(u: CMatrix) -> ChiMatrix:
    """chi_mn = c_m c_n^* for U = sum_m c_m P_m"""
    u = np.asarray(u, dtype=complex)
    c = np.array([np.trace(PAULIS[p] @ u) / 2 for p in PAULI_LABELS])
    return ChiMatrix(np.outer(c, c.conj()))


def apply_chi(chi: ChiMatrix, rho: CMatrix) -> CMatrix:
    out = np.zeros((2, 2), dtype=complex)
    for m, pm in enumerate(PAULI_LABELS):
        for n, pn in enumerate(PAULI_LABELS):
            out += chi.matrix[m, n] * PAULIS[pm] @ rho @ PAULIS[pn]
    return out


def process_tomography(pairs: Sequence[Tuple[CMatrix, CMatrix]]) -> ChiMatrix:
    """
    Least-squares chi from (input, output) density-matrix pairs

    The result is hermitised and normalised to unit trace.

    Raises:
        RankDeficient: If the inputs do not span the single-qubit operator space
    """
    rows = []
    rhs = []
    basis = [(m, n) for m in range(4) for n in range(4)]
    for rho_in, rho_out in pairs:
        rho_in = np.asarray(rho_in, dtype=complex)
        rho_out = np.asarray(rho_out, dtype=complex)
        if rho_in.shape != (2, 2) or rho_out.shape != (2, 2):
            raise ShapeMismatch("Process tomography expects single-qubit density matrices")
        blocks = [PAULIS[PAULI_LABELS[m]] @ rho_in @ PAULIS[PAULI_LABELS[n]] for m, n in basis]
        rows.append(np.stack([b.reshape(-1) for b in blocks], axis=1))
        rhs.append(rho_out.reshape(-1))
    a = np.concatenate(rows, axis=0)
    b = np.concatenate(rhs)
    rank = np.linalg.matrix_rank(a, tol=1e-9)
    if rank < 16:
        raise RankDeficient(f"Probe set spans rank {rank} < 16")
    x, *_ = np.linalg.lstsq(a, b, rcond=None)
    chi = hermitize(x.reshape(4, 4))
    chi = chi / np.trace(chi).real
    logger.debug("Process reconstructed", probes=len(pairs))
    return ChiMatrix(chi)


def process_fidelity(chi_meas: ChiMatrix, chi_ideal: ChiMatrix) -> float:
    """Re Tr(chi_meas chi_ideal)"""
    return float(np.real(np.trace(chi_meas.matrix @ chi_ideal.matrix)))
