#!/usr/bin/env python3
"""
Hamiltonians of the qubit-resonator system

Full Tavis-Cummings-type model (qubits as two-level systems, truncated
resonator) in a frame rotating at a reference frequency, plus the
dispersive effective XY Hamiltonians used at gate level.

Basis convention: qubit 1 is the most significant tensor factor, the
resonator is the last factor, |0> is the ground state.
"""

from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
import structlog

from model.device import DeviceParams
from numkit.errors import ConfigInvalid, ConvergenceFailure, ZeroDetuning
from numkit.linalg import (
    NUMBER,
    SIGMA_MINUS,
    SIGMA_PLUS,
    CMatrix,
    SubsystemShape,
    eigh_sorted,
    embed_operator,
)

logger = structlog.get_logger(__name__)

PAIRS = ((0, 1), (0, 2), (1, 2))


@dataclass(frozen=True)
class HamiltonianSpec:
    """
    Which qubits are simulated and where they sit

    Attributes:
        active: 0-based indices of the qubits included in the Hilbert space
        frequencies: Absolute setpoints (rad/ns) per qubit; missing qubits sit at idle
        fock: Resonator truncation (number of Fock levels)
        crosstalk: Include the residual direct neighbour couplings
        frame: Rotating-frame frequency (rad/ns); defaults to the working point
    """
    active: Tuple[int, ...] = (0, 1, 2)
    frequencies: Dict[int, float] = field(default_factory=dict)
    fock: int = 3
    crosstalk: bool = True
    frame: Optional[float] = None

    def __post_init__(self):
        if not self.active or len(set(self.active)) != len(self.active):
            raise ConfigInvalid(f"Invalid active qubit set {self.active}")
        if any(j not in (0, 1, 2) for j in self.active):
            raise ConfigInvalid(f"Active qubits must be drawn from 0..2, got {self.active}")
        if self.fock < 2:
            raise ConfigInvalid(f"Fock truncation must be at least 2, got {self.fock}")
        object.__setattr__(self, "active", tuple(sorted(self.active)))

    @property
    def shape(self) -> SubsystemShape:
        return SubsystemShape((2,) * len(self.active) + (self.fock,))

    def setpoint(self, qubit: int, device: DeviceParams) -> float:
        return self.frequencies.get(qubit, device.qubits[qubit].idle_frequency)


def resonator_operators(fock: int) -> Tuple[CMatrix, CMatrix]:
    """Annihilation operator and number operator of a truncated oscillator"""
    a = np.diag(np.sqrt(np.arange(1, fock)), k=1).astype(complex)
    return a, a.conj().T @ a


def full_hamiltonian(spec: HamiltonianSpec, device: DeviceParams) -> CMatrix:
    """
    Qubits plus resonator in the frame rotating at spec.frame

    H = (w_r - w_f) a^dag a + sum_j (w_j - w_f) n_j
        + sum_j g_j (a^dag s_j^- + a s_j^+)
        + sum_<jk> lambda_jk (s_j^+ s_k^- + h.c.)   (crosstalk, if enabled)

    Returns:
        Hermitian matrix of dimension 2^n * fock
    """
    shape = spec.shape
    frame = device.working_frequency if spec.frame is None else spec.frame
    r = len(spec.active)
    a, n_r = resonator_operators(spec.fock)
    a_full = embed_operator(a, r, shape)

    h = (device.resonator_frequency - frame) * embed_operator(n_r, r, shape)
    sp = {}
    for site, q in enumerate(spec.active):
        sp[q] = embed_operator(SIGMA_PLUS, site, shape)
        h = h + (spec.setpoint(q, device) - frame) * embed_operator(NUMBER, site, shape)
        coupling = a_full.conj().T @ sp[q].conj().T
        h = h + device.qubits[q].coupling * (coupling + coupling.conj().T)

    if spec.crosstalk:
        for (j, k), lam in device.crosstalk.items():
            if j in sp and k in sp:
                hop = sp[j] @ sp[k].conj().T
                h = h + lam * (hop + hop.conj().T)
    return h


def excitation_number(spec: HamiltonianSpec) -> CMatrix:
    """Total excitation number sum_j n_j + a^dag a (diagonal)"""
    shape = spec.shape
    r = len(spec.active)
    _, n_r = resonator_operators(spec.fock)
    total = embed_operator(n_r, r, shape)
    for site in range(r):
        total = total + embed_operator(NUMBER, site, shape)
    return total


def photon_number(spec: HamiltonianSpec) -> CMatrix:
    _, n_r = resonator_operators(spec.fock)
    return embed_operator(n_r, len(spec.active), spec.shape)


def mediated_coupling(g: float, delta: float) -> float:
    """
    Resonator-mediated exchange g^2 / delta

    Raises:
        ZeroDetuning: If delta is exactly zero
    """
    if delta == 0:
        raise ZeroDetuning("Mediated coupling is undefined at zero detuning")
    if abs(delta) < 5 * abs(g):
        logger.warning(
            "Dispersive condition weakly satisfied",
            g=g, delta=delta, ratio=abs(delta / g) if g else float("inf"),
        )
    return g * g / delta


def pair_couplings(
    device: DeviceParams,
    spec: Optional[HamiltonianSpec] = None,
    uniform: bool = False,
) -> Dict[Tuple[int, int], float]:
    """
    Mediated couplings lambda_jk per qubit pair

    Without a spec the dispersive estimate g_j g_k / delta at the working
    point is returned. With a spec the couplings are read off the exact
    effective Hamiltonian, sign flipped so they are positive for qubits
    below the resonator.
    """
    if spec is not None:
        h_eff = effective_qubit_hamiltonian(spec, device)
        pos = {q: i for i, q in enumerate(spec.active)}
        return {
            (j, k): float(-h_eff[pos[j], pos[k]].real)
            for (j, k) in PAIRS if j in pos and k in pos
        }
    g = device.couplings()
    if uniform:
        g_bar = float(np.mean(g))
        g = (g_bar,) * 3
    delta = device.detuning
    if delta == 0:
        raise ZeroDetuning("Working point coincides with the resonator")
    return {(j, k): g[j] * g[k] / delta for (j, k) in PAIRS}


def exchange_hamiltonian(
    couplings: Dict[Tuple[int, int], float],
    n_qubits: int = 3,
    detunings: Optional[Sequence[float]] = None,
) -> CMatrix:
    """
    XY exchange -sum_<jk> lambda_jk (s_j^+ s_k^- + h.c.) + sum_j d_j n_j

    Args:
        couplings: Positive mediated couplings keyed by 0-based pairs
        n_qubits: Number of qubits in the register
        detunings: Optional diagonal terms per qubit (rad/ns)
    """
    shape = SubsystemShape.qubits(n_qubits)
    h = np.zeros((shape.dim, shape.dim), dtype=complex)
    for (j, k), lam in couplings.items():
        hop = embed_operator(SIGMA_PLUS, j, shape) @ embed_operator(SIGMA_MINUS, k, shape)
        h = h - lam * (hop + hop.conj().T)
    if detunings is not None:
        for j, d in enumerate(detunings):
            h = h + d * embed_operator(NUMBER, j, shape)
    return h


def effective_three_qubit_hamiltonian(lam: float) -> CMatrix:
    """H_e = -lambda sum_{j != k} s_j^+ s_k^- on Q1 Q2 Q3"""
    return exchange_hamiltonian({pair: lam for pair in PAIRS})


def effective_two_qubit_hamiltonian(lam: float) -> CMatrix:
    """H_e' = -lambda (s_2^+ s_3^- + h.c.) on Q2 Q3 only"""
    return exchange_hamiltonian({(0, 1): lam}, n_qubits=2)


def single_excitation_block(spec: HamiltonianSpec, device: DeviceParams) -> Tuple[CMatrix, np.ndarray]:
    """
    Restriction of the full Hamiltonian to the one-excitation sector

    Returns:
        (block, indices) where indices are the full-space basis labels
    """
    h = full_hamiltonian(spec, device)
    n_exc = np.real(np.diag(excitation_number(spec)))
    idx = np.flatnonzero(np.isclose(n_exc, 1.0))
    return h[np.ix_(idx, idx)], idx


def effective_qubit_hamiltonian(spec: HamiltonianSpec, device: DeviceParams) -> CMatrix:
    """
    Qubit-only single-excitation Hamiltonian from exact diagonalisation

    Diagonalises the one-excitation block, keeps the eigenvectors with the
    largest qubit weight, projects them onto the zero-photon qubit states
    and Loewdin-orthonormalises. The diagonal holds the dressed qubit
    detunings from the frame, the off-diagonal the effective exchange
    (negative of the mediated couplings for the dispersive sign used here).

    Returns:
        Hermitian n x n matrix ordered like spec.active
    """
    block, idx = single_excitation_block(spec, device)
    n = len(spec.active)
    shape = spec.shape
    photon = np.real(np.diag(photon_number(spec)))[idx]
    # Row of |0..1_site..0; 0>, one per site; full-space order would list the last qubit first
    qubit_rows = []
    for site in range(n):
        occupied = np.real(np.diag(embed_operator(NUMBER, site, shape)))[idx]
        rows = np.flatnonzero(np.isclose(photon, 0.0) & np.isclose(occupied, 1.0))
        if rows.size != 1:
            raise ConvergenceFailure("Unexpected single-excitation sector layout")
        qubit_rows.append(int(rows[0]))
    qubit_rows = np.array(qubit_rows)

    evals, evecs = eigh_sorted(block)
    weights = np.sum(np.abs(evecs[qubit_rows, :]) ** 2, axis=0)
    chosen = np.sort(np.argsort(-weights, kind="stable")[:n])
    b = evecs[np.ix_(qubit_rows, chosen)]
    overlap = b.conj().T @ b
    s_evals, s_evecs = np.linalg.eigh(overlap)
    if float(s_evals.min()) < 1e-6:
        raise ConvergenceFailure("Qubit-like dressed states are nearly linearly dependent")
    b_orth = b @ (s_evecs * s_evals ** -0.5) @ s_evecs.conj().T
    h_eff = (b_orth * evals[chosen]) @ b_orth.conj().T
    return (h_eff + h_eff.conj().T) / 2


def dispersive_error_bound(g: float, delta: float) -> float:
    """Leading neglected order of the dispersive expansion, 3 (g/delta)^2"""
    if delta == 0:
        raise ZeroDetuning("Dispersive bound is undefined at zero detuning")
    return 3.0 * (g / delta) ** 2
