#!/usr/bin/env python3
"""
Noisy protocol layer

Qubit-only (8-dimensional) timeline of the experiment in the interaction
frame of the dressed qubits: exchange stages with the gate-level
couplings, XY rotations applied as ideal instantaneous unitaries at the
middle of their drive window, energy relaxation with working-point or
idle T1 per stage, and frequency noise either as classical OU
trajectories on top of echo-limited white dephasing (default) or as
Markovian pure dephasing.
"""

import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
import structlog

from batch.ensemble import EnsembleRunner
from model.hamiltonians import exchange_hamiltonian
from noise.lindblad import lindblad_evolve, qubit_collapse_ops
from noise.trajectories import NoiseModel, trajectory_rng, unit_ou_paths
from numkit.linalg import (
    NUMBER,
    PAULI_I,
    PAULI_X,
    PAULI_Y,
    SIGMA_MINUS,
    CMatrix,
    SubsystemShape,
    embed_operator,
    expm_scaled_batch,
    hermitize,
    kron_all,
)
from protocol.states import InputState, QuantumState
from protocol.uqcm import QUBIT_LABELS, ProtocolParams, three_qubit_exchange, z_phase

logger = structlog.get_logger(__name__)

SHAPE = SubsystemShape.qubits(3)
PREP_DURATION = 40.0
COMPENSATION_DURATION = 30.0
INPUT_OVERLAP = 10.0
OU_STREAM = 11


@dataclass(frozen=True)
class NoisySegment:
    """Constant Hamiltonian held for a duration, then an optional instantaneous unitary"""
    label: str
    duration: float
    hamiltonian: CMatrix
    working: Tuple[bool, bool, bool]
    after: Optional[CMatrix] = None


@dataclass
class NoisyRunResult:
    input: InputState
    qubits: QuantumState
    n_trajectories: int
    dephasing: str
    duration: float


def xy_rotation(angle: float, axis: float) -> CMatrix:
    """exp(-i angle/2 (cos axis X + sin axis Y))"""
    gen = np.cos(axis) * PAULI_X + np.sin(axis) * PAULI_Y
    return np.cos(angle / 2) * PAULI_I - 1j * np.sin(angle / 2) * gen


def _on(op: CMatrix, qubit: int) -> CMatrix:
    return embed_operator(op, qubit, SHAPE)


def noisy_timeline(state: InputState, params: ProtocolParams) -> List[NoisySegment]:
    """
    Segments of the noisy protocol for one input

    X_pi on Q3 at the middle of its 40 ns window; sqrt(iSWAP) for
    pi / 4 lambda_23 with Q2 and Q3 at the working point; the Q1 input
    rotation at the middle of the window made of the last 10 ns of the swap
    and the 30 ns compensation; the Q3 phase compensation at the end of
    that window; then C_123 and C_23 with the final phases.
    """
    zero = np.zeros((SHAPE.dim, SHAPE.dim), dtype=complex)
    lam23 = params.lambda_for((1, 2))
    swap_h = exchange_hamiltonian({(1, 2): lam23})
    swap_time = params.sqrt_iswap_time
    theta, axis = state.drive_angles()
    input_offset = (INPUT_OVERLAP + COMPENSATION_DURATION) / 2 - INPUT_OVERLAP
    final = kron_all(*(z_phase(z) for z in params.z_rotations)) @ _on(z_phase(params.phi), 0)

    return [
        NoisySegment("x_pi_q3_a", PREP_DURATION / 2, zero, (False, False, False), _on(PAULI_X, 2)),
        NoisySegment("x_pi_q3_b", PREP_DURATION / 2, zero, (False, False, False)),
        NoisySegment("sqrt_iswap", swap_time, swap_h, (False, True, True), _on(z_phase(params.theta_d), 1)),
        NoisySegment("compensate_a", input_offset, zero, (False, True, False),
                     _on(xy_rotation(theta, axis), 0)),
        NoisySegment("compensate_b", COMPENSATION_DURATION - input_offset, zero, (False, True, False),
                     _on(z_phase(np.pi / 2 + params.theta_d), 2)),
        NoisySegment("c123", params.tau, three_qubit_exchange(params), (True, True, True)),
        NoisySegment("c23", params.tau_prime, swap_h, (False, True, True), final),
    ]


def _damping_kraus(gamma1: np.ndarray, dt: float) -> List[Tuple[CMatrix, CMatrix]]:
    kraus = []
    for j, g in enumerate(gamma1):
        if g <= 0:
            continue
        p = 1.0 - np.exp(-g * dt)
        k0 = np.diag([1.0, np.sqrt(1.0 - p)]).astype(complex)
        kraus.append((_on(k0, j), _on(np.sqrt(p) * SIGMA_MINUS, j)))
    return kraus


def _segment_grid(segments: List[NoisySegment], step: float) -> List[Tuple[int, float, np.ndarray]]:
    """(n_steps, dt, absolute midpoints) per segment"""
    grid = []
    t0 = 0.0
    for seg in segments:
        n = max(1, math.ceil(seg.duration / step - 1e-9)) if seg.duration > 0 else 0
        dt = seg.duration / n if n else 0.0
        grid.append((n, dt, t0 + (np.arange(n) + 0.5) * dt))
        t0 += seg.duration
    return grid


def _trajectory_chunk(start: int, stop: int, rho0: CMatrix, segments: List[NoisySegment],
                      noise: NoiseModel) -> np.ndarray:
    grid = _segment_grid(segments, noise.step)
    mids = np.concatenate([g[2] for g in grid])
    paths = np.stack([
        unit_ou_paths(mids, noise.correlation_time, 3, trajectory_rng(noise.seed, i, OU_STREAM))
        for i in range(start, stop)
    ])  # (n, 3, total_steps)
    numbers = np.stack([_on(NUMBER, j) for j in range(3)])
    diag_numbers = np.real(np.stack([np.diag(n) for n in numbers]))  # (3, 8)
    flips = np.abs(diag_numbers[:, :, None] - diag_numbers[:, None, :])  # (3, 8, 8)

    rho = np.tile(rho0, (stop - start, 1, 1))
    offset = 0
    for seg, (n_steps, dt, _) in zip(segments, grid):
        sigma = noise.sigma(seg.working)
        kraus = _damping_kraus(noise.gamma1(seg.working), dt) if n_steps else []
        # white dephasing: coherence between a and b decays at sum_j gamma_j |n_j(a) - n_j(b)|
        mask = np.exp(-dt * np.einsum("j,jab->ab", noise.gamma_white(seg.working), flips))
        for k in range(n_steps):
            detuning = sigma[None, :] * paths[:, :, offset + k]  # (n, 3)
            shifts = detuning @ diag_numbers  # (n, 8)
            h = seg.hamiltonian[None, :, :] + np.einsum("ni,ij->nij", shifts, np.eye(SHAPE.dim))
            u = expm_scaled_batch(h, dt)
            rho = u @ rho @ np.conj(np.swapaxes(u, -1, -2))
            rho = rho * mask
            for k0, k1 in kraus:
                rho = k0 @ rho @ k0.conj().T + k1 @ rho @ k1.conj().T
        offset += n_steps
        if seg.after is not None:
            rho = seg.after @ rho @ seg.after.conj().T
    return rho


def _markov_run(rho: CMatrix, segments: List[NoisySegment], noise: NoiseModel) -> CMatrix:
    for seg in segments:
        if seg.duration > 0:
            ops = qubit_collapse_ops(3, noise.gamma1(seg.working), noise.gamma_phi(seg.working))
            rho = lindblad_evolve(rho, seg.hamiltonian, ops, seg.duration)
        if seg.after is not None:
            rho = seg.after @ rho @ seg.after.conj().T
    return rho


def run_noisy_uqcm(
    state: InputState,
    params: ProtocolParams,
    noise: NoiseModel,
    runner: Optional[EnsembleRunner] = None,
) -> NoisyRunResult:
    """
    Protocol under T1 and frequency noise

    Args:
        state: Q1 input
        params: Gate-level timings and couplings
        noise: Rates, OU parameters, ensemble size and seed
        runner: Chunked parallel runner for the OU ensemble

    Returns:
        Trajectory-averaged (or master-equation) three-qubit density matrix
    """
    segments = noisy_timeline(state, params)
    rho0 = np.zeros((SHAPE.dim, SHAPE.dim), dtype=complex)
    rho0[0, 0] = 1.0
    duration = float(sum(s.duration for s in segments))

    if noise.dephasing == "markov":
        rho = _markov_run(rho0, segments, noise)
        n_traj = 1
    else:
        runner = runner or EnsembleRunner()
        stack = runner.run_stacked(
            noise.n_trajectories,
            lambda a, b: _trajectory_chunk(a, b, rho0, segments, noise),
            label=f"noisy:{state.label}",
        )
        rho = np.mean(stack, axis=0)
        n_traj = noise.n_trajectories

    rho = hermitize(rho)
    rho = rho / np.trace(rho).real
    logger.info("Noisy run finished", input=state.label, dephasing=noise.dephasing,
                trajectories=n_traj, duration_ns=round(duration, 3))
    return NoisyRunResult(
        input=state,
        qubits=QuantumState(rho, SHAPE, QUBIT_LABELS),
        n_trajectories=n_traj,
        dephasing=noise.dephasing,
        duration=duration,
    )
