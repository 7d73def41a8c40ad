#!/usr/bin/env python3
"""
Universal quantum cloning machine runners

Gate level: ideal Bell preparation, evolution under the effective
three-qubit XY Hamiltonian for tau = 2 pi / 9 lambda, then Q2-Q3 alone
for tau' = pi / 3 lambda.

Pulse level: the full qubit-resonator Hamiltonian driven through a
PulseSchedule, followed by numerical z-rotations on the reduced
three-qubit state.
"""

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
import structlog

from model.device import DeviceParams, ghz, mhz
from model.hamiltonians import (
    PAIRS,
    HamiltonianSpec,
    effective_two_qubit_hamiltonian,
    exchange_hamiltonian,
    excitation_number,
    full_hamiltonian,
    mediated_coupling,
    photon_number,
)
from numkit.errors import ConfigInvalid, NumericalFailure
from numkit.linalg import (
    SIGMA_PLUS,
    CMatrix,
    SubsystemShape,
    eigh_sorted,
    embed_operator,
    expm_scaled,
    global_phase_aligned,
    kron,
    kron_all,
    require_density_matrix,
)
from protocol.schedule import PulseSchedule, compensation_angles, dynamical_phases
from protocol.states import InputState, QuantumState, bell_state

logger = structlog.get_logger(__name__)

NOMINAL_COUPLING = mhz(20.0)
NOMINAL_DETUNING = ghz(5.588) - ghz(5.44)
QUBIT_LABELS = ("Q1", "Q2", "Q3")


@dataclass(frozen=True)
class ProtocolParams:
    """
    Gate-level protocol parameters

    Attributes:
        lam: Mediated coupling lambda (rad/ns)
        tau: C_123 interaction time (ns)
        tau_prime: C_23 interaction time (ns)
        phi: Q1 phase picked up during C_23 (rad)
        theta_d: Dynamical phase of the Bell preparation before compensation (rad)
        z_rotations: Final numerical z-rotation angles for Q1, Q2, Q3 (rad)
        pair_lambdas: Optional per-pair overrides of lam keyed by 0-based pairs
    """
    lam: float
    tau: float
    tau_prime: float
    phi: float = 0.0
    theta_d: float = 0.0
    z_rotations: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    pair_lambdas: Dict[Tuple[int, int], float] = field(default_factory=dict)

    def __post_init__(self):
        if not self.lam > 0:
            raise ConfigInvalid(f"lambda must be positive, got {self.lam}")
        if self.tau < 0 or self.tau_prime < 0:
            raise ConfigInvalid("Interaction times must be nonnegative")
        if len(self.z_rotations) != 3:
            raise ConfigInvalid("z_rotations needs one angle per qubit")
        for pair in self.pair_lambdas:
            if pair not in PAIRS:
                raise ConfigInvalid(f"Unknown qubit pair {pair}")

    @classmethod
    def ideal(cls, lam: float, phi: float = 0.0, **kwargs) -> "ProtocolParams":
        """tau = 2 pi / 9 lambda and tau' = pi / 3 lambda"""
        return cls(lam=lam, tau=2 * np.pi / (9 * lam), tau_prime=np.pi / (3 * lam), phi=phi, **kwargs)

    @classmethod
    def default(cls) -> "ProtocolParams":
        return cls.ideal(mediated_coupling(NOMINAL_COUPLING, NOMINAL_DETUNING))

    @classmethod
    def from_device(cls, device: DeviceParams, g: Optional[float] = None) -> "ProtocolParams":
        """Ideal timings for lambda = g^2 / delta; g defaults to the mean device coupling"""
        g = float(np.mean(device.couplings())) if g is None else g
        return cls.ideal(mediated_coupling(g, device.detuning))

    def lambda_for(self, pair: Tuple[int, int]) -> float:
        return self.pair_lambdas.get(pair, self.lam)

    @property
    def sqrt_iswap_time(self) -> float:
        return np.pi / (4 * self.lambda_for((1, 2)))


@dataclass
class IdealRunResult:
    """States of the gate-level protocol at each checkpoint"""
    input: InputState
    after_bell: QuantumState
    after_c123: QuantumState
    after_c23: QuantumState
    final: QuantumState
    params: ProtocolParams


def three_qubit_exchange(params: ProtocolParams) -> CMatrix:
    """H_e with per-pair couplings"""
    return exchange_hamiltonian({pair: params.lambda_for(pair) for pair in PAIRS})


def sqrt_iswap(lam: float) -> CMatrix:
    """exp(-i H_e' t) at t = pi / 4 lambda on Q2 Q3"""
    return expm_scaled(effective_two_qubit_hamiltonian(lam), np.pi / (4 * lam))


def z_phase(angle: float) -> CMatrix:
    """diag(1, e^{i angle})"""
    return np.diag([1.0, np.exp(1j * angle)]).astype(complex)


def bell_prep_ideal(theta_d: float = 0.0, compensate: bool = True, lam: float = 1.0) -> QuantumState:
    """
    Q2-Q3 Bell preparation: X_pi on Q3, sqrt(iSWAP), then R^z on Q3

    theta_d models the dynamical phase Q2 picks up while tuned. With
    compensation the rotation angle pi/2 + theta_d restores psi+ exactly;
    without it the state is (e^{i(pi/2 + theta_d)}|10> + |01>)/sqrt(2).
    The global phase is fixed so the |01> amplitude is real and positive.
    """
    psi = np.array([0, 1, 0, 0], dtype=complex)
    psi = sqrt_iswap(lam) @ psi
    psi = kron(z_phase(theta_d), np.eye(2)) @ psi
    if compensate:
        psi = kron(np.eye(2), z_phase(np.pi / 2 + theta_d)) @ psi
    return QuantumState(psi * (abs(psi[1]) / psi[1]), SubsystemShape.qubits(2), ("Q2", "Q3"))


def closed_form_after_c123(state: InputState) -> np.ndarray:
    """alpha[sqrt(2/3)|100> + sqrt(1/3)e^{-i pi/3}|0 psi+>] + beta[sqrt(2/3)|011> + sqrt(1/3)e^{-i pi/3}|1 psi+>]"""
    e0, e1 = np.array([1, 0], dtype=complex), np.array([0, 1], dtype=complex)
    psi_plus = bell_state("psi+")
    w = np.sqrt(1 / 3) * np.exp(-1j * np.pi / 3)
    branch0 = np.sqrt(2 / 3) * kron_all(e1, e0, e0) + w * kron(e0, psi_plus)
    branch1 = np.sqrt(2 / 3) * kron_all(e0, e1, e1) + w * kron(e1, psi_plus)
    return state.alpha * branch0 + state.beta * branch1


def closed_form_output(state: InputState, phi: float = 0.0) -> np.ndarray:
    """alpha[sqrt(2/3)e^{i phi}|100> + sqrt(1/3)|0 psi+>] + beta[sqrt(2/3)|011> + sqrt(1/3)e^{i phi}|1 psi+>]"""
    e0, e1 = np.array([1, 0], dtype=complex), np.array([0, 1], dtype=complex)
    psi_plus = bell_state("psi+")
    ph = np.exp(1j * phi)
    branch0 = np.sqrt(2 / 3) * ph * kron_all(e1, e0, e0) + np.sqrt(1 / 3) * kron(e0, psi_plus)
    branch1 = np.sqrt(2 / 3) * kron_all(e0, e1, e1) + np.sqrt(1 / 3) * ph * kron(e1, psi_plus)
    return state.alpha * branch0 + state.beta * branch1


def checkpoint_error(actual: np.ndarray, expected: np.ndarray) -> float:
    """Max amplitude deviation after removing one global phase"""
    return float(np.max(np.abs(global_phase_aligned(actual, expected) - expected)))


def clone_channel_ideal(rho: CMatrix) -> CMatrix:
    """
    Optimal symmetric 1 -> 2 cloning channel (2/3) rho + (1/3) I/2

    Raises:
        NotDensityMatrix: If rho is not a valid density matrix
    """
    rho = require_density_matrix(rho)
    return (2.0 / 3.0) * rho + np.trace(rho) * np.eye(2) / 6.0


def _qubit_state(vec: np.ndarray) -> QuantumState:
    return QuantumState(vec, SubsystemShape.qubits(3), QUBIT_LABELS)


def run_ideal_uqcm(state: InputState, params: ProtocolParams) -> IdealRunResult:
    """
    Gate-level protocol

    Sequence: input x psi+, exp(-i H_e tau), exp(-i H_e' tau') on Q2 Q3
    with the Q1 phase phi, final z-rotations.
    """
    bell = bell_prep_ideal(params.theta_d, lam=params.lambda_for((1, 2)))
    psi = kron(state.vector, bell.data)
    after_bell = psi

    psi = expm_scaled(three_qubit_exchange(params), params.tau) @ psi
    after_c123 = psi

    lam23 = params.lambda_for((1, 2))
    u23 = expm_scaled(effective_two_qubit_hamiltonian(lam23), params.tau_prime)
    psi = kron(z_phase(params.phi), u23) @ psi
    after_c23 = psi

    psi = kron_all(*(z_phase(z) for z in params.z_rotations)) @ psi
    logger.debug("Gate-level run", input=state.label, tau=params.tau, tau_prime=params.tau_prime)
    return IdealRunResult(
        input=state,
        after_bell=_qubit_state(after_bell),
        after_c123=_qubit_state(after_c123),
        after_c23=_qubit_state(after_c23),
        final=_qubit_state(psi),
        params=params,
    )


@dataclass
class StageDiagnostics:
    """Per-stage numbers reported by the pulse-level runner"""
    label: str
    role: str
    start: float
    duration: float
    resonator_excitation: float
    photon_population: float
    norm_error: float
    phases: Tuple[float, float, float]

    def to_dict(self) -> Dict[str, object]:
        return {
            "label": self.label, "role": self.role, "start_ns": self.start,
            "duration_ns": self.duration, "resonator_excitation": self.resonator_excitation,
            "photon_population": self.photon_population, "norm_error": self.norm_error,
            "phases": list(self.phases),
        }


@dataclass
class PulseRunResult:
    """Outcome of a pulse-level run"""
    input: InputState
    joint: QuantumState
    qubits: QuantumState
    stages: List[StageDiagnostics]
    z_rotations: Tuple[float, float, float]
    phi: float
    timing: str

    @property
    def max_resonator_excitation(self) -> float:
        return max(s.resonator_excitation for s in self.stages)


def resonator_excitation(h: CMatrix, psi: np.ndarray, spec: HamiltonianSpec) -> float:
    """Weight of psi on eigenstates of h whose mean photon number is at least 1/2"""
    _, vecs = eigh_sorted(h)
    photons = np.real(np.diag(photon_number(spec)))
    mean_photons = photons @ (np.abs(vecs) ** 2)
    resonator_like = mean_photons >= 0.5
    return float(np.sum(np.abs(vecs[:, resonator_like].conj().T @ psi) ** 2))


def run_pulse_uqcm(
    state: InputState,
    schedule: PulseSchedule,
    device: DeviceParams,
    crosstalk: bool = True,
    fock: int = 3,
    drive_dt: float = 0.05,
    apply_z: bool = True,
) -> PulseRunResult:
    """
    Pulse-level protocol on qubits plus resonator

    Stages without drives are propagated exactly; driven stages are sliced
    into piecewise-constant steps of at most drive_dt. Drives are resonant
    with the dressed qubit frequency and phase-referenced to the end of
    their logical pulse.

    Args:
        state: Q1 input
        schedule: Stage layout (e.g. PulseSchedule.calibrated(device))
        device: Device parameters
        crosstalk: Include residual direct couplings
        fock: Resonator truncation
        drive_dt: Maximum drive slice (ns)
        apply_z: Apply the numerical z-rotations to the reduced state

    Raises:
        NumericalFailure: If the norm drifts beyond 1e-9
    """
    shape = SubsystemShape((2, 2, 2, fock))
    psi = np.zeros(shape.dim, dtype=complex)
    psi[0] = 1.0
    input_angles = state.drive_angles()
    drive_ends = schedule.drive_end_times()
    raising = {q: embed_operator(SIGMA_PLUS, q, shape) for q in range(3)}
    phases = dynamical_phases(schedule, device, crosstalk, fock)

    diagnostics = []
    for i, (start, stage) in enumerate(zip(schedule.start_times(), schedule.stages)):
        spec = stage.spec(fock, crosstalk)
        h0 = full_hamiltonian(spec, device)
        if not stage.drives:
            psi = expm_scaled(h0, stage.duration) @ psi
        else:
            dressed = -phases[i] / stage.duration
            n_slices = max(1, math.ceil(stage.duration / drive_dt - 1e-9))
            dt = stage.duration / n_slices
            for k in range(n_slices):
                t_mid = start + (k + 0.5) * dt
                h = h0.copy()
                for drive in stage.drives:
                    angle, axis = drive.resolved(input_angles)
                    omega = angle / stage.duration
                    phase = axis - dressed[drive.qubit] * (t_mid - drive_ends[drive.drive_id])
                    term = 0.5 * omega * np.exp(1j * phase) * raising[drive.qubit]
                    h = h + term + term.conj().T
                psi = expm_scaled(h, dt) @ psi

        norm_error = abs(float(np.vdot(psi, psi).real) - 1.0)
        if norm_error > 1e-9:
            raise NumericalFailure(f"Norm drift {norm_error:.2e} after stage '{stage.label}'")
        diag = StageDiagnostics(
            label=stage.label,
            role=stage.role.value,
            start=start,
            duration=stage.duration,
            resonator_excitation=resonator_excitation(h0, psi, spec),
            photon_population=float(np.real(np.vdot(psi, photon_number(spec) @ psi))),
            norm_error=norm_error,
            phases=tuple(float(p) for p in phases[i]),
        )
        diagnostics.append(diag)
        logger.debug("Stage evolved", stage=stage.label, duration_ns=stage.duration,
                     resonator_excitation=diag.resonator_excitation)

    joint = QuantumState(psi, shape, QUBIT_LABELS + ("R",))
    rho = joint.reduced([0, 1, 2]).data
    z, phi = compensation_angles(schedule, device, crosstalk, fock)
    if apply_z:
        zmat = kron_all(*(z_phase(a) for a in z))
        rho = zmat @ rho @ zmat.conj().T
    return PulseRunResult(
        input=state,
        joint=joint,
        qubits=QuantumState(rho, SubsystemShape.qubits(3), QUBIT_LABELS),
        stages=diagnostics,
        z_rotations=z if apply_z else (0.0, 0.0, 0.0),
        phi=phi,
        timing=schedule.timing,
    )


def excitation_conserved(spec: HamiltonianSpec, device: DeviceParams) -> float:
    """Norm of [H, N] for the undriven Hamiltonian"""
    h = full_hamiltonian(spec, device)
    n = excitation_number(spec)
    return float(np.max(np.abs(h @ n - n @ h)))
