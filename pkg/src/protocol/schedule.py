#!/usr/bin/env python3
"""
Pulse schedules for the cloning experiment

A schedule is an ordered list of stages. Each stage fixes the flux
setpoint of every qubit (absent qubits sit at their idle frequency),
optionally carries resonant XY drive segments and has a role used by the
calibration and phase bookkeeping:

    prepare     X_pi on Q3 with all qubits idle
    swap        Q2-Q3 sqrt(iSWAP) at the working point
    compensate  Q3 detuned to cancel the Bell-state phase
    clone       C_123 and C_23 interaction windows

The Q1 input preparation overlaps the end of the swap window and the
whole compensation window.
"""

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import structlog

from model.device import DeviceParams, to_mhz
from model.hamiltonians import HamiltonianSpec, effective_qubit_hamiltonian
from numkit.errors import ScheduleInvalid
from numkit.linalg import CMatrix, expm_scaled, wrap_phase

logger = structlog.get_logger(__name__)

INPUT_DRIVE = "input"
REFERENCE_DURATIONS = {
    "x_pi": 40.0,
    "sqrt_iswap": 57.7,
    "compensate": 30.0,
    "c123": 40.8,
    "c23": 69.5,
}
INPUT_OVERLAP = 10.0


class StageRole(Enum):
    PREPARE = "prepare"
    SWAP = "swap"
    COMPENSATE = "compensate"
    CLONE = "clone"


@dataclass(frozen=True)
class PulseDrive:
    """
    Rectangular resonant XY segment

    Attributes:
        qubit: 0-based qubit index
        drive_id: Segments sharing an id form one logical pulse; its phase
            reference is the end of the last segment
        angle: Rotation angle of this segment (rad)
        axis: Rotation axis angle in the XY plane (rad)
        input_fraction: If set, angle and axis are taken from the input
            state at run time and this fraction of the angle is applied here
    """
    qubit: int
    drive_id: str
    angle: float = np.pi
    axis: float = 0.0
    input_fraction: Optional[float] = None

    def resolved(self, input_angles: Optional[Tuple[float, float]]) -> Tuple[float, float]:
        """(angle, axis) of this segment for a given input (theta, axis)"""
        if self.input_fraction is None:
            return self.angle, self.axis
        if input_angles is None:
            raise ScheduleInvalid(f"Drive '{self.drive_id}' needs an input state")
        theta, axis = input_angles
        return self.input_fraction * theta, axis


@dataclass(frozen=True)
class PulseStage:
    """One flux configuration held for a fixed duration (ns)"""
    label: str
    duration: float
    setpoints: Dict[int, float] = field(default_factory=dict)
    drives: Tuple[PulseDrive, ...] = ()
    role: StageRole = StageRole.CLONE

    def spec(self, fock: int, crosstalk: bool) -> HamiltonianSpec:
        return HamiltonianSpec(active=(0, 1, 2), frequencies=dict(self.setpoints),
                               fock=fock, crosstalk=crosstalk)


@dataclass(frozen=True)
class PulseSchedule:
    """Ordered stages plus the name of the timing rule that produced them"""
    stages: Tuple[PulseStage, ...]
    timing: str = "custom"

    def __post_init__(self):
        if not self.stages:
            raise ScheduleInvalid("Schedule has no stages")
        for stage in self.stages:
            if not np.isfinite(stage.duration) or stage.duration <= 0:
                raise ScheduleInvalid(f"Stage '{stage.label}' has non-positive duration {stage.duration}")
            for drive in stage.drives:
                if drive.qubit not in (0, 1, 2):
                    raise ScheduleInvalid(f"Drive on unknown qubit {drive.qubit}")

    def start_times(self) -> List[float]:
        return [float(t) for t in np.concatenate([[0.0], np.cumsum([s.duration for s in self.stages])[:-1]])]

    @property
    def total_duration(self) -> float:
        return float(sum(s.duration for s in self.stages))

    def drive_end_times(self) -> Dict[str, float]:
        """Absolute end time of every logical drive"""
        ends = {}
        for start, stage in zip(self.start_times(), self.stages):
            for drive in stage.drives:
                ends[drive.drive_id] = start + stage.duration
        return ends

    def index_of(self, role: StageRole) -> List[int]:
        return [i for i, s in enumerate(self.stages) if s.role is role]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "timing": self.timing,
            "stages": [
                {
                    "label": s.label,
                    "duration_ns": s.duration,
                    "role": s.role.value,
                    "setpoints_rad_per_ns": {str(k): v for k, v in sorted(s.setpoints.items())},
                    "drives": [
                        {
                            "qubit": d.qubit, "drive_id": d.drive_id, "angle": d.angle,
                            "axis": d.axis, "input_fraction": d.input_fraction,
                        }
                        for d in s.drives
                    ],
                }
                for s in self.stages
            ],
        }

    @classmethod
    def from_dict(cls, payload: Dict[str, Any]) -> "PulseSchedule":
        try:
            stages = tuple(
                PulseStage(
                    label=s["label"],
                    duration=float(s["duration_ns"]),
                    setpoints={int(k): float(v) for k, v in s.get("setpoints_rad_per_ns", {}).items()},
                    drives=tuple(PulseDrive(**d) for d in s.get("drives", [])),
                    role=StageRole(s.get("role", "clone")),
                )
                for s in payload["stages"]
            )
        except (KeyError, TypeError, ValueError) as e:
            if isinstance(e, ScheduleInvalid):
                raise
            raise ScheduleInvalid(f"Malformed schedule: {e}")
        return cls(stages, payload.get("timing", "custom"))

    @classmethod
    def reference(cls, device: DeviceParams, crosstalk: bool = True, fock: int = 3) -> "PulseSchedule":
        """Published stage durations with every cloning qubit at the working point"""
        w = device.working_frequency
        stages = _layout(
            device,
            working={0: w, 1: w, 2: w},
            swap=REFERENCE_DURATIONS["sqrt_iswap"],
            c123=REFERENCE_DURATIONS["c123"],
            c23=REFERENCE_DURATIONS["c23"],
        )
        stages = solve_compensation(stages, device, crosstalk, fock)
        return cls(tuple(stages), "reference")

    @classmethod
    def calibrated(cls, device: DeviceParams, crosstalk: bool = True, fock: int = 3) -> "PulseSchedule":
        """Durations and setpoints derived from the exact effective Hamiltonian"""
        working = align_working_points(device, crosstalk, fock)
        swap_stage = PulseStage("probe", 1.0, {1: working[1], 2: working[2]}, role=StageRole.SWAP)
        h_swap = effective_qubit_hamiltonian(swap_stage.spec(fock, crosstalk), device)
        j23 = abs(h_swap[1, 2])
        if j23 == 0:
            raise ScheduleInvalid("Q2-Q3 exchange vanishes at the working point")
        swap = np.pi / (4 * j23)
        if swap <= INPUT_OVERLAP:
            raise ScheduleInvalid(f"sqrt(iSWAP) window {swap:.2f} ns shorter than the input overlap")

        c123_stage = PulseStage("probe", 1.0, dict(working), role=StageRole.CLONE)
        h_c123 = effective_qubit_hamiltonian(c123_stage.spec(fock, crosstalk), device)
        c23_stage = PulseStage("probe", 1.0, {1: working[1], 2: working[2]}, role=StageRole.CLONE)
        h_c23 = effective_qubit_hamiltonian(c23_stage.spec(fock, crosstalk), device)
        c123, c23 = clone_durations(h_c123, h_c23)

        stages = _layout(device, working=working, swap=swap, c123=c123, c23=c23)
        stages = solve_compensation(stages, device, crosstalk, fock)
        logger.info(
            "Calibrated schedule",
            sqrt_iswap_ns=round(swap, 3),
            c123_ns=round(c123, 3),
            c23_ns=round(c23, 3),
            crosstalk=crosstalk,
        )
        return cls(tuple(stages), "calibrated")


def _layout(device: DeviceParams, working: Dict[int, float], swap: float,
            c123: float, c23: float) -> List[PulseStage]:
    overlap = INPUT_OVERLAP
    comp = REFERENCE_DURATIONS["compensate"]
    prep_window = overlap + comp
    pair = {1: working[1], 2: working[2]}
    return [
        PulseStage("x_pi_q3", REFERENCE_DURATIONS["x_pi"], {},
                   (PulseDrive(2, "x_pi_q3", np.pi, 0.0),), StageRole.PREPARE),
        PulseStage("sqrt_iswap", swap - overlap, dict(pair), (), StageRole.SWAP),
        PulseStage("sqrt_iswap_input", overlap, dict(pair),
                   (PulseDrive(0, INPUT_DRIVE, input_fraction=overlap / prep_window),), StageRole.SWAP),
        PulseStage("compensate", comp, {1: working[1], 2: device.qubits[2].idle_frequency},
                   (PulseDrive(0, INPUT_DRIVE, input_fraction=comp / prep_window),), StageRole.COMPENSATE),
        PulseStage("c123", c123, dict(working), (), StageRole.CLONE),
        PulseStage("c23", c23, dict(pair), (), StageRole.CLONE),
    ]


def stage_effective_hamiltonian(stage: PulseStage, device: DeviceParams,
                                crosstalk: bool, fock: int) -> CMatrix:
    return effective_qubit_hamiltonian(stage.spec(fock, crosstalk), device)


def align_working_points(device: DeviceParams, crosstalk: bool, fock: int,
                         iterations: int = 6) -> Dict[int, float]:
    """
    Setpoints putting the three dressed qubit frequencies on top of each other

    Starts from the common working frequency and shifts each qubit by its
    dressed-frequency offset from the mean until the spread is below 1e-9 rad/ns.
    """
    setpoints = {j: device.working_frequency for j in range(3)}
    for _ in range(iterations):
        spec = HamiltonianSpec(active=(0, 1, 2), frequencies=dict(setpoints), fock=fock, crosstalk=crosstalk)
        dressed = np.real(np.diag(effective_qubit_hamiltonian(spec, device)))
        offset = dressed - dressed.mean()
        if float(np.max(np.abs(offset))) < 1e-9:
            break
        setpoints = {j: setpoints[j] - float(offset[j]) for j in range(3)}
    logger.debug("Working points aligned", offsets_mhz=[round(to_mhz(s - device.working_frequency), 4)
                                                          for s in setpoints.values()])
    return setpoints


def clone_durations(h_c123: CMatrix, h_c23: CMatrix) -> Tuple[float, float]:
    """
    C_123 and C_23 windows for a (possibly non-uniform) effective Hamiltonian

    C_123 is reduced to the two-level problem spanned by |100> and |0 psi+>
    and stopped when 2/3 of the population has left |0 psi+>. C_23 is then
    chosen so the exchange phase of psi+ brings the |0 psi+> amplitude back
    in phase with |100>. Diagonal terms are left to the final z-rotations.

    Raises:
        ScheduleInvalid: If the two-level reduction cannot reach 2/3 transfer
    """
    h = h_c123 - np.diag(np.diag(h_c123))
    u = np.array([1, 0, 0], dtype=complex)
    w = np.array([0, 1, 1], dtype=complex) / np.sqrt(2)
    a = np.vdot(u, h @ u).real
    b = np.vdot(w, h @ w).real
    c = abs(np.vdot(u, h @ w))
    rabi = np.sqrt(4 * c * c + (b - a) ** 2)
    target = (2.0 / 3.0) * rabi ** 2 / (4 * c * c) if c > 0 else np.inf
    if target > 1.0:
        raise ScheduleInvalid("C_123 cannot transfer 2/3 of the population at these couplings")
    c123 = 2.0 / rabi * np.arcsin(np.sqrt(target))

    state = expm_scaled(h, c123) @ np.array([0, 1, 1], dtype=complex) / np.sqrt(2)
    amp_u = state[0]
    amp_w = (state[1] + state[2]) / np.sqrt(2)
    lam23 = -h_c23[1, 2].real
    if lam23 <= 0:
        raise ScheduleInvalid("C_23 exchange has the wrong sign for phase cancellation")
    phase = (np.angle(amp_u) - np.angle(amp_w)) % (2 * np.pi)
    c23 = float(phase / lam23)
    if c23 <= 0:
        c23 = 2 * np.pi / lam23
    return float(c123), c23


def solve_compensation(stages: List[PulseStage], device: DeviceParams, crosstalk: bool,
                       fock: int, max_iterations: int = 20, tol: float = 1e-10) -> List[PulseStage]:
    """
    Detune Q3 during the compensation window so Q2-Q3 ends in psi+

    Propagates the single excitation created on Q3 through the swap stages
    with the exact effective Hamiltonian, then adjusts the Q3 setpoint of
    the compensation stage until the Q2 and Q3 amplitudes are in phase.

    Raises:
        ScheduleInvalid: If the layout has no compensation stage or the
            iteration does not converge
    """
    comp_idx = [i for i, s in enumerate(stages) if s.role is StageRole.COMPENSATE]
    if len(comp_idx) != 1:
        raise ScheduleInvalid("Schedule needs exactly one compensation stage")
    ci = comp_idx[0]
    vec = np.array([0, 0, 1], dtype=complex)
    for stage in stages[:ci]:
        if stage.role is StageRole.SWAP:
            vec = expm_scaled(stage_effective_hamiltonian(stage, device, crosstalk, fock), stage.duration) @ vec

    comp = stages[ci]
    freq = comp.setpoints.get(2, device.qubits[2].idle_frequency)
    for iteration in range(max_iterations):
        trial = replace(comp, setpoints={**comp.setpoints, 2: freq})
        out = expm_scaled(stage_effective_hamiltonian(trial, device, crosstalk, fock), comp.duration) @ vec
        residual = wrap_phase(np.angle(out[1]) - np.angle(out[2]))
        if abs(residual) < tol:
            break
        freq -= residual / comp.duration
    else:
        raise ScheduleInvalid("Compensation frequency did not converge")

    logger.debug(
        "Compensation solved",
        q3_offset_mhz=round(to_mhz(freq - device.qubits[2].idle_frequency), 4),
        iterations=iteration + 1,
        swap_population_q2=round(float(abs(out[1]) ** 2), 6),
    )
    stages = list(stages)
    stages[ci] = replace(comp, setpoints={**comp.setpoints, 2: float(freq)})
    return stages


def dynamical_phases(schedule: PulseSchedule, device: DeviceParams, crosstalk: bool,
                     fock: int = 3) -> np.ndarray:
    """Per-stage, per-qubit phases -dressed_detuning * duration, shape (stages, 3)"""
    phases = np.zeros((len(schedule.stages), 3))
    for i, stage in enumerate(schedule.stages):
        dressed = np.real(np.diag(stage_effective_hamiltonian(stage, device, crosstalk, fock)))
        phases[i] = -dressed * stage.duration
    return phases


def compensation_angles(schedule: PulseSchedule, device: DeviceParams, crosstalk: bool,
                        fock: int = 3) -> Tuple[Tuple[float, float, float], float]:
    """
    Numerical z-rotations cancelling the cloning-stage phases, and phi

    Returns:
        (z, phi): z_j = -sum of clone-stage phases of qubit j wrapped to
        (-pi, pi]; phi is the Q1 phase of the last clone stage
    """
    phases = dynamical_phases(schedule, device, crosstalk, fock)
    clone = schedule.index_of(StageRole.CLONE)
    if not clone:
        return (0.0, 0.0, 0.0), 0.0
    z = tuple(wrap_phase(-phases[clone, j].sum()) for j in range(3))
    phi = wrap_phase(phases[clone[-1], 0])
    return z, phi
