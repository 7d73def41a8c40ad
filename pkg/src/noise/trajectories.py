#!/usr/bin/env python3
"""
Classical frequency noise and deterministic seeding

Ornstein-Uhlenbeck detuning noise with exact discretisation, per-trajectory
random streams derived from one master seed, the Ramsey calibration of
the noise amplitude, and the NoiseModel shared by the noisy layers.
"""

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple, Union

import numpy as np
import structlog

from model.device import DeviceParams
from numkit.errors import ConfigInvalid, StepTooLarge

logger = structlog.get_logger(__name__)

DEFAULT_CORRELATION_TIME = 1000.0
SeedLike = Union[int, np.random.Generator]


def trajectory_rng(master_seed: int, index: int, stream: int = 0) -> np.random.Generator:
    """Independent generator for trajectory `index` of `stream`"""
    seq = np.random.SeedSequence(master_seed, spawn_key=(int(stream), int(index)))
    return np.random.default_rng(seq)


def _as_rng(seed: SeedLike) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def ou_decay(dt: float, correlation_time: float) -> Tuple[float, float]:
    """Exact OU update coefficients (e^{-dt/T_c}, sqrt(1 - e^{-2 dt/T_c}))"""
    a = np.exp(-dt / correlation_time)
    return float(a), float(np.sqrt(1.0 - a * a))


def ou_trace(
    sigma: float,
    correlation_time: float,
    duration: float,
    dt: float,
    seed: SeedLike,
) -> np.ndarray:
    """
    Stationary OU detuning trace K(t) sampled at t = 0, dt, ..., n dt

    K_{n+1} = K_n e^{-dt/T_c} + sigma sqrt(1 - e^{-2 dt/T_c}) xi_n with
    K_0 drawn from the stationary law N(0, sigma^2).

    Raises:
        StepTooLarge: If dt is not below T_c / 5
    """
    if correlation_time <= 0 or sigma < 0:
        raise ConfigInvalid("OU noise needs T_c > 0 and sigma >= 0")
    if dt >= correlation_time / 5:
        raise StepTooLarge(f"dt={dt} ns must be below T_c/5={correlation_time / 5} ns")
    rng = _as_rng(seed)
    n = int(np.ceil(duration / dt - 1e-12))
    a, b = ou_decay(dt, correlation_time)
    xi = rng.standard_normal(n + 1)
    k = np.empty(n + 1)
    k[0] = sigma * xi[0]
    for i in range(n):
        k[i + 1] = k[i] * a + sigma * b * xi[i + 1]
    return k


def ou_trajectory(
    model: "NoiseModel",
    duration: float,
    dt: float,
    seed: SeedLike,
    qubit: int = 1,
    working: bool = True,
) -> np.ndarray:
    """K(t) of one qubit with the amplitude and correlation time of a NoiseModel"""
    if qubit not in (0, 1, 2):
        raise ConfigInvalid(f"Unknown qubit {qubit}")
    sigma = float(model.sigma((working,) * 3)[qubit])
    return ou_trace(sigma, model.correlation_time, duration, dt, seed)


def unit_ou_paths(times: np.ndarray, correlation_time: float, n_paths: int,
                  rng: np.random.Generator) -> np.ndarray:
    """
    Unit-variance OU paths on an arbitrary increasing time grid

    Returns:
        Array of shape (n_paths, len(times))
    """
    times = np.asarray(times, dtype=float)
    out = np.empty((n_paths, times.size))
    out[:, 0] = rng.standard_normal(n_paths)
    gaps = np.diff(times)
    for i, gap in enumerate(gaps):
        a, b = ou_decay(gap, correlation_time)
        out[:, i + 1] = out[:, i] * a + b * rng.standard_normal(n_paths)
    return out


def ou_ensemble(
    sigma: float,
    correlation_time: float,
    duration: float,
    dt: float,
    n_trajectories: int,
    master_seed: int,
    stream: int = 0,
) -> np.ndarray:
    """Stack of OU traces, trajectory i seeded from (master_seed, stream, i)"""
    return np.stack([
        ou_trace(sigma, correlation_time, duration, dt, trajectory_rng(master_seed, i, stream))
        for i in range(n_trajectories)
    ])


def echo_white_rate(t2se: float, gamma1: float = 0.0) -> float:
    """Pure dephasing left after an echo, max(0, 1/T2SE - gamma1/2)"""
    if t2se <= 0:
        raise ConfigInvalid(f"T2SE must be positive, got {t2se}")
    return max(0.0, 1.0 / t2se - gamma1 / 2.0)


def ramsey_sigma(t2star: float, correlation_time: Optional[float] = None,
                 white_rate: float = 0.0) -> float:
    """
    OU amplitude giving Ramsey coherence e^{-1} at T2*

    For OU noise the Ramsey envelope is exp(-sigma^2 T_c^2 (t/T_c - 1 + e^{-t/T_c})),
    multiplied by exp(-white_rate t) when a white component is present.
    Without T_c the quasi-static limit sqrt(2 (1 - white_rate T2*))/T2* is
    returned. A white component that alone reaches e^{-1} leaves sigma = 0.
    """
    if t2star <= 0:
        raise ConfigInvalid(f"T2* must be positive, got {t2star}")
    if white_rate < 0:
        raise ConfigInvalid(f"White dephasing rate must be nonnegative, got {white_rate}")
    budget = 1.0 - white_rate * t2star
    if budget <= 0:
        return 0.0
    if correlation_time is None or not np.isfinite(correlation_time):
        return float(np.sqrt(2.0 * budget) / t2star)
    x = t2star / correlation_time
    shape = x - 1.0 + np.exp(-x)
    return float(np.sqrt(budget / shape) / correlation_time)


def ramsey_coherence(
    sigma: float,
    correlation_time: float,
    times: Sequence[float],
    n_trajectories: int,
    master_seed: int,
    dt: float = 1.0,
) -> np.ndarray:
    """Trajectory-averaged |<exp(-i int K dt)>| at the requested times"""
    times = np.asarray(times, dtype=float)
    duration = float(times.max())
    traces = ou_ensemble(sigma, correlation_time, duration, dt, n_trajectories, master_seed)
    grid = np.arange(traces.shape[1]) * dt
    increments = 0.5 * (traces[:, 1:] + traces[:, :-1]) * dt
    phase = np.concatenate([np.zeros((n_trajectories, 1)), np.cumsum(increments, axis=1)], axis=1)
    sampled = np.stack([np.interp(times, grid, row) for row in phase])
    return np.abs(np.mean(np.exp(-1j * sampled), axis=0))


@dataclass(frozen=True)
class NoiseModel:
    """
    Decoherence of the three qubits

    Rates are in 1/ns, sigma in rad/ns. Each tuple holds Q1, Q2, Q3.

    Attributes:
        gamma1_idle / gamma1_work: Energy relaxation at idle / working point
        sigma_idle / sigma_work: OU detuning amplitudes
        gamma_phi_idle / gamma_phi_work: Markovian pure dephasing rates (markov mode)
        gamma_white_idle / gamma_white_work: Echo-limited white dephasing added
            to the OU trajectories
        correlation_time: OU correlation time (ns)
        n_trajectories: Ensemble size for the OU mode
        seed: Master seed of the ensemble
        dephasing: "ou" (classical trajectories) or "markov" (Lindblad)
        step: Propagation step for trajectories (ns)
    """
    gamma1_idle: Tuple[float, float, float]
    gamma1_work: Tuple[float, float, float]
    sigma_idle: Tuple[float, float, float]
    sigma_work: Tuple[float, float, float]
    gamma_phi_idle: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    gamma_phi_work: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    gamma_white_idle: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    gamma_white_work: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    correlation_time: float = DEFAULT_CORRELATION_TIME
    n_trajectories: int = 1000
    seed: int = 0
    dephasing: str = "ou"
    step: float = 0.5

    def __post_init__(self):
        if self.dephasing not in ("ou", "markov"):
            raise ConfigInvalid(f"Unknown dephasing mode '{self.dephasing}'")
        if self.n_trajectories < 1:
            raise ConfigInvalid("At least one trajectory is required")
        if self.correlation_time <= 0 or self.step <= 0:
            raise ConfigInvalid("Correlation time and step must be positive")
        if self.dephasing == "ou" and self.step >= self.correlation_time / 5:
            raise StepTooLarge(f"Trajectory step {self.step} ns must be below T_c/5")
        for name in ("gamma1_idle", "gamma1_work", "sigma_idle", "sigma_work",
                     "gamma_phi_idle", "gamma_phi_work", "gamma_white_idle", "gamma_white_work"):
            values = getattr(self, name)
            if len(values) != 3 or any(v < 0 for v in values):
                raise ConfigInvalid(f"{name} needs three nonnegative values")

    @classmethod
    def from_device(
        cls,
        device: DeviceParams,
        correlation_time: float = DEFAULT_CORRELATION_TIME,
        n_trajectories: int = 1000,
        seed: int = 0,
        dephasing: str = "ou",
        step: float = 0.5,
        t1: bool = True,
    ) -> "NoiseModel":
        """
        Rates from T1, T2* and T2SE (idle and working values) of the device

        OU mode splits the dephasing in two: a white part taken from the
        echo time, which survives refocusing, and a slow OU part whose
        amplitude makes the combined Ramsey decay, T1 included, reach e^{-1}
        at T2*.
        Markov mode puts all of 1/T2* into one Lindblad rate.
        """
        def per_qubit(fn):
            return tuple(float(fn(q)) for q in device.qubits)

        g1_idle = per_qubit(lambda q: 1.0 / q.t1_idle) if t1 else (0.0,) * 3
        g1_work = per_qubit(lambda q: 1.0 / q.t1_work) if t1 else (0.0,) * 3
        white_idle = tuple(echo_white_rate(q.t2se_idle, g) for q, g in zip(device.qubits, g1_idle))
        white_work = tuple(echo_white_rate(q.t2se_work, g) for q, g in zip(device.qubits, g1_work))
        return cls(
            gamma1_idle=g1_idle,
            gamma1_work=g1_work,
            sigma_idle=tuple(ramsey_sigma(q.t2star_idle, correlation_time, w + g / 2)
                             for q, w, g in zip(device.qubits, white_idle, g1_idle)),
            sigma_work=tuple(ramsey_sigma(q.t2star_work, correlation_time, w + g / 2)
                             for q, w, g in zip(device.qubits, white_work, g1_work)),
            gamma_phi_idle=tuple(max(0.0, 1.0 / q.t2star_idle - g / 2) for q, g in zip(device.qubits, g1_idle)),
            gamma_phi_work=tuple(max(0.0, 1.0 / q.t2star_work - g / 2) for q, g in zip(device.qubits, g1_work)),
            gamma_white_idle=white_idle,
            gamma_white_work=white_work,
            correlation_time=correlation_time,
            n_trajectories=n_trajectories,
            seed=seed,
            dephasing=dephasing,
            step=step,
        )

    def gamma1(self, working: Sequence[bool]) -> np.ndarray:
        return np.array([self.gamma1_work[j] if w else self.gamma1_idle[j] for j, w in enumerate(working)])

    def sigma(self, working: Sequence[bool]) -> np.ndarray:
        return np.array([self.sigma_work[j] if w else self.sigma_idle[j] for j, w in enumerate(working)])

    def gamma_phi(self, working: Sequence[bool]) -> np.ndarray:
        return np.array([self.gamma_phi_work[j] if w else self.gamma_phi_idle[j] for j, w in enumerate(working)])

    def gamma_white(self, working: Sequence[bool]) -> np.ndarray:
        return np.array([self.gamma_white_work[j] if w else self.gamma_white_idle[j] for j, w in enumerate(working)])
