#!/usr/bin/env python3
"""
Device parameters for the three-qubit, one-resonator processor

Values are stored internally in angular units (rad/ns for frequencies and
couplings, ns for times). Constructors accept laboratory units
(GHz, MHz, us) and convert once.
"""

from dataclasses import dataclass, field, replace
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
import structlog

from numkit.errors import ConfigInvalid

logger = structlog.get_logger(__name__)

TWO_PI = 2.0 * np.pi


def ghz(value: float) -> float:
    """GHz to rad/ns"""
    return TWO_PI * value


def mhz(value: float) -> float:
    """MHz to rad/ns"""
    return TWO_PI * value * 1e-3


def to_mhz(value: float) -> float:
    """rad/ns to MHz"""
    return value / TWO_PI * 1e3


def to_ghz(value: float) -> float:
    return value / TWO_PI


def microseconds(value: float) -> float:
    return value * 1e3


@dataclass(frozen=True)
class QubitParams:
    """Per-qubit frequencies, couplings, coherence and readout figures"""
    idle_frequency: float
    coupling: float
    t1_idle: float
    t1_work: float
    t2star_idle: float
    t2star_work: float
    t2se_idle: float
    t2se_work: float
    readout_f0: float
    readout_f1: float
    readout_leak_time: float = 0.0

    def __post_init__(self):
        if self.idle_frequency <= 0:
            raise ConfigInvalid(f"Qubit frequency must be positive, got {self.idle_frequency}")
        if self.coupling < 0:
            raise ConfigInvalid(f"Coupling must be nonnegative, got {self.coupling}")
        for name in ("t1_idle", "t1_work", "t2star_idle", "t2star_work", "t2se_idle", "t2se_work"):
            if getattr(self, name) <= 0:
                raise ConfigInvalid(f"{name} must be positive, got {getattr(self, name)}")
        for name in ("readout_f0", "readout_f1"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ConfigInvalid(f"{name} must lie in [0, 1], got {getattr(self, name)}")


@dataclass(frozen=True)
class DeviceParams:
    """
    Static description of the device

    Attributes:
        qubits: Parameters of Q1, Q2, Q3 in that order
        resonator_frequency: Bus resonator frequency (rad/ns)
        working_frequency: Common working point of the cloning stages (rad/ns)
        crosstalk: Residual direct couplings between neighbours, keyed by
            0-based qubit pairs (rad/ns)
    """
    qubits: Tuple[QubitParams, ...]
    resonator_frequency: float
    working_frequency: float
    crosstalk: Dict[Tuple[int, int], float] = field(default_factory=dict)

    def __post_init__(self):
        if len(self.qubits) != 3:
            raise ConfigInvalid(f"Expected three qubits, got {len(self.qubits)}")
        if self.resonator_frequency <= 0 or self.working_frequency <= 0:
            raise ConfigInvalid("Resonator and working frequencies must be positive")
        for (j, k) in self.crosstalk:
            if not (0 <= j < 3 and 0 <= k < 3 and j != k):
                raise ConfigInvalid(f"Invalid crosstalk pair {(j, k)}")

    @property
    def detuning(self) -> float:
        """Resonator minus working-point frequency"""
        return self.resonator_frequency - self.working_frequency

    def couplings(self) -> Tuple[float, ...]:
        return tuple(q.coupling for q in self.qubits)

    def with_uniform_coupling(self, g: float) -> "DeviceParams":
        """Copy with every qubit-resonator coupling set to g"""
        return replace(self, qubits=tuple(replace(q, coupling=g) for q in self.qubits))


def device_defaults() -> DeviceParams:
    """Device parameters of the reference three-qubit sample"""
    table = [
        # idle GHz, g MHz, T1 idle/work us, T2* idle/work, T2SE idle/work, 1/kappa ns, F0, F1
        (5.367, 20.0, 24.0, 15.4, 2.2, 2.4, 6.5, 6.9, 315.0, 0.984, 0.925),
        (5.223, 20.8, 25.8, 28.5, 0.7, 0.9, 6.2, 7.1, 219.0, 0.988, 0.939),
        (5.311, 19.9, 22.7, 14.4, 2.6, 2.9, 8.0, 8.9, 203.0, 0.986, 0.921),
    ]
    qubits = tuple(
        QubitParams(
            idle_frequency=ghz(w), coupling=mhz(g),
            t1_idle=microseconds(t1i), t1_work=microseconds(t1w),
            t2star_idle=microseconds(t2i), t2star_work=microseconds(t2w),
            t2se_idle=microseconds(sei), t2se_work=microseconds(sew),
            readout_f0=f0, readout_f1=f1, readout_leak_time=leak,
        )
        for (w, g, t1i, t1w, t2i, t2w, sei, sew, leak, f0, f1) in table
    )
    return DeviceParams(
        qubits=qubits,
        resonator_frequency=ghz(5.588),
        working_frequency=ghz(5.44),
        crosstalk={(0, 1): mhz(0.069), (1, 2): mhz(0.553)},
    )


def build_device(
    idle_ghz: Sequence[float],
    g_mhz: Sequence[float],
    resonator_ghz: float,
    working_ghz: float,
    crosstalk_mhz: Optional[Dict[Tuple[int, int], float]] = None,
    t1_us: Optional[Sequence[Tuple[float, float]]] = None,
    t2star_us: Optional[Sequence[Tuple[float, float]]] = None,
    t2se_us: Optional[Sequence[Tuple[float, float]]] = None,
    readout: Optional[Sequence[Tuple[float, float]]] = None,
    readout_leak_ns: Optional[Sequence[float]] = None,
) -> DeviceParams:
    """
    Assemble DeviceParams from laboratory units

    Missing coherence and readout figures fall back to the reference sample.

    Raises:
        ConfigInvalid: If any list does not have three entries or a value is out of range
    """
    defaults = device_defaults()
    lists = [idle_ghz, g_mhz] + [x for x in (t1_us, t2star_us, t2se_us, readout, readout_leak_ns) if x is not None]
    if any(len(x) != 3 for x in lists):
        raise ConfigInvalid("Per-qubit parameter lists must have exactly three entries")

    qubits = []
    for j, base in enumerate(defaults.qubits):
        kwargs = dict(idle_frequency=ghz(idle_ghz[j]), coupling=mhz(g_mhz[j]))
        if t1_us is not None:
            kwargs.update(t1_idle=microseconds(t1_us[j][0]), t1_work=microseconds(t1_us[j][1]))
        if t2star_us is not None:
            kwargs.update(t2star_idle=microseconds(t2star_us[j][0]), t2star_work=microseconds(t2star_us[j][1]))
        if t2se_us is not None:
            kwargs.update(t2se_idle=microseconds(t2se_us[j][0]), t2se_work=microseconds(t2se_us[j][1]))
        if readout is not None:
            kwargs.update(readout_f0=readout[j][0], readout_f1=readout[j][1])
        if readout_leak_ns is not None:
            kwargs.update(readout_leak_time=readout_leak_ns[j])
        qubits.append(replace(base, **kwargs))

    crosstalk = {pair: mhz(v) for pair, v in (crosstalk_mhz or {}).items()}
    device = DeviceParams(
        qubits=tuple(qubits),
        resonator_frequency=ghz(resonator_ghz),
        working_frequency=ghz(working_ghz),
        crosstalk=crosstalk,
    )
    logger.debug(
        "Device assembled",
        detuning_mhz=round(to_mhz(device.detuning), 3),
        crosstalk_pairs=sorted(crosstalk),
    )
    return device
