#!/usr/bin/env python3
"""
Run configuration

A single JSON file with one section per concern: device, protocol,
schedule, noise, tomography, run and decoupling. Every field has a
default taken from the reference sample, so an empty file (or no file)
is a valid configuration. User-facing units are GHz, MHz, us and ns;
the build_* methods convert to the rad/ns units used internally.
"""

import json
from pathlib import Path
from typing import Dict, List, Literal, Optional, Tuple, Union

import numpy as np
import structlog
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from model.device import DeviceParams, build_device, mhz
from model.hamiltonians import mediated_coupling
from noise.trajectories import NoiseModel
from numkit.errors import ConfigInvalid
from protocol.schedule import PulseSchedule
from protocol.states import InputState, haar_random_inputs, probe_states
from protocol.uqcm import ProtocolParams

logger = structlog.get_logger(__name__)

PAIR_KEYS = {"12": (0, 1), "13": (0, 2), "23": (1, 2)}


def parse_pair(key: str) -> Tuple[int, int]:
    """'12' -> (0, 1)"""
    if key not in PAIR_KEYS:
        raise ValueError(f"Unknown qubit pair '{key}', expected one of {sorted(PAIR_KEYS)}")
    return PAIR_KEYS[key]


class Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class DeviceConfig(Section):
    """Device parameters in laboratory units"""
    idle_ghz: List[float] = Field(default=[5.367, 5.223, 5.311], description="Idle frequencies of Q1..Q3")
    g_mhz: List[float] = Field(default=[20.0, 20.8, 19.9], description="Qubit-resonator couplings")
    uniform_g_mhz: Optional[float] = Field(default=None, description="Replace every g_j by this value")
    resonator_ghz: float = Field(default=5.588, gt=0, description="Bus resonator frequency")
    working_ghz: float = Field(default=5.44, gt=0, description="Common working point")
    crosstalk_mhz: Dict[str, float] = Field(default={"12": 0.069, "23": 0.553},
                                            description="Residual direct couplings keyed by qubit pair")
    t1_us: List[Tuple[float, float]] = Field(default=[(24.0, 15.4), (25.8, 28.5), (22.7, 14.4)],
                                             description="T1 (idle, working)")
    t2star_us: List[Tuple[float, float]] = Field(default=[(2.2, 2.4), (0.7, 0.9), (2.6, 2.9)],
                                                 description="T2* (idle, working)")
    t2se_us: List[Tuple[float, float]] = Field(default=[(6.5, 6.9), (6.2, 7.1), (8.0, 8.9)],
                                               description="Spin-echo T2 (idle, working)")
    readout: List[Tuple[float, float]] = Field(default=[(0.984, 0.925), (0.988, 0.939), (0.986, 0.921)],
                                               description="Assignment fidelities (F0, F1)")
    readout_leak_ns: List[float] = Field(default=[315.0, 219.0, 203.0], description="Readout resonator 1/kappa")

    @field_validator("crosstalk_mhz")
    @classmethod
    def _known_pairs(cls, value: Dict[str, float]) -> Dict[str, float]:
        for key in value:
            parse_pair(key)
        return value

    def build(self) -> DeviceParams:
        device = build_device(
            idle_ghz=self.idle_ghz,
            g_mhz=self.g_mhz,
            resonator_ghz=self.resonator_ghz,
            working_ghz=self.working_ghz,
            crosstalk_mhz={parse_pair(k): v for k, v in self.crosstalk_mhz.items()},
            t1_us=self.t1_us,
            t2star_us=self.t2star_us,
            t2se_us=self.t2se_us,
            readout=self.readout,
            readout_leak_ns=self.readout_leak_ns,
        )
        if self.uniform_g_mhz is not None:
            device = device.with_uniform_coupling(mhz(self.uniform_g_mhz))
        return device


class ProtocolConfig(Section):
    """Gate-level protocol; lambda defaults to g^2 / delta with the mean device coupling"""
    lambda_mhz: Optional[float] = Field(default=None, gt=0, description="Mediated coupling lambda / 2 pi")
    tau_ns: Optional[float] = Field(default=None, ge=0, description="C_123 time, default 2 pi / 9 lambda")
    tau_prime_ns: Optional[float] = Field(default=None, ge=0, description="C_23 time, default pi / 3 lambda")
    phi: float = Field(default=0.0, description="Q1 phase during C_23 (rad)")
    theta_d: float = Field(default=0.0, description="Bell-preparation dynamical phase (rad)")
    z_rotations: List[float] = Field(default=[0.0, 0.0, 0.0], min_length=3, max_length=3)
    pair_lambdas_mhz: Dict[str, float] = Field(default_factory=dict, description="Per-pair lambda overrides")

    @field_validator("pair_lambdas_mhz")
    @classmethod
    def _known_pairs(cls, value: Dict[str, float]) -> Dict[str, float]:
        for key in value:
            parse_pair(key)
        return value

    def build(self, device: DeviceParams) -> ProtocolParams:
        if self.lambda_mhz is not None:
            lam = mhz(self.lambda_mhz)
        else:
            lam = mediated_coupling(float(np.mean(device.couplings())), device.detuning)
        return ProtocolParams(
            lam=lam,
            tau=2 * np.pi / (9 * lam) if self.tau_ns is None else self.tau_ns,
            tau_prime=np.pi / (3 * lam) if self.tau_prime_ns is None else self.tau_prime_ns,
            phi=self.phi,
            theta_d=self.theta_d,
            z_rotations=tuple(self.z_rotations),
            pair_lambdas={parse_pair(k): mhz(v) for k, v in self.pair_lambdas_mhz.items()},
        )


class ScheduleConfig(Section):
    """Pulse-level schedule"""
    timing: Literal["reference", "calibrated"] = "reference"
    fock: int = Field(default=3, ge=2, description="Resonator Fock truncation")
    crosstalk: bool = True
    drive_dt_ns: float = Field(default=0.05, gt=0)
    stages: Optional[Dict] = Field(default=None, description="Explicit schedule, overrides timing")

    def build(self, device: DeviceParams) -> PulseSchedule:
        if self.stages is not None:
            return PulseSchedule.from_dict(self.stages)
        if self.timing == "calibrated":
            return PulseSchedule.calibrated(device, self.crosstalk, self.fock)
        return PulseSchedule.reference(device, self.crosstalk, self.fock)


class NoiseConfig(Section):
    """Noisy-layer settings"""
    dephasing: Literal["ou", "markov"] = "ou"
    correlation_time_ns: float = Field(default=1000.0, gt=0)
    trajectories: int = Field(default=1000, ge=1)
    dt_ns: float = Field(default=0.5, gt=0)
    t1: bool = True

    def build(self, device: DeviceParams, seed: int) -> NoiseModel:
        return NoiseModel.from_device(
            device,
            correlation_time=self.correlation_time_ns,
            n_trajectories=self.trajectories,
            seed=seed,
            dephasing=self.dephasing,
            step=self.dt_ns,
            t1=self.t1,
        )


class TomographyConfig(Section):
    shots: int = Field(default=10000, ge=1)
    readout_errors: bool = Field(default=True, description="Sample through the device confusion matrices")
    readout_correction: bool = True
    bootstrap: int = Field(default=0, ge=0, description="Bootstrap resamples, 0 disables")
    process_from_counts: bool = Field(default=False, description="Reconstruct process outputs from counts")


class ExplicitProbe(Section):
    alpha_re: float
    alpha_im: float = 0.0
    beta_re: float = 0.0
    beta_im: float = 0.0
    label: str = ""


class RunSection(Section):
    layer: Literal["ideal", "pulse", "noisy"] = "ideal"
    probes: Literal["six", "haar", "explicit"] = "six"
    haar_count: int = Field(default=100, ge=1)
    explicit: List[ExplicitProbe] = Field(default_factory=list)
    seed: int = Field(default=20240601, ge=0)
    out_dir: str = "results"
    workers: Optional[int] = Field(default=None, ge=1)
    process_targets: List[Literal["Q1", "Q2", "Q3"]] = Field(default=["Q2", "Q3"], min_length=1)


class DecouplingConfig(Section):
    """Grid for the coupling-protection sweep; times are in units of 1/lambda"""
    lambda_mhz: float = Field(default=2.0, gt=0)
    sigma_x_lambda: List[float] = Field(default=[0.0, 0.3, 1.0], min_length=1)
    correlation_time_x_lambda: List[float] = Field(default=[0.2, 1.0, 5.0, 50.0], min_length=1)
    duration_x_lambda: float = Field(default=4.0, gt=0)
    trajectories: int = Field(default=1000, ge=2)

    @field_validator("sigma_x_lambda")
    @classmethod
    def _nonnegative(cls, value: List[float]) -> List[float]:
        if any(v < 0 for v in value):
            raise ValueError("sigma must be nonnegative")
        return value

    @field_validator("correlation_time_x_lambda")
    @classmethod
    def _positive(cls, value: List[float]) -> List[float]:
        if any(v <= 0 for v in value):
            raise ValueError("correlation times must be positive")
        return value


class RunConfig(Section):
    """Complete simulator configuration"""
    device: DeviceConfig = Field(default_factory=DeviceConfig)
    protocol: ProtocolConfig = Field(default_factory=ProtocolConfig)
    schedule: ScheduleConfig = Field(default_factory=ScheduleConfig)
    noise: NoiseConfig = Field(default_factory=NoiseConfig)
    tomography: TomographyConfig = Field(default_factory=TomographyConfig)
    run: RunSection = Field(default_factory=RunSection)
    decoupling: DecouplingConfig = Field(default_factory=DecouplingConfig)

    @classmethod
    def load(cls, path: Union[str, Path]) -> "RunConfig":
        """
        Parse a configuration file

        Raises:
            ConfigInvalid: If the file is missing, not JSON, or fails validation
        """
        path = Path(path)
        try:
            with open(path) as f:
                payload = json.load(f)
        except FileNotFoundError:
            raise ConfigInvalid(f"Config file not found: {path}")
        except json.JSONDecodeError as e:
            raise ConfigInvalid(f"Config file {path} is not valid JSON: {e}")
        config = cls.from_dict(payload)
        logger.debug("Config loaded", path=str(path), layer=config.run.layer)
        return config

    @classmethod
    def from_dict(cls, payload: Dict) -> "RunConfig":
        try:
            return cls.model_validate(payload)
        except ValidationError as e:
            raise ConfigInvalid(str(e))

    def to_dict(self) -> Dict:
        return self.model_dump(mode="json")

    def dump(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w") as f:
            json.dump(self.to_dict(), f, indent=2, sort_keys=True)
            f.write("\n")
        return path

    def with_overrides(self, **section_updates: Dict) -> "RunConfig":
        """Copy with per-section field updates, revalidated"""
        payload = self.to_dict()
        for section, updates in section_updates.items():
            payload[section].update({k: v for k, v in updates.items() if v is not None})
        return self.from_dict(payload)

    def build_device(self) -> DeviceParams:
        return self.device.build()

    def probes(self) -> List[InputState]:
        """Input states selected by the run section"""
        if self.run.probes == "haar":
            return haar_random_inputs(self.run.haar_count, self.run.seed)
        if self.run.probes == "explicit":
            if not self.run.explicit:
                raise ConfigInvalid("probes='explicit' needs at least one entry in run.explicit")
            return [
                InputState(
                    complex(p.alpha_re, p.alpha_im),
                    complex(p.beta_re, p.beta_im),
                    p.label or f"explicit{i:02d}",
                )
                for i, p in enumerate(self.run.explicit)
            ]
        return probe_states()
