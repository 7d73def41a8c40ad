#!/usr/bin/env python3
"""
Quantum states used by the cloning protocol

Input qubit states, the six tomography probes, Haar-random inputs and a
small container pairing a state with its subsystem shape.
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Sequence, Tuple

import numpy as np

from numkit.errors import NotNormalized, ShapeMismatch
from numkit.linalg import CMatrix, SubsystemShape, as_cmatrix, partial_trace

NORM_TOL = 1e-12


@dataclass(frozen=True)
class InputState:
    """Single-qubit pure state alpha|0> + beta|1>"""
    alpha: complex
    beta: complex
    label: str = ""

    def __post_init__(self):
        norm = abs(self.alpha) ** 2 + abs(self.beta) ** 2
        if abs(norm - 1.0) > NORM_TOL:
            raise NotNormalized(f"|alpha|^2 + |beta|^2 = {norm:.15f}")
        object.__setattr__(self, "alpha", complex(self.alpha))
        object.__setattr__(self, "beta", complex(self.beta))

    @classmethod
    def from_bloch(cls, theta: float, phi: float, label: str = "") -> "InputState":
        """cos(theta/2)|0> + e^{i phi} sin(theta/2)|1>"""
        return cls(np.cos(theta / 2), np.exp(1j * phi) * np.sin(theta / 2), label)

    @classmethod
    def normalized(cls, alpha: complex, beta: complex, label: str = "") -> "InputState":
        norm = np.sqrt(abs(alpha) ** 2 + abs(beta) ** 2)
        if norm == 0:
            raise NotNormalized("Zero vector cannot be normalised")
        return cls(alpha / norm, beta / norm, label)

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.alpha, self.beta], dtype=complex)

    @property
    def density(self) -> CMatrix:
        v = self.vector
        return np.outer(v, v.conj())

    def bloch_angles(self) -> Tuple[float, float]:
        theta = 2 * np.arccos(min(1.0, abs(self.alpha)))
        phi = float(np.angle(self.beta) - np.angle(self.alpha)) if abs(self.beta) > 0 else 0.0
        return float(theta), phi

    def drive_angles(self) -> Tuple[float, float]:
        """
        Rotation angle and axis preparing this state from |0>

        R(axis, angle) = exp(-i angle/2 (cos axis X + sin axis Y)); the
        state is reproduced up to a global phase.
        """
        theta, phi = self.bloch_angles()
        return theta, phi + np.pi / 2


def probe_states() -> List[InputState]:
    """The six cardinal states in tomography order"""
    s = 1 / np.sqrt(2)
    return [
        InputState(1.0, 0.0, "0"),
        InputState(s, 1j * s, "+i"),
        InputState(s, -1j * s, "-i"),
        InputState(s, s, "+"),
        InputState(s, -s, "-"),
        InputState(0.0, 1.0, "1"),
    ]


def haar_random_inputs(n: int, seed: int) -> List[InputState]:
    """Haar-distributed single-qubit pure states"""
    rng = np.random.default_rng(seed)
    states = []
    for i in range(n):
        z = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        states.append(InputState.normalized(z[0], z[1], f"haar{i:03d}"))
    return states


def bell_state(kind: str = "psi+") -> np.ndarray:
    """Two-qubit Bell states in the |q_a q_b> basis"""
    s = 1 / np.sqrt(2)
    table = {
        "psi+": [0, s, s, 0],
        "psi-": [0, -s, s, 0],
        "phi+": [s, 0, 0, s],
        "phi-": [s, 0, 0, -s],
    }
    if kind not in table:
        raise ValueError(f"Unknown Bell state '{kind}'")
    return np.array(table[kind], dtype=complex)


@dataclass
class QuantumState:
    """
    State vector or density matrix together with its tensor structure

    Attributes:
        data: Vector (pure) or square matrix (mixed)
        shape: Subsystem dimensions
        labels: One label per subsystem, e.g. ("Q1", "Q2", "Q3", "R")
    """
    data: np.ndarray
    shape: SubsystemShape
    labels: Tuple[str, ...] = field(default_factory=tuple)

    def __post_init__(self):
        self.data = as_cmatrix(self.data)
        d = self.shape.dim
        if self.data.ndim == 1 and self.data.shape != (d,):
            raise ShapeMismatch(f"State vector length {self.data.shape[0]} != {d}")
        if self.data.ndim == 2 and self.data.shape != (d, d):
            raise ShapeMismatch(f"Density matrix shape {self.data.shape} != {(d, d)}")
        if self.data.ndim not in (1, 2):
            raise ShapeMismatch("State data must be a vector or a matrix")
        if not self.labels:
            self.labels = tuple(f"S{i}" for i in range(self.shape.n_subsystems))

    @property
    def is_pure(self) -> bool:
        return self.data.ndim == 1

    def density(self) -> CMatrix:
        if self.is_pure:
            return np.outer(self.data, self.data.conj())
        return self.data

    def reduced(self, keep: Sequence[int]) -> "QuantumState":
        keep = sorted(set(keep))
        rho = partial_trace(self.data, self.shape, keep)
        return QuantumState(
            rho,
            SubsystemShape(tuple(self.shape.dims[k] for k in keep)),
            tuple(self.labels[k] for k in keep),
        )

    def norm(self) -> float:
        if self.is_pure:
            return float(np.vdot(self.data, self.data).real)
        return float(np.trace(self.data).real)

    def to_json_dict(self) -> Dict[str, Any]:
        rho = self.density()
        return {
            "labels": list(self.labels),
            "dims": list(self.shape.dims),
            "shape": list(rho.shape),
            "re": rho.real.tolist(),
            "im": rho.imag.tolist(),
        }

    @classmethod
    def from_json_dict(cls, payload: Dict[str, Any]) -> "QuantumState":
        rho = np.array(payload["re"], dtype=float) + 1j * np.array(payload["im"], dtype=float)
        return cls(rho, SubsystemShape(tuple(payload["dims"])), tuple(payload["labels"]))


def prepare_input(state: InputState, ancillas: int = 0) -> QuantumState:
    """Input qubit followed by ancilla qubits in |0>"""
    vec = state.vector
    for _ in range(ancillas):
        vec = np.kron(vec, np.array([1, 0], dtype=complex))
    labels = ("Q1",) + tuple(f"Q{j + 2}" for j in range(ancillas))
    return QuantumState(vec, SubsystemShape.qubits(1 + ancillas), labels)
