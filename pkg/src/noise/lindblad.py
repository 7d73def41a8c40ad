#!/usr/bin/env python3
"""
Lindblad master-equation integrator

Fixed-step classical RK4 on the density matrix with a step-halving
error estimate. Collapse operators are given as (L, rate) pairs meaning
the dissipator D[sqrt(rate) L].
"""

import math
from typing import Sequence, Tuple

import numpy as np
import structlog

from numkit.errors import ConfigInvalid, ShapeMismatch, StepTooLarge
from numkit.linalg import (
    NUMBER,
    PAULI_Z,
    SIGMA_MINUS,
    CMatrix,
    SubsystemShape,
    embed_operator,
    hermitize,
    require_density_matrix,
    require_hermitian,
)

logger = structlog.get_logger(__name__)

DEFAULT_DT = 0.05
ERROR_TOL = 1e-6

CollapseOp = Tuple[CMatrix, float]


class LindbladGenerator:
    """d rho / dt = -i[H, rho] + sum_k r_k (L_k rho L_k^dag - 1/2 {L_k^dag L_k, rho})"""

    def __init__(self, h: CMatrix, collapse_ops: Sequence[CollapseOp]):
        self.h = require_hermitian(h)
        d = self.h.shape[0]
        self.ops = []
        anti = np.zeros((d, d), dtype=complex)
        for op, rate in collapse_ops:
            op = np.asarray(op, dtype=complex)
            if op.shape != (d, d):
                raise ShapeMismatch(f"Collapse operator shape {op.shape} != {(d, d)}")
            if rate < 0:
                raise ConfigInvalid(f"Collapse rate must be nonnegative, got {rate}")
            if rate == 0:
                continue
            scaled = np.sqrt(rate) * op
            self.ops.append(scaled)
            anti += scaled.conj().T @ scaled
        # -i H_eff rho + h.c. carries the commutator and the anticommutator
        self.h_eff = self.h - 0.5j * anti

    def __call__(self, rho: CMatrix) -> CMatrix:
        drho = -1j * (self.h_eff @ rho)
        drho = drho + drho.conj().T
        for op in self.ops:
            drho = drho + op @ rho @ op.conj().T
        return drho

    def rk4_step(self, rho: CMatrix, dt: float) -> CMatrix:
        k1 = self(rho)
        k2 = self(rho + 0.5 * dt * k1)
        k3 = self(rho + 0.5 * dt * k2)
        k4 = self(rho + dt * k3)
        return rho + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def lindblad_evolve(
    rho: CMatrix,
    h: CMatrix,
    collapse_ops: Sequence[CollapseOp],
    t: float,
    dt: float = DEFAULT_DT,
    error_tol: float = ERROR_TOL,
) -> CMatrix:
    """
    Integrate the master equation for time t

    The step is shrunk so that an integer number of steps covers t. The
    local error is estimated on the first step by comparing one step with
    two half steps (Richardson factor 1/15).

    Args:
        rho: Initial density matrix
        h: Time-independent Hamiltonian (rad/ns)
        collapse_ops: (operator, rate) pairs, rates in 1/ns
        t: Duration (ns)
        dt: Maximum step (ns)
        error_tol: Largest accepted local error estimate

    Returns:
        Density matrix at time t

    Raises:
        NotDensityMatrix: If rho is not a valid density matrix
        ConfigInvalid: If t or a collapse rate is negative
        StepTooLarge: If the local error estimate exceeds error_tol or the
            result loses positivity
    """
    rho = require_density_matrix(rho)
    if t < 0:
        raise ConfigInvalid(f"Duration must be nonnegative, got {t}")
    if t == 0:
        return rho.copy()
    if dt <= 0:
        raise StepTooLarge(f"Step must be positive, got {dt}")

    gen = LindbladGenerator(h, collapse_ops)
    n_steps = max(1, math.ceil(t / dt - 1e-12))
    step = t / n_steps

    full = gen.rk4_step(rho, step)
    half = gen.rk4_step(gen.rk4_step(rho, step / 2), step / 2)
    error = float(np.max(np.abs(full - half))) / 15.0
    if error > error_tol:
        raise StepTooLarge(f"Local error estimate {error:.2e} exceeds {error_tol:.1e} at dt={step:.4f} ns")

    current = half
    for _ in range(n_steps - 1):
        current = gen.rk4_step(current, step)
    current = hermitize(current)

    min_eig = float(np.linalg.eigvalsh(current).min())
    if min_eig < -1e-8:
        raise StepTooLarge(f"Positivity lost (min eigenvalue {min_eig:.2e}); reduce dt")
    logger.debug("Master equation integrated", duration_ns=t, steps=n_steps, error_estimate=error)
    return current


def qubit_collapse_ops(
    n_qubits: int,
    gamma1: Sequence[float],
    gamma_phi: Sequence[float],
) -> list:
    """
    Amplitude damping and pure dephasing on each qubit of a register

    Dephasing uses sigma_z at rate gamma_phi / 2 so coherences decay as
    exp(-gamma_phi t).
    """
    shape = SubsystemShape.qubits(n_qubits)
    ops = []
    for j in range(n_qubits):
        if gamma1[j] > 0:
            ops.append((embed_operator(SIGMA_MINUS, j, shape), float(gamma1[j])))
        if gamma_phi[j] > 0:
            ops.append((embed_operator(PAULI_Z, j, shape), float(gamma_phi[j]) / 2.0))
    return ops


def excited_population(rho: CMatrix, qubit: int, n_qubits: int) -> float:
    shape = SubsystemShape.qubits(n_qubits)
    return float(np.real(np.trace(embed_operator(NUMBER, qubit, shape) @ rho)))
