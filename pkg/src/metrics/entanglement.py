#!/usr/bin/env python3
"""
Fidelity and entanglement measures

State fidelity against a pure input, the spin-flipped product
rho_tilde = rho (Y x Y) rho* (Y x Y), Wootters concurrence, and the
closed-form two-qubit joint states of the ideal cloner.
"""

from typing import Optional

import numpy as np
import structlog

from numkit.errors import NotNormalized, ShapeMismatch
from numkit.linalg import (
    PAULI_Y,
    CMatrix,
    as_cmatrix,
    eigvals_general_4x4,
    kron,
    require_density_matrix,
)
from protocol.states import NORM_TOL, InputState

logger = structlog.get_logger(__name__)

YY = kron(PAULI_Y, PAULI_Y)
CONCURRENCE_CLAMP = 1e-9
# eigenvalues below this are roundoff of a rank-deficient state
SQRT_FLOOR = 1e-14


def _require_4x4(rho: CMatrix) -> CMatrix:
    rho = as_cmatrix(rho)
    if rho.shape != (4, 4):
        raise ShapeMismatch(f"Expected a two-qubit 4x4 matrix, got {rho.shape}")
    return rho


def state_fidelity(psi_in: InputState, rho_out: CMatrix) -> float:
    """
    Overlap <psi_in|rho_out|psi_in> of a single-qubit output with the input

    Raises:
        NotDensityMatrix: If rho_out is not a density matrix
    """
    rho = require_density_matrix(rho_out)
    if rho.shape != (2, 2):
        raise ShapeMismatch(f"Clone state must be 2x2, got {rho.shape}")
    v = psi_in.vector
    value = np.vdot(v, rho @ v)
    return float(np.clip(value.real, 0.0, 1.0))


def rho_tilde(rho: CMatrix) -> CMatrix:
    """rho (Y x Y) rho* (Y x Y) with rho* the entrywise conjugate"""
    rho = _require_4x4(rho)
    return rho @ YY @ rho.conj() @ YY


def _sqrt_psd(rho: CMatrix) -> CMatrix:
    evals, evecs = np.linalg.eigh((rho + rho.conj().T) / 2)
    evals = np.where(evals > SQRT_FLOOR, evals, 0.0)
    return (evecs * np.sqrt(evals)) @ evecs.conj().T


def concurrence_roots(rho: CMatrix) -> np.ndarray:
    """
    Square roots of the rho_tilde eigenvalues, descending

    Computed as singular values of sqrt(rho) (Y x Y) sqrt(rho)*, whose
    squares are the eigenvalues of rho_tilde; this avoids the square root
    of eigenvalues that a non-normal solver only resolves to ~1e-8.
    """
    root = _sqrt_psd(_require_4x4(rho))
    return np.linalg.svd(root @ YY @ root.conj(), compute_uv=False)


def rho_tilde_eigenvalues(rho: CMatrix, method: str = "svd") -> np.ndarray:
    """
    Eigenvalues of rho_tilde, descending

    method="svd" squares concurrence_roots; method="general" runs the
    non-Hermitian solver directly on rho_tilde.
    """
    if method == "general":
        return eigvals_general_4x4(rho_tilde(rho), real_nonnegative=True, clamp_tol=CONCURRENCE_CLAMP)
    return concurrence_roots(rho) ** 2


def concurrence(rho: CMatrix) -> float:
    """
    Wootters concurrence max(r1 - r2 - r3 - r4, 0)

    Raises:
        NotDensityMatrix: If rho is not a two-qubit density matrix
    """
    rho = require_density_matrix(_require_4x4(rho))
    roots = concurrence_roots(rho)
    value = roots[0] - roots[1:].sum()
    return float(np.clip(value, 0.0, 1.0))


def trace_distance(rho: CMatrix, sigma: CMatrix) -> float:
    """(1/2) ||rho - sigma||_1"""
    diff = as_cmatrix(rho) - as_cmatrix(sigma)
    if diff.ndim != 2:
        raise ShapeMismatch("trace_distance expects matrices")
    evals = np.linalg.eigvalsh((diff + diff.conj().T) / 2)
    return float(0.5 * np.abs(evals).sum())


def population_tv_distance(rho: CMatrix, sigma: CMatrix) -> float:
    """Total-variation distance of the computational-basis populations"""
    p = np.real(np.diag(as_cmatrix(rho)))
    q = np.real(np.diag(as_cmatrix(sigma)))
    if p.shape != q.shape:
        raise ShapeMismatch(f"Population vectors differ: {p.shape} vs {q.shape}")
    return float(0.5 * np.abs(p - q).sum())


def purity(rho: CMatrix) -> float:
    rho = as_cmatrix(rho)
    return float(np.real(np.trace(rho @ rho)))


def _amplitudes(alpha: complex, beta: Optional[complex]) -> tuple:
    if isinstance(alpha, InputState):
        return alpha.alpha, alpha.beta
    norm = abs(alpha) ** 2 + abs(beta) ** 2
    if abs(norm - 1.0) > NORM_TOL:
        raise NotNormalized(f"|alpha|^2 + |beta|^2 = {norm:.15f}")
    return complex(alpha), complex(beta)


def analytic_joint_original_copy(alpha, beta: Optional[complex] = None) -> CMatrix:
    """
    Ideal joint state of the original (Q1) and one copy

    Basis |q1 qk> = |00>, |01>, |10>, |11>. Accepts (alpha, beta) or an
    InputState.

    Raises:
        NotNormalized: If |alpha|^2 + |beta|^2 != 1
    """
    a, b = _amplitudes(alpha, beta)
    pa, pb = abs(a) ** 2, abs(b) ** 2
    ab = a * np.conj(b)
    rho = np.array([
        [pa / 6, ab / 3, ab / 6, 0],
        [0, pa / 6 + 2 * pb / 3, 1 / 3, ab / 6],
        [0, 0, 2 * pa / 3 + pb / 6, ab / 3],
        [0, 0, 0, pb / 6],
    ], dtype=complex)
    return rho + np.triu(rho, 1).conj().T


def analytic_joint_copies(alpha, beta: Optional[complex] = None) -> CMatrix:
    """
    Ideal joint state of the two copies (Q2, Q3)

    The central block is (1/6) times the all-ones matrix, the psi+ part.

    Raises:
        NotNormalized: If |alpha|^2 + |beta|^2 != 1
    """
    a, b = _amplitudes(alpha, beta)
    pa, pb = abs(a) ** 2, abs(b) ** 2
    ab = a * np.conj(b)
    rho = np.array([
        [2 * pa / 3, ab / 3, ab / 3, 0],
        [0, 1 / 6, 1 / 6, ab / 3],
        [0, 0, 1 / 6, ab / 3],
        [0, 0, 0, 2 * pb / 3],
    ], dtype=complex)
    return rho + np.triu(rho, 1).conj().T
