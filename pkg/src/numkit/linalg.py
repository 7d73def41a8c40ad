#!/usr/bin/env python3
"""
Dense complex linear algebra for small quantum systems

Tensor products, spectral matrix exponentials, partial traces and the
eigen-solvers used by the model, noise and metric layers. All operators
are numpy complex128 arrays; Hamiltonians are in angular-frequency units
(rad/ns) so exp(-i H t) takes t in ns.
"""

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
import structlog
from scipy import linalg as sla
from scipy.stats import unitary_group

from numkit.errors import (
    ConfigInvalid,
    ConvergenceFailure,
    NonHermitianInput,
    NotDensityMatrix,
    NumericalFailure,
    ShapeMismatch,
)

logger = structlog.get_logger(__name__)

HERMITIAN_TOL = 1e-10
UNITARY_TOL = 1e-9
TRACE_TOL = 1e-12
DENSITY_TOL = 1e-8
EIGEN_CLAMP_TOL = 1e-10

CMatrix = np.ndarray

PAULI_I = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = {"I": PAULI_I, "X": PAULI_X, "Y": PAULI_Y, "Z": PAULI_Z}

# |1><0| and |0><1| with |0> the ground state
SIGMA_PLUS = np.array([[0, 0], [1, 0]], dtype=complex)
SIGMA_MINUS = SIGMA_PLUS.T.copy()
NUMBER = np.array([[0, 0], [0, 1]], dtype=complex)


@dataclass(frozen=True)
class SubsystemShape:
    """Ordered local dimensions of a tensor-product Hilbert space"""
    dims: Tuple[int, ...]

    def __post_init__(self):
        if not self.dims or any(int(d) < 1 for d in self.dims):
            raise ShapeMismatch(f"Invalid subsystem dimensions: {self.dims}")
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))

    @property
    def dim(self) -> int:
        return int(np.prod(self.dims))

    @property
    def n_subsystems(self) -> int:
        return len(self.dims)

    @classmethod
    def qubits(cls, n: int) -> "SubsystemShape":
        return cls((2,) * n)


def as_cmatrix(m) -> CMatrix:
    """Coerce to a finite complex128 array"""
    arr = np.asarray(m, dtype=complex)
    if not np.all(np.isfinite(arr)):
        raise NumericalFailure("Matrix contains non-finite entries")
    return arr


def hermiticity_error(h: CMatrix) -> float:
    """Largest absolute entry of H - H^dagger"""
    h = np.asarray(h)
    return float(np.max(np.abs(h - h.conj().T))) if h.size else 0.0


def unitarity_error(u: CMatrix) -> float:
    """Largest absolute entry of U^dagger U - I"""
    u = np.asarray(u)
    return float(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))))


def require_hermitian(h: CMatrix, tol: float = HERMITIAN_TOL) -> CMatrix:
    h = as_cmatrix(h)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ShapeMismatch(f"Expected a square matrix, got shape {h.shape}")
    err = hermiticity_error(h)
    if err > tol:
        raise NonHermitianInput(f"Hermiticity error {err:.3e} exceeds {tol:.1e}")
    return h


def kron(a: CMatrix, b: CMatrix) -> CMatrix:
    """Kronecker product; the left operand is the more significant factor"""
    return np.kron(as_cmatrix(a), as_cmatrix(b))


def kron_all(*ops: CMatrix) -> CMatrix:
    if not ops:
        raise ShapeMismatch("kron_all needs at least one operand")
    out = as_cmatrix(ops[0])
    for op in ops[1:]:
        out = np.kron(out, as_cmatrix(op))
    return out


def embed_operator(op: CMatrix, site: int, shape: SubsystemShape) -> CMatrix:
    """Place a local operator on one subsystem, identity elsewhere"""
    op = as_cmatrix(op)
    if not 0 <= site < shape.n_subsystems:
        raise ShapeMismatch(f"Site {site} outside {shape.dims}")
    if op.shape != (shape.dims[site], shape.dims[site]):
        raise ShapeMismatch(
            f"Operator shape {op.shape} does not match subsystem dimension {shape.dims[site]}"
        )
    factors = [np.eye(d, dtype=complex) for d in shape.dims]
    factors[site] = op
    return kron_all(*factors)


def expm_scaled(h: CMatrix, t: float, hbar: float = 1.0) -> CMatrix:
    """
    Propagator exp(-i H t / hbar) of a Hermitian generator

    Uses the spectral decomposition of H, so the result is unitary to
    working precision for any t.

    Args:
        h: Hermitian matrix in rad/ns
        t: Evolution time in ns
        hbar: Units of H; 1 when H is an angular frequency

    Returns:
        Unitary propagator

    Raises:
        NonHermitianInput: If H deviates from Hermitian beyond 1e-10
        ConvergenceFailure: If the eigen-solver fails or the result is not unitary
    """
    if hbar <= 0:
        raise ConfigInvalid(f"hbar must be positive, got {hbar}")
    h = require_hermitian(h)
    try:
        evals, evecs = np.linalg.eigh(h)
    except np.linalg.LinAlgError as e:
        raise ConvergenceFailure(f"eigh failed: {e}")
    u = (evecs * np.exp(-1j * evals * t / hbar)) @ evecs.conj().T
    err = unitarity_error(u)
    if err > UNITARY_TOL:
        raise ConvergenceFailure(f"Propagator unitarity error {err:.3e}")
    return u


def expm_scaled_batch(h_stack: np.ndarray, t: float) -> np.ndarray:
    """exp(-i H_k t) for a stack of Hermitian matrices of shape (n, d, d)"""
    h_stack = np.asarray(h_stack, dtype=complex)
    err = float(np.max(np.abs(h_stack - np.conj(np.swapaxes(h_stack, -1, -2)))))
    if err > HERMITIAN_TOL:
        raise NonHermitianInput(f"Hermiticity error {err:.3e} in batch")
    try:
        evals, evecs = np.linalg.eigh(h_stack)
    except np.linalg.LinAlgError as e:
        raise ConvergenceFailure(f"Batched eigh failed: {e}")
    phases = np.exp(-1j * evals * t)
    return np.einsum("nij,nj,nkj->nik", evecs, phases, np.conj(evecs))


def partial_trace(rho: CMatrix, shape: SubsystemShape, keep: Sequence[int]) -> CMatrix:
    """
    Reduced density matrix on the kept subsystems

    Accepts a density matrix or a pure-state vector. Kept subsystems are
    returned in ascending order regardless of the order given.

    Raises:
        ShapeMismatch: If the operand dimension disagrees with the shape
    """
    keep = sorted(set(int(k) for k in keep))
    if any(k < 0 or k >= shape.n_subsystems for k in keep):
        raise ShapeMismatch(f"Keep indices {keep} outside {shape.dims}")
    rho = as_cmatrix(rho)
    n = shape.n_subsystems
    dims = shape.dims
    kept_dim = int(np.prod([dims[k] for k in keep])) if keep else 1

    if rho.ndim == 1:
        if rho.shape[0] != shape.dim:
            raise ShapeMismatch(f"State length {rho.shape[0]} != {shape.dim}")
        psi = rho.reshape(dims)
        traced = [i for i in range(n) if i not in keep]
        psi = np.transpose(psi, keep + traced).reshape(kept_dim, -1)
        return psi @ psi.conj().T

    if rho.shape != (shape.dim, shape.dim):
        raise ShapeMismatch(f"Matrix shape {rho.shape} != {(shape.dim, shape.dim)}")
    letters = "abcdefghijklmnopqrstuvwxyz"
    row = list(letters[:n])
    col = list(letters[n:2 * n])
    for i in range(n):
        if i not in keep:
            col[i] = row[i]
    out = "".join(row[k] for k in keep) + "".join(col[k] for k in keep)
    reduced = np.einsum(f"{''.join(row)}{''.join(col)}->{out}", rho.reshape(dims + dims))
    return reduced.reshape(kept_dim, kept_dim)


def eigvals_hermitian(h: CMatrix) -> np.ndarray:
    """
    Real eigenvalues of a Hermitian matrix, sorted descending

    Raises:
        NonHermitianInput: If H is not Hermitian within 1e-10
        ConvergenceFailure: If eigh fails
    """
    h = require_hermitian(h)
    try:
        evals = np.linalg.eigvalsh(h)
    except np.linalg.LinAlgError as e:
        raise ConvergenceFailure(f"eigvalsh failed: {e}")
    return evals[::-1]


def eigh_sorted(h: CMatrix) -> Tuple[np.ndarray, CMatrix]:
    """Eigenpairs of a Hermitian matrix with ascending eigenvalues"""
    h = require_hermitian(h)
    try:
        return np.linalg.eigh(h)
    except np.linalg.LinAlgError as e:
        raise ConvergenceFailure(f"eigh failed: {e}")


def eigvals_general_4x4(m: CMatrix, real_nonnegative: bool = False,
                        clamp_tol: float = EIGEN_CLAMP_TOL) -> np.ndarray:
    """
    Eigenvalues of a general (non-Hermitian) 4x4 matrix

    Uses LAPACK's Hessenberg/Schur QR iteration. With real_nonnegative the
    caller asserts the spectrum is real and nonnegative, as for products of
    the form rho (Y x Y) rho* (Y x Y); tiny imaginary parts are dropped
    and values in [-clamp_tol, 0) are clamped to zero.

    Returns:
        Eigenvalues sorted by descending real part

    Raises:
        ShapeMismatch: If m is not 4x4
        ConvergenceFailure: If the QR iteration fails or the spectrum
            violates the asserted structure
    """
    m = as_cmatrix(m)
    if m.shape != (4, 4):
        raise ShapeMismatch(f"Expected a 4x4 matrix, got {m.shape}")
    try:
        evals = sla.eigvals(m)
    except (np.linalg.LinAlgError, sla.LinAlgError) as e:
        raise ConvergenceFailure(f"eigvals failed: {e}")
    evals = evals[np.argsort(-evals.real, kind="stable")]
    if not real_nonnegative:
        return evals

    scale = max(1.0, float(np.max(np.abs(evals))))
    if float(np.max(np.abs(evals.imag))) > 1e-8 * scale:
        raise ConvergenceFailure(f"Expected a real spectrum, got {evals}")
    real = evals.real.copy()
    if float(real.min()) < -clamp_tol * scale:
        raise ConvergenceFailure(f"Expected a nonnegative spectrum, got {real}")
    return np.clip(real, 0.0, None)


def is_density_matrix(rho: CMatrix, tol: float = DENSITY_TOL) -> bool:
    rho = np.asarray(rho)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        return False
    if hermiticity_error(rho) > tol or abs(np.trace(rho) - 1.0) > tol:
        return False
    return float(np.linalg.eigvalsh((rho + rho.conj().T) / 2).min()) >= -tol


def require_density_matrix(rho: CMatrix, tol: float = DENSITY_TOL) -> CMatrix:
    """Return rho unchanged if it is a valid density matrix, else raise"""
    rho = as_cmatrix(rho)
    if not is_density_matrix(rho, tol):
        raise NotDensityMatrix(
            f"Not a density matrix (hermiticity {hermiticity_error(rho):.2e}, "
            f"trace {complex(np.trace(rho)):.6f})"
        )
    return rho


def hermitize(m: CMatrix) -> CMatrix:
    return (m + m.conj().T) / 2


def ket(index: int, dim: int) -> np.ndarray:
    v = np.zeros(dim, dtype=complex)
    v[index] = 1.0
    return v


def global_phase_aligned(psi: np.ndarray, reference: np.ndarray) -> np.ndarray:
    """psi multiplied by the global phase that best matches reference"""
    overlap = np.vdot(psi, reference)
    if abs(overlap) < 1e-14:
        return psi
    return psi * (overlap / abs(overlap))


def wrap_phase(theta: float) -> float:
    """Wrap an angle into (-pi, pi]"""
    wrapped = float(np.angle(np.exp(1j * theta)))
    return np.pi if np.isclose(wrapped, -np.pi) else wrapped


def haar_unitary(dim: int, seed: Optional[int] = None) -> CMatrix:
    return unitary_group.rvs(dim, random_state=seed)


def random_density_matrix(dim: int, rng: np.random.Generator, rank: Optional[int] = None) -> CMatrix:
    """Random full- or fixed-rank density matrix from a Ginibre draw"""
    rank = rank or dim
    g = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def project_to_simplex(values: np.ndarray) -> np.ndarray:
    """Euclidean projection of a real vector onto the probability simplex"""
    v = np.asarray(values, dtype=float)
    u = np.sort(v)[::-1]
    css = np.cumsum(u)
    idx = np.arange(1, v.size + 1)
    cond = u - (css - 1.0) / idx > 0
    rho_idx = int(idx[cond][-1])
    shift = (css[rho_idx - 1] - 1.0) / rho_idx
    return np.clip(v - shift, 0.0, None)


def nearest_density_matrix(m: CMatrix) -> CMatrix:
    """
    Frobenius-nearest positive semidefinite unit-trace matrix

    The Hermitian part is diagonalised and its spectrum projected onto
    the probability simplex.
    """
    h = hermitize(as_cmatrix(m))
    evals, evecs = np.linalg.eigh(h)
    projected = project_to_simplex(evals)
    return (evecs * projected) @ evecs.conj().T
