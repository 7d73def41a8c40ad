#!/usr/bin/env python3
"""
Tests for the numerical kernel

Kronecker conventions, propagators, partial traces, the eigen helpers
and the projection onto physical density matrices.
"""

import sys
from pathlib import Path

import numpy as np
import pytest
from scipy.linalg import expm

# Add src to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

from numkit.errors import (
    ConfigInvalid,
    ConvergenceFailure,
    NonHermitianInput,
    NotDensityMatrix,
    NumericalFailure,
    ShapeMismatch,
    UQCMError,
)
from numkit.linalg import (
    PAULI_X,
    PAULI_Z,
    SIGMA_PLUS,
    SubsystemShape,
    eigvals_general_4x4,
    eigvals_hermitian,
    embed_operator,
    expm_scaled,
    expm_scaled_batch,
    haar_unitary,
    is_density_matrix,
    ket,
    kron,
    kron_all,
    nearest_density_matrix,
    partial_trace,
    project_to_simplex,
    random_density_matrix,
    require_density_matrix,
    unitarity_error,
    wrap_phase,
)


class TestErrorHierarchy:
    """Errors are ValueErrors grouped under one base class"""

    def test_numerical_errors_share_base(self):
        assert issubclass(ShapeMismatch, NumericalFailure)
        assert issubclass(NumericalFailure, UQCMError)
        assert issubclass(UQCMError, ValueError)


class TestKron:
    """The left factor is the most significant index"""

    def test_basis_ordering(self):
        # |1> on Q1, |0> on Q2 -> index 2
        v = kron(ket(1, 2), ket(0, 2))
        assert np.argmax(np.abs(v)) == 2

    def test_kron_all_three_factors(self):
        v = kron_all(ket(0, 2), ket(1, 2), ket(1, 2))
        assert np.argmax(np.abs(v)) == 3

    def test_kron_all_requires_operand(self):
        with pytest.raises(ShapeMismatch):
            kron_all()

    def test_embed_operator_on_resonator(self):
        shape = SubsystemShape((2, 3))
        op = embed_operator(np.diag([0, 1, 2]).astype(complex), 1, shape)
        assert op.shape == (6, 6)
        assert np.allclose(np.diag(op).real, [0, 1, 2, 0, 1, 2])

    def test_embed_operator_rejects_wrong_site(self):
        with pytest.raises(ShapeMismatch):
            embed_operator(SIGMA_PLUS, 3, SubsystemShape.qubits(2))

    def test_subsystem_shape_rejects_zero_dimension(self):
        with pytest.raises(ShapeMismatch):
            SubsystemShape((2, 0))


class TestPropagator:
    """exp(-i H t) from the spectral decomposition"""

    def test_matches_scipy_expm(self):
        rng = np.random.default_rng(3)
        a = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        h = (a + a.conj().T) / 2
        assert np.allclose(expm_scaled(h, 0.7), expm(-1j * 0.7 * h), atol=1e-12)

    def test_unitary_for_long_times(self):
        h = kron(PAULI_X, PAULI_Z)
        assert unitarity_error(expm_scaled(h, 1e4)) < 1e-9

    def test_rejects_non_hermitian(self):
        with pytest.raises(NonHermitianInput):
            expm_scaled(SIGMA_PLUS, 1.0)

    def test_hbar_rescales_time(self):
        h = kron(PAULI_X, PAULI_Z) + 0.3 * kron(PAULI_Z, PAULI_Z)
        assert np.allclose(expm_scaled(h, 0.8, hbar=2.0), expm_scaled(h, 0.4), atol=1e-12)
        assert np.allclose(expm_scaled(h, 0.8, hbar=2.0), expm(-1j * 0.4 * h), atol=1e-12)

    def test_rejects_nonpositive_hbar(self):
        with pytest.raises(ConfigInvalid):
            expm_scaled(PAULI_X, 1.0, hbar=0.0)

    def test_batch_matches_single(self):
        stack = np.stack([PAULI_X, PAULI_Z, PAULI_X + PAULI_Z]).astype(complex)
        batch = expm_scaled_batch(stack, 0.3)
        for h, u in zip(stack, batch):
            assert np.allclose(u, expm_scaled(h, 0.3), atol=1e-12)


class TestPartialTrace:
    """Reduced states of vectors and matrices"""

    def test_product_state_factorises(self):
        a = np.array([0.6, 0.8j])
        b = np.array([1, 1]) / np.sqrt(2)
        rho = partial_trace(kron(a, b), SubsystemShape.qubits(2), [0])
        assert np.allclose(rho, np.outer(a, a.conj()))

    def test_bell_state_gives_mixed_marginal(self):
        bell = (kron(ket(0, 2), ket(1, 2)) + kron(ket(1, 2), ket(0, 2))) / np.sqrt(2)
        rho = partial_trace(np.outer(bell, bell.conj()), SubsystemShape.qubits(2), [1])
        assert np.allclose(rho, np.eye(2) / 2)

    def test_vector_and_matrix_agree(self):
        rng = np.random.default_rng(11)
        psi = rng.standard_normal(12) + 1j * rng.standard_normal(12)
        psi /= np.linalg.norm(psi)
        shape = SubsystemShape((2, 2, 3))
        from_vec = partial_trace(psi, shape, [0, 2])
        from_mat = partial_trace(np.outer(psi, psi.conj()), shape, [0, 2])
        assert np.allclose(from_vec, from_mat, atol=1e-12)

    def test_keep_order_is_sorted(self):
        rng = np.random.default_rng(5)
        rho = random_density_matrix(8, rng)
        shape = SubsystemShape.qubits(3)
        assert np.allclose(partial_trace(rho, shape, [2, 0]), partial_trace(rho, shape, [0, 2]))

    def test_trace_preserved(self):
        rho = random_density_matrix(8, np.random.default_rng(1))
        reduced = partial_trace(rho, SubsystemShape.qubits(3), [1])
        assert np.trace(reduced).real == pytest.approx(1.0, abs=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(ShapeMismatch):
            partial_trace(np.eye(4) / 4, SubsystemShape.qubits(3), [0])


class TestEigenHelpers:
    """Hermitian and general 4x4 eigenvalue routines"""

    def test_hermitian_sorted_descending(self):
        evals = eigvals_hermitian(np.diag([0.1, 0.7, -0.2]))
        assert np.allclose(evals, [0.7, 0.1, -0.2])

    def test_hermitian_rejects_non_hermitian(self):
        with pytest.raises(NonHermitianInput):
            eigvals_hermitian(np.array([[0, 1], [0, 0]]))

    def test_general_solver_diagonal(self):
        evals = eigvals_general_4x4(np.diag([0.1, 0.4, 0.0, 0.2]), real_nonnegative=True)
        assert np.allclose(evals, [0.4, 0.2, 0.1, 0.0])

    def test_general_solver_clamps_tiny_negative(self):
        evals = eigvals_general_4x4(np.diag([0.5, 0.1, 0.0, -1e-12]), real_nonnegative=True)
        assert evals.min() == 0.0

    def test_general_solver_rejects_complex_spectrum(self):
        rotation = np.zeros((4, 4))
        rotation[0, 1], rotation[1, 0] = -1.0, 1.0
        with pytest.raises(ConvergenceFailure):
            eigvals_general_4x4(rotation, real_nonnegative=True)

    def test_general_solver_shape(self):
        with pytest.raises(ShapeMismatch):
            eigvals_general_4x4(np.eye(2))


class TestDensityMatrices:
    """Validity checks and projection onto the physical set"""

    def test_random_density_matrix_valid(self):
        rho = random_density_matrix(4, np.random.default_rng(0), rank=2)
        assert is_density_matrix(rho)
        assert np.linalg.matrix_rank(rho, tol=1e-10) == 2

    def test_require_rejects_bad_trace(self):
        with pytest.raises(NotDensityMatrix):
            require_density_matrix(np.eye(2))

    def test_simplex_projection(self):
        p = project_to_simplex(np.array([0.7, 0.5, -0.2]))
        assert p.sum() == pytest.approx(1.0)
        assert np.all(p >= 0)
        assert p[2] == 0.0

    def test_nearest_density_matrix_keeps_valid_state(self):
        rho = random_density_matrix(4, np.random.default_rng(2))
        assert np.allclose(nearest_density_matrix(rho), rho, atol=1e-12)

    def test_nearest_density_matrix_removes_negativity(self):
        m = np.diag([0.8, 0.35, -0.15]).astype(complex)
        projected = nearest_density_matrix(m)
        assert is_density_matrix(projected)
        assert np.linalg.eigvalsh(projected).min() >= -1e-12

    def test_haar_unitary(self):
        assert unitarity_error(haar_unitary(4, seed=7)) < 1e-12

    def test_wrap_phase(self):
        assert wrap_phase(3 * np.pi) == pytest.approx(np.pi)
        assert wrap_phase(-np.pi / 2 + 4 * np.pi) == pytest.approx(-np.pi / 2)
