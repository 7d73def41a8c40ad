#!/usr/bin/env python3
"""
Tests for density-matrix validation rules

Tests all validation functions with physical states, near misses
and unreadable input.
"""

import sys
from pathlib import Path

import numpy as np
import pytest

# Add src to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

from fixtures.quantum import MAXIMALLY_MIXED_2Q, PSI_PLUS, werner
from numkit.linalg import random_density_matrix
from validation.numerical_rules import (
    _load_matrix,
    validate_density_matrix,
    validate_hermitian,
    validate_positive,
    validate_square_qubit_dimension,
    validate_unit_trace,
)


@pytest.fixture
def random_state():
    """Full-rank random three-qubit state"""
    return random_density_matrix(8, np.random.default_rng(17))


class TestQubitDimension:
    """Square matrices of dimension 2^n"""

    def test_valid_dimensions(self, random_state):
        assert validate_square_qubit_dimension(np.eye(2) / 2)
        assert validate_square_qubit_dimension(random_state)

    def test_not_power_of_two(self):
        assert not validate_square_qubit_dimension(np.eye(3) / 3)

    def test_not_square(self):
        assert not validate_square_qubit_dimension(np.zeros((2, 4)))

    def test_scalar_like(self):
        assert not validate_square_qubit_dimension([[1.0]])


class TestHermitian:
    """M = M^dag within tolerance"""

    def test_bell_state(self):
        assert validate_hermitian(PSI_PLUS)

    def test_small_asymmetry_accepted(self):
        m = MAXIMALLY_MIXED_2Q.copy()
        m[0, 1] = 1e-12
        assert validate_hermitian(m)

    def test_asymmetry_rejected(self):
        m = MAXIMALLY_MIXED_2Q.copy()
        m[0, 1] = 1e-3
        assert not validate_hermitian(m)

    def test_custom_tolerance(self):
        m = MAXIMALLY_MIXED_2Q.copy()
        m[0, 1] = 1e-3
        assert validate_hermitian(m, tol=1e-2)


class TestUnitTrace:
    """Tr(M) = 1"""

    def test_normalised(self, random_state):
        assert validate_unit_trace(random_state)

    def test_unnormalised(self):
        assert not validate_unit_trace(np.eye(2))

    def test_complex_trace(self):
        m = np.diag([0.5, 0.5 + 1e-3j])
        assert not validate_unit_trace(m)


class TestPositive:
    """No eigenvalue below -tol"""

    def test_werner_states(self):
        assert validate_positive(werner(0.0))
        assert validate_positive(werner(1.0))

    def test_negative_eigenvalue(self):
        assert not validate_positive(np.diag([1.1, -0.1]))

    def test_roundoff_tolerated(self):
        assert validate_positive(np.diag([1.0 + 1e-10, -1e-10]))


class TestDensityMatrix:
    """Combined checks used by the runner"""

    def test_all_checks_pass(self, random_state):
        result = validate_density_matrix(random_state)
        assert result == {
            "qubit_dimension": True,
            "hermitian": True,
            "unit_trace": True,
            "positive": True,
            "overall_valid": True,
        }

    def test_nested_lists(self):
        assert validate_density_matrix([[0.5, 0.5], [0.5, 0.5]])["overall_valid"]

    def test_single_failure_reported(self):
        result = validate_density_matrix(np.diag([1.2, -0.2]))
        assert result["positive"] is False
        assert result["unit_trace"] is True
        assert result["overall_valid"] is False

    def test_unreadable_input(self):
        result = validate_density_matrix([["a", "b"], ["c", "d"]])
        assert not any(result.values())

    def test_non_finite_entries(self):
        m = MAXIMALLY_MIXED_2Q.copy()
        m[2, 2] = np.nan
        assert validate_density_matrix(m)["overall_valid"] is False


class TestLoadMatrix:
    """Input coercion"""

    def test_complex_dtype(self):
        assert _load_matrix([[1, 0], [0, 0]]).dtype == complex

    def test_rejects_vector(self):
        with pytest.raises(ValueError):
            _load_matrix([1.0, 0.0])

    def test_rejects_infinite(self):
        with pytest.raises(ValueError):
            _load_matrix([[np.inf, 0], [0, 0]])
