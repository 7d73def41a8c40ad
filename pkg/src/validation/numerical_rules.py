#!/usr/bin/env python3
"""
Numerical validation rules for simulator outputs

Reusable checks that a matrix written by the runner is a physical
density matrix. Each rule returns a bool; validate_density_matrix runs
them all and reports per-check results, which the CLI uses to decide the
numerical-failure exit code.
"""

from typing import Dict, Sequence, Union

import numpy as np

from numkit.linalg import DENSITY_TOL, HERMITIAN_TOL

MatrixLike = Union[np.ndarray, Sequence[Sequence[complex]]]


def validate_square_qubit_dimension(matrix: MatrixLike) -> bool:
    """
    Validate that the matrix is square with a power-of-two dimension

    Args:
        matrix: Candidate density matrix

    Returns:
        bool: True if shape is (2^n, 2^n) with n >= 1

    Raises:
        ValueError: If the data cannot be read as a numeric array
    """
    m = _load_matrix(matrix)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        return False
    d = m.shape[0]
    return d >= 2 and (d & (d - 1)) == 0


def validate_hermitian(matrix: MatrixLike, tol: float = HERMITIAN_TOL) -> bool:
    """
    Validate that the matrix equals its conjugate transpose

    Args:
        matrix: Candidate density matrix
        tol: Largest allowed |M - M^dag| entry (default: 1e-10)

    Returns:
        bool: True if Hermitian within tol
    """
    m = _load_matrix(matrix)
    return float(np.max(np.abs(m - m.conj().T))) <= tol


def validate_unit_trace(matrix: MatrixLike, tol: float = DENSITY_TOL) -> bool:
    """
    Validate that Tr(M) = 1

    Args:
        matrix: Candidate density matrix
        tol: Allowed deviation of the trace (default: 1e-8)

    Returns:
        bool: True if the trace is 1 within tol
    """
    m = _load_matrix(matrix)
    return abs(complex(np.trace(m)) - 1.0) <= tol


def validate_positive(matrix: MatrixLike, tol: float = DENSITY_TOL) -> bool:
    """
    Validate that the Hermitian part has no eigenvalue below -tol

    Args:
        matrix: Candidate density matrix
        tol: Allowed negative excursion (default: 1e-8)

    Returns:
        bool: True if positive semidefinite within tol
    """
    m = _load_matrix(matrix)
    evals = np.linalg.eigvalsh((m + m.conj().T) / 2)
    return float(evals.min()) >= -tol


def validate_density_matrix(matrix: MatrixLike) -> Dict[str, bool]:
    """
    Comprehensive validation for density matrices

    Returns:
        dict: Validation results with bool values for each check
        {
            'qubit_dimension': bool,
            'hermitian': bool,
            'unit_trace': bool,
            'positive': bool,
            'overall_valid': bool
        }
    """
    results = {}
    for name, rule in (
        ("qubit_dimension", validate_square_qubit_dimension),
        ("hermitian", validate_hermitian),
        ("unit_trace", validate_unit_trace),
        ("positive", validate_positive),
    ):
        try:
            results[name] = bool(rule(matrix))
        except Exception:
            results[name] = False

    results["overall_valid"] = all(results.values())
    return results


def _load_matrix(matrix: MatrixLike) -> np.ndarray:
    """
    Internal helper to coerce input into a complex ndarray

    Raises:
        ValueError: If the data is not numeric
    """
    try:
        m = np.asarray(matrix, dtype=complex)
    except (TypeError, ValueError) as e:
        raise ValueError(f"Cannot read matrix: {e}")
    if m.ndim != 2:
        raise ValueError(f"Expected a 2-D matrix, got {m.ndim} dimensions")
    if not np.all(np.isfinite(m)):
        raise ValueError("Matrix contains non-finite entries")
    return m
