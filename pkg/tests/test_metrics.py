#!/usr/bin/env python3
"""
Tests for fidelity, concurrence and clone reports

Covers the closed-form joint states of the ideal cloner, the
concurrence values they imply for arbitrary inputs, and the report
objects written by the runner.
"""

import sys
from pathlib import Path

import numpy as np
import pytest

# Add src to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

from fixtures.quantum import (
    MAXIMALLY_MIXED_2Q,
    PHI_PLUS,
    PRINTED_COPIES_EQUAL,
    PSI_PLUS,
    RHO_TILDE_COPIES_EQUAL,
    RHO_TILDE_ORIGINAL_COPY_EQUAL,
    S,
    equal_superposition,
    product_density,
    werner,
)
from metrics.entanglement import (
    analytic_joint_copies,
    analytic_joint_original_copy,
    concurrence,
    population_tv_distance,
    purity,
    rho_tilde,
    rho_tilde_eigenvalues,
    state_fidelity,
    trace_distance,
)
from metrics.reports import (
    CSV_FIELDS,
    CloneReport,
    clone_report,
    read_matrix_json,
    read_reports_json,
    write_matrix_json,
    write_reports_csv,
    write_reports_json,
)
from numkit.errors import NotDensityMatrix, NotNormalized, NumericalFailure, ShapeMismatch
from numkit.linalg import SubsystemShape, eigvals_general_4x4, haar_unitary, kron, partial_trace, random_density_matrix
from protocol.states import InputState, haar_random_inputs, probe_states
from protocol.uqcm import ProtocolParams, closed_form_output, run_ideal_uqcm

SHAPE = SubsystemShape.qubits(3)


class TestStateFidelity:
    """Overlap of a clone with the pure input"""

    def test_pure_match(self):
        state = equal_superposition()
        assert state_fidelity(state, state.density) == pytest.approx(1.0)

    def test_maximally_mixed(self):
        assert state_fidelity(InputState(0.6, 0.8), np.eye(2) / 2) == pytest.approx(0.5)

    def test_orthogonal(self):
        assert state_fidelity(InputState(1.0, 0.0), np.diag([0.0, 1.0])) == pytest.approx(0.0)

    def test_rejects_invalid_matrix(self):
        with pytest.raises(NotDensityMatrix):
            state_fidelity(InputState(1.0, 0.0), np.eye(2))

    def test_rejects_two_qubit_matrix(self):
        with pytest.raises(ShapeMismatch):
            state_fidelity(InputState(1.0, 0.0), MAXIMALLY_MIXED_2Q)


class TestConcurrence:
    """Wootters concurrence on reference states"""

    def test_bell_states(self):
        assert concurrence(PSI_PLUS) == pytest.approx(1.0, abs=1e-9)
        assert concurrence(PHI_PLUS) == pytest.approx(1.0, abs=1e-9)

    def test_product_state(self):
        a = np.array([0.6, 0.8])
        b = np.array([S, 1j * S])
        assert concurrence(product_density(a, b)) == pytest.approx(0.0, abs=1e-9)

    def test_maximally_mixed(self):
        assert concurrence(MAXIMALLY_MIXED_2Q) == 0.0

    @pytest.mark.parametrize("p", [0.0, 0.2, 1 / 3, 0.5, 0.8, 1.0])
    def test_werner_family(self, p):
        """Mixing with white noise lowers concurrence to max(0, (3p - 1)/2)"""
        assert concurrence(werner(p)) == pytest.approx(max(0.0, (3 * p - 1) / 2), abs=1e-8)

    def test_local_unitary_invariance(self):
        rng = np.random.default_rng(21)
        rho = random_density_matrix(4, rng, rank=2)
        u = kron(haar_unitary(2, seed=1), haar_unitary(2, seed=2))
        rotated = u @ rho @ u.conj().T
        assert concurrence(rotated) == pytest.approx(concurrence(rho), abs=1e-9)

    def test_rejects_non_density_matrix(self):
        with pytest.raises(NotDensityMatrix):
            concurrence(np.diag([1.0, 1.0, 0.0, 0.0]))

    def test_rejects_single_qubit(self):
        with pytest.raises(ShapeMismatch):
            concurrence(np.eye(2) / 2)

    def test_svd_and_general_solver_agree_on_diagonal(self):
        rho = np.diag([0.4, 0.1, 0.2, 0.3]).astype(complex)
        assert np.allclose(rho_tilde_eigenvalues(rho), rho_tilde_eigenvalues(rho, method="general"), atol=1e-12)

    def test_population_distance_ignores_coherences(self):
        assert population_tv_distance(PSI_PLUS, np.diag([0, 0.5, 0.5, 0])) == pytest.approx(0.0)
        assert trace_distance(PSI_PLUS, np.diag([0, 0.5, 0.5, 0])) == pytest.approx(0.5)

    def test_purity(self):
        assert purity(PSI_PLUS) == pytest.approx(1.0)
        assert purity(MAXIMALLY_MIXED_2Q) == pytest.approx(0.25)


class TestAnalyticJoints:
    """Closed-form two-qubit states of the ideal cloner"""

    def test_printed_copies_matrix(self):
        assert np.allclose(analytic_joint_copies(S, S), PRINTED_COPIES_EQUAL)

    def test_rho_tilde_original_copy(self):
        rho = analytic_joint_original_copy(S, S)
        assert np.allclose(rho_tilde(rho), RHO_TILDE_ORIGINAL_COPY_EQUAL, atol=1e-12)
        evals = eigvals_general_4x4(RHO_TILDE_ORIGINAL_COPY_EQUAL, real_nonnegative=True)
        assert np.allclose(evals, [4 / 9, 0, 0, 0], atol=1e-9)

    def test_rho_tilde_copies(self):
        rho = analytic_joint_copies(S, S)
        assert np.allclose(rho_tilde(rho), RHO_TILDE_COPIES_EQUAL, atol=1e-12)
        evals = eigvals_general_4x4(RHO_TILDE_COPIES_EQUAL, real_nonnegative=True)
        assert np.allclose(evals, [1 / 9, 0, 0, 0], atol=1e-9)

    def test_general_solver_on_printed_point(self):
        rho = analytic_joint_original_copy(equal_superposition())
        evals = rho_tilde_eigenvalues(rho, method="general")
        assert evals[0] == pytest.approx(4 / 9, abs=1e-9)

    @pytest.mark.parametrize("state", probe_states() + haar_random_inputs(10, seed=4), ids=lambda s: s.label)
    def test_joints_match_partial_traces(self, state):
        psi = closed_form_output(state, phi=0.0)
        assert np.allclose(analytic_joint_original_copy(state), partial_trace(psi, SHAPE, [0, 1]), atol=1e-12)
        assert np.allclose(analytic_joint_original_copy(state), partial_trace(psi, SHAPE, [0, 2]), atol=1e-12)
        assert np.allclose(analytic_joint_copies(state), partial_trace(psi, SHAPE, [1, 2]), atol=1e-12)

    @pytest.mark.parametrize("state", haar_random_inputs(25, seed=99), ids=lambda s: s.label)
    def test_concurrences_independent_of_input(self, state):
        assert concurrence(analytic_joint_original_copy(state)) == pytest.approx(2 / 3, abs=1e-9)
        assert concurrence(analytic_joint_copies(state)) == pytest.approx(1 / 3, abs=1e-9)

    def test_joints_are_density_matrices(self):
        rho = analytic_joint_original_copy(0.6, 0.8j)
        assert np.trace(rho).real == pytest.approx(1.0)
        assert np.linalg.eigvalsh(rho).min() > -1e-12

    def test_unnormalised_amplitudes(self):
        with pytest.raises(NotNormalized):
            analytic_joint_copies(1.0, 1.0)


class TestCloneReports:
    """CloneReport construction and serialisation"""

    @pytest.fixture
    def ideal_report(self):
        state = equal_superposition()
        rho = run_ideal_uqcm(state, ProtocolParams.default()).final.density()
        return clone_report(state, rho, "ideal")

    def test_ideal_values(self, ideal_report):
        assert ideal_report.fidelity_q2 == pytest.approx(5 / 6, abs=1e-9)
        assert ideal_report.fidelity_q3 == pytest.approx(5 / 6, abs=1e-9)
        assert ideal_report.concurrences["Q1Q2"] == pytest.approx(2 / 3, abs=1e-9)
        assert ideal_report.concurrences["Q1Q3"] == pytest.approx(2 / 3, abs=1e-9)
        assert ideal_report.concurrences["Q2Q3"] == pytest.approx(1 / 3, abs=1e-9)

    def test_row_formatting(self, ideal_report):
        row = ideal_report.to_row()
        assert list(row) == CSV_FIELDS
        assert row["fidelity_q2"] == "0.833333"
        assert row["input"] == "+"

    def test_unknown_layer(self):
        with pytest.raises(ValueError):
            CloneReport("0", "analog", 0.8, 0.8, 0.6, 0.6, 0.3)

    def test_out_of_range_value(self):
        with pytest.raises(NumericalFailure):
            CloneReport("0", "ideal", 1.2, 0.8, 0.6, 0.6, 0.3)

    def test_json_file(self, ideal_report, tmp_path):
        path = write_reports_json(tmp_path / "reports.json", [ideal_report])
        assert read_reports_json(path) == [ideal_report]

    def test_csv_file(self, ideal_report, tmp_path):
        path = write_reports_csv(tmp_path / "nested" / "reports.csv", [ideal_report])
        lines = path.read_text().splitlines()
        assert lines[0] == ",".join(CSV_FIELDS)
        assert len(lines) == 2

    def test_matrix_json(self, tmp_path):
        path = write_matrix_json(tmp_path / "rho.json", PSI_PLUS * 1j, target="Q2Q3")
        assert np.allclose(read_matrix_json(path), PSI_PLUS * 1j)
        assert '"target": "Q2Q3"' in path.read_text()
