#!/usr/bin/env python3
"""
Tests for simulated tomography

Pre-rotation conventions, count sampling with readout errors, linear
inversion with and without correction, and chi-matrix process
tomography.
"""

import sys
from pathlib import Path

import numpy as np
import pytest

# Add src to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

from fixtures.quantum import PSI_PLUS
from metrics.entanglement import concurrence, trace_distance
from numkit.errors import IncompleteSettings, RankDeficient, ShapeMismatch, SingularConfusion
from numkit.linalg import PAULI_X, PAULI_Y, PAULI_Z, haar_unitary, random_density_matrix
from protocol.states import probe_states
from protocol.uqcm import clone_channel_ideal
from tomography.measurement import (
    _confusion,
    all_settings,
    exact_probabilities,
    measured_observable,
    parse_setting,
    read_records_csv,
    readout_correct,
    setting_label,
    simulate_counts,
    tomography_records,
    write_records_csv,
)
from tomography.reconstruction import (
    ChiMatrix,
    apply_chi,
    bootstrap_std,
    chi_identity,
    chi_of_unitary,
    process_fidelity,
    process_tomography,
    reconstruct_from_probabilities,
    reconstruct_state,
)

PLUS = np.array([[0.5, 0.5], [0.5, 0.5]], dtype=complex)
PLUS_I = np.array([[0.5, -0.5j], [0.5j, 0.5]], dtype=complex)
ZERO = np.diag([1.0, 0.0]).astype(complex)


class TestPreRotations:
    """Which Pauli each pre-rotation maps onto the readout axis"""

    def test_identity_measures_z(self):
        assert np.allclose(measured_observable("I"), PAULI_Z)

    def test_x_half_measures_plus_y(self):
        assert np.allclose(measured_observable("X/2"), PAULI_Y)

    def test_y_half_measures_minus_x(self):
        assert np.allclose(measured_observable("Y/2"), -PAULI_X)

    def test_plus_state_with_y_half_reads_one(self):
        assert np.allclose(exact_probabilities(PLUS, ("Y/2",)), [0.0, 1.0], atol=1e-12)

    def test_plus_i_state_with_x_half_reads_zero(self):
        assert np.allclose(exact_probabilities(PLUS_I, ("X/2",)), [1.0, 0.0], atol=1e-12)

    def test_settings_enumeration(self):
        settings = all_settings(2)
        assert len(settings) == 9
        assert settings[0] == ("I", "I")
        assert parse_setting(setting_label(("X/2", "Y/2"))) == ("X/2", "Y/2")

    def test_unknown_setting(self):
        with pytest.raises(ValueError):
            parse_setting("I-Z/2")


class TestCounts:
    """Multinomial sampling and readout errors"""

    def test_ground_state_perfect_readout(self):
        record = simulate_counts(ZERO, ("I",), 500, seed=1)
        assert record.counts == {"0": 500, "1": 0}

    def test_ground_state_with_assignment_error(self):
        record = simulate_counts(ZERO, ("I",), 20000, f0=[0.9], f1=[0.8], seed=2)
        assert record.frequencies()[0] == pytest.approx(0.9, abs=0.01)

    def test_seeded_counts_repeat(self):
        a = tomography_records(PSI_PLUS, 2, 1000, seed=5)
        b = tomography_records(PSI_PLUS, 2, 1000, seed=5)
        assert [r.counts for r in a] == [r.counts for r in b]

    def test_shots_must_be_positive(self):
        with pytest.raises(ValueError):
            simulate_counts(ZERO, ("I",), 0)

    def test_csv_file(self, tmp_path):
        records = tomography_records(PSI_PLUS, 2, 200, seed=9)
        loaded = read_records_csv(write_records_csv(tmp_path / "counts.csv", records))
        assert [r.setting for r in loaded] == [r.setting for r in records]
        assert [r.counts for r in loaded] == [r.counts for r in records]


class TestReadoutCorrection:
    """Inversion of the per-qubit confusion matrices"""

    def test_clipped_mass_reported(self):
        corrected = readout_correct([1.0, 0.0], [0.9], [0.9])
        assert corrected.clipped_mass == pytest.approx(0.125)
        assert np.allclose(corrected.probabilities, [1.0, 0.0])

    def test_exact_inverse_two_qubits(self):
        p = np.array([0.4, 0.1, 0.2, 0.3])
        noisy = _confusion([0.95, 0.97], [0.9, 0.92]) @ p
        corrected = readout_correct(noisy, [0.95, 0.97], [0.9, 0.92])
        assert corrected.probabilities == pytest.approx(p, abs=1e-12)
        assert corrected.clipped_mass == 0.0

    def test_singular_confusion(self):
        with pytest.raises(SingularConfusion):
            readout_correct([0.5, 0.5], [0.5], [0.5])

    def test_correction_removes_bias(self):
        records = tomography_records(ZERO, 1, 20000, seed=3, f0=[0.95], f1=[0.9])
        raw = reconstruct_state(records, 1)
        corrected = reconstruct_state(records, 1, f0=[0.95], f1=[0.9])
        assert raw.projected[0, 0].real == pytest.approx(0.95, abs=0.01)
        assert corrected.projected[0, 0].real == pytest.approx(1.0, abs=0.01)


class TestStateReconstruction:
    """Linear inversion and physical projection"""

    def test_exact_probabilities_invert_exactly(self):
        rho = random_density_matrix(4, np.random.default_rng(12))
        probs = {s: exact_probabilities(rho, s) for s in all_settings(2)}
        result = reconstruct_from_probabilities(probs, 2)
        assert np.allclose(result.raw, rho, atol=1e-9)
        assert np.allclose(result.projected, rho, atol=1e-9)

    def test_three_qubit_exact(self):
        rho = random_density_matrix(8, np.random.default_rng(13), rank=1)
        probs = {s: exact_probabilities(rho, s) for s in all_settings(3)}
        assert np.allclose(reconstruct_from_probabilities(probs, 3).raw, rho, atol=1e-9)

    def test_expectations_exposed(self):
        probs = {s: exact_probabilities(PSI_PLUS, s) for s in all_settings(2)}
        result = reconstruct_from_probabilities(probs, 2)
        assert result.expectations["II"] == 1.0
        assert result.expectations["XX"] == pytest.approx(1.0)
        assert result.expectations["ZZ"] == pytest.approx(-1.0)

    def test_missing_setting(self):
        probs = {s: exact_probabilities(PSI_PLUS, s) for s in all_settings(2)[1:]}
        with pytest.raises(IncompleteSettings):
            reconstruct_from_probabilities(probs, 2)

    def test_record_qubit_count_checked(self):
        records = tomography_records(ZERO, 1, 100, seed=1)
        with pytest.raises(ShapeMismatch):
            reconstruct_state(records, 2)

    def test_finite_shots_bell_state(self):
        records = tomography_records(PSI_PLUS, 2, 10000, seed=17)
        result = reconstruct_state(records, 2)
        assert result.shots == 10000
        assert trace_distance(result.projected, PSI_PLUS) < 0.05
        assert concurrence(result.projected) > 0.9
        assert np.linalg.eigvalsh(result.projected).min() >= -1e-12

    def test_bootstrap_spread(self):
        state = probe_states()[3]
        records = tomography_records(clone_channel_ideal(state.density), 1, 2000, seed=8)
        spread = bootstrap_std(records, 1, lambda rho: float(np.real(np.vdot(state.vector, rho @ state.vector))),
                               n_resamples=50, seed=1)
        assert 0.0 < spread < 0.05


class TestProcessTomography:
    """chi matrices in the {I, X, Y, Z} basis"""

    def _pairs(self, channel):
        return [(s.density, channel(s.density)) for s in probe_states()]

    def test_identity_channel(self):
        chi = process_tomography(self._pairs(lambda rho: rho))
        assert np.allclose(chi.matrix, chi_identity().matrix, atol=1e-9)
        assert process_fidelity(chi, chi_identity()) == pytest.approx(1.0)

    def test_ideal_clone_channel(self):
        chi = process_tomography(self._pairs(clone_channel_ideal))
        assert np.allclose(np.diag(chi.matrix).real, [3 / 4, 1 / 12, 1 / 12, 1 / 12], atol=1e-9)
        assert chi.fidelity(chi_identity()) == pytest.approx(0.75, abs=1e-9)

    def test_bit_flip(self):
        chi = process_tomography(self._pairs(lambda rho: PAULI_X @ rho @ PAULI_X))
        assert np.allclose(chi.matrix, chi_of_unitary(PAULI_X).matrix, atol=1e-9)
        assert chi.matrix[1, 1].real == pytest.approx(1.0)

    def test_apply_chi_reproduces_unitary(self):
        u = haar_unitary(2, seed=4)
        rho = np.array([[0.7, 0.2 - 0.1j], [0.2 + 0.1j, 0.3]])
        assert np.allclose(apply_chi(chi_of_unitary(u), rho), u @ rho @ u.conj().T, atol=1e-12)

    def test_rank_deficient_probes(self):
        pairs = [(s.density, s.density) for s in probe_states() if s.label in ("0", "1")]
        with pytest.raises(RankDeficient):
            process_tomography(pairs)

    def test_projected_chi_is_physical(self):
        chi = ChiMatrix(np.diag([1.05, -0.05, 0.0, 0.0]))
        assert np.linalg.eigvalsh(chi.projected().matrix).min() >= -1e-12

    def test_chi_shape(self):
        with pytest.raises(ShapeMismatch):
            ChiMatrix(np.eye(2))
