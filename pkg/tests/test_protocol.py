#!/usr/bin/env python3
"""
Tests for the cloning protocol

Input states, the gate-level run against its closed-form checkpoints,
pulse schedule construction, and the pulse-level run on the qubit plus
resonator model.
"""

import sys
from pathlib import Path

import numpy as np
import pytest

# Add src to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

from fixtures.quantum import S, equal_superposition
from metrics.entanglement import population_tv_distance, state_fidelity
from model.device import device_defaults, mhz, to_mhz
from model.hamiltonians import mediated_coupling
from noise.noisy_layer import xy_rotation
from numkit.errors import ConfigInvalid, NotDensityMatrix, NotNormalized, ScheduleInvalid
from numkit.linalg import SubsystemShape, kron, partial_trace
from protocol.schedule import (
    REFERENCE_DURATIONS,
    PulseDrive,
    PulseSchedule,
    PulseStage,
    StageRole,
    clone_durations,
)
from protocol.states import InputState, QuantumState, bell_state, haar_random_inputs, prepare_input, probe_states
from protocol.uqcm import (
    ProtocolParams,
    bell_prep_ideal,
    checkpoint_error,
    closed_form_after_c123,
    closed_form_output,
    clone_channel_ideal,
    run_ideal_uqcm,
    run_pulse_uqcm,
)

SHAPE = SubsystemShape.qubits(3)
LAM = mhz(2.7)


def clone_fidelities(state, final):
    rho = final.density()
    return (
        state_fidelity(state, partial_trace(rho, SHAPE, [1])),
        state_fidelity(state, partial_trace(rho, SHAPE, [2])),
    )


class TestInputStates:
    """Input qubit and probe sets"""

    def test_normalisation_enforced(self):
        with pytest.raises(NotNormalized):
            InputState(1.0, 0.1)

    def test_normalized_constructor(self):
        state = InputState.normalized(3.0, 4.0j, "x")
        assert state.alpha == pytest.approx(0.6)
        assert state.beta == pytest.approx(0.8j)

    def test_probe_order(self):
        assert [s.label for s in probe_states()] == ["0", "+i", "-i", "+", "-", "1"]

    def test_haar_inputs_repeat_with_seed(self):
        a = haar_random_inputs(5, seed=3)
        b = haar_random_inputs(5, seed=3)
        assert [s.vector.tolist() for s in a] == [s.vector.tolist() for s in b]
        assert a[0].label == "haar000"

    @pytest.mark.parametrize("state", probe_states() + haar_random_inputs(5, seed=1), ids=lambda s: s.label)
    def test_drive_angles_prepare_state(self, state):
        theta, axis = state.drive_angles()
        prepared = xy_rotation(theta, axis) @ np.array([1, 0], dtype=complex)
        assert abs(np.vdot(prepared, state.vector)) == pytest.approx(1.0, abs=1e-12)

    def test_unknown_bell_state(self):
        with pytest.raises(ValueError):
            bell_state("psi0")

    def test_reduced_state_labels(self):
        psi = closed_form_output(equal_superposition())
        reduced = QuantumState(psi, SHAPE, ("Q1", "Q2", "Q3")).reduced([2, 1])
        assert reduced.labels == ("Q2", "Q3")
        assert reduced.density().shape == (4, 4)

    def test_prepare_input(self):
        state = InputState(0.6, 0.8j, "x")
        prepared = prepare_input(state)
        assert prepared.labels == ("Q1",)
        assert np.allclose(prepared.density(), state.density)

    def test_prepare_input_with_ancillas(self):
        prepared = prepare_input(InputState(0.0, 1.0), ancillas=2)
        assert prepared.labels == ("Q1", "Q2", "Q3")
        assert np.argmax(np.abs(prepared.data)) == 4

    def test_checkpoint_json(self):
        checkpoint = QuantumState(closed_form_after_c123(equal_superposition()), SHAPE, ("Q1", "Q2", "Q3"))
        payload = checkpoint.to_json_dict()
        assert payload["dims"] == [2, 2, 2]
        assert payload["shape"] == [8, 8]
        restored = QuantumState.from_json_dict(payload)
        assert restored.labels == checkpoint.labels
        assert np.allclose(restored.density(), checkpoint.density(), atol=1e-15)


class TestProtocolParams:
    """Timings and couplings of the gate-level protocol"""

    def test_ideal_timings(self):
        params = ProtocolParams.ideal(LAM)
        assert params.tau == pytest.approx(2 * np.pi / (9 * LAM))
        assert params.tau_prime == pytest.approx(np.pi / (3 * LAM))
        assert params.sqrt_iswap_time == pytest.approx(np.pi / (4 * LAM))

    def test_default_lambda(self):
        assert to_mhz(ProtocolParams.default().lam) == pytest.approx(400.0 / 148.0)

    def test_from_device_uses_mean_coupling(self):
        device = device_defaults()
        params = ProtocolParams.from_device(device)
        assert params.lam == pytest.approx(mediated_coupling(np.mean(device.couplings()), device.detuning))

    def test_pair_override(self):
        params = ProtocolParams.ideal(LAM, pair_lambdas={(1, 2): 2 * LAM})
        assert params.lambda_for((1, 2)) == 2 * LAM
        assert params.lambda_for((0, 1)) == LAM

    def test_invalid_values(self):
        with pytest.raises(ConfigInvalid):
            ProtocolParams(lam=0.0, tau=1.0, tau_prime=1.0)
        with pytest.raises(ConfigInvalid):
            ProtocolParams(lam=LAM, tau=-1.0, tau_prime=1.0)
        with pytest.raises(ConfigInvalid):
            ProtocolParams.ideal(LAM, pair_lambdas={(0, 3): LAM})


class TestBellPreparation:
    """X_pi, sqrt(iSWAP) and the Q3 phase compensation"""

    @pytest.mark.parametrize("theta_d", [0.0, 0.37, -1.2])
    def test_compensated_gives_psi_plus(self, theta_d):
        psi = bell_prep_ideal(theta_d, compensate=True, lam=LAM).data
        assert np.allclose(psi, bell_state("psi+"), atol=1e-12)

    def test_uncompensated_phase(self):
        theta_d = 0.37
        psi = bell_prep_ideal(theta_d, compensate=False, lam=LAM).data
        expected = np.array([0, S, S * np.exp(1j * (np.pi / 2 + theta_d)), 0])
        assert np.allclose(psi, expected, atol=1e-12)

    def test_returns_labelled_pair_state(self):
        bell = bell_prep_ideal(lam=LAM)
        assert bell.is_pure
        assert bell.labels == ("Q2", "Q3")
        assert bell.shape.dims == (2, 2)


class TestIdealRun:
    """Gate-level protocol against its closed forms"""

    @pytest.mark.parametrize("state", probe_states() + haar_random_inputs(10, seed=7), ids=lambda s: s.label)
    def test_checkpoints(self, state):
        result = run_ideal_uqcm(state, ProtocolParams.default())
        assert np.allclose(result.after_bell.data, kron(state.vector, bell_state("psi+")), atol=1e-12)
        assert checkpoint_error(result.after_c123.data, closed_form_after_c123(state)) < 1e-10
        assert checkpoint_error(result.final.data, closed_form_output(state)) < 1e-10

    def test_phase_phi_reaches_output(self):
        state = InputState(0.6, 0.8)
        result = run_ideal_uqcm(state, ProtocolParams.ideal(LAM, phi=0.9))
        assert checkpoint_error(result.final.data, closed_form_output(state, 0.9)) < 1e-10

    @pytest.mark.parametrize("state", probe_states(), ids=lambda s: s.label)
    def test_probe_fidelities(self, state):
        f2, f3 = clone_fidelities(state, run_ideal_uqcm(state, ProtocolParams.default()).final)
        assert f2 == pytest.approx(5 / 6, abs=1e-9)
        assert f3 == pytest.approx(5 / 6, abs=1e-9)

    def test_universal_over_haar_inputs(self):
        fidelities = np.array([
            clone_fidelities(s, run_ideal_uqcm(s, ProtocolParams.default()).final)
            for s in haar_random_inputs(50, seed=2024)
        ])
        assert fidelities.max() - fidelities.min() < 1e-9
        assert fidelities.mean() == pytest.approx(5 / 6, abs=1e-9)

    def test_clone_channel_matches_reduced_state(self):
        state = InputState.normalized(0.3, 0.2 - 0.7j)
        rho = run_ideal_uqcm(state, ProtocolParams.default()).final.density()
        assert np.allclose(partial_trace(rho, SHAPE, [1]), clone_channel_ideal(state.density), atol=1e-10)

    @pytest.mark.parametrize("rho", [np.diag([2.0, -1.0]), np.array([[0.5, 0.5], [0.0, 0.5]])])
    def test_clone_channel_rejects_invalid_input(self, rho):
        with pytest.raises(NotDensityMatrix):
            clone_channel_ideal(rho)

    def test_wrong_interaction_time_breaks_cloning(self):
        state = equal_superposition()
        params = ProtocolParams(lam=LAM, tau=np.pi / (9 * LAM), tau_prime=np.pi / (3 * LAM))
        f2, _ = clone_fidelities(state, run_ideal_uqcm(state, params).final)
        assert abs(f2 - 5 / 6) > 1e-3


class TestSchedule:
    """Stage layout, serialisation and timing rules"""

    @pytest.fixture
    def device(self):
        return device_defaults()

    def test_reference_layout(self, device):
        schedule = PulseSchedule.reference(device)
        labels = [s.label for s in schedule.stages]
        assert labels == ["x_pi_q3", "sqrt_iswap", "sqrt_iswap_input", "compensate", "c123", "c23"]
        durations = {s.label: s.duration for s in schedule.stages}
        assert durations["c123"] == REFERENCE_DURATIONS["c123"]
        assert durations["c23"] == REFERENCE_DURATIONS["c23"]
        assert durations["sqrt_iswap"] + durations["sqrt_iswap_input"] == pytest.approx(REFERENCE_DURATIONS["sqrt_iswap"])
        assert schedule.timing == "reference"

    def test_drive_end_times(self, device):
        schedule = PulseSchedule.reference(device)
        ends = schedule.drive_end_times()
        assert ends["x_pi_q3"] == pytest.approx(40.0)
        assert ends["input"] == pytest.approx(40.0 + REFERENCE_DURATIONS["sqrt_iswap"] + 30.0)
        assert schedule.index_of(StageRole.CLONE) == [4, 5]

    def test_dict_round_trip(self, device):
        schedule = PulseSchedule.reference(device)
        assert PulseSchedule.from_dict(schedule.to_dict()) == schedule

    def test_malformed_dict(self):
        with pytest.raises(ScheduleInvalid):
            PulseSchedule.from_dict({"stages": [{"label": "x"}]})

    def test_nonpositive_duration(self):
        with pytest.raises(ScheduleInvalid):
            PulseSchedule((PulseStage("idle", 0.0),))

    def test_drive_on_unknown_qubit(self):
        with pytest.raises(ScheduleInvalid):
            PulseSchedule((PulseStage("x", 10.0, drives=(PulseDrive(5, "x"),)),))

    def test_input_drive_needs_state(self):
        with pytest.raises(ScheduleInvalid):
            PulseDrive(0, "input", input_fraction=0.5).resolved(None)

    def test_clone_durations_uniform_coupling(self):
        h123 = -LAM * (np.ones((3, 3)) - np.eye(3))
        h23 = np.zeros((3, 3))
        h23[1, 2] = h23[2, 1] = -LAM
        c123, c23 = clone_durations(h123, h23)
        assert c123 == pytest.approx(2 * np.pi / (9 * LAM))
        assert c23 == pytest.approx(np.pi / (3 * LAM))

    def test_clone_durations_wrong_sign(self):
        h123 = -LAM * (np.ones((3, 3)) - np.eye(3))
        h23 = np.zeros((3, 3))
        h23[1, 2] = h23[2, 1] = LAM
        with pytest.raises(ScheduleInvalid):
            clone_durations(h123, h23)

    @pytest.mark.parametrize("crosstalk", [True, False])
    def test_compensation_moves_q3_only(self, device, crosstalk):
        for schedule in (PulseSchedule.reference(device, crosstalk), PulseSchedule.calibrated(device, crosstalk)):
            comp = schedule.stages[schedule.index_of(StageRole.COMPENSATE)[0]]
            assert set(comp.setpoints) == {1, 2}
            assert comp.setpoints[2] != pytest.approx(device.working_frequency, abs=mhz(20.0))
            assert abs(to_mhz(comp.setpoints[2] - device.qubits[2].idle_frequency)) < 100.0

    def test_calibrated_durations_near_ideal(self, device):
        schedule = PulseSchedule.calibrated(device, crosstalk=False)
        durations = {s.label: s.duration for s in schedule.stages}
        lam = ProtocolParams.from_device(device).lam
        assert durations["c123"] == pytest.approx(2 * np.pi / (9 * lam), rel=0.15)
        assert durations["c23"] == pytest.approx(np.pi / (3 * lam), rel=0.15)


@pytest.mark.slow
class TestPulseRun:
    """Qubits plus resonator under the reference and calibrated schedules"""

    @pytest.fixture(scope="class")
    def device(self):
        return device_defaults()

    @pytest.fixture(scope="class")
    def reference(self, device):
        return PulseSchedule.reference(device)

    @pytest.fixture(scope="class")
    def calibrated(self, device):
        return PulseSchedule.calibrated(device, crosstalk=False)

    @pytest.mark.parametrize("state", probe_states(), ids=lambda s: s.label)
    def test_reference_fidelity_near_optimal(self, device, reference, state):
        result = run_pulse_uqcm(state, reference, device)
        f2, f3 = clone_fidelities(state, result.qubits)
        assert f2 == pytest.approx(5 / 6, abs=0.02)
        assert f3 == pytest.approx(5 / 6, abs=0.02)

    @pytest.mark.parametrize("state", probe_states(), ids=lambda s: s.label)
    def test_reference_resonator_stays_empty(self, device, reference, state):
        result = run_pulse_uqcm(state, reference, device)
        assert result.max_resonator_excitation < 0.02
        assert all(s.norm_error < 1e-9 for s in result.stages)
        assert len(result.stages) == len(reference.stages)
        assert result.stages[0].to_dict()["label"] == "x_pi_q3"

    @pytest.mark.parametrize("state", probe_states(), ids=lambda s: s.label)
    def test_reference_populations_track_gate_level(self, device, reference, state):
        pulse = run_pulse_uqcm(state, reference, device).qubits.density()
        gate = run_ideal_uqcm(state, ProtocolParams.from_device(device)).final.density()
        assert np.trace(pulse).real == pytest.approx(1.0, abs=1e-9)
        assert population_tv_distance(pulse, gate) <= 0.05

    @pytest.mark.parametrize("state", probe_states(), ids=lambda s: s.label)
    def test_calibrated_fidelity_near_optimal(self, device, calibrated, state):
        result = run_pulse_uqcm(state, calibrated, device, crosstalk=False)
        f2, f3 = clone_fidelities(state, result.qubits)
        assert f2 == pytest.approx(5 / 6, abs=0.02)
        assert f3 == pytest.approx(5 / 6, abs=0.02)
        assert result.max_resonator_excitation < 0.02
        assert result.timing == "calibrated"
