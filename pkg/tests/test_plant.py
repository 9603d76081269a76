import math

import pytest
from hypothesis import given, settings, strategies as st

from watersiem.config import PlantParams
from watersiem.errors import SimulationFault
from watersiem.plant import (ActuatorCommand, IDLE_COMMAND, PlantState, SensorReading,
                             apply_mitigation, plc_control, read_true_sensors, step,
                             volume_to_step)
from watersiem.scenarios import MitigationAction, MitigationKind, ScenarioKind

PARAMS = PlantParams()


def closed_state(**kw):
    defaults = dict(drain_main_open=False, drain_secondary_open=False)
    defaults.update(kw)
    return PlantState(**defaults)


class TestStep:
    def test_pump1_moves_liquid_main_to_secondary(self):
        params = PlantParams(pump1_rate_lps=0.1)
        s0 = closed_state(main_volume_l=5.0, secondary_volume_l=3.0)
        cmd = ActuatorCommand(pump1_on=True, pump1_valve_open=True)
        s1 = step(s0, params, cmd, dt=1.0)
        assert s1.main_volume_l == pytest.approx(4.9, abs=1e-12)
        assert s1.secondary_volume_l == pytest.approx(3.1, abs=1e-12)

    def test_full_main_clamps_under_pump2(self):
        s0 = closed_state(main_volume_l=9.0, recovery_volume_l=20.0)
        cmd = ActuatorCommand(pump2_on=True, pump2_valve_open=True)
        s1 = step(s0, PARAMS, cmd, dt=1.0)
        assert s1.main_volume_l == 9.0
        assert s1.overflow_main_l > 0

    def test_idle_plant_is_a_fixed_point(self):
        s = closed_state(main_volume_l=4.2, secondary_volume_l=2.2)
        for _ in range(1000):
            s = step(s, PARAMS, IDLE_COMMAND, PARAMS.poll_dt_s)
        assert s.main_volume_l == 4.2
        assert s.secondary_volume_l == 2.2
        assert s.t_s == pytest.approx(100.0)

    def test_rejects_nonpositive_dt(self):
        with pytest.raises(ValueError):
            step(PlantState(), PARAMS, IDLE_COMMAND, 0.0)

    def test_faults_on_nonfinite_state(self):
        bad = PlantState(main_volume_l=float("nan"))
        with pytest.raises(SimulationFault):
            step(bad, PARAMS, IDLE_COMMAND, 0.1)

    def test_pump_needs_open_valve(self):
        s0 = closed_state(main_volume_l=5.0)
        cmd = ActuatorCommand(pump1_on=True, pump1_valve_open=False)
        assert step(s0, PARAMS, cmd, 1.0).main_volume_l == 5.0

    def test_drain_returns_to_recovery(self):
        s0 = PlantState(main_volume_l=5.0, secondary_volume_l=3.0, recovery_volume_l=10.0,
                        drain_main_open=True, drain_secondary_open=True)
        s1 = step(s0, PARAMS, IDLE_COMMAND, 1.0)
        assert s1.main_volume_l == pytest.approx(4.98)
        assert s1.secondary_volume_l == pytest.approx(2.98)
        assert s1.recovery_volume_l == pytest.approx(10.04)
        assert s1.total_volume_l == pytest.approx(s0.total_volume_l, abs=1e-9)


class TestPlcControl:
    def reading(self, **kw):
        base = dict(s0=1, s1=1, s2=0, s3=0, ultrasound_step=5000, timestamp_s=0.0)
        base.update(kw)
        return SensorReading(**base)

    def test_low_main_level_starts_pump2(self):
        cmd = plc_control(self.reading(s0=0), IDLE_COMMAND)
        assert cmd.pump2_on and cmd.pump2_valve_open

    def test_full_tank_stops_pump2(self):
        prev = ActuatorCommand(pump2_on=True, pump2_valve_open=True)
        cmd = plc_control(self.reading(s2=1, s3=1), prev)
        assert not cmd.pump2_on

    def test_low_ultrasound_starts_pump1(self):
        cmd = plc_control(self.reading(ultrasound_step=2900), IDLE_COMMAND)
        assert cmd.pump1_on and cmd.pump1_valve_open

    def test_refill_stop_level_maps_to_step_9000(self):
        # linear-map oracle for the stop threshold
        assert volume_to_step(6.3, 7.0) == round(10000 * 6.3 / 7.0) == 9000
        prev = ActuatorCommand(pump1_on=True, pump1_valve_open=True)
        cmd = plc_control(self.reading(ultrasound_step=9000), prev)
        assert not cmd.pump1_on

    def test_holds_state_between_thresholds(self):
        on = ActuatorCommand(pump1_on=True, pump1_valve_open=True,
                             pump2_on=True, pump2_valve_open=True)
        held = plc_control(self.reading(ultrasound_step=5000), on)
        assert held.pump1_on and held.pump2_on
        held = plc_control(self.reading(ultrasound_step=5000), IDLE_COMMAND)
        assert not held.pump1_on and not held.pump2_on


class TestSensors:
    def test_secondary_at_2_1_litres_reads_step_3000(self):
        state = PlantState(secondary_volume_l=2.1)
        assert read_true_sensors(state, PARAMS).ultrasound_step == 3000

    def test_linear_map_endpoints(self):
        assert read_true_sensors(PlantState(secondary_volume_l=0.0), PARAMS).ultrasound_step == 0
        assert read_true_sensors(PlantState(secondary_volume_l=7.0), PARAMS).ultrasound_step == 10000

    def test_discrete_bits_at_5_litres(self):
        reading = read_true_sensors(PlantState(main_volume_l=5.0), PARAMS)
        assert reading.discrete_bits == (1, 1, 0, 0)

    @given(st.floats(min_value=0.0, max_value=9.0))
    def test_bits_are_monotone_in_volume(self, volume):
        bits = read_true_sensors(PlantState(main_volume_l=volume), PARAMS).discrete_bits
        assert list(bits) == sorted(bits, reverse=True)


class TestMitigation:
    def test_stop_pump1(self):
        state = PlantState(pump1_on=True)
        out, scenario = apply_mitigation(state, ScenarioKind.NORMAL,
                                         MitigationAction(MitigationKind.STOP_PUMP1))
        assert not out.pump1_on and scenario is ScenarioKind.NORMAL

    def test_clear_scenario_restores_normal(self):
        _, scenario = apply_mitigation(PlantState(), ScenarioKind.SPOOFING,
                                       MitigationAction(MitigationKind.CLEAR_SCENARIO))
        assert scenario is ScenarioKind.NORMAL

    def test_reset_sensor_clears_injector(self):
        _, scenario = apply_mitigation(PlantState(), ScenarioKind.PLASTIC_BAG,
                                       MitigationAction(MitigationKind.RESET_SENSOR, "ultrasound"))
        assert scenario is ScenarioKind.NORMAL

    def test_valve_actions(self):
        state = PlantState(drain_main_open=True)
        out, _ = apply_mitigation(state, ScenarioKind.NORMAL,
                                  MitigationAction(MitigationKind.CLOSE_VALVE, "drain_main"))
        assert not out.drain_main_open
        out, _ = apply_mitigation(out, ScenarioKind.NORMAL,
                                  MitigationAction(MitigationKind.OPEN_VALVE, "drain_main"))
        assert out.drain_main_open

    def test_invalid_targets_rejected(self):
        with pytest.raises(ValueError):
            MitigationAction(MitigationKind.OPEN_VALVE, "no_such_valve")
        with pytest.raises(ValueError):
            MitigationAction(MitigationKind.START_PUMP, "3")


commands = st.builds(ActuatorCommand,
                     pump1_on=st.booleans(), pump2_on=st.booleans(),
                     pump1_valve_open=st.booleans(), pump2_valve_open=st.booleans())


class TestInvariants:
    @settings(max_examples=25, deadline=None)
    @given(main=st.floats(0, 9), secondary=st.floats(0, 7), recovery=st.floats(0, 30),
           drains=st.booleans(), cmds=st.lists(commands, min_size=1, max_size=8))
    def test_bounds_and_conservation_under_any_commands(self, main, secondary, recovery,
                                                        drains, cmds):
        state = PlantState(main_volume_l=main, secondary_volume_l=secondary,
                           recovery_volume_l=recovery,
                           drain_main_open=drains, drain_secondary_open=drains)
        for i in range(300):
            cmd = cmds[i % len(cmds)]
            before = state.total_volume_l
            state = step(state, PARAMS, cmd, PARAMS.poll_dt_s)
            assert 0.0 <= state.main_volume_l <= PARAMS.main_capacity_l
            assert 0.0 <= state.secondary_volume_l <= PARAMS.secondary_capacity_l
            assert math.isfinite(state.total_volume_l)
            discarded = state.overflow_main_l + state.overflow_secondary_l
            assert abs(state.total_volume_l - (before - discarded)) < 1e-9

    def test_hysteresis_holds_over_a_normal_episode(self):
        state = PlantState(main_volume_l=5.0, secondary_volume_l=2.6)
        cmd = IDLE_COMMAND
        off_step = volume_to_step(PARAMS.secondary_refill_off_l, PARAMS.secondary_capacity_l)
        for _ in range(5000):
            state = step(state, PARAMS, cmd, PARAMS.poll_dt_s)
            reading = read_true_sensors(state, PARAMS)
            cmd = plc_control(reading, cmd, PARAMS)
            assert not (cmd.pump2_on and reading.s3 == 1)
            assert not (cmd.pump1_on and reading.ultrasound_step >= off_step)


class TestParamsValidation:
    def test_threshold_ordering_enforced(self):
        with pytest.raises(ValueError):
            PlantParams(discrete_thresholds_l=(3.35, 1.25, 8.0, 9.0))

    def test_top_threshold_must_match_capacity(self):
        with pytest.raises(ValueError):
            PlantParams(discrete_thresholds_l=(1.25, 3.35, 8.0, 8.5))

    def test_refill_band_ordering(self):
        with pytest.raises(ValueError):
            PlantParams(secondary_refill_on_l=6.3, secondary_refill_off_l=2.1)
