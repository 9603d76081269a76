"""Sensor-layer corruption models for the fourteen anomaly scenarios.

Every model touches only the sensor fields owned by its affected component
and derives its randomness from (seed, scenario, tick), so a corrupted
stream is reproducible sample-by-sample no matter when or how often it is
evaluated. Denial of service is absent on purpose: it acts at the polling
layer, not on the reading (see the poll logger).
"""
from __future__ import annotations

import math
import random
from dataclasses import replace

from .config import InjectionParams
from .plant import SensorReading, ULTRASOUND_FULL_SCALE
from .scenarios import ScenarioKind, scenario_index


def _clamp_step(value: float) -> int:
    return min(max(int(round(value)), 0), ULTRASOUND_FULL_SCALE)


def _tick_rng(seed: int, scenario: ScenarioKind, tick: int) -> random.Random:
    key = (seed * 1_000_003 + scenario_index(scenario)) * 16_777_619 + tick
    return random.Random(key)


class ScenarioInjector:
    """Holds the active scenario and the stuck-value capture for the blocked pair."""

    def __init__(self, seed: int, params: InjectionParams | None = None, poll_dt_s: float = 0.1):
        self.seed = seed
        self.params = params or InjectionParams()
        self.poll_dt_s = poll_dt_s
        self.scenario = ScenarioKind.NORMAL
        self._stuck_step: int | None = None
        self._t0 = 0.0

    def activate(self, scenario: ScenarioKind, reading: SensorReading, t: float) -> None:
        self.scenario = scenario
        self._t0 = t
        self._stuck_step = reading.ultrasound_step

    def clear(self) -> None:
        self.scenario = ScenarioKind.NORMAL
        self._stuck_step = None

    def apply(self, reading: SensorReading, t: float) -> SensorReading:
        return inject_scenario(reading, self.scenario, t, self.seed, self.params,
                               stuck_step=self._stuck_step, t0=self._t0,
                               poll_dt_s=self.poll_dt_s)


def inject_scenario(reading: SensorReading, scenario: ScenarioKind, t: float,
                    seed: int, params: InjectionParams | None = None, *,
                    stuck_step: int | None = None, t0: float = 0.0,
                    poll_dt_s: float = 0.1) -> SensorReading:
    """Return the reading as the corrupted sensor channel would report it.

    ``stuck_step`` is the ultrasound value captured when a blocked-measure
    scenario began; it defaults to the current value so a one-shot call is
    still well defined.
    """
    p = params or InjectionParams()
    if scenario in (ScenarioKind.NORMAL, ScenarioKind.DOS):
        return reading

    tick = int(round(t / poll_dt_s))

    if scenario is ScenarioKind.PLASTIC_BAG:
        # Bag drapes over the sensor head: near full-scale with heavy-tailed flutter
        rng = _tick_rng(seed, scenario, tick)
        noise = p.plastic_bag_noise_scale * math.tan(math.pi * (rng.random() - 0.5))
        return replace(reading, ultrasound_step=_clamp_step(p.plastic_bag_base_step + noise))

    if scenario is ScenarioKind.BLOCKED_MEASURE_1:
        stuck = stuck_step if stuck_step is not None else reading.ultrasound_step
        return replace(reading, ultrasound_step=_clamp_step(stuck))

    if scenario is ScenarioKind.BLOCKED_MEASURE_2:
        stuck = stuck_step if stuck_step is not None else reading.ultrasound_step
        return replace(reading, ultrasound_step=_clamp_step(stuck + p.blocked2_offset_steps))

    if scenario in (ScenarioKind.FLOATING_2_OBJECTS, ScenarioKind.FLOATING_7_OBJECTS):
        # spike frequency grows with the object count; so does the apparent
        # level when an echo lands on an object instead of the surface
        if scenario is ScenarioKind.FLOATING_2_OBJECTS:
            n_objects, lo, hi = 2, p.float2_spike_min_steps, p.float2_spike_max_steps
        else:
            n_objects, lo, hi = 7, p.float7_spike_min_steps, p.float7_spike_max_steps
        rng = _tick_rng(seed, scenario, tick)
        step_value = reading.ultrasound_step
        if rng.random() < p.float_spike_prob_per_object * n_objects:
            step_value += rng.uniform(lo, hi)
        return replace(reading, ultrasound_step=_clamp_step(step_value))

    if scenario is ScenarioKind.HUMIDITY:
        factor = 1.0 + p.humidity_drift_per_s * max(0.0, t - t0)
        return replace(reading, ultrasound_step=_clamp_step(reading.ultrasound_step * factor))

    if scenario is ScenarioKind.DISCRETE_SENSOR_1_FAILURE:
        return replace(reading, s1=0)

    if scenario is ScenarioKind.DISCRETE_SENSOR_2_FAILURE:
        return replace(reading, s2=0)

    if scenario is ScenarioKind.WRONG_CONNECTION:
        # Mis-wired channel: the ultrasound register carries a rescaled
        # population count of the discrete sensors instead of a depth
        count = sum(reading.discrete_bits)
        return replace(reading, ultrasound_step=_clamp_step(count * p.wrong_connection_step_per_bit))

    if scenario is ScenarioKind.SPOOFING:
        # Attacker square wave, fully decoupled from the true volume
        phase = (t % p.spoof_period_s) / p.spoof_period_s
        forged = p.spoof_high_step if phase < 0.5 else p.spoof_low_step
        return replace(reading, ultrasound_step=_clamp_step(forged))

    if scenario in (ScenarioKind.HIT_LOW, ScenarioKind.HIT_MEDIUM, ScenarioKind.HIT_HIGH):
        amp = {
            ScenarioKind.HIT_LOW: p.hit_amp_low,
            ScenarioKind.HIT_MEDIUM: p.hit_amp_medium,
            ScenarioKind.HIT_HIGH: p.hit_amp_high,
        }[scenario]
        omega = 2.0 * math.pi * p.hit_freq_hz
        step_value = _clamp_step(reading.ultrasound_step + amp * math.sin(omega * t))
        out = replace(reading, ultrasound_step=step_value)
        rng = _tick_rng(seed, scenario, tick)
        if rng.random() < p.hit_flicker_prob * (amp / p.hit_amp_high):
            bit = rng.randrange(4)
            name = f"s{bit}"
            out = replace(out, **{name: 1 - getattr(out, name)})
        return out

    raise AssertionError(f"unhandled scenario {scenario}")


# Sensor fields each scenario is allowed to alter (the component it affects);
# DoS acts at the polling layer so it owns no reading field here.
MUTABLE_FIELDS: dict[ScenarioKind, frozenset[str]] = {
    ScenarioKind.NORMAL: frozenset(),
    ScenarioKind.PLASTIC_BAG: frozenset({"ultrasound_step"}),
    ScenarioKind.BLOCKED_MEASURE_1: frozenset({"ultrasound_step"}),
    ScenarioKind.BLOCKED_MEASURE_2: frozenset({"ultrasound_step"}),
    ScenarioKind.FLOATING_2_OBJECTS: frozenset({"ultrasound_step"}),
    ScenarioKind.FLOATING_7_OBJECTS: frozenset({"ultrasound_step"}),
    ScenarioKind.HUMIDITY: frozenset({"ultrasound_step"}),
    ScenarioKind.DISCRETE_SENSOR_1_FAILURE: frozenset({"s1"}),
    ScenarioKind.DISCRETE_SENSOR_2_FAILURE: frozenset({"s2"}),
    ScenarioKind.DOS: frozenset(),
    ScenarioKind.SPOOFING: frozenset({"ultrasound_step"}),
    ScenarioKind.WRONG_CONNECTION: frozenset({"ultrasound_step"}),
    ScenarioKind.HIT_LOW: frozenset({"s0", "s1", "s2", "s3", "ultrasound_step"}),
    ScenarioKind.HIT_MEDIUM: frozenset({"s0", "s1", "s2", "s3", "ultrasound_step"}),
    ScenarioKind.HIT_HIGH: frozenset({"s0", "s1", "s2", "s3", "ultrasound_step"}),
}
