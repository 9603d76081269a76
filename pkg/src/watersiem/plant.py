"""Two-tank plant physics and the PLC control law.

The main tank feeds the secondary tank through pump 1; pump 2 refills the
main tank from an open recovery reservoir; drain valves at the bottom of
both tanks model constant consumption and return liquid to the reservoir,
so the loop is closed. Volumes integrate with explicit Euler at the poll
step, which is exact for the piecewise-constant flows used here.

The control law is a pair of hysteresis loops driven purely by what the
sensors *report* -- a spoofed reading mis-drives the plant exactly as it
would a real PLC:

* pump 2 starts when the low discrete sensor clears (main below 1.25 L)
  and stops when the full-tank sensor trips (9 L),
* pump 1 starts when the ultrasound step falls below the 2.1 L mark and
  stops when it reaches the 6.3 L mark.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .config import PlantParams
from .errors import SimulationFault
from .scenarios import MitigationAction, MitigationKind, ScenarioKind

ULTRASOUND_FULL_SCALE = 10000


def volume_to_step(volume_l: float, capacity_l: float) -> int:
    """Linear ultrasound map; 0 litres -> step 0, full tank -> step 10000."""
    step = int(round(ULTRASOUND_FULL_SCALE * volume_l / capacity_l))
    return min(max(step, 0), ULTRASOUND_FULL_SCALE)


def step_to_volume(step: int, capacity_l: float) -> float:
    return capacity_l * step / ULTRASOUND_FULL_SCALE


@dataclass(frozen=True)
class SensorReading:
    """One poll of the five sensors: four discrete level bits plus the ultrasound step."""

    s0: int
    s1: int
    s2: int
    s3: int
    ultrasound_step: int
    timestamp_s: float

    def __post_init__(self):
        if not 0 <= self.ultrasound_step <= ULTRASOUND_FULL_SCALE:
            raise ValueError(f"ultrasound step {self.ultrasound_step} outside 0..{ULTRASOUND_FULL_SCALE}")
        for name in ("s0", "s1", "s2", "s3"):
            if getattr(self, name) not in (0, 1):
                raise ValueError(f"discrete sensor {name} must be 0 or 1")

    @property
    def discrete_bits(self) -> tuple[int, int, int, int]:
        return (self.s0, self.s1, self.s2, self.s3)


@dataclass(frozen=True)
class ActuatorCommand:
    pump1_on: bool = False
    pump2_on: bool = False
    pump1_valve_open: bool = False
    pump2_valve_open: bool = False


IDLE_COMMAND = ActuatorCommand()


@dataclass(frozen=True)
class PlantState:
    """Ground-truth plant state; actuator flags mirror the last applied command.

    ``overflow_main_l`` / ``overflow_secondary_l`` record liquid discarded by
    the capacity clamp during the last step (diagnostics; zero otherwise).
    """

    t_s: float = 0.0
    main_volume_l: float = 5.0
    secondary_volume_l: float = 3.5
    recovery_volume_l: float = 25.0
    pump1_on: bool = False
    pump2_on: bool = False
    pump1_valve_open: bool = False
    pump2_valve_open: bool = False
    drain_main_open: bool = True
    drain_secondary_open: bool = True
    overflow_main_l: float = 0.0
    overflow_secondary_l: float = 0.0

    @property
    def total_volume_l(self) -> float:
        return self.main_volume_l + self.secondary_volume_l + self.recovery_volume_l

    def command(self) -> ActuatorCommand:
        return ActuatorCommand(self.pump1_on, self.pump2_on,
                               self.pump1_valve_open, self.pump2_valve_open)


def _require_finite(state: PlantState) -> None:
    for name in ("t_s", "main_volume_l", "secondary_volume_l", "recovery_volume_l"):
        if not math.isfinite(getattr(state, name)):
            raise SimulationFault(f"non-finite plant state: {name}={getattr(state, name)!r}")


def step(state: PlantState, params: PlantParams, cmd: ActuatorCommand, dt: float) -> PlantState:
    """Advance the plant by ``dt`` seconds under the given actuator command.

    Flow ordering per step: recovery -> main (pump 2), main -> secondary
    (pump 1), open drains -> recovery. Outflows are limited to the liquid
    available at the start of the step; destination tanks clamp at their
    capacity and the clamp discards the excess inflow.
    """
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    _require_finite(state)

    pump2_in = params.pump2_rate_lps * dt if (cmd.pump2_on and cmd.pump2_valve_open) else 0.0
    pump1_out = params.pump1_rate_lps * dt if (cmd.pump1_on and cmd.pump1_valve_open) else 0.0
    drain_main = params.consumption_rate_lps * dt if state.drain_main_open else 0.0
    drain_secondary = params.consumption_rate_lps * dt if state.drain_secondary_open else 0.0

    pump2_in = min(pump2_in, state.recovery_volume_l)
    main_out = pump1_out + drain_main
    if main_out > state.main_volume_l > 0:
        scale = state.main_volume_l / main_out
        pump1_out *= scale
        drain_main *= scale
    elif state.main_volume_l <= 0:
        pump1_out = drain_main = 0.0
    drain_secondary = min(drain_secondary, state.secondary_volume_l)

    main = state.main_volume_l + pump2_in - pump1_out - drain_main
    secondary = state.secondary_volume_l + pump1_out - drain_secondary
    recovery = state.recovery_volume_l - pump2_in + drain_main + drain_secondary

    overflow_main = max(0.0, main - params.main_capacity_l)
    overflow_secondary = max(0.0, secondary - params.secondary_capacity_l)

    return replace(
        state,
        t_s=state.t_s + dt,
        main_volume_l=min(max(main, 0.0), params.main_capacity_l),
        secondary_volume_l=min(max(secondary, 0.0), params.secondary_capacity_l),
        recovery_volume_l=max(recovery, 0.0),
        pump1_on=cmd.pump1_on,
        pump2_on=cmd.pump2_on,
        pump1_valve_open=cmd.pump1_valve_open,
        pump2_valve_open=cmd.pump2_valve_open,
        overflow_main_l=overflow_main,
        overflow_secondary_l=overflow_secondary,
    )


_DEFAULT_PARAMS = PlantParams()


def read_true_sensors(state: PlantState, params: PlantParams) -> SensorReading:
    """Uncorrupted sensor values: discrete bits are active at-or-above their level."""
    bits = tuple(1 if state.main_volume_l >= th else 0 for th in params.discrete_thresholds_l)
    return SensorReading(
        s0=bits[0], s1=bits[1], s2=bits[2], s3=bits[3],
        ultrasound_step=volume_to_step(state.secondary_volume_l, params.secondary_capacity_l),
        timestamp_s=state.t_s,
    )


def plc_control(reading: SensorReading, prev_cmd: ActuatorCommand,
                params: PlantParams = _DEFAULT_PARAMS) -> ActuatorCommand:
    """Hysteresis law over the reported readings; between thresholds a pump holds state.

    Each pump's stop condition wins if both fire (safety first). Pump valves
    track their pump.
    """
    on_step = volume_to_step(params.secondary_refill_on_l, params.secondary_capacity_l)
    off_step = volume_to_step(params.secondary_refill_off_l, params.secondary_capacity_l)

    pump2 = prev_cmd.pump2_on
    if reading.s0 == 0:  # main below the low-level sensor
        pump2 = True
    if reading.s3 == 1:  # full-tank sensor tripped
        pump2 = False

    pump1 = prev_cmd.pump1_on
    if reading.ultrasound_step < on_step:
        pump1 = True
    if reading.ultrasound_step >= off_step:
        pump1 = False

    return ActuatorCommand(pump1_on=pump1, pump2_on=pump2,
                           pump1_valve_open=pump1, pump2_valve_open=pump2)


def apply_mitigation(state: PlantState, injector: ScenarioKind,
                     action: MitigationAction) -> tuple[PlantState, ScenarioKind]:
    """Apply one operator action; returns the adjusted state and injector scenario."""
    kind = action.kind
    if kind is MitigationKind.STOP_PUMP1:
        state = replace(state, pump1_on=False)
    elif kind is MitigationKind.STOP_PUMP2:
        state = replace(state, pump2_on=False)
    elif kind is MitigationKind.START_PUMP:
        if action.target == "1":
            state = replace(state, pump1_on=True, pump1_valve_open=True)
        else:
            state = replace(state, pump2_on=True, pump2_valve_open=True)
    elif kind is MitigationKind.OPEN_VALVE:
        state = replace(state, **{f"{action.target}_open": True})
    elif kind is MitigationKind.CLOSE_VALVE:
        state = replace(state, **{f"{action.target}_open": False})
    elif kind in (MitigationKind.CLEAR_SCENARIO, MitigationKind.RESET_SENSOR):
        injector = ScenarioKind.NORMAL
    return state, injector
