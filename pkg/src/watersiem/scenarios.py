"""Anomaly scenario catalog and operator mitigation actions.

Fifteen recorded situations (one normal plus fourteen anomalies). Each entry
knows which physical component the incident touches, the threat category it
belongs to, and the default number of 0.1 s instances a synthetic recording
of it should contain.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass


class AffectedComponent(str, enum.Enum):
    NONE = "none"
    ULTRASOUND_SENSOR = "ultrasound_sensor"
    DISCRETE_SENSOR_1 = "discrete_sensor_1"
    DISCRETE_SENSOR_2 = "discrete_sensor_2"
    NETWORK = "network"
    WHOLE_SUBSYSTEM = "whole_subsystem"


class OperationalScenario(str, enum.Enum):
    NORMAL = "normal"
    ACCIDENT_SABOTAGE = "accident/sabotage"
    BREAKDOWN_SABOTAGE = "breakdown/sabotage"
    BREAKDOWN = "breakdown"
    CYBER_ATTACK = "cyber-attack"
    SABOTAGE = "sabotage"


class ScenarioKind(str, enum.Enum):
    NORMAL = "normal"
    PLASTIC_BAG = "plastic_bag"
    BLOCKED_MEASURE_1 = "blocked_measure_1"
    BLOCKED_MEASURE_2 = "blocked_measure_2"
    FLOATING_2_OBJECTS = "floating_2_objects"
    FLOATING_7_OBJECTS = "floating_7_objects"
    HUMIDITY = "humidity"
    DISCRETE_SENSOR_1_FAILURE = "discrete_sensor_1_failure"
    DISCRETE_SENSOR_2_FAILURE = "discrete_sensor_2_failure"
    DOS = "dos"
    SPOOFING = "spoofing"
    WRONG_CONNECTION = "wrong_connection"
    HIT_LOW = "hit_low"
    HIT_MEDIUM = "hit_medium"
    HIT_HIGH = "hit_high"


@dataclass(frozen=True)
class ScenarioInfo:
    index: int
    affected_component: AffectedComponent
    operational_scenario: OperationalScenario
    default_instances: int


_C = AffectedComponent
_O = OperationalScenario

SCENARIO_TABLE: dict[ScenarioKind, ScenarioInfo] = {
    ScenarioKind.NORMAL: ScenarioInfo(1, _C.NONE, _O.NORMAL, 5519),
    ScenarioKind.PLASTIC_BAG: ScenarioInfo(2, _C.ULTRASOUND_SENSOR, _O.ACCIDENT_SABOTAGE, 10549),
    ScenarioKind.BLOCKED_MEASURE_1: ScenarioInfo(3, _C.ULTRASOUND_SENSOR, _O.BREAKDOWN_SABOTAGE, 226),
    ScenarioKind.BLOCKED_MEASURE_2: ScenarioInfo(4, _C.ULTRASOUND_SENSOR, _O.BREAKDOWN_SABOTAGE, 144),
    ScenarioKind.FLOATING_2_OBJECTS: ScenarioInfo(5, _C.ULTRASOUND_SENSOR, _O.ACCIDENT_SABOTAGE, 854),
    ScenarioKind.FLOATING_7_OBJECTS: ScenarioInfo(6, _C.ULTRASOUND_SENSOR, _O.ACCIDENT_SABOTAGE, 733),
    ScenarioKind.HUMIDITY: ScenarioInfo(7, _C.ULTRASOUND_SENSOR, _O.BREAKDOWN, 157),
    ScenarioKind.DISCRETE_SENSOR_1_FAILURE: ScenarioInfo(8, _C.DISCRETE_SENSOR_1, _O.BREAKDOWN, 1920),
    ScenarioKind.DISCRETE_SENSOR_2_FAILURE: ScenarioInfo(9, _C.DISCRETE_SENSOR_2, _O.BREAKDOWN, 5701),
    ScenarioKind.DOS: ScenarioInfo(10, _C.NETWORK, _O.CYBER_ATTACK, 307),
    ScenarioKind.SPOOFING: ScenarioInfo(11, _C.NETWORK, _O.CYBER_ATTACK, 10130),
    ScenarioKind.WRONG_CONNECTION: ScenarioInfo(12, _C.NETWORK, _O.BREAKDOWN_SABOTAGE, 6228),
    ScenarioKind.HIT_LOW: ScenarioInfo(13, _C.WHOLE_SUBSYSTEM, _O.SABOTAGE, 347),
    ScenarioKind.HIT_MEDIUM: ScenarioInfo(14, _C.WHOLE_SUBSYSTEM, _O.SABOTAGE, 281),
    ScenarioKind.HIT_HIGH: ScenarioInfo(15, _C.WHOLE_SUBSYSTEM, _O.SABOTAGE, 292),
}

ANOMALY_SCENARIOS = tuple(s for s in ScenarioKind if s is not ScenarioKind.NORMAL)

BINARY_NORMAL = "normal"
BINARY_ANOMALY = "anomaly"


def scenario_component(kind: ScenarioKind) -> AffectedComponent:
    return SCENARIO_TABLE[kind].affected_component


def scenario_binary(kind: ScenarioKind) -> str:
    return BINARY_NORMAL if kind is ScenarioKind.NORMAL else BINARY_ANOMALY


def scenario_index(kind: ScenarioKind) -> int:
    return SCENARIO_TABLE[kind].index


class MitigationKind(str, enum.Enum):
    STOP_PUMP1 = "stop_pump1"
    STOP_PUMP2 = "stop_pump2"
    START_PUMP = "start_pump"
    OPEN_VALVE = "open_valve"
    CLOSE_VALVE = "close_valve"
    CLEAR_SCENARIO = "clear_scenario"
    RESET_SENSOR = "reset_sensor"


VALVE_NAMES = ("pump1_valve", "pump2_valve", "drain_main", "drain_secondary")
SENSOR_NAMES = ("ultrasound", "s0", "s1", "s2", "s3")


@dataclass(frozen=True)
class MitigationAction:
    """One operator corrective action, aimed at a single actuator or at the injector."""

    kind: MitigationKind
    target: str | None = None

    def __post_init__(self):
        if self.kind is MitigationKind.START_PUMP and self.target not in ("1", "2"):
            raise ValueError(f"start_pump target must be '1' or '2', got {self.target!r}")
        if self.kind in (MitigationKind.OPEN_VALVE, MitigationKind.CLOSE_VALVE):
            if self.target not in VALVE_NAMES:
                raise ValueError(f"valve target must be one of {VALVE_NAMES}, got {self.target!r}")
        if self.kind is MitigationKind.RESET_SENSOR and self.target not in SENSOR_NAMES:
            raise ValueError(f"sensor target must be one of {SENSOR_NAMES}, got {self.target!r}")
