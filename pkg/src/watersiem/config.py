"""Dataclass configs for the plant, the scenario generators, and the pipeline.

Everything tunable lives here, with defaults chosen so a freshly generated
synthetic corpus is classifiable out of the box. A single declarative config
file (JSON or YAML, sections ``plant`` / ``injection`` / ``episodes``) can
override any field; see README for the key-per-field reference.
"""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

from .scenarios import ScenarioKind, SCENARIO_TABLE


@dataclass(frozen=True)
class PlantParams:
    """Physical constants of the two-tank rig and the PLC poll period."""

    main_capacity_l: float = 9.0
    secondary_capacity_l: float = 7.0
    discrete_thresholds_l: tuple[float, ...] = (1.25, 3.35, 8.0, 9.0)
    pump1_rate_lps: float = 0.05
    pump2_rate_lps: float = 0.05
    consumption_rate_lps: float = 0.02
    poll_dt_s: float = 0.1
    secondary_refill_on_l: float = 2.1
    secondary_refill_off_l: float = 6.3

    def __post_init__(self):
        if self.main_capacity_l <= 0 or self.secondary_capacity_l <= 0:
            raise ValueError("tank capacities must be positive")
        th = self.discrete_thresholds_l
        if len(th) != 4 or any(b <= a for a, b in zip(th, th[1:])):
            raise ValueError("discrete thresholds must be 4 strictly increasing levels")
        if th[3] != self.main_capacity_l:
            raise ValueError("top discrete threshold must equal the main tank capacity")
        if not (0 < self.secondary_refill_on_l < self.secondary_refill_off_l < self.secondary_capacity_l):
            raise ValueError("secondary refill thresholds must satisfy 0 < on < off < capacity")
        if self.poll_dt_s <= 0:
            raise ValueError("poll period must be positive")
        for name in ("pump1_rate_lps", "pump2_rate_lps", "consumption_rate_lps"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")


@dataclass(frozen=True)
class InjectionParams:
    """Knobs of the per-scenario sensor-corruption generators.

    All generators are pure functions of (seed, scenario, tick) plus the
    one value captured at injection time for the stuck-sensor pair.
    """

    plastic_bag_base_step: int = 9800
    plastic_bag_noise_scale: float = 60.0
    blocked2_offset_steps: int = 1800
    float_spike_prob_per_object: float = 0.04
    float2_spike_min_steps: int = 500
    float2_spike_max_steps: int = 1100
    float7_spike_min_steps: int = 1500
    float7_spike_max_steps: int = 2500
    humidity_drift_per_s: float = 0.02
    wrong_connection_step_per_bit: int = 2500
    spoof_low_step: int = 1500
    spoof_high_step: int = 8900
    spoof_period_s: float = 3.0
    hit_amp_low: float = 300.0
    hit_amp_medium: float = 800.0
    hit_amp_high: float = 1500.0
    hit_freq_hz: float = 0.5
    hit_flicker_prob: float = 0.02

    def __post_init__(self):
        if not (self.hit_amp_low < self.hit_amp_medium < self.hit_amp_high):
            raise ValueError("hit amplitudes must be strictly increasing")
        if self.spoof_period_s <= 0:
            raise ValueError("spoof period must be positive")


# Starting liquid levels per recorded scenario. Spreading the tanks across
# distinct operating bands stands in for the fact that real incidents were
# recorded at different times and plant states; it also keeps the synthetic
# classes separable at desk scale (different discrete-bit levels, pump
# phases, and depth bands).
DEFAULT_INIT_LEVELS: dict[str, tuple[float, float]] = {
    # slug: (main tank litres, secondary tank litres)
    ScenarioKind.NORMAL.value: (5.0, 2.60),
    ScenarioKind.PLASTIC_BAG.value: (5.0, 4.00),
    ScenarioKind.BLOCKED_MEASURE_1.value: (5.0, 3.10),
    ScenarioKind.BLOCKED_MEASURE_2.value: (5.0, 3.60),
    ScenarioKind.FLOATING_2_OBJECTS.value: (5.0, 4.10),
    ScenarioKind.FLOATING_7_OBJECTS.value: (5.0, 4.60),
    ScenarioKind.HUMIDITY.value: (5.0, 5.10),
    ScenarioKind.DISCRETE_SENSOR_1_FAILURE.value: (5.0, 1.10),
    ScenarioKind.DISCRETE_SENSOR_2_FAILURE.value: (8.55, 1.60),
    ScenarioKind.DOS.value: (5.0, 5.60),
    ScenarioKind.SPOOFING.value: (5.0, 2.90),
    ScenarioKind.WRONG_CONNECTION.value: (8.55, 5.85),
    ScenarioKind.HIT_LOW.value: (5.0, 6.10),
    ScenarioKind.HIT_MEDIUM.value: (8.85, 0.65),
    ScenarioKind.HIT_HIGH.value: (0.60, 1.15),
}


@dataclass(frozen=True)
class EpisodeConfig:
    """How synthetic recordings are produced and logged."""

    base_datetime: str = "2018-01-01T00:00:00"
    instance_counts: dict[str, int] = field(
        default_factory=lambda: {k.value: v.default_instances for k, v in SCENARIO_TABLE.items()}
    )
    init_levels: dict[str, tuple[float, float]] = field(
        default_factory=lambda: dict(DEFAULT_INIT_LEVELS)
    )
    init_jitter_l: float = 0.06
    initial_recovery_l: float = 25.0
    drains_open: bool = True
    dos_start_tick: int = 10
    dos_mode: str = "stale_repeat"  # or "gap"

    def __post_init__(self):
        if self.dos_mode not in ("stale_repeat", "gap"):
            raise ValueError("dos_mode must be 'stale_repeat' or 'gap'")
        if self.dos_start_tick < 1:
            raise ValueError("dos_start_tick must be >= 1")
        for slug, n in self.instance_counts.items():
            ScenarioKind(slug)
            if n <= 0:
                raise ValueError(f"instance count for {slug} must be positive")


@dataclass(frozen=True)
class PipelineConfig:
    """Preprocessing choices: threshold, split, normalization order, features."""

    threshold_n: int | None = None  # None -> min per-file count after the rate warm-up drop
    split_ratio: float = 0.8
    seed: int = 0
    paper_faithful_order: bool = False  # fit the scaler before splitting
    feature_mask: tuple[str, ...] | None = None  # None -> all 10 features

    def __post_init__(self):
        if not (0 < self.split_ratio < 1):
            raise ValueError("split_ratio must be in (0,1)")
        if self.threshold_n is not None and self.threshold_n < 1:
            raise ValueError("threshold_n must be >= 1")


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters for the six classifiers. One seed fixes every stochastic choice."""

    knn_k: int = 5
    rf_trees: int = 10
    rf_max_depth: int | None = None
    dt_max_depth: int | None = None
    dt_min_leaf: int = 1
    lr_learning_rate: float = 0.5
    lr_epochs: int = 300
    svm_c: float = 1.0
    svm_epochs: int = 200
    svm_learning_rate: float = 0.01
    seed: int = 0

    def __post_init__(self):
        positives = {
            "knn_k": self.knn_k,
            "rf_trees": self.rf_trees,
            "dt_min_leaf": self.dt_min_leaf,
            "lr_learning_rate": self.lr_learning_rate,
            "lr_epochs": self.lr_epochs,
            "svm_c": self.svm_c,
            "svm_epochs": self.svm_epochs,
            "svm_learning_rate": self.svm_learning_rate,
        }
        for name, value in positives.items():
            if value <= 0:
                raise ValueError(f"{name} must be positive")
        for name, value in (("rf_max_depth", self.rf_max_depth), ("dt_max_depth", self.dt_max_depth)):
            if value is not None and value < 1:
                raise ValueError(f"{name} must be >= 1 or None")


def _load_raw(path: str | Path) -> dict:
    text = Path(path).read_text()
    if str(path).endswith((".yaml", ".yml")):
        import yaml

        data = yaml.safe_load(text)
    else:
        data = json.loads(text)
    if not isinstance(data, dict):
        raise ValueError(f"config file {path} must hold a mapping")
    return data


def _build(cls, data: dict):
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ValueError(f"unknown {cls.__name__} keys: {sorted(unknown)}")
    coerced = dict(data)
    # JSON/YAML hand us lists where the dataclasses want tuples
    for f in dataclasses.fields(cls):
        if f.name in coerced and isinstance(coerced[f.name], list):
            coerced[f.name] = tuple(
                tuple(v) if isinstance(v, list) else v for v in coerced[f.name]
            )
        if f.name in coerced and isinstance(coerced[f.name], dict):
            coerced[f.name] = {
                k: tuple(v) if isinstance(v, list) else v for k, v in coerced[f.name].items()
            }
    return cls(**coerced)


def load_plant_config(path: str | Path) -> tuple[PlantParams, InjectionParams, EpisodeConfig]:
    """Read one declarative config file; absent sections keep their defaults."""
    data = _load_raw(path)
    plant = _build(PlantParams, data.get("plant", {}))
    injection = _build(InjectionParams, data.get("injection", {}))
    episodes = _build(EpisodeConfig, data.get("episodes", {}))
    return plant, injection, episodes


def default_config_dict() -> dict:
    """The full config surface with default values, for documentation dumps."""
    return {
        "plant": dataclasses.asdict(PlantParams()),
        "injection": dataclasses.asdict(InjectionParams()),
        "episodes": dataclasses.asdict(EpisodeConfig()),
    }
