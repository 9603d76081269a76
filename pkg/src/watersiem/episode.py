"""Closed-loop episode generation: simulate, corrupt, control, encode, log.

One episode is one scenario recorded for a fixed number of 0.1 s polls,
reproducing the per-scenario class imbalance of the original recordings by
default. Identical (scenario, count, seed) always produce byte-identical
files.
"""
from __future__ import annotations

import datetime as dt
import random
from pathlib import Path

from .config import EpisodeConfig, InjectionParams, PlantParams
from .inject import ScenarioInjector
from .logs import LogRow, PollLogger, write_log
from .plant import IDLE_COMMAND, PlantState, plc_control, read_true_sensors, step
from .registers import encode_registers
from .scenarios import SCENARIO_TABLE, ScenarioKind, scenario_index


def episode_filename(scenario: ScenarioKind) -> str:
    return f"{scenario_index(scenario):02d}_{scenario.value}.csv"


def scenario_from_filename(name: str) -> ScenarioKind:
    stem = Path(name).stem
    slug = stem.split("_", 1)[1] if stem[:2].isdigit() and "_" in stem else stem
    return ScenarioKind(slug)


def initial_state(scenario: ScenarioKind, seed: int, plant: PlantParams,
                  episodes: EpisodeConfig) -> PlantState:
    """Seeded starting point; each scenario gets its own operating band."""
    rng = random.Random((seed * 1_000_003 + scenario_index(scenario)) * 31 + 7)
    main_base, secondary_base = episodes.init_levels[scenario.value]
    jitter = episodes.init_jitter_l
    main = main_base + rng.uniform(-jitter, jitter)
    secondary = secondary_base + rng.uniform(-jitter, jitter)
    return PlantState(
        t_s=0.0,
        main_volume_l=min(max(main, 0.0), plant.main_capacity_l),
        secondary_volume_l=min(max(secondary, 0.0), plant.secondary_capacity_l),
        recovery_volume_l=episodes.initial_recovery_l,
        drain_main_open=episodes.drains_open,
        drain_secondary_open=episodes.drains_open,
    )


def run_episode(scenario: ScenarioKind, n_instances: int, seed: int,
                plant: PlantParams | None = None,
                injection: InjectionParams | None = None,
                episodes: EpisodeConfig | None = None) -> list[LogRow]:
    """Run the closed loop for ``n_instances`` polls and return the log rows.

    Denial of service leaves the readings alone and instead times the poll
    out from ``dos_start_tick`` onwards, so the logger replays stale values
    (or leaves gaps, per config).
    """
    if n_instances <= 0:
        raise ValueError(f"n_instances must be positive, got {n_instances}")
    plant = plant or PlantParams()
    injection = injection or InjectionParams()
    episodes = episodes or EpisodeConfig()

    state = initial_state(scenario, seed, plant, episodes)
    cmd = IDLE_COMMAND
    injector = ScenarioInjector(seed, injection, plant.poll_dt_s)
    poll_logger = PollLogger(dt.datetime.fromisoformat(episodes.base_datetime),
                             plant.poll_dt_s, episodes.dos_mode)
    dos = scenario is ScenarioKind.DOS

    rows: list[LogRow] = []
    for tick in range(n_instances):
        state = step(state, plant, cmd, plant.poll_dt_s)
        true_reading = read_true_sensors(state, plant)
        if tick == 0:
            injector.activate(scenario, true_reading, state.t_s)
        sensed = injector.apply(true_reading, state.t_s)
        cmd = plc_control(sensed, cmd, plant)
        rf = encode_registers(sensed, cmd)
        timed_out = dos and tick >= episodes.dos_start_tick
        rows.extend(poll_logger.tick(None if timed_out else rf.regs, tick))
    return rows


def simulate_all(out_dir: str | Path, seed: int,
                 scenarios: list[ScenarioKind] | None = None,
                 counts: dict[ScenarioKind, int] | None = None,
                 plant: PlantParams | None = None,
                 injection: InjectionParams | None = None,
                 episodes: EpisodeConfig | None = None) -> list[Path]:
    """Write one log file per scenario (catalog order); returns the paths."""
    episodes = episodes or EpisodeConfig()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    chosen = scenarios if scenarios is not None else list(SCENARIO_TABLE)
    paths = []
    for scenario in sorted(chosen, key=scenario_index):
        if counts and scenario in counts:
            n = counts[scenario]
        else:
            n = episodes.instance_counts.get(scenario.value,
                                             SCENARIO_TABLE[scenario].default_instances)
        rows = run_episode(scenario, n, seed, plant, injection, episodes)
        paths.append(write_log(rows, out_dir / episode_filename(scenario)))
    return paths
