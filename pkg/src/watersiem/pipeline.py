"""Preprocessing: instances -> features -> balanced, normalized, split dataset.

Steps, in order: extract the per-timestamp instances from each log file,
derive the depth register's rate of change over ten polling frames, keep
only the first N instances of each file to undo the class imbalance,
serialize everything into one row-aligned set, min-max normalize, and split
80/20. Normalization is fitted on the training portion by default; the
``paper_faithful_order`` flag restores fit-before-split for comparison runs.

Labels come in three aligned views: the scenario itself, the component it
affects, and the plain normal/anomaly flag.
"""
from __future__ import annotations

import hashlib
import json
import logging
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .config import PipelineConfig
from .episode import scenario_from_filename
from .errors import PipelineError
from .logs import ColumnMapping, LogRow, read_log, row_timestamp
from .registers import REG_COUNT, unpack_reg2, unpack_reg3
from .scenarios import ScenarioKind, scenario_binary, scenario_component

logger = logging.getLogger(__name__)

FEATURE_NAMES = ("s0", "s1", "s2", "s3", "pump1", "pump2",
                 "pump1_valve", "pump2_valve", "depth", "rate")
RATE_LAG = 10  # frames between the two samples of the difference quotient


@dataclass(frozen=True)
class Instance:
    """The three informative registers at one timestamp."""

    timestamp_s: float
    reg2: int
    reg3: int
    reg4: int
    source_file: str
    scenario: ScenarioKind


@dataclass
class LabeledSet:
    """Row-aligned features plus the three label views and per-row provenance."""

    X: np.ndarray
    y_scenario: list[str]
    y_component: list[str]
    y_binary: list[str]
    provenance: list[tuple[str, int]]
    feature_names: tuple[str, ...] = FEATURE_NAMES

    def __len__(self) -> int:
        return len(self.y_scenario)

    def labels(self, task: str) -> list[str]:
        return relabel(self, task)


def extract_instances(rows: Sequence[LogRow], source_file: str,
                      scenario: ScenarioKind) -> list[Instance]:
    """One instance per 10-row timestamp group; registers 2..4 pulled out."""
    instances = []
    if len(rows) % REG_COUNT:
        raise PipelineError(
            f"{source_file}: {len(rows)} rows is not a whole number of {REG_COUNT}-row instances")
    t0 = row_timestamp(rows[0]) if rows else None
    for i in range(0, len(rows), REG_COUNT):
        group = rows[i:i + REG_COUNT]
        stamp = (group[0].date, group[0].time)
        regs: dict[int, int] = {}
        for row in group:
            if (row.date, row.time) != stamp:
                raise PipelineError(
                    f"{source_file}: instance at {stamp[0]} {group[0].format_time()} "
                    f"is incomplete")
            regs[row.register] = row.value
        missing = set(range(REG_COUNT)) - set(regs)
        if missing:
            raise PipelineError(
                f"{source_file}: instance at {stamp[0]} {group[0].format_time()} "
                f"missing register(s) {sorted(missing)}")
        ts = (row_timestamp(group[0]) - t0).total_seconds()
        instances.append(Instance(timestamp_s=ts, reg2=regs[2], reg3=regs[3], reg4=regs[4],
                                  source_file=source_file, scenario=scenario))
    return instances


def rate_of_change(instances: Sequence[Instance], i: int) -> float:
    """Difference quotient of the depth register over ten polling frames."""
    if i < RATE_LAG:
        raise PipelineError(f"rate undefined for instance {i}: needs {RATE_LAG} prior frames")
    a, b = instances[i], instances[i - RATE_LAG]
    if a.source_file != b.source_file:
        raise PipelineError("rate window must not cross files")
    delta_t = a.timestamp_s - b.timestamp_s
    if delta_t <= 0:
        raise PipelineError(
            f"corrupt log {a.source_file}: zero or negative time delta at instance {i}")
    return (a.reg4 - b.reg4) / delta_t


def instance_features(instances: Sequence[Instance]) -> np.ndarray:
    """Feature rows for instances RATE_LAG.. (earlier ones lack a defined rate)."""
    out = []
    for i in range(RATE_LAG, len(instances)):
        inst = instances[i]
        s0, s1, s2, s3 = unpack_reg2(inst.reg2)
        pump1, pump2, p1v, p2v = unpack_reg3(inst.reg3)
        out.append((s0, s1, s2, s3, pump1, pump2, p1v, p2v,
                    float(inst.reg4), rate_of_change(instances, i)))
    return np.array(out, dtype=float).reshape(-1, len(FEATURE_NAMES))


def apply_threshold(per_file: dict[str, list], n: int) -> dict[str, list]:
    """Keep only the first ``n`` entries of each file's list."""
    if n < 1:
        raise ValueError(f"threshold must be >= 1, got {n}")
    out = {}
    for name, entries in per_file.items():
        if len(entries) < n:
            logger.warning("%s has only %d instances, below threshold %d", name, len(entries), n)
        out[name] = entries[:n]
    return out


def serialize(per_file: dict[str, tuple[np.ndarray, ScenarioKind]]) -> LabeledSet:
    """Concatenate files in lexicographic id order into one labeled set."""
    X_parts, y, prov = [], [], []
    for name in sorted(per_file):
        features, scenario = per_file[name]
        X_parts.append(features)
        y.extend([scenario.value] * len(features))
        prov.extend((name, i) for i in range(len(features)))
    if not X_parts:
        raise PipelineError("no files to serialize")
    X = np.vstack(X_parts)
    kinds = [ScenarioKind(v) for v in y]
    return LabeledSet(
        X=X,
        y_scenario=y,
        y_component=[scenario_component(k).value for k in kinds],
        y_binary=[scenario_binary(k) for k in kinds],
        provenance=prov,
    )


def relabel(dataset: LabeledSet, task: str) -> list[str]:
    if task == "scenario":
        return list(dataset.y_scenario)
    if task == "component":
        return list(dataset.y_component)
    if task == "binary":
        return list(dataset.y_binary)
    raise ValueError(f"unknown task {task!r}; expected binary|component|scenario")


def _subset(dataset: LabeledSet, idx: Sequence[int]) -> LabeledSet:
    return LabeledSet(
        X=dataset.X[list(idx)],
        y_scenario=[dataset.y_scenario[i] for i in idx],
        y_component=[dataset.y_component[i] for i in idx],
        y_binary=[dataset.y_binary[i] for i in idx],
        provenance=[dataset.provenance[i] for i in idx],
        feature_names=dataset.feature_names,
    )


def split(dataset: LabeledSet, ratio: float = 0.8, seed: int = 0) -> tuple[LabeledSet, LabeledSet]:
    """Stratified-by-scenario split; deterministic under the seed, disjoint, exhaustive."""
    if not (0 < ratio < 1):
        raise ValueError("ratio must be in (0,1)")
    rng = random.Random(seed)
    by_class: dict[str, list[int]] = {}
    for i, label in enumerate(dataset.y_scenario):
        by_class.setdefault(label, []).append(i)
    train_idx: list[int] = []
    test_idx: list[int] = []
    for label in sorted(by_class):
        idx = by_class[label][:]
        rng.shuffle(idx)
        cut = int(ratio * len(idx) + 0.5)
        train_idx.extend(idx[:cut])
        test_idx.extend(idx[cut:])
    train_idx.sort()
    test_idx.sort()
    return _subset(dataset, train_idx), _subset(dataset, test_idx)


@dataclass(frozen=True)
class MinMaxScaler:
    """Per-feature min/max fitted on the training set; constant features map to 0."""

    minimum: tuple[float, ...]
    maximum: tuple[float, ...]

    def transform(self, X: np.ndarray, clip: bool = True) -> np.ndarray:
        lo = np.asarray(self.minimum)
        span = np.asarray(self.maximum) - lo
        safe = np.where(span > 0, span, 1.0)
        out = (X - lo) / safe
        out[:, span == 0] = 0.0
        if clip:
            out = np.clip(out, 0.0, 1.0)
        return out

    def to_dict(self) -> dict:
        return {"min": list(self.minimum), "max": list(self.maximum)}

    @classmethod
    def from_dict(cls, data: dict) -> "MinMaxScaler":
        return cls(minimum=tuple(data["min"]), maximum=tuple(data["max"]))


def fit_scaler(X: np.ndarray) -> MinMaxScaler:
    if len(X) == 0:
        raise PipelineError("cannot fit a scaler on an empty training set")
    return MinMaxScaler(minimum=tuple(X.min(axis=0)), maximum=tuple(X.max(axis=0)))


def normalize(train: LabeledSet, test: LabeledSet) -> tuple[LabeledSet, LabeledSet, MinMaxScaler]:
    """Min-max fitted on train only; test values outside the train range clip to [0,1]."""
    scaler = fit_scaler(train.X)
    train_out = LabeledSet(scaler.transform(train.X), train.y_scenario, train.y_component,
                           train.y_binary, train.provenance, train.feature_names)
    test_out = LabeledSet(scaler.transform(test.X), test.y_scenario, test.y_component,
                          test.y_binary, test.provenance, test.feature_names)
    return train_out, test_out, scaler


@dataclass
class PipelineResult:
    train: LabeledSet
    test: LabeledSet
    scaler: MinMaxScaler
    config: PipelineConfig
    threshold_used: int
    per_file_counts: dict[str, int]
    dataset_hash: str = ""


def _apply_mask(dataset: LabeledSet, mask: tuple[str, ...]) -> LabeledSet:
    cols = [FEATURE_NAMES.index(name) for name in mask]
    return LabeledSet(dataset.X[:, cols], dataset.y_scenario, dataset.y_component,
                      dataset.y_binary, dataset.provenance, tuple(mask))


def run_pipeline(per_file_instances: dict[str, list[Instance]],
                 config: PipelineConfig | None = None) -> PipelineResult:
    """All six steps over already-extracted instances keyed by file id."""
    config = config or PipelineConfig()
    featured = {
        name: (instance_features(instances), instances[0].scenario)
        for name, instances in sorted(per_file_instances.items())
        if instances
    }
    if not featured:
        raise PipelineError("no instances supplied")
    counts = {name: len(feats) for name, (feats, _) in featured.items()}
    usable = {n: c for n, c in counts.items() if c > 0}
    if not usable:
        raise PipelineError("every file is shorter than the rate warm-up window")
    threshold = config.threshold_n if config.threshold_n is not None else min(usable.values())
    trimmed = apply_threshold({n: f for n, (f, _) in featured.items()}, threshold)
    dataset = serialize({n: (trimmed[n], featured[n][1]) for n in featured})
    if config.feature_mask:
        dataset = _apply_mask(dataset, config.feature_mask)

    if config.paper_faithful_order:
        scaler = fit_scaler(dataset.X)
        dataset = LabeledSet(scaler.transform(dataset.X), dataset.y_scenario,
                             dataset.y_component, dataset.y_binary, dataset.provenance,
                             dataset.feature_names)
        train, test = split(dataset, config.split_ratio, config.seed)
    else:
        train, test = split(dataset, config.split_ratio, config.seed)
        train, test, scaler = normalize(train, test)

    result = PipelineResult(train=train, test=test, scaler=scaler, config=config,
                            threshold_used=threshold, per_file_counts=counts)
    result.dataset_hash = dataset_hash(result)
    return result


def load_instances_dir(data_dir: str | Path,
                       mapping: ColumnMapping | None = None) -> dict[str, list[Instance]]:
    """Read every CSV in a directory, inferring each file's scenario from its name
    unless the mapping carries explicit per-file labels."""
    data_dir = Path(data_dir)
    per_file: dict[str, list[Instance]] = {}
    paths = sorted(data_dir.glob("*.csv"))
    if not paths:
        raise PipelineError(f"no CSV logs found in {data_dir}")
    for path in paths:
        if mapping and mapping.scenario_by_file:
            if path.name not in mapping.scenario_by_file:
                continue
            scenario = ScenarioKind(mapping.scenario_by_file[path.name])
        else:
            scenario = scenario_from_filename(path.name)
        rows = read_log(path, mapping)
        per_file[path.name] = extract_instances(rows, path.name, scenario)
    if not per_file:
        raise PipelineError(f"no usable CSV logs in {data_dir}")
    return per_file


# ---------------------------------------------------------------------------
# persistence

def _float_cell(x: float) -> str:
    return repr(float(x))


def save_labeled_set(dataset: LabeledSet, path: str | Path) -> Path:
    path = Path(path)
    with path.open("w") as fh:
        header = list(dataset.feature_names) + ["y_scenario", "y_component", "y_binary",
                                                "source_file", "row_index"]
        fh.write(",".join(header) + "\n")
        for i in range(len(dataset)):
            cells = [_float_cell(v) for v in dataset.X[i]]
            src, idx = dataset.provenance[i]
            cells += [dataset.y_scenario[i], dataset.y_component[i], dataset.y_binary[i],
                      src, str(idx)]
            fh.write(",".join(cells) + "\n")
    return path


def load_labeled_set(path: str | Path) -> LabeledSet:
    path = Path(path)
    with path.open() as fh:
        header = fh.readline().rstrip("\n").split(",")
        n_features = header.index("y_scenario")
        X, y_s, y_c, y_b, prov = [], [], [], [], []
        for line in fh:
            cells = line.rstrip("\n").split(",")
            X.append([float(v) for v in cells[:n_features]])
            y_s.append(cells[n_features])
            y_c.append(cells[n_features + 1])
            y_b.append(cells[n_features + 2])
            prov.append((cells[n_features + 3], int(cells[n_features + 4])))
    return LabeledSet(X=np.array(X, dtype=float), y_scenario=y_s, y_component=y_c,
                      y_binary=y_b, provenance=prov,
                      feature_names=tuple(header[:n_features]))


def dataset_hash(result: PipelineResult) -> str:
    """Content hash over both splits; identical inputs and seed give identical hashes."""
    digest = hashlib.sha256()
    for part in (result.train, result.test):
        for i in range(len(part)):
            digest.update(",".join(_float_cell(v) for v in part.X[i]).encode())
            digest.update(part.y_scenario[i].encode())
            digest.update(f"{part.provenance[i][0]}:{part.provenance[i][1]}".encode())
    return digest.hexdigest()


def save_sidecar(result: PipelineResult, path: str | Path) -> Path:
    path = Path(path)
    doc = {
        "feature_names": list(result.train.feature_names),
        "scaler": result.scaler.to_dict(),
        "threshold_used": result.threshold_used,
        "per_file_counts": result.per_file_counts,
        "dataset_hash": result.dataset_hash,
        "config": {
            "threshold_n": result.config.threshold_n,
            "split_ratio": result.config.split_ratio,
            "seed": result.config.seed,
            "paper_faithful_order": result.config.paper_faithful_order,
            "feature_mask": list(result.config.feature_mask) if result.config.feature_mask else None,
        },
    }
    path.write_text(json.dumps(doc, indent=2, sort_keys=True))
    return path


def load_sidecar(path: str | Path) -> tuple[MinMaxScaler, dict]:
    doc = json.loads(Path(path).read_text())
    return MinMaxScaler.from_dict(doc["scaler"]), doc
