"""Alert policies, accuracy bookkeeping, and the three-experiment harness.

Accuracy follows the four-bucket decomposition (true/false positive and
negative) with one explicit extra bucket: an anomaly routed to the *wrong*
anomaly class is neither a hit nor a miss-to-normal, so it is counted
separately and, by default, kept in the denominator. A strict mode drops
that bucket from the denominator to mirror the four-term formula verbatim.

A report carries one or two (label, probability) pairs: the single best
class, the two best, or one-unless-unsure under a confidence threshold.
Only classes with probability strictly above zero count as "probable".
"""
from __future__ import annotations

import datetime as dt
import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import EvaluationError
from .models.base import Model
from .scenarios import BINARY_NORMAL, AffectedComponent, ScenarioKind, scenario_component

NORMAL_LABELS = {
    "binary": BINARY_NORMAL,
    "component": AffectedComponent.NONE.value,
    "scenario": ScenarioKind.NORMAL.value,
}


@dataclass(frozen=True)
class AlertPolicy:
    kind: str  # binary | component | top1 | top2 | confidence
    tau: float | None = None

    def __post_init__(self):
        if self.kind not in ("binary", "component", "top1", "top2", "confidence"):
            raise ValueError(f"unknown policy kind {self.kind!r}")
        if self.kind == "confidence":
            if self.tau is None or not (0 < self.tau < 1):
                raise ValueError("confidence policy needs 0 < tau < 1")
        elif self.tau is not None:
            raise ValueError(f"policy {self.kind} takes no tau")

    @property
    def task(self) -> str:
        return self.kind if self.kind in ("binary", "component") else "scenario"

    def describe(self) -> str:
        return f"confidence:{self.tau}" if self.kind == "confidence" else self.kind

    @classmethod
    def parse(cls, text: str) -> "AlertPolicy":
        if text.startswith("confidence"):
            _, _, tau = text.partition(":")
            return cls("confidence", float(tau) if tau else 0.85)
        return cls(text)


@dataclass(frozen=True)
class AlertReport:
    timestamp_s: float
    policy: str
    predictions: tuple[tuple[str, float], ...]  # sorted by probability, best first
    affected_component: str
    is_anomaly: bool

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(label for label, _ in self.predictions)


@dataclass
class ConfusionBuckets:
    tp: int = 0
    tn: int = 0
    fp: int = 0
    fn: int = 0
    misrouted: int = 0  # anomaly predicted as a different anomaly

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn + self.misrouted


@dataclass
class EvalMetrics:
    policy: str
    n: int
    accuracy: float
    buckets: ConfusionBuckets
    per_class_confusion: dict[str, dict[str, int]]
    probable_count_histogram: dict[str, int] = field(default_factory=dict)
    rescue_table: dict[str, dict] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "policy": self.policy,
            "n": self.n,
            "accuracy": self.accuracy,
            "buckets": {"tp": self.buckets.tp, "tn": self.buckets.tn, "fp": self.buckets.fp,
                        "fn": self.buckets.fn, "misrouted": self.buckets.misrouted},
            "per_class_confusion": self.per_class_confusion,
            "probable_count_histogram": self.probable_count_histogram,
            "rescue_table": self.rescue_table,
        }


def confusion_buckets(predictions: Sequence[str], truths: Sequence[str],
                      normal_label: str) -> ConfusionBuckets:
    if len(predictions) != len(truths):
        raise EvaluationError(f"{len(predictions)} predictions vs {len(truths)} truths")
    b = ConfusionBuckets()
    for pred, truth in zip(predictions, truths):
        if truth == normal_label:
            if pred == normal_label:
                b.tn += 1
            else:
                b.fp += 1
        else:
            if pred == truth:
                b.tp += 1
            elif pred == normal_label:
                b.fn += 1
            else:
                b.misrouted += 1
    return b


def overall_accuracy(predictions: Sequence[str], truths: Sequence[str],
                     normal_label: str = BINARY_NORMAL,
                     strict_paper_buckets: bool = False) -> float:
    """(TP + TN) / total; strict mode excludes wrong-anomaly routings from the total."""
    if not truths:
        raise EvaluationError("empty evaluation set")
    b = confusion_buckets(predictions, truths, normal_label)
    denominator = b.tp + b.tn + b.fp + b.fn if strict_paper_buckets else b.total
    if denominator == 0:
        raise EvaluationError("no instances in any accuracy bucket")
    return (b.tp + b.tn) / denominator


def rank_classes(proba: np.ndarray, classes: Sequence[str]) -> list[int]:
    """Class indices sorted by probability descending, ties to the lowest index."""
    order = np.lexsort((np.arange(len(classes)), -np.asarray(proba)))
    return [int(i) for i in order]


def make_report(proba: np.ndarray | dict[str, float], policy: AlertPolicy,
                timestamp_s: float, classes: Sequence[str] | None = None) -> AlertReport:
    """Select the 1-2 reported classes from one probability distribution."""
    if isinstance(proba, dict):
        classes = sorted(proba)
        vector = np.array([proba[c] for c in classes], dtype=float)
    else:
        vector = np.asarray(proba, dtype=float)
        if classes is None:
            raise EvaluationError("class order required with an array distribution")
    if vector.sum() <= 0:
        raise EvaluationError("degenerate distribution: all probabilities zero")

    order = rank_classes(vector, classes)
    nonzero = [i for i in order if vector[i] > 0]
    if policy.kind in ("binary", "component", "top1"):
        chosen = nonzero[:1]
    elif policy.kind == "top2":
        chosen = nonzero[:2]
    else:  # confidence
        chosen = nonzero[:1] if vector[nonzero[0]] >= policy.tau else nonzero[:2]

    predictions = tuple((classes[i], float(vector[i])) for i in chosen)
    top = classes[chosen[0]]
    normal_label = NORMAL_LABELS[policy.task]
    if policy.task == "scenario":
        try:
            component = scenario_component(ScenarioKind(top)).value
        except ValueError:  # labels outside the catalog (custom datasets)
            component = "unknown"
    elif policy.task == "component":
        component = top
    else:
        component = AffectedComponent.NONE.value
    return AlertReport(timestamp_s=timestamp_s, policy=policy.describe(),
                       predictions=predictions, affected_component=component,
                       is_anomaly=top != normal_label)


def policy_accuracy(model: Model, X: np.ndarray, truths: Sequence[str],
                    policy: AlertPolicy) -> EvalMetrics:
    """Accuracy where a report is correct if the truth appears among its labels.

    The confusion buckets and matrix are always computed on the top-ranked
    prediction, so bucket totals tie out to the test size for every policy.
    """
    if len(X) != len(truths):
        raise EvaluationError(f"{len(X)} rows vs {len(truths)} labels")
    if len(truths) == 0:
        raise EvaluationError("empty evaluation set")
    normal_label = NORMAL_LABELS[policy.task]
    proba = model.predict_proba(X)
    correct = 0
    top1: list[str] = []
    confusion: dict[str, dict[str, int]] = {}
    for row, truth in zip(proba, truths):
        report = make_report(row, policy, 0.0, model.classes_)
        if truth in report.labels:
            correct += 1
        top = report.labels[0]
        top1.append(top)
        confusion.setdefault(truth, {})
        confusion[truth][top] = confusion[truth].get(top, 0) + 1
    buckets = confusion_buckets(top1, truths, normal_label)
    return EvalMetrics(policy=policy.describe(), n=len(truths),
                       accuracy=correct / len(truths), buckets=buckets,
                       per_class_confusion=confusion)


HISTOGRAM_BUCKETS = ("1", "2", "3", "4+")


def probable_count_histogram(model: Model, X: np.ndarray) -> dict[str, int]:
    """Per instance, how many classes carry strictly positive probability."""
    histogram = {b: 0 for b in HISTOGRAM_BUCKETS}
    for row in model.predict_proba(X):
        count = int(np.sum(row > 0))
        histogram[str(count) if count < 4 else "4+"] += 1
    return histogram


def max_probable_count(model: Model, X: np.ndarray) -> int:
    return max(int(np.sum(row > 0)) for row in model.predict_proba(X))


def rescue_analysis(model: Model, X: np.ndarray, truths: Sequence[str]) -> dict[str, dict]:
    """Per true class: top-1 misses, how many the second-ranked class rescues,
    and where the wrong top-1 predictions went."""
    proba = model.predict_proba(X)
    table: dict[str, dict] = {}
    for row, truth in zip(proba, truths):
        entry = table.setdefault(truth, {"misclassified": 0, "rescued_by_second": 0,
                                         "misdirected_to": {}})
        order = rank_classes(row, model.classes_)
        top = model.classes_[order[0]]
        if top == truth:
            continue
        entry["misclassified"] += 1
        entry["misdirected_to"][top] = entry["misdirected_to"].get(top, 0) + 1
        if len(order) > 1 and model.classes_[order[1]] == truth and row[order[1]] > 0:
            entry["rescued_by_second"] += 1
    return table


def infer_model_task(model: Model) -> str:
    """Which label view a model was trained on, judged by its class list."""
    labels = set(model.classes_)
    if labels == {BINARY_NORMAL, "anomaly"}:
        return "binary"
    if labels <= {c.value for c in AffectedComponent}:
        return "component"
    return "scenario"


class AlertEmitter:
    """Serializes reports to operator-facing events with a monotone sequence number."""

    def __init__(self, base_dt: dt.datetime | None = None):
        self.base_dt = base_dt or dt.datetime(2018, 1, 1)
        self._seq = 0

    def emit(self, report: AlertReport) -> dict:
        self._seq += 1
        stamp = self.base_dt + dt.timedelta(seconds=report.timestamp_s)
        return {
            "event_seq": self._seq,
            "timestamp": stamp.isoformat(timespec="milliseconds"),
            "t_s": report.timestamp_s,
            "policy": report.policy,
            "predictions": [{"label": label, "probability": round(p, 4)}
                            for label, p in report.predictions],
            "affected_component": report.affected_component,
            "is_anomaly": report.is_anomaly,
        }


# ---------------------------------------------------------------------------
# experiment harness

ALGORITHM_ORDER = ("logistic_regression", "naive_bayes", "knn", "svm",
                   "decision_tree", "random_forest")
PROBABILISTIC_ALGORITHMS = ("decision_tree", "knn", "random_forest")


def run_experiments(train_set, test_set, cfg=None,
                    algorithms: Sequence[str] = ALGORITHM_ORDER) -> dict:
    """The full protocol: binary and component classification, then the four
    scenario-alerting trials plus the probable-count and rescue analyses."""
    from .models import train as train_model

    results: dict = {"experiment1_binary": {}, "experiment2_component": {},
                     "experiment3_scenario": {}, "probable_counts": {}, "rescue": {}}
    scenario_models = {}
    for task, key in (("binary", "experiment1_binary"), ("component", "experiment2_component")):
        policy = AlertPolicy(task)
        for algorithm in algorithms:
            model = train_model(algorithm, train_set.X, train_set.labels(task), cfg)
            metrics = policy_accuracy(model, test_set.X, test_set.labels(task), policy)
            results[key][algorithm] = metrics.to_dict()

    trials = [AlertPolicy("top1"), AlertPolicy("top2"),
              AlertPolicy("confidence", 0.75), AlertPolicy("confidence", 0.85)]
    for algorithm in algorithms:
        model = train_model(algorithm, train_set.X, train_set.labels("scenario"), cfg)
        scenario_models[algorithm] = model
        results["experiment3_scenario"][algorithm] = {
            policy.describe(): policy_accuracy(model, test_set.X,
                                               test_set.labels("scenario"), policy).to_dict()
            for policy in trials
        }

    for algorithm in PROBABILISTIC_ALGORITHMS:
        model = scenario_models[algorithm]
        results["probable_counts"][algorithm] = {
            "max_probable": max_probable_count(model, test_set.X),
            "histogram": probable_count_histogram(model, test_set.X),
        }
    results["rescue"]["knn"] = rescue_analysis(scenario_models["knn"], test_set.X,
                                               test_set.labels("scenario"))
    return results


def accuracy_bar_rows(results: dict) -> list[tuple[str, str, float]]:
    """(chart, algorithm, accuracy) rows for external plotting of the figures."""
    rows = []
    for key, chart in (("experiment1_binary", "binary"), ("experiment2_component", "component")):
        for algorithm, metrics in results[key].items():
            rows.append((chart, algorithm, metrics["accuracy"]))
    for algorithm, by_policy in results["experiment3_scenario"].items():
        for policy, metrics in by_policy.items():
            rows.append((f"scenario_{policy}", algorithm, metrics["accuracy"]))
    return rows


def write_experiment_outputs(results: dict, out_dir) -> None:
    from pathlib import Path

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "metrics.json").write_text(json.dumps(results, indent=2, sort_keys=True))
    with (out_dir / "accuracy_by_algorithm.csv").open("w") as fh:
        fh.write("chart,algorithm,accuracy\n")
        for chart, algorithm, acc in accuracy_bar_rows(results):
            fh.write(f"{chart},{algorithm},{acc:.6f}\n")
    (out_dir / "report.txt").write_text(render_report(results))


def render_report(results: dict) -> str:
    lines = []
    for key, title in (("experiment1_binary", "Experiment 1: anomaly yes/no"),
                       ("experiment2_component", "Experiment 2: affected component")):
        lines.append(title)
        for algorithm, metrics in results[key].items():
            lines.append(f"  {algorithm:24s} accuracy={metrics['accuracy']:.4f}")
        lines.append("")
    lines.append("Experiment 3: scenario alerting trials")
    for algorithm, by_policy in results["experiment3_scenario"].items():
        cells = "  ".join(f"{policy}={metrics['accuracy']:.4f}"
                          for policy, metrics in by_policy.items())
        lines.append(f"  {algorithm:24s} {cells}")
    lines.append("")
    lines.append("Probable-scenario counts per instance")
    for algorithm, info in results.get("probable_counts", {}).items():
        lines.append(f"  {algorithm:24s} max={info['max_probable']} histogram={info['histogram']}")
    return "\n".join(lines) + "\n"
