"""Acceptance suite: one test per release criterion, one printed line each.

Run with ``pytest tests/test_acceptance.py -s`` to watch the pass/fail lines.
The conditional real-dataset check (P11) activates when WATERSIEM_REAL_DATA
points at a directory holding the recordings plus a mapping.json.
"""
import json
import os
import random
import time
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from watersiem.config import EpisodeConfig, InjectionParams, PipelineConfig, PlantParams, TrainConfig
from watersiem.episode import initial_state, simulate_all
from watersiem.evaluate import (AlertPolicy, max_probable_count, overall_accuracy,
                                policy_accuracy, probable_count_histogram, rescue_analysis)
from watersiem.inject import ScenarioInjector
from watersiem.logs import ColumnMapping
from watersiem.models import model_to_json, train
from watersiem.models.logistic import add_bias, cross_entropy_grad, cross_entropy_loss
from watersiem.modbus import build_request, build_response, parse_request, parse_response
from watersiem.pipeline import (Instance, load_instances_dir, rate_of_change, run_pipeline)
from watersiem.plant import plc_control, read_true_sensors, step, volume_to_step
from watersiem.registers import decode_registers, encode_registers
from watersiem.plant import ActuatorCommand, SensorReading
from watersiem.scenarios import SCENARIO_TABLE, ScenarioKind

SEED = 7


def report(name: str, ok: bool, detail: str = "") -> None:
    print(f"{name}: {'PASS' if ok else 'FAIL'}{' - ' + detail if detail else ''}")
    assert ok, f"{name} failed: {detail}"


def test_p1_rate_of_change_oracle():
    rng = random.Random(1)
    started = time.perf_counter()
    worst = 0.0
    for _ in range(1000):
        series = [rng.randrange(0, 10001) for _ in range(20)]
        instances = [Instance(timestamp_s=i * 0.1, reg2=0, reg3=0, reg4=v,
                              source_file="f", scenario=ScenarioKind.NORMAL)
                     for i, v in enumerate(series)]
        i = rng.randrange(10, 20)
        got = rate_of_change(instances, i)
        # exact-rational independent recomputation
        expected = float(Fraction(instances[i].reg4 - instances[i - 10].reg4)
                         / (Fraction(instances[i].timestamp_s) - Fraction(instances[i - 10].timestamp_s)))
        scale = max(abs(expected), 1e-9)
        worst = max(worst, abs(got - expected) / scale)
    elapsed = time.perf_counter() - started
    report("P1", worst < 1e-12 and elapsed < 1.0,
           f"worst rel err {worst:.2e}, {elapsed * 1000:.0f} ms for 1000 series")


def test_p2_accuracy_formula_equivalence():
    rng = random.Random(2)
    labels = ["normal", "spoofing", "dos", "plastic_bag"]
    mismatches = 0
    for _ in range(50):
        n = rng.randrange(5, 60)
        truths = [rng.choice(labels) for _ in range(n)]
        preds = [rng.choice(labels) for _ in range(n)]
        tp = tn = fp = fn = misrouted = 0
        for p, t in zip(preds, truths):
            if t == "normal" and p == "normal":
                tn += 1
            elif t == "normal":
                fp += 1
            elif p == t:
                tp += 1
            elif p == "normal":
                fn += 1
            else:
                misrouted += 1
        oracle = (tp + tn) / (tp + tn + fp + fn + misrouted)
        if overall_accuracy(preds, truths, "normal") != oracle:
            mismatches += 1
    report("P2", mismatches == 0, "50 random sets match the counting oracle exactly")


def _random_model_and_test(seed: int):
    rng = np.random.default_rng(seed)
    n_classes = int(rng.integers(3, 6))
    X = rng.uniform(size=(85, 3))
    y = [f"c{i}" for i in rng.integers(0, n_classes, size=85)]
    y[0], y[1] = "c0", "c1"
    model = train("knn", X[:60], y[:60], TrainConfig(knn_k=int(rng.integers(2, 7))))
    return model, X[60:], list(y[60:])


def test_p3_policy_sandwich():
    violations = 0
    for seed in range(100):
        model, X, y = _random_model_and_test(seed)
        acc = {name: policy_accuracy(model, X, y, policy).accuracy
               for name, policy in (("top1", AlertPolicy("top1")),
                                    ("c75", AlertPolicy("confidence", 0.75)),
                                    ("c85", AlertPolicy("confidence", 0.85)),
                                    ("top2", AlertPolicy("top2")))}
        if not (acc["top1"] <= acc["c75"] <= acc["top2"]):
            violations += 1
        if not (acc["top1"] <= acc["c85"] <= acc["top2"]):
            violations += 1
    report("P3", violations == 0, "100 random model/test pairs, zero sandwich violations")


def test_p4_pure_decision_tree_reports_single_scenarios():
    rng = np.random.default_rng(4)
    X = np.vstack([rng.normal(loc=c, scale=0.5, size=(40, 3)) for c in (0.0, 4.0, 8.0)])
    y = [label for label in ("a", "b", "c") for _ in range(40)]
    model = train("decision_tree", X, y)  # default depth: grown to purity
    queries = rng.uniform(-1, 9, size=(200, 3))
    histogram = probable_count_histogram(model, queries)
    ok = histogram["1"] == 200 and sum(histogram.values()) == 200
    report("P4", ok, f"histogram {histogram} (100% single-scenario)")


def test_p5_support_bounds():
    rng = np.random.default_rng(5)
    failures = 0
    for run in range(100):
        n_classes = int(rng.integers(4, 9))
        X = rng.uniform(size=(70, 3))
        y = [f"c{i}" for i in rng.integers(0, n_classes, size=70)]
        y[:n_classes] = [f"c{i}" for i in range(n_classes)]
        queries = rng.uniform(size=(20, 3))
        if run % 2 == 0:
            k = int(rng.integers(2, 8))
            model = train("knn", X, y, TrainConfig(knn_k=k))
            if max_probable_count(model, queries) > k:
                failures += 1
        else:
            trees = int(rng.integers(2, 9))
            model = train("random_forest", X, y, TrainConfig(seed=run, rf_trees=trees))
            if max_probable_count(model, queries) > trees:
                failures += 1
    report("P5", failures == 0, "100 randomized runs within k / tree-count support bounds")


def test_p6_modbus_round_trips():
    golden = build_request(txn=1, unit=1, start=0, qty=10)
    ok = golden == bytes.fromhex("00010000000601030000000A")
    rng = random.Random(6)
    for _ in range(1000):
        txn, unit = rng.randrange(0x10000), rng.randrange(0x100)
        request = build_request(txn, unit, rng.randrange(0x10000), rng.randrange(1, 126))
        parsed = parse_request(request)
        ok &= build_request(parsed.transaction_id, parsed.unit_id,
                            parsed.start_addr, parsed.quantity) == request
        values = [rng.randrange(0x10000) for _ in range(rng.randrange(1, 21))]
        response = build_response(txn, unit, values)
        decoded = parse_response(response)
        ok &= build_response(decoded.transaction_id, decoded.unit_id, decoded.values) == response
    for _ in range(1000):
        reading = SensorReading(s0=rng.randint(0, 1), s1=rng.randint(0, 1),
                                s2=rng.randint(0, 1), s3=rng.randint(0, 1),
                                ultrasound_step=rng.randrange(10001),
                                timestamp_s=rng.random() * 1000)
        cmd = ActuatorCommand(*(rng.random() < 0.5 for _ in range(4)))
        rf = encode_registers(reading, cmd)
        decoded = decode_registers(rf)
        restored = encode_registers(
            SensorReading(decoded.s0, decoded.s1, decoded.s2, decoded.s3,
                          decoded.ultrasound_step, decoded.timestamp_s),
            ActuatorCommand(bool(decoded.pump1), bool(decoded.pump2),
                            bool(decoded.pump1_valve), bool(decoded.pump2_valve)))
        ok &= restored == rf
    report("P6", ok, "golden frame + 1000 frame and 1000 register round-trips bit-exact")


def test_p7_plant_invariants_across_all_scenarios():
    plant = PlantParams()
    episodes = EpisodeConfig()
    off_step = volume_to_step(plant.secondary_refill_off_l, plant.secondary_capacity_l)
    violations = []
    for scenario in ScenarioKind:
        state = initial_state(scenario, SEED, plant, episodes)
        cmd = ActuatorCommand()
        injector = ScenarioInjector(SEED, InjectionParams(), plant.poll_dt_s)
        for tick in range(10_000):
            before = state.total_volume_l
            state = step(state, plant, cmd, plant.poll_dt_s)
            if not (0.0 <= state.main_volume_l <= plant.main_capacity_l
                    and 0.0 <= state.secondary_volume_l <= plant.secondary_capacity_l):
                violations.append(f"{scenario.value}: volume bounds at tick {tick}")
                break
            discarded = state.overflow_main_l + state.overflow_secondary_l
            if discarded == 0.0 and abs(state.total_volume_l - before) > 1e-6:
                violations.append(f"{scenario.value}: conservation at tick {tick}")
                break
            reading = read_true_sensors(state, plant)
            if tick == 0:
                injector.activate(scenario, reading, state.t_s)
            sensed = injector.apply(reading, state.t_s)
            cmd = plc_control(sensed, cmd, plant)
            if scenario is ScenarioKind.NORMAL:
                if cmd.pump2_on and sensed.s3 == 1:
                    violations.append(f"normal: pump2 on at full tank, tick {tick}")
                    break
                if cmd.pump1_on and sensed.ultrasound_step >= off_step:
                    violations.append(f"normal: pump1 on past stop level, tick {tick}")
                    break
    report("P7", not violations,
           violations[0] if violations else "15 scenarios x 10,000 steps clean")


def _end_to_end(tmp_dir: Path, seed: int) -> dict:
    started = time.perf_counter()
    simulate_all(tmp_dir, seed)
    result = run_pipeline(load_instances_dir(tmp_dir), PipelineConfig(seed=seed))
    cfg = TrainConfig(seed=seed)
    out = {"dataset_hash": result.dataset_hash, "threshold": result.threshold_used,
           "per_file_counts": result.per_file_counts, "models": {}, "metrics": {}}
    for algorithm in ("knn", "decision_tree", "random_forest"):
        binary_model = train(algorithm, result.train.X, result.train.labels("binary"), cfg)
        scenario_model = train(algorithm, result.train.X, result.train.labels("scenario"), cfg)
        out["models"][algorithm] = {
            "binary": model_to_json(binary_model),
            "scenario": model_to_json(scenario_model),
        }
        out["metrics"][algorithm] = {
            "binary": policy_accuracy(binary_model, result.test.X,
                                      result.test.labels("binary"),
                                      AlertPolicy("binary")).accuracy,
            "top2": policy_accuracy(scenario_model, result.test.X,
                                    result.test.labels("scenario"),
                                    AlertPolicy("top2")).accuracy,
        }
    out["elapsed_s"] = time.perf_counter() - started
    return out


@pytest.fixture(scope="module")
def e2e_first(tmp_path_factory):
    return _end_to_end(tmp_path_factory.mktemp("e2e_a"), SEED)


def test_p8_synthetic_end_to_end(e2e_first):
    counts_ok = e2e_first["threshold"] == 134  # min catalog count 144 minus warm-up
    # catalog instance totals survived generation (feature counts = instances - 10)
    counts = e2e_first["per_file_counts"]
    counts_ok &= counts["01_normal.csv"] == 5519 - 10
    counts_ok &= counts["04_blocked_measure_2.csv"] == 144 - 10
    counts_ok &= len(counts) == 15
    targets_ok = all(m["binary"] >= 0.90 and m["top2"] >= 0.90
                     for m in e2e_first["metrics"].values())
    runtime_ok = e2e_first["elapsed_s"] < 120.0
    detail = ", ".join(f"{algo} binary={m['binary']:.3f} top2={m['top2']:.3f}"
                       for algo, m in e2e_first["metrics"].items())
    report("P8", counts_ok and targets_ok and runtime_ok,
           f"{detail}, {e2e_first['elapsed_s']:.1f}s")


def test_p9_end_to_end_determinism(e2e_first, tmp_path_factory):
    again = _end_to_end(tmp_path_factory.mktemp("e2e_b"), SEED)
    same_hash = again["dataset_hash"] == e2e_first["dataset_hash"]
    same_models = again["models"] == e2e_first["models"]
    same_metrics = json.dumps(again["metrics"]) == json.dumps(e2e_first["metrics"])
    report("P9", same_hash and same_models and same_metrics,
           "identical dataset hash, serialized models, and metrics")


def test_p10_knn_oracle_and_lr_gradient():
    rng = np.random.default_rng(10)
    X = rng.uniform(size=(500, 10))
    y = [f"c{i}" for i in rng.integers(0, 6, size=500)]
    model = train("knn", X, y, TrainConfig(knn_k=5))
    exact = True
    for x in rng.uniform(size=(100, 10)):
        idx, dist = model.kneighbors(x)
        naive = np.array([np.sqrt(np.sum((row - x) ** 2)) for row in model.X_])
        order = sorted(range(len(naive)), key=lambda i: (naive[i], i))[:5]
        exact &= list(idx) == order and list(dist) == list(naive[order])
        exact &= model.classes_[np.argmax(np.bincount(model.y_idx_[order], minlength=6))] \
            == model.predict(x.reshape(1, -1))[0]

    grad_ok = True
    worst = 0.0
    for trial in range(5):
        Xb = add_bias(rng.normal(size=(16, 4)))
        Y = np.eye(3)[rng.integers(0, 3, size=16)]
        W = rng.normal(scale=0.4, size=(5, 3))
        grad = cross_entropy_grad(W, Xb, Y)
        for _ in range(12):
            i, j = rng.integers(0, 5), rng.integers(0, 3)
            up, down = W.copy(), W.copy()
            up[i, j] += 1e-6
            down[i, j] -= 1e-6
            numeric = (cross_entropy_loss(up, Xb, Y) - cross_entropy_loss(down, Xb, Y)) / 2e-6
            rel = abs(numeric - grad[i, j]) / max(abs(numeric), 1e-8)
            worst = max(worst, rel)
            grad_ok &= rel < 1e-5
    report("P10", exact and grad_ok,
           f"k-NN exact on 500-point scan; LR gradient worst rel err {worst:.2e}")


REAL_DATA_ENV = "WATERSIEM_REAL_DATA"


@pytest.mark.skipif(REAL_DATA_ENV not in os.environ,
                    reason="real dataset not supplied (set WATERSIEM_REAL_DATA)")
def test_p11_real_dataset_conditional():
    data_dir = Path(os.environ[REAL_DATA_ENV])
    mapping = ColumnMapping.from_file(data_dir / "mapping.json")
    result = run_pipeline(load_instances_dir(data_dir, mapping), PipelineConfig(seed=SEED))
    cfg = TrainConfig(seed=SEED)
    binary_model = train("knn", result.train.X, result.train.labels("binary"), cfg)
    binary = policy_accuracy(binary_model, result.test.X, result.test.labels("binary"),
                             AlertPolicy("binary")).accuracy
    scenario_model = train("knn", result.train.X, result.train.labels("scenario"), cfg)
    top2 = policy_accuracy(scenario_model, result.test.X, result.test.labels("scenario"),
                           AlertPolicy("top2")).accuracy
    rescue = rescue_analysis(scenario_model, result.test.X, result.test.labels("scenario"))
    shapes_ok = all(e["rescued_by_second"] <= e["misclassified"] for e in rescue.values())
    for name, got, target in (("binary", binary, 0.94), ("top2", top2, 0.9564)):
        if abs(got - target) > 0.05:
            print(f"P11 WARNING: k-NN {name} accuracy {got:.4f} deviates more than "
                  f"5 points from the published {target:.4f} (hyperparameters unknown)")
    report("P11", shapes_ok,
           f"binary={binary:.4f} (target 0.94), top2={top2:.4f} (target 0.9564), "
           f"rescue table shapes valid")
