"""Command-line entry points: simulate | ingest | train | eval | serve."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import EpisodeConfig, InjectionParams, PipelineConfig, PlantParams, TrainConfig, load_plant_config
from .episode import simulate_all
from .errors import WatersiemError
from .evaluate import (AlertPolicy, infer_model_task, policy_accuracy,
                       probable_count_histogram, rescue_analysis, run_experiments,
                       write_experiment_outputs)
from .logs import ColumnMapping
from .models import ALGORITHMS, load_model, save_model, train as train_model
from .pipeline import PipelineResult, load_instances_dir, run_pipeline, save_labeled_set, save_sidecar
from .scenarios import ScenarioKind


def _load_configs(args) -> tuple[PlantParams, InjectionParams, EpisodeConfig]:
    if getattr(args, "config", None):
        return load_plant_config(args.config)
    return PlantParams(), InjectionParams(), EpisodeConfig()


def cmd_simulate(args) -> int:
    plant, injection, episodes = _load_configs(args)
    scenarios = [ScenarioKind(s) for s in args.scenario] if args.scenario else None
    counts = None
    if args.count is not None:
        if not scenarios:
            raise WatersiemError("--count requires --scenario")
        counts = {s: args.count for s in scenarios}
    paths = simulate_all(args.out_dir, args.seed, scenarios=scenarios, counts=counts,
                         plant=plant, injection=injection, episodes=episodes)
    for path in paths:
        print(path)
    return 0


def _run_pipeline_from_dir(data_dir: str, args, mapping: ColumnMapping | None = None) -> PipelineResult:
    config = PipelineConfig(
        threshold_n=args.threshold,
        split_ratio=args.split_ratio,
        seed=args.seed,
        paper_faithful_order=args.paper_faithful_order,
    )
    per_file = load_instances_dir(data_dir, mapping)
    return run_pipeline(per_file, config)


def _add_pipeline_flags(parser) -> None:
    parser.add_argument("--threshold", type=int, default=None,
                        help="keep the first N instances per file (default: min count)")
    parser.add_argument("--split-ratio", type=float, default=0.8)
    parser.add_argument("--paper-faithful-order", action="store_true",
                        help="fit the scaler before splitting instead of on train only")


def cmd_train(args) -> int:
    result = _run_pipeline_from_dir(args.data_dir, args)
    cfg = TrainConfig(seed=args.seed, knn_k=args.knn_k, rf_trees=args.rf_trees,
                      dt_max_depth=args.dt_max_depth)
    model = train_model(args.algorithm, result.train.X, result.train.labels(args.task), cfg)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    sidecar = out.with_suffix(".pipeline.json")
    save_sidecar(result, sidecar)
    save_model(model, out, scaler_id=result.dataset_hash)
    metrics = policy_accuracy(model, result.test.X, result.test.labels(args.task),
                              AlertPolicy(args.task if args.task != "scenario" else "top1"))
    print(f"trained {args.algorithm} on task={args.task}: "
          f"held-out accuracy {metrics.accuracy:.4f} ({metrics.n} rows)")
    print(f"model: {out}")
    print(f"pipeline sidecar: {sidecar}")
    return 0


def cmd_eval(args) -> int:
    result = _run_pipeline_from_dir(args.data_dir, args)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.model:
        model = load_model(args.model)
        policy = AlertPolicy.parse(args.policy)
        task = infer_model_task(model)
        if policy.task != task:
            raise WatersiemError(f"policy {policy.describe()} expects a {policy.task} model, "
                                 f"but {args.model} was trained on {task} labels")
        metrics = policy_accuracy(model, result.test.X, result.test.labels(policy.task), policy)
        metrics.probable_count_histogram = probable_count_histogram(model, result.test.X)
        if policy.task == "scenario":
            metrics.rescue_table = rescue_analysis(model, result.test.X,
                                                   result.test.labels("scenario"))
        doc = metrics.to_dict()
        (out_dir / "metrics.json").write_text(json.dumps(doc, indent=2, sort_keys=True))
        print(f"{model.algorithm} {policy.describe()}: accuracy {metrics.accuracy:.4f}")
    else:
        cfg = TrainConfig(seed=args.seed)
        results = run_experiments(result.train, result.test, cfg)
        write_experiment_outputs(results, out_dir)
        print((out_dir / "report.txt").read_text())
    return 0


def cmd_ingest(args) -> int:
    mapping = ColumnMapping.from_file(args.mapping) if args.mapping else None
    result = _run_pipeline_from_dir(args.csv_dir, args, mapping)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    save_labeled_set(result.train, out_dir / "train.csv")
    save_labeled_set(result.test, out_dir / "test.csv")
    save_sidecar(result, out_dir / "pipeline.json")
    print(f"ingested {sum(result.per_file_counts.values())} instances "
          f"-> {len(result.train)} train / {len(result.test)} test rows in {out_dir}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import LiveService, ServiceConfig, build_app

    plant, injection, episodes = _load_configs(args)
    schedule = []
    if args.schedule:
        raw = json.loads(Path(args.schedule).read_text())
        schedule = [(float(t), ScenarioKind(s)) for t, s in raw]
    service_config = ServiceConfig(
        model_path=args.model, policy=AlertPolicy.parse(args.policy), seed=args.seed,
        speed=args.speed, modbus_port=args.modbus_port, poll_via_tcp=not args.no_modbus_tcp,
        schedule=tuple(schedule), plant=plant, injection=injection, episodes=episodes,
    )
    service = LiveService(service_config)
    app = build_app(service)
    print(f"serving on http://{args.host}:{args.port} "
          f"(modbus {'tcp :' + str(args.modbus_port) if service_config.poll_via_tcp else 'in-process'})")
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="watersiem",
                                     description="Water-plant twin, register logging, and ML alerting")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate scenario log files")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--scenario", action="append",
                   choices=[s.value for s in ScenarioKind],
                   help="limit to specific scenarios (repeatable; default: all 15)")
    p.add_argument("--count", type=int, default=None,
                   help="instances per selected scenario (default: catalog counts)")
    p.add_argument("--config", help="plant/injection/episodes config file (json|yaml)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("train", help="preprocess a log directory and fit one classifier")
    p.add_argument("--data-dir", required=True)
    p.add_argument("--task", choices=("binary", "component", "scenario"), default="scenario")
    p.add_argument("--algorithm", choices=sorted(ALGORITHMS), default="knn")
    p.add_argument("--out", required=True, help="model JSON path")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--knn-k", type=int, default=5)
    p.add_argument("--rf-trees", type=int, default=10)
    p.add_argument("--dt-max-depth", type=int, default=None)
    _add_pipeline_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a model (or run the full experiment suite)")
    p.add_argument("--data-dir", required=True)
    p.add_argument("--model", help="model JSON; omit to train+evaluate all six algorithms")
    p.add_argument("--policy", default="top1",
                   help="binary | component | top1 | top2 | confidence:<tau>")
    p.add_argument("--out-dir", default="eval_out")
    p.add_argument("--seed", type=int, default=0)
    _add_pipeline_flags(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("ingest", help="normalize a foreign CSV directory into a labeled set")
    p.add_argument("--csv-dir", required=True)
    p.add_argument("--mapping", help="column-mapping config JSON")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--seed", type=int, default=0)
    _add_pipeline_flags(p)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("serve", help="run the live loop with the operator endpoint")
    p.add_argument("--model", required=True)
    p.add_argument("--policy", default="confidence:0.85")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8100)
    p.add_argument("--modbus-port", type=int, default=1502)
    p.add_argument("--no-modbus-tcp", action="store_true",
                   help="poll the snapshot in-process instead of over Modbus/TCP")
    p.add_argument("--speed", type=float, default=1.0, help="simulated-time multiplier")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--schedule", help="JSON list of [time_s, scenario] injections")
    p.add_argument("--config", help="plant config file")
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except WatersiemError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
