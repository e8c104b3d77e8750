"""Command-line entry point: ``train``, ``evaluate`` and ``compare``.

Exit codes
----------
0  success
2  invalid configuration (unknown key, bad value, bad flag)
3  data error (missing file, malformed CSV, feature mismatch)
4  solver or training failure (every group count skipped, non-finite fit)

Nothing is written until a command has finished computing, so a failing run
leaves no partial output files behind.
"""
from __future__ import annotations

import argparse
import dataclasses
import datetime as _dt
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import metrics
from .annealer import AnnealSchedule, write_trace_csv
from .ingestion import DataError, SplitSpec, load_csv, split, standardize
from .trainer import KMEANS, KMEANS_RESTARTS, QUANTILE, TrainedModel, load_model, \
    predict_scores, save_model, sweep

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_SOLVER = 4

# Report columns for the two dataset layouts
LAYOUT_COLUMNS = {
    "heart": ["mcc", "f1", "accuracy", "sensitivity_tpr", "specificity_tnr", "pr_auc",
              "roc_auc"],
    "rice": ["accuracy", "sensitivity_tpr", "specificity_tnr", "precision", "f1", "npv",
             "fpr", "fdr", "fnr"],
}
LAYOUT_DEFAULTS = {
    "heart": dict(label_column="DEATH_EVENT", positive_class=None, train_fraction=0.7,
                  max_groups=30),
    "rice": dict(label_column="Class", positive_class="Cammeo", train_fraction=0.75,
                 max_groups=31),
}
PROTOCOL = "each execution i re-splits with seed+i and re-runs the full sweep"


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    """Validated run settings. ``None`` fields take the layout's default."""

    data: str | None = None
    label_column: str | None = None
    positive_class: str | None = None
    method: str = KMEANS
    train_fraction: float | None = None
    seed: int = 0
    max_groups: int | None = None
    anneal: dict = field(default_factory=dict)
    threshold: float = 0.5
    out: str = "out"
    selection: str = "accuracy"
    layout: str = "heart"
    executions: int = 1
    n_jobs: int = 1
    kmeans_restarts: int = KMEANS_RESTARTS
    write_trace: bool = False

    def __post_init__(self):
        if self.layout not in LAYOUT_DEFAULTS:
            raise ConfigError(f"layout must be one of {sorted(LAYOUT_DEFAULTS)}, got "
                              f"{self.layout!r}")
        for key, value in LAYOUT_DEFAULTS[self.layout].items():
            if getattr(self, key) is None:
                setattr(self, key, value)
        if self.method not in (KMEANS, QUANTILE):
            raise ConfigError(f"method must be kmeans or quantile, got {self.method!r}")
        if self.selection not in ("accuracy", "f1"):
            raise ConfigError(f"selection must be accuracy or f1, got {self.selection!r}")
        try:
            SplitSpec(float(self.train_fraction), int(self.seed))
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None
        if not 0.0 <= float(self.threshold) <= 1.0:
            raise ConfigError(f"threshold must lie in [0, 1], got {self.threshold}")
        for key in ("max_groups", "executions", "n_jobs", "kmeans_restarts"):
            if int(getattr(self, key)) < 1:
                raise ConfigError(f"{key} must be >= 1, got {getattr(self, key)}")
        if not isinstance(self.anneal, dict):
            raise ConfigError("anneal must be a mapping of schedule overrides")
        known = {f.name for f in dataclasses.fields(AnnealSchedule)}
        bad = sorted(set(self.anneal) - known)
        if bad:
            raise ConfigError(f"unknown anneal key(s) {bad}; known: {sorted(known)}")
        self.schedule()

    def schedule(self) -> AnnealSchedule:
        """Annealing schedule; its seed follows ``seed`` unless overridden."""
        opts = {"seed": int(self.seed), **self.anneal}
        try:
            return AnnealSchedule(**opts)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"anneal: {exc}") from None

    @classmethod
    def from_mapping(cls, mapping: dict) -> "RunConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        bad = sorted(set(mapping) - known)
        if bad:
            raise ConfigError(f"unknown config key(s) {bad}")
        types = {"train_fraction": float, "threshold": float, "seed": int, "max_groups": int,
                 "executions": int, "n_jobs": int, "kmeans_restarts": int}
        clean = {}
        for key, value in mapping.items():
            if key in types and value is not None:
                try:
                    value = types[key](value)
                except (TypeError, ValueError):
                    raise ConfigError(f"{key}: cannot read {value!r} as "
                                      f"{types[key].__name__}") from None
            clean[key] = value
        if "write_trace" in clean:
            clean["write_trace"] = _truthy(clean["write_trace"])
        return cls(**clean)


def _truthy(value) -> bool:
    if isinstance(value, bool):
        return value
    text = str(value).strip().lower()
    if text in ("1", "true", "yes", "on"):
        return True
    if text in ("0", "false", "no", "off", ""):
        return False
    raise ConfigError(f"write_trace: cannot read {value!r} as a boolean")


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def read_config_file(path) -> dict:
    """JSON object, or ``key=value`` lines (``#`` comments, ``anneal.x=`` nesting)."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    if text.lstrip().startswith("{"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path}: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError(f"config {path}: expected a JSON object")
        return data
    data: dict = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"config {path} line {n}: expected key=value")
        key, value = (part.strip() for part in line.split("=", 1))
        if key.startswith("anneal."):
            data.setdefault("anneal", {})[key[len("anneal."):]] = _parse_value(value)
        else:
            data[key] = _parse_value(value) if key not in ("positive_class", "label_column",
                                                           "data", "out") else value
    return data


def _dataset(config: RunConfig):
    if config.data is None:
        raise ConfigError("no dataset given (--data or config key 'data')")
    return load_csv(config.data, config.label_column, config.positive_class)


def _schedule_for(config: RunConfig, seed: int) -> AnnealSchedule:
    return dataclasses.replace(config.schedule(), seed=config.anneal.get("seed", seed))


def _metadata(config: RunConfig, seed: int) -> dict:
    return {
        "seed": seed,
        "dataset": str(config.data),
        "label_column": config.label_column,
        "positive_class": config.positive_class,
        "train_fraction": config.train_fraction,
        "threshold": config.threshold,
        "kmeans_restarts": config.kmeans_restarts,
        "anneal": dataclasses.asdict(_schedule_for(config, seed)),
    }


def run_once(config: RunConfig, seed: int, dataset=None) -> dict:
    """Split with ``seed``, sweep, and return the model, curve and metrics."""
    dataset = dataset if dataset is not None else _dataset(config)
    train, valid = split(standardize(dataset), SplitSpec(config.train_fraction, seed))
    schedule = _schedule_for(config, seed)
    try:
        model, curve = sweep(train, valid, config.method, schedule,
                             max_groups=config.max_groups, threshold=config.threshold,
                             selection=config.selection, kmeans_seed=seed,
                             n_jobs=config.n_jobs, kmeans_restarts=config.kmeans_restarts)
    except ValueError as exc:
        if "max_groups" in str(exc):
            raise ConfigError(str(exc)) from None
        raise
    model.metadata.update(_metadata(config, seed))
    winner = metrics.evaluate(valid.labels, predict_scores(model, valid.raw), config.threshold)
    trace = ()
    if not model.baseline_won:
        trace = next(e.trace for e in curve.entries if e.k == model.group_count)
    return dict(model=model, curve=curve, baseline=curve.baseline, winner=winner, trace=trace,
                seed=seed)


def _winner_info(model: TrainedModel) -> dict:
    return {
        "method": model.method,
        "k": model.group_count,
        "alpha": None if model.config is None else model.config.alpha,
        "beta": None if model.config is None else model.config.beta,
        "baseline_won": model.baseline_won,
        "selection_metric": model.selection_metric,
    }


def _timestamp() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat()


def _dump(obj, path: Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def cmd_train(config: RunConfig) -> int:
    """Train one model; write model.json, sweep.csv, report.json (and the trace)."""
    res = run_once(config, config.seed)
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    save_model(res["model"], out / "model.json")
    res["curve"].to_csv(out / "sweep.csv")
    report = {
        "baseline": res["baseline"].to_dict(),
        "winner": res["winner"].to_dict(),
        "winner_info": _winner_info(res["model"]),
        "sweep": "sweep.csv",
        "metadata": {**res["model"].metadata, "timestamp": _timestamp()},
    }
    _dump(report, out / "report.json")
    if config.write_trace and res["trace"]:
        write_trace_csv(res["trace"], out / "anneal_trace.csv")
    logger.info("wrote %s", out)
    print(json.dumps(report["winner_info"], sort_keys=True))
    return EXIT_OK


def _subset_rows(model: TrainedModel, dataset, subset: str):
    if subset == "all":
        return dataset.feature_matrix, dataset.labels
    meta = model.metadata
    if "seed" not in meta or "train_fraction" not in meta:
        raise ConfigError("model metadata lacks seed/train_fraction; use --subset all")
    train, valid = split(standardize(dataset), SplitSpec(meta["train_fraction"], meta["seed"]))
    frame = train if subset == "train" else valid
    return frame.raw, frame.labels


def cmd_evaluate(model_path, data_path, threshold: float = 0.5, out=None,
                 subset: str = "all", label_column=None, positive_class=None) -> int:
    """Score a CSV with a saved model; print metrics and write evaluation.json."""
    if not 0.0 <= threshold <= 1.0:
        raise ConfigError(f"threshold must lie in [0, 1], got {threshold}")
    try:
        model = load_model(model_path)
    except OSError as exc:
        raise DataError(f"cannot read model {model_path}: {exc}") from None
    except (ValueError, KeyError) as exc:
        raise DataError(f"invalid model document {model_path}: {exc}") from None
    meta = model.metadata
    label = label_column or meta.get("label_column")
    if label is None:
        raise ConfigError("label column unknown; pass --label-column")
    positive = positive_class if positive_class is not None else meta.get("positive_class")
    dataset = load_csv(data_path, label, positive)
    names = list(dataset.feature_names)
    expected = list(model.feature_names)
    if set(names) != set(expected):
        missing = [n for n in expected if n not in names]
        extra = [n for n in names if n not in expected]
        raise DataError(f"feature mismatch: missing {missing}, unexpected {extra}")
    if names != expected:
        order = [names.index(n) for n in expected]
        dataset = dataclasses.replace(dataset, feature_matrix=dataset.feature_matrix[:, order],
                                      feature_names=tuple(expected))
    X, y = _subset_rows(model, dataset, subset)
    report = metrics.evaluate(y, predict_scores(model, X), threshold)
    text = json.dumps(report.to_dict(), indent=2, sort_keys=True)
    print(text)
    if out is not None:
        path = Path(out)
        path.mkdir(parents=True, exist_ok=True)
        (path / "evaluation.json").write_text(text + "\n", encoding="utf-8")
    return EXIT_OK


def _mean_row(rows: list, columns: list) -> dict:
    means = {}
    for c in columns:
        values = [r[c] for r in rows if r[c] is not None]
        means[c] = float(np.mean(values)) if values else None
    return means


def compare_report(results: list, config: RunConfig) -> dict:
    columns = LAYOUT_COLUMNS[config.layout]
    per = []
    for res in results:
        per.append({
            "seed": res["seed"],
            "baseline": {c: getattr(res["baseline"], c) for c in columns},
            "slr": {c: getattr(res["winner"], c) for c in columns},
            "winner": _winner_info(res["model"]),
            "sweep": f"sweep_seed{res['seed']}.csv",
        })
    return {
        "layout": config.layout,
        "columns": columns,
        "executions": per,
        "mean": {
            "baseline": _mean_row([p["baseline"] for p in per], columns),
            "slr": _mean_row([p["slr"] for p in per], columns),
        },
        "protocol": PROTOCOL,
        "method": config.method,
    }


def cmd_compare(config: RunConfig, executions: int | None = None) -> int:
    """Repeat split+train with seeds seed, seed+1, ... and average the metrics."""
    n = int(executions if executions is not None else config.executions)
    if n < 1:
        raise ConfigError(f"executions must be >= 1, got {n}")
    dataset = _dataset(config)
    seeds = [config.seed + i for i in range(n)]
    if config.n_jobs > 1 and n > 1:
        inner = dataclasses.replace(config, n_jobs=1)
        with ProcessPoolExecutor(max_workers=config.n_jobs) as pool:
            results = list(pool.map(run_once, [inner] * n, seeds, [dataset] * n))
    else:
        results = [run_once(config, s, dataset) for s in seeds]
    report = compare_report(results, config)
    report["metadata"] = {**_metadata(config, config.seed), "executions": n,
                          "timestamp": _timestamp()}
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    for res in results:
        res["curve"].to_csv(out / f"sweep_seed{res['seed']}.csv")
    _dump(report, out / "report.json")
    print(json.dumps(report["mean"], indent=2, sort_keys=True))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stochastic-lr",
                                     description="Chance-constrained logistic regression.")
    sub = parser.add_subparsers(dest="command", required=True)

    def run_flags(p):
        p.add_argument("--data", help="CSV dataset path")
        p.add_argument("--config", help="JSON or key=value config file")
        p.add_argument("--method", choices=[KMEANS, QUANTILE])
        p.add_argument("--max-groups", type=int, dest="max_groups")
        p.add_argument("--seed", type=int)
        p.add_argument("--threshold", type=float)
        p.add_argument("--out")
        p.add_argument("--layout", choices=sorted(LAYOUT_DEFAULTS))
        p.add_argument("--n-jobs", type=int, dest="n_jobs")

    train = sub.add_parser("train", help="sweep group counts and save the winning model")
    run_flags(train)
    train.add_argument("--write-trace", action="store_const", const=True, dest="write_trace",
                       help="also write anneal_trace.csv for the winning group count")

    compare = sub.add_parser("compare", help="repeat training over seeds and average")
    run_flags(compare)
    compare.add_argument("--executions", type=int)

    ev = sub.add_parser("evaluate", help="score a dataset with a saved model")
    ev.add_argument("--model", required=True)
    ev.add_argument("--data", required=True)
    ev.add_argument("--threshold", type=float, default=0.5)
    ev.add_argument("--out")
    ev.add_argument("--subset", choices=["all", "train", "validation"], default="all")
    ev.add_argument("--label-column", dest="label_column")
    ev.add_argument("--positive-class", dest="positive_class")
    return parser


def config_from_args(args) -> RunConfig:
    mapping = read_config_file(args.config) if args.config else {}
    for key in ("data", "method", "max_groups", "seed", "threshold", "out", "layout",
                "n_jobs", "executions", "write_trace"):
        value = getattr(args, key, None)
        if value is not None:
            mapping[key] = value
    return RunConfig.from_mapping(mapping)


def _setup_logging() -> None:
    level = os.environ.get("SLR_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    try:
        if args.command == "evaluate":
            return cmd_evaluate(args.model, args.data, args.threshold, args.out, args.subset,
                                args.label_column, args.positive_class)
        config = config_from_args(args)
        if args.command == "train":
            return cmd_train(config)
        return cmd_compare(config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (RuntimeError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
