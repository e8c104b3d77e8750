"""Group-count sweep, model selection against the baseline, persistence.

For every group count ``k`` the training rows are grouped (K-means on the
standardised features, or ``k`` quantile bins of the baseline scores),
summarised, and annealed. The candidate with the best validation metric wins
if it beats plain logistic regression on the same split; otherwise the
baseline is kept and flagged.
"""
from __future__ import annotations

import csv
import datetime as _dt
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import metrics
from .annealer import AnnealSchedule, anneal
from .glm import WeightVector, fit_logistic, score
from .ingestion import StandardizedFrame
from .solver import ChanceConfig
from .summarize import MinGroupSizeError, group_summaries, kmeans, quantile_bins

logger = logging.getLogger(__name__)

__all__ = [
    "KMEANS",
    "QUANTILE",
    "SweepEntry",
    "SweepCurve",
    "TrainedModel",
    "sweep",
    "predict",
    "predict_scores",
    "save_model",
    "load_model",
]

KMEANS = "kmeans"
QUANTILE = "quantile"
KMEANS_RESTARTS = 10
SWEEP_COLUMNS = ["k", "alpha", "beta", "accuracy", "f1", "precision", "recall",
                 "skipped", "reason"]


@dataclass(frozen=True)
class SweepEntry:
    k: int
    alpha: float | None = None
    beta: float | None = None
    accuracy: float | None = None
    f1: float | None = None
    precision: float | None = None
    recall: float | None = None
    skipped: bool = False
    reason: str = ""
    weights: WeightVector | None = field(default=None, compare=False, repr=False)
    trace: tuple = field(default=(), compare=False, repr=False)


@dataclass
class SweepCurve:
    method: str
    entries: list = field(default_factory=list)
    baseline: metrics.MetricsReport | None = None

    def attempted(self) -> list:
        return [e for e in self.entries if not e.skipped]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(SWEEP_COLUMNS)
            for e in self.entries:
                writer.writerow([e.k] + [_fmt(getattr(e, c)) for c in SWEEP_COLUMNS[1:-2]]
                                + [int(e.skipped), e.reason])

    @classmethod
    def from_csv(cls, path, method: str = "") -> "SweepCurve":
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames != SWEEP_COLUMNS:
                raise ValueError(f"unexpected sweep header {reader.fieldnames}")
            entries = [SweepEntry(
                k=int(row["k"]),
                **{c: (float(row[c]) if row[c] else None) for c in SWEEP_COLUMNS[1:-2]},
                skipped=bool(int(row["skipped"])), reason=row["reason"]) for row in reader]
        return cls(method, entries)


def _fmt(value) -> str:
    return "" if value is None else repr(float(value))


@dataclass
class TrainedModel:
    """Winning weights plus everything needed to score raw rows.

    When ``baseline_won`` is set, ``weights`` are the baseline's and
    ``config``/``group_count`` are ``None``.
    """

    weights: WeightVector
    config: ChanceConfig | None
    method: str
    group_count: int | None
    column_means: np.ndarray
    column_stds: np.ndarray
    baseline_weights: WeightVector
    selection_metric: float
    baseline_won: bool = False
    feature_names: tuple = ()
    metadata: dict = field(default_factory=dict)

    def to_dict(self, timestamp: bool = True) -> dict:
        meta = dict(self.metadata)
        if timestamp:
            meta.setdefault("timestamp", _dt.datetime.now(_dt.timezone.utc).isoformat())
        return {
            "weights": self.weights.to_array().tolist(),
            "alpha": None if self.config is None else self.config.alpha,
            "beta": None if self.config is None else self.config.beta,
            "method": self.method,
            "group_count": self.group_count,
            "column_means": np.asarray(self.column_means).tolist(),
            "column_stds": np.asarray(self.column_stds).tolist(),
            "feature_names": list(self.feature_names),
            "baseline_weights": self.baseline_weights.to_array().tolist(),
            "baseline_won": self.baseline_won,
            "selection_metric": self.selection_metric,
            "metadata": meta,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TrainedModel":
        required = {"weights", "alpha", "beta", "method", "group_count", "column_means",
                    "column_stds", "feature_names", "baseline_weights", "metadata"}
        missing = required - set(data)
        if missing:
            raise ValueError(f"model document is missing {sorted(missing)}")
        config = None if data["alpha"] is None else ChanceConfig(data["alpha"], data["beta"])
        means = np.asarray(data["column_means"], dtype=float)
        weights = WeightVector.from_array(data["weights"])
        if weights.dim != means.size or len(data["feature_names"]) != means.size:
            raise ValueError("model weights, statistics and feature names disagree in length")
        return cls(
            weights=weights,
            config=config,
            method=data["method"],
            group_count=data["group_count"],
            column_means=means,
            column_stds=np.asarray(data["column_stds"], dtype=float),
            baseline_weights=WeightVector.from_array(data["baseline_weights"]),
            selection_metric=float(data.get("selection_metric", math.nan)),
            baseline_won=bool(data.get("baseline_won", False)),
            feature_names=tuple(data["feature_names"]),
            metadata=dict(data["metadata"]),
        )


def save_model(model: TrainedModel, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_model(path) -> TrainedModel:
    with open(path, encoding="utf-8") as fh:
        return TrainedModel.from_dict(json.load(fh))


def _standardize(model: TrainedModel, X_raw) -> np.ndarray:
    X_raw = np.asarray(X_raw, dtype=float)
    if X_raw.ndim != 2 or X_raw.shape[1] != model.column_means.size:
        raise ValueError(
            f"model expects {model.column_means.size} features, got shape {np.shape(X_raw)}")
    stds = np.asarray(model.column_stds, dtype=float)
    constant = ~(stds > 0)
    Z = (X_raw - model.column_means) / np.where(constant, 1.0, stds)
    Z[:, constant] = 0.0
    return Z


def predict_scores(model: TrainedModel, X_raw) -> np.ndarray:
    return score(model.weights, _standardize(model, X_raw))


def predict(model: TrainedModel, X_raw, threshold: float = 0.5) -> np.ndarray:
    """Label 1 iff the model score is ``>= threshold``."""
    if not 0.0 <= threshold <= 1.0:
        raise ValueError(f"threshold must lie in [0, 1], got {threshold}")
    return (predict_scores(model, X_raw) >= threshold).astype(int)


def _group(k, method, X, scores, kmeans_seed, restarts):
    if method == QUANTILE:
        return quantile_bins(scores, k)
    # Lloyd from a different seeding often avoids a singleton cluster
    for j in range(restarts):
        try:
            return kmeans(X, k, seed=kmeans_seed + j)
        except MinGroupSizeError as exc:
            last = exc
    raise last


def _candidate(k, method, X, y, scores, Xv, yv, schedule, threshold, kmeans_seed, solver_opts,
               restarts=KMEANS_RESTARTS):
    try:
        assignment = _group(k, method, X, scores, kmeans_seed, restarts)
    except MinGroupSizeError as exc:
        return SweepEntry(k, skipped=True, reason=str(exc))
    groups = group_summaries(X, scores, assignment)
    try:
        result = anneal(groups, X, y, schedule, solver_opts=solver_opts)
    except RuntimeError as exc:
        return SweepEntry(k, skipped=True, reason=f"solver: {exc}")
    report = metrics.evaluate(yv, score(result.best_weights, Xv), threshold)
    return SweepEntry(k, result.best_config.alpha, result.best_config.beta, report.accuracy,
                      report.f1, report.precision, report.sensitivity_tpr,
                      weights=result.best_weights, trace=tuple(result.trace))


def sweep(train: StandardizedFrame, validation: StandardizedFrame, method: str = KMEANS,
          schedule: AnnealSchedule | None = None, max_groups: int = 30,
          threshold: float = 0.5, selection: str = "accuracy", kmeans_seed: int = 0,
          n_jobs: int = 1, solver_opts: dict | None = None,
          kmeans_restarts: int = KMEANS_RESTARTS):
    """Run the group-count sweep ``k = 1..max_groups``.

    Returns ``(TrainedModel, SweepCurve)``. Counts whose grouping violates
    the minimum group size are recorded as skipped. Ties on the selection
    metric go to the smaller ``k``. K-means is retried with seeds
    ``kmeans_seed + j`` for ``j < kmeans_restarts`` before a count is skipped.
    """
    if method not in (KMEANS, QUANTILE):
        raise ValueError(f"unknown method {method!r}")
    if selection not in ("accuracy", "f1"):
        raise ValueError(f"unknown selection metric {selection!r}")
    n = train.n_rows
    if not 1 <= max_groups <= n // 2:
        raise ValueError(f"max_groups must lie in [1, {n // 2}], got {max_groups}")
    if kmeans_restarts < 1:
        raise ValueError("kmeans_restarts must be >= 1")
    schedule = schedule or AnnealSchedule()
    X, y = train.features, train.labels
    Xv, yv = validation.features, validation.labels

    base = fit_logistic(X, y)
    scores = score(base.weights, X)
    base_report = metrics.evaluate(yv, score(base.weights, Xv), threshold)

    args = [(k, method, X, y, scores, Xv, yv, schedule, threshold, kmeans_seed, solver_opts,
             kmeans_restarts)
            for k in range(1, max_groups + 1)]
    if n_jobs > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            entries = list(pool.map(_candidate, *zip(*args)))
    else:
        entries = [_candidate(*a) for a in args]
    for e in entries:
        if not e.skipped:
            logger.info("k=%d alpha=%.4g beta=%.4g accuracy=%.4f f1=%s",
                        e.k, e.alpha, e.beta, e.accuracy, e.f1)
    curve = SweepCurve(method, entries, base_report)
    tried = curve.attempted()
    if not tried:
        raise RuntimeError("every group count was skipped; nothing to select")

    def key(e):
        v = getattr(e, selection)
        return -math.inf if v is None else v

    best = max(tried, key=key)  # max keeps the first (smallest k) among ties
    base_value = getattr(base_report, "f1" if selection == "f1" else "accuracy")
    base_value = -math.inf if base_value is None else base_value
    common = dict(method=method, column_means=train.column_means,
                  column_stds=train.column_stds, baseline_weights=base.weights,
                  feature_names=train.feature_names)
    if key(best) > base_value:
        model = TrainedModel(weights=best.weights, config=ChanceConfig(best.alpha, best.beta),
                             group_count=best.k, selection_metric=key(best), **common)
    else:
        model = TrainedModel(weights=base.weights, config=None, group_count=None,
                             selection_metric=base_value, baseline_won=True, **common)
    return model, curve
