"""Confusion-matrix metrics plus MCC, ROC AUC and step-wise PR AUC.

A metric whose denominator is zero is reported as ``None`` together with a
reason in :attr:`MetricsReport.undefined`; it is never silently 0.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, fields

import numpy as np
from scipy.stats import rankdata

__all__ = [
    "ConfusionCounts",
    "MetricsReport",
    "confusion",
    "basic_metrics",
    "mcc",
    "roc_auc",
    "pr_auc",
    "evaluate",
]


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


@dataclass
class MetricsReport:
    accuracy: float | None = None
    sensitivity_tpr: float | None = None
    specificity_tnr: float | None = None
    precision: float | None = None
    f1: float | None = None
    npv: float | None = None
    fpr: float | None = None
    fdr: float | None = None
    fnr: float | None = None
    mcc: float | None = None
    roc_auc: float | None = None
    pr_auc: float | None = None
    undefined: dict = field(default_factory=dict)

    @classmethod
    def metric_names(cls) -> list[str]:
        return [f.name for f in fields(cls) if f.name != "undefined"]

    def to_dict(self) -> dict:
        out = {name: getattr(self, name) for name in self.metric_names()}
        out["undefined"] = dict(self.undefined)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "MetricsReport":
        return cls(**{k: data.get(k) for k in cls.metric_names()},
                   undefined=dict(data.get("undefined", {})))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _binary(v, name: str) -> np.ndarray:
    v = np.asarray(v)
    if v.ndim != 1 or not np.isin(v, (0, 1)).all():
        raise ValueError(f"{name} must be a 1-d vector of 0/1")
    return v.astype(int)


def confusion(y_true, y_pred) -> ConfusionCounts:
    """Counts with label 1 as the positive class."""
    t = _binary(y_true, "y_true")
    p = _binary(y_pred, "y_pred")
    if t.size != p.size:
        raise ValueError(f"length mismatch: {t.size} labels vs {p.size} predictions")
    if t.size == 0:
        raise ValueError("need at least one row")
    return ConfusionCounts(
        tp=int(np.sum((t == 1) & (p == 1))),
        fp=int(np.sum((t == 0) & (p == 1))),
        tn=int(np.sum((t == 0) & (p == 0))),
        fn=int(np.sum((t == 1) & (p == 0))),
    )


def _ratio(report: MetricsReport, name: str, num: int, den: int, den_label: str):
    if den == 0:
        setattr(report, name, None)
        report.undefined[name] = f"zero denominator ({den_label} = 0)"
    else:
        setattr(report, name, num / den)


def basic_metrics(c: ConfusionCounts) -> MetricsReport:
    if c.total <= 0:
        raise ValueError("confusion counts are empty")
    r = MetricsReport()
    tp, fp, tn, fn = c.tp, c.fp, c.tn, c.fn
    _ratio(r, "accuracy", tp + tn, c.total, "TP+FP+TN+FN")
    _ratio(r, "sensitivity_tpr", tp, tp + fn, "TP+FN")
    _ratio(r, "specificity_tnr", tn, tn + fp, "TN+FP")
    _ratio(r, "precision", tp, tp + fp, "TP+FP")
    _ratio(r, "f1", 2 * tp, 2 * tp + fp + fn, "2TP+FP+FN")
    _ratio(r, "npv", tn, tn + fn, "TN+FN")
    _ratio(r, "fpr", fp, tn + fp, "TN+FP")
    _ratio(r, "fdr", fp, tp + fp, "TP+FP")
    _ratio(r, "fnr", fn, tp + fn, "TP+FN")
    value = mcc(c)
    r.mcc = value
    if value is None:
        r.undefined["mcc"] = "zero factor under the square root"
    return r


def mcc(c: ConfusionCounts) -> float | None:
    factors = (c.tp + c.fp, c.tp + c.fn, c.tn + c.fp, c.tn + c.fn)
    if 0 in factors:
        return None
    return (c.tp * c.tn - c.fp * c.fn) / math.sqrt(math.prod(factors))


def roc_auc(y_true, scores) -> float | None:
    """Mann-Whitney estimate ``P(s+ > s-) + P(s+ == s-) / 2`` via average ranks.

    ``None`` when only one class is present.
    """
    t = _binary(y_true, "y_true")
    s = np.asarray(scores, dtype=float)
    n_pos = int(t.sum())
    n_neg = t.size - n_pos
    if n_pos == 0 or n_neg == 0:
        return None
    ranks = rankdata(s, method="average")
    u = ranks[t == 1].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def pr_auc(y_true, scores) -> float | None:
    """Step-wise area under the precision-recall curve.

    Thresholds run over the distinct scores in decreasing order; each recall
    increment is weighted by the precision at that threshold. ``None`` when
    there are no positives.
    """
    t = _binary(y_true, "y_true")
    s = np.asarray(scores, dtype=float)
    n_pos = int(t.sum())
    if n_pos == 0:
        return None
    order = np.argsort(-s, kind="stable")
    s, t = s[order], t[order]
    last = np.r_[np.flatnonzero(np.diff(s) != 0), s.size - 1]
    tp = np.cumsum(t)[last]
    predicted = last + 1
    recall = tp / n_pos
    precision = tp / predicted
    gains = np.diff(np.r_[0.0, recall])
    return float(np.sum(gains * precision))


def evaluate(y_true, scores, threshold: float = 0.5) -> MetricsReport:
    """Full report for probability scores, labelling ``score >= threshold`` as 1."""
    scores = np.asarray(scores, dtype=float)
    report = basic_metrics(confusion(y_true, (scores >= threshold).astype(int)))
    report.roc_auc = roc_auc(y_true, scores)
    if report.roc_auc is None:
        report.undefined["roc_auc"] = "single-class labels"
    report.pr_auc = pr_auc(y_true, scores)
    if report.pr_auc is None:
        report.undefined["pr_auc"] = "no positive labels"
    return report
