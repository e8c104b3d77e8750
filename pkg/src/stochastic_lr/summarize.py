"""Grouping of training rows and per-group mean/covariance/score summaries.

Two groupings feed the solver: K-means on the standardised features, and
equal-count quantile bins on the baseline scores. Either way every group
must hold at least two rows, otherwise its covariance is undefined.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "MinGroupSizeError",
    "GroupAssignment",
    "GroupSummary",
    "kmeans",
    "quantile_bins",
    "group_summaries",
    "regularize_cov",
    "summaries_to_json",
]

SCORE_CLAMP = 1e-6
MIN_GROUP_SIZE = 2


class MinGroupSizeError(ValueError):
    def __init__(self, group: int, size: int):
        super().__init__(f"group {group} has {size} member(s); at least {MIN_GROUP_SIZE} required")
        self.group = group
        self.size = size


@dataclass(frozen=True)
class GroupAssignment:
    group_of: np.ndarray
    group_count: int
    centers: np.ndarray | None = None
    inertia_history: tuple = field(default=(), compare=False)

    def sizes(self) -> np.ndarray:
        return np.bincount(self.group_of, minlength=self.group_count)

    def validate(self) -> None:
        sizes = self.sizes()
        if sizes.size != self.group_count or np.any(self.group_of >= self.group_count):
            raise ValueError("group index out of range")
        small = np.flatnonzero(sizes < MIN_GROUP_SIZE)
        if small.size:
            raise MinGroupSizeError(int(small[0]), int(sizes[small[0]]))


@dataclass(frozen=True)
class GroupSummary:
    mean: np.ndarray
    covariance: np.ndarray
    mean_score: float
    size: int

    def to_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "covariance": self.covariance.tolist(),
                "mean_score": self.mean_score, "size": self.size}


def _sq_dists(X: np.ndarray, centers: np.ndarray) -> np.ndarray:
    return ((X[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)


def _plusplus(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = X.shape[0]
    centers = [X[rng.integers(n)]]
    closest = ((X - centers[0]) ** 2).sum(axis=1)
    for _ in range(1, k):
        total = closest.sum()
        if total <= 0:
            idx = rng.integers(n)
        else:
            idx = int(np.searchsorted(np.cumsum(closest), rng.random() * total, side="right"))
            idx = min(idx, n - 1)
        centers.append(X[idx])
        closest = np.minimum(closest, ((X - X[idx]) ** 2).sum(axis=1))
    return np.array(centers)


def _repair_empty(X, labels, centers, k):
    # move the point farthest from its own centre in the largest cluster
    for _ in range(k):
        sizes = np.bincount(labels, minlength=k)
        empty = np.flatnonzero(sizes == 0)
        if not empty.size:
            break
        big = int(np.argmax(sizes))
        members = np.flatnonzero(labels == big)
        far = members[np.argmax(((X[members] - centers[big]) ** 2).sum(axis=1))]
        labels[far] = empty[0]
        centers[empty[0]] = X[far]
        centers[big] = X[labels == big].mean(axis=0)
    return labels


def _relabel(labels: np.ndarray, k: int):
    order = []
    for g in labels:
        if g not in order:
            order.append(int(g))
    order += [g for g in range(k) if g not in order]
    mapping = np.empty(k, dtype=int)
    mapping[order] = np.arange(k)
    return mapping[labels], np.array(order)


def kmeans(X, k: int, seed: int = 0, max_iter: int = 300) -> GroupAssignment:
    """Lloyd's algorithm with k-means++ seeding.

    Groups are numbered by first appearance in row order so the labelling
    does not depend on seeding order. ``inertia_history`` records the
    within-cluster sum of squares after every update.

    Raises
    ------
    ValueError
        If ``k`` is outside ``[1, N // 2]``.
    MinGroupSizeError
        If a final cluster has fewer than two members.
    """
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    if not 1 <= k <= n // 2:
        raise ValueError(f"k must lie in [1, {n // 2}] for N={n}, got {k}")
    rng = np.random.default_rng(seed)
    centers = _plusplus(X, k, rng)
    labels = np.argmin(_sq_dists(X, centers), axis=1)
    labels = _repair_empty(X, labels, centers, k)
    history = []
    for _ in range(max_iter):
        centers = np.array([X[labels == g].mean(axis=0) for g in range(k)])
        history.append(float(((X - centers[labels]) ** 2).sum()))
        new = np.argmin(_sq_dists(X, centers), axis=1)
        new = _repair_empty(X, new, centers, k)
        if np.array_equal(new, labels):
            break
        labels = new
    labels, order = _relabel(labels, k)
    centers = centers[order]
    out = GroupAssignment(labels, k, centers, tuple(history))
    out.validate()
    return out


def quantile_bins(scores, q: int) -> GroupAssignment:
    """Split rows into ``q`` equal-count bins by score rank.

    Bin ``b`` holds ranks ``[floor(b N / q), floor((b + 1) N / q))``; ties
    are broken by original row order.
    """
    scores = np.asarray(scores, dtype=float)
    n = scores.size
    if not 1 <= q <= n // 2:
        raise ValueError(f"q must lie in [1, {n // 2}] for N={n}, got {q}")
    order = np.argsort(scores, kind="stable")
    ranks = np.empty(n, dtype=int)
    ranks[order] = np.arange(n)
    starts = (np.arange(q + 1) * n) // q
    bins = np.searchsorted(starts, ranks, side="right") - 1
    out = GroupAssignment(bins.astype(int), q)
    out.validate()
    return out


def regularize_cov(V, floor: float = 1e-8) -> np.ndarray:
    """Return ``V + lam I`` with ``lam = max(floor, 1e-8 * trace(V) / d)``."""
    V = np.atleast_2d(np.asarray(V, dtype=float))
    if V.shape[0] != V.shape[1]:
        raise ValueError(f"covariance must be square, got {V.shape}")
    if not np.allclose(V, V.T, rtol=0.0, atol=1e-9):
        raise ValueError("covariance is not symmetric")
    d = V.shape[0]
    lam = max(floor, 1e-8 * float(np.trace(V)) / d)
    return 0.5 * (V + V.T) + lam * np.eye(d)


def group_summaries(X, scores, assignment: GroupAssignment,
                    floor: float = 1e-8) -> list[GroupSummary]:
    """Per-group sample mean, regularised n-1 covariance and clamped mean score.

    Members are put in a canonical row order first, which makes every
    summary bit-identical under any permutation of the input rows.
    """
    X = np.asarray(X, dtype=float)
    scores = np.asarray(scores, dtype=float)
    assignment.validate()
    out = []
    for g in range(assignment.group_count):
        idx = np.flatnonzero(assignment.group_of == g)
        rows = np.column_stack([X[idx], scores[idx]])
        rows = rows[np.lexsort(rows.T[::-1])]
        Xg, sg = rows[:, :-1], rows[:, -1]
        mean = Xg.mean(axis=0)
        dev = Xg - mean
        cov = dev.T @ dev / (idx.size - 1)
        cov = 0.5 * (cov + cov.T)
        ybar = float(np.clip(sg.mean(), SCORE_CLAMP, 1.0 - SCORE_CLAMP))
        out.append(GroupSummary(mean, regularize_cov(cov, floor), ybar, int(idx.size)))
    return out


def summaries_to_json(groups, path=None) -> str:
    """Debug dump: one object per group with its id and statistics."""
    text = json.dumps([{"group": i, **g.to_dict()} for i, g in enumerate(groups)], indent=2)
    if path is not None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    return text
