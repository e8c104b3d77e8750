"""Simulated annealing over the chance parameters (alpha, beta).

Each candidate is scored by solving the reduced problem and taking the
mean log-loss of the resulting weights on the training rows.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .glm import WeightVector, log_loss
from .solver import ChanceConfig, Status, assemble_reduced, solve_slr

__all__ = [
    "AnnealSchedule",
    "AnnealResult",
    "TraceRow",
    "propose",
    "metropolis_accept",
    "anneal",
    "write_trace_csv",
]

BETA_MIN = 1e-4
BETA_MAX = 1.0 - 1e-4
DEFAULT_START = ChanceConfig(1.0, 0.5)


@dataclass(frozen=True)
class AnnealSchedule:
    initial_temp: float = 1.0
    cooling: float = 0.9
    steps_per_temp: int = 5
    min_temp: float = 1e-3
    max_evals: int = 300
    step_alpha: float = 0.5
    step_beta: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if not self.initial_temp > 0 or not self.min_temp > 0:
            raise ValueError("temperatures must be positive")
        if not self.min_temp < self.initial_temp:
            raise ValueError("min_temp must be below initial_temp")
        if not 0.0 < self.cooling < 1.0:
            raise ValueError("cooling must lie in (0, 1)")
        if self.steps_per_temp < 1 or self.max_evals < 1:
            raise ValueError("steps_per_temp and max_evals must be >= 1")
        if self.step_alpha < 0 or self.step_beta < 0:
            raise ValueError("step sizes must be non-negative")


@dataclass(frozen=True)
class TraceRow:
    index: int
    config: ChanceConfig
    loss: float
    accepted: bool
    temperature: float


@dataclass
class AnnealResult:
    best_config: ChanceConfig
    best_weights: WeightVector
    best_loss: float
    evals: int
    trace: list = field(default_factory=list)

    def best_so_far(self) -> np.ndarray:
        """Best accepted loss after each evaluation."""
        losses = [row.loss if row.accepted else math.inf for row in self.trace]
        return np.minimum.accumulate(losses)


def propose(current: ChanceConfig, schedule: AnnealSchedule,
            rng: np.random.Generator) -> ChanceConfig:
    """Gaussian step; alpha reflected at 0, beta clamped inside (0, 1)."""
    alpha = abs(current.alpha + rng.normal(0.0, schedule.step_alpha))
    beta = min(max(current.beta + rng.normal(0.0, schedule.step_beta), BETA_MIN), BETA_MAX)
    return ChanceConfig(alpha, beta)


def metropolis_accept(delta: float, temp: float, rng: np.random.Generator) -> bool:
    if temp <= 0:
        raise ValueError("temperature must be positive")
    if delta <= 0:
        return True
    return bool(rng.random() < math.exp(-delta / temp))


def _evaluate(groups, X, y, config, solver_opts):
    report = solve_slr(assemble_reduced(groups, config), **solver_opts)
    if report.status in (Status.INFEASIBLE, Status.NUMERICAL_FAILURE):
        return math.inf, report.weights
    return log_loss(report.weights, X, y) / len(y), report.weights


def anneal(groups, train_X, train_y, schedule: AnnealSchedule | None = None,
           initial: ChanceConfig = DEFAULT_START, solver_opts: dict | None = None) -> AnnealResult:
    """Minimise training mean log-loss over (alpha, beta).

    Candidates whose solve fails score ``inf`` and are rejected. The
    temperature is held for ``steps_per_temp`` proposals and then multiplied
    by ``cooling``; the walk ends below ``min_temp`` or at ``max_evals``
    evaluations (the starting point counts as one). The best accepted
    candidate is returned, not the final position.
    """
    schedule = schedule or AnnealSchedule()
    solver_opts = solver_opts or {}
    groups = list(groups)
    X = np.asarray(train_X, dtype=float)
    y = np.asarray(train_y, dtype=float)
    rng = np.random.default_rng(schedule.seed)

    temp = schedule.initial_temp
    current = initial
    current_loss, weights = _evaluate(groups, X, y, current, solver_opts)
    if not math.isfinite(current_loss):
        raise RuntimeError(f"initial configuration {initial} could not be solved")
    best = (current, weights, current_loss)
    trace = [TraceRow(0, current, current_loss, True, temp)]
    evals = 1
    while temp >= schedule.min_temp and evals < schedule.max_evals:
        for _ in range(schedule.steps_per_temp):
            if evals >= schedule.max_evals:
                break
            candidate = propose(current, schedule, rng)
            loss, w = _evaluate(groups, X, y, candidate, solver_opts)
            accepted = math.isfinite(loss) and metropolis_accept(loss - current_loss, temp, rng)
            if accepted:
                current, current_loss = candidate, loss
                if loss < best[2]:
                    best = (candidate, w, loss)
            trace.append(TraceRow(evals, candidate, loss, accepted, temp))
            evals += 1
        temp *= schedule.cooling
    return AnnealResult(best[0], best[1], best[2], evals, trace)


def write_trace_csv(trace, path) -> None:
    """Write trace rows (or an :class:`AnnealResult`'s trace) as CSV."""
    rows = trace.trace if isinstance(trace, AnnealResult) else trace
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["index", "alpha", "beta", "loss", "accepted", "temperature"])
        for row in rows:
            writer.writerow([row.index, repr(row.config.alpha), repr(row.config.beta),
                             repr(row.loss), int(row.accepted), repr(row.temperature)])
