"""Chance-constrained logistic regression over group summaries.

Each group ``g`` contributes one logistic term on its mean vector ``m_g``
with fractional target ``ybar_g``, plus the requirement that the group's
linear predictor stays within ``alpha`` of its expectation with probability
at least ``beta``. Under a Gaussian model that chance constraint becomes the
ellipsoid ``w_c' V_g w_c <= r**2`` with ``r = alpha / probit((1 + beta) / 2)``,
where ``w_c`` is the coefficient block (the intercept carries no variance).

Two encodings are provided:

* :class:`ReducedProblem` eliminates the per-group auxiliaries
  ``eps_g = w0 + w_c' m_g`` and is what :func:`solve_slr` works on.
* :class:`FullP4` keeps ``Z = [w0, w_1..w_d, eps_1..eps_G]`` with zero-padded
  block covariances and paired linear equalities. It is evaluation-only and
  exists to cross-check the reduction.
"""
from __future__ import annotations

import enum
import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .glm import WeightVector, sigmoid
from .normal import probit

logger = logging.getLogger(__name__)

__all__ = [
    "ChanceConfig",
    "ReducedProblem",
    "FullP4",
    "Status",
    "SolverReport",
    "constraint_radius",
    "assemble_reduced",
    "assemble_p4",
    "solve_slr",
    "check_kkt",
    "write_trace",
]

# barrier defaults
MU = 10.0
T0 = 1.0
NEWTON_TOL = 1e-9
ARMIJO_C = 1e-4
ARMIJO_SHRINK = 0.5
FEAS_TOL = 1e-6
STAT_TOL = 1e-5
MAX_POLISH = 3


@dataclass(frozen=True)
class ChanceConfig:
    """Constraint width ``alpha >= 0`` and probability level ``0 < beta < 1``."""

    alpha: float
    beta: float

    def __post_init__(self):
        if not (math.isfinite(self.alpha) and self.alpha >= 0):
            raise ValueError(f"alpha must be finite and >= 0, got {self.alpha}")
        if not 0.0 < self.beta < 1.0:
            raise ValueError(f"beta must lie in (0, 1), got {self.beta}")
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "beta", float(self.beta))


def constraint_radius(config: ChanceConfig) -> float:
    """``alpha / probit((1 + beta) / 2)``.

    Returns ``math.inf`` (no constraint) when ``beta`` is so small that the
    probit level vanishes or the quotient overflows.
    """
    if config.alpha == 0.0:
        return 0.0
    level = (1.0 + config.beta) / 2.0
    z = probit(level) if level > 0.5 else 0.0
    if z <= 0.0:
        return math.inf
    try:
        r = config.alpha / z
    except OverflowError:
        return math.inf
    return r if math.isfinite(r) else math.inf


@dataclass(frozen=True)
class ReducedProblem:
    """Equality-eliminated program in ``w = [w0, w_c]``.

    ``means`` is G x d, ``covs`` G x d x d, ``targets`` the group mean scores
    and ``radius_sq`` one bound per group (``inf`` means unconstrained).
    """

    means: np.ndarray
    covs: np.ndarray
    targets: np.ndarray
    radius_sq: np.ndarray
    config: ChanceConfig | None = None

    def __post_init__(self):
        M = np.atleast_2d(np.asarray(self.means, dtype=float))
        V = np.asarray(self.covs, dtype=float).reshape(M.shape[0], M.shape[1], M.shape[1])
        y = np.asarray(self.targets, dtype=float).reshape(-1)
        r2 = np.broadcast_to(np.asarray(self.radius_sq, dtype=float), y.shape).copy()
        if M.shape[0] == 0:
            raise ValueError("at least one group is required")
        if y.size != M.shape[0]:
            raise ValueError("one target per group required")
        if np.any(np.isnan(r2)) or np.any(r2 < 0):
            raise ValueError("radius_sq must be >= 0")
        for name, arr in (("means", M), ("covs", V), ("targets", y)):
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "radius_sq", r2)

    @property
    def n_groups(self) -> int:
        return self.means.shape[0]

    @property
    def dim(self) -> int:
        return self.means.shape[1]

    @property
    def unconstrained(self) -> bool:
        return bool(np.all(np.isinf(self.radius_sq)))

    def objective(self, w) -> float:
        w = np.asarray(w, dtype=float)
        z = w[0] + self.means @ w[1:]
        return float(np.sum(np.logaddexp(0.0, z) - self.targets * z))

    def gradient(self, w) -> np.ndarray:
        w = np.asarray(w, dtype=float)
        res = sigmoid(w[0] + self.means @ w[1:]) - self.targets
        return np.concatenate([[res.sum()], self.means.T @ res])

    def hessian(self, w) -> np.ndarray:
        w = np.asarray(w, dtype=float)
        p = sigmoid(w[0] + self.means @ w[1:])
        A = np.hstack([np.ones((self.n_groups, 1)), self.means])
        return (A * (p * (1 - p))[:, None]).T @ A

    def constraint_values(self, w) -> np.ndarray:
        """``g_g(w) = w_c' V_g w_c - r_g**2`` (feasible when <= 0)."""
        wc = np.asarray(w, dtype=float)[1:]
        return np.einsum("i,gij,j->g", wc, self.covs, wc) - self.radius_sq

    def constraint_gradients(self, w) -> np.ndarray:
        """G x (d+1) matrix of constraint gradients (zero intercept column)."""
        wc = np.asarray(w, dtype=float)[1:]
        out = np.zeros((self.n_groups, self.dim + 1))
        out[:, 1:] = 2.0 * self.covs @ wc
        return out


def assemble_reduced(groups, config) -> ReducedProblem:
    """Build the reduced problem from group summaries.

    ``config`` is a single :class:`ChanceConfig` shared by all groups or a
    sequence with one per group.
    """
    groups = list(groups)
    if not groups:
        raise ValueError("at least one group is required")
    configs = [config] * len(groups) if isinstance(config, ChanceConfig) else list(config)
    if len(configs) != len(groups):
        raise ValueError("one ChanceConfig per group required")
    r2 = np.array([constraint_radius(c) ** 2 for c in configs])
    return ReducedProblem(
        means=np.array([g.mean for g in groups]),
        covs=np.array([g.covariance for g in groups]),
        targets=np.array([g.mean_score for g in groups]),
        radius_sq=r2,
        config=config if isinstance(config, ChanceConfig) else None,
    )


@dataclass(frozen=True)
class FullP4:
    """Literal lifted encoding over ``Z = [w0, w_1..w_d, eps_1..eps_G]``.

    ``blocks[g]`` is the (d+1+G)-square matrix with ``V_g`` in the coefficient
    rows/columns and zeros elsewhere; ``P[g]`` is ``[1, m_g, 0.., -1, ..0]``
    with the -1 in slot ``d + 1 + g``, so ``P[g] @ Z = w0 + w_c' m_g - eps_g``.
    """

    d: int
    blocks: np.ndarray
    P: np.ndarray
    targets: np.ndarray
    alphas: np.ndarray
    betas: np.ndarray

    @property
    def n_groups(self) -> int:
        return self.P.shape[0]

    @property
    def z_dim(self) -> int:
        return self.d + 1 + self.n_groups

    def objective(self, Z) -> float:
        eps = np.asarray(Z, dtype=float)[self.d + 1:]
        return float(-np.sum(self.targets * eps - np.logaddexp(0.0, eps)))

    def quad_forms(self, Z) -> np.ndarray:
        Z = np.asarray(Z, dtype=float)
        return np.einsum("i,gij,j->g", Z, self.blocks, Z)

    def constraints(self, Z) -> dict:
        """The four constraint families, each required to be <= 0.

        The quotient forms are evaluated as written; where the quadratic form
        is zero they are ``-inf`` (satisfied).
        """
        q = self.quad_forms(Z)
        with np.errstate(divide="ignore"):
            ratio = np.where(q > 0, self.alphas / np.sqrt(np.where(q > 0, q, 1.0)), np.inf)
        upper = np.array([probit((1 + b) / 2) for b in self.betas])
        lower = np.array([probit((1 - b) / 2) for b in self.betas])
        lin = self.P @ np.asarray(Z, dtype=float)
        return {
            "upper_tail": upper - ratio,
            "lower_tail": -ratio - lower,
            "mean_le": lin,
            "mean_ge": -lin,
        }

    def split(self, Z):
        """Return ``(WeightVector, eps)`` from a lifted vector."""
        Z = np.asarray(Z, dtype=float)
        return WeightVector.from_array(Z[: self.d + 1]), Z[self.d + 1:]


def assemble_p4(groups, config) -> FullP4:
    groups = list(groups)
    G = len(groups)
    if G == 0:
        raise ValueError("at least one group is required")
    d = groups[0].mean.size
    n = d + 1 + G
    configs = [config] * G if isinstance(config, ChanceConfig) else list(config)
    blocks = np.zeros((G, n, n))
    P = np.zeros((G, n))
    for g, s in enumerate(groups):
        blocks[g, 1:d + 1, 1:d + 1] = s.covariance
        P[g, 0] = 1.0
        P[g, 1:d + 1] = s.mean
        P[g, d + 1 + g] = -1.0
    return FullP4(d, blocks, P, np.array([s.mean_score for s in groups]),
                  np.array([c.alpha for c in configs]), np.array([c.beta for c in configs]))


class Status(str, enum.Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    MAX_ITER = "MaxIter"
    NUMERICAL_FAILURE = "NumericalFailure"


@dataclass
class SolverReport:
    weights: WeightVector
    epsilons: np.ndarray
    objective: float
    max_constraint_violation: float
    kkt_stationarity: float
    barrier_outer_iters: int
    newton_total_iters: int
    status: Status
    multipliers: np.ndarray
    complementarity: float = 0.0
    trace: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.status in (Status.OPTIMAL, Status.MAX_ITER)


def _residuals(problem: ReducedProblem, w: np.ndarray, lam: np.ndarray, fixed_coef: bool):
    g = problem.constraint_values(w)
    finite = np.isfinite(problem.radius_sq)
    feas = float(np.max(np.maximum(g[finite], 0.0), initial=0.0))
    grad = problem.gradient(w)
    if fixed_coef:
        # coefficient block pinned at zero; its multipliers are unbounded
        return abs(float(grad[0])), 0.0, feas
    J = problem.constraint_gradients(w)
    stat = float(np.max(np.abs(grad + lam[finite] @ J[finite])))
    comp = float(np.max(np.abs(lam[finite] * g[finite]), initial=0.0))
    return stat, comp, feas


def _intercept_only(problem: ReducedProblem, max_iter: int):
    # coefficient block forced to zero: 1-d Newton in w0
    w0 = 0.0
    it = 0
    for it in range(1, max_iter + 1):
        p = sigmoid(w0 * np.ones(problem.n_groups))
        grad = float(np.sum(p - problem.targets))
        hess = float(np.sum(p * (1 - p)))
        if abs(grad) <= 1e-13 * problem.n_groups:
            break
        w0 -= grad / hess
    return w0, it


def solve_slr(problem: ReducedProblem, tol: float = 1e-6, max_iter: int = 50,
              newton_tol: float = NEWTON_TOL, max_newton: int = 100,
              mu: float = MU, t0: float = T0, ridge: float = 1e-10,
              grad_tol: float = 1e-9) -> SolverReport:
    """Log-barrier interior-point solve of the reduced problem.

    Minimises ``J(w) - (1/t) sum_g log(r_g**2 - w_c' V_g w_c)`` by damped
    Newton from the strictly feasible ``w = 0``, then sets ``t <- mu t`` until
    the duality-gap bound ``m / t`` drops to ``tol`` (``m`` = number of
    finite constraints). Multipliers are recovered as ``1 / (t slack_g)``.

    A zero radius pins the coefficient block to zero and only the
    intercept is optimised; infinite radii drop their constraint.
    """
    G, d = problem.n_groups, problem.dim
    finite = np.isfinite(problem.radius_sq)
    r2 = problem.radius_sq
    trace = []

    if np.any(finite & (r2 == 0.0)):
        w0, it = _intercept_only(problem, max_newton)
        w = np.concatenate([[w0], np.zeros(d)])
        lam = np.full(G, np.nan)
        stat, comp, feas = _residuals(problem, w, lam, fixed_coef=True)
        status = Status.OPTIMAL if stat <= STAT_TOL else Status.NUMERICAL_FAILURE
        return _report(problem, w, lam, stat, comp, feas, 0, it, status, trace)

    covs = problem.covs[finite]
    bounds = r2[finite]
    m = int(finite.sum())
    A = np.hstack([np.ones((G, 1)), problem.means])
    y = problem.targets
    flat_covs = covs.reshape(m, d * d)

    def phi(w, t):
        wc = w[1:]
        s = bounds - (covs @ wc) @ wc
        if m and s.min() <= 0:
            return math.inf
        z = A @ w
        return float(np.logaddexp(0.0, z).sum() - y @ z - np.log(s).sum() / t)

    w = np.zeros(d + 1)
    t = t0 if m else 1.0
    outer = newton_total = 0
    status = Status.MAX_ITER
    ridge_eye = ridge * np.eye(d + 1)
    for outer in range(1, max_iter + 1):
        n_steps = polish = 0
        value = phi(w, t)
        for _ in range(max_newton):
            p = sigmoid(A @ w)
            grad = A.T @ (p - y)
            hess = (A.T * (p * (1.0 - p))) @ A + ridge_eye
            if m:
                Vw = covs @ w[1:]
                s = bounds - Vw @ w[1:]
                scaled = Vw / s[:, None]
                grad[1:] += (2.0 / t) * scaled.sum(axis=0)
                hess[1:, 1:] += (2.0 / t) * ((1.0 / s) @ flat_covs).reshape(d, d)
                hess[1:, 1:] += (4.0 / t) * (scaled.T @ scaled)
            try:
                step = -np.linalg.solve(hess, grad)
            except np.linalg.LinAlgError:
                status = Status.NUMERICAL_FAILURE
                break
            decrement = float(-grad @ step)
            if not np.isfinite(decrement):
                status = Status.NUMERICAL_FAILURE
                break
            if decrement / 2.0 <= newton_tol:
                # quadratic region: undamped polishing steps while they stay feasible
                if np.max(np.abs(grad)) <= grad_tol or polish >= MAX_POLISH:
                    break
                trial = phi(w + step, t)
                if not math.isfinite(trial):
                    break
                w = w + step
                value = trial
                polish += 1
                n_steps += 1
                continue
            a = 1.0
            while a > 1e-14:
                trial = phi(w + a * step, t)
                if trial <= value - ARMIJO_C * a * decrement:
                    break
                a *= ARMIJO_SHRINK
            else:
                # no Armijo progress at working precision: centred as far as it goes
                break
            w = w + a * step
            value = trial
            n_steps += 1
        newton_total += n_steps
        if status is Status.NUMERICAL_FAILURE or not np.all(np.isfinite(w)):
            status = Status.NUMERICAL_FAILURE
            break
        s = bounds - (covs @ w[1:]) @ w[1:]
        trace.append({"t": t, "objective": problem.objective(w),
                      "max_slack": float(np.max(s, initial=0.0)), "newton_steps": n_steps})
        if m == 0 or m / t <= tol:
            status = Status.OPTIMAL
            break
        t *= mu

    lam = np.zeros(G)
    if m:
        lam[finite] = 1.0 / (t * (bounds - (covs @ w[1:]) @ w[1:]))
    stat, comp, feas = _residuals(problem, w, lam, fixed_coef=False)
    if status is Status.OPTIMAL and (feas > FEAS_TOL or stat > STAT_TOL):
        logger.debug("barrier finished with stationarity %.3g, feasibility %.3g", stat, feas)
        status = Status.NUMERICAL_FAILURE
    return _report(problem, w, lam, stat, comp, feas, outer, newton_total, status, trace)


def _report(problem, w, lam, stat, comp, feas, outer, newton, status, trace) -> SolverReport:
    finite_w = np.all(np.isfinite(w))
    weights = WeightVector.from_array(w if finite_w else np.zeros_like(w))
    eps = problem.means @ w[1:] + w[0]
    return SolverReport(
        weights=weights,
        epsilons=eps,
        objective=problem.objective(w) if finite_w else math.nan,
        max_constraint_violation=feas,
        kkt_stationarity=stat,
        barrier_outer_iters=outer,
        newton_total_iters=newton,
        status=status,
        multipliers=lam,
        complementarity=comp,
        trace=trace,
    )


def check_kkt(report: SolverReport, problem: ReducedProblem):
    """Recompute ``(stationarity, complementarity, feasibility)`` for a report.

    Stationarity is the infinity-norm of ``grad J + sum lam_g grad g_g``,
    complementarity ``max |lam_g g_g|`` and feasibility ``max max(0, g_g)``.
    """
    w = report.weights.to_array()
    fixed = bool(np.any(np.isfinite(problem.radius_sq) & (problem.radius_sq == 0.0)))
    return _residuals(problem, w, report.multipliers, fixed_coef=fixed)


def write_trace(report: SolverReport, path) -> None:
    """Dump the per-outer-iteration barrier trace as JSON lines."""
    with open(path, "w", encoding="utf-8") as fh:
        for row in report.trace:
            fh.write(json.dumps(row) + "\n")
