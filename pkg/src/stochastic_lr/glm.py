"""Ordinary logistic regression: loss kernels and a damped Newton fit.

All weight vectors are laid out as ``[intercept, coef_1, ..., coef_d]``; the
intercept column is never part of the feature matrix and is prepended here.
Targets may be fractional (``0 <= y <= 1``) so the same kernels serve group
mean scores.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

logger = logging.getLogger(__name__)

__all__ = [
    "WeightVector",
    "FitReport",
    "sigmoid",
    "log_loss",
    "loss_gradient",
    "loss_hessian",
    "fit_logistic",
    "score",
]


@dataclass(frozen=True)
class WeightVector:
    intercept: float
    coefficients: np.ndarray

    def __post_init__(self):
        coef = np.asarray(self.coefficients, dtype=float).reshape(-1)
        if not (np.isfinite(self.intercept) and np.all(np.isfinite(coef))):
            raise ValueError("weights must be finite")
        object.__setattr__(self, "intercept", float(self.intercept))
        object.__setattr__(self, "coefficients", coef)

    @classmethod
    def from_array(cls, flat) -> "WeightVector":
        flat = np.asarray(flat, dtype=float).reshape(-1)
        return cls(flat[0], flat[1:])

    @classmethod
    def zeros(cls, d: int) -> "WeightVector":
        return cls(0.0, np.zeros(d))

    def to_array(self) -> np.ndarray:
        return np.concatenate([[self.intercept], self.coefficients])

    @property
    def dim(self) -> int:
        return self.coefficients.size


@dataclass(frozen=True)
class FitReport:
    weights: WeightVector
    final_loss: float
    gradient_norm: float
    iterations: int
    converged: bool


def _flat(w) -> np.ndarray:
    if isinstance(w, WeightVector):
        return w.to_array()
    return np.asarray(w, dtype=float).reshape(-1)


def _design(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    return np.hstack([np.ones((X.shape[0], 1)), X])


def _check(w: np.ndarray, A: np.ndarray, y=None) -> None:
    if w.size != A.shape[1]:
        raise ValueError(
            f"dimension mismatch: {w.size} weights for {A.shape[1] - 1} features (+ intercept)")
    if y is not None and np.shape(y) != (A.shape[0],):
        raise ValueError(f"dimension mismatch: {np.size(y)} targets for {A.shape[0]} rows")


def sigmoid(t):
    """Logistic function, stable for large |t| (scalar or array)."""
    out = expit(np.asarray(t, dtype=float))
    return out if out.ndim else float(out)


def log_loss(w, X, y) -> float:
    """Summed cross-entropy ``sum(log(1 + e^z) - y z)`` with ``z = w0 + X w``."""
    A = _design(X)
    w = _flat(w)
    y = np.asarray(y, dtype=float)
    _check(w, A, y)
    z = A @ w
    return float(np.sum(np.logaddexp(0.0, z) - y * z))


def loss_gradient(w, X, y) -> np.ndarray:
    A = _design(X)
    w = _flat(w)
    y = np.asarray(y, dtype=float)
    _check(w, A, y)
    return A.T @ (sigmoid(A @ w) - y)


def loss_hessian(w, X) -> np.ndarray:
    A = _design(X)
    w = _flat(w)
    _check(w, A)
    p = sigmoid(A @ w)
    return (A * (p * (1.0 - p))[:, None]).T @ A


def fit_logistic(X, y, tol: float = 1e-8, max_iter: int = 100,
                 ridge: float = 1e-8) -> FitReport:
    """Minimise :func:`log_loss` by damped Newton with Armijo backtracking.

    Stops once the gradient infinity-norm is at most ``tol``. A separable
    problem never reaches that and ends with ``converged=False`` after
    ``max_iter`` steps; the last iterate is still returned.
    """
    A = _design(X)
    y = np.asarray(y, dtype=float)
    n, p = A.shape
    if n < 2:
        raise ValueError("fit_logistic needs at least 2 rows")
    _check(np.zeros(p), A, y)

    def loss_of(w):
        z = A @ w
        return float(np.sum(np.logaddexp(0.0, z) - y * z))

    w = np.zeros(p)
    loss = loss_of(w)
    it = 0
    for it in range(1, max_iter + 1):
        prob = sigmoid(A @ w)
        grad = A.T @ (prob - y)
        if np.max(np.abs(grad), initial=0.0) <= tol:
            it -= 1
            break
        H = (A * (prob * (1.0 - prob))[:, None]).T @ A + ridge * np.eye(p)
        step = np.linalg.solve(H, -grad)
        slope = float(grad @ step)
        s = 1.0
        while True:
            trial = loss_of(w + s * step)
            if trial <= loss + 1e-4 * s * slope or s < 1e-12:
                break
            s *= 0.5
        if not np.isfinite(trial):
            raise FloatingPointError(f"non-finite loss at Newton iteration {it}")
        if trial > loss:
            # no descent possible at working precision
            break
        w = w + s * step
        loss = trial
    grad = A.T @ (sigmoid(A @ w) - y)
    gnorm = float(np.max(np.abs(grad), initial=0.0))
    converged = gnorm <= tol
    if not converged:
        logger.debug("fit_logistic stopped at gradient norm %.3g after %d steps", gnorm, it)
    return FitReport(WeightVector.from_array(w), loss, gnorm, it, converged)


def score(w, X) -> np.ndarray:
    """Predicted P(y=1) for each row of ``X``."""
    A = _design(X)
    w = _flat(w)
    _check(w, A)
    return sigmoid(A @ w)
