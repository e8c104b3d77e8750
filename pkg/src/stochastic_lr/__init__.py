"""Chance-constrained ("stochastic") logistic regression over group summaries.

Rows are grouped (K-means or score quantiles), each group is reduced to its
mean, covariance and mean score, and the weights are fit under per-group
quadratic constraints derived from a probabilistic bound. The constraint
parameters are tuned by simulated annealing and the result is compared with
ordinary logistic regression.
"""
from .annealer import AnnealResult, AnnealSchedule, anneal
from .glm import FitReport, WeightVector, fit_logistic, log_loss, score, sigmoid
from .ingestion import DataError, Dataset, SplitSpec, StandardizedFrame, load_csv, split, \
    standardize
from .metrics import ConfusionCounts, MetricsReport, evaluate
from .normal import norm_cdf, probit
from .solver import ChanceConfig, ReducedProblem, SolverReport, Status, assemble_p4, \
    assemble_reduced, constraint_radius, solve_slr
from .summarize import GroupAssignment, GroupSummary, MinGroupSizeError, group_summaries, \
    kmeans, quantile_bins, regularize_cov
from .trainer import SweepCurve, TrainedModel, load_model, predict, save_model, sweep

__version__ = "0.1.0"

__all__ = [
    "AnnealResult", "AnnealSchedule", "anneal",
    "FitReport", "WeightVector", "fit_logistic", "log_loss", "score", "sigmoid",
    "DataError", "Dataset", "SplitSpec", "StandardizedFrame", "load_csv", "split", "standardize",
    "ConfusionCounts", "MetricsReport", "evaluate",
    "norm_cdf", "probit",
    "ChanceConfig", "ReducedProblem", "SolverReport", "Status", "assemble_p4",
    "assemble_reduced", "constraint_radius", "solve_slr",
    "GroupAssignment", "GroupSummary", "MinGroupSizeError", "group_summaries", "kmeans",
    "quantile_bins", "regularize_cov",
    "SweepCurve", "TrainedModel", "load_model", "predict", "save_model", "sweep",
]
