"""Elastic-net regularization paths for Huber, quantile and least-squares regression.

The main entry point is :func:`fit_path`; :func:`cross_validate` selects a
penalty level, :func:`sna_path` runs the full Newton-system comparison
solver, and :func:`oracle_solve` is a slow proximal-gradient reference.
"""
__version__ = "0.1.0"

from .data import (
    Dataset,
    FitConfig,
    LossFamily,
    LossSpec,
    PenaltySpec,
    Preprocess,
    Screening,
    SolutionPath,
    SolverState,
    validate_dataset,
)
from .errors import *  # noqa: F401,F403
from .losses import objective, relative_difference
from .core import kkt_residual, solve_fixed_lambda
from .path import fit_path, gamma_heuristic, lambda_grid, lambda_max
from .cv import CvResult, cross_validate, mape, qpe
from .sna import SnaStatus, sna_path, sna_solve
from .oracle import oracle_objective, oracle_solve
from .synth import synth_generate

__all__ = [
    "CvResult", "Dataset", "FitConfig", "LossFamily", "LossSpec", "PenaltySpec", "Preprocess",
    "Screening", "SnaStatus", "SolutionPath", "SolverState", "cross_validate", "fit_path",
    "gamma_heuristic", "kkt_residual", "lambda_grid", "lambda_max", "mape", "objective",
    "oracle_objective", "oracle_solve", "qpe", "relative_difference", "sna_path", "sna_solve",
    "solve_fixed_lambda", "synth_generate", "validate_dataset",
]
