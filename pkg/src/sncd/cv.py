"""K-fold cross-validation over a shared lambda grid, and prediction errors."""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .data import Dataset, FitConfig, LossFamily, LossSpec, SolutionPath, check_alpha
from .errors import DimensionMismatch, InvalidParameter, TooFewObservations
from .path import _initial_loss, default_min_ratio, fit_path, lambda_grid, null_fit
from .preprocess import preprocess


def _pair(y, yhat):
    y = np.asarray(y, dtype=np.float64).ravel()
    yhat = np.asarray(yhat, dtype=np.float64).ravel()
    if y.shape != yhat.shape:
        raise DimensionMismatch(f"lengths differ: {y.size} vs {yhat.size}")
    return y, yhat


def mape(y, yhat) -> float:
    """Mean absolute prediction error."""
    y, yhat = _pair(y, yhat)
    return float(np.mean(np.abs(y - yhat)))


def qpe(y, yhat, tau: float = 0.5) -> float:
    """Mean check loss of the prediction errors at level ``tau``."""
    if not 0.0 < tau < 1.0:
        raise InvalidParameter("tau must lie in (0, 1)")
    y, yhat = _pair(y, yhat)
    r = y - yhat
    return float(np.mean(r * (tau - (r < 0))))


@dataclass
class CvResult:
    lambdas: np.ndarray
    mean: np.ndarray
    se: np.ndarray
    selected_index: int
    folds: np.ndarray  # fold label per observation, 0..k-1
    criterion: str
    fold_errors: np.ndarray  # (k, K)
    path: Optional[SolutionPath] = None  # fit on all observations over the same grid

    @property
    def selected_lambda(self) -> float:
        return float(self.lambdas[self.selected_index])


def fold_assignments(n: int, k: int, seed: int) -> np.ndarray:
    """Balanced random fold labels; fold sizes differ by at most one."""
    if k < 2:
        raise InvalidParameter("need at least 2 folds")
    if k > n:
        raise TooFewObservations(f"{k} folds requested for {n} observations")
    rng = np.random.default_rng(seed)
    return np.arange(n)[rng.permutation(n)] % k


def shared_grid(data: Dataset, loss: LossSpec, alpha: float, config: FitConfig) -> np.ndarray:
    if config.lambdas is not None:
        return np.array(sorted(config.lambdas, reverse=True))
    work, _ = preprocess(data, config.preprocess)
    _, g = null_fit(work, _initial_loss(work, loss))
    lmax = float(np.max(np.abs(g)) / alpha)
    ratio = config.lambda_min_ratio or default_min_ratio(work.n, work.p)
    return lambda_grid(lmax if lmax > 0 else 1.0, config.nlambda, ratio)


def _criterion(loss: LossSpec):
    if loss.family is LossFamily.QUANTILE:
        return "qpe", lambda y, yh: qpe(y, yh, loss.tau)
    return "mape", mape


def cross_validate(data: Dataset, loss: LossSpec, alpha: float, config: FitConfig = FitConfig(), k: int = 5, fit_full: bool = True) -> CvResult:
    """Cross-validated prediction error along the path.

    All folds use the lambda grid computed from the full data. Folds are
    drawn from ``config.seed`` and fitted on up to ``config.workers``
    threads (default: available CPUs). The selected lambda minimizes the
    mean held-out error; ties go to the larger lambda.
    """
    check_alpha(alpha)
    if data.n < 2:
        raise TooFewObservations("cross-validation needs at least 2 observations")
    folds = fold_assignments(data.n, k, config.seed)
    grid = shared_grid(data, loss, alpha, config)
    cfg = config.replace(lambdas=tuple(float(v) for v in grid))
    name, crit = _criterion(loss)

    def run(f):
        train = np.flatnonzero(folds != f)
        test = np.flatnonzero(folds == f)
        path = fit_path(data.subset(train), loss, alpha, cfg)
        held = data.subset(test)
        pred = path.predict(held.X)
        return np.array([crit(held.y, pred[:, kk]) for kk in range(grid.size)])

    workers = config.workers or os.cpu_count() or 1
    with ThreadPoolExecutor(max_workers=min(workers, k)) as pool:
        errs = np.vstack(list(pool.map(run, range(k))))
    mean = errs.mean(axis=0)
    se = errs.std(axis=0, ddof=1) / np.sqrt(k)
    sel = int(np.argmin(mean))
    full = fit_path(data, loss, alpha, cfg) if fit_full else None
    return CvResult(grid, mean, se, sel, folds, name, errs, full)
