"""Column preprocessing and coefficient back-transformation."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset, Preprocess, SolverState
from .errors import DimensionMismatch


@dataclass(frozen=True, eq=False)
class PreprocessInfo:
    mode: Preprocess
    centers: np.ndarray
    scales: np.ndarray
    degenerate: np.ndarray  # columns with zero spread, left unscaled


def preprocess(data: Dataset, mode=Preprocess.STANDARDIZE):
    """Transform the predictor columns.

    ``standardize`` centers each column and divides by its population
    (1/n) standard deviation; ``rescale`` divides by the root mean square
    without centering; ``none`` is the identity. Constant (standardize) or
    all-zero (rescale) columns keep scale 1 and are flagged.
    """
    mode = Preprocess(mode)
    X = data.X
    p = data.p
    if mode is Preprocess.NONE:
        info = PreprocessInfo(mode, np.zeros(p), np.ones(p), np.zeros(p, dtype=bool))
        return data, info
    if mode is Preprocess.STANDARDIZE:
        centers = X.mean(axis=0)
        spread = np.sqrt(np.mean((X - centers) ** 2, axis=0))
    else:
        centers = np.zeros(p)
        spread = np.sqrt(np.mean(X * X, axis=0))
    degenerate = ~(spread > 1e-12 * (1.0 + np.abs(centers)))
    scales = np.where(degenerate, 1.0, spread)
    Z = (X - centers) / scales
    out = Dataset(data.y, Z, data.column_names)
    for a in (centers, scales, degenerate):
        a.setflags(write=False)
    return out, PreprocessInfo(mode, centers, scales, degenerate)


def unstandardize_coefficients(beta0, beta, info: PreprocessInfo):
    """Map coefficients fitted on transformed columns back to the raw columns.

    Works on a single vector ``beta`` (p,) or a stack (K, p) with ``beta0`` (K,).
    """
    beta = np.asarray(beta, dtype=np.float64)
    raw = beta / info.scales
    raw0 = np.asarray(beta0, dtype=np.float64) - raw @ info.centers
    return raw0, raw


def unstandardize(state: SolverState, info: PreprocessInfo) -> SolverState:
    b0, b = unstandardize_coefficients(state.beta0, state.beta, info)
    return SolverState(float(b0), b, state.s.copy(), state.residuals.copy())


def predict(state: SolverState, X_new) -> np.ndarray:
    X_new = np.asarray(X_new, dtype=np.float64)
    if X_new.ndim != 2 or X_new.shape[1] != state.beta.shape[0]:
        raise DimensionMismatch(f"X_new must have {state.beta.shape[0]} columns")
    return state.beta0 + X_new @ state.beta


def restandardize_coefficients(beta0, beta, info: PreprocessInfo):
    """Inverse of :func:`unstandardize_coefficients`: raw-scale coefficients to the transformed scale."""
    beta = np.asarray(beta, dtype=np.float64)
    return np.asarray(beta0, dtype=np.float64) + beta @ info.centers, beta * info.scales
