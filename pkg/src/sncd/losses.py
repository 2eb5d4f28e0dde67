"""Scalar loss kernels, soft-thresholding and objective evaluation.

All kernels accept scalars or arrays and return the same kind.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset, LossFamily, LossSpec, PenaltySpec, SolverState
from .errors import DimensionMismatch


def _out(v):
    return float(v) if np.ndim(v) == 0 else v


def huber_value(t, gamma):
    t = np.asarray(t, dtype=np.float64)
    a = np.abs(t)
    return _out(np.where(a <= gamma, t * t / (2.0 * gamma), a - 0.5 * gamma))


def huber_deriv(t, gamma):
    t = np.asarray(t, dtype=np.float64)
    return _out(np.where(np.abs(t) <= gamma, t / gamma, np.sign(t)))


def huber_newton_weight(t, gamma):
    """Newton derivative of ``huber_deriv``: 1/gamma inside the band (inclusive), else 0."""
    t = np.asarray(t, dtype=np.float64)
    return _out(np.where(np.abs(t) <= gamma, 1.0 / gamma, 0.0))


def quantile_value(t, tau):
    t = np.asarray(t, dtype=np.float64)
    return _out(t * (tau - (t < 0)))


def ha_value(t, tau, gamma):
    """Huber approximation of the check loss, ``(h_gamma(t) + (2 tau - 1) t) / 2``."""
    t = np.asarray(t, dtype=np.float64)
    return _out(0.5 * (huber_value(t, gamma) + (2.0 * tau - 1.0) * t))


def soft_threshold(z):
    z = np.asarray(z, dtype=np.float64)
    return _out(np.sign(z) * np.maximum(np.abs(z) - 1.0, 0.0))


def loss_value(r, loss: LossSpec, gamma=None):
    """Per-observation loss ``l(r)`` for the given family."""
    g = loss.gamma if gamma is None else gamma
    fam = loss.family
    if fam is LossFamily.HUBER:
        return huber_value(r, g)
    if fam is LossFamily.QUANTILE:
        return ha_value(r, loss.tau, g)
    r = np.asarray(r, dtype=np.float64)
    return _out(0.5 * r * r)


def loss_score(r, loss: LossSpec, gamma=None):
    """Derivative ``l'(r)``; for the smoothed check loss this is ``(h' + 2 tau - 1) / 2``."""
    g = loss.gamma if gamma is None else gamma
    fam = loss.family
    if fam is LossFamily.HUBER:
        return huber_deriv(r, g)
    if fam is LossFamily.QUANTILE:
        return _out(0.5 * (np.asarray(huber_deriv(r, g)) + 2.0 * loss.tau - 1.0))
    return _out(np.array(r, dtype=np.float64))


def loss_weight(r, loss: LossSpec, gamma=None):
    """Newton derivative of :func:`loss_score`."""
    g = loss.gamma if gamma is None else gamma
    fam = loss.family
    if fam is LossFamily.HUBER:
        return huber_newton_weight(r, g)
    if fam is LossFamily.QUANTILE:
        return _out(0.5 * np.asarray(huber_newton_weight(r, g)))
    return _out(np.ones_like(np.asarray(r, dtype=np.float64)))


@dataclass(frozen=True)
class ObjectiveValue:
    loss_part: float
    penalty_part: float
    total: float


def penalty_value(beta, penalty: PenaltySpec) -> float:
    beta = np.asarray(beta, dtype=np.float64)
    a = penalty.alpha
    return float(penalty.lam * (a * np.sum(np.abs(beta)) + (1.0 - a) * 0.5 * np.dot(beta, beta)))


def objective(state: SolverState, data: Dataset, loss: LossSpec, penalty: PenaltySpec) -> ObjectiveValue:
    """Penalized objective at ``state``; residuals are recomputed from the coefficients."""
    beta = np.asarray(state.beta, dtype=np.float64)
    if beta.shape != (data.p,):
        raise DimensionMismatch(f"beta has shape {beta.shape}, data has p={data.p}")
    if loss.family is not LossFamily.LS and loss.gamma is None:
        raise DimensionMismatch("loss needs a concrete gamma to evaluate")
    r = data.y - state.beta0 - data.X @ beta
    lp = float(np.mean(loss_value(r, loss)))
    pp = penalty_value(beta, penalty)
    return ObjectiveValue(lp, pp, lp + pp)


def quantile_objective(state: SolverState, data: Dataset, tau: float, penalty: PenaltySpec) -> float:
    """Exact (unsmoothed) check-loss objective."""
    r = data.y - state.beta0 - data.X @ np.asarray(state.beta)
    return float(np.mean(quantile_value(r, tau))) + penalty_value(state.beta, penalty)


def absolute_objective(state: SolverState, data: Dataset, penalty: PenaltySpec) -> float:
    """Least-absolute-deviation objective ``mean|r| + penalty``."""
    r = data.y - state.beta0 - data.X @ np.asarray(state.beta)
    return float(np.mean(np.abs(r))) + penalty_value(state.beta, penalty)


def relative_difference(f_a: float, f_b: float) -> float:
    if f_b == 0:
        raise ZeroDivisionError("relative difference against a zero objective")
    return (f_a - f_b) / f_b
