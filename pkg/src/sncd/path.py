"""Pathwise optimization over a decreasing lambda grid.

Each lambda is warm-started from the previous solution. With the adaptive
strong rule (ASR) the solver first cycles only over an eligible set built
from the previous gradient, then checks the optimality conditions of the
excluded predictors and re-solves with any violators added.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _kernels
from .core import WorkingSet, column_factors, gradient, kernel_args, kkt_residual, solve_fixed_lambda
from .data import (
    Dataset,
    FitConfig,
    LambdaDiagnostics,
    LossFamily,
    LossSpec,
    PenaltySpec,
    Screening,
    SolutionPath,
    SolverState,
    check_alpha,
)
from .errors import InvalidParameter
from .losses import objective
from .preprocess import preprocess, unstandardize_coefficients

GAMMA_FLOOR = 0.001
MAX_VIOLATION_ROUNDS = 100


@dataclass
class ScreeningState:
    """``c`` is the screening gradient ``-(1/n) sum l'(r_i) x_ij`` at the current solution."""

    c: np.ndarray
    M: float = 1.0
    eligible: Optional[WorkingSet] = None
    violations_total: int = 0


def default_min_ratio(n: int, p: int) -> float:
    return 0.05 if p > n else 0.001


def lambda_grid(lambda_max: float, nlambda: int, lambda_min_ratio: float) -> np.ndarray:
    """Geometric grid from ``lambda_max`` down to ``lambda_max * lambda_min_ratio``."""
    if nlambda < 2:
        raise InvalidParameter("nlambda must be >= 2")
    grid = lambda_max * np.power(lambda_min_ratio, np.arange(nlambda) / (nlambda - 1))
    grid[0] = lambda_max
    return grid


def gamma_heuristic(prev_gamma: float, residuals) -> float:
    """Smoothing width for the next lambda of a quantile path.

    The ``ceil(0.1 n)``-th smallest absolute residual, capped by the
    previous width and floored at 0.001.
    """
    a = np.sort(np.abs(np.asarray(residuals, dtype=np.float64)))
    k = max(int(math.ceil(0.1 * a.size)), 1)
    return max(min(float(a[k - 1]), prev_gamma), GAMMA_FLOOR)


def null_fit(data: Dataset, loss: LossSpec):
    """Intercept-only fit. Returns (state, gradient) with ``s`` still zero."""
    code, gamma, tau = kernel_args(loss)
    state = SolverState.null(data)
    b0 = np.array([0.0])
    r = np.array(data.y, dtype=np.float64)
    _kernels.fit_intercept(r, b0, code, gamma, tau, 2000)
    state.beta0 = float(b0[0])
    state.residuals = r
    return state, gradient(r, data, loss)


def _initial_loss(data: Dataset, loss: LossSpec) -> LossSpec:
    if loss.family is LossFamily.QUANTILE and loss.gamma is None:
        return loss.with_gamma(gamma_heuristic(math.inf, data.y))
    return loss


def lambda_max(data: Dataset, loss: LossSpec, alpha: float) -> float:
    """Smallest lambda at which the all-zero coefficient vector is optimal."""
    check_alpha(alpha)
    _, g = null_fit(data, _initial_loss(data, loss))
    return float(np.max(np.abs(g)) / alpha)


def eligible_set(screen: ScreeningState, lambda_prev: float, lambda_next: float, alpha: float) -> WorkingSet:
    thr = alpha * (lambda_next + screen.M * (lambda_next - lambda_prev))
    return WorkingSet(np.flatnonzero(np.abs(screen.c) >= thr), screen.c.size)


def update_multiplier(c_prev, c_next, lambda_prev: float, lambda_next: float, alpha: float) -> float:
    diff = np.max(np.abs(np.asarray(c_prev) - np.asarray(c_next)))
    return float(diff / (alpha * (lambda_prev - lambda_next)))


def violation_threshold(lam: float, alpha: float, kkt_tol: float) -> float:
    # slack relative to lam*alpha keeps (|s_j| - 1) below kkt_tol for small lambdas
    return alpha * lam + kkt_tol * min(1.0, alpha * lam)


def check_violations(state: SolverState, data: Dataset, loss: LossSpec, penalty: PenaltySpec, excluded, kkt_tol=1e-7):
    """Excluded indices whose gradient magnitude breaks the zero-coefficient condition."""
    excluded = np.asarray(getattr(excluded, "indices", excluded), dtype=np.int64)
    if excluded.size == 0:
        return excluded
    r = data.y - state.beta0 - data.X @ state.beta
    g = gradient(r, data, loss, excluded)
    thr = violation_threshold(penalty.lam, penalty.alpha, kkt_tol)
    return excluded[np.abs(g) > thr]


def _null_state(base: SolverState, g: np.ndarray, lam: float, alpha: float) -> SolverState:
    st = base.copy()
    st.s = g / (alpha * lam)
    return st


def fit_path(data: Dataset, loss: LossSpec, alpha: float, config: FitConfig = FitConfig(), *, multiplier=None) -> SolutionPath:
    """Fit the whole regularization path.

    ``multiplier`` fixes the screening multiplier instead of adapting it
    (1.0 gives the plain sequential strong rule); intended for benchmarks.
    For the quantile loss with ``loss.gamma`` None the smoothing width is
    re-chosen at every lambda by :func:`gamma_heuristic`; otherwise it is
    held fixed.
    """
    check_alpha(alpha)
    t_path = time.perf_counter()
    work, info = preprocess(data, config.preprocess)
    n, p = work.n, work.p
    adaptive_gamma = loss.family is LossFamily.QUANTILE and loss.gamma is None
    cur = _initial_loss(work, loss)
    base, g_null = null_fit(work, cur)
    lmax = float(np.max(np.abs(g_null)) / alpha)
    if config.lambdas is not None:
        grid = np.array(sorted(config.lambdas, reverse=True))
    else:
        ratio = config.lambda_min_ratio or default_min_ratio(n, p)
        grid = lambda_grid(lmax if lmax > 0 else 1.0, config.nlambda, ratio)

    colfac = column_factors(work)
    asr = config.screening is Screening.ASR
    M = 1.0 if multiplier is None else float(multiplier)
    state = base
    g_prev = g_null
    lam_prev = lmax
    K = grid.size
    betas = np.zeros((K, p))
    beta0s = np.zeros(K)
    ss = np.zeros((K, p))
    diags = []

    for k, lam in enumerate(grid):
        t_lam = time.perf_counter()
        if lam >= lmax:
            st = _null_state(base, g_null, lam, alpha)
            pen = PenaltySpec(lam, alpha)
            d = LambdaDiagnostics(
                lam=float(lam),
                gamma=cur.gamma if loss.family is LossFamily.QUANTILE else None,
                kkt_residual=kkt_residual(st, work, cur, pen),
                objective=objective(st, work, cur, pen).total,
                multiplier=M if asr else None,
            )
        else:
            if adaptive_gamma:
                cur = loss.with_gamma(gamma_heuristic(cur.gamma, state.residuals))
            pen = PenaltySpec(lam, alpha)
            d = LambdaDiagnostics(lam=float(lam), gamma=cur.gamma if loss.family is LossFamily.QUANTILE else None)
            thr_v = violation_threshold(lam, alpha, config.kkt_tol)
            if asr:
                thr = alpha * (lam + M * (lam - lam_prev))
                E = np.union1d(np.flatnonzero(np.abs(g_prev) >= thr), np.flatnonzero(state.beta))
            else:
                E = np.arange(p)
            warm = state
            while True:
                d.rounds += 1
                st, rep = solve_fixed_lambda(warm, WorkingSet(E, p), work, cur, pen, config, colfac)
                d.sweeps += rep.sweeps
                d.degenerate_intercept_events += rep.degenerate_intercept_events
                d.zero_denominator_events += rep.zero_denominator_events
                d.damped_steps += rep.damped_steps
                g = gradient(st.residuals, work, cur)
                if E.size == p:
                    break
                excl = np.ones(p, dtype=bool)
                excl[E] = False
                viol = np.flatnonzero(excl & (np.abs(g) > thr_v))
                if viol.size == 0:
                    break
                d.violations += int(viol.size)
                warm = st
                if d.rounds >= MAX_VIOLATION_ROUNDS:
                    d.cap_hit = True
                    E = np.arange(p)
                else:
                    E = np.union1d(E, viol)
            excl = np.ones(p, dtype=bool)
            excl[E] = False
            st.s[excl] = g[excl] / (alpha * lam)
            if asr and multiplier is None:
                M = update_multiplier(g_prev, g, lam_prev, lam, alpha)
            d.n_eligible = int(E.size)
            d.multiplier = M if asr else None
            d.converged = rep.converged
            d.kkt_residual = kkt_residual(st, work, cur, pen)
            d.objective = objective(st, work, cur, pen).total
            state = st
            g_prev = g
        lam_prev = float(lam)
        if config.timing:
            d.seconds = time.perf_counter() - t_lam
        diags.append(d)
        beta0s[k] = st.beta0
        betas[k] = st.beta
        ss[k] = st.s

    raw0, raw = unstandardize_coefficients(beta0s, betas, info)
    return SolutionPath(
        lambdas=grid,
        beta0=raw0,
        beta=raw,
        s=ss,
        diagnostics=diags,
        loss=loss,
        alpha=float(alpha),
        screening=config.screening.value,
        preprocess=config.preprocess.value,
        lambda_max=lmax,
        column_names=data.column_names,
        seconds=(time.perf_counter() - t_path) if config.timing else None,
    )
