"""Semismooth Newton coordinate descent at a fixed penalty level.

Each sweep updates the intercept by a one-dimensional semismooth Newton
step and then, for every index of the working set in ascending order, the
pair (beta_j, s_j) jointly. Which of the two pair updates fires depends
only on whether ``|beta_j + s_j|`` exceeds 1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .data import Dataset, FitConfig, LossFamily, LossSpec, PenaltySpec, SolverState
from .errors import DimensionMismatch, InvalidParameter
from .losses import loss_score, soft_threshold

_CODES = {LossFamily.HUBER: _kernels.HUBER, LossFamily.QUANTILE: _kernels.QUANTILE, LossFamily.LS: _kernels.LS}


def kernel_args(loss: LossSpec):
    """(code, gamma, tau) triple for the compiled kernels."""
    if loss.family is not LossFamily.LS and loss.gamma is None:
        raise InvalidParameter("a concrete gamma is required to solve")
    gamma = 1.0 if loss.gamma is None else float(loss.gamma)
    tau = 0.5 if loss.tau is None else float(loss.tau)
    return _CODES[loss.family], gamma, tau


class WorkingSet:
    """Sorted unique predictor indices the solver cycles over."""

    __slots__ = ("indices",)

    def __init__(self, indices, p: int):
        idx = np.unique(np.asarray(indices, dtype=np.int64))
        if idx.size and (idx[0] < 0 or idx[-1] >= p):
            raise DimensionMismatch(f"working-set index out of range for p={p}")
        self.indices = idx

    @classmethod
    def full(cls, p: int) -> "WorkingSet":
        return cls(np.arange(p), p)

    def __len__(self):
        return self.indices.size

    def __iter__(self):
        return iter(self.indices.tolist())


@dataclass
class SncdReport:
    sweeps: int
    converged: bool
    final_kkt_residual: float
    degenerate_intercept_events: int = 0
    zero_denominator_events: int = 0
    damped_steps: int = 0


def update_intercept(state: SolverState, data: Dataset, loss: LossSpec) -> float:
    """One Newton step on the intercept; updates ``state`` in place, returns the new intercept."""
    code, gamma, tau = kernel_args(loss)
    step, _, _ = _kernels.intercept_step(state.residuals, code, gamma, tau)
    state.beta0 += step
    state.residuals -= step
    return state.beta0


def intercept_step(residuals, loss: LossSpec):
    """(step, degenerate, damped) the intercept update would take from ``residuals``."""
    code, gamma, tau = kernel_args(loss)
    step, deg, dmp = _kernels.intercept_step(np.ascontiguousarray(residuals, dtype=np.float64), code, gamma, tau)
    return step, bool(deg), bool(dmp)


def update_pair(j: int, state: SolverState, data: Dataset, loss: LossSpec, penalty: PenaltySpec):
    """Joint update of (beta_j, s_j) in place. Returns the new pair.

    If the Newton denominator vanishes the pair is left unchanged. A step
    that would increase the objective is halved until it does not.
    """
    if not penalty.lam > 0:
        raise InvalidParameter("coordinate updates need lambda > 0")
    code, gamma, tau = kernel_args(loss)
    old = state.beta[j]
    nb, ns, zero_den, _ = _kernels.pair_update(
        data.X, j, state.residuals, old, state.s[j], code, gamma, tau, penalty.lam, penalty.alpha
    )
    if not zero_den:
        state.s[j] = ns
        if nb != old:
            state.beta[j] = nb
            state.residuals -= data.X[:, j] * (nb - old)
    return state.beta[j], state.s[j]


def gradient(residuals, data: Dataset, loss: LossSpec, indices=None) -> np.ndarray:
    """``(1/n) sum_i l'(r_i) x_ij`` for the given indices (all by default).

    This is minus the screening quantity c_j; at a KKT point it equals
    ``lam*alpha*s_j + lam*(1-alpha)*beta_j``.
    """
    sc = loss_score(residuals, loss)
    X = data.X if indices is None else data.X[:, np.asarray(indices)]
    return (X.T @ sc) / data.n


def kkt_residual(state: SolverState, data: Dataset, loss: LossSpec, penalty: PenaltySpec, indices=None) -> float:
    """Max violation of the reformulated optimality system over ``indices``.

    Components: the intercept score mean, the stationarity equation for
    each beta_j, and the soft-threshold fixed point ``beta_j = S(beta_j + s_j)``.
    Residuals are recomputed from the coefficients.
    """
    r = data.y - state.beta0 - data.X @ state.beta
    res = abs(float(np.mean(loss_score(r, loss))))
    idx = np.arange(data.p) if indices is None else np.asarray(getattr(indices, "indices", indices), dtype=np.int64)
    if idx.size == 0:
        return res
    b = state.beta[idx]
    s = state.s[idx]
    g = gradient(r, data, loss, idx)
    lam, a = penalty.lam, penalty.alpha
    stat = np.abs(-g + lam * a * s + lam * (1.0 - a) * b)
    fix = np.abs(b - soft_threshold(b + s))
    return max(res, float(stat.max()), float(fix.max()))


def column_factors(data: Dataset) -> np.ndarray:
    """Per-column scale used by the coordinate-change test, ``max(1, |x_j|/sqrt(n))``."""
    return np.maximum(1.0, np.sqrt(np.einsum("ij,ij->j", data.X, data.X) / data.n))


def solve_fixed_lambda(
    state: SolverState,
    working: WorkingSet,
    data: Dataset,
    loss: LossSpec,
    penalty: PenaltySpec,
    config: FitConfig = FitConfig(),
    colfac=None,
):
    """Run sweeps from the warm start until converged or ``max_sweeps``.

    Converged means one full sweep moved every coordinate by at most
    ``tol`` (scaled by the column norm) and the KKT residual over the
    working set is at most ``kkt_tol``. Sweeping continues while the change
    test passes but the KKT test does not. The input state is not modified.
    """
    if not penalty.lam > 0:
        raise InvalidParameter("solve_fixed_lambda needs lambda > 0")
    code, gamma, tau = kernel_args(loss)
    st = state.copy()
    st.refresh_residuals(data)
    if colfac is None:
        colfac = column_factors(data)
    idx = working.indices
    b0 = np.array([st.beta0])
    sweeps = degenerate = zero_den = damped = 0
    converged = False
    kkt = math.inf
    while sweeps < config.max_sweeps:
        n_sw, small, deg, zd, dmp = _kernels.cd_solve(
            data.X, st.residuals, st.beta, st.s, b0, idx, colfac,
            code, gamma, tau, penalty.lam, penalty.alpha, config.tol, config.kkt_tol, config.max_sweeps - sweeps,
        )
        sweeps += n_sw
        degenerate += deg
        zero_den += zd
        damped += dmp
        st.beta0 = float(b0[0])
        st.refresh_residuals(data)
        if not small:
            break
        kkt = kkt_residual(st, data, loss, penalty, idx)
        if kkt <= config.kkt_tol:
            converged = True
            break
    if not converged:
        kkt = kkt_residual(st, data, loss, penalty, idx)
    if not np.all(np.isfinite(st.beta)) or not math.isfinite(st.beta0):
        converged = False
    return st, SncdReport(sweeps, converged, kkt, degenerate, zero_den, damped)
