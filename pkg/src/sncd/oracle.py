"""Slow, independent reference solver used to certify objectives.

Accelerated proximal gradient (FISTA with gradient-based restart) on the
smooth part of the objective, with the l1 term handled by its proximal map.
The exact check loss is reached by continuation on the smoothing width.
Nothing here imports the coordinate solver or the loss module.
"""
from __future__ import annotations

import numpy as np

from .data import Dataset, LossFamily, LossSpec, PenaltySpec, SolverState


def _huber(t, g):
    a = np.abs(t)
    return np.where(a <= g, 0.5 * t * t / g, a - 0.5 * g)


def _huber_grad(t, g):
    return np.clip(t / g, -1.0, 1.0)


def _penalty(beta, lam, alpha):
    return lam * (alpha * np.abs(beta).sum() + 0.5 * (1.0 - alpha) * beta.dot(beta))


def oracle_objective(state: SolverState, data: Dataset, loss: LossSpec, penalty: PenaltySpec, exact: bool = False) -> float:
    """Objective of ``state``; ``exact`` evaluates the unsmoothed check loss for quantile specs."""
    beta = np.asarray(state.beta, dtype=np.float64)
    r = data.y - state.beta0 - data.X.dot(beta)
    if loss.family is LossFamily.LS:
        lv = 0.5 * r * r
    elif loss.family is LossFamily.HUBER:
        lv = _huber(r, loss.gamma)
    elif exact:
        lv = np.maximum(loss.tau * r, (loss.tau - 1.0) * r)
    else:
        lv = 0.5 * (_huber(r, loss.gamma) + (2.0 * loss.tau - 1.0) * r)
    return float(lv.mean() + _penalty(beta, penalty.lam, penalty.alpha))


def _smooth_parts(family, tau):
    if family is LossFamily.LS:
        return (lambda r, g: 0.5 * r * r), (lambda r, g: r), (lambda g: 1.0)
    if family is LossFamily.HUBER:
        return _huber, _huber_grad, (lambda g: 1.0 / g)
    return (
        (lambda r, g: 0.5 * (_huber(r, g) + (2.0 * tau - 1.0) * r)),
        (lambda r, g: 0.5 * (_huber_grad(r, g) + 2.0 * tau - 1.0)),
        (lambda g: 0.5 / g),
    )


def _fista(data, family, tau, g, lam, alpha, theta, iters, tol, target):
    """Minimize one smooth stage; returns (last, best_by_target, best_value, iterations)."""
    X, y, n = data.X, data.y, data.n
    val, grad, curv = _smooth_parts(family, tau)
    # spectral norm of [1 X] / sqrt(n), squared
    Xs = np.column_stack([np.ones(n), X])
    L = curv(g) * np.linalg.norm(Xs, 2) ** 2 / n + lam * (1.0 - alpha)
    step = 1.0 / L
    thr = step * lam * alpha

    def prox(v):
        out = v.copy()
        out[1:] = np.sign(v[1:]) * np.maximum(np.abs(v[1:]) - thr, 0.0)
        return out

    def gradf(v):
        r = y - v[0] - X.dot(v[1:])
        sc = grad(r, g)
        out = np.empty_like(v)
        out[0] = -sc.mean()
        out[1:] = -X.T.dot(sc) / n + lam * (1.0 - alpha) * v[1:]
        return out

    x = theta.copy()
    z = theta.copy()
    t = 1.0
    best = x.copy()
    best_val = target(x)
    quiet = 0
    it = 0
    for it in range(1, iters + 1):
        x_new = prox(z - step * gradf(z))
        if np.dot(z - x_new, x_new - x) > 0:
            t = 1.0
            z = x_new.copy()
        else:
            t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
            z = x_new + ((t - 1.0) / t_new) * (x_new - x)
            t = t_new
        moved = np.max(np.abs(x_new - x))
        x = x_new
        if it % 10 == 0 or moved <= tol * (1.0 + np.max(np.abs(x))):
            v = target(x)
            if v < best_val:
                best_val, best = v, x.copy()
        if moved <= tol * (1.0 + np.max(np.abs(x))):
            quiet += 1
            if quiet >= 20:
                break
        else:
            quiet = 0
    v = target(x)
    if v < best_val:
        best_val, best = v, x.copy()
    return x, best, best_val, it


def oracle_solve(
    data: Dataset,
    loss: LossSpec,
    penalty: PenaltySpec,
    iterations: int = 200_000,
    exact: bool = False,
    tol: float = 1e-13,
    start: SolverState | None = None,
) -> SolverState:
    """Best-objective iterate found within the iteration budget.

    With ``exact=True`` and a quantile spec the target is the unsmoothed
    check-loss objective, approached through a decreasing sequence of
    smoothing widths; otherwise the target is the objective of ``loss``
    itself. Starts from zero coefficients unless ``start`` is given.
    """
    lam, alpha = penalty.lam, penalty.alpha
    p = data.p
    theta = np.zeros(p + 1)
    if start is not None:
        theta[0] = start.beta0
        theta[1:] = start.beta

    def as_state(v):
        return SolverState(float(v[0]), v[1:].copy(), np.zeros(p), data.y - v[0] - data.X.dot(v[1:]))

    if exact and loss.family is LossFamily.QUANTILE:
        tgt_loss = LossSpec.quantile(loss.tau, 1.0)
        scale = float(np.mean(np.abs(data.y - np.median(data.y)))) or 1.0
        widths = [scale * 10.0 ** (-k) for k in range(0, 7)]
        budget = [max(iterations // len(widths), 1)] * len(widths)
    else:
        tgt_loss = loss
        widths = [loss.gamma if loss.gamma is not None else 1.0]
        budget = [iterations]

    def target(v):
        return oracle_objective(as_state(v), data, tgt_loss, penalty, exact=exact)

    best, best_val = theta.copy(), target(theta)
    for g, b in zip(widths, budget):
        theta, cand, cand_val, _ = _fista(data, loss.family, loss.tau, g, lam, alpha, theta, b, tol, target)
        if cand_val < best_val:
            best, best_val = cand, cand_val
    return as_state(best)
