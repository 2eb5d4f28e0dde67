"""Compiled inner loops for the coordinate solver.

Loss families are passed as integer codes so one compiled kernel serves all
three. ``score`` is the loss derivative l'(r) and ``weight`` its Newton
derivative, both already carrying the 1/2 of the smoothed check loss.
"""
import math

import numpy as np
from numba import njit

HUBER = 0
QUANTILE = 1
LS = 2


@njit(cache=True, inline="always")
def score(r, code, gamma, tau):
    if code == LS:
        return r
    if abs(r) <= gamma:
        d = r / gamma
    elif r > 0:
        d = 1.0
    else:
        d = -1.0
    if code == QUANTILE:
        return 0.5 * (d + 2.0 * tau - 1.0)
    return d


@njit(cache=True, inline="always")
def weight(r, code, gamma, tau):
    if code == LS:
        return 1.0
    w = 1.0 / gamma if abs(r) <= gamma else 0.0
    if code == QUANTILE:
        return 0.5 * w
    return w


@njit(cache=True, inline="always")
def value(r, code, gamma, tau):
    if code == LS:
        return 0.5 * r * r
    a = abs(r)
    h = 0.5 * r * r / gamma if a <= gamma else a - 0.5 * gamma
    if code == QUANTILE:
        return 0.5 * (h + (2.0 * tau - 1.0) * r)
    return h


@njit(cache=True, inline="always")
def _piece(r, gamma):
    if r < -gamma:
        return -1
    if r > gamma:
        return 1
    return 0


@njit(cache=True, nogil=True)
def _crosses(X, j, r, delta, gamma):
    """Whether moving coordinate ``j`` by ``delta`` (j < 0: intercept) moves any residual to another loss piece."""
    for i in range(r.shape[0]):
        x = 1.0 if j < 0 else X[i, j]
        if _piece(r[i] - x * delta, gamma) != _piece(r[i], gamma):
            return True
    return False


@njit(cache=True, nogil=True)
def _loss_change(X, j, r, delta, code, gamma, tau):
    """Mean loss change from moving coordinate ``j`` by ``delta`` (j < 0: intercept)."""
    total = 0.0
    for i in range(r.shape[0]):
        x = 1.0 if j < 0 else X[i, j]
        total += value(r[i] - x * delta, code, gamma, tau) - value(r[i], code, gamma, tau)
    return total / r.shape[0]


@njit(cache=True, nogil=True)
def _safeguard(X, j, r, delta, code, gamma, tau, pen_old, bj, lam, alpha):
    """Largest ``delta / 2**k`` that does not increase the coordinate objective.

    Returns (delta, damped). The Newton step is taken as is when the
    coordinate function is exactly quadratic along it (no residual leaves
    or enters the band and the coefficient keeps its sign).
    """
    damped = False
    for _ in range(60):
        if j < 0:
            dp = 0.0
            sign_change = False
        else:
            b = bj + delta
            dp = lam * (alpha * abs(b) + 0.5 * (1.0 - alpha) * b * b) - pen_old
            sign_change = b * bj < 0.0
        if not sign_change and (code == LS or not _crosses(X, j, r, delta, gamma)):
            return delta, damped
        if _loss_change(X, j, r, delta, code, gamma, tau) + dp <= 0.0:
            return delta, damped
        delta *= 0.5
        damped = True
    return 0.0, True


@njit(cache=True, nogil=True)
def intercept_step(r, code, gamma, tau):
    """Newton step for the intercept; returns (step, degenerate, damped).

    When no residual lies in the quadratic band the weight sum is clamped
    to that of one in-band observation on the 1/n scale, and the step is
    clipped so it stops at the residual order statistic the minimizer
    approaches (median for Huber, tau-quantile for the check loss). The
    step is then halved while it would increase the objective.
    """
    n = r.shape[0]
    num = 0.0
    den = 0.0
    for i in range(n):
        num += score(r[i], code, gamma, tau)
        den += weight(r[i], code, gamma, tau)
    degenerate = False
    if den > 0.0:
        step = num / den
    elif num == 0.0:
        if code == LS:
            return 0.0, True, False
        # flat valley: slide until the residual nearest zero sits just inside
        # the band; the objective is unchanged and the next steps get curvature
        i0 = 0
        for i in range(n):
            if abs(r[i]) < abs(r[i0]):
                i0 = i
        t = r[i0]
        edge = gamma * (1.0 - 1e-9)
        step = t - edge if t > 0 else t + edge
        return step, True, False
    else:
        degenerate = True
        clamp = 1.0 / (n * gamma)
        if code == QUANTILE:
            clamp *= 0.5
        step = num / clamp
        level = tau if code == QUANTILE else 0.5
        k = int(math.ceil(level * n)) - 1
        if k < 0:
            k = 0
        target = np.sort(r)[k]
        if target * step > 0.0 and abs(step) > abs(target):
            step = target
    if step == 0.0:
        return 0.0, degenerate, False
    dummy = np.empty((0, 0))
    step, damped = _safeguard(dummy, -1, r, step, code, gamma, tau, 0.0, 0.0, 0.0, 0.0)
    return step, degenerate, damped


@njit(cache=True, nogil=True)
def pair_update(X, j, r, bj, sj, code, gamma, tau, lam, alpha):
    """Joint Newton update of (beta_j, s_j).

    Returns (beta_j, s_j, zero_denominator, damped). A step that would
    increase the objective is halved; a damped nonzero coefficient gets
    the subgradient sgn(beta_j).
    """
    n = X.shape[0]
    g = 0.0
    w = 0.0
    for i in range(n):
        x = X[i, j]
        g += score(r[i], code, gamma, tau) * x
        w += weight(r[i], code, gamma, tau) * x * x
    g /= n
    w /= n
    z = bj + sj
    if abs(z) > 1.0:
        sg = 1.0 if z > 0 else -1.0
        den = w + lam * (1.0 - alpha)
        if den <= 0.0:
            return bj, sj, True, False
        nb = bj + (g - lam * alpha * sg - lam * (1.0 - alpha) * bj) / den
        ns = sg
    else:
        nb = 0.0
        ns = (g + bj * w) / (lam * alpha)
    if nb == bj:
        return nb, ns, False, False
    pen_old = lam * (alpha * abs(bj) + 0.5 * (1.0 - alpha) * bj * bj)
    delta, damped = _safeguard(X, j, r, nb - bj, code, gamma, tau, pen_old, bj, lam, alpha)
    if damped:
        nb = bj + delta
        if nb != 0.0:
            ns = 1.0 if nb > 0 else -1.0
        else:
            ns = sj
    return nb, ns, False, damped


@njit(cache=True, nogil=True)
def kkt_working(X, r, beta, s, idx, code, gamma, tau, lam, alpha):
    """Optimality residual over ``idx`` from the current (incremental) residuals."""
    n = X.shape[0]
    m = 0.0
    for i in range(n):
        m += score(r[i], code, gamma, tau)
    res = abs(m / n)
    for t in range(idx.shape[0]):
        j = idx[t]
        g = 0.0
        for i in range(n):
            g += score(r[i], code, gamma, tau) * X[i, j]
        g /= n
        b = beta[j]
        st = abs(-g + lam * alpha * s[j] + lam * (1.0 - alpha) * b)
        z = b + s[j]
        thr = z - 1.0 if z > 1.0 else (z + 1.0 if z < -1.0 else 0.0)
        fx = abs(b - thr)
        if st > res:
            res = st
        if fx > res:
            res = fx
    return res


@njit(cache=True, nogil=True)
def cd_solve(X, r, beta, s, b0, idx, colfac, code, gamma, tau, lam, alpha, tol, kkt_tol, max_sweeps):
    """Cyclic sweeps (intercept, then ``idx`` in order).

    Stops once a sweep moves every coordinate by at most ``tol`` and the
    working-set optimality residual is at most ``kkt_tol``. While the
    change test passes but the residual test fails, the residual is
    rechecked after 1, 2, 4, ... (at most 16) further sweeps.
    ``beta``, ``s``, ``r`` and ``b0`` (length-1 array) are updated in place.
    Returns (sweeps, converged, degenerate_events, zero_den_events, damped_steps).
    """
    n = X.shape[0]
    degenerate = 0
    zero_den = 0
    damped = 0
    sweeps = 0
    wait = 0
    gap = 1
    while sweeps < max_sweeps:
        sweeps += 1
        step, deg, dmp = intercept_step(r, code, gamma, tau)
        if deg:
            degenerate += 1
        if dmp:
            damped += 1
        if step != 0.0:
            b0[0] += step
            for i in range(n):
                r[i] -= step
        dmax = abs(step)
        for t in range(idx.shape[0]):
            j = idx[t]
            old = beta[j]
            nb, ns, zd, dmp = pair_update(X, j, r, old, s[j], code, gamma, tau, lam, alpha)
            if zd:
                zero_den += 1
                continue
            if dmp:
                damped += 1
            s[j] = ns
            delta = nb - old
            if delta != 0.0:
                beta[j] = nb
                for i in range(n):
                    r[i] -= X[i, j] * delta
                d = abs(delta) * colfac[j]
                if d > dmax:
                    dmax = d
        if dmax <= tol:
            if wait > 0:
                wait -= 1
            elif kkt_working(X, r, beta, s, idx, code, gamma, tau, lam, alpha) <= kkt_tol:
                return sweeps, True, degenerate, zero_den, damped
            else:
                wait = gap
                gap = min(2 * gap, 16)
    return sweeps, False, degenerate, zero_den, damped


@njit(cache=True, nogil=True)
def _sums_at(r, shift, code, gamma, tau):
    g = 0.0
    w = 0.0
    for i in range(r.shape[0]):
        t = r[i] - shift
        g += score(t, code, gamma, tau)
        w += weight(t, code, gamma, tau)
    return g, w


@njit(cache=True, nogil=True)
def fit_intercept(r, b0, code, gamma, tau, max_iter):
    """Solve the intercept score equation for fixed coefficients.

    Newton steps safeguarded by bisection on a bracket: a step is replaced
    by bisection when it leaves the bracket or the previous step did not
    halve the score. The score sum is monotone in the intercept so this
    always converges. Returns
    (iterations, degenerate_events).
    """
    n = r.shape[0]
    band = gamma if code != LS else 1.0
    lo = r.min() - band - 1.0
    hi = r.max() + band + 1.0
    b = 0.0
    degenerate = 0
    it = 0
    g_prev = math.inf
    while it < max_iter:
        it += 1
        g, w = _sums_at(r, b, code, gamma, tau)
        if g == 0.0:
            break
        if g > 0.0:
            lo = max(lo, b)
        else:
            hi = min(hi, b)
        if w <= 0.0:
            degenerate += 1
            nb = 0.5 * (lo + hi)
        elif abs(g) > 0.5 * g_prev:
            # Newton is not contracting (it can cycle across a band edge)
            nb = 0.5 * (lo + hi)
        else:
            nb = b + g / w
        if not (lo < nb < hi):
            nb = 0.5 * (lo + hi)
        g_prev = abs(g)
        done = abs(nb - b) <= 1e-15 * (1.0 + abs(b0[0] + b)) or hi - lo <= 1e-15 * (1.0 + abs(b0[0] + b))
        b = nb
        if done:
            break
    b0[0] += b
    for i in range(n):
        r[i] -= b
    return it, degenerate
