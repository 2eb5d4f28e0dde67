"""Full-system semismooth Newton solver for elastic-net Huber regression.

Used as a comparison solver. Each iteration splits the predictors into an
active set ``A = {j : |beta_j + s_j| > 1}`` and its complement, fixes the
subgradients on ``A`` and the coefficients on the complement, and solves a
(1 + |A|)-dimensional symmetric system for the intercept and active
coefficients.
"""
from __future__ import annotations

import enum
import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .core import kkt_residual
from .data import (
    Dataset,
    FitConfig,
    LambdaDiagnostics,
    LossFamily,
    LossSpec,
    PenaltySpec,
    SolutionPath,
    SolverState,
)
from .errors import InvalidParameter, NonFiniteIterate, SingularSystem
from .losses import huber_deriv, huber_newton_weight, objective
from .path import lambda_grid, default_min_ratio, null_fit
from .preprocess import preprocess, unstandardize_coefficients

MAX_ITERATIONS = 500
# reciprocal condition number below which a factorization counts as singular
RCOND_FLOOR = 1e-14


class SnaStatus(enum.Enum):
    CONVERGED = "converged"
    DIVERGED = "diverged"
    SINGULAR = "singular_system"
    MAX_ITERATIONS = "max_iterations"


@dataclass(frozen=True)
class SnaPartition:
    A: np.ndarray
    B: np.ndarray


@dataclass
class SnaReport:
    iterations: int
    status: SnaStatus
    final_kkt_residual: float
    operations: int = 0  # estimated multiply-adds spent in the iterations
    history: list = field(default_factory=list)

    @property
    def converged(self) -> bool:
        return self.status is SnaStatus.CONVERGED


def partition(state: SolverState) -> SnaPartition:
    z = np.abs(np.asarray(state.beta) + np.asarray(state.s))
    return SnaPartition(np.flatnonzero(z > 1.0), np.flatnonzero(z <= 1.0))


def _check(loss: LossSpec, penalty: PenaltySpec):
    if loss.family is not LossFamily.HUBER:
        raise InvalidParameter("the Newton system solver supports the Huber loss only")
    if not penalty.lam > 0:
        raise InvalidParameter("lambda must be positive")
    if not 0.0 < penalty.alpha < 1.0:
        raise InvalidParameter("alpha must lie strictly between 0 and 1")


def step_operations(n: int, p: int, a: int) -> int:
    """Multiply-add estimate for one iteration with ``a`` active predictors."""
    # residuals and X_B' v products are O(np); the Gram block O(n a^2); the factorization O(a^3)
    return 2 * n * p + n * (a + 1) * (a + 1) + (a + 1) ** 3 // 3


def sna_step(state: SolverState, data: Dataset, loss: LossSpec, penalty: PenaltySpec):
    """One Newton iteration; returns (new_state, partition). Input is not modified.

    Raises
    ------
    SingularSystem
        The reduced system could not be factored.
    NonFiniteIterate
        The input or the result contains NaN or infinity.
    """
    _check(loss, penalty)
    beta = np.asarray(state.beta, dtype=np.float64)
    s = np.asarray(state.s, dtype=np.float64)
    if not (np.all(np.isfinite(beta)) and np.all(np.isfinite(s)) and math.isfinite(state.beta0)):
        raise NonFiniteIterate("iterate contains non-finite values")
    X, n = data.X, data.n
    lam, a = penalty.lam, penalty.alpha
    part = partition(state)
    A, B = part.A, part.B
    r = data.y - state.beta0 - X @ beta
    d = huber_deriv(r, loss.gamma)
    psi = huber_newton_weight(r, loss.gamma) / n
    bB = beta[B]
    XA = X[:, A]
    XB_bB = X[:, B] @ bB if B.size else np.zeros(n)
    sA = np.sign(beta[A] + s[A])

    m = A.size + 1
    W = np.empty((n, m))
    W[:, 0] = 1.0
    W[:, 1:] = XA
    H = W.T @ (psi[:, None] * W)
    H[np.arange(1, m), np.arange(1, m)] += lam * (1.0 - a)
    rhs = W.T @ (d / n + psi * XB_bB)
    rhs[1:] -= lam * (1.0 - a) * beta[A] + lam * a * sA
    try:
        fac = linalg.cho_factor(H, lower=True, check_finite=True)
    except (linalg.LinAlgError, ValueError) as exc:
        raise SingularSystem(f"reduced system of size {m} not positive definite") from exc
    diag = np.abs(np.diag(fac[0]))
    if diag.min() <= math.sqrt(RCOND_FLOOR) * diag.max():
        raise SingularSystem(f"reduced system of size {m} numerically singular")
    D = linalg.cho_solve(fac, rhs)
    D0, DA = D[0], D[1:]

    new_beta = beta.copy()
    new_s = s.copy()
    new_s[A] = sA
    new_beta[B] = 0.0
    new_beta[A] += DA
    b0 = state.beta0 + D0
    if B.size:
        v = d / n + psi * (XB_bB - D0 - XA @ DA)
        new_s[B] = X[:, B].T @ v / (lam * a)
    if not (np.all(np.isfinite(new_beta)) and np.all(np.isfinite(new_s)) and math.isfinite(b0)):
        raise NonFiniteIterate("Newton step produced non-finite values")
    res = data.y - b0 - X @ new_beta
    return SolverState(float(b0), new_beta, new_s, res), part


def sna_solve(state: SolverState, data: Dataset, loss: LossSpec, penalty: PenaltySpec, config: FitConfig = FitConfig(), max_iter: int = MAX_ITERATIONS):
    """Iterate :func:`sna_step` from a warm start.

    Stops when the KKT residual is at most ``config.kkt_tol``. Divergence
    (KKT residual above 1e6 times its start value, objective above 10 times
    its start value, or a non-finite iterate) and singular systems end the
    run with the matching status; the last good iterate is returned.
    """
    _check(loss, penalty)
    cur = state.copy()
    cur.refresh_residuals(data)
    kkt0 = kkt_residual(cur, data, loss, penalty)
    obj0 = objective(cur, data, loss, penalty).total
    report = SnaReport(0, SnaStatus.MAX_ITERATIONS, kkt0)
    if kkt0 <= config.kkt_tol:
        report.status = SnaStatus.CONVERGED
        return cur, report
    for it in range(1, max_iter + 1):
        report.iterations = it
        try:
            nxt, part = sna_step(cur, data, loss, penalty)
        except SingularSystem:
            report.status = SnaStatus.SINGULAR
            return cur, report
        except NonFiniteIterate:
            report.status = SnaStatus.DIVERGED
            return cur, report
        report.operations += step_operations(data.n, data.p, part.A.size)
        kkt = kkt_residual(nxt, data, loss, penalty)
        obj = objective(nxt, data, loss, penalty).total
        report.history.append(kkt)
        if not (math.isfinite(kkt) and math.isfinite(obj)) or kkt > 1e6 * kkt0 or obj > 10.0 * abs(obj0):
            report.status = SnaStatus.DIVERGED
            report.final_kkt_residual = kkt
            return cur, report
        cur = nxt
        report.final_kkt_residual = kkt
        if kkt <= config.kkt_tol:
            report.status = SnaStatus.CONVERGED
            return cur, report
    return cur, report


def sna_path(data: Dataset, loss: LossSpec, alpha: float, config: FitConfig = FitConfig(), max_iter: int = MAX_ITERATIONS) -> SolutionPath:
    """Warm-started path of Newton-system solutions.

    The path stops at the first lambda whose solve does not converge; only
    the lambdas reached are returned. Per-lambda statuses are listed in
    ``extra["status"]``.
    """
    if not 0.0 < alpha < 1.0:
        raise InvalidParameter("alpha must lie strictly between 0 and 1")
    if loss.family is not LossFamily.HUBER:
        raise InvalidParameter("the Newton system solver supports the Huber loss only")
    t_path = time.perf_counter()
    work, info = preprocess(data, config.preprocess)
    base, g = null_fit(work, loss)
    lmax = float(np.max(np.abs(g)) / alpha)
    if config.lambdas is not None:
        grid = np.array(sorted(config.lambdas, reverse=True))
    else:
        grid = lambda_grid(lmax if lmax > 0 else 1.0, config.nlambda, config.lambda_min_ratio or default_min_ratio(work.n, work.p))
    state = base.copy()
    rows0, rows, ss, diags, status = [], [], [], [], []
    for lam in grid:
        t_lam = time.perf_counter()
        pen = PenaltySpec(float(lam), alpha)
        if lam >= lmax:
            st = base.copy()
            st.s = g / (alpha * lam)
            rep = SnaReport(0, SnaStatus.CONVERGED, kkt_residual(st, work, loss, pen))
        else:
            st, rep = sna_solve(state, work, loss, pen, config, max_iter)
        d = LambdaDiagnostics(
            lam=float(lam),
            sweeps=rep.iterations,
            rounds=1,
            n_eligible=work.p,
            kkt_residual=rep.final_kkt_residual,
            objective=objective(st, work, loss, pen).total,
            converged=rep.converged,
        )
        if config.timing:
            d.seconds = time.perf_counter() - t_lam
        diags.append(d)
        status.append(rep.status.value)
        rows0.append(st.beta0)
        rows.append(st.beta.copy())
        ss.append(st.s.copy())
        if not rep.converged:
            break
        state = st
    K = len(rows)
    raw0, raw = unstandardize_coefficients(np.array(rows0), np.array(rows).reshape(K, work.p), info)
    return SolutionPath(
        lambdas=grid[:K],
        beta0=raw0,
        beta=raw,
        s=np.array(ss).reshape(K, work.p),
        diagnostics=diags,
        loss=loss,
        alpha=float(alpha),
        screening="none",
        preprocess=config.preprocess.value,
        lambda_max=lmax,
        column_names=data.column_names,
        seconds=(time.perf_counter() - t_path) if config.timing else None,
        extra={"status": status, "requested": int(grid.size)},
    )
