import numpy as np
import pytest

from sncd import Dataset, FitConfig, LossSpec, PenaltySpec, SnaStatus, SolverState, fit_path, objective, sna_path, sna_solve
from sncd.errors import InvalidParameter, NonFiniteIterate
from sncd.path import null_fit
from sncd.preprocess import preprocess
from sncd.sna import partition, sna_step, step_operations


def _work(n, p, seed, support=3):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, p))
    support = min(support, p)
    y = 1.0 + X[:, :support] @ np.linspace(2, 1, support) + rng.standard_t(3, n)
    return preprocess(Dataset(y, X))[0]


def test_partition_examples():
    def part(beta, s):
        return partition(SolverState(0.0, np.array(beta, float), np.array(s, float), np.zeros(1)))

    p = part([1, 0], [1, 0.3])
    assert p.A.tolist() == [0] and p.B.tolist() == [1]
    assert part([0, 0, 0], [0.5, -1.0, 1.0]).A.size == 0
    p = part([0.5], [0.5])
    assert p.A.size == 0 and p.B.tolist() == [0]


def test_single_observation_fixed_point():
    data = Dataset([0.0], [[1.0]])
    st = SolverState(0.0, np.zeros(1), np.zeros(1), np.zeros(1))
    new, part = sna_step(st, data, LossSpec.huber(1.0), PenaltySpec(0.1, 0.5))
    assert part.A.size == 0
    assert new.beta0 == 0.0 and new.beta[0] == 0.0


def test_non_finite_iterate():
    data = _work(5, 2, 0)
    st = SolverState(0.0, np.array([np.nan, 0.0]), np.zeros(2), np.zeros(5))
    with pytest.raises(NonFiniteIterate):
        sna_step(st, data, LossSpec.huber(1.0), PenaltySpec(0.1, 0.5))


def test_rejects_unsupported_settings():
    data = _work(5, 2, 0)
    st = SolverState.null(data)
    with pytest.raises(InvalidParameter):
        sna_step(st, data, LossSpec.ls(), PenaltySpec(0.1, 0.5))
    with pytest.raises(InvalidParameter):
        sna_step(st, data, LossSpec.huber(1.0), PenaltySpec(0.1, 1.0))


def test_tiny_instance_agrees_with_coordinate_solver():
    data = _work(5, 2, 3, support=1)
    loss = LossSpec.huber(1.0)
    lam = 0.3 * fit_path(data, loss, 0.5, FitConfig(nlambda=2, preprocess="none")).lambda_max
    cfg = FitConfig(lambdas=(lam,), preprocess="none", tol=1e-12, kkt_tol=1e-12)
    a = fit_path(data, loss, 0.5, cfg)
    pen = PenaltySpec(lam, 0.5)
    base, g = null_fit(data, loss)
    base.s = np.clip(g / (0.5 * lam), -1, 1)
    st, rep = sna_solve(base, data, loss, pen, cfg)
    assert rep.converged
    f_cd = objective(a.state(0, data), data, loss, pen).total
    f_sna = objective(st, data, loss, pen).total
    assert abs(f_cd - f_sna) / f_sna <= 1e-8


def test_dense_path_matches_coordinate_solver():
    data = _work(50, 10, 7)
    loss = LossSpec.huber(1.0)
    cfg = FitConfig(nlambda=100, preprocess="none")
    a = fit_path(data, loss, 0.9, cfg)
    b = sna_path(data, loss, 0.9, cfg)
    assert b.extra["status"] == ["converged"] * 100
    gaps = [abs(da.objective - db.objective) / db.objective for da, db in zip(a.diagnostics, b.diagnostics)]
    assert max(gaps) <= 1e-6


def test_after_step_shapes():
    data = _work(30, 6, 2)
    loss, pen = LossSpec.huber(1.0), PenaltySpec(0.05, 0.5)
    st = SolverState(0.2, np.array([1.0, 0.0, -0.5, 0.0, 0.0, 0.0]), np.array([1.0, 0.2, -1.0, 0.0, 0.0, 0.0]), np.zeros(30))
    new, part = sna_step(st, data, loss, pen)
    assert np.all(new.beta[part.B] == 0.0)
    assert np.all(np.abs(new.s[part.A]) == 1.0)


def test_operation_count_linear_in_p():
    ops = [step_operations(100, p, 5) for p in (100, 200, 300, 400)]
    d = np.diff(ops)
    assert np.all(d == d[0]) and d[0] > 0
    data = _work(40, 30, 5)
    wide = Dataset(data.y, np.hstack([data.X, np.random.default_rng(1).standard_normal((40, 30))]))
    loss, pen = LossSpec.huber(1.0), PenaltySpec(10.0, 0.5)
    for d_ in (data, wide):
        st = SolverState.null(d_)
        _, rep = sna_solve(st, d_, loss, pen)
        assert rep.operations == rep.iterations * step_operations(40, d_.p, 0)


def test_cold_start_small_gamma_wide_design_reports_status():
    data = _work(50, 500, 11, support=10)
    loss = LossSpec.huber(0.1)
    b = sna_path(data, loss, 0.9, FitConfig(nlambda=30))
    statuses = b.extra["status"]
    assert all(s in {x.value for x in SnaStatus} for s in statuses)
    assert statuses[-1] in ("diverged", "singular_system")
    assert len(b) < b.extra["requested"]
    done = [d for d, s in zip(b.diagnostics, statuses) if s == "converged"]
    assert all(d.kkt_residual <= FitConfig().kkt_tol for d in done)
    assert np.all(np.isfinite(b.beta))


def test_duplicated_columns_never_silent():
    rng = np.random.default_rng(3)
    x = rng.standard_normal(30)
    X = np.column_stack([x, x, rng.standard_normal(30)])
    y = 2 * x + rng.standard_normal(30)
    data = Dataset(y, X)
    loss, pen = LossSpec.huber(1.0), PenaltySpec(0.01, 1 - 1e-12)
    base, g = null_fit(data, loss)
    base.s = g / (pen.alpha * pen.lam)
    st, rep = sna_solve(base, data, loss, pen)
    assert rep.status in (SnaStatus.SINGULAR, SnaStatus.CONVERGED, SnaStatus.DIVERGED)
    if rep.status is SnaStatus.CONVERGED:
        assert rep.final_kkt_residual <= FitConfig().kkt_tol
    assert np.all(np.isfinite(st.beta))
