import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sncd import Dataset, LossSpec, PenaltySpec, SolverState, objective, oracle_objective, relative_difference
from sncd.losses import (
    ha_value,
    huber_deriv,
    huber_newton_weight,
    huber_value,
    quantile_value,
    soft_threshold,
)

reals = st.floats(-1e3, 1e3, allow_nan=False)
widths = st.floats(1e-3, 1e2, allow_nan=False)
levels = st.floats(0.01, 0.99)


@pytest.mark.parametrize("t,g,want", [(0, 1, 0.0), (2, 2, 1.0), (3, 2, 2.0)])
def test_huber_value_examples(t, g, want):
    assert huber_value(t, g) == want


@pytest.mark.parametrize("t,g,want", [(0.5, 1, 0.5), (-5, 1, -1.0)])
def test_huber_deriv_examples(t, g, want):
    assert huber_deriv(t, g) == want


def test_huber_deriv_matches_finite_difference_example():
    h = 1e-6
    fd = (huber_value(0.3 + h, 2) - huber_value(0.3 - h, 2)) / (2 * h)
    assert abs(fd - huber_deriv(0.3, 2)) <= 1e-6


@pytest.mark.parametrize("t,g,want", [(0.5, 1, 1.0), (2, 1, 0.0), (1, 1, 1.0)])
def test_newton_weight_examples(t, g, want):
    assert huber_newton_weight(t, g) == want


@pytest.mark.parametrize("t,tau,want", [(1, 0.25, 0.25), (-1, 0.25, 0.75), (-3, 0.5, 1.5), (0, 0.5, 0.0), (3, 0.5, 1.5)])
def test_quantile_value_examples(t, tau, want):
    assert quantile_value(t, tau) == want


def test_ha_value_examples():
    for t in (-2.0, 0.3, 5.0):
        assert ha_value(t, 0.5, 0.7) == huber_value(t, 0.7) / 2
    assert ha_value(3, 0.25, 1) == 0.5
    assert abs(ha_value(3, 0.25, 0.01) - quantile_value(3, 0.25)) <= 0.01 / 4


@pytest.mark.parametrize("z,want", [(2, 1.0), (-0.3, 0.0), (-1.7, -0.7)])
def test_soft_threshold_examples(z, want):
    assert soft_threshold(z) == pytest.approx(want, abs=1e-15)


@given(reals, widths)
def test_huber_sandwich(t, g):
    h = huber_value(t, g)
    slack = 1e-12 * (1 + abs(t))
    assert abs(t) - g / 2 - slack <= h <= abs(t) + slack


@given(reals, widths)
def test_huber_scaling_limit(t, g):
    lhs = g * huber_value(t, g)
    if abs(t) <= g:
        assert lhs == pytest.approx(t * t / 2, rel=1e-12, abs=1e-300)
    else:
        assert lhs < t * t / 2


@given(reals, widths)
def test_deriv_and_weight_are_finite_differences(t, g):
    h = 1e-7 * max(g, 1.0)
    if abs(abs(t) - g) <= 10 * h:
        return
    fd = (huber_value(t + h, g) - huber_value(t - h, g)) / (2 * h)
    assert abs(fd - huber_deriv(t, g)) <= 1e-6 * max(1.0, abs(t) / g)
    fw = (huber_deriv(t + h, g) - huber_deriv(t - h, g)) / (2 * h)
    assert abs(fw - huber_newton_weight(t, g)) <= 1e-6 / g


@given(st.floats(-1e6, 1e6, allow_nan=False))
def test_soft_threshold_fixed_point(z):
    s = soft_threshold(z)
    assert abs(z - s) <= 1 + 1e-12
    assert (s == 0) == (abs(z) <= 1)


@given(levels, widths)
def test_ha_uniformly_close_to_check_loss(tau, g):
    t = np.linspace(-10 * g - 5, 10 * g + 5, 2001)
    gap = np.abs(ha_value(t, tau, g) - quantile_value(t, tau))
    assert gap.max() <= g / 4 + 1e-12


@given(reals, widths, levels)
def test_kernels_are_pure(t, g, tau):
    assert huber_value(t, g) == huber_value(t, g)
    assert ha_value(t, tau, g) == ha_value(t, tau, g)
    assert huber_deriv(t, g) == huber_deriv(t, g)


def test_array_and_scalar_agree():
    t = np.array([-3.0, -0.5, 0.0, 1.0, 4.0])
    np.testing.assert_array_equal(huber_value(t, 1.0), [huber_value(v, 1.0) for v in t])
    np.testing.assert_array_equal(soft_threshold(t), [soft_threshold(v) for v in t])


def test_objective_examples():
    data = Dataset([1.0, -1.0], [[0.0], [0.0]])
    st0 = SolverState.null(data)
    out = objective(st0, data, LossSpec.huber(2.0), PenaltySpec(0.0, 1.0))
    assert out.total == 0.25
    assert out.penalty_part == 0.0
    assert out.total == out.loss_part + out.penalty_part


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from(["huber", "quantile", "ls"]))
def test_objective_matches_oracle_evaluator(seed, family):
    rng = np.random.default_rng(seed)
    n, p = 15, 4
    data = Dataset(rng.standard_normal(n) * 3, rng.standard_normal((n, p)))
    loss = {"huber": LossSpec.huber(0.5), "quantile": LossSpec.quantile(0.3, 0.2), "ls": LossSpec.ls()}[family]
    pen = PenaltySpec(float(rng.uniform(0, 1)), float(rng.uniform(0.1, 1)))
    state = SolverState.from_coefficients(data, rng.standard_normal(), rng.standard_normal(p))
    a = objective(state, data, loss, pen).total
    b = oracle_objective(state, data, loss, pen)
    assert abs(a - b) <= 1e-12 * max(1.0, abs(a))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), levels, widths)
def test_exact_and_smoothed_quantile_objectives_within_quarter_gamma(seed, tau, g):
    rng = np.random.default_rng(seed)
    data = Dataset(rng.standard_normal(12), rng.standard_normal((12, 3)))
    state = SolverState.from_coefficients(data, 0.1, rng.standard_normal(3))
    pen = PenaltySpec(0.2, 0.5)
    loss = LossSpec.quantile(tau, g)
    smooth = oracle_objective(state, data, loss, pen)
    exact = oracle_objective(state, data, loss, pen, exact=True)
    assert abs(smooth - exact) <= g / 4 + 1e-12


@pytest.mark.parametrize("a,b,want", [(1.0, 1.0, 0.0), (1.02, 1.0, 0.02), (0.98, 1.0, -0.02)])
def test_relative_difference(a, b, want):
    assert relative_difference(a, b) == pytest.approx(want, abs=1e-15)


def test_relative_difference_zero_reference():
    with pytest.raises(ZeroDivisionError):
        relative_difference(1.0, 0.0)
