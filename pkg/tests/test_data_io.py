import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sncd import Dataset, FitConfig, LossSpec, PenaltySpec, SolverState, fit_path, validate_dataset
from sncd.errors import (
    AlphaZero,
    DimensionMismatch,
    EmptyData,
    InvalidParameter,
    MalformedEntry,
    NonFiniteEntry,
    RaggedRows,
)
from sncd.io import parse_table, path_from_dict, path_to_csv, path_to_dict, path_to_json


def test_validate_examples():
    d = validate_dataset([[1, 2, 3], [4, 5, 6], [7, 8, 9]])
    assert (d.n, d.p) == (3, 2)
    with pytest.raises(NonFiniteEntry) as exc:
        validate_dataset([[1, 2, 3], [4, 5, np.nan]])
    assert (exc.value.row, exc.value.col) == (1, 2)
    with pytest.raises(EmptyData):
        validate_dataset([])
    with pytest.raises(RaggedRows):
        validate_dataset([[1, 2], [1, 2, 3]])
    with pytest.raises(DimensionMismatch):
        validate_dataset([[1], [2]])


def test_dataset_is_immutable():
    d = Dataset([1.0, 2.0], [[1.0], [2.0]])
    with pytest.raises(ValueError):
        d.X[0, 0] = 5.0
    with pytest.raises(ValueError):
        d.y[0] = 5.0


def test_dataset_copies_input():
    X = np.ones((3, 2))
    d = Dataset(np.zeros(3), X)
    X[0, 0] = 7.0
    assert d.X[0, 0] == 1.0


def test_parameter_validation():
    with pytest.raises(AlphaZero):
        PenaltySpec(0.1, 0.0)
    with pytest.raises(InvalidParameter):
        PenaltySpec(0.1, 1.5)
    with pytest.raises(InvalidParameter):
        LossSpec.huber(0.0)
    with pytest.raises(InvalidParameter):
        LossSpec.quantile(1.0)
    with pytest.raises(InvalidParameter):
        FitConfig(nlambda=1)
    with pytest.raises(InvalidParameter):
        FitConfig(tol=0.0)
    with pytest.raises(InvalidParameter):
        FitConfig(lambdas=(0.1, 0.1))


def test_parse_table_header_detection():
    rows, names = parse_table("y,a,b\n1,2,3\n4,5,6\n")
    assert names == ["y", "a", "b"] and rows == [[1, 2, 3], [4, 5, 6]]
    rows, names = parse_table("1,2\n3,4\n")
    assert names is None and rows == [[1, 2], [3, 4]]
    rows, names = parse_table("1e3,2\n3,4\n", header=True)
    assert names == ["1e3", "2"] and rows == [[3, 4]]


def test_parse_table_errors():
    with pytest.raises(EmptyData):
        parse_table("")
    with pytest.raises(EmptyData):
        parse_table("y,x\n")
    with pytest.raises(NonFiniteEntry):
        parse_table("1,2\n3,\n")
    with pytest.raises(MalformedEntry):
        parse_table("1,2\n3,abc\n")
    with pytest.raises(RaggedRows):
        parse_table("1,2\n3\n")


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_residual_consistency_after_updates(seed):
    rng = np.random.default_rng(seed)
    data = Dataset(rng.standard_normal(20) * 50, rng.standard_normal((20, 6)))
    state = SolverState.from_coefficients(data, 0.0, np.zeros(6))
    for _ in range(200):
        j = int(rng.integers(6))
        delta = float(rng.standard_normal())
        state.beta[j] += delta
        state.residuals -= data.X[:, j] * delta
    assert state.residual_drift(data) <= 1e-10 * (1 + np.abs(data.y).max())


def _small_path(**kw):
    rng = np.random.default_rng(4)
    X = rng.standard_normal((30, 4))
    y = X[:, 0] - X[:, 2] + rng.standard_normal(30)
    return fit_path(Dataset(y, X, ("a", "b", "c", "d")), kw.pop("loss", LossSpec.huber(1.0)), 0.9, FitConfig(nlambda=5, **kw))


def test_csv_long_format():
    path = _small_path()
    lines = path_to_csv(path).splitlines()
    assert lines[0] == "lambda,term,coefficient"
    assert len(lines) == 1 + 5 * 5
    assert lines[1].split(",")[1] == "(Intercept)"
    assert [ln.split(",")[1] for ln in lines[2:6]] == ["a", "b", "c", "d"]


def test_json_round_trip_preserves_unknown_fields():
    path = _small_path(loss=LossSpec.quantile(0.75))
    doc = path_to_dict(path)
    assert doc["schema"] == "sncd.path" and doc["version"] == 1
    assert len(doc["gamma_schedule"]) == 5
    doc["future_field"] = {"k": [1, 2]}
    doc["diagnostics"][2]["future_diag"] = 3.5
    back = path_from_dict(json.loads(json.dumps(doc)))
    np.testing.assert_array_equal(back.beta, path.beta)
    np.testing.assert_array_equal(back.lambdas, path.lambdas)
    again = path_to_dict(back)
    assert again["future_field"] == {"k": [1, 2]}
    assert again["diagnostics"][2]["future_diag"] == 3.5
    assert json.dumps(again, sort_keys=True) == json.dumps(doc, sort_keys=True)


def test_json_rejects_newer_version():
    doc = path_to_dict(_small_path())
    doc["version"] = 99
    with pytest.raises(InvalidParameter):
        path_from_dict(doc)


def test_json_is_deterministic_without_timing():
    assert path_to_json(_small_path()) == path_to_json(_small_path())
    assert "seconds" not in path_to_json(_small_path())
