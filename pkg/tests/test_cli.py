import io
import json

import numpy as np
import pytest

from sncd.cli import main


def run(*argv):
    buf = io.StringIO()
    code = main(list(argv), buf)
    return code, buf.getvalue()


@pytest.fixture(scope="module")
def dataset(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    path = d / "data.csv"
    code, _ = run("synth", "--n", "60", "--p", "8", "--seed", "3", "-o", str(path))
    assert code == 0
    return path


def test_fit_csv_rows(dataset):
    code, text = run("fit", "--loss", "huber", "--gamma", "1.0", "--alpha", "0.9", "--nlambda", "100", str(dataset))
    assert code == 0
    lines = text.splitlines()
    assert lines[0] == "lambda,term,coefficient"
    assert len(lines) == 1 + 100 * (8 + 1)


def test_fit_quantile_json_diagnostics(dataset):
    code, text = run("fit", "--loss", "quantile", "--tau", "0.75", "--screen", "asr", "--nlambda", "20", "--format", "json", str(dataset))
    assert code == 0
    doc = json.loads(text)
    assert len(doc["gamma_schedule"]) == 20
    assert "violations_total" in doc
    d = doc["diagnostics"][5]
    for key in ("sweeps", "violations", "gamma", "kkt_residual", "objective"):
        assert key in d


def test_fit_user_grid_sorted(dataset):
    code, text = run("fit", "--loss", "ls", "--lambda", "0.05,0.1", str(dataset))
    assert code == 0
    lams = [float(ln.split(",")[0]) for ln in text.splitlines()[1:]]
    assert lams[0] == 0.1 and lams[-1] == 0.05


@pytest.mark.parametrize(
    "argv",
    [
        ("fit", "--loss", "huber"),
        ("fit", "--loss", "quantile"),
        ("fit", "--loss", "banana"),
        ("fit", "--loss", "ls", "--alpha", "0"),
        ("cv", "--loss", "ls", "--folds", "1"),
    ],
)
def test_bad_flags_exit_2(dataset, argv):
    assert run(*argv, str(dataset))[0] == 2


def test_missing_file_exit_3(tmp_path):
    assert run("fit", "--loss", "ls", str(tmp_path / "nope.csv"))[0] == 3


def test_bad_data_exit_4(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("y,x\n1,2\n3,\n")
    assert run("fit", "--loss", "ls", str(bad))[0] == 4
    bad.write_text("y,x\n1,2\n3,abc\n")
    assert run("fit", "--loss", "ls", str(bad))[0] == 4


def test_cv_deterministic_and_consistent(dataset):
    argv = ("cv", "--loss", "huber", "--gamma", "1", "--folds", "5", "--seed", "7", "--nlambda", "20", str(dataset))
    a, b = run(*argv), run(*argv)
    assert a == b and a[0] == 0
    rows = a[1].splitlines()
    header = rows[0].split(",")
    assert header == ["lambda", "mape_mean", "mape_se", "selected"]
    selected = [r for r in rows[1:] if r.endswith(",1")]
    assert len(selected) == 1


def test_predict_round_trip(dataset, tmp_path):
    model = tmp_path / "m.json"
    assert run("fit", "--loss", "ls", "--nlambda", "5", "--format", "json", "-o", str(model), str(dataset))[0] == 0
    code, text = run("predict", "--with-response", "--index", "4", str(model), str(dataset))
    assert code == 0
    assert len(text.splitlines()) == 1 + 60


def test_synth_files_identical(tmp_path):
    for name in ("a", "b"):
        assert run("synth", "--n", "30", "--p", "12", "--seed", "9", "-o", str(tmp_path / f"{name}.csv"))[0] == 0
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    truth = json.loads((tmp_path / "a.csv.truth.json").read_text())
    j = np.arange(1, 13)
    np.testing.assert_allclose(truth["beta"], (-1.0) ** j * np.exp(-(j - 1) / 10))
    assert truth["params"]["seed"] == 9


def test_synth_wide_streams(tmp_path):
    out = tmp_path / "wide.csv"
    assert run("synth", "--n", "100", "--p", "5000", "--seed", "1", "-o", str(out))[0] == 0
    with open(out) as fh:
        assert len(fh.readline().split(",")) == 5001


def test_compare_self_is_zero(dataset):
    code, text = run("compare", "--against", "self", "--loss", "huber", "--gamma", "1", "--nlambda", "10", str(dataset))
    assert code == 0
    D = [float(r.split(",")[3]) for r in text.splitlines()[1:]]
    assert max(abs(v) for v in D) <= 1e-12


def test_compare_sna(dataset):
    code, text = run("compare", "--against", "sna", "--loss", "huber", "--gamma", "1", "--alpha", "0.9", "--nlambda", "30", str(dataset))
    assert code == 0
    rows = [r.split(",") for r in text.splitlines()[1:]]
    assert all(r[4] == "converged" for r in rows)
    assert max(abs(float(r[3])) for r in rows) <= 1e-6


def test_compare_quantile_oracle(tmp_path):
    data = tmp_path / "q.csv"
    run("synth", "--n", "60", "--p", "5", "--seed", "2", "-o", str(data))
    code, text = run("compare", "--loss", "quantile", "--tau", "0.5", "--nlambda", "20", "--points", "3", str(data))
    assert code == 0
    D = [float(r.split(",")[3]) for r in text.splitlines()[1:]]
    assert len(D) == 3 and all(-1e-3 <= v <= 5e-2 for v in D)
