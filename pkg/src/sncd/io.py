"""CSV input and path artifacts (long-format CSV or versioned JSON)."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, fields
from typing import Optional

import numpy as np

from .data import Dataset, LambdaDiagnostics, LossFamily, LossSpec, SolutionPath, validate_dataset
from .errors import EmptyData, InvalidParameter, MalformedEntry, NonFiniteEntry, RaggedRows

SCHEMA = "sncd.path"
SCHEMA_VERSION = 1
INTERCEPT = "(Intercept)"

_KNOWN_KEYS = {
    "schema", "version", "loss", "alpha", "screening", "preprocess", "lambda_max",
    "column_names", "lambdas", "beta0", "beta", "s", "diagnostics", "gamma_schedule",
    "violations_total", "seconds", "extra",
}
_DIAG_KEYS = {f.name for f in fields(LambdaDiagnostics)}


def _is_number(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def parse_table(text: str, header: Optional[bool] = None):
    """Parse CSV text into (rows of floats, header names or None).

    With ``header=None`` the first row is a header when any of its fields
    is not a number. Empty fields are missing values and rejected.
    """
    raw = [row for row in csv.reader(io.StringIO(text)) if row and any(c.strip() for c in row)]
    if not raw:
        raise EmptyData()
    names = None
    if header is None:
        header = not all(_is_number(c.strip()) for c in raw[0] if c.strip())
    if header:
        names = [c.strip() for c in raw[0]]
        raw = raw[1:]
    if not raw:
        raise EmptyData()
    width = len(names) if names is not None else len(raw[0])
    rows = []
    for i, row in enumerate(raw):
        if len(row) != width:
            raise RaggedRows(i, width, len(row))
        vals = []
        for j, cell in enumerate(row):
            cell = cell.strip()
            if not cell:
                raise NonFiniteEntry(i, j)
            try:
                vals.append(float(cell))
            except ValueError:
                raise MalformedEntry(i, j, cell) from None
        rows.append(vals)
    return rows, names


def read_dataset(path, header: Optional[bool] = None) -> Dataset:
    """First column is the response, the rest are predictors."""
    with open(path, newline="") as fh:
        rows, names = parse_table(fh.read(), header)
    return validate_dataset(rows, None if names is None else names[1:])


def read_matrix(path, header: Optional[bool] = None) -> np.ndarray:
    """Predictor-only table, for prediction."""
    with open(path, newline="") as fh:
        rows, _ = parse_table(fh.read(), header)
    return np.array(rows, dtype=np.float64)


def fmt(x: float) -> str:
    """Shortest round-trip text for a float; deterministic across runs."""
    return repr(float(x))


def path_to_csv(path: SolutionPath) -> str:
    names = path.column_names or tuple(f"x{j + 1}" for j in range(path.beta.shape[1]))
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["lambda", "term", "coefficient"])
    for k, lam in enumerate(path.lambdas):
        lam_s = fmt(lam)
        w.writerow([lam_s, INTERCEPT, fmt(path.beta0[k])])
        for j, name in enumerate(names):
            w.writerow([lam_s, name, fmt(path.beta[k, j])])
    return out.getvalue()


def _clean(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return v


def _loss_dict(loss: LossSpec) -> dict:
    return {"family": loss.family.value, "gamma": loss.gamma, "tau": loss.tau}


def path_to_dict(path: SolutionPath) -> dict:
    diags = []
    extra_diag = path.extra.get("unknown_diagnostics") or [{}] * len(path.diagnostics)
    for d, more in zip(path.diagnostics, extra_diag):
        row = {k: _clean(v) for k, v in asdict(d).items()}
        if row.get("seconds") is None:
            row.pop("seconds", None)
        row.update(more)
        diags.append(row)
    doc = {
        "schema": SCHEMA,
        "version": SCHEMA_VERSION,
        "loss": _loss_dict(path.loss),
        "alpha": path.alpha,
        "screening": path.screening,
        "preprocess": path.preprocess,
        "lambda_max": _clean(float(path.lambda_max)),
        "column_names": list(path.column_names) if path.column_names is not None else None,
        "lambdas": [float(v) for v in path.lambdas],
        "beta0": [float(v) for v in path.beta0],
        "beta": [[float(v) for v in row] for row in path.beta],
        "s": [[float(v) for v in row] for row in path.s],
        "diagnostics": diags,
        "violations_total": path.violations_total,
    }
    if path.loss.family is LossFamily.QUANTILE:
        doc["gamma_schedule"] = [_clean(float(v)) for v in path.gamma_schedule]
    if path.seconds is not None:
        doc["seconds"] = path.seconds
    extra = {k: v for k, v in path.extra.items() if k not in ("unknown", "unknown_diagnostics")}
    if extra:
        doc["extra"] = extra
    doc.update(path.extra.get("unknown", {}))
    return doc


def path_to_json(path: SolutionPath) -> str:
    return json.dumps(path_to_dict(path), indent=1, sort_keys=False) + "\n"


def path_from_dict(doc: dict) -> SolutionPath:
    """Inverse of :func:`path_to_dict`. Unknown fields are kept in ``extra``."""
    if doc.get("schema") != SCHEMA:
        raise InvalidParameter(f"not a path artifact (schema {doc.get('schema')!r})")
    version = doc.get("version")
    if not isinstance(version, int) or version > SCHEMA_VERSION:
        raise InvalidParameter(f"unsupported path artifact version {version!r}")
    ld = doc["loss"]
    loss = LossSpec(LossFamily(ld["family"]), ld.get("gamma"), ld.get("tau"))
    diags, unknown_diag = [], []
    for row in doc.get("diagnostics", []):
        known = {k: v for k, v in row.items() if k in _DIAG_KEYS}
        unknown_diag.append({k: v for k, v in row.items() if k not in _DIAG_KEYS})
        diags.append(LambdaDiagnostics(**known))
    extra = dict(doc.get("extra") or {})
    unknown = {k: v for k, v in doc.items() if k not in _KNOWN_KEYS}
    if unknown:
        extra["unknown"] = unknown
    if any(unknown_diag):
        extra["unknown_diagnostics"] = unknown_diag
    p = len(doc["column_names"]) if doc.get("column_names") else (len(doc["beta"][0]) if doc["beta"] else 0)
    names = doc.get("column_names")
    return SolutionPath(
        lambdas=np.array(doc["lambdas"], dtype=np.float64),
        beta0=np.array(doc["beta0"], dtype=np.float64),
        beta=np.array(doc["beta"], dtype=np.float64).reshape(-1, p),
        s=np.array(doc["s"], dtype=np.float64).reshape(-1, p),
        diagnostics=diags,
        loss=loss,
        alpha=float(doc["alpha"]),
        screening=doc.get("screening", "asr"),
        preprocess=doc.get("preprocess", "standardize"),
        lambda_max=float("nan") if doc.get("lambda_max") is None else float(doc["lambda_max"]),
        column_names=tuple(names) if names is not None else None,
        seconds=doc.get("seconds"),
        extra=extra,
    )


def read_path_json(path) -> SolutionPath:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InvalidParameter(f"path artifact is not valid JSON: {exc}") from None
    return path_from_dict(doc)


def rows_to_csv(header, rows) -> str:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return out.getvalue()


def write_dataset_csv(fh, data: Dataset, chunk: int = 256) -> None:
    """Stream ``data`` as CSV with a header row, ``chunk`` rows at a time."""
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["y", *data.names()])
    for start in range(0, data.n, chunk):
        stop = min(start + chunk, data.n)
        for i in range(start, stop):
            w.writerow([fmt(data.y[i]), *(fmt(v) for v in data.X[i])])
