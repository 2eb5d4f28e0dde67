"""Command-line interface.

Exit codes: 0 success, 2 bad flags, 3 file errors, 4 invalid data.
Non-converged lambdas are reported in the diagnostics and do not change
the exit code.
"""
from __future__ import annotations

import argparse
import json
import sys
import time

import numpy as np

from . import __version__
from .cv import cross_validate
from .data import FitConfig, LossFamily, LossSpec, PenaltySpec, Preprocess, Screening, SolverState
from .errors import SncdError, ValidationError
from .io import (
    fmt,
    path_to_csv,
    path_to_json,
    read_dataset,
    read_matrix,
    read_path_json,
    rows_to_csv,
    write_dataset_csv,
)
from .losses import relative_difference

EXIT_FLAGS = 2
EXIT_IO = 3
EXIT_DATA = 4


class FlagError(Exception):
    pass


def _positive(text):
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return v


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _unit(text):
    v = float(text)
    if not 0.0 < v < 1.0:
        raise argparse.ArgumentTypeError(f"expected a number in (0, 1), got {text}")
    return v


def _alpha(text):
    v = float(text)
    if not 0.0 < v <= 1.0:
        raise argparse.ArgumentTypeError(f"alpha must lie in (0, 1], got {text}")
    return v


def _lambda_list(text):
    try:
        vals = [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad lambda list {text!r}") from None
    if not vals or any(not v > 0 for v in vals) or len(set(vals)) != len(vals):
        raise argparse.ArgumentTypeError("lambda values must be positive and distinct")
    return tuple(vals)


def _add_data(p):
    p.add_argument("data", help="CSV file, response in the first column")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--header", dest="header", action="store_true", default=None, help="first row is a header")
    g.add_argument("--no-header", dest="header", action="store_false", help="first row is data")


def _add_model(p, alpha_default=1.0):
    p.add_argument("--loss", choices=[f.value for f in LossFamily], default="huber")
    p.add_argument("--gamma", type=_positive, help="Huber band half-width; for quantile, fixes the smoothing width")
    p.add_argument("--tau", type=_unit, help="quantile level (quantile loss)")
    p.add_argument("--alpha", type=_alpha, default=alpha_default, help="elastic-net mixing in (0, 1]")
    p.add_argument("--lambda", dest="lambdas", type=_lambda_list, help="comma-separated lambda values")
    p.add_argument("--nlambda", type=int, default=100)
    p.add_argument("--lambda-min-ratio", type=_unit)
    p.add_argument("--screen", choices=[s.value for s in Screening], default="asr")
    p.add_argument("--preprocess", choices=[m.value for m in Preprocess], default="standardize")
    p.add_argument("--tol", type=_positive, default=1e-7)
    p.add_argument("--kkt-tol", type=_positive, default=1e-7)
    p.add_argument("--max-sweeps", type=_positive_int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--timing", action="store_true", help="include wall-clock seconds (output then varies run to run)")


def _add_output(p, formats=("csv", "json")):
    p.add_argument("--format", choices=formats, default=formats[0])
    p.add_argument("-o", "--output", help="output file (default: standard output)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sncd", description="Elastic-net Huber, quantile and least-squares regression paths.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    p = sub.add_parser("fit", help="fit a regularization path")
    _add_data(p)
    _add_model(p)
    _add_output(p)

    p = sub.add_parser("cv", help="k-fold cross-validation along the path")
    _add_data(p)
    _add_model(p)
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--workers", type=_positive_int, help="fold-fitting threads (default: available CPUs)")
    _add_output(p)

    p = sub.add_parser("predict", help="predict from a saved JSON path")
    p.add_argument("model", help="JSON path artifact written by 'fit --format json'")
    p.add_argument("data", help="CSV of predictors (no response column unless --with-response)")
    p.add_argument("--with-response", action="store_true", help="input has the response in its first column")
    p.add_argument("--index", type=int, help="path index to use (default: all)")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--header", dest="header", action="store_true", default=None)
    g.add_argument("--no-header", dest="header", action="store_false")
    _add_output(p, ("csv",))

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    p.add_argument("--n", type=_positive_int, required=True)
    p.add_argument("--p", type=_positive_int, required=True)
    p.add_argument("--design", choices=["equicorrelated", "factor"], default="equicorrelated")
    p.add_argument("--rho", type=float, default=0.25)
    p.add_argument("--snr", type=_positive, default=3.0)
    p.add_argument("--sparsity", type=float, default=0.1)
    p.add_argument("--error", choices=["t4", "normal"], default="t4")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", required=True, help="dataset CSV")
    p.add_argument("--truth", help="truth sidecar JSON (default: OUTPUT.truth.json)")

    p = sub.add_parser("compare", help="compare the coordinate solver with a reference solver")
    _add_data(p)
    _add_model(p, alpha_default=0.9)
    p.add_argument("--against", choices=["auto", "sna", "oracle", "self"], default="auto",
                   help="auto: Newton-system solver for Huber, oracle otherwise")
    p.add_argument("--points", type=_positive_int, default=5, help="lambdas sampled for oracle comparisons")
    p.add_argument("--iterations", type=_positive_int, default=200_000, help="oracle iteration budget")
    _add_output(p, ("csv",))

    p = sub.add_parser("oracle")  # hidden: not listed in the help text
    _add_data(p)
    _add_model(p)
    p.add_argument("--iterations", type=_positive_int, default=200_000)
    p.add_argument("--exact", action="store_true", help="exact check loss for --loss quantile")
    _add_output(p, ("csv",))
    sub._choices_actions = [a for a in sub._choices_actions if a.dest != "oracle"]
    return parser


def _loss(args) -> LossSpec:
    fam = LossFamily(args.loss)
    if fam is LossFamily.HUBER:
        if args.gamma is None:
            raise FlagError("--gamma is required for --loss huber")
        return LossSpec.huber(args.gamma)
    if fam is LossFamily.QUANTILE:
        if args.tau is None:
            raise FlagError("--tau is required for --loss quantile")
        return LossSpec.quantile(args.tau, args.gamma)
    return LossSpec.ls()


def _config(args) -> FitConfig:
    if args.lambdas is None and args.nlambda < 2:
        raise FlagError("--nlambda must be at least 2")
    return FitConfig(
        nlambda=args.nlambda,
        lambda_min_ratio=args.lambda_min_ratio,
        lambdas=args.lambdas,
        screening=Screening(args.screen),
        tol=args.tol,
        kkt_tol=args.kkt_tol,
        max_sweeps=args.max_sweeps,
        preprocess=Preprocess(args.preprocess),
        seed=args.seed,
        workers=getattr(args, "workers", None),
        timing=args.timing,
    )


def _emit(args, text: str, out) -> None:
    if getattr(args, "output", None):
        with open(args.output, "w", newline="") as fh:
            fh.write(text)
    else:
        out.write(text)


def cmd_fit(args, out):
    from .path import fit_path

    loss, cfg = _loss(args), _config(args)
    data = read_dataset(args.data, args.header)
    path = fit_path(data, loss, args.alpha, cfg)
    _emit(args, path_to_json(path) if args.format == "json" else path_to_csv(path), out)
    bad = int((~path.converged).sum())
    if bad:
        print(f"warning: {bad} of {len(path)} lambdas did not converge", file=sys.stderr)
    return 0


def cmd_cv(args, out):
    loss, cfg = _loss(args), _config(args)
    if args.folds < 2:
        raise FlagError("--folds must be at least 2")
    data = read_dataset(args.data, args.header)
    res = cross_validate(data, loss, args.alpha, cfg, k=args.folds, fit_full=False)
    if args.format == "json":
        doc = {
            "criterion": res.criterion,
            "lambdas": [float(v) for v in res.lambdas],
            "mean": [float(v) for v in res.mean],
            "se": [float(v) for v in res.se],
            "selected_index": res.selected_index,
            "selected_lambda": res.selected_lambda,
            "folds": [int(f) for f in res.folds],
        }
        _emit(args, json.dumps(doc, indent=1) + "\n", out)
    else:
        rows = [(float(l), float(m), float(s), int(k == res.selected_index))
                for k, (l, m, s) in enumerate(zip(res.lambdas, res.mean, res.se))]
        _emit(args, rows_to_csv(["lambda", f"{res.criterion}_mean", f"{res.criterion}_se", "selected"], rows), out)
    return 0


def cmd_predict(args, out):
    model = read_path_json(args.model)
    M = read_matrix(args.data, args.header)
    if args.with_response:
        M = M[:, 1:]
    if args.index is not None and not 0 <= args.index < len(model):
        raise FlagError(f"--index out of range for a path of length {len(model)}")
    fitted = model.predict(M)
    cols = range(len(model)) if args.index is None else [args.index]
    header = [f"lambda_{k}" for k in cols]
    rows = [[float(fitted[i, k]) for k in cols] for i in range(fitted.shape[0])]
    _emit(args, rows_to_csv(header, rows), out)
    return 0


def cmd_synth(args, out):
    from .synth import synth_generate

    sd = synth_generate(args.n, args.p, design=args.design, rho=args.rho, snr=args.snr,
                        sparsity=args.sparsity, error=args.error, seed=args.seed)
    with open(args.output, "w", newline="") as fh:
        write_dataset_csv(fh, sd.data)
    truth = {"beta0": sd.beta0, "beta": [float(b) for b in sd.beta], "params": sd.params}
    with open(args.truth or args.output + ".truth.json", "w") as fh:
        json.dump(truth, fh, indent=1)
        fh.write("\n")
    return 0


def _sample_indices(K: int, m: int):
    return sorted(set(np.linspace(1 if K > 1 else 0, K - 1, min(m, K)).round().astype(int).tolist()))


def cmd_compare(args, out):
    from .oracle import oracle_objective, oracle_solve
    from .path import fit_path
    from .preprocess import preprocess, restandardize_coefficients

    loss, cfg = _loss(args), _config(args)
    data = read_dataset(args.data, args.header)
    against = args.against
    if against == "auto":
        against = "sna" if loss.family is LossFamily.HUBER else "oracle"
    t0 = time.perf_counter()
    path = fit_path(data, loss, args.alpha, cfg)
    t_sncd = time.perf_counter() - t0
    rows = []
    header = ["lambda", "f_sncd", "f_other", "D", "status"]
    if against == "self":
        again = fit_path(data, loss, args.alpha, cfg)
        for k, lam in enumerate(path.lambdas):
            fa, fb = path.diagnostics[k].objective, again.diagnostics[k].objective
            rows.append((float(lam), fa, fb, relative_difference(fa, fb), "ok"))
    elif against == "sna":
        from .sna import sna_path

        if loss.family is not LossFamily.HUBER:
            raise FlagError("--against sna needs --loss huber")
        if not args.alpha < 1.0:
            raise FlagError("--against sna needs --alpha < 1")
        t0 = time.perf_counter()
        other = sna_path(data, loss, args.alpha, cfg.replace(lambdas=tuple(float(v) for v in path.lambdas)))
        t_other = time.perf_counter() - t0
        status = other.extra["status"]
        for k, lam in enumerate(path.lambdas):
            fa = path.diagnostics[k].objective
            if k < len(other):
                fb = other.diagnostics[k].objective
                st = status[k]
                d = relative_difference(fa, fb) if st == "converged" else float("nan")
            else:
                fb, d, st = float("nan"), float("nan"), "not_run"
            rows.append((float(lam), fa, fb, d, st))
    else:
        # objectives are compared on the scale the path was solved on
        work, info = preprocess(data, cfg.preprocess)
        exact = loss.family is LossFamily.QUANTILE
        for k in _sample_indices(len(path), args.points):
            lam = float(path.lambdas[k])
            pen = PenaltySpec(lam, args.alpha)
            used = loss if loss.gamma is not None or not exact else loss.with_gamma(path.gamma_schedule[k])
            b0, b = restandardize_coefficients(path.beta0[k], path.beta[k], info)
            st = SolverState.from_coefficients(work, float(b0), b)
            o = oracle_solve(work, used, pen, iterations=args.iterations, exact=exact)
            fa = oracle_objective(st, work, used, pen, exact=exact)
            fb = oracle_objective(o, work, used, pen, exact=exact)
            rows.append((lam, fa, fb, relative_difference(fa, fb), "ok"))
    text = rows_to_csv(header, rows)
    if args.timing:
        text += f"# seconds sncd={fmt(t_sncd)}\n"
        if against == "sna":
            text += f"# seconds sna={fmt(t_other)}\n"
    _emit(args, text, out)
    return 0


def cmd_oracle(args, out):
    from .oracle import oracle_objective, oracle_solve

    loss = _loss(args)
    if args.lambdas is None or len(args.lambdas) != 1:
        raise FlagError("oracle needs exactly one --lambda value")
    data = read_dataset(args.data, args.header)
    if loss.gamma is None:
        loss = loss.with_gamma(1.0)
    pen = PenaltySpec(args.lambdas[0], args.alpha)
    st = oracle_solve(data, loss, pen, iterations=args.iterations, exact=args.exact)
    f = oracle_objective(st, data, loss, pen, exact=args.exact)
    rows = [("objective", f), ("(Intercept)", st.beta0)]
    rows += [(name, float(b)) for name, b in zip(data.names(), st.beta)]
    _emit(args, rows_to_csv(["term", "value"], rows), out)
    return 0


COMMANDS = {
    "fit": cmd_fit,
    "cv": cmd_cv,
    "predict": cmd_predict,
    "synth": cmd_synth,
    "compare": cmd_compare,
    "oracle": cmd_oracle,
}


def main(argv=None, out=None) -> int:
    out = sys.stdout if out is None else out
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args, out)
    except FlagError as exc:
        parser.print_usage(sys.stderr)
        print(f"sncd: error: {exc}", file=sys.stderr)
        return EXIT_FLAGS
    except OSError as exc:
        print(f"sncd: error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValidationError, SncdError) as exc:
        print(f"sncd: error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
