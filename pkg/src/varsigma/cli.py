"""Command-line front end.

Subcommands::

    varsigma estimate --input data.csv --method natural,organic --lambda cv
    varsigma simulate --n 100 --p 500 --rho 0.5 --alpha 0.5 --out data.csv
    varsigma benchmark --rho 0.3,0.9 --alpha 0.1,0.9 --reps 200 --out results/
    varsigma check-bounds --bound lemma1 --reps 100
    varsigma lambda --name lambda3 --input data.csv

Exit status is 0 when every requested command completed, even if some
method failed on the data (those failures are flagged in the report), and 2
for usage or input errors.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import re
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .core import Dataset, VarsigmaError, standardize_columns
from .estimators import Method
from .simulation import (
    BenchmarkReport,
    BenchmarkSettings,
    MethodConfig,
    SimulationSpec,
    check_deterministic_bounds,
    check_mse_bound,
    estimate,
    generate_replication,
    run_benchmark,
)
from .tuning import FixedLambda, grid_for, kfold_cv, lambda3_monte_carlo, lambda_fixed

EXIT_OK = 0
EXIT_INPUT = 2

ESTIMATE_COLUMNS = [
    "method",
    "lambda_rule",
    "lambda",
    "sigma2",
    "sigma",
    "nnz",
    "converged",
    "duality_gap",
    "identity_residual",
    "error",
]

ESTIMABLE = ("naive", "reid", "natural", "organic", "sqrt")
PAPER_GRID = "0.1,0.3,0.5,0.7,0.9"
BOUNDS = ("lemma1", "lemma4", "thm1", "thm3", "thm4")

# decimal point, optional exponent; no thousands separators, no nan/inf
_NUMBER = re.compile(r"^[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?$")


class InputError(VarsigmaError):
    """Malformed user input: bad CSV, bad option value."""


# ---------------------------------------------------------------- input


def read_csv(path: str | Path, response: str = "y") -> tuple[Dataset, list[str]]:
    """Read a CSV with a header row, one column named ``response`` and numeric predictors.

    Returns the dataset and the predictor names. Errors name the offending
    file row (1-based, header is row 1) and column.
    """
    path = Path(path)
    try:
        with path.open(newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror or exc}") from None
    rows = [r for r in rows if any(cell.strip() for cell in r)]
    if not rows:
        raise InputError(f"{path}: file is empty")
    header = [h.strip() for h in rows[0]]
    if response not in header:
        raise InputError(f"{path}: no column named {response!r} in header {header}")
    if header.count(response) > 1:
        raise InputError(f"{path}: column {response!r} appears more than once")
    if len(header) < 2:
        raise InputError(f"{path}: no predictor columns besides {response!r}")
    if len(rows) < 2:
        raise InputError(f"{path}: header but no data rows")
    values = np.empty((len(rows) - 1, len(header)))
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise InputError(f"{path}: row {i} has {len(row)} fields, header has {len(header)}")
        for j, cell in enumerate(row):
            text = cell.strip()
            if not _NUMBER.match(text):
                raise InputError(f"{path}: row {i}, column {j + 1} ({header[j]!r}): {cell!r} is not a number")
            values[i - 2, j] = float(text)
    yj = header.index(response)
    names = [h for k, h in enumerate(header) if k != yj]
    X = np.delete(values, yj, axis=1)
    return Dataset(values[:, yj], X), names


def parse_floats(text: str, name: str) -> list[float]:
    out = []
    for part in text.split(","):
        part = part.strip()
        if not _NUMBER.match(part):
            raise InputError(f"--{name}: {part!r} is not a number")
        out.append(float(part))
    return out


def parse_methods(text: str, allowed=ESTIMABLE) -> list[str]:
    methods = [m.strip().lower() for m in text.split(",") if m.strip()]
    if not methods:
        raise InputError("no methods given")
    for m in methods:
        if (m.partition(":")[0] if "oracle" in allowed else m) not in allowed:
            raise InputError(f"unknown method {m!r}; choose from {', '.join(allowed)}")
    return methods


def parse_lambda_rule(text: str) -> str:
    rule = text.strip().lower()
    if rule in ("cv", "lambda0", "lambda2", "lambda3"):
        return rule
    if not _NUMBER.match(rule) or not float(rule) > 0:
        raise InputError(f"--lambda must be cv, lambda0, lambda2, lambda3 or a positive number, got {text!r}")
    return rule


# ---------------------------------------------------------------- output


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, np.generic):
        return _jsonable(obj.item())
    return obj


def _csv_text(columns, rows) -> str:
    lines = [",".join(columns)]
    for row in rows:
        cells = []
        for c in columns:
            v = row.get(c)
            if v is None:
                cells.append("")
            elif isinstance(v, float):
                cells.append(repr(v))
            else:
                text = str(v)
                cells.append('"' + text.replace('"', '""') + '"' if ("," in text or '"' in text) else text)
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def _emit(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _metadata(args, **extra) -> dict:
    config = {k: v for k, v in vars(args).items() if k not in ("func",)}
    return {"version": __version__, "command": args.command, "seed": getattr(args, "seed", None), "config": config, **extra}


# ---------------------------------------------------------------- commands


def _resolve(rule: str, method: Method, sd, y, args, cache: dict) -> float:
    if rule == "cv":
        family = Method.NATURAL if method in (Method.NAIVE, Method.REID, Method.NATURAL) else method
        if family not in cache:
            grid = grid_for(family, sd, y, args.grid_count, args.grid_ratio)
            cache[family] = kfold_cv(sd, y, family, grid, args.folds, args.seed)
        return cache[family].chosen_lambda
    if rule in ("lambda0", "lambda2"):
        return lambda_fixed(sd.n, sd.p, FixedLambda(rule))
    if rule == "lambda3":
        if "lambda3" not in cache:
            cache["lambda3"] = lambda3_monte_carlo(sd, args.lambda3_reps, args.seed)
        return cache["lambda3"]
    return float(rule)


def cmd_estimate(args) -> int:
    data, names = read_csv(args.input)
    if args.center:
        data = data.centered()
    with warnings.catch_warnings():
        # reported as an input error just below
        warnings.simplefilter("ignore", RuntimeWarning)
        sd = standardize_columns(data)
    if sd.degenerate:
        raise InputError("no usable predictor columns (all constant or zero)")
    rule = parse_lambda_rule(args.lambda_rule)
    methods = parse_methods(args.method)
    y = data.y
    cache: dict = {}
    results = []
    for name in methods:
        method = Method(name)
        row = {"method": name, "lambda_rule": rule, "lambda": None, "error": None}
        try:
            lam = _resolve(rule, method, sd, y, args, cache)
            row["lambda"] = lam
            est = estimate(MethodConfig(method, rule), sd, y, lam)
            row.update(
                sigma2=est.sigma2,
                sigma=est.sigma,
                nnz=est.nnz,
                converged=est.converged,
                duality_gap=est.duality_gap,
                identity_residual=est.identity_residual,
            )
        except VarsigmaError as exc:
            row["error"] = f"{type(exc).__name__}: {exc}"
        results.append(row)

    dropped = [names[j] for j in sorted(sd.dropped)]
    meta = _metadata(args, n=sd.n, p=sd.p, dropped_columns=dropped)
    if rule == "cv":
        meta["cv"] = {
            m.value: {"chosen_lambda": cv.chosen_lambda, "chosen_index": cv.chosen_index, "folds": args.folds}
            for m, cv in cache.items()
            if isinstance(m, Method)
        }
    if args.format == "csv":
        text = _csv_text(ESTIMATE_COLUMNS, results)
    else:
        text = json.dumps(_jsonable({"metadata": meta, "results": [{c: r.get(c) for c in ESTIMATE_COLUMNS} for r in results]}), indent=2) + "\n"
    _emit(text, args.out)
    return EXIT_OK


def cmd_simulate(args) -> int:
    spec = SimulationSpec(args.n, args.p, args.rho, args.alpha, args.tau, args.seed)
    truth = generate_replication(spec, args.rep)
    header = ["y"] + [f"x{j + 1}" for j in range(spec.p)]
    lines = [",".join(header)]
    for i in range(spec.n):
        lines.append(",".join(repr(float(v)) for v in (truth.y[i], *truth.X[i])))
    _emit("\n".join(lines) + "\n", args.out)
    if args.truth:
        doc = {
            "metadata": _metadata(args),
            "sigma2": truth.sigma2,
            "support": truth.support.tolist(),
            "beta_star": truth.beta_star[truth.support].tolist(),
            "oracle_sigma2": float(truth.eps @ truth.eps) / spec.n,
        }
        Path(args.truth).write_text(json.dumps(_jsonable(doc), indent=2) + "\n")
    return EXIT_OK


def cmd_benchmark(args) -> int:
    rhos = parse_floats(args.rho, "rho")
    alphas = parse_floats(args.alpha, "alpha")
    taus = parse_floats(args.tau, "tau")
    methods = parse_methods(args.methods, ESTIMABLE + ("oracle",))
    settings = BenchmarkSettings(folds=args.folds, grid_count=args.grid_count, grid_ratio=args.grid_ratio, lambda3_reps=args.lambda3_reps)
    report = BenchmarkReport(metadata=_metadata(args))
    for tau in taus:
        for rho in rhos:
            for alpha in alphas:
                cell = {"n": args.n, "p": args.p, "rho": rho, "alpha": alpha, "tau": tau}
                try:
                    spec = SimulationSpec(args.n, args.p, rho, alpha, tau, args.seed)
                except VarsigmaError as exc:
                    report.cell_errors.append({**cell, "error": str(exc)})
                    continue
                part = run_benchmark(spec, methods, args.reps, args.seed, settings, args.threads)
                report.extend(part)
                if not args.quiet:
                    print(f"rho={rho} alpha={alpha} tau={tau}: {part.wall_time:.1f}s", file=sys.stderr)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "summary.csv").write_text(report.summary_csv())
    (out / "raw.csv").write_text(report.raw_csv())
    (out / "summary.json").write_text(report.to_json() + "\n")
    return EXIT_OK


def cmd_check_bounds(args) -> int:
    bound = args.bound.lower()
    if bound not in BOUNDS:
        raise InputError(f"unknown bound {args.bound!r}; choose from {', '.join(BOUNDS)}")
    spec = SimulationSpec(args.n, args.p, args.rho, args.alpha, args.tau, args.seed)
    meta = _metadata(args)
    if bound in ("thm1", "thm3"):
        res = check_mse_bound(spec, bound, args.M, args.reps)
        doc = {"metadata": meta, "bound": bound, "passed": res.passed, "mse": res.observed, "bound_value": res.bound, "slack": res.slack, "lambda": res.lam, **res.extra}
    else:
        which = "theorem4" if bound == "thm4" else bound
        checks = [check_deterministic_bounds(generate_replication(spec, r), which, args.L) for r in range(args.reps)]
        slacks = [c.slack for c in checks]
        doc = {
            "metadata": meta,
            "bound": bound,
            "reps": args.reps,
            "passes": sum(c.passed for c in checks),
            "failures": sum(not c.passed for c in checks),
            "min_slack": min(slacks),
            "median_slack": float(np.median(slacks)),
            "slacks": slacks,
        }
    text = json.dumps(_jsonable(doc), indent=2) + "\n"
    _emit(text, args.out)
    return EXIT_OK


def cmd_lambda(args) -> int:
    data, _ = read_csv(args.input)
    if args.center:
        data = data.centered()
    sd = standardize_columns(data)
    name = args.name.lower()
    if name == "lambda3":
        value = lambda3_monte_carlo(sd, args.reps, args.seed)
    elif name in ("lambda0", "lambda2"):
        value = lambda_fixed(sd.n, sd.p, FixedLambda(name))
    else:
        raise InputError(f"unknown lambda {args.name!r}; choose lambda0, lambda2 or lambda3")
    print(repr(value))
    return EXIT_OK


# ---------------------------------------------------------------- parser


def _add_spec(p, *, rho="0.5", alpha="0.5", tau="1"):
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--p", type=int, default=500)
    p.add_argument("--rho", default=rho)
    p.add_argument("--alpha", default=alpha)
    p.add_argument("--tau", default=tau)
    p.add_argument("--seed", type=int, default=0)


def _add_tuning(p):
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--grid-count", type=int, default=50)
    p.add_argument("--grid-ratio", type=float, default=1e-3)
    p.add_argument("--lambda3-reps", type=int, default=1000)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="varsigma", description="Error-variance estimation for sparse linear models.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate", help="estimate sigma^2 from a CSV with a 'y' column")
    p.add_argument("--input", required=True)
    p.add_argument("--method", default="natural,organic")
    p.add_argument("--lambda", dest="lambda_rule", required=True, help="cv, lambda0, lambda2, lambda3 or a number")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--center", action="store_true", help="center y and the columns before standardizing")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out")
    _add_tuning(p)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("simulate", help="write one simulated data set as CSV")
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--p", type=int, default=500)
    p.add_argument("--rho", type=float, default=0.5)
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--tau", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--rep", type=int, default=0)
    p.add_argument("--out")
    p.add_argument("--truth", help="also write sigma^2 and beta* to this JSON file")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("benchmark", help="Monte Carlo comparison over a grid of models")
    _add_spec(p, rho=PAPER_GRID, alpha=PAPER_GRID, tau="0.3,1,3")
    p.add_argument("--reps", type=int, default=100)
    p.add_argument("--methods", default=",".join(("naive", "reid", "natural", "organic", "sqrt", "oracle")))
    p.add_argument("--threads", type=int)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--quiet", action="store_true")
    _add_tuning(p)
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("check-bounds", help="check a finite-sample bound by simulation")
    p.add_argument("--bound", required=True, help=", ".join(BOUNDS))
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--p", type=int, default=500)
    p.add_argument("--rho", type=float, default=0.3)
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--tau", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--reps", type=int, default=100)
    p.add_argument("--L", type=float, default=math.log(100.0))
    p.add_argument("--M", type=float, default=1.5)
    p.add_argument("--out")
    p.set_defaults(func=cmd_check_bounds)

    p = sub.add_parser("lambda", help="print a fixed tuning value for a data set")
    p.add_argument("--name", required=True, help="lambda0, lambda2 or lambda3")
    p.add_argument("--input", required=True)
    p.add_argument("--reps", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--center", action="store_true")
    p.set_defaults(func=cmd_lambda)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except VarsigmaError as exc:
        print(f"varsigma {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
