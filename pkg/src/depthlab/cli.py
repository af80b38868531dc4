"""Command-line interface: depth, median, solve-sigma, certify, experiment."""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from .errors import InputError, NumericalError
from .experiments import load_config, run_experiment, summarize
from .location import population_hd, sample_hd, tukey_median
from .models import check_growth_condition, parse_model_spec
from .scatter import (population_alpha_scatter_sigma, population_scatter_sigma,
                      sample_scatter_median)


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on bad flags; the contract here is exit code 1."""

    def error(self, message):
        self.exit(1, f"{self.prog}: error: {message}\n")


def read_data_csv(path) -> np.ndarray:
    """Headerless comma-separated observations, one per row."""
    rows = []
    width = None
    with open(path, newline="") as fh:
        for i, line in enumerate(csv.reader(fh), start=1):
            if not line:
                continue
            vals = []
            for j, cell in enumerate(line, start=1):
                try:
                    vals.append(float(cell))
                except ValueError:
                    raise InputError(
                        f"{path}: malformed CSV at row {i}, column {j}: {cell!r}") from None
            if width is None:
                width = len(vals)
            elif len(vals) != width:
                raise InputError(f"{path}: row {i} has {len(vals)} columns, expected {width}")
            rows.append(vals)
    if not rows:
        raise InputError(f"{path}: no data rows")
    return np.array(rows)


def _parse_point(text: str) -> np.ndarray:
    try:
        return np.array([float(v) for v in text.split(",")])
    except ValueError:
        raise InputError(f"--point must be comma-separated numbers, got {text!r}") from None


def _cmd_depth(args) -> int:
    if (args.model is None) == (args.data is None):
        raise InputError("depth: provide exactly one of --model or --data")
    point = _parse_point(args.point)
    if args.model is not None:
        model = parse_model_spec(args.model)
        if point.shape != (model.dim,):
            raise InputError(f"depth: point has length {len(point)}, model dim is {model.dim}")
        value = population_hd(point, model)
    else:
        data = read_data_csv(args.data)
        value = sample_hd(point, data, method=args.method, k=args.dirs, seed=args.seed)
    print(f"{value:.12g}")
    return 0


def _parse_kind(kind: str):
    if kind == "location":
        return "location", None, None
    if kind == "scatter:standard":
        return "scatter", "standard", None
    if kind.startswith("scatter:alpha="):
        try:
            alpha = float(kind.split("=", 1)[1])
        except ValueError:
            raise InputError(f"median: bad alpha in --kind {kind!r}") from None
        return "scatter", "alpha", alpha
    raise InputError("median: --kind must be location, scatter:standard, "
                     f"or scatter:alpha=<a>, got {kind!r}")


def _cmd_median(args) -> int:
    data = read_data_csv(args.data)
    family, depth_kind, alpha = _parse_kind(args.kind)
    if family == "location":
        res = tukey_median(data, k=args.dirs, seed=args.seed)
        print("point: " + " ".join(f"{v:.12g}" for v in res.point))
        print(f"achieved_depth: {res.achieved_depth:.12g}")
        return 0
    if args.mode is None:
        raise InputError("median: scatter kinds require --mode")
    res = sample_scatter_median(data, depth_kind=depth_kind, alpha=alpha,
                                mode=args.mode, k=args.dirs, seed=args.seed)
    print("matrix:")
    for row in res.matrix:
        print("  " + " ".join(f"{v:.12g}" for v in row))
    if res.sigma is not None:
        print(f"sigma: {res.sigma:.12g}")
    print(f"achieved_depth: {res.achieved_depth:.12g}")
    return 0


def _cmd_solve_sigma(args) -> int:
    model = parse_model_spec(args.model)
    if args.depth == "standard":
        sigma = population_scatter_sigma(model)
    else:
        sigma = population_alpha_scatter_sigma(model)
    print(f"{sigma:.12f}")
    return 0


def _cmd_certify(args) -> int:
    model = parse_model_spec(args.model)
    cert = check_growth_condition(model.marginal, args.variant, args.gamma,
                                  args.kappa, sigma=args.sigma, epsilon=args.epsilon)
    print(f"variant: {cert.variant}")
    print(f"holds: {'true' if cert.holds else 'false'}")
    print(f"witnessed_inf: {cert.witnessed_inf:.12g}")
    print(f"range_ok: {'true' if cert.range_ok else 'false'}")
    if cert.reason:
        print(f"reason: {cert.reason}")
    return 0


def _cmd_experiment(args) -> int:
    config = load_config(args.config)
    report = run_experiment(config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.csv").write_bytes(summarize(report, "csv"))
    (out / "report.json").write_bytes(summarize(report, "json"))
    level = 1.0 - 2.0 * config.delta
    ok = True
    print("cell coverage (target >= %.3f):" % level)
    for c in report.cells:
        line = (f"  d={c.d} n={c.n} eps={c.epsilon:g}: coverage={c.coverage:.3f} "
                f"median_dev={c.median_deviation:.4g}")
        for key, val in c.extra.items():
            line += f" {key}={val:.4g}" if isinstance(val, float) else f" {key}={val}"
        print(line)
        ok = ok and c.coverage >= level
    print(f"reports written to {out / 'report.csv'} and {out / 'report.json'}")
    return 0 if ok else 1


def build_parser() -> _Parser:
    p = _Parser(prog="depthlab",
                description="Halfspace-depth location and scatter estimation "
                            "for alpha-symmetric distributions.")
    sub = p.add_subparsers(dest="command", required=True)

    d = sub.add_parser("depth", parents=[], help="evaluate population or sample depth",
                       description="Evaluate population depth of a model or sample "
                                   "depth of a dataset at a point.")
    d.add_argument("--model", help="model spec, e.g. cauchy:d=2 or stable:alpha=1.5,d=3")
    d.add_argument("--data", help="headerless CSV of observations, one per row")
    d.add_argument("--point", required=True, help="comma-separated coordinates")
    d.add_argument("--method", default="approx", choices=["exact1d", "exact2d", "approx"])
    d.add_argument("--dirs", type=int, default=512, help="direction count for approx")
    d.add_argument("--seed", type=int, default=0)
    d.set_defaults(func=_cmd_depth)

    m = sub.add_parser("median", help="location or scatter sample median",
                       description="Estimate the deepest point or scatter matrix.")
    m.add_argument("--data", required=True)
    m.add_argument("--kind", required=True,
                   help="location | scatter:standard | scatter:alpha=<a>")
    m.add_argument("--mode", choices=["isotropic", "diagonal", "full"],
                   help="scatter parameterization (required for scatter kinds)")
    m.add_argument("--dirs", type=int, default=64)
    m.add_argument("--seed", type=int, default=0)
    m.set_defaults(func=_cmd_median)

    s = sub.add_parser("solve-sigma", help="population isotropic scatter level",
                       description="Solve for the population isotropic scatter level.")
    s.add_argument("--model", required=True)
    s.add_argument("--depth", required=True, choices=["standard", "alpha"])
    s.set_defaults(func=_cmd_solve_sigma)

    c = sub.add_parser("certify", help="certify a CDF growth condition",
                       description="Certify growth condition A2, A3, or A4.")
    c.add_argument("--model", required=True)
    c.add_argument("--variant", required=True, choices=["A2", "A3", "A4"])
    c.add_argument("--gamma", required=True, type=float)
    c.add_argument("--kappa", required=True, type=float)
    c.add_argument("--epsilon", type=float, default=0.0)
    c.add_argument("--sigma", type=float, help="center for A3/A4")
    c.set_defaults(func=_cmd_certify)

    e = sub.add_parser("experiment", help="run a configured Monte-Carlo experiment",
                       description="Run an experiment config and write CSV/JSON reports.")
    e.add_argument("--config", required=True, help="TOML experiment configuration")
    e.add_argument("--out", required=True, help="output directory")
    e.set_defaults(func=_cmd_experiment)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
