"""Monte-Carlo harness for depth concentration and rate experiments.

Replication (cell i, rep j) derives its generator seed from
(master_seed, i, j) alone, so any record can be reproduced in isolation and
reports are byte-identical for any worker count.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

import numpy as np

from . import __version__
from .errors import InputError
from .location import location_bound_rhs, min_admissible_n, population_hd, tukey_median
from .models import (AlphaModel, ContaminatedModel, check_growth_condition,
                     contaminant_from_dict, model_from_dict, sample_contaminated)
from .norms import alpha_norm, alpha_norm_rows, conjugate_index, sphere_directions
from .scatter import (population_alpha_scatter_sigma, population_scatter_sigma,
                      sample_scatter_median)

CSV_COLUMNS = ("n", "d", "epsilon", "delta", "replication", "seed",
               "deviation", "bound", "within_bound", "achieved_depth", "sigma_hat")

_KINDS = ("location_rate", "maxdepth_coverage", "scatter_rate")


@dataclass
class MethodSettings:
    """Search effort knobs shared by all experiment kinds."""
    median_directions: int = 32
    multistarts: int = 4
    midpoint_cap: int = 512
    scatter_directions: int = 32
    sigma_grid: int = 512


@dataclass
class ExperimentConfig:
    kind: str
    model: dict
    n_grid: list
    d_grid: list
    epsilons: list
    delta: float
    replications: int
    master_seed: int
    contaminant: Optional[dict] = None
    depth_kind: str = "standard"
    gamma: Optional[float] = None
    kappa: Optional[float] = None
    method: MethodSettings = field(default_factory=MethodSettings)

    def validate(self) -> None:
        if self.kind not in _KINDS:
            raise InputError(f"experiment kind must be one of {_KINDS}, got {self.kind!r}")
        if not self.n_grid or not self.d_grid or not self.epsilons:
            raise InputError("n, d, and epsilon grids must be non-empty")
        if not (0.0 < self.delta < 0.5):
            raise InputError(f"delta must lie in (0, 1/2), got {self.delta}")
        for eps in self.epsilons:
            if not (0.0 <= eps < 1.0 / 3.0):
                raise InputError(f"epsilon grid must lie in [0, 1/3), got {eps}")
        n_min = min_admissible_n(self.delta)
        for n in self.n_grid:
            if n < n_min:
                raise InputError(
                    f"n={n} violates the side condition sqrt(log(1/delta)/(2n)) < 1/3; "
                    f"minimal admissible n is {n_min}")
        if self.replications < 1:
            raise InputError("replications must be >= 1")
        if self.depth_kind not in ("standard", "alpha"):
            raise InputError(f"depth_kind must be standard or alpha, got {self.depth_kind!r}")

    def cells(self) -> list:
        return [(d, n, eps) for d in self.d_grid for n in self.n_grid
                for eps in self.epsilons]

    def echo(self) -> dict:
        return {
            "kind": self.kind,
            "model": dict(self.model),
            "contaminant": dict(self.contaminant) if self.contaminant else None,
            "n_grid": list(self.n_grid),
            "d_grid": list(self.d_grid),
            "epsilons": list(self.epsilons),
            "delta": self.delta,
            "replications": self.replications,
            "master_seed": self.master_seed,
            "depth_kind": self.depth_kind,
            "gamma": self.gamma,
            "kappa": self.kappa,
            "method": vars(self.method).copy(),
            "version": __version__,
        }


@dataclass
class Record:
    n: int
    d: int
    epsilon: float
    delta: float
    replication: int
    seed: int
    deviation: float
    bound: float
    within_bound: bool
    achieved_depth: Optional[float] = None
    sigma_hat: Optional[float] = None

    def as_row(self) -> list:
        return [self.n, self.d, self.epsilon, self.delta, self.replication,
                self.seed, self.deviation, self.bound, self.within_bound,
                self.achieved_depth, self.sigma_hat]


@dataclass
class CellSummary:
    n: int
    d: int
    epsilon: float
    replications: int
    coverage: float
    median_deviation: float
    q25_deviation: float
    q75_deviation: float
    extra: dict = field(default_factory=dict)


@dataclass
class ExperimentReport:
    kind: str
    config: dict
    records: list
    cells: list


def replication_seed(master_seed: int, d: int, n: int, epsilon: float,
                     replication: int) -> int:
    """Counter-style child seed hashed from the master seed and cell content.

    Keying on (d, n, epsilon) rather than the cell's position in the grid
    means rerunning any single cell in isolation reproduces its records.
    """
    eps_key = int(round(epsilon * 2 ** 30))
    ss = np.random.SeedSequence(entropy=master_seed,
                                spawn_key=(d, n, eps_key, replication))
    return int(ss.generate_state(1, np.uint64)[0])


def resolve_workers() -> int:
    """Worker count, capped by the DEPTHLAB_THREADS environment variable."""
    env = os.environ.get("DEPTHLAB_THREADS", "").strip()
    if env:
        try:
            w = int(env)
        except ValueError:
            raise InputError(f"DEPTHLAB_THREADS must be an integer, got {env!r}") from None
        return max(1, w)
    return max(1, os.cpu_count() or 1)


@lru_cache(maxsize=64)
def _cached_model(spec_json: str) -> AlphaModel:
    return model_from_dict(json.loads(spec_json))


def _build_cm(spec_json: str, cont_json: str, dim: int, epsilon: float) -> ContaminatedModel:
    spec = json.loads(spec_json)
    spec["dim"] = dim
    model = _cached_model(json.dumps(spec, sort_keys=True))
    cont = contaminant_from_dict(json.loads(cont_json), model)
    return ContaminatedModel(model, cont, epsilon)


def _run_task(task: tuple) -> Record:
    """One replication; module-level so process pools can import it."""
    (kind, spec_json, cont_json, depth_kind, n, d, eps, delta, cell_idx, rep,
     seed, bound, sigma_star, mjson) = task
    method = MethodSettings(**json.loads(mjson))
    cm = _build_cm(spec_json, cont_json, d, eps)
    model = cm.base
    x, _ = sample_contaminated(cm, n, seed)

    if kind in ("location_rate", "maxdepth_coverage"):
        med = tukey_median(x, k=method.median_directions,
                           multistarts=method.multistarts, seed=seed,
                           midpoint_cap=method.midpoint_cap)
        depth_dev = 0.5 - population_hd(med.point, model)
        if kind == "location_rate":
            deviation = alpha_norm(med.point, conjugate_index(model.alpha))
        else:
            deviation = depth_dev
        return Record(n, d, eps, delta, rep, seed, float(deviation), bound,
                      bool(depth_dev <= bound), med.achieved_depth, None)

    res = sample_scatter_median(
        x, depth_kind=depth_kind, alpha=model.alpha, mode="isotropic",
        k=method.scatter_directions, seed=seed,
        sigma_grid=method.sigma_grid, median_k=method.median_directions,
        midpoint_cap=method.midpoint_cap)
    s_hat = res.sigma
    f = model.marginal.cdf
    if depth_kind == "standard":
        deviation = abs(s_hat ** 2 - sigma_star ** 2)  # operator norm, isotropic pair
        r = d ** (0.5 - 1.0 / model.alpha)
        depth_hat = 2.0 * min(f(s_hat * r) - 0.5, 1.0 - f(s_hat))
        depth_star = 2.0 * min(f(sigma_star * r) - 0.5, 1.0 - f(sigma_star))
    else:
        deviation = abs(s_hat - sigma_star)  # pseudometric, isotropic pair
        depth_hat = 2.0 * min(f(s_hat) - 0.5, 1.0 - f(s_hat))
        depth_star = 0.5
    return Record(n, d, eps, delta, rep, seed, float(deviation), bound,
                  bool(abs(depth_star - depth_hat) <= bound),
                  res.achieved_depth, float(s_hat))


def _interval_containment(sigma_hat: float, model: AlphaModel, sigma_star: float,
                          bound: float, dirs: np.ndarray) -> bool:
    """For standard scatter depth with alpha < 2: check that F(sqrt(u' S u))
    stays inside [F(sigma d^(1/2-1/alpha)) - R/2, F(sigma) + R/2] over the
    evaluated directions (rescaled to the alpha-sphere)."""
    f = model.marginal.cdf
    r = model.dim ** (0.5 - 1.0 / model.alpha)
    lo = float(f(sigma_star * r)) - bound / 2.0
    hi = float(f(sigma_star)) + bound / 2.0
    vals = f(sigma_hat / alpha_norm_rows(dirs, model.alpha))
    return bool(np.all((vals >= lo) & (vals <= hi)))


def _prepare(config: ExperimentConfig) -> tuple:
    """Validate, certify growth conditions, and build the task list."""
    config.validate()
    spec_json = json.dumps(dict(config.model), sort_keys=True)
    cont_json = json.dumps(config.contaminant, sort_keys=True)
    mjson = json.dumps(vars(config.method), sort_keys=True)
    eps_max = max(config.epsilons)

    sigma_stars: dict = {}
    for d in config.d_grid:
        spec = dict(config.model)
        spec["dim"] = d
        model = _cached_model(json.dumps(spec, sort_keys=True))
        if config.kind == "location_rate":
            if config.gamma is None or config.kappa is None:
                raise InputError("location_rate requires growth parameters gamma and kappa")
            cert = check_growth_condition(model.marginal, "A2", config.gamma,
                                          config.kappa, epsilon=eps_max)
            if not cert.holds:
                raise InputError(
                    f"growth condition A2 not certified for {model.name} "
                    f"(gamma={config.gamma}, kappa={config.kappa}, eps={eps_max}): "
                    f"{cert.reason or 'infimum below kappa'}; "
                    f"witnessed_inf={cert.witnessed_inf:.6g}")
        elif config.kind == "scatter_rate":
            if config.gamma is None or config.kappa is None:
                raise InputError("scatter_rate requires growth parameters gamma and kappa")
            if config.depth_kind == "alpha":
                sigma_stars[d] = population_alpha_scatter_sigma(model)
                variant = "A4"
            else:
                sigma_stars[d] = population_scatter_sigma(model)
                variant = "A3"
            cert = check_growth_condition(model.marginal, variant, config.gamma,
                                          config.kappa, sigma=sigma_stars[d],
                                          epsilon=eps_max)
            if not cert.holds:
                raise InputError(
                    f"growth condition {variant} not certified for {model.name} "
                    f"(gamma={config.gamma}, kappa={config.kappa}, eps={eps_max}, "
                    f"sigma={sigma_stars[d]:.6g}): "
                    f"{cert.reason or 'infimum below kappa'}; "
                    f"witnessed_inf={cert.witnessed_inf:.6g}")

    tasks = []
    for cell_idx, (d, n, eps) in enumerate(config.cells()):
        bound = location_bound_rhs(eps, d, n, config.delta).value
        s_star = sigma_stars.get(d, 0.0)
        for rep in range(config.replications):
            seed = replication_seed(config.master_seed, d, n, eps, rep)
            tasks.append((config.kind, spec_json, cont_json, config.depth_kind,
                          n, d, eps, config.delta, cell_idx, rep, seed, bound,
                          s_star, mjson))
    return tasks, sigma_stars


def run_experiment(config: ExperimentConfig) -> ExperimentReport:
    """Run every (cell, replication) task, in parallel when allowed.

    Results are merged in task order, so the report does not depend on the
    worker count.
    """
    tasks, sigma_stars = _prepare(config)
    workers = resolve_workers()
    if workers == 1 or len(tasks) == 1:
        records = [_run_task(t) for t in tasks]
    else:
        chunk = max(1, len(tasks) // (workers * 8))
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_run_task, tasks, chunksize=chunk))
    cells = _summarize_cells(config, records, sigma_stars)
    return ExperimentReport(config.kind, config.echo(), records, cells)


def run_location_rate(config: ExperimentConfig) -> ExperimentReport:
    if config.kind != "location_rate":
        raise InputError("run_location_rate: config.kind must be 'location_rate'")
    return run_experiment(config)


def run_maxdepth_coverage(config: ExperimentConfig) -> ExperimentReport:
    if config.kind != "maxdepth_coverage":
        raise InputError("run_maxdepth_coverage: config.kind must be 'maxdepth_coverage'")
    return run_experiment(config)


def run_scatter_rate(config: ExperimentConfig) -> ExperimentReport:
    if config.kind != "scatter_rate":
        raise InputError("run_scatter_rate: config.kind must be 'scatter_rate'")
    return run_experiment(config)


def _summarize_cells(config: ExperimentConfig, records: list,
                     sigma_stars: dict) -> list:
    cells = []
    for cell_idx, (d, n, eps) in enumerate(config.cells()):
        recs = [r for r in records if r.n == n and r.d == d and r.epsilon == eps]
        devs = np.array([r.deviation for r in recs])
        coverage = float(np.mean([r.within_bound for r in recs]))
        extra = {}
        if config.kind == "location_rate":
            c1d = location_bound_rhs(0.0, d, n, config.delta)
            budget = (config.gamma * config.kappa) - eps / (1.0 - eps)
            lhs = c1d.c1 * math.sqrt(d / n) + c1d.c2 * math.sqrt(
                math.log(1.0 / config.delta) / n)
            extra["side_condition"] = bool(lhs < budget)
        if config.kind == "scatter_rate":
            extra["sigma_star"] = sigma_stars.get(d, None)
            spec = dict(config.model)
            spec["dim"] = d
            model = _cached_model(json.dumps(spec, sort_keys=True))
            if config.depth_kind == "standard" and model.alpha < 2.0:
                dirs = sphere_directions(d, config.method.scatter_directions,
                                         "candidate-augmented", 0)
                hits = [_interval_containment(r.sigma_hat, model, sigma_stars[d],
                                              r.bound, dirs) for r in recs]
                extra["interval_frequency"] = float(np.mean(hits))
        cells.append(CellSummary(n, d, eps, len(recs), coverage,
                                 float(np.median(devs)),
                                 float(np.quantile(devs, 0.25)),
                                 float(np.quantile(devs, 0.75)), extra))
    return cells


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    stderr: float
    ci_low: float
    ci_high: float


def rate_slope(report: ExperimentReport, axis: str) -> SlopeFit:
    """Least-squares slope of log median-deviation against the log grid axis.

    Needs at least three distinct axis values with all other grid axes fixed;
    the confidence band is slope +- 1.96 standard errors.
    """
    if axis not in ("n", "epsilon"):
        raise InputError(f"rate_slope: axis must be 'n' or 'epsilon', got {axis!r}")
    other = {"n": ("d", "epsilon"), "epsilon": ("d", "n")}[axis]
    for name in other:
        vals = {getattr(r, name) for r in report.records}
        if len(vals) > 1:
            raise InputError(f"rate_slope: axis {name} is not fixed: {sorted(vals)}")
    groups: dict = {}
    for r in report.records:
        groups.setdefault(getattr(r, axis), []).append(r.deviation)
    if len(groups) < 3:
        raise InputError("rate_slope: need at least 3 grid points on the axis")
    xs, ys = [], []
    for key in sorted(groups):
        med = float(np.median(groups[key]))
        if key <= 0.0 or med <= 0.0:
            raise InputError("rate_slope: axis values and median deviations must be positive")
        xs.append(math.log(key))
        ys.append(math.log(med))
    x = np.array(xs)
    y = np.array(ys)
    xc = x - x.mean()
    slope = float((xc @ (y - y.mean())) / (xc @ xc))
    resid = y - (y.mean() + slope * xc)
    dof = max(len(x) - 2, 1)
    se = float(math.sqrt((resid @ resid) / dof / (xc @ xc)))
    return SlopeFit(slope, se, slope - 1.96 * se, slope + 1.96 * se)


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def summarize(report: ExperimentReport, format: str = "csv") -> bytes:
    """Serialize the report; CSV carries the records, JSON adds config and cells."""
    if format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in report.records:
            w.writerow([_fmt(v) for v in r.as_row()])
        return buf.getvalue().encode()
    if format == "json":
        payload = {
            "kind": report.kind,
            "config": report.config,
            "records": [dict(zip(CSV_COLUMNS, r.as_row())) for r in report.records],
            "cells": [{**{k: getattr(c, k) for k in
                          ("n", "d", "epsilon", "replications", "coverage",
                           "median_deviation", "q25_deviation", "q75_deviation")},
                       **c.extra} for c in report.cells],
        }
        return json.dumps(payload, indent=1, sort_keys=False).encode()
    raise InputError(f"summarize: unknown format {format!r}")


def records_from_csv(data: bytes) -> list:
    rows = list(csv.reader(io.StringIO(data.decode())))
    if not rows or tuple(rows[0]) != CSV_COLUMNS:
        raise InputError("records_from_csv: unexpected header")
    out = []
    for row in rows[1:]:
        vals = dict(zip(CSV_COLUMNS, row))
        out.append(Record(
            n=int(vals["n"]), d=int(vals["d"]), epsilon=float(vals["epsilon"]),
            delta=float(vals["delta"]), replication=int(vals["replication"]),
            seed=int(vals["seed"]), deviation=float(vals["deviation"]),
            bound=float(vals["bound"]), within_bound=vals["within_bound"] == "true",
            achieved_depth=float(vals["achieved_depth"]) if vals["achieved_depth"] else None,
            sigma_hat=float(vals["sigma_hat"]) if vals["sigma_hat"] else None))
    return out


def records_from_json(data: bytes) -> list:
    payload = json.loads(data.decode())
    out = []
    for rec in payload["records"]:
        out.append(Record(**{k: rec[k] for k in CSV_COLUMNS}))
    return out


def load_config(path) -> ExperimentConfig:
    """Read an experiment configuration from a TOML file."""
    try:
        import tomllib
    except ImportError:
        import tomli as tomllib
    with open(path, "rb") as fh:
        raw = tomllib.load(fh)
    method_raw = raw.get("method", {})
    bad = set(method_raw) - set(MethodSettings.__dataclass_fields__)
    if bad:
        raise InputError(f"experiment config: unknown method keys {sorted(bad)}")
    try:
        kind = raw["kind"]
        model = dict(raw["model"])
        grid = raw["grid"]
        run = raw["run"]
        cfg = ExperimentConfig(
            kind=kind,
            model=model,
            contaminant=dict(raw["contaminant"]) if "contaminant" in raw else None,
            n_grid=[int(v) for v in grid["n"]],
            d_grid=[int(v) for v in grid["d"]],
            epsilons=[float(v) for v in grid["epsilon"]],
            delta=float(run["delta"]),
            replications=int(run["replications"]),
            master_seed=int(run["master_seed"]),
            depth_kind=raw.get("scatter", {}).get("depth_kind", "standard"),
            gamma=float(raw["growth"]["gamma"]) if "growth" in raw else None,
            kappa=float(raw["growth"]["kappa"]) if "growth" in raw else None,
            method=MethodSettings(**method_raw),
        )
    except KeyError as exc:
        raise InputError(f"experiment config: missing key {exc}") from None
    cfg.validate()
    return cfg
