"""Halfspace depth, Tukey median search, and the location concentration bound."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .models import AlphaModel, ContaminatedModel, sample_contaminated
from .norms import alpha_norm, conjugate_index, sphere_directions

# Constants of the depth concentration bound, from the halfspace VC argument
# combined with the binomial split of contaminated rows.
VC_CONSTANT = math.sqrt(1440.0 * math.pi * math.e / (1.0 - math.exp(-1.0)))
BOUND_C1 = 24.0 * math.sqrt(2.0) * math.sqrt(30.0 * math.pi * math.e / (1.0 - math.exp(-1.0)))
BOUND_C2 = (9.0 * math.sqrt(2.0) + 4.0 * math.sqrt(6.0)) / 4.0

_EXACT2D_JITTER = 1e-9
_REFINE_REL_STEP = 1e-6
_DEFAULT_MIDPOINT_CAP = 50_000


def population_hd(x, model: AlphaModel) -> float:
    """Population halfspace depth 1 - F(||x||_beta), beta conjugate to alpha."""
    beta = conjugate_index(model.alpha)
    return float(1.0 - model.marginal.cdf(alpha_norm(x, beta)))


def _as_sample(sample) -> np.ndarray:
    x = np.asarray(sample, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2 or x.shape[0] < 1:
        raise InputError(f"sample must be an n x d matrix, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise InputError("sample contains non-finite entries")
    return x


def sample_hd(x, sample, method: str = "approx", k: int = 512, seed: int = 0) -> float:
    """Sample halfspace depth min_u #{i: <X_i, u> <= <x, u>} / n.

    Ties (projections equal to the candidate's) count toward the halfspace.
    Methods: "exact1d" (d = 1, both signs), "exact2d" (d = 2, angular sweep
    over the critical directions, exact), "approx" (candidate-augmented
    direction set of size k plus antipodes; an upper bound on the true depth).
    """
    sample = _as_sample(sample)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    n, d = sample.shape
    if x.shape != (d,):
        raise InputError(f"point has dimension {x.shape}, sample has d={d}")
    if method == "exact1d":
        if d != 1:
            raise InputError("method exact1d requires d = 1")
        below = int(np.sum(sample[:, 0] <= x[0]))
        above = int(np.sum(sample[:, 0] >= x[0]))
        return min(below, above) / n
    if method == "exact2d":
        if d != 2:
            raise InputError("method exact2d requires d = 2")
        return _exact2d_count(x, sample) / n
    if method == "approx":
        if k < 1:
            raise InputError("method approx requires k >= 1")
        u = sphere_directions(d, k, "candidate-augmented", seed)
        u = np.concatenate([u, -u])
        counts = ((sample - x) @ u.T <= 0.0).sum(axis=0)
        return int(counts.min()) / n
    raise InputError(f"sample_hd: unknown method {method!r}")


def _exact2d_count(x: np.ndarray, sample: np.ndarray) -> int:
    """Minimal closed-halfplane count via the angular sweep.

    Each data point contributes two critical angles where it crosses the
    boundary; evaluating just off every critical angle on both sides visits
    every arc of the piecewise-constant count, hence the exact infimum.
    """
    diff = sample - x
    nonzero = (diff != 0.0).any(axis=1)
    n = sample.shape[0]
    if not nonzero.any():
        return n
    phi = np.arctan2(diff[nonzero, 1], diff[nonzero, 0])
    crit = np.concatenate([phi + math.pi / 2.0, phi - math.pi / 2.0])
    ang = np.concatenate([crit - _EXACT2D_JITTER, crit + _EXACT2D_JITTER])
    u = np.column_stack([np.cos(ang), np.sin(ang)])
    counts = (diff @ u.T <= 0.0).sum(axis=0)
    return int(counts.min())


class DepthEngine:
    """Batch evaluator of approximate sample depth over a fixed direction set.

    Projections of the sample are sorted once per direction; each candidate
    point then costs one binary search per direction. Counts are kept as
    integers so depth ties compare exactly.
    """

    def __init__(self, sample: np.ndarray, directions: np.ndarray):
        self.sample = sample
        self.dirs = directions
        self.n = sample.shape[0]
        self._sorted = np.sort(sample @ directions.T, axis=0)

    def counts(self, points: np.ndarray) -> np.ndarray:
        proj = np.atleast_2d(points) @ self.dirs.T
        out = np.empty(proj.shape, dtype=np.int64)
        for j in range(self.dirs.shape[0]):
            out[:, j] = np.searchsorted(self._sorted[:, j], proj[:, j], side="right")
        return out.min(axis=1)

    def depth(self, point) -> float:
        return int(self.counts(np.asarray(point, dtype=float)[None, :])[0]) / self.n


@dataclass
class MedianResult:
    """Outcome of the sample median search.

    point is the barycenter of all evaluated candidates that attained the
    maximum observed depth; achieved_depth is re-evaluated at that point and
    can fall below pool_max_depth when the barycenter leaves the deepest
    region, in which case at_pool_max is False.
    """
    point: np.ndarray
    achieved_depth: float
    candidates_evaluated: int
    pool_max_depth: float
    at_pool_max: bool


def tukey_median(sample, method: str = "approx", k: int = 64, multistarts: int = 8,
                 seed: int = 0, midpoint_cap: int = _DEFAULT_MIDPOINT_CAP) -> MedianResult:
    """Search for the deepest point of a sample.

    Candidate pool: the data points, pairwise midpoints (subsampled past
    midpoint_cap), the coordinatewise median, and the iterates of a
    coordinate pattern search started from the deepest pool points. Sample
    depth is piecewise constant, so derivative-free refinement is used.
    """
    sample = _as_sample(sample)
    n, d = sample.shape
    if d == 1:
        point = np.array([float(np.median(sample[:, 0]))])
        depth = sample_hd(point, sample, method="exact1d")
        return MedianResult(point, depth, n, depth, True)

    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(2,)))
    if method == "exact2d":
        if d != 2:
            raise InputError("tukey_median: method exact2d requires d = 2")
        count_of = lambda pts: np.array([_exact2d_count(p, sample) for p in np.atleast_2d(pts)])
    elif method == "approx":
        u = sphere_directions(d, k, "candidate-augmented", seed)
        engine = DepthEngine(sample, np.concatenate([u, -u]))
        count_of = engine.counts
    else:
        raise InputError(f"tukey_median: unsupported method {method!r}")

    pool = [sample, np.median(sample, axis=0)[None, :]]
    total_pairs = n * (n - 1) // 2
    if total_pairs > 0:
        m = min(midpoint_cap, total_pairs)
        if m == total_pairs:
            ii, jj = np.triu_indices(n, k=1)
        else:
            ii = rng.integers(0, n, size=m)
            jj = rng.integers(0, n, size=m)
        pool.append((sample[ii] + sample[jj]) / 2.0)
    cands = np.concatenate(pool)
    counts = count_of(cands)

    evaluated_pts = [cands]
    evaluated_cnt = [counts]
    order = np.argsort(-counts, kind="stable")[:multistarts]
    iqr = np.percentile(sample, 75, axis=0) - np.percentile(sample, 25, axis=0)
    h0 = np.maximum(iqr, 1e-12)
    floor = _REFINE_REL_STEP * max(float(h0.max()), 1e-12)
    for idx in order:
        p = cands[idx].copy()
        best = int(counts[idx])
        h = h0.copy()
        while h.max() > floor:
            moves = np.concatenate([p + np.diag(h), p - np.diag(h)])
            mc = count_of(moves)
            evaluated_pts.append(moves)
            evaluated_cnt.append(mc)
            j = int(np.argmax(mc))
            if mc[j] > best:
                best = int(mc[j])
                p = moves[j]
            else:
                h /= 2.0

    pts = np.concatenate(evaluated_pts)
    cnt = np.concatenate(evaluated_cnt)
    cmax = int(cnt.max())
    bary = pts[cnt == cmax].mean(axis=0)
    achieved = int(count_of(bary[None, :])[0])
    return MedianResult(
        point=bary,
        achieved_depth=achieved / n,
        candidates_evaluated=len(pts),
        pool_max_depth=cmax / n,
        at_pool_max=achieved == cmax,
    )


@dataclass(frozen=True)
class RateBound:
    """Right-hand side eps/(1-eps) + c1*sqrt(d/n) + c2*sqrt(log(1/delta)/n)."""
    epsilon: float
    d: int
    n: int
    delta: float
    c1: float
    c2: float
    value: float
    vc_constant: float


def min_admissible_n(delta: float) -> int:
    """Smallest n with sqrt(log(1/delta) / (2n)) < 1/3."""
    return int(math.floor(4.5 * math.log(1.0 / delta))) + 1


def location_bound_rhs(epsilon: float, d: int, n: int, delta: float) -> RateBound:
    """Concentration-bound value for the maximal-depth deviation.

    Valid for epsilon < 1/3, delta in (0, 1/2), and n large enough that
    sqrt(log(1/delta) / (2n)) < 1/3; the bound then holds with probability
    at least 1 - 2*delta.
    """
    if not (0.0 <= epsilon < 1.0 / 3.0):
        raise InputError(f"location_bound_rhs: epsilon must lie in [0, 1/3), got {epsilon}")
    if not (0.0 < delta < 0.5):
        raise InputError(f"location_bound_rhs: delta must lie in (0, 1/2), got {delta}")
    if d < 1 or n < 1:
        raise InputError("location_bound_rhs: need d >= 1 and n >= 1")
    if not math.sqrt(math.log(1.0 / delta) / (2.0 * n)) < 1.0 / 3.0:
        raise InputError(
            f"location_bound_rhs: side condition sqrt(log(1/delta)/(2n)) < 1/3 fails "
            f"for n={n}; minimal admissible n is {min_admissible_n(delta)}")
    log_term = math.log(1.0 / delta)
    value = (epsilon / (1.0 - epsilon)
             + BOUND_C1 * math.sqrt(d / n)
             + BOUND_C2 * math.sqrt(log_term / n))
    return RateBound(epsilon, d, n, delta, BOUND_C1, BOUND_C2, value, VC_CONSTANT)


def max_depth_deviation(model: AlphaModel, cm: ContaminatedModel, n: int, seed: int,
                        method: str = "approx", k: int = 64, multistarts: int = 8,
                        midpoint_cap: int = _DEFAULT_MIDPOINT_CAP) -> float:
    """Population-depth deviation D(0; P) - D(median_hat; P) on a contaminated draw.

    The population median of the clean alpha-symmetric model is the origin
    with depth 1/2, so the deviation equals F(||median_hat||_beta) - 1/2.
    """
    if cm.base is not model:
        raise InputError("max_depth_deviation: cm.base must be the supplied model")
    x, _ = sample_contaminated(cm, n, seed)
    med = tukey_median(x, method=method, k=k, multistarts=multistarts,
                       seed=seed, midpoint_cap=midpoint_cap)
    return population_hd(np.zeros(model.dim), model) - population_hd(med.point, model)
