"""Scatter halfspace depth (standard and alpha variants), scatter medians, pseudometric."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InputError, NumericalError
from .location import RateBound, location_bound_rhs, tukey_median, _as_sample
from .models import AlphaModel
from .norms import (alpha_norm_rows, candidate_directions, is_signed_permutation,
                    pd_sqrt, sphere_directions, validate_scatter)

_SEARCH_STARTS = 32
_SEARCH_STEP_TOL = 1e-8
_ISO_TOL = 1e-12
_SIGMA_GRID = 512


@dataclass(frozen=True)
class RatioRange:
    """Extremes of a direction ratio over the unit sphere, with witnesses."""
    inf_value: float
    sup_value: float
    argmin: np.ndarray
    argmax: np.ndarray


def _isotropic_level(sigma: np.ndarray) -> Optional[float]:
    """c with sigma = c^2 * I, or None when sigma is not isotropic."""
    d = sigma.shape[0]
    c2 = float(np.trace(sigma)) / d
    if np.abs(sigma - c2 * np.eye(d)).max() <= _ISO_TOL * max(c2, 1.0):
        return math.sqrt(c2)
    return None


def _sphere_search(f, d: int, seed: int, maximize: bool) -> tuple[float, np.ndarray]:
    """Multistart coordinate pattern search of a degree-0 homogeneous objective.

    f maps an (m, d) array of nonzero vectors to m values. Starts are the
    candidate directions (signed basis and sign vectors) padded with random
    unit vectors to 32; steps halve from 1 down to 1e-8.
    """
    rng = np.random.default_rng(seed)
    starts = candidate_directions(d, rng)
    if len(starts) < _SEARCH_STARTS:
        extra = rng.standard_normal((_SEARCH_STARTS - len(starts), d))
        extra /= np.linalg.norm(extra, axis=1, keepdims=True)
        starts = np.concatenate([starts, extra])
    sign = 1.0 if maximize else -1.0
    vals = sign * f(starts)
    best_idx = int(np.argmax(vals))
    best_x, best_v = starts[best_idx].copy(), float(vals[best_idx])
    order = np.argsort(-vals, kind="stable")[:_SEARCH_STARTS]
    eye = np.eye(d)
    for s in order:
        x = starts[s].copy()
        v = float(sign * f(x[None, :])[0])
        h = 1.0
        while h > _SEARCH_STEP_TOL:
            moves = np.concatenate([x + h * eye, x - h * eye])
            lengths = np.linalg.norm(moves, axis=1)
            ok = lengths > 0.0
            mv = np.full(2 * d, -np.inf)
            if ok.any():
                mv[ok] = sign * f(moves[ok])
            j = int(np.argmax(mv))
            if mv[j] > v:
                v = mv[j]
                x = moves[j] / lengths[j]
            else:
                h /= 2.0
        if v > best_v:
            best_v, best_x = v, x
    return sign * best_v, best_x


def _quad_form_rows(u: np.ndarray, sigma: np.ndarray) -> np.ndarray:
    return np.einsum("ij,jk,ik->i", u, sigma, u)


def ratio_range(sigma, alpha: float, seed: int = 0) -> RatioRange:
    """inf/sup over the unit sphere of sqrt(u' Sigma u) / ||u||_alpha.

    alpha = 2 reduces to the extreme singular values; isotropic matrices have
    closed-form extremes attained at the signed basis and sign vectors; other
    cases use the multistart pattern search.
    """
    s = validate_scatter(sigma)
    d = s.shape[0]
    if alpha == 2.0:
        lam, vec = np.linalg.eigh(s)
        return RatioRange(math.sqrt(lam[0]), math.sqrt(lam[-1]),
                          vec[:, 0].copy(), vec[:, -1].copy())
    c = _isotropic_level(s)
    if c is not None:
        e1 = np.zeros(d)
        e1[0] = 1.0
        signvec = np.full(d, 1.0 / math.sqrt(d))
        gap = c * d ** (0.5 - 1.0 / alpha)
        if alpha < 2.0:
            return RatioRange(gap, c, signvec, e1)
        return RatioRange(c, gap, e1, signvec)

    def f(u):
        return np.sqrt(_quad_form_rows(u, s)) / alpha_norm_rows(u, alpha)

    lo, alo = _sphere_search(f, d, seed, maximize=False)
    hi, ahi = _sphere_search(f, d, seed + 1, maximize=True)
    return RatioRange(lo, hi, alo, ahi)


def alpha_ratio_range(sigma, alpha: float, seed: int = 0) -> RatioRange:
    """inf/sup over the unit sphere of ||Sigma^(1/2) u||_alpha / ||u||_alpha.

    When Sigma^(1/2) is c times a signed permutation matrix the ratio is
    identically c (the map preserves the alpha-sphere up to scale).
    """
    s = validate_scatter(sigma)
    d = s.shape[0]
    if alpha == 2.0:
        return ratio_range(s, 2.0, seed)
    root = pd_sqrt(s)
    c = float(np.abs(root).max())
    if c > 0.0 and is_signed_permutation(root / c):
        e1 = np.zeros(d)
        e1[0] = 1.0
        return RatioRange(c, c, e1, e1.copy())

    def f(u):
        return alpha_norm_rows(u @ root, alpha) / alpha_norm_rows(u, alpha)

    lo, alo = _sphere_search(f, d, seed, maximize=False)
    hi, ahi = _sphere_search(f, d, seed + 1, maximize=True)
    return RatioRange(lo, hi, alo, ahi)


def population_shd(sigma, model: AlphaModel, seed: int = 0) -> float:
    """Population scatter halfspace depth 2*min(F(inf) - 1/2, 1 - F(sup))."""
    rr = ratio_range(sigma, model.alpha, seed)
    f = model.marginal.cdf
    return float(2.0 * min(f(rr.inf_value) - 0.5, 1.0 - f(rr.sup_value)))


def population_alpha_shd(sigma, model: AlphaModel, seed: int = 0) -> float:
    """Population alpha-scatter halfspace depth, slab widths in the alpha norm."""
    rr = alpha_ratio_range(sigma, model.alpha, seed)
    f = model.marginal.cdf
    return float(2.0 * min(f(rr.inf_value) - 0.5, 1.0 - f(rr.sup_value)))


def _slab_depth_counts(abs_proj: np.ndarray, widths: np.ndarray) -> int:
    """min over directions of min(#inside slab, #outside slab); closed on both sides."""
    inside = (abs_proj <= widths).sum(axis=0)
    outside = (abs_proj >= widths).sum(axis=0)
    return int(np.minimum(inside, outside).min())


def sample_shd(sigma, sample, center, dirs) -> float:
    """Sample scatter halfspace depth over the supplied direction set.

    Slab half-width in direction u is sqrt(u' Sigma u); projections tied with
    the slab boundary count toward both sides.
    """
    s = validate_scatter(sigma)
    sample = _as_sample(sample)
    dirs = np.atleast_2d(np.asarray(dirs, dtype=float))
    if dirs.size == 0:
        raise InputError("sample_shd: direction set is empty")
    center = np.asarray(center, dtype=float)
    widths = np.sqrt(_quad_form_rows(dirs, s))
    abs_proj = np.abs((sample - center) @ dirs.T)
    return _slab_depth_counts(abs_proj, widths) / sample.shape[0]


def sample_alpha_shd(sigma, sample, center, dirs, alpha: float) -> float:
    """Sample alpha-scatter depth; slab half-width is ||Sigma^(1/2) u||_alpha."""
    s = validate_scatter(sigma)
    sample = _as_sample(sample)
    dirs = np.atleast_2d(np.asarray(dirs, dtype=float))
    if dirs.size == 0:
        raise InputError("sample_alpha_shd: direction set is empty")
    center = np.asarray(center, dtype=float)
    widths = alpha_norm_rows(dirs @ pd_sqrt(s), alpha)
    abs_proj = np.abs((sample - center) @ dirs.T)
    return _slab_depth_counts(abs_proj, widths) / sample.shape[0]


def population_scatter_sigma(model: AlphaModel) -> float:
    """Isotropic level of the deepest scatter matrix: the root of
    F(sigma * d^(1/2 - 1/alpha)) - 1/2 = 1 - F(sigma), found by bisection."""
    f = model.marginal.cdf
    r = model.dim ** (0.5 - 1.0 / model.alpha)

    def g(t: float) -> float:
        return float(f(t * r) + f(t) - 1.5)

    lo = float(model.marginal.quantile(0.6))
    hi = float(model.marginal.quantile(0.999))
    for _ in range(60):
        if g(lo) <= 0.0:
            break
        lo /= 2.0
    else:
        raise NumericalError("population_scatter_sigma: could not bracket the root from below")
    for _ in range(60):
        if g(hi) >= 0.0:
            break
        hi *= 2.0
    else:
        raise NumericalError("population_scatter_sigma: could not bracket the root from above")
    # the 1e-12 relative target costs nothing extra, so run to machine precision
    while hi - lo > 4.0 * np.finfo(float).eps * max(1.0, abs(hi)):
        mid = 0.5 * (lo + hi)
        if g(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def population_alpha_scatter_sigma(model: AlphaModel) -> float:
    """Isotropic level of the deepest matrix under the alpha depth: F^(-1)(3/4)."""
    return float(model.marginal.quantile(0.75))


def scatter_bound_rhs(epsilon: float, d: int, n: int, delta: float) -> RateBound:
    """Concentration-bound value for scatter-depth deviation; same constants
    and side condition as the location bound."""
    return location_bound_rhs(epsilon, d, n, delta)


def scatter_pseudometric(a, b, alpha: float, seed: int = 0) -> float:
    """sup over the alpha-sphere of | ||A^(1/2)u||_alpha - ||B^(1/2)u||_alpha |.

    The alpha-sphere is reached by renormalizing Euclidean directions; the
    objective is degree-0 homogeneous so the pattern search runs in ambient
    coordinates. Symmetric and subadditive up to the search tolerance.
    """
    ra = pd_sqrt(validate_scatter(a, "a"))
    rb = pd_sqrt(validate_scatter(b, "b"))
    d = ra.shape[0]

    def f(u):
        un = alpha_norm_rows(u, alpha)
        return np.abs(alpha_norm_rows(u @ ra, alpha) - alpha_norm_rows(u @ rb, alpha)) / un

    hi, _ = _sphere_search(f, d, seed, maximize=True)
    # eigenvector starts of the difference catch near-degenerate gaps
    _, vec = np.linalg.eigh(a - b)
    extra = float(f(vec.T).max())
    return max(hi, extra)


@dataclass
class ScatterMedianResult:
    """Outcome of the sample scatter median search."""
    matrix: np.ndarray
    sigma: Optional[float]  # isotropic level; None for diagonal/full modes
    achieved_depth: float
    mode: str
    depth_kind: str
    center: np.ndarray


class _SlabEngine:
    """Sorted |projection| tables for fast slab depth over a fixed direction set."""

    def __init__(self, sample: np.ndarray, center: np.ndarray, dirs: np.ndarray):
        self.dirs = dirs
        self.n = sample.shape[0]
        self._sorted = np.sort(np.abs((sample - center) @ dirs.T), axis=0)

    def depth_count(self, widths: np.ndarray) -> int:
        best = self.n
        for j in range(self.dirs.shape[0]):
            col = self._sorted[:, j]
            ins = int(np.searchsorted(col, widths[j], side="right"))
            out = self.n - int(np.searchsorted(col, widths[j], side="left"))
            v = min(ins, out)
            if v < best:
                best = v
        return best

    def sigma_scan(self, sig: np.ndarray, wmul: np.ndarray) -> np.ndarray:
        """Depth counts for isotropic candidates sigma * wmul_j, vectorized in sigma."""
        m = self.dirs.shape[0]
        depth = np.full(sig.shape[0], self.n, dtype=np.int64)
        for j in range(m):
            col = self._sorted[:, j]
            w = sig * wmul[j]
            ins = np.searchsorted(col, w, side="right")
            out = self.n - np.searchsorted(col, w, side="left")
            np.minimum(depth, np.minimum(ins, out), out=depth)
        return depth

    def pooled_quantile(self, q: float) -> float:
        return float(np.quantile(self._sorted, q))


def _width_multipliers(dirs: np.ndarray, depth_kind: str, alpha: Optional[float]) -> np.ndarray:
    if depth_kind == "standard":
        return np.linalg.norm(dirs, axis=1)
    return alpha_norm_rows(dirs, alpha)


_BREAKPOINT_BUDGET = 65536


def _isotropic_search(engine: _SlabEngine, wmul: np.ndarray, grid_size: int):
    """Log-spaced scan plus bracket refinement of the maximizing sigma interval.

    The window spans the 0.55 and 0.999 quantiles of the signed pooled
    projections, i.e. the 0.10 and 0.998 quantiles of their absolute values,
    which brackets the balance point at the |projection| median. On small
    problems the exact count breakpoints |projection| / width join the grid,
    since highly symmetric samples can attain their maximum depth at a single
    sigma where boundary ties count toward both sides. Ties in the piecewise-
    constant depth resolve to the midpoint (log scale) of the maximizing
    interval.
    """
    lo = max(engine.pooled_quantile(0.10), 1e-300)
    hi = max(engine.pooled_quantile(0.998), lo * (1.0 + 1e-9))
    sig = np.geomspace(lo, hi, grid_size)
    if engine.n * engine.dirs.shape[0] <= _BREAKPOINT_BUDGET:
        breaks = (engine._sorted / wmul).ravel()
        breaks = breaks[(breaks > 0.0) & np.isfinite(breaks)]
        sig = np.unique(np.concatenate([sig, breaks]))
    depth = engine.sigma_scan(sig, wmul)
    cmax = int(depth.max())
    at_max = np.nonzero(depth == cmax)[0]
    i0 = int(at_max[0])
    i1 = i0
    for t in at_max[1:]:
        if t == i1 + 1:
            i1 = int(t)
        else:
            break

    def depth_of(s: float) -> int:
        return engine.depth_count(s * wmul)

    left = sig[i0]
    if i0 > 0:
        a, b = sig[i0 - 1], sig[i0]
        for _ in range(50):
            mid = math.sqrt(a * b)
            if depth_of(mid) == cmax:
                b = mid
            else:
                a = mid
        left = b
    right = sig[i1]
    if i1 + 1 < len(sig):
        a, b = sig[i1], sig[i1 + 1]
        for _ in range(50):
            mid = math.sqrt(a * b)
            if depth_of(mid) == cmax:
                a = mid
            else:
                b = mid
        right = a
    return math.sqrt(left * right), cmax


def _pattern_search_params(depth_of, theta0: np.ndarray, rng: np.random.Generator,
                           multistarts: int, step0: float = 0.5,
                           step_tol: float = 1e-6):
    """Coordinate pattern search of an integer-valued depth over parameters."""
    p = theta0.shape[0]
    starts = [theta0]
    for _ in range(max(0, multistarts - 1)):
        starts.append(theta0 + 0.5 * rng.standard_normal(p))
    best_theta, best_c = theta0.copy(), depth_of(theta0)
    eye = np.eye(p)
    for th0 in starts:
        th = th0.copy()
        c = depth_of(th)
        h = step0
        while h > step_tol:
            moves = np.concatenate([th + h * eye, th - h * eye])
            vals = [depth_of(m) for m in moves]
            j = int(np.argmax(vals))
            if vals[j] > c:
                c = vals[j]
                th = moves[j]
            else:
                h /= 2.0
        if c > best_c:
            best_c, best_theta = c, th
    return best_theta, best_c


def _chol_from_params(theta: np.ndarray, d: int) -> np.ndarray:
    l = np.zeros((d, d))
    idx = np.tril_indices(d)
    l[idx] = theta
    l[np.diag_indices(d)] = np.exp(np.diag(l))
    return l


def sample_scatter_median(sample, depth_kind: str = "standard",
                          alpha: Optional[float] = None, mode: str = "isotropic",
                          k: int = 32, seed: int = 0, multistarts: int = 8,
                          center=None, sigma_grid: int = _SIGMA_GRID,
                          median_k: int = 64,
                          midpoint_cap: int = 2048) -> ScatterMedianResult:
    """Maximize the sample scatter depth over a parameterized matrix family.

    Modes: "isotropic" scans log sigma and refines the maximizing bracket;
    "diagonal" pattern-searches the log-diagonal; "full" pattern-searches the
    log-Cholesky factor. The location center is the Tukey median of the
    sample, frozen before the scatter search (an explicit center overrides).
    """
    sample = _as_sample(sample)
    n, d = sample.shape
    if depth_kind not in ("standard", "alpha"):
        raise InputError(f"sample_scatter_median: unknown depth_kind {depth_kind!r}")
    if depth_kind == "alpha":
        if alpha is None or not (alpha > 0.0):
            raise InputError("sample_scatter_median: depth_kind='alpha' needs alpha > 0")
    if mode not in ("isotropic", "diagonal", "full"):
        raise InputError(f"sample_scatter_median: unknown mode {mode!r}")
    if mode == "full" and n < d + 1:
        raise InputError(f"sample_scatter_median: full mode needs n >= d+1, got n={n}, d={d}")

    if center is None:
        center = tukey_median(sample, k=median_k, seed=seed,
                              midpoint_cap=midpoint_cap).point
    center = np.asarray(center, dtype=float)
    dirs = sphere_directions(d, k, "candidate-augmented", seed)
    engine = _SlabEngine(sample, center, dirs)
    wmul = _width_multipliers(dirs, depth_kind, alpha)

    sigma_iso, count_iso = _isotropic_search(engine, wmul, sigma_grid)
    if mode == "isotropic":
        matrix = sigma_iso ** 2 * np.eye(d)
        return ScatterMedianResult(matrix, sigma_iso, count_iso / n, mode,
                                   depth_kind, center)

    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(3,)))
    if mode == "diagonal":
        def depth_of(theta):
            scales = np.exp(theta)
            if depth_kind == "standard":
                w = np.sqrt((dirs ** 2 * scales ** 2).sum(axis=1))
            else:
                w = (np.abs(dirs * scales) ** alpha).sum(axis=1) ** (1.0 / alpha)
            return engine.depth_count(w)

        theta0 = np.full(d, math.log(sigma_iso))
        theta, count = _pattern_search_params(depth_of, theta0, rng, multistarts)
        matrix = np.diag(np.exp(2.0 * theta))
        return ScatterMedianResult(matrix, None, count / n, mode, depth_kind, center)

    # full mode: log-Cholesky keeps every iterate positive definite
    def depth_of(theta):
        l = _chol_from_params(theta, d)
        if depth_kind == "standard":
            w = np.linalg.norm(dirs @ l, axis=1)
        else:
            w = alpha_norm_rows(dirs @ pd_sqrt(l @ l.T), alpha)
        return engine.depth_count(w)

    theta0 = np.zeros(d * (d + 1) // 2)
    diag_pos = np.cumsum(np.arange(1, d + 1)) - 1
    theta0[diag_pos] = math.log(sigma_iso)
    theta, count = _pattern_search_params(depth_of, theta0, rng, multistarts)
    l = _chol_from_params(theta, d)
    matrix = l @ l.T
    return ScatterMedianResult((matrix + matrix.T) / 2.0, None, count / n, mode,
                               depth_kind, center)
