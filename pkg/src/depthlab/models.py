"""Alpha-symmetric model constructors, samplers, contamination, and growth certifiers."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
from scipy.special import ndtr, ndtri

from . import stable
from .errors import InputError
from .norms import alpha_norm

#: Two-sample Kolmogorov-Smirnov coefficient for the asymptotic 1% level.
KS_COEFF_1PCT = 1.63

_GROWTH_GRID = 10_000


class MarginalLaw:
    """Symmetric univariate law of a model's first coordinate.

    Families: "gaussian" (N(0, scale^2)), "cauchy" (scale * standard Cauchy),
    and "stable" with radial index alpha in (0, 2] under the exp(-|t|^alpha)
    convention. Stable alpha = 1 is the Cauchy closed form, alpha = 2 the
    Gaussian with variance 2 * scale^2; other alpha use a tabulated CDF built
    eagerly at construction.
    """

    def __init__(self, family: str, alpha: Optional[float] = None, scale: float = 1.0):
        if scale <= 0.0 or not math.isfinite(scale):
            raise InputError(f"MarginalLaw: scale must be positive, got {scale}")
        self.family = family
        self.scale = float(scale)
        self._table = None
        if family == "gaussian":
            self.alpha = 2.0
        elif family == "cauchy":
            self.alpha = 1.0
        elif family == "stable":
            if alpha is None or not (0.0 < alpha <= 2.0):
                raise InputError(f"MarginalLaw: stable alpha must be in (0, 2], got {alpha}")
            self.alpha = float(alpha)
            if self.alpha not in (1.0, 2.0):
                self._table = stable.cdf_table(self.alpha)
        else:
            raise InputError(f"MarginalLaw: unknown family {family!r}")

    @property
    def name(self) -> str:
        base = self.family if self.family != "stable" else f"stable({self.alpha:g})"
        return base if self.scale == 1.0 else f"{base}*{self.scale:g}"

    def cdf(self, t):
        t = np.asarray(t, dtype=float) / self.scale
        if self.family == "gaussian":
            out = ndtr(t)
        elif self.family == "cauchy" or (self.family == "stable" and self.alpha == 1.0):
            out = 0.5 + np.arctan(t) / math.pi
        elif self.family == "stable" and self.alpha == 2.0:
            out = ndtr(t / math.sqrt(2.0))
        else:
            out = self._table.cdf(t)
        return out if np.ndim(out) else float(out)

    def quantile(self, p):
        p = np.asarray(p, dtype=float)
        if np.any((p <= 0.0) | (p >= 1.0)):
            raise InputError("quantile: p must lie in (0, 1)")
        if self.family == "gaussian":
            out = ndtri(p)
        elif self.family == "cauchy" or (self.family == "stable" and self.alpha == 1.0):
            out = np.tan(math.pi * (p - 0.5))
        elif self.family == "stable" and self.alpha == 2.0:
            out = math.sqrt(2.0) * ndtri(p)
        else:
            out = self._table.quantile(p)
        out = self.scale * out
        return out if np.ndim(out) else float(out)

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        if self.family == "gaussian":
            draws = rng.standard_normal(size)
        elif self.family == "cauchy":
            draws = np.tan(rng.uniform(-math.pi / 2, math.pi / 2, size))
        else:
            draws = stable.cms_sample(rng, self.alpha, size)
        return self.scale * draws

    def scaled(self, c: float) -> "MarginalLaw":
        return MarginalLaw(self.family, self.alpha if self.family == "stable" else None,
                           self.scale * c)

    def __repr__(self):
        return f"MarginalLaw({self.name})"


@dataclass
class AlphaModel:
    """An alpha-symmetric distribution on R^d with i.i.d. marginal coordinates.

    Every projection <X, u> is distributed as alpha_norm(u, alpha) * X_1,
    which is what all population depth formulas in this package rely on.
    """
    alpha: float
    dim: int
    marginal: MarginalLaw
    name: str

    def sample(self, n: int, seed: int) -> np.ndarray:
        return self.sample_rng(np.random.default_rng(seed), n)

    def sample_rng(self, rng: np.random.Generator, n: int) -> np.ndarray:
        if n < 1:
            raise InputError(f"sample: n must be >= 1, got {n}")
        return self.marginal.sample(rng, (n, self.dim))


def make_gaussian_spherical(d: int, scale: float = 1.0) -> AlphaModel:
    """Standard spherical Gaussian on R^d (alpha = 2, N(0, scale^2) marginals)."""
    if d < 2:
        raise InputError(f"make_gaussian_spherical: need d >= 2, got {d}")
    m = MarginalLaw("gaussian", scale=scale)
    return AlphaModel(2.0, int(d), m, f"gaussian(d={d})" + ("" if scale == 1.0 else f"*{scale:g}"))


def make_independent_stable(alpha: float, d: int, scale: float = 1.0) -> AlphaModel:
    """Model with i.i.d. symmetric stable coordinates, exp(-|t|^alpha) convention.

    alpha = 1 gives independent Cauchy coordinates; alpha = 2 gives a Gaussian
    with per-coordinate variance 2 * scale^2 (which differs from
    make_gaussian_spherical by a factor sqrt(2); the two are never mixed
    silently). Radial indices above 2 are rejected: such laws exist only in
    the plane and are outside sampling scope.
    """
    if not (0.0 < alpha <= 2.0):
        raise InputError(f"make_independent_stable: alpha must be in (0, 2], got {alpha}")
    if d < 2:
        raise InputError(f"make_independent_stable: need d >= 2, got {d}")
    fam = "cauchy" if alpha == 1.0 else "stable"
    m = MarginalLaw(fam, alpha if fam == "stable" else None, scale=scale)
    label = "cauchy" if alpha == 1.0 else f"stable({alpha:g})"
    return AlphaModel(float(alpha), int(d), m,
                      f"{label}(d={d})" + ("" if scale == 1.0 else f"*{scale:g}"))


class PointMassContaminant:
    """Contaminating distribution concentrated at a single point."""

    def __init__(self, point):
        self.point = np.asarray(point, dtype=float)

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return np.tile(self.point, (n, 1))

    def describe(self) -> dict:
        return {"family": "point_mass", "point": [float(v) for v in self.point]}


class ModelContaminant:
    """Contaminating distribution given by another model, optionally shifted."""

    def __init__(self, model: AlphaModel, shift=None):
        self.model = model
        self.shift = None if shift is None else np.asarray(shift, dtype=float)

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        x = self.model.sample_rng(rng, n)
        return x if self.shift is None else x + self.shift

    def describe(self) -> dict:
        out = {"family": self.model.name}
        if self.shift is not None:
            out["shift"] = [float(v) for v in self.shift]
        return out


@dataclass
class ContaminatedModel:
    """Huber mixture (1 - eps) * base + eps * Q with eps < 1/3."""
    base: AlphaModel
    contaminant: Union[PointMassContaminant, ModelContaminant]
    epsilon: float

    def __post_init__(self):
        if not (0.0 <= self.epsilon < 1.0 / 3.0):
            raise InputError(f"ContaminatedModel: epsilon must lie in [0, 1/3), "
                             f"got {self.epsilon}")


def default_contaminant(model: AlphaModel) -> PointMassContaminant:
    """Point mass at (10 * scale) * (1, ..., 1), the far-outlier stress case."""
    off = 10.0 * model.marginal.scale
    return PointMassContaminant(np.full(model.dim, off))


def sample_contaminated(cm: ContaminatedModel, n: int, seed: int):
    """Draw n rows, each independently from Q with probability eps, else from base.

    Returns (sample, mask) where mask flags the contaminated rows; the number
    of flagged rows is Binomial(n, eps) marginally.
    """
    if n < 1:
        raise InputError(f"sample_contaminated: n must be >= 1, got {n}")
    rng = np.random.default_rng(seed)
    mask = rng.random(n) < cm.epsilon
    x = cm.base.sample_rng(rng, n)
    k = int(mask.sum())
    if k:
        x[mask] = cm.contaminant.sample(rng, k)
    return x, mask


def ks_two_sample(a, b) -> float:
    """Two-sample Kolmogorov-Smirnov statistic sup |F_a - F_b|."""
    a = np.sort(np.asarray(a, dtype=float))
    b = np.sort(np.asarray(b, dtype=float))
    pooled = np.concatenate([a, b])
    ca = np.searchsorted(a, pooled, side="right") / len(a)
    cb = np.searchsorted(b, pooled, side="right") / len(b)
    return float(np.abs(ca - cb).max())


def ks_threshold(n: int, m: Optional[int] = None) -> float:
    """Asymptotic 1% critical value for the two-sample KS statistic."""
    m = n if m is None else m
    return KS_COEFF_1PCT * math.sqrt((n + m) / (n * m))


@dataclass(frozen=True)
class ProjectionTestResult:
    statistic: float
    threshold: float
    passed: bool


def projection_law_test(model: AlphaModel, u, n: int, seed: int) -> ProjectionTestResult:
    """Check <X, u> =d= alpha_norm(u, alpha) * X_1 by a two-sample KS test.

    Compares n projections of fresh model draws against n scaled independent
    marginal draws at the asymptotic 1% level.
    """
    if n < 1000:
        raise InputError("projection_law_test: need n >= 1000")
    u = np.asarray(u, dtype=float)
    proj = model.sample(n, seed) @ u
    rng2 = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(1,)))
    ref = alpha_norm(u, model.alpha) * model.marginal.sample(rng2, n)
    stat = ks_two_sample(proj, ref)
    thr = ks_threshold(n)
    return ProjectionTestResult(stat, thr, stat <= thr)


@dataclass(frozen=True)
class GrowthCertificate:
    """Result of certifying a CDF growth condition A2/A3/A4.

    witnessed_inf is the grid infimum of the variant's difference quotient;
    holds requires both witnessed_inf >= kappa and the variant's range
    constraint on gamma * kappa relative to epsilon.
    """
    variant: str
    gamma: float
    kappa: float
    epsilon: float
    sigma: Optional[float]
    witnessed_inf: float
    range_ok: bool
    holds: bool
    reason: Optional[str] = None


def check_growth_condition(marginal: MarginalLaw, variant: str, gamma: float,
                           kappa: float, sigma: Optional[float] = None,
                           epsilon: float = 0.0) -> GrowthCertificate:
    """Certify that the marginal CDF is not too flat near the variant's center.

    A2 bounds inf over 0 < |t| < gamma of |F(t) - F(0)| / |t|;
    A3 uses the window around sigma^2 with quotient in F(sqrt(t));
    A4 the window around sigma. The infimum is evaluated on a geometric grid
    of 10^4 points accumulating at the window center, since the quotient's
    infimum can sit at either end of the window.
    """
    if variant not in ("A2", "A3", "A4"):
        raise InputError(f"check_growth_condition: unknown variant {variant!r}")
    if gamma <= 0.0 or kappa <= 0.0:
        raise InputError("check_growth_condition: gamma and kappa must be positive")
    if variant in ("A3", "A4") and sigma is None:
        raise InputError(f"check_growth_condition: {variant} requires sigma")
    if not (0.0 <= epsilon < 1.0 / 3.0):
        raise InputError("check_growth_condition: epsilon must lie in [0, 1/3)")

    gk = gamma * kappa
    range_ok, reason = True, None
    if variant == "A2":
        if not gk < 0.5:
            range_ok, reason = False, "range: gamma*kappa must be < 1/2"
        elif not epsilon / (1.0 - epsilon) < gk:
            range_ok, reason = False, "range: epsilon/(1-epsilon) must be < gamma*kappa"
    else:
        if not gk <= 0.25:
            range_ok, reason = False, "range: gamma*kappa must be <= 1/4"
        elif not epsilon / (2.0 * (1.0 - epsilon)) < gk:
            range_ok, reason = False, "range: epsilon/(2(1-epsilon)) must be < gamma*kappa"

    offsets = gamma * np.geomspace(1e-10, 1.0, _GROWTH_GRID // 2)
    if variant == "A2":
        t = offsets
        quot = np.abs(marginal.cdf(t) - 0.5) / t
    elif variant == "A3":
        center = sigma * sigma
        t = np.concatenate([center - offsets, center + offsets])
        t = t[t > 0.0]
        quot = np.abs(marginal.cdf(np.sqrt(t)) - marginal.cdf(sigma)) / np.abs(t - center)
    else:
        t = np.concatenate([sigma - offsets, sigma + offsets])
        quot = np.abs(marginal.cdf(t) - marginal.cdf(sigma)) / np.abs(t - sigma)
    witnessed = float(quot.min())
    holds = range_ok and witnessed >= kappa
    if range_ok and not holds:
        reason = "witnessed infimum below kappa"
    return GrowthCertificate(variant, gamma, kappa, epsilon, sigma,
                             witnessed, range_ok, holds, reason)


def parse_model_spec(spec: str) -> AlphaModel:
    """Build a model from the CLI mini-grammar family:key=value,...

    Examples: "cauchy:d=2", "gaussian:d=3", "stable:alpha=1.5,d=3,scale=2".
    """
    head, _, rest = spec.partition(":")
    family = head.strip().lower()
    params = {}
    if rest:
        for item in rest.split(","):
            key, eq, val = item.partition("=")
            if not eq:
                raise InputError(f"model spec: expected key=value, got {item!r}")
            params[key.strip().lower()] = val.strip()
    return model_from_dict({"family": family, **params})


def model_from_dict(d: dict) -> AlphaModel:
    """Build a model from TOML-style fields: family, alpha, dim/d, scale."""
    d = dict(d)
    family = str(d.pop("family", "")).lower()
    dim = d.pop("dim", d.pop("d", None))
    if dim is None:
        raise InputError("model spec: missing dimension (d or dim)")
    dim = _as_int(dim, "dim")
    scale = _as_float(d.pop("scale", 1.0), "scale")
    alpha = d.pop("alpha", None)
    if d:
        raise InputError(f"model spec: unknown keys {sorted(d)}")
    if family == "gaussian":
        if alpha is not None and _as_float(alpha, "alpha") != 2.0:
            raise InputError("model spec: gaussian has alpha fixed at 2")
        return make_gaussian_spherical(dim, scale)
    if family == "cauchy":
        if alpha is not None and _as_float(alpha, "alpha") != 1.0:
            raise InputError("model spec: cauchy has alpha fixed at 1")
        return make_independent_stable(1.0, dim, scale)
    if family == "stable":
        if alpha is None:
            raise InputError("model spec: stable requires alpha")
        return make_independent_stable(_as_float(alpha, "alpha"), dim, scale)
    raise InputError(f"model spec: unknown family {family!r}")


def contaminant_from_dict(d: Optional[dict], base: AlphaModel):
    """Build a contaminant from TOML-style fields; None gives the default point mass."""
    if d is None:
        return default_contaminant(base)
    d = dict(d)
    family = str(d.pop("family", "point_mass")).lower()
    if family == "point_mass":
        if "point" in d:
            point = np.asarray(d.pop("point"), dtype=float)
            if point.shape != (base.dim,):
                raise InputError(f"contaminant point must have length {base.dim}")
        else:
            off = _as_float(d.pop("offset", 10.0 * base.marginal.scale), "offset")
            point = np.full(base.dim, off)
        if d:
            raise InputError(f"contaminant spec: unknown keys {sorted(d)}")
        return PointMassContaminant(point)
    shift = d.pop("shift", None)
    model = model_from_dict({"family": family, "dim": base.dim, **d})
    return ModelContaminant(model, shift)


def load_model_toml(path):
    """Read a model specification file.

    Top-level fields name the model (family, alpha, dim, scale); an optional
    [contaminant] table with an epsilon field yields a ContaminatedModel.
    Returns the model, or (model, contaminated) when a contaminant is present.
    """
    try:
        import tomllib
    except ImportError:
        import tomli as tomllib
    with open(path, "rb") as fh:
        raw = tomllib.load(fh)
    cont_spec = raw.pop("contaminant", None)
    model = model_from_dict(raw)
    if cont_spec is None:
        return model
    cont_spec = dict(cont_spec)
    epsilon = _as_float(cont_spec.pop("epsilon", 0.0), "epsilon")
    cont = contaminant_from_dict(cont_spec or None, model)
    return model, ContaminatedModel(model, cont, epsilon)


def _as_int(v, name: str) -> int:
    try:
        i = int(v)
    except (TypeError, ValueError):
        raise InputError(f"model spec: {name} must be an integer, got {v!r}") from None
    return i


def _as_float(v, name: str) -> float:
    try:
        f = float(v)
    except (TypeError, ValueError):
        raise InputError(f"model spec: {name} must be a number, got {v!r}") from None
    return f
