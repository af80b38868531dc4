"""Alpha-norms, conjugate indices, PD matrix helpers, and unit-sphere directions."""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product
from typing import Optional

import numpy as np

from .errors import InputError

#: Sentinel for the sup-norm index. All norm code branches on it explicitly
#: instead of approximating with a large float.
ALPHA_INF = math.inf

# Sign-vector candidates are enumerated only up to this dimension (2^d vectors);
# above it a seeded random subset is used instead.
_SIGN_ENUM_MAX_DIM = 12


def alpha_norm(x, alpha: float) -> float:
    """(sum |x_i|^alpha)^(1/alpha) for finite alpha, max|x_i| for alpha = inf.

    For alpha < 1 this is not subadditive; it is still the radial function
    used throughout this package.
    """
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise InputError("alpha_norm: input vector has non-finite entries")
    if alpha == ALPHA_INF:
        return float(np.max(np.abs(x))) if x.size else 0.0
    if not (alpha > 0):
        raise InputError(f"alpha_norm: alpha must be positive or inf, got {alpha}")
    a = np.abs(x)
    m = a.max() if a.size else 0.0
    if m == 0.0:
        return 0.0
    # scale by the max to dodge overflow/underflow in the powers
    return float(m * np.sum((a / m) ** alpha) ** (1.0 / alpha))


def alpha_norm_rows(x: np.ndarray, alpha: float) -> np.ndarray:
    """Row-wise alpha_norm of a 2-D array."""
    x = np.asarray(x, dtype=float)
    if alpha == ALPHA_INF:
        return np.abs(x).max(axis=1)
    return (np.abs(x) ** alpha).sum(axis=1) ** (1.0 / alpha)


def conjugate_index(alpha: float) -> float:
    """Conjugate index: alpha/(alpha-1) for alpha > 1, inf for 0 < alpha <= 1."""
    if alpha == ALPHA_INF:
        return 1.0
    if not (alpha > 0):
        raise InputError(f"conjugate_index: alpha must be positive, got {alpha}")
    if alpha > 1.0:
        return alpha / (alpha - 1.0)
    return ALPHA_INF


def validate_scatter(sigma, name: str = "sigma") -> np.ndarray:
    """Check symmetry and positive definiteness of a candidate scatter matrix.

    Returns the validated matrix as a float array. Eigenvalues at or below
    1e-12 * trace are treated as numerically non-PD.
    """
    s = np.asarray(sigma, dtype=float)
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise InputError(f"{name}: expected a square matrix, got shape {s.shape}")
    if not np.all(np.isfinite(s)):
        raise InputError(f"{name}: non-finite entries")
    scale = np.abs(s).max()
    if scale == 0.0:
        raise InputError(f"{name}: matrix is zero, not positive definite")
    if np.abs(s - s.T).max() > 1e-12 * scale:
        raise InputError(f"{name}: matrix is not symmetric")
    lam = np.linalg.eigvalsh(s)
    if lam[0] <= 1e-12 * np.trace(s):
        raise InputError(f"{name}: matrix is not positive definite "
                         f"(min eigenvalue {lam[0]:.3e})")
    return s


def pd_sqrt(sigma) -> np.ndarray:
    """Unique symmetric positive definite square root, via eigendecomposition."""
    s = validate_scatter(sigma)
    lam, v = np.linalg.eigh(s)
    r = (v * np.sqrt(lam)) @ v.T
    return (r + r.T) / 2.0


def is_signed_permutation(a) -> bool:
    """True iff the matrix has exactly one nonzero entry per row and column
    and every nonzero entry is +-1 (within 1e-12 of the rounded integer)."""
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or not np.all(np.isfinite(a)):
        return False
    r = np.rint(a)
    if np.abs(a - r).max() > 1e-12:
        return False
    nz = r != 0.0
    if not (np.all(nz.sum(axis=0) == 1) and np.all(nz.sum(axis=1) == 1)):
        return False
    return bool(np.all(np.abs(r[nz]) == 1.0))


@dataclass(frozen=True)
class SignQuadraticResult:
    """Outcome of checking v'Av >= 0 over all sign vectors v in {-1,1}^d."""
    all_nonnegative: bool
    counterexample: Optional[np.ndarray]  # a v with v'Av < 0, if one exists
    min_value: float
    lemma_violated: bool  # all_nonnegative while A != 0; must never happen


def zero_matrix_lemma_check(a) -> SignQuadraticResult:
    """Brute-force check of the zero-matrix property for symmetric matrices
    with zero diagonal: if v'Av >= 0 for all sign vectors v, then A = 0.

    Enumerates all 2^d sign vectors (d <= 20). Returns the minimizing sign
    vector as a counterexample whenever some v'Av < 0.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InputError("zero_matrix_lemma_check: expected a square matrix")
    d = a.shape[0]
    if d > 20:
        raise InputError("zero_matrix_lemma_check: d > 20 is too large to enumerate")
    scale = max(np.abs(a).max(), 1.0)
    if np.abs(a - a.T).max() > 1e-12 * scale:
        raise InputError("zero_matrix_lemma_check: matrix must be symmetric")
    if np.abs(np.diag(a)).max() > 1e-12 * scale:
        raise InputError("zero_matrix_lemma_check: diagonal must be zero")
    v = np.array(list(product((-1.0, 1.0), repeat=d)))
    quad = np.einsum("ij,jk,ik->i", v, a, v)
    imin = int(np.argmin(quad))
    vmin = float(quad[imin])
    nonneg = vmin >= 0.0
    return SignQuadraticResult(
        all_nonnegative=nonneg,
        counterexample=None if nonneg else v[imin].copy(),
        min_value=vmin,
        lemma_violated=nonneg and np.abs(a).max() > 0.0,
    )


def _sign_vectors(d: int, rng: np.random.Generator) -> np.ndarray:
    if d <= _SIGN_ENUM_MAX_DIM:
        return np.array(list(product((-1.0, 1.0), repeat=d)))
    draws = rng.integers(0, 2, size=(2 ** _SIGN_ENUM_MAX_DIM, d)) * 2.0 - 1.0
    return draws


def candidate_directions(d: int, rng: Optional[np.random.Generator] = None) -> np.ndarray:
    """Signed basis vectors +-e_i and normalized sign vectors (+-1,...,+-1)/sqrt(d).

    These are the extremal directions of the Euclidean-to-alpha norm ratio for
    isotropic scatter matrices, so every sphere search seeds from them.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    basis = np.concatenate([np.eye(d), -np.eye(d)])
    signs = _sign_vectors(d, rng) / math.sqrt(d)
    return np.concatenate([basis, signs])


def sphere_directions(d: int, k: int, scheme: str = "uniform-random",
                      seed: int = 0) -> np.ndarray:
    """k unit vectors in R^d, rows of the returned (k, d) array.

    Schemes:
      uniform-random      i.i.d. uniform on the sphere (normalized Gaussians)
      antipodal-pairs     random directions interleaved with their negatives
      candidate-augmented signed basis vectors and normalized sign vectors
                          first, random fill after
    Deterministic for a given (seed, scheme, k).
    """
    if d < 1 or k < 1:
        raise InputError("sphere_directions: need d >= 1 and k >= 1")
    rng = np.random.default_rng(seed)
    if scheme == "uniform-random":
        u = _random_unit(rng, k, d)
    elif scheme == "antipodal-pairs":
        half = _random_unit(rng, (k + 1) // 2, d)
        u = np.empty((2 * half.shape[0], d))
        u[0::2] = half
        u[1::2] = -half
        u = u[:k]
    elif scheme == "candidate-augmented":
        cand = candidate_directions(d, rng)
        if len(cand) < k:
            u = np.concatenate([cand, _random_unit(rng, k - len(cand), d)])
        else:
            u = cand[:k]
    else:
        raise InputError(f"sphere_directions: unknown scheme {scheme!r}")
    return u


def _random_unit(rng: np.random.Generator, k: int, d: int) -> np.ndarray:
    g = rng.standard_normal((k, d))
    norms = np.linalg.norm(g, axis=1, keepdims=True)
    # a zero draw has probability zero; guard anyway
    norms[norms == 0.0] = 1.0
    return g / norms
