import math

import numpy as np
import pytest
from scipy.special import ndtr

from depthlab import (BOUND_C1, BOUND_C2, DepthEngine, InputError,
                      ContaminatedModel, PointMassContaminant,
                      location_bound_rhs, make_gaussian_spherical,
                      make_independent_stable, max_depth_deviation,
                      min_admissible_n, population_hd, sample_hd,
                      sphere_directions, tukey_median)

CROSS = np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]])


def _bisect_quantile(cdf, p, lo=-50.0, hi=50.0):
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if cdf(mid) < p:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _oracle_depth_2d(x, sample, jitter=1e-7):
    """Independent check: enumerate directions normal to x - X_i with +- jitter."""
    diff = sample - x
    nz = (diff != 0.0).any(axis=1)
    n = len(sample)
    if not nz.any():
        return 1.0
    best = n
    for dx, dy in diff[nz]:
        base = math.atan2(dy, dx)
        for b in (base + math.pi / 2.0, base - math.pi / 2.0):
            for ang in (b - jitter, b + jitter):
                u = np.array([math.cos(ang), math.sin(ang)])
                best = min(best, int((diff @ u <= 0.0).sum()))
    return best / n


class TestPopulationDepth:
    def test_center_depth_is_half(self):
        assert population_hd([0.0, 0.0], make_independent_stable(1.0, 2)) == 0.5
        assert population_hd([0.0] * 3, make_gaussian_spherical(3)) == 0.5

    def test_cauchy_closed_form(self):
        c = make_independent_stable(1.0, 2)
        # beta = inf, so the norm is max|x_i| = 1 and depth = 1 - F(1) = 1/4
        assert population_hd([1.0, 1.0], c) == pytest.approx(0.25, abs=1e-12)

    def test_gaussian_quarter_depth(self):
        g = make_gaussian_spherical(3)
        q = _bisect_quantile(lambda t: float(ndtr(t)), 0.75)
        assert population_hd([q, 0.0, 0.0], g) == pytest.approx(0.25, abs=1e-9)

    def test_upper_bound_and_uniqueness(self, rng):
        g = make_gaussian_spherical(2)
        for _ in range(50):
            x = rng.standard_normal(2)
            d = population_hd(x, g)
            assert d <= 0.5
            if np.linalg.norm(x) > 1e-3:
                assert d < 0.5


class TestSampleDepth:
    def test_exact1d(self):
        s = np.array([[1.0], [2.0], [3.0]])
        assert sample_hd([2.0], s, method="exact1d") == pytest.approx(2 / 3)
        assert sample_hd([0.0], s, method="exact1d") == 0.0
        assert sample_hd([1.0], s, method="exact1d") == pytest.approx(1 / 3)

    def test_outside_hull_is_zero(self):
        assert sample_hd([9e9, 9e9], CROSS, method="exact2d") == 0.0

    def test_cross_center(self):
        assert sample_hd([0.0, 0.0], CROSS, method="exact2d") == 0.5

    def test_tie_convention_counts_boundary(self):
        s = np.array([[0.0, 0.0], [0.0, 0.0], [1.0, 1.0]])
        assert sample_hd([0.0, 0.0], s, method="exact2d") == pytest.approx(2 / 3)

    def test_exact2d_matches_oracle(self, rng):
        for trial in range(100):
            n = int(rng.integers(1, 51))
            s = rng.standard_normal((n, 2))
            if trial % 4 == 0 and n > 1:
                s[int(rng.integers(0, n))] = s[0]
            x = s[0] if trial % 5 == 0 else rng.standard_normal(2) * 2.0
            assert sample_hd(x, s, method="exact2d") == _oracle_depth_2d(x, s)

    def test_depth_values_are_count_multiples(self, rng):
        for _ in range(30):
            n = int(rng.integers(1, 30))
            s = rng.standard_normal((n, 2))
            x = rng.standard_normal(2)
            for method, kw in (("exact2d", {}), ("approx", {"k": 16})):
                v = sample_hd(x, s, method=method, **kw) * n
                assert v == round(v)

    def test_approx_upper_bounds_exact(self, rng):
        for _ in range(50):
            n = int(rng.integers(5, 40))
            s = rng.standard_normal((n, 2))
            x = rng.standard_normal(2)
            exact = sample_hd(x, s, method="exact2d")
            approx = sample_hd(x, s, method="approx", k=32, seed=1)
            assert approx >= exact - 1e-12

    def test_monotone_direction_refinement(self, rng):
        s = rng.standard_normal((200, 3))
        u1 = sphere_directions(3, 16, "candidate-augmented", 0)
        u2 = np.concatenate([u1, sphere_directions(3, 16, "uniform-random", 9)])
        e1 = DepthEngine(s, u1)
        e2 = DepthEngine(s, u2)
        pts = rng.standard_normal((20, 3)) * 0.5
        assert np.all(e2.counts(pts) <= e1.counts(pts))

    def test_method_validation(self):
        with pytest.raises(InputError):
            sample_hd([0.0, 0.0], CROSS, method="exact1d")
        with pytest.raises(InputError):
            sample_hd([1.0], np.array([[1.0]]), method="exact2d")
        with pytest.raises(InputError):
            sample_hd([0.0, 0.0], CROSS, method="approx", k=0)
        with pytest.raises(InputError):
            sample_hd([0.0], CROSS, method="exact2d")


class TestTukeyMedian:
    def test_univariate(self):
        res = tukey_median(np.array([[1.0], [2.0], [5.0]]))
        assert res.point[0] == 2.0
        assert res.achieved_depth == pytest.approx(2 / 3)

    def test_cross(self):
        res = tukey_median(CROSS, seed=0)
        assert np.allclose(res.point, [0.0, 0.0], atol=1e-12)
        assert res.achieved_depth == 0.5
        assert res.at_pool_max
        assert res.candidates_evaluated >= len(CROSS)

    def test_achieved_depth_matches_sample_hd(self, rng):
        s = rng.standard_normal((200, 2))
        res = tukey_median(s, k=32, seed=3)
        assert res.achieved_depth == sample_hd(res.point, s, method="approx",
                                               k=32, seed=3)

    def test_exact2d_method(self, rng):
        s = rng.standard_normal((30, 2))
        res = tukey_median(s, method="exact2d", midpoint_cap=200, seed=1)
        assert res.achieved_depth == sample_hd(res.point, s, method="exact2d")
        assert res.achieved_depth >= 0.2

    def test_empty_sample_rejected(self):
        with pytest.raises(InputError):
            tukey_median(np.empty((0, 2)))

    def test_gaussian_recovery_monte_carlo(self):
        # strong consistency at working scale: the estimate stays within 0.1
        # of the true center in at least 95 of 100 seeded runs at n = 4000
        g = make_gaussian_spherical(2)
        hits = 0
        for seed in range(100):
            x = g.sample(4000, seed)
            res = tukey_median(x, seed=seed, midpoint_cap=512, multistarts=4)
            hits += np.linalg.norm(res.point) <= 0.1
        assert hits >= 95


class TestEquivariance:
    def _signed_perms_2d(self):
        mats = []
        for p in ([0, 1], [1, 0]):
            for sx in (-1.0, 1.0):
                for sy in (-1.0, 1.0):
                    m = np.zeros((2, 2))
                    m[0, p[0]], m[1, p[1]] = sx, sy
                    mats.append(m)
        return mats

    def test_signed_permutation_exact2d(self, rng):
        for _ in range(20):
            s = rng.standard_normal((25, 2))
            x = rng.standard_normal(2)
            base = sample_hd(x, s, method="exact2d")
            for a in self._signed_perms_2d():
                assert sample_hd(a @ x, s @ a.T, method="exact2d") == base

    def test_signed_permutation_candidate_core(self, rng):
        # k = 8 is exactly the signed basis plus sign vectors, a set closed
        # under every signed permutation, so approx depth is equivariant too
        for _ in range(10):
            s = rng.standard_normal((40, 2))
            x = rng.standard_normal(2)
            base = sample_hd(x, s, method="approx", k=8, seed=0)
            for a in self._signed_perms_2d():
                assert sample_hd(a @ x, s @ a.T, method="approx", k=8, seed=0) == base

    def test_affine_pool_invariance(self, rng):
        # the deepest pool candidate is preserved by any invertible affine map
        # applied jointly to sample and pool
        for _ in range(10):
            s = rng.standard_normal((30, 2))
            pool = rng.standard_normal((12, 2))
            a = rng.standard_normal((2, 2)) + 2.0 * np.eye(2)
            mu = rng.standard_normal(2)
            base = [sample_hd(p, s, method="exact2d") for p in pool]
            mapped = [sample_hd(a @ p + mu, s @ a.T + mu, method="exact2d")
                      for p in pool]
            assert base == mapped
            assert max(base) == max(mapped)


class TestRateBound:
    def test_constants(self):
        b = location_bound_rhs(0.0, 2, 1000, 0.05)
        assert b.c2 == pytest.approx((9 * math.sqrt(2) + 4 * math.sqrt(6)) / 4, rel=1e-15)
        assert b.c2 > 5.0
        assert b.c2 == pytest.approx(5.631470258122642, abs=1e-12)
        assert b.c1 == pytest.approx(
            24 * math.sqrt(2) * math.sqrt(30 * math.pi * math.e / (1 - math.exp(-1))),
            rel=1e-15)
        assert b.c1 == pytest.approx(683.2963274708711, abs=1e-9)
        assert b.vc_constant == pytest.approx(
            math.sqrt(1440 * math.pi * math.e / (1 - math.exp(-1))), rel=1e-15)

    def test_value_formula(self):
        b = location_bound_rhs(0.1, 2, 10_000, 0.05)
        expected = (0.1 / 0.9 + b.c1 * math.sqrt(2 / 10_000)
                    + b.c2 * math.sqrt(math.log(20.0) / 10_000))
        assert b.value == pytest.approx(expected, rel=1e-15)

    def test_vanishes_with_n(self):
        vals = [location_bound_rhs(0.0, 1, 10 ** k, 0.05).value for k in range(2, 13)]
        assert all(a > b for a, b in zip(vals, vals[1:]))
        assert vals[-1] < 1e-3

    def test_side_condition(self):
        assert min_admissible_n(0.05) == 14
        location_bound_rhs(0.0, 2, 14, 0.05)
        with pytest.raises(InputError, match="14"):
            location_bound_rhs(0.0, 2, 13, 0.05)
        with pytest.raises(InputError):
            location_bound_rhs(0.5, 2, 1000, 0.05)
        with pytest.raises(InputError):
            location_bound_rhs(0.0, 2, 1000, 0.7)


class TestMaxDepthDeviation:
    def test_symmetric_cross_identity(self):
        # the cross median is the origin, so the population deviation vanishes
        c = make_independent_stable(1.0, 2)
        med = tukey_median(CROSS, seed=0)
        assert population_hd(np.zeros(2), c) - population_hd(med.point, c) == 0.0

    def test_clean_gaussian_small(self):
        g = make_gaussian_spherical(2)
        cm = ContaminatedModel(g, PointMassContaminant([10.0, 10.0]), 0.0)
        dev = max_depth_deviation(g, cm, 4000, seed=7, midpoint_cap=512)
        assert 0.0 <= dev <= 0.05

    def test_model_mismatch(self):
        g = make_gaussian_spherical(2)
        g2 = make_gaussian_spherical(2)
        cm = ContaminatedModel(g, PointMassContaminant([10.0, 10.0]), 0.0)
        with pytest.raises(InputError):
            max_depth_deviation(g2, cm, 100, 0)
