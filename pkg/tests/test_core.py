"""Core CDF-sum machinery against the slow oracles and its own invariants."""

import math

import hypothesis.strategies as st
import numpy as np
import pytest
from hypothesis import given, settings

from softorder import (
    DimensionMismatch,
    KOutOfRange,
    NonFiniteInput,
    ScaleParam,
    UnsortedTargets,
    ZeroScale,
    cdf_sum,
    cdf_sum_inverse,
    cdf_sum_inverse_sorted,
    laplace_cdf,
    prepare,
)
from softorder.oracle import fsum_direct, inverse_bisect

# Strategies kept inside the band where double precision can still resolve
# the function: exponents like (x - r)/alpha stay well above the underflow
# threshold, so strict monotonicity is observable at test resolution.
moderate_scores = st.lists(
    st.floats(-3.0, 3.0, allow_nan=False, allow_infinity=False), min_size=1, max_size=40
).map(np.array)
moderate_alpha = st.sampled_from([0.5, 1.0, 3.0, -0.5, -1.0, -3.0])
wide_scores = st.lists(
    st.floats(-100.0, 100.0, allow_nan=False), min_size=1, max_size=60
).map(np.array)
wide_alpha = st.sampled_from([0.1, 1.0, 10.0, 50.0, -0.1, -1.0, -10.0, -50.0])


class TestLaplaceCdf:
    def test_anchor_values(self):
        assert laplace_cdf(0.0) == 0.5
        assert laplace_cdf(math.log(2.0)) == 0.75
        assert laplace_cdf(-math.log(2.0)) == 0.25

    def test_saturation_without_overflow(self):
        assert laplace_cdf(-800.0) == 0.0
        assert laplace_cdf(800.0) == 1.0
        assert laplace_cdf(np.inf) == 1.0
        assert laplace_cdf(-np.inf) == 0.0

    def test_array_in_array_out(self):
        out = laplace_cdf(np.array([-1.0, 0.0, 1.0]))
        assert isinstance(out, np.ndarray)
        assert out[0] + out[2] == pytest.approx(1.0, abs=1e-16)

    @given(st.floats(-30.0, 30.0, allow_nan=False))
    def test_symmetry(self, x):
        assert laplace_cdf(x) + laplace_cdf(-x) == pytest.approx(1.0, abs=1e-15)

    @given(st.floats(-30.0, 30.0), st.floats(1e-6, 30.0))
    def test_strictly_increasing(self, x, step):
        assert laplace_cdf(x + step) > laplace_cdf(x)


class TestScaleParam:
    def test_split(self):
        s = ScaleParam(-2.5)
        assert s.magnitude == 2.5
        assert s.sign == -1.0
        assert ScaleParam(0.25).sign == 1.0

    def test_rejects_zero_and_nonfinite(self):
        with pytest.raises(ZeroScale):
            ScaleParam(0.0)
        with pytest.raises(NonFiniteInput):
            ScaleParam(float("nan"))
        with pytest.raises(NonFiniteInput):
            ScaleParam(float("inf"))


class TestPrepare:
    def test_single_element(self):
        prep = prepare([5.0], 1.0)
        assert prep.coeffs.prefix.tolist() == [1.0]
        assert prep.coeffs.suffix.tolist() == [1.0]
        assert prep.coeffs.segment_values.tolist() == [0.5]

    def test_tied_pair(self):
        prep = prepare([0.0, 0.0], 1.0)
        assert prep.coeffs.prefix.tolist() == [1.0, 2.0]
        assert prep.coeffs.suffix.tolist() == [2.0, 1.0]
        assert prep.coeffs.segment_values.tolist() == [1.0, 1.0]

    def test_three_point_frozen(self):
        # Expected values computed by direct summation of the defining sums.
        prep = prepare([0.0, 1.0, 2.0], 1.0)
        np.testing.assert_allclose(
            prep.coeffs.prefix,
            [1.0, 1.3678794411714423, 1.5032147244080551],
            rtol=0, atol=1e-14,
        )
        np.testing.assert_allclose(
            prep.coeffs.suffix,
            [1.5032147244080551, 1.3678794411714423, 1.0],
            rtol=0, atol=1e-14,
        )
        np.testing.assert_allclose(
            prep.coeffs.segment_values,
            [0.7516073622040276, 1.5, 2.2483926377959724],
            rtol=0, atol=1e-14,
        )

    @given(moderate_scores, moderate_alpha)
    def test_against_direct_summation(self, scores, alpha):
        prep = prepare(scores, alpha)
        r = prep.sorted_scores.values_sorted
        a = prep.coeffs.scale
        n = r.size
        prefix = [
            math.fsum(math.exp((r[i] - r[j]) / a) for i in range(j + 1))
            for j in range(n)
        ]
        suffix = [
            math.fsum(math.exp((r[j] - r[i]) / a) for i in range(j, n))
            for j in range(n)
        ]
        seg = [fsum_direct(r.tolist(), float(r[j]), a) for j in range(n)]
        np.testing.assert_allclose(prep.coeffs.prefix, prefix, rtol=1e-12)
        np.testing.assert_allclose(prep.coeffs.suffix, suffix, rtol=1e-12)
        np.testing.assert_allclose(prep.coeffs.segment_values, seg, rtol=1e-12)

    @given(wide_scores, wide_alpha)
    def test_coefficient_bounds_and_monotone_segments(self, scores, alpha):
        prep = prepare(scores, alpha)
        n = scores.size
        assert np.all(prep.coeffs.prefix >= 1.0)
        assert np.all(prep.coeffs.prefix <= n + 1e-9)
        assert np.all(prep.coeffs.suffix >= 1.0)
        assert np.all(prep.coeffs.suffix <= n + 1e-9)
        seg = prep.coeffs.segment_values
        assert np.all(np.diff(seg) >= -1e-12)
        assert np.all(seg > 0.0)
        assert np.all(seg < n)

    @given(wide_scores, wide_alpha)
    def test_permutation_is_consistent(self, scores, alpha):
        prep = prepare(scores, alpha)
        ss = prep.sorted_scores
        np.testing.assert_array_equal(ss.perm[ss.inv_perm], np.arange(ss.n))
        internal = scores if alpha > 0 else -scores
        np.testing.assert_array_equal(ss.values_sorted[ss.inv_perm], internal)
        assert np.all(np.diff(ss.values_sorted) >= 0)

    def test_rejects_bad_input(self):
        with pytest.raises(NonFiniteInput):
            prepare([1.0, np.nan], 1.0)
        with pytest.raises(NonFiniteInput):
            prepare([1.0, np.inf], 1.0)
        with pytest.raises(DimensionMismatch):
            prepare([], 1.0)
        with pytest.raises(DimensionMismatch):
            prepare([[1.0, 2.0]], 1.0)
        with pytest.raises(ZeroScale):
            prepare([1.0], 0.0)


class TestCdfSum:
    def test_single_score_half(self):
        prep = prepare([5.0], 1.0)
        assert cdf_sum(prep, 5.0) == 0.5

    def test_equal_scores_center(self):
        prep = prepare([2.0] * 6, 0.3)
        assert cdf_sum(prep, 2.0) == 3.0

    def test_three_point_value(self):
        prep = prepare([0.0, 1.0, 2.0], 1.0)
        assert cdf_sum(prep, 1.0) == pytest.approx(1.5, abs=1e-14)

    def test_hundred_draws_against_direct(self, rng):
        scores = rng.standard_normal(100)
        queries = rng.uniform(-4.0, 4.0, size=20)
        for alpha in (0.7, -0.7, 5.0):
            prep = prepare(scores, alpha)
            got = cdf_sum(prep, queries)
            want = [fsum_direct(scores.tolist(), float(x), alpha) for x in queries]
            np.testing.assert_allclose(got, want, rtol=1e-12)

    def test_query_order_preserved(self, rng):
        scores = rng.standard_normal(50)
        prep = prepare(scores, 1.3)
        xs = np.array([2.0, -1.0, 0.5, -3.0])
        batch = cdf_sum(prep, xs)
        singles = [cdf_sum(prep, float(x)) for x in xs]
        np.testing.assert_array_equal(batch, singles)

    @given(moderate_scores, moderate_alpha)
    def test_monotone_in_direction(self, scores, alpha):
        prep = prepare(scores, alpha)
        lo = scores.min() - 0.5
        hi = scores.max() + 0.5
        xs = np.linspace(lo, hi, 41)
        vals = cdf_sum(prep, xs)
        diffs = np.diff(vals) * (1.0 if alpha > 0 else -1.0)
        assert np.all(diffs > 0.0)

    @given(wide_scores, wide_alpha)
    def test_range_open_interval(self, scores, alpha):
        prep = prepare(scores, alpha)
        xs = np.linspace(scores.min() - 2 * abs(alpha), scores.max() + 2 * abs(alpha), 31)
        vals = cdf_sum(prep, xs)
        assert np.all(vals >= 0.0)
        assert np.all(vals <= scores.size)
        # Strict interior wherever the exponents stayed representable.
        inner = cdf_sum(prep, np.sort(scores))
        assert np.all(inner > 0.0)
        assert np.all(inner < scores.size)

    @given(moderate_scores, moderate_alpha, st.floats(-10.0, 10.0, allow_nan=False))
    def test_translation_equivariance(self, scores, alpha, t):
        xs = np.linspace(scores.min() - 1, scores.max() + 1, 7)
        base = cdf_sum(prepare(scores, alpha), xs)
        shifted = cdf_sum(prepare(scores + t, alpha), xs + t)
        np.testing.assert_allclose(shifted, base, rtol=0, atol=1e-10)

    def test_direction_mirror(self, rng):
        scores = rng.standard_normal(30)
        xs = rng.uniform(-3, 3, size=9)
        up = cdf_sum(prepare(scores, 0.8), xs)
        down = cdf_sum(prepare(scores, -0.8), xs)
        np.testing.assert_allclose(up + down, 30.0, rtol=0, atol=1e-12)

    def test_rejects_nonfinite_queries(self, rng):
        prep = prepare(rng.standard_normal(4), 1.0)
        with pytest.raises(NonFiniteInput):
            cdf_sum(prep, np.nan)
        with pytest.raises(NonFiniteInput):
            cdf_sum(prep, np.array([1.0, np.inf]))


class TestCdfSumInverse:
    def test_single_score(self):
        prep = prepare([7.0], 1.0)
        assert cdf_sum_inverse(prep, 0.5) == 7.0

    def test_equal_scores(self):
        prep = prepare([0.0, 0.0, 0.0, 0.0], 2.0)
        assert cdf_sum_inverse(prep, 2.0) == 0.0

    def test_three_point_frozen(self):
        # Bisection oracle values, tolerance 1e-13 on the k-residual.
        prep = prepare([0.0, 1.0, 2.0], 1.0)
        assert cdf_sum_inverse(prep, 1.0) == pytest.approx(
            0.3433691562408967, abs=1e-10
        )
        assert cdf_sum_inverse(prep, 1.5) == pytest.approx(1.0, abs=1e-12)

    def test_level_at_segment_value_hits_score(self):
        prep = prepare([0.0, 1.0, 2.0], 1.0)
        k = float(prep.coeffs.segment_values[1])
        assert cdf_sum_inverse(prep, k) == pytest.approx(1.0, abs=1e-13)

    @given(wide_scores, wide_alpha, st.floats(1e-3, 1.0 - 1e-3))
    def test_round_trip(self, scores, alpha, frac):
        prep = prepare(scores, alpha)
        k = frac * scores.size
        b = cdf_sum_inverse(prep, k)
        assert abs(cdf_sum(prep, b) - k) <= 1e-9

    def test_round_trip_large(self, rng):
        scores = rng.standard_normal(10_000)
        for alpha in (0.2, -0.2, 3.0):
            prep = prepare(scores, alpha)
            for k in (0.01, 1.0, 1234.5, 5000.0, 9999.99):
                b = cdf_sum_inverse(prep, k)
                assert abs(cdf_sum(prep, b) - k) <= 1e-9

    @given(moderate_scores, moderate_alpha, st.floats(0.02, 0.98))
    def test_matches_bisection(self, scores, alpha, frac):
        k = frac * scores.size
        prep = prepare(scores, alpha)
        want = inverse_bisect(scores.tolist(), k, alpha, tol=1e-13)
        assert cdf_sum_inverse(prep, k) == pytest.approx(want, abs=1e-10)

    def test_negation_reduction_is_exact(self, rng):
        scores = rng.standard_normal(25)
        for k in (0.5, 12.25, 24.5):
            direct = cdf_sum_inverse(prepare(scores, -1.7), k)
            mirrored = -cdf_sum_inverse(prepare(-scores, 1.7), k)
            assert direct == mirrored

    def test_clustered_plateau_does_not_overflow(self):
        # Two clusters 4000 scale-widths apart: the inter-cluster segment
        # underflows every exponential, which must fall back to log form.
        scores = np.array([0.0, 0.0, 4000.0, 4000.0])
        prep = prepare(scores, 1.0)
        b = cdf_sum_inverse(prep, 2.0)
        assert np.isfinite(b)
        assert 0.0 < b < 4000.0
        assert abs(cdf_sum(prep, b) - 2.0) <= 1e-9

    def test_extreme_scales(self, rng):
        scores = rng.standard_normal(20)
        for alpha in (1e-6, 1e6, -1e-6):
            prep = prepare(scores, alpha)
            b = cdf_sum_inverse(prep, 10.0)
            assert np.isfinite(b)
            assert abs(cdf_sum(prep, b) - 10.0) <= 1e-9

    def test_k_bounds(self, rng):
        prep = prepare(rng.standard_normal(5), 1.0)
        for bad in (0.0, 5.0, -1.0, 6.0):
            with pytest.raises(KOutOfRange):
                cdf_sum_inverse(prep, bad)
        with pytest.raises(NonFiniteInput):
            cdf_sum_inverse(prep, float("nan"))


class TestCdfSumInverseSorted:
    def test_matches_scalar_inverse(self, rng):
        scores = rng.standard_normal(300)
        ks = np.sort(rng.uniform(0.01, 299.99, size=64))
        for alpha in (0.6, -0.6):
            prep = prepare(scores, alpha)
            batch = cdf_sum_inverse_sorted(prep, ks)
            singles = np.array([cdf_sum_inverse(prep, float(k)) for k in ks])
            np.testing.assert_allclose(batch, singles, rtol=0, atol=1e-12)

    def test_direction_of_output(self, rng):
        scores = rng.standard_normal(40)
        ks = np.arange(40, dtype=float) + 0.5
        up = cdf_sum_inverse_sorted(prepare(scores, 0.5), ks)
        down = cdf_sum_inverse_sorted(prepare(scores, -0.5), ks)
        assert np.all(np.diff(up) > 0)
        assert np.all(np.diff(down) < 0)

    def test_duplicate_levels_allowed(self, rng):
        prep = prepare(rng.standard_normal(10), 1.0)
        ks = np.array([2.0, 2.0, 5.0])
        out = cdf_sum_inverse_sorted(prep, ks)
        assert out[0] == out[1]

    def test_empty_batch(self, rng):
        prep = prepare(rng.standard_normal(4), 1.0)
        assert cdf_sum_inverse_sorted(prep, []).size == 0

    def test_rejects_unsorted_and_out_of_range(self, rng):
        prep = prepare(rng.standard_normal(6), 1.0)
        with pytest.raises(UnsortedTargets):
            cdf_sum_inverse_sorted(prep, [3.0, 2.0])
        with pytest.raises(KOutOfRange):
            cdf_sum_inverse_sorted(prep, [0.0, 2.0])
        with pytest.raises(KOutOfRange):
            cdf_sum_inverse_sorted(prep, [2.0, 6.0])
        with pytest.raises(NonFiniteInput):
            cdf_sum_inverse_sorted(prep, [1.0, np.nan])
