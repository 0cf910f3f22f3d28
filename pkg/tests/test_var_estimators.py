import math

import numpy as np
import pytest

from nprvar import datagen as dg
from nprvar import var_estimators as ve
from nprvar.errors import (
    DimensionMismatch,
    DimensionTooSmall,
    GridNotEven,
    InvalidSampleSize,
    NegativeWeight,
    UnknownDesignCDF,
)
from nprvar.kernels import BandwidthPlan, box_kernel, truncated_gaussian_kernel


def sample1d(x, y, seed=0):
    return dg.SampleSet(np.asarray(x, dtype=float), np.asarray(y, dtype=float), seed, {})


def brute_force_ustat(x, y, h, kernel):
    """Double loop over all ordered pairs, halved: the independent oracle."""
    from nprvar.kernels import kernel_eval

    n = len(x)
    num = den = 0.0
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            kw = float(kernel_eval(kernel, (x[i] - x[j]) / h)) / h
            num += kw * (y[i] - y[j]) ** 2 / 2.0
            den += kw
    num /= 2.0
    den /= 2.0
    return (num / den) if den > 0 else 0.0


class TestUstatVariance:
    def test_zero_differences(self):
        assert ve.ustat_variance(sample1d([0.0, 0.1], [1.0, 1.0]), 1.0).value == 0.0

    def test_zero_over_zero_convention(self):
        est = ve.ustat_variance(sample1d([0.0, 1.0], [0.0, 5.0]), 0.5)
        assert est.value == 0.0
        assert est.denominator == 0.0
        assert est.pairs_in_bandwidth == 0

    def test_single_pair_cancellation(self):
        est = ve.ustat_variance(sample1d([0.0, 0.1], [0.0, 2.0]), 1.0)
        assert est.value == 2.0
        assert est.pairs_in_bandwidth == 1
        assert est.value == est.numerator / est.denominator

    def test_location_invariance(self):
        rng = np.random.default_rng(0)
        x, y = rng.random(150), rng.standard_normal(150)
        base = ve.ustat_variance(sample1d(x, y), 0.1).value
        for c in (1.0, -3.5, 256.0):
            shifted = ve.ustat_variance(sample1d(x, y + c), 0.1).value
            assert shifted == pytest.approx(base, rel=1e-12)

    def test_scale_equivariance(self):
        rng = np.random.default_rng(1)
        x, y = rng.random(120), rng.standard_normal(120)
        base = ve.ustat_variance(sample1d(x, y), 0.15).value
        # powers of two rescale exactly
        assert ve.ustat_variance(sample1d(x, 2.0 * y), 0.15).value == 4.0 * base
        assert ve.ustat_variance(sample1d(x, 1.7 * y), 0.15).value == pytest.approx(
            1.7**2 * base, rel=1e-12
        )

    def test_permutation_invariance(self):
        rng = np.random.default_rng(2)
        x, y = rng.random(200), rng.standard_normal(200)
        perm = rng.permutation(200)
        a = ve.ustat_variance(sample1d(x, y), 0.08)
        b = ve.ustat_variance(sample1d(x[perm], y[perm]), 0.08)
        assert b.value == pytest.approx(a.value, rel=1e-12)
        assert b.pairs_in_bandwidth == a.pairs_in_bandwidth

    @pytest.mark.parametrize("kernel", [box_kernel(), truncated_gaussian_kernel()],
                             ids=lambda k: k.kind.value)
    def test_dense_window_agree(self, kernel):
        rng = np.random.default_rng(3)
        x, y = rng.random(900), rng.standard_normal(900)
        s = sample1d(x, y)
        a = ve.ustat_variance(s, 0.05, kernel, method="dense")
        b = ve.ustat_variance(s, 0.05, kernel, method="window")
        assert b.value == pytest.approx(a.value, rel=1e-12)
        assert b.pairs_in_bandwidth == a.pairs_in_bandwidth
        assert b.numerator == pytest.approx(a.numerator, rel=1e-12)

    def test_pair_oracle_small_n(self):
        rng = np.random.default_rng(4)
        for _ in range(25):
            n = int(rng.integers(2, 13))
            x, y = rng.random(n), rng.standard_normal(n)
            est = ve.ustat_variance(sample1d(x, y), 0.4).value
            oracle = brute_force_ustat(x, y, 0.4, box_kernel())
            assert est == pytest.approx(oracle, rel=1e-12, abs=1e-15)

    def test_nonnegative(self):
        rng = np.random.default_rng(5)
        for seed in range(5):
            x, y = rng.random(80), rng.standard_normal(80)
            assert ve.ustat_variance(sample1d(x, y), 0.2).value >= 0.0

    def test_validation(self):
        with pytest.raises(InvalidSampleSize):
            ve.ustat_variance(sample1d([0.0], [1.0]), 0.5)
        with pytest.raises(DimensionMismatch):
            ve.ustat_variance(
                dg.SampleSet(np.zeros((5, 2)), np.zeros(5), 0, {}), 0.5
            )


class TestUstatMultivariate:
    def test_reduces_to_univariate(self):
        rng = np.random.default_rng(6)
        x, y = rng.random(300), rng.standard_normal(300)
        s = sample1d(x, y)
        uni = ve.ustat_variance(s, 0.1)
        multi = ve.ustat_variance_multivariate(s, [0.1])
        assert multi.value == uni.value
        assert multi.pairs_in_bandwidth == uni.pairs_in_bandwidth

    def test_product_kernel_vanishes(self):
        pts = np.array([[0.0, 0.0], [0.0, 0.9]])
        s = dg.SampleSet(pts, np.array([0.0, 2.0]), 0, {})
        est = ve.ustat_variance_multivariate(s, [1.0, 0.5])
        assert est.value == 0.0
        assert est.pairs_in_bandwidth == 0

    def test_single_pair_example(self):
        pts = np.array([[0.0, 0.0], [0.1, 0.1]])
        s = dg.SampleSet(pts, np.array([0.0, 2.0]), 0, {})
        assert ve.ustat_variance_multivariate(s, [1.0, 1.0]).value == 2.0

    def test_dense_window_agree(self):
        rng = np.random.default_rng(7)
        pts = rng.random((600, 2))
        y = rng.standard_normal(600)
        s = dg.SampleSet(pts, y, 0, {})
        a = ve.ustat_variance_multivariate(s, [0.2, 0.3], method="dense")
        b = ve.ustat_variance_multivariate(s, [0.2, 0.3], method="window")
        assert b.value == pytest.approx(a.value, rel=1e-12)
        assert b.pairs_in_bandwidth == a.pairs_in_bandwidth

    def test_bandwidth_length_checked(self):
        s = dg.SampleSet(np.zeros((5, 2)), np.zeros(5), 0, {})
        with pytest.raises(DimensionMismatch):
            ve.ustat_variance_multivariate(s, [0.1])


class TestFixedDesignBaselines:
    def test_diff_examples(self):
        assert ve.diff_variance_equidistant([3.0] * 8) == 0.0
        # (2-0)^2 / (2*(n-1)) with n = 2
        assert ve.diff_variance_equidistant([0.0, 2.0]) == 2.0

    def test_diff_unbiasedness(self):
        rng = dg.make_rng(8)
        y = rng.standard_normal(100_000)
        assert ve.diff_variance_equidistant(y) == pytest.approx(1.0, abs=0.02)

    def test_sample_variance(self):
        assert ve.sample_variance([4.0, 4.0, 4.0]) == 0.0
        assert ve.sample_variance([0.0, 2.0]) == 2.0
        rng = dg.make_rng(9)
        assert ve.sample_variance(rng.standard_normal(100_000)) == pytest.approx(1.0, abs=0.02)
        with pytest.raises(InvalidSampleSize):
            ve.sample_variance([1.0])


class TestAdditiveGD:
    def test_exact_zero_noiseless(self):
        rng = np.random.default_rng(10)
        f, g = rng.standard_normal(16), rng.standard_normal(16)
        assert ve.additive_gd_variance(f[:, None] + g[None, :]) <= 1e-12

    def test_constant_array(self):
        assert ve.additive_gd_variance(np.full((6, 6), 2.5)) == 0.0

    def test_three_dimensional_exactness(self):
        rng = np.random.default_rng(11)
        f, g, k = (rng.standard_normal(8) for _ in range(3))
        arr = f[:, None, None] + g[None, :, None] + k[None, None, :]
        assert ve.additive_gd_variance(arr) <= 1e-12

    def test_mc_mean_near_sigma_sq(self):
        rng = np.random.default_rng(12)
        vals = [
            ve.additive_gd_variance(rng.standard_normal((64, 64))) for _ in range(300)
        ]
        assert np.mean(vals) == pytest.approx(1.0, abs=0.02)

    def test_grid_validation(self):
        with pytest.raises(GridNotEven):
            ve.additive_gd_variance(np.zeros((5, 5)))
        with pytest.raises(DimensionMismatch):
            ve.additive_gd_variance(np.zeros((4, 6)))


class TestAdditiveMoM:
    def test_formula_matches_components(self):
        rng = np.random.default_rng(13)
        pts = rng.random((400, 2))
        y = rng.standard_normal(400)
        s = dg.SampleSet(pts, y, 0, {})
        plans = [BandwidthPlan(1.0), BandwidthPlan(1.0)]
        combined = ve.additive_mom_variance(s, plans)
        h = 1.0 / 400
        part_x = ve.ustat_variance(sample1d(pts[:, 0], y), h).value
        part_w = ve.ustat_variance(sample1d(pts[:, 1], y), h).value
        assert combined == pytest.approx(part_x + part_w - ve.sample_variance(y), rel=1e-12)

    def test_flat_means_estimate_sigma(self):
        s = dg.generate(
            dg.ProductOfUnivariate((dg.UniformInterval(0, 1), dg.UniformInterval(0, 1))),
            dg.Constant(0.0),
            dg.Constant(1.0),
            dg.GaussianNoise(),
            5000,
            14,
        )
        est = ve.additive_mom_variance(s, [BandwidthPlan(1.0)] * 2)
        assert est == pytest.approx(1.0, abs=0.15)

    def test_dimension_gate(self):
        s = sample1d([0.0, 1.0], [0.0, 1.0])
        with pytest.raises(DimensionTooSmall):
            ve.additive_mom_variance(s, [BandwidthPlan(1.0)])


class TestHaarProjection:
    def test_gram_is_identity(self):
        # Haar functions are constant on the 2^-J dyadic cells, so cell
        # midpoints integrate them exactly.
        for levels in (1, 2, 3, 5):
            cells = 2**levels
            mids = (np.arange(cells) + 0.5) / cells
            feats = ve.haar_feature_matrix(mids, levels)
            gram = feats.T @ feats / cells
            np.testing.assert_allclose(gram, np.eye(2**levels - 1), atol=1e-12)

    def test_features_mean_zero(self):
        cells = 2**4
        mids = (np.arange(cells) + 0.5) / cells
        feats = ve.haar_feature_matrix(mids, 4)
        np.testing.assert_allclose(feats.mean(axis=0), 0.0, atol=1e-12)

    def test_zero_levels_reduce_to_sample_variance(self):
        s = dg.generate(
            dg.UniformInterval(0, 1), dg.Constant(0.0), dg.Constant(1.0), dg.GaussianNoise(), 200, 15
        )
        cfg = ve.ProjectionConfig((0,), (ve.uniform_cdf(),))
        assert ve.projection_variance(s, cfg) == ve.sample_variance(s.response)

    def test_unbiased_for_flat_mean(self):
        cfg = ve.ProjectionConfig((6,), (ve.uniform_cdf(),))
        vals = np.array(
            [
                ve.projection_variance(
                    dg.generate(
                        dg.UniformInterval(0, 1), dg.Constant(0.0), dg.Constant(1.0),
                        dg.GaussianNoise(), 10_000, 1600 + t,
                    ),
                    cfg,
                )
                for t in range(200)
            ]
        )
        se = vals.std(ddof=1) / math.sqrt(len(vals))
        assert abs(vals.mean() - 1.0) <= 3.0 * se

    def test_pair_sum_identity_against_direct(self):
        # the norm-based shortcut equals the literal pairwise double sum
        rng = np.random.default_rng(16)
        u = rng.random(60)
        y = rng.standard_normal(60)
        levels = 3
        feats = ve.haar_feature_matrix(u, levels)
        direct = 0.0
        for i in range(60):
            for j in range(i + 1, 60):
                direct += y[i] * y[j] * float(feats[i] @ feats[j])
        s = dg.SampleSet(u, y, 0, {})
        cfg = ve.ProjectionConfig((levels,), (ve.uniform_cdf(),))
        est = ve.projection_variance(s, cfg)
        expected = ve.sample_variance(y) - direct / math.comb(60, 2)
        assert est == pytest.approx(expected, rel=1e-10)

    def test_tensor_matches_direct_pair_sum(self):
        rng = np.random.default_rng(17)
        pts = rng.random((50, 2))
        y = rng.standard_normal(50)
        levels = (2, 3)
        f0 = np.concatenate([np.ones((50, 1)), ve.haar_feature_matrix(pts[:, 0], 2)], axis=1)
        f1 = np.concatenate([np.ones((50, 1)), ve.haar_feature_matrix(pts[:, 1], 3)], axis=1)
        direct = 0.0
        for i in range(50):
            for j in range(i + 1, 50):
                tensor_ip = float(f0[i] @ f0[j]) * float(f1[i] @ f1[j]) - 1.0
                direct += y[i] * y[j] * tensor_ip
        s = dg.SampleSet(pts, y, 0, {})
        cfg = ve.ProjectionConfig(levels, (ve.uniform_cdf(), ve.uniform_cdf()), basis="tensor")
        est = ve.projection_variance(s, cfg)
        expected = ve.sample_variance(y) - direct / math.comb(50, 2)
        assert est == pytest.approx(expected, rel=1e-9)

    def test_missing_cdfs_rejected(self):
        s = sample1d([0.1, 0.2, 0.3], [0.0, 1.0, 2.0])
        with pytest.raises(UnknownDesignCDF):
            ve.projection_variance(s, ve.ProjectionConfig((2,), None))


class TestQuadraticFunctional:
    def test_zero_weight(self):
        s = sample1d([0.1, 0.5, 0.9], [1.0, 2.0, 3.0])
        assert ve.quadratic_functional(s, dg.Constant(0.0), 1.0) == 0.0

    def test_flat_mean_centers_on_zero(self):
        vals = []
        for t in range(150):
            s = dg.generate(
                dg.UniformInterval(0, 1), dg.Constant(0.0), dg.Constant(1.0),
                dg.GaussianNoise(), 10_000, 2000 + t,
            )
            vals.append(ve.quadratic_functional(s, dg.Constant(1.0), 1.0))
        vals = np.array(vals)
        se = vals.std(ddof=1) / math.sqrt(len(vals))
        assert abs(vals.mean()) <= 3.0 * se

    def test_constant_mean_recovers_square(self):
        c = 1.5
        vals = []
        for t in range(100):
            s = dg.generate(
                dg.UniformInterval(0, 1), dg.Constant(c), dg.Constant(1.0),
                dg.GaussianNoise(), 10_000, 3000 + t,
            )
            vals.append(ve.quadratic_functional(s, dg.Constant(1.0), 1.0))
        vals = np.array(vals)
        se = vals.std(ddof=1) / math.sqrt(len(vals))
        assert vals.mean() == pytest.approx(c**2, abs=4.0 * se)

    def test_negative_weight_rejected(self):
        s = sample1d([0.1, 0.9], [1.0, 2.0])
        with pytest.raises(NegativeWeight):
            ve.quadratic_functional(s, dg.Polynomial((0.2, -1.0)), 1.0)


class TestConjugateSigma2:
    def test_zero_weight_indicator(self):
        s = sample1d([0.1, 0.9], [1.0, 2.0])
        assert ve.conjugate_sigma2(s, dg.Constant(0.0), 5.0) == 0.0

    def test_clipping(self):
        s = sample1d([0.1, 0.9], [0.1, 0.2])
        assert ve.conjugate_sigma2(s, dg.Constant(1.0), 100.0) == 0.0

    def test_second_moment_recovery(self):
        s = dg.generate(
            dg.UniformInterval(0, 1), dg.Constant(0.0), dg.Constant(1.0),
            dg.GaussianNoise(), 100_000, 18,
        )
        est = ve.conjugate_sigma2(s, dg.Constant(1.0), 0.0)
        assert est == pytest.approx(1.0, abs=0.02)
