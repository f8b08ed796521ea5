"""Tests for the long-memory noise generators.

Two independent oracles pin the fARIMA machinery:

* the closed form w_k = Gamma(k + d) / (Gamma(k + 1) Gamma(d)) for the MA
  weights, evaluated through log-gamma;
* the exact autocovariance recursion gamma(0) = Gamma(1 - 2d) / Gamma(1 - d)^2,
  gamma(h) = gamma(h - 1) (h - 1 + d) / (h - d).

The generator output is compared against both, and against the exact fGn
autocovariance for the circulant-embedding path.
"""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import gammaln
from scipy.stats import kstest

from fdeconv import lrdnoise as ln
from fdeconv.errors import DegenerateInputError, ParameterError


def weights_closed_form(d, ks):
    return np.exp(gammaln(np.asarray(ks) + d) - gammaln(np.asarray(ks) + 1) - gammaln(d))


def farima_acv_oracle(d, max_lag):
    g0 = np.exp(gammaln(1 - 2 * d) - 2 * gammaln(1 - d))
    out = [g0]
    for h in range(1, max_lag + 1):
        out.append(out[-1] * (h - 1 + d) / (h - d))
    return np.array(out)


class TestFarimaWeights:
    def test_hand_values(self):
        w = ln.farima_weights(0.25, 4)
        assert w[0] == 1.0
        assert w[1] == 0.25  # w_1 = d
        assert abs(w[2] - 0.25 * 1.25 / 2) < 1e-15  # d (1 + d) / 2
        assert abs(w[3] - w[2] * 2.25 / 3) < 1e-15

    def test_gamma_closed_form(self):
        ks = [0, 1, 2, 5, 100, 1000]
        for d in (0.05, 0.25, 0.45):
            w = ln.farima_weights(d, 1001)[ks]
            assert np.allclose(w, weights_closed_form(d, ks), rtol=1e-12)

    def test_validation(self):
        with pytest.raises(ParameterError):
            ln.farima_weights(0.5, 10)
        with pytest.raises(ParameterError):
            ln.farima_weights(-0.1, 10)
        with pytest.raises(ParameterError):
            ln.farima_weights(0.2, 0)

    @settings(max_examples=30, deadline=None)
    @given(d=st.floats(min_value=0.001, max_value=0.499))
    def test_weights_positive_decreasing(self, d):
        w = ln.farima_weights(d, 50)
        assert np.all(w > 0)
        assert np.all(np.diff(w) <= 0)


class TestFarimaPath:
    def test_truncated_acf_matches_oracle(self):
        # The truncated-MA autocorrelation must track the exact recursion;
        # the gap is the truncation tail, small except near d = 0.5.
        for d, tol in ((0.1, 5e-4), (0.25, 5e-3), (0.4, 0.08)):
            w = ln.farima_weights(d, 4 * 4096)
            spec = np.fft.rfft(w, 8 * 4096)
            acv = np.fft.irfft(spec * np.conj(spec))[:11]
            oracle = farima_acv_oracle(d, 10)
            assert np.max(np.abs(acv / acv[0] - oracle / oracle[0])) < tol

    def test_sample_acf_matches_oracle(self):
        d = 0.2
        oracle = farima_acv_oracle(d, 5)
        acfs = np.mean(
            [ln.sample_acf(ln.farima_path(d, 8192, seed=[101, s]), 5) for s in range(20)],
            axis=0,
        )
        assert np.max(np.abs(acfs - oracle / oracle[0])) < 0.03

    def test_slope_recovers_alpha(self):
        alpha = 0.6
        acfs = np.mean(
            [ln.sample_acf(ln.farima_path((1 - alpha) / 2, 8192, seed=[7, s]), 80) for s in range(20)],
            axis=0,
        )
        lags = np.unique(np.round(np.logspace(np.log10(4), np.log10(64), 12)).astype(int))
        assert abs(ln.acf_log_slope(acfs, lags) + alpha) < 0.15

    def test_d_zero_is_exactly_the_innovations(self):
        N, taps = 128, 4 * 128
        path = ln.farima_path(0.0, N, seed=42)
        z = np.random.default_rng(42).standard_normal(N + taps - 1)
        assert np.array_equal(path, z[taps - 1 :])

    def test_d_zero_is_white(self):
        path = ln.farima_path(0.0, 10000, seed=5)
        assert kstest(path, "norm").pvalue > 0.01
        assert abs(ln.sample_acf(path, 1)[1]) < 3 / np.sqrt(10000)

    def test_stationarity_no_burn_in(self):
        # First and second halves should have comparable variance even for
        # strong memory; a missing burn-in shows up as a variance ramp.
        paths = np.array([ln.farima_path(0.4, 2048, seed=[3, s]) for s in range(40)])
        v1 = np.mean(paths[:, :1024] ** 2)
        v2 = np.mean(paths[:, 1024:] ** 2)
        assert 0.8 < v1 / v2 < 1.25

    def test_validation(self):
        with pytest.raises(ParameterError):
            ln.farima_path(0.2, 0)


class TestExactFgn:
    def test_autocovariance_formula(self):
        r = ln.fgn_autocovariance(0.7, 3)
        assert r[0] == 1.0
        assert abs(r[1] - (2**1.4 - 2) / 2) < 1e-14
        assert abs(r[1] - 0.3195079107728942) < 1e-12

    def test_h_half_is_white(self):
        r = ln.fgn_autocovariance(0.5, 5)
        assert np.allclose(r[1:], 0.0, atol=1e-14)
        path = ln.exact_fgn_path(0.5, 8192, seed=1)
        assert abs(ln.sample_acf(path, 1)[1]) < 3 / np.sqrt(8192)

    def test_sample_acf_matches_exact(self):
        H = 0.7
        acfs = np.mean(
            [ln.sample_acf(ln.exact_fgn_path(H, 4096, seed=[13, s]), 3) for s in range(50)],
            axis=0,
        )
        assert np.max(np.abs(acfs - ln.fgn_autocovariance(H, 3))) < 0.02

    def test_unit_variance(self):
        v = np.mean([np.mean(ln.exact_fgn_path(0.8, 2048, seed=[17, s]) ** 2) for s in range(50)])
        assert abs(v - 1.0) < 0.05

    def test_validation(self):
        for H in (0.0, 1.0, -0.2, 1.3):
            with pytest.raises(ParameterError):
                ln.exact_fgn_path(H, 64)


class TestParams:
    def test_mappings_exact(self):
        p = ln.LongMemoryParams(0.8, 0.6)
        assert p.d == ((1 - 0.8) / 2, 0.2)
        assert p.hurst == (0.6, 0.7)
        assert p.alpha_bar == 0.7
        assert p.alpha == (0.8, 0.6)

    def test_validation(self):
        for bad in ((0.0, 0.5), (0.5, 1.2), (-0.1, 0.5)):
            with pytest.raises(ParameterError):
                ln.LongMemoryParams(*bad)


class TestNoiseSheet:
    def test_unit_rms_exact_and_deterministic(self):
        p = ln.LongMemoryParams(0.8, 0.6)
        s1 = ln.noise_sheet(p, 128, seed=9)
        s2 = ln.noise_sheet(p, 128, seed=9)
        s3 = ln.noise_sheet(p, 128, seed=10)
        assert abs(np.mean(s1.values**2) - 1.0) < 1e-12
        assert np.array_equal(s1.values, s2.values)
        assert not np.array_equal(s1.values, s3.values)
        assert s1.construction == "farima-product"
        assert s1.n == 128

    def test_each_construction_matches_its_own_law(self):
        # Both decay like h^-alpha, but the lag-1 constants differ:
        # fARIMA(0,d,0) has rho(1) = d / (1 - d), fGn has 2^(2H-1) - 1.
        p = ln.LongMemoryParams(0.6, 0.6)
        a = ln.noise_sheet(p, 128, seed=1, construction="farima-product")
        b = ln.noise_sheet(p, 128, seed=1, construction="exact-fgn-product")
        assert not np.allclose(a.values, b.values)
        lag = [(1, 0)]
        ra = np.mean([ln.sample_acf_2d(ln.noise_sheet(p, 256, seed=[21, s]).values, lag) for s in range(40)])
        rb = np.mean(
            [
                ln.sample_acf_2d(
                    ln.noise_sheet(p, 256, seed=[22, s], construction="exact-fgn-product").values, lag
                )
                for s in range(40)
            ]
        )
        d = p.d[0]
        assert abs(ra - d / (1 - d)) < 0.04
        assert abs(rb - (2 ** (2 * p.hurst[0] - 1) - 1)) < 0.04

    @pytest.mark.parametrize("construction", ["farima-product", "exact-fgn-product"])
    def test_separable_covariance(self, construction):
        p = ln.LongMemoryParams(0.8, 0.4)
        lags = [(1, 1), (1, 2), (2, 1), (2, 2), (4, 4)]
        joint = []
        prods = []
        for s in range(50):
            v = ln.noise_sheet(p, 256, seed=[31, s], construction=construction).values
            joint.append(ln.sample_acf_2d(v, lags))
            r1 = ln.sample_acf_2d(v, [(h1, 0) for h1, _ in lags])
            r2 = ln.sample_acf_2d(v, [(0, h2) for _, h2 in lags])
            prods.append(r1 * r2)
        residual = np.abs(np.mean(joint, axis=0) - np.mean(prods, axis=0))
        assert residual.max() < 0.05

    def test_white_product_is_iid_product(self):
        p = ln.LongMemoryParams(1.0, 1.0)
        s = ln.noise_sheet(p, 128, seed=4)
        assert abs(ln.sample_acf_2d(s.values, [(1, 0)])[0]) < 0.1
        assert abs(ln.sample_acf_2d(s.values, [(0, 1)])[0]) < 0.1

    def test_validation(self):
        p = ln.LongMemoryParams(0.8, 0.6)
        with pytest.raises(ParameterError, match="construction"):
            ln.noise_sheet(p, 64, construction="mystery")
        with pytest.raises(ParameterError):
            ln.noise_sheet(p, 1)


class TestPartialSum:
    def test_white_noise_variance_near_one(self):
        p = ln.LongMemoryParams(1.0, 1.0)
        xs = [ln.partial_sum_diagnostic(ln.noise_sheet(p, 256, seed=[9, s])) for s in range(200)]
        assert 0.4 < np.var(xs) < 1.8

    def test_scaling_stable_across_sizes(self):
        # The normalization is chosen so the variance neither grows nor decays
        # with N; the ratio between adjacent sizes stays near one.
        p = ln.LongMemoryParams(0.6, 0.8)
        out = {}
        for N in (128, 256, 512):
            xs = [ln.partial_sum_diagnostic(ln.noise_sheet(p, N, seed=[11, s])) for s in range(300)]
            out[N] = np.var(xs)
        assert 0.7 < out[256] / out[128] < 1.45
        assert 0.7 < out[512] / out[256] < 1.45


class TestSampleStatistics:
    def test_acf_basics(self):
        x = np.random.default_rng(0).standard_normal(4096)
        r = ln.sample_acf(x, 10)
        assert r[0] == 1.0
        assert np.max(np.abs(r[1:])) < 4 / np.sqrt(4096)
        with pytest.raises(ParameterError):
            ln.sample_acf(x, 5000)
        with pytest.raises(DegenerateInputError):
            ln.sample_acf(np.zeros(64), 2)

    def test_slope_requires_positive_values(self):
        with pytest.raises(DegenerateInputError):
            ln.acf_log_slope(np.array([1.0, -0.5, -0.5]), np.array([1, 2]))
