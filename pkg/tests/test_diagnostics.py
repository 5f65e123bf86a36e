"""Diagnostics tests: circular reductions, autocovariance, ESS, R-hat, HZ."""

import math

import numpy as np
import pytest

from circembed import (DegenerateTraceError, ParameterTrace, UndefinedMeanError,
                       center_trace, circular_mean, effective_sample_size,
                       henze_zirkler_test, normalized_autocovariance, split_rhat)


def ar1(rng, rho, size, chains=1):
    """Stationary AR(1) with unit marginal variance."""
    out = np.empty((chains, size))
    scale = math.sqrt(1 - rho * rho)
    for c in range(chains):
        x = rng.normal()
        for t in range(size):
            x = rho * x + scale * rng.normal()
            out[c, t] = x
    return out


class TestCircularMean:
    def test_single_point(self):
        assert circular_mean([1.1]) == pytest.approx(1.1)

    def test_symmetric_pair(self):
        assert circular_mean([-0.8, 0.8]) == pytest.approx(0.0, abs=1e-12)

    def test_quarter(self):
        assert circular_mean([0.0, math.pi / 2]) == pytest.approx(math.pi / 4)

    def test_wraparound_beats_linear_mean(self):
        # points straddling the -pi/pi seam average near the seam, not near 0
        m = circular_mean([math.pi - 0.1, -math.pi + 0.1])
        assert abs(m) == pytest.approx(math.pi, abs=1e-9)

    def test_antipodal_undefined(self):
        with pytest.raises(UndefinedMeanError):
            circular_mean([0.0, math.pi])


class TestCenterTrace:
    def test_linear_passthrough(self, rng):
        trace = ParameterTrace(rng.normal(size=(2, 50)), kind="linear")
        out = center_trace(trace)
        np.testing.assert_array_equal(out.values, trace.values)

    def test_constant_circular_gives_zeros(self):
        trace = ParameterTrace(np.full((2, 10), 0.7), kind="circular")
        np.testing.assert_allclose(center_trace(trace).values, 0.0, atol=1e-12)

    def test_zero_mean_values_unchanged(self):
        trace = ParameterTrace(np.array([[0.1, -0.1, 0.3, -0.3]]), kind="circular")
        np.testing.assert_allclose(center_trace(trace).values,
                                   [[0.1, -0.1, 0.3, -0.3]], atol=1e-12)

    def test_rotation_invariance(self, rng):
        values = rng.uniform(-1.0, 1.0, size=(3, 200))
        base = center_trace(ParameterTrace(values, kind="circular")).values
        for c in (0.5, 2.0, -3.0):
            rotated = (values + c + math.pi) % (2 * math.pi) - math.pi
            out = center_trace(ParameterTrace(rotated, kind="circular")).values
            np.testing.assert_allclose(out, base, atol=1e-12)

    def test_range(self, rng):
        values = rng.uniform(-math.pi, math.pi, size=(2, 500))
        out = center_trace(ParameterTrace(values, kind="circular")).values
        assert np.all(out > -math.pi) and np.all(out <= math.pi)


class TestNormalizedAutocovariance:
    def test_lag_zero_is_exactly_one(self, rng):
        trace = ParameterTrace(rng.normal(size=(3, 300)))
        rho = normalized_autocovariance(trace, 20)
        assert rho[0] == 1.0

    def test_iid_is_near_zero(self, rng):
        s = 4000
        trace = ParameterTrace(rng.normal(size=(4, s)))
        rho = normalized_autocovariance(trace, 10)
        assert np.all(np.abs(rho[1:]) < 3 / math.sqrt(s))

    def test_ar1_matches_analytic_decay(self, rng):
        """Chain-averaged estimate vs rho^lag, within 3 SE of the chain spread."""
        rho_true, chains, s = 0.9, 40, 2000
        values = ar1(rng, rho_true, s, chains)
        mean_rho = normalized_autocovariance(ParameterTrace(values), 20)
        per_chain = np.stack([
            normalized_autocovariance(ParameterTrace(values[c:c + 1]), 20)
            for c in range(chains)])
        for lag in (1, 2, 5, 10):
            se = per_chain[:, lag].std(ddof=1) / math.sqrt(chains)
            # small-sample bias of the autocovariance estimator ~ O(1/s)
            assert abs(mean_rho[lag] - rho_true ** lag) < 3 * se + 5.0 / s

    def test_degenerate_trace(self):
        with pytest.raises(DegenerateTraceError):
            normalized_autocovariance(ParameterTrace(np.ones((2, 50))), 5)

    def test_max_lag_validation(self, rng):
        trace = ParameterTrace(rng.normal(size=(1, 10)))
        with pytest.raises(ValueError):
            normalized_autocovariance(trace, 10)


class TestEffectiveSampleSize:
    def test_iid_within_ten_percent(self, rng):
        """Median over repeated seeds lands within 10% of the sample count."""
        chains, s = 4, 1000
        ratios = []
        for _ in range(20):
            trace = ParameterTrace(rng.normal(size=(chains, s)))
            ratios.append(effective_sample_size(trace) / (chains * s))
        assert abs(np.median(ratios) - 1.0) < 0.10

    def test_duplicated_draws_halve_ess(self, rng):
        chains, s = 4, 1000
        ratios = []
        for _ in range(20):
            base = rng.normal(size=(chains, s))
            doubled = np.repeat(base, 2, axis=1)
            ratios.append(effective_sample_size(ParameterTrace(doubled))
                          / (chains * s))
        assert abs(np.median(ratios) - 1.0) < 0.15  # ESS ~ half of 2s draws

    def test_entirely_correlated_is_small(self, rng):
        x = np.cumsum(rng.normal(size=(4, 500)), axis=1)  # random walk
        ess = effective_sample_size(ParameterTrace(x))
        assert ess < 200

    def test_degenerate(self):
        with pytest.raises(DegenerateTraceError):
            effective_sample_size(ParameterTrace(np.zeros((4, 100))))

    def test_needs_enough_draws(self, rng):
        with pytest.raises(ValueError):
            effective_sample_size(ParameterTrace(rng.normal(size=(1, 50))))


class TestSplitRhat:
    def test_well_mixed_near_one(self, rng):
        values = []
        for _ in range(20):
            trace = ParameterTrace(rng.normal(size=(4, 2000)))
            values.append(split_rhat(trace))
        assert np.median(values) == pytest.approx(1.0, abs=0.01)
        assert max(values) < 1.02

    def test_hard_lower_bound(self, rng):
        # R-hat^2 = (s-1)/s + B/(s W) >= (s-1)/s for any trace
        for _ in range(50):
            s = int(rng.integers(10, 500))
            trace = ParameterTrace(rng.normal(size=(2, s)))
            assert split_rhat(trace) >= math.sqrt((s // 2 - 1) / (s // 2))

    def test_separated_chains_flagged(self, rng):
        a = rng.normal(0.0, 1.0, size=(2, 500))
        b = rng.normal(5.0, 1.0, size=(2, 500))
        trace = ParameterTrace(np.concatenate([a, b]))
        assert split_rhat(trace) > 1.1

    def test_within_chain_drift_flagged(self, rng):
        # halves of a drifting chain disagree even when chains look alike
        drift = np.linspace(0, 4, 800)
        values = rng.normal(size=(4, 800)) + drift
        assert split_rhat(ParameterTrace(values)) > 1.1

    def test_constant_trace_errors(self):
        with pytest.raises(DegenerateTraceError):
            split_rhat(ParameterTrace(np.full((4, 100), 2.5)))

    def test_affine_invariance_exact(self, rng):
        values = rng.normal(size=(4, 400))
        base = split_rhat(ParameterTrace(values))
        for a, b in ((2.0, 1.0), (-3.0, 0.5), (1e-6, -7.0)):
            assert split_rhat(ParameterTrace(a * values + b)) == base

    def test_plain_variant_differs_под_skew(self, rng):
        values = np.exp(rng.normal(size=(4, 400)))
        ranked = split_rhat(ParameterTrace(values))
        plain = split_rhat(ParameterTrace(values), rank_normalize=False)
        assert ranked != plain


class TestHenzeZirkler:
    def test_null_calibration(self, rng):
        """Rejection rate at the 5% level sits near 5% under the null."""
        rejections = 0
        n_rep = 200
        for _ in range(n_rep):
            x = rng.normal(size=(300, 2))
            _, p = henze_zirkler_test(x)
            rejections += p < 0.05
        rate = rejections / n_rep
        assert 0.01 < rate < 0.11

    def test_pvalues_roughly_uniform(self, rng):
        pvals = [henze_zirkler_test(rng.normal(size=(200, 2)))[1] for _ in range(200)]
        assert 0.3 < np.mean(pvals) < 0.7

    def test_bimodal_mixture_rejected(self, rng):
        half = 500
        x = np.concatenate([rng.normal(-3, 1, size=(half, 2)),
                            rng.normal(3, 1, size=(half, 2))])
        _, p = henze_zirkler_test(x)
        assert p < 0.001

    def test_statistic_positive(self, rng):
        stat, _ = henze_zirkler_test(rng.normal(size=(100, 3)))
        assert stat > 0

    def test_preconditions(self, rng):
        with pytest.raises(ValueError):
            henze_zirkler_test(rng.normal(size=(3, 2)))
        x = rng.normal(size=(50, 1)) @ np.ones((1, 2))  # rank-1 covariance
        with pytest.raises(ValueError):
            henze_zirkler_test(x)
