import math

import numpy as np
import pytest
from scipy import integrate, stats

from ar1_core import TimeSeries, derive_rng, fit_ar1, simulate_ar1
from data_io import read_series_file
from errors import InvalidArgumentError
from phillips_posterior import (PriorKind, alpha0, equal_tail_interval, hpd_interval, log_alpha0,
                                log_posterior_flat, log_posterior_jeffreys, posterior_curve,
                                reject_unit_root, tail_prob_ge_one)
from student_t import t_cdf


def _alpha0_polynomial(rho, T):
    return sum((T - 1 - k) * rho ** (2 * k) for k in range(T - 1))


class TestAlpha0:
    @pytest.mark.parametrize('rho', [-1.2, -0.7, 0.0, 0.5, 0.999999, 1.0, 1.0000005, 1.01, 1.3])
    def test_matches_polynomial(self, rho):
        T = 12
        assert alpha0(rho, T) == pytest.approx(_alpha0_polynomial(rho, T), rel=1e-9)

    def test_value_at_unity(self):
        T = 200
        assert log_alpha0(1.0, T) == pytest.approx(math.log(T * (T - 1) / 2), rel=1e-14)

    def test_closed_form_inside_unit_circle(self):
        rho, T = 0.6, 40
        w = 1 - rho ** 2
        expected = T / w - (1 - rho ** (2 * T)) / w ** 2
        assert alpha0(rho, T) == pytest.approx(expected, rel=1e-12)

    def test_explosive_values_do_not_overflow(self):
        value = log_alpha0(3.0, 5000)
        assert math.isfinite(value)
        assert value == pytest.approx(5000 * math.log(9.0) - 2 * math.log(8.0), rel=1e-12)

    @pytest.mark.parametrize('rho', [0.99, 0.998, 0.9995, 1.0, 1.0005, 1.002, 1.01])
    def test_matches_polynomial_near_unity_for_long_samples(self, rho):
        T = 500
        assert log_alpha0(rho, T) == pytest.approx(math.log(_alpha0_polynomial(rho, T)), rel=1e-10)

    def test_vector_input_keeps_shape(self):
        out = log_alpha0(np.array([0.1, 1.0, 1.1]), 30)
        assert out.shape == (3,)


class TestDensities:
    def test_flat_is_symmetric_about_rho_hat(self, stationary):
        fit = fit_ar1(stationary)
        d = 0.07
        assert log_posterior_flat(stationary, fit.rho_hat + d) == pytest.approx(
            log_posterior_flat(stationary, fit.rho_hat - d), rel=1e-12)

    def test_jeffreys_adds_half_log_alpha0(self, stationary):
        rho = np.array([0.3, 0.9, 1.05])
        diff = log_posterior_jeffreys(stationary, rho) - log_posterior_flat(stationary, rho)
        np.testing.assert_allclose(diff, 0.5 * log_alpha0(rho, stationary.T), rtol=1e-12)

    def test_jeffreys_needs_three_observations(self):
        with pytest.raises(InvalidArgumentError):
            log_posterior_jeffreys(TimeSeries(0.1, [0.5, -0.2]), 0.5)

    def test_curve_integrates_to_one(self, random_walk):
        curve = posterior_curve(random_walk, PriorKind.JEFFREYS)
        lo, hi = curve.support
        assert curve.mass(lo, hi) == pytest.approx(1.0, rel=1e-8)


class TestTailProbability:
    def test_flat_prior_is_a_t_tail(self, random_walk):
        fit = fit_ar1(random_walk)
        u = (1 - fit.rho_hat) / fit.s_rho
        expected = t_cdf(-u, fit.T - 1)
        assert tail_prob_ge_one(random_walk, PriorKind.FLAT) == pytest.approx(expected, rel=1e-6)

    def test_jeffreys_puts_more_mass_on_unit_root(self, random_walk):
        assert (tail_prob_ge_one(random_walk, PriorKind.JEFFREYS)
                >= tail_prob_ge_one(random_walk, PriorKind.FLAT))

    def test_flat_tail_vanishes_far_from_unity(self):
        series = simulate_ar1(0.2, 200, seed=17)
        assert tail_prob_ge_one(series, PriorKind.FLAT) < 1e-10

    def test_increases_with_persistence(self):
        means = []
        for rho in (0.5, 0.9, 1.0):
            probs = [tail_prob_ge_one(simulate_ar1(rho, 50, seed=i), PriorKind.FLAT) for i in range(40)]
            means.append(np.mean(probs))
        assert means[0] < means[1] < means[2]

    def test_finite_for_long_samples(self):
        series = simulate_ar1(0.99, 1000, seed=3)
        prob = tail_prob_ge_one(series)
        assert 0.0 <= prob <= 1.0

    def test_edge_one_ulp_from_rho_hat(self):
        # rho_hat of this draw lands one ulp from a panel edge
        series = simulate_ar1(1.0, 50, seed=derive_rng(99, 120))
        for kind in PriorKind:
            assert 0.0 <= tail_prob_ge_one(series, kind) <= 1.0
        lo, hi = equal_tail_interval(series, PriorKind.JEFFREYS)
        assert lo < hi

    def test_explosive_tail_beyond_support_is_counted(self):
        # short stationary sample: the Jeffreys density has a second mode near 1 / rho_hat,
        # largely outside the default support
        series = simulate_ar1(0.3, 30, seed=4)
        curve = posterior_curve(series, PriorKind.JEFFREYS)
        peak = float(curve.log_density(curve.fit.rho_hat))

        def density(r):
            return math.exp(float(curve.log_density(r)) - peak)

        def piece(a, b, points=None):
            return integrate.quad(density, a, b, points=points, epsabs=0.0, epsrel=1e-10, limit=400)[0]

        rho_hat = curve.fit.rho_hat
        below = piece(-np.inf, -1.0) + piece(-1.0, 1.0, points=[rho_hat])
        modes = [1.0 / rho_hat] if rho_hat > 0.25 else None
        above = piece(1.0, 4.0, points=modes) + piece(4.0, np.inf)
        expected = above / (below + above)

        prob = tail_prob_ge_one(series, PriorKind.JEFFREYS)
        assert prob == pytest.approx(expected, abs=1e-6)
        assert prob > curve.mass(1.0, curve.support[1]) + 1e-3

    def test_reject_unit_root(self, white_noise, random_walk_path):
        assert reject_unit_root(white_noise, PriorKind.FLAT)
        assert not reject_unit_root(read_series_file(random_walk_path), PriorKind.FLAT)
        with pytest.raises(InvalidArgumentError):
            reject_unit_root(white_noise, threshold=1.0)


class TestCredibleSets:
    def test_flat_hpd_is_the_t_interval(self, random_walk):
        fit = fit_ar1(random_walk)
        half = stats.t.ppf(0.975, fit.T - 1) * fit.s_rho
        intervals = hpd_interval(random_walk, PriorKind.FLAT, alpha=0.05)
        assert len(intervals) == 1
        lo, hi = intervals[0]
        assert lo == pytest.approx(fit.rho_hat - half, abs=0.02 * fit.s_rho)
        assert hi == pytest.approx(fit.rho_hat + half, abs=0.02 * fit.s_rho)

    def test_flat_equal_tail_interval(self, random_walk):
        fit = fit_ar1(random_walk)
        half = stats.t.ppf(0.975, fit.T - 1) * fit.s_rho
        lo, hi = equal_tail_interval(random_walk, PriorKind.FLAT, alpha=0.05)
        assert lo == pytest.approx(fit.rho_hat - half, abs=1e-6)
        assert hi == pytest.approx(fit.rho_hat + half, abs=1e-6)

    def test_unit_root_outside_hpd_for_stationary_data(self):
        series = simulate_ar1(0.2, 200, seed=17)
        intervals = hpd_interval(series, PriorKind.JEFFREYS)
        assert not any(lo <= 1.0 <= hi for lo, hi in intervals)

    def test_alpha_validation(self, stationary):
        with pytest.raises(InvalidArgumentError):
            hpd_interval(stationary, alpha=0.0)
        with pytest.raises(InvalidArgumentError):
            equal_tail_interval(stationary, alpha=1.0)
