import math

import numpy as np
import pytest

from ar1_core import TimeSeries, fit_ar1, simulate_ar1
from errors import InvalidArgumentError
from evidence import LOG_BF_CAP, EvidenceMethod
from student_t import t_cdf
from svd import svd_data_driven, svd_fixed


def test_tau_is_distance_to_unity(stationary):
    fit = fit_ar1(stationary)
    result = svd_fixed(stationary)
    assert result.tau == pytest.approx((1.0 - fit.rho_hat) / fit.s_rho)
    assert result.evidence.method == EvidenceMethod.SVD


def test_wider_stationary_interval_favours_unit_root(random_walk):
    values = [svd_fixed(random_walk, a=a).evidence.log_bf_01 for a in (0.5, 0.0, -0.5, -1.0)]
    assert all(later > earlier for earlier, later in zip(values, values[1:]))


@pytest.mark.parametrize('c', [1e-3, 7.0, 1e4])
def test_scale_invariance(stationary, c):
    scaled = stationary.scaled(c)
    assert svd_fixed(scaled).evidence.log_bf_01 == pytest.approx(
        svd_fixed(stationary).evidence.log_bf_01, rel=1e-10)
    assert svd_data_driven(scaled).evidence.log_bf_01 == pytest.approx(
        svd_data_driven(stationary).evidence.log_bf_01, rel=1e-10)


def test_fixed_bound_validation(stationary):
    with pytest.raises(InvalidArgumentError):
        svd_fixed(stationary, a=-1.5)
    with pytest.raises(InvalidArgumentError):
        svd_fixed(stationary, a=1.0)
    with pytest.raises(InvalidArgumentError):
        svd_fixed(stationary, a=math.nan)


def test_data_driven_bound_keeps_one_minus_alpha_of_stationary_mass(random_walk):
    alpha = 0.05
    result = svd_data_driven(random_walk, alpha=alpha)
    fit = fit_ar1(random_walk)
    nu = fit.T - 1
    u = result.tau
    below_one = t_cdf(u, nu)
    kept = below_one - t_cdf((result.a - fit.rho_hat) / fit.s_rho, nu)
    assert kept == pytest.approx((1 - alpha) * below_one, rel=1e-9)
    assert -1.0 <= result.a < 1.0
    assert not result.clamped and not result.invalid_interval


def test_data_driven_omits_the_one_minus_alpha_factor(random_walk):
    alpha = 0.05
    star = svd_data_driven(random_walk, alpha=alpha)
    fixed = svd_fixed(random_walk, a=star.a)
    assert star.evidence.log_bf_01 - fixed.evidence.log_bf_01 == pytest.approx(math.log(1 - alpha), rel=1e-8)


@pytest.mark.parametrize('k', range(10))
def test_bound_stays_below_one_on_stationary_samples(k):
    series = simulate_ar1(0.2 + 0.08 * k, 100, seed=k)
    result = svd_data_driven(series)
    assert result.a < 1.0
    assert math.isfinite(result.evidence.log_bf_01)


def test_alpha_outside_usual_range_warns(random_walk, caplog):
    with caplog.at_level('WARNING', logger='svd'):
        svd_data_driven(random_walk, alpha=0.3)
    assert 'outside the usual range' in caplog.text


def test_alpha_must_be_a_probability(random_walk):
    with pytest.raises(InvalidArgumentError):
        svd_data_driven(random_walk, alpha=0.0)


def test_bound_below_minus_one_is_clamped():
    # alternating series with slowly growing amplitude: rho_hat a little below -1
    t = np.arange(1, 31)
    series = TimeSeries(1.0, (-1.0) ** t * (1.0 + 0.01 * t))
    result = svd_data_driven(series)
    assert result.clamped
    assert result.a == -1.0
    assert result.evidence.method == EvidenceMethod.SVD_STAR


def test_explosive_sample_saturates_toward_unit_root():
    t = np.arange(1, 101)
    series = TimeSeries(1.0, 1.05 ** t * (1.0 + 1e-7 * (-1.0) ** t))
    result = svd_data_driven(series)
    assert result.invalid_interval
    assert result.evidence.saturated
    assert result.evidence.log_bf_01 == LOG_BF_CAP


def test_white_noise_rejects_unit_root(white_noise):
    assert svd_fixed(white_noise).evidence.posterior_prob < 0.01
    assert svd_data_driven(white_noise).evidence.posterior_prob < 0.01
