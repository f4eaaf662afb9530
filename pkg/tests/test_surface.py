import math
import warnings

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

from w2alink.numerics import RandomStream, WeibullParams, weibull_cdf, weibull_quantile
from w2alink.montecarlo import ks_distance
from w2alink.surface import (FitError, RefractiveIndices, WindRangeWarning, aoa_from_incidence,
                             aoa_model_for_wind, fit_weibull_mle, incidence_from_aoa, incidence_model_for_wind,
                             sample_incidence, sample_incidence_batch, snell_refract)

N = RefractiveIndices()
THETA_C = N.critical_angle


def test_critical_angle():
    assert abs(THETA_C - math.degrees(math.asin(1 / 1.33))) <= 1e-12
    assert abs(THETA_C - 48.75) <= 0.01


def test_refractive_indices_validation():
    with pytest.raises(ValueError):
        RefractiveIndices(1.0, 1.33)


@pytest.mark.parametrize("U, k, lam", [(10.0, 1.8164, 16.0545), (14.0, 1.8448, 17.0169)])
def test_incidence_regression(U, k, lam):
    m = incidence_model_for_wind(U)
    assert abs(m.params.shape - k) <= 1e-12
    assert abs(m.params.scale - lam) <= 1e-12


def test_incidence_regression_out_of_range_warns():
    with pytest.warns(WindRangeWarning):
        m = incidence_model_for_wind(0.0)
    assert (m.params.shape, m.params.scale) == (1.7454, 13.6485)


@pytest.mark.parametrize("U, lam", [(14.0, 6.0871), (6.0, 5.3215)])
def test_aoa_regression(U, lam):
    m = aoa_model_for_wind(U)
    assert abs(m.params.scale - lam) <= 1e-12
    assert m.params.shape == 1.60
    assert m.critical_angle == THETA_C


def test_in_range_wind_is_silent():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        incidence_model_for_wind(6.0)
        aoa_model_for_wind(15.0)


def test_snell_examples():
    assert snell_refract(0.0) == 0.0
    with mpmath.workdps(30):
        expected = float(mpmath.degrees(mpmath.asin(mpmath.mpf("1.33") * mpmath.sin(mpmath.radians(30)))))
    assert abs(snell_refract(30.0) - expected) <= 1e-12
    assert abs(snell_refract(30.0) - 41.68) <= 0.01
    assert abs(snell_refract(THETA_C) - 90.0) <= 1e-6
    assert snell_refract(THETA_C + 1e-9) is None
    assert snell_refract(50.0) is None


@pytest.mark.parametrize("bad", [-1.0, 90.0, 120.0])
def test_snell_domain(bad):
    with pytest.raises(ValueError):
        snell_refract(bad)


def test_aoa_examples():
    assert aoa_from_incidence(0.0) == 0.0
    assert abs(aoa_from_incidence(30.0) - (snell_refract(30.0) - 30.0)) <= 1e-14
    assert abs(aoa_from_incidence(30.0) - 11.68) <= 0.01
    assert aoa_from_incidence(50.0) is None


@given(st.floats(1e-6, THETA_C - 1e-9))
def test_refraction_bends_away_from_normal(theta):
    assert snell_refract(theta) > theta


@given(st.floats(0, THETA_C), st.floats(0, THETA_C))
def test_aoa_monotone(t1, t2):
    lo, hi = sorted((t1, t2))
    assert aoa_from_incidence(lo) <= aoa_from_incidence(hi)


def test_aoa_approaches_limit_at_critical_angle():
    assert abs(aoa_from_incidence(THETA_C) - (90.0 - THETA_C)) <= 1e-6
    assert abs(aoa_from_incidence(THETA_C - 1e-10) - (90.0 - THETA_C)) <= 1e-3


@given(st.floats(0, THETA_C - 1e-6))
def test_inverse_map_roundtrip(theta):
    assert abs(incidence_from_aoa(aoa_from_incidence(theta)) - theta) <= 1e-9


def test_inverse_map_domain():
    with pytest.raises(ValueError):
        incidence_from_aoa(90.0 - THETA_C + 0.1)


def test_sampling_is_reproducible():
    m = incidence_model_for_wind(10.0)
    a = [sample_incidence(m, RandomStream(3, 0)) for _ in range(1)]
    s1, s2 = RandomStream(3, 0), RandomStream(3, 0)
    assert [sample_incidence(m, s1) for _ in range(10)] == [sample_incidence(m, s2) for _ in range(10)]
    assert a[0] == sample_incidence_batch(m, RandomStream(3, 0), 1)[0]


def test_sampling_matches_weibull_law():
    m = incidence_model_for_wind(10.0)
    x = sample_incidence_batch(m, RandomStream(1, 0), 200_000)
    assert ks_distance(x, lambda t: weibull_cdf(m.params, t)) <= 0.01
    assert abs(x.mean() / m.params.mean - 1.0) <= 0.01
    p_tir = math.exp(-((THETA_C / m.params.scale) ** m.params.shape))
    se = math.sqrt(p_tir * (1 - p_tir) / x.size)
    assert abs(np.mean(x > THETA_C) - p_tir) <= 3 * se


def test_mle_recovers_known_generator():
    params = WeibullParams(1.60, 5.8)
    u = RandomStream(2, 0).uniforms(200_000)
    fit = fit_weibull_mle(weibull_quantile(params, u))
    assert abs(fit.params.shape - 1.60) <= 0.02
    assert abs(fit.params.scale - 5.8) <= 0.05
    assert fit.r2 > 0.99 and fit.n_samples == 200_000


def test_mle_degenerate_and_small_inputs():
    with pytest.raises(FitError):
        fit_weibull_mle(np.full(500, 3.0))
    with pytest.raises(ValueError):
        fit_weibull_mle(np.linspace(1, 2, 50))
    with pytest.raises(ValueError):
        fit_weibull_mle(np.r_[np.linspace(1, 2, 200), -1.0])


def test_mle_on_arrival_angles_near_regression():
    m = incidence_model_for_wind(10.0)
    theta_I = sample_incidence_batch(m, RandomStream(4, 0), 200_000)
    theta_A = np.array([aoa_from_incidence(t) for t in theta_I if t <= THETA_C])
    fit = fit_weibull_mle(theta_A)
    assert abs(fit.params.shape - 1.60) <= 0.1
    assert abs(fit.params.scale - aoa_model_for_wind(10.0).params.scale) <= 0.1
