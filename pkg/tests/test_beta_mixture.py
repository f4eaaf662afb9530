import json
import math
import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose

from w2alink.beta_mixture import (RECORD_FIELDS, BetaComponent, BetaMixture, EMConfig, dump_records, em_fit,
                                  load_records, mixture_cdf, mixture_pdf, single_beta_mle, weighted_beta_mle)
from w2alink.montecarlo import ks_distance, simulate
from w2alink.numerics import integrate
from w2alink.pointing import LinkGeometry
from w2alink.scenario import Environment, build_scenario

UNIFORM = BetaMixture(1.0, BetaComponent(1.0, 1.0), BetaComponent(1.0, 1.0))
shape = st.floats(0.3, 12.0)
mixtures = st.builds(lambda w, a1, b1, a2, b2: BetaMixture(w, BetaComponent(a1, b1), BetaComponent(a2, b2)),
                     st.floats(0.0, 1.0), shape, shape, shape, shape)


def synthetic(n, seed=0):
    rng = np.random.default_rng(seed)
    pick = rng.random(n) < 0.3
    return np.where(pick, rng.beta(0.8, 3.0, n), rng.beta(6.0, 1.2, n))


def test_type_invariants():
    with pytest.raises(ValueError):
        BetaComponent(0.0, 1.0)
    with pytest.raises(ValueError):
        BetaMixture(1.5, BetaComponent(1, 1), BetaComponent(1, 1))
    m = BetaMixture(0.3, BetaComponent(1, 2), BetaComponent(3, 1))
    assert sum(m.weights) == 1.0
    with pytest.raises(ValueError):
        EMConfig(max_iters=0)
    with pytest.raises(ValueError):
        EMConfig(clamp_eps=0.5)


def test_uniform_mixture():
    x = np.linspace(0, 1, 11)
    assert_allclose(mixture_pdf(x, UNIFORM), 1.0)
    assert_allclose(mixture_cdf(x, UNIFORM), x, atol=1e-15)


def test_boundaries():
    m = BetaMixture(0.4, BetaComponent(2.0, 3.0), BetaComponent(5.0, 1.5))
    assert mixture_pdf(0.0, m) == 0.0
    assert mixture_cdf(0.0, m) == 0.0 and mixture_cdf(1.0, m) == 1.0
    for bad in (-0.1, 1.1, math.nan):
        with pytest.raises(ValueError):
            mixture_pdf(bad, m)
        with pytest.raises(ValueError):
            mixture_cdf(bad, m)


def test_pdf_normalization_and_cdf_by_quadrature():
    m = BetaMixture(0.35, BetaComponent(0.7, 2.5), BetaComponent(4.0, 1.3))
    assert abs(integrate(lambda x: mixture_pdf(x, m), 0.0, 1.0, tol=1e-11) - 1.0) <= 1e-8
    assert abs(mixture_cdf(0.4, m) - integrate(lambda x: mixture_pdf(x, m), 0.0, 0.4, tol=1e-11)) <= 1e-9


def test_cdf_matches_quadrature_for_random_mixtures():
    rng = random.Random(3)
    for _ in range(100):
        m = BetaMixture(rng.random(), BetaComponent(rng.uniform(0.5, 10), rng.uniform(0.5, 10)),
                        BetaComponent(rng.uniform(0.5, 10), rng.uniform(0.5, 10)))
        x = rng.uniform(0.01, 0.99)
        quad = integrate(lambda t: mixture_pdf(t, m), 0.0, x, tol=1e-11)
        assert abs(mixture_cdf(x, m) - quad) <= 1e-8


@given(mixtures, st.floats(0.001, 0.999))
def test_label_symmetry(m, x):
    swapped = BetaMixture(1.0 - m.w1, m.c2, m.c1)
    assert math.isclose(mixture_pdf(x, m), mixture_pdf(x, swapped), rel_tol=1e-12, abs_tol=1e-300)
    c = m.canonical()
    assert c.c1.mean <= c.c2.mean
    assert math.isclose(mixture_pdf(x, c), mixture_pdf(x, m), rel_tol=1e-12, abs_tol=1e-300)


@settings(max_examples=50)
@given(mixtures, st.floats(0, 1), st.floats(0, 1))
def test_cdf_monotone(m, x1, x2):
    lo, hi = sorted((x1, x2))
    assert mixture_cdf(lo, m) <= mixture_cdf(hi, m) + 1e-12


def test_weighted_mle_is_stationary():
    rng = np.random.default_rng(1)
    x = rng.beta(2.0, 7.0, 50_000)
    c = weighted_beta_mle(float(x.size), float(np.log(x).sum()), float(np.log1p(-x).sum()),
                          BetaComponent(1.0, 1.0), max_iter=200)
    assert abs(c.alpha - 2.0) <= 0.05 and abs(c.beta - 7.0) <= 0.2


def test_synthetic_recovery():
    res = em_fit(synthetic(100_000))
    m = res.mixture
    assert res.converged and res.monotone and not res.collapsed
    assert abs(m.w1 - 0.3) <= 0.02
    for got, want in ((m.c1.alpha, 0.8), (m.c1.beta, 3.0), (m.c2.alpha, 6.0), (m.c2.beta, 1.2)):
        assert abs(got / want - 1.0) <= 0.05


def test_single_population_collapses_to_single_beta_mle():
    x = np.random.default_rng(2).beta(2.0, 5.0, 20_000)
    res = em_fit(x)
    assert res.collapsed and res.mixture.w1 == 1.0
    single = single_beta_mle(x)
    assert math.isclose(res.mixture.c1.alpha, single.alpha, rel_tol=1e-9)
    assert math.isclose(res.mixture.c1.beta, single.beta, rel_tol=1e-9)


def test_loglik_trace_nondecreasing_each_iteration():
    res = em_fit(synthetic(20_000, seed=4))
    tr = res.loglik_trace
    assert len(tr) > 2
    assert all(b >= a - 1e-9 * abs(a) for a, b in zip(tr, tr[1:]))


def test_non_convergence_reports_best_iterate():
    res = em_fit(synthetic(5_000, seed=5), EMConfig(max_iters=3))
    assert not res.converged and res.iterations == 3
    assert res.loglik == res.loglik_trace[-1]


def test_em_preconditions():
    with pytest.raises(ValueError):
        em_fit(np.full(100, 0.5))
    with pytest.raises(ValueError):
        em_fit(np.r_[synthetic(1000), np.nan])


def test_shapes_stay_finite_away_from_boundaries():
    x = 0.05 + 0.9 * synthetic(20_000, seed=6)
    res = em_fit(x)
    for c in res.mixture.components:
        assert c.alpha < 1e4 and c.beta < 1e4


def test_em_is_deterministic():
    x = synthetic(10_000, seed=7)
    assert em_fit(x).mixture == em_fit(x).mixture


def test_record_roundtrip():
    m = BetaMixture(0.25, BetaComponent(0.5, 2.0), BetaComponent(3.0, 1.1))
    rec = m.to_record(loglik=12.5, n_samples=100, wind_speed=10.0, z_a=5.0, z_w=10.0)
    assert set(RECORD_FIELDS) <= set(rec)
    back = load_records(dump_records([rec]))
    assert BetaMixture.from_record(back[0]) == m
    assert json.loads(dump_records([rec]))["mixtures"][0]["alpha2"] == 3.0
    with pytest.raises(ValueError):
        BetaMixture.from_record({"w1": 0.5})


def test_channel_pointing_loss_fit_quality():
    scn = build_scenario(LinkGeometry(z_w=10.0, z_a=5.0, theta_FoV=60.0), Environment(10.0))
    hpn = simulate(scn, 200_000, seed=9).h_PN()
    res = em_fit(hpn)
    assert res.monotone
    assert ks_distance(hpn, lambda t: mixture_cdf(t, res.mixture)) <= 0.02
