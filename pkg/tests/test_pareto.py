import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, stats

from bvpa.errors import ConvergenceError, DegenerateDataError
from bvpa.pareto import (
    ParetoParams,
    location_mle,
    pareto_mle,
    pareto_pdf,
    pareto_quantile,
    pareto_sample,
    pareto_sf,
    scale_fixed_point,
    shape_given_scale,
)

triples = st.builds(
    ParetoParams,
    mu=st.floats(-100, 100),
    sigma=st.floats(0.01, 100),
    alpha=st.floats(0.2, 5),
)


@pytest.mark.parametrize(
    "p, x, expected",
    [
        (ParetoParams(0, 1, 2), 0.0, 1.0),
        (ParetoParams(0, 1, 2), 1.0, 0.25),
        (ParetoParams(1, 0.5, 1), 2.0, 1 / 3),
        (ParetoParams(0, 1, 2), -5.0, 1.0),
    ],
)
def test_sf_values(p, x, expected):
    assert pareto_sf(p, x) == pytest.approx(expected, rel=1e-15)


def test_pdf_values():
    p = ParetoParams(0, 1, 2)
    assert pareto_pdf(p, 0.0) == 2.0
    assert pareto_pdf(p, 1.0) == pytest.approx(0.25)
    assert pareto_pdf(p, -0.1) == 0.0


def test_pdf_integrates_to_one():
    p = ParetoParams(0, 1, 2)
    total, _ = integrate.quad(lambda x: pareto_pdf(p, x), 0, np.inf, epsabs=1e-12)
    assert abs(total - 1.0) < 1e-8


@settings(max_examples=40, deadline=None)
@given(triples)
def test_pdf_mass_random_triples(p):
    # substitute x = mu + sigma * z to keep the quadrature scale-free
    total, _ = integrate.quad(lambda z: p.sigma * pareto_pdf(p, p.mu + p.sigma * z), 0, np.inf,
                              epsabs=1e-12, limit=200)
    assert abs(total - 1.0) < 1e-6


def test_pdf_is_negative_sf_derivative():
    p = ParetoParams(0.3, 1.7, 1.4)
    for x in (0.5, 1.0, 4.0, 30.0):
        h = 1e-6 * max(1.0, x)
        fd = -(pareto_sf(p, x + h) - pareto_sf(p, x - h)) / (2 * h)
        assert fd == pytest.approx(pareto_pdf(p, x), rel=1e-6)


@settings(max_examples=60, deadline=None)
@given(triples, st.lists(st.floats(-200, 1e4), min_size=2, max_size=30))
def test_sf_monotone(p, xs):
    xs = np.sort(xs)
    s = pareto_sf(p, xs)
    assert np.all(np.diff(s) <= 0)


def test_quantile_values():
    assert pareto_quantile(ParetoParams(0, 1, 1), 0.5) == pytest.approx(1.0)
    assert pareto_quantile(ParetoParams(0, 1, 2), 0.75) == pytest.approx(1.0)


@pytest.mark.parametrize("u", [0.0, 1.0, -0.1, 1.5])
def test_quantile_domain(u):
    with pytest.raises(ValueError):
        pareto_quantile(ParetoParams(0, 1, 1), u)


def test_quantile_sf_round_trip():
    rng = np.random.default_rng(7)
    p = ParetoParams(2.0, 0.7, 1.9)
    u = rng.uniform(0.001, 0.999, 100)
    np.testing.assert_allclose(pareto_sf(p, pareto_quantile(p, u)), 1 - u, rtol=1e-12)


@settings(max_examples=60, deadline=None)
@given(triples, st.floats(1e-3, 1e3))
def test_quantile_inverts_sf(p, z):
    # keep 1 - sf well conditioned: its absolute rounding error is amplified by 1/sf
    z = min(z, 1e-4 ** (-1 / p.alpha) - 1)
    x = p.mu + p.sigma * z
    back = pareto_quantile(p, 1.0 - pareto_sf(p, x))
    assert back == pytest.approx(x, rel=1e-10, abs=1e-10 * p.sigma)


def test_sample_empty_and_deterministic():
    p = ParetoParams(0, 1, 2)
    assert pareto_sample(p, 0, seed=1).size == 0
    np.testing.assert_array_equal(pareto_sample(p, 50, seed=3), pareto_sample(p, 50, seed=3))


def test_sample_ks():
    p = ParetoParams(0, 1, 2)
    x = pareto_sample(p, 10_000, seed=11)
    d = stats.kstest(x, lambda t: 1 - pareto_sf(p, t)).statistic
    assert d < 0.02


def test_mle_minimum_rule():
    assert location_mle([1.0, 2.0, 3.0]) == 1.0
    x = 1.0 + pareto_sample(ParetoParams(0, 1, 2), 60, seed=0)
    assert pareto_mle(x).mu == x.min()


def test_mle_no_finite_maximizer():
    # coefficient of variation below 1: the likelihood increases towards the exponential limit
    with pytest.raises(ConvergenceError):
        pareto_mle([1.0, 2.0, 3.0])


def test_mle_consistency():
    x = pareto_sample(ParetoParams(0, 1, 2), 10_000, seed=5)
    fit = pareto_mle(x)
    assert fit.mu == x.min()
    assert 0.9 < fit.sigma < 1.1
    assert 1.85 < fit.alpha < 2.15


def _residuals(x, fit):
    y = np.asarray(x) - fit.mu
    r_sigma = abs(scale_fixed_point(y, fit.sigma, fit.alpha) - fit.sigma) / fit.sigma
    r_alpha = abs(shape_given_scale(y, fit.sigma) - fit.alpha) / fit.alpha
    return r_sigma, r_alpha


def test_mle_fixed_point_residual():
    x = pareto_sample(ParetoParams(3, 2, 1.5), 500, seed=2)
    assert max(_residuals(x, pareto_mle(x))) < 1e-6


def test_mle_location_equivariance():
    x = pareto_sample(ParetoParams(0, 1, 1.7), 400, seed=9)
    a, b = pareto_mle(x), pareto_mle(x + 12.5)
    assert b.mu == a.mu + 12.5
    assert b.sigma == pytest.approx(a.sigma, rel=1e-6)
    assert b.alpha == pytest.approx(a.alpha, rel=1e-6)


def test_mle_scale_equivariance():
    x = pareto_sample(ParetoParams(0.5, 1, 1.7), 400, seed=10)
    a, b = pareto_mle(x), pareto_mle(x * 8.0)
    assert b.mu == a.mu * 8.0
    assert b.sigma == pytest.approx(8.0 * a.sigma, rel=1e-6)
    assert b.alpha == pytest.approx(a.alpha, rel=1e-6)


def test_mle_errors():
    with pytest.raises(DegenerateDataError):
        pareto_mle([2.0, 2.0, 2.0])
    with pytest.raises(DegenerateDataError):
        pareto_mle([])
    with pytest.raises(ConvergenceError):
        pareto_mle(pareto_sample(ParetoParams(0, 1, 2), 200, seed=1), max_sweeps=2)


@pytest.mark.parametrize("bad", [dict(sigma=0.0), dict(alpha=-1.0), dict(mu=np.inf)])
def test_params_validation(bad):
    kw = dict(mu=0.0, sigma=1.0, alpha=1.0) | bad
    with pytest.raises(ValueError):
        ParetoParams(**kw)
