import math

import numpy as np
import pytest
from pydantic import ValidationError
from scipy import stats

from twint.core.exceptions import DomainError
from twint.models.twin_t import LocationScaleModel, TwinT
from twint.utils.numerics import integrate_interval, integrate_real_line

NU_GRID = [0.5, 1.0, 2.0, 4.0, 8.0, 30.0, 200.0]


@pytest.mark.parametrize("nu", NU_GRID)
def test_pdf_integrates_to_one(nu):
    assert integrate_real_line(TwinT(nu=nu).log_pdf) == pytest.approx(1.0, abs=1e-8)


@pytest.mark.parametrize("nu", NU_GRID)
def test_cdf_matches_pdf_quadrature(nu):
    d = TwinT(nu=nu)
    for x in np.linspace(-20.0, 20.0, 50):
        assert d.cdf(x) == pytest.approx(integrate_interval(d.log_pdf, -math.inf, x), abs=1e-8)


def test_log_norm_const_forms_agree():
    for nu in NU_GRID + [1e-3, 1e5, 1e6, 1e7]:
        assert TwinT.log_norm_const_for(nu) == pytest.approx(TwinT.log_norm_const_beta_form(nu), rel=1e-13)


def test_closed_form_cdfs():
    x = np.linspace(-30.0, 30.0, 100)
    for nu in (2, 4):
        np.testing.assert_allclose(TwinT(nu=nu).cdf(x), TwinT.closed_form_cdf(nu, x), atol=1e-12)
    with pytest.raises(DomainError):
        TwinT.closed_form_cdf(3, 0.0)


def test_reflected_form_matches_cdf():
    d = TwinT(nu=3.0)
    x = np.linspace(-10.0, 10.0, 41)
    np.testing.assert_allclose(d.cdf_reflected_form(x), d.cdf(x), atol=1e-12)


def test_cdf_basic_properties():
    d = TwinT(nu=4.0)
    assert d.cdf(0.0) == pytest.approx(0.5, abs=1e-15)
    x = np.linspace(-50.0, 50.0, 201)
    values = d.cdf(x)
    assert np.all(np.diff(values) >= 0.0)
    np.testing.assert_allclose(values + d.cdf(-x), 1.0, atol=1e-14)
    np.testing.assert_allclose(d.sf(x), 1.0 - values, atol=1e-14)


@pytest.mark.parametrize("nu", [0.5, 3.0, 40.0])
def test_cdf_derivative_is_pdf(nu):
    d = TwinT(nu=nu)
    x = np.array([-7.0, -1.3, 0.0, 0.4, 2.5, 12.0])
    h = 1e-5
    slope = (d.cdf(x + h) - d.cdf(x - h)) / (2.0 * h)
    np.testing.assert_allclose(slope, d.pdf(x), rtol=1e-6, atol=1e-12)


def test_dropping_quartic_term_gives_student_t_kernel():
    nu = 3.0
    d = TwinT(nu=nu)
    x = np.linspace(-6.0, 6.0, 25)
    terms = d.kernel_terms(x)
    # C = sqrt(1 + S^2) becomes 1 once S^2 is dropped
    reduced = (1.0 + terms.S) ** (-(nu + 1.0) / 2.0)
    np.testing.assert_allclose(reduced, stats.t.pdf(x, nu) / stats.t.pdf(0.0, nu), rtol=1e-12)
    full = math.exp(d.log_norm_const()) * (terms.C + terms.S) ** (-(nu + 1.0) / 2.0)
    np.testing.assert_allclose(d.pdf(x), full, rtol=1e-12)


def test_far_tails_stay_finite():
    d = TwinT(nu=1.0)
    assert math.isfinite(d.log_pdf(1e200))
    assert d.pdf(1e200) >= 0.0
    assert 0.0 <= d.sf(1e200) < 1e-150
    assert d.cdf(-1e300) >= 0.0
    # right tail decays like x^-(nu+1)
    slope = (d.log_pdf(1e6) - d.log_pdf(1e5)) / math.log(10.0)
    assert slope == pytest.approx(-2.0, abs=1e-6)


def test_kernel_terms_at_zero():
    terms = TwinT(nu=4.0).kernel_terms(0.0)
    assert terms.S == 0.0
    assert terms.C == 1.0
    assert terms.p == 1.0


@pytest.mark.parametrize("bad", [0.0, -3.0, math.nan])
def test_nu_must_be_positive(bad):
    with pytest.raises(ValidationError, match="nu must be > 0"):
        TwinT(nu=bad)


def test_nu_below_minimum_rejected():
    with pytest.raises(ValidationError):
        TwinT(nu=1e-5)


def test_normal_limit():
    for nu in (math.inf, 1e8):
        d = TwinT(nu=nu)
        assert d.normal_limit
        assert d.pdf(0.0) == pytest.approx(1.0 / math.sqrt(2.0 * math.pi), rel=1e-15)
        assert d.cdf(1.3) == pytest.approx(stats.norm.cdf(1.3), rel=1e-15)
        assert d.quantile(0.9) == pytest.approx(stats.norm.ppf(0.9), rel=1e-15)
        assert d.moments().variance == 1.0


def test_large_nu_approaches_normal():
    x = np.linspace(-4.0, 4.0, 17)
    np.testing.assert_allclose(TwinT(nu=1e6).pdf(x), stats.norm.pdf(x), atol=1e-5)


@pytest.mark.parametrize("nu", [0.5, 1.0, 4.0, 30.0])
def test_quantile_inverts_cdf(nu):
    d = TwinT(nu=nu)
    for u in (1e-6, 0.01, 0.3, 0.5, 0.7, 0.99, 1.0 - 1e-6):
        x = d.quantile(u)
        assert d.cdf(x) == pytest.approx(u, abs=1e-10)
    assert d.quantile(0.5) == 0.0
    assert d.quantile(0.2) == pytest.approx(-d.quantile(0.8), abs=1e-10)


@pytest.mark.parametrize("u", [0.0, 1.0, -0.5, 2.0])
def test_quantile_domain(u):
    with pytest.raises(DomainError):
        TwinT(nu=4.0).quantile(u)


def test_variance_at_nu_four():
    assert TwinT(nu=4.0).moments().variance == pytest.approx(3.0 * math.pi / 8.0, abs=1e-12)


@pytest.mark.parametrize("nu", [6.0, 10.0, 25.0])
def test_general_even_moment_consistency(nu):
    d = TwinT(nu=nu)
    moments = d.moments()
    assert d.even_moment(1) == pytest.approx(moments.variance, rel=1e-12)
    assert d.even_moment(2) == pytest.approx(moments.fourth, rel=1e-12)
    assert d.abs_moment(2.0) == pytest.approx(moments.variance, rel=1e-12)
    assert d.abs_moment(4.0) == pytest.approx(moments.fourth, rel=1e-12)
    assert d.abs_moment(1.0) == pytest.approx(moments.abs_mean, rel=1e-12)


def test_moments_match_quadrature():
    d = TwinT(nu=7.0)
    second = 2.0 * integrate_interval(lambda x: 2.0 * np.log(x) + d.log_pdf(x), 0.0, math.inf)
    sixth = 2.0 * integrate_interval(lambda x: 6.0 * np.log(x) + d.log_pdf(x), 0.0, math.inf)
    half = 2.0 * integrate_interval(lambda x: 0.5 * np.log(x) + d.log_pdf(x), 0.0, math.inf)
    assert d.moments().variance == pytest.approx(second, rel=1e-8)
    assert d.even_moment(3) == pytest.approx(sixth, rel=1e-8)
    assert d.abs_moment(0.5) == pytest.approx(half, rel=1e-8)


def test_nonexistent_moments_are_none():
    d = TwinT(nu=2.0)
    moments = d.moments()
    assert moments.variance is None and moments.fourth is None
    assert moments.abs_mean is not None
    assert d.even_moment(1) is None
    assert d.abs_moment(2.0) is None
    assert TwinT(nu=1.0).moments().abs_mean is None


def test_taylor_correction_is_sixth_order():
    """ln f minus its leading quadratic term shrinks like x^6."""
    nu = 10.0
    d = TwinT(nu=nu)
    x = np.linspace(0.05, 0.2, 16)
    ratio = (d.log_pdf(x) - d.logpdf_series(x, terms=1)) / x ** 6
    assert (ratio.max() - ratio.min()) / ratio.mean() < 0.1
    assert ratio.mean() == pytest.approx((nu + 1.0) / (12.0 * nu ** 3), rel=0.01)
    # three series terms are far closer than one
    assert np.all(np.abs(d.logpdf_series(x, 3) - d.log_pdf(x)) < np.abs(d.logpdf_series(x, 1) - d.log_pdf(x)))


def test_proposals_per_draw_theory():
    assert TwinT(nu=1.0).proposals_per_draw() == pytest.approx(1.271, abs=1e-3)
    assert TwinT(nu=20.0).proposals_per_draw() == pytest.approx(1.035, abs=1e-3)


def test_acceptance_probability_bounds():
    d = TwinT(nu=3.0)
    p = d.acceptance_probability(np.linspace(-100.0, 100.0, 101))
    assert np.all((p > 0.0) & (p <= 1.0))
    assert d.acceptance_probability(0.0) == 1.0


def test_sampler_acceptance_rate():
    draws, proposals = TwinT(nu=1.0).sample_with_stats(200_000, seed=11)
    assert draws.size == 200_000
    assert proposals / draws.size == pytest.approx(1.271, abs=0.01)


@pytest.mark.slow
def test_sampler_acceptance_rate_large_runs():
    _, proposals = TwinT(nu=1.0).sample_with_stats(1_000_000, seed=1)
    assert proposals / 1e6 == pytest.approx(1.271, abs=0.01)
    _, proposals = TwinT(nu=20.0).sample_with_stats(1_000_000, seed=2)
    assert proposals / 1e6 == pytest.approx(1.035, abs=0.005)


def test_sampler_is_deterministic():
    d = TwinT(nu=1.0)
    np.testing.assert_array_equal(d.sample(1000, seed=7), d.sample(1000, seed=7))
    assert not np.array_equal(d.sample(1000, seed=7), d.sample(1000, seed=8))


def test_sampler_matches_cdf():
    d = TwinT(nu=4.0)
    assert stats.kstest(d.sample(20_000, seed=3), d.cdf).pvalue > 1e-3


def test_sample_variance_matches_theory():
    d = TwinT(nu=10.0)
    x = d.sample(200_000, seed=5)
    se = np.std(x * x) / math.sqrt(x.size)
    assert abs(np.mean(x * x) - d.moments().variance) < 4.0 * se


@pytest.mark.slow
@pytest.mark.parametrize("nu", [10.0, 20.0])
def test_monte_carlo_moments_large_sample(nu):
    d = TwinT(nu=nu)
    x = d.sample(10_000_000, seed=int(nu))
    x2, x4 = x * x, x ** 4
    assert abs(x2.mean() - d.moments().variance) < 3.0 * x2.std() / math.sqrt(x.size)
    assert abs(x4.mean() - d.moments().fourth) < 3.0 * x4.std() / math.sqrt(x.size)


def test_location_scale_model():
    base = TwinT(nu=4.0)
    m = LocationScaleModel(mu=2.0, sigma=3.0, base=base)
    assert m.pdf(5.0) == pytest.approx(base.pdf(1.0) / 3.0, rel=1e-14)
    assert m.log_pdf(5.0) == pytest.approx(base.log_pdf(1.0) - math.log(3.0), rel=1e-14)
    assert m.cdf(2.0) == pytest.approx(0.5, abs=1e-15)
    assert m.quantile(0.75) == pytest.approx(2.0 + 3.0 * base.quantile(0.75), rel=1e-14)
    np.testing.assert_allclose(m.sample(10, seed=1), 2.0 + 3.0 * base.sample(10, seed=1))


def test_location_scale_validation():
    with pytest.raises(ValidationError):
        LocationScaleModel(mu=0.0, sigma=0.0, base=TwinT(nu=4.0))
    with pytest.raises(ValidationError):
        LocationScaleModel(base=object())
