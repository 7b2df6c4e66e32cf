import math

import numpy as np
import pytest
from pydantic import ValidationError
from scipy import stats

from twint.core.exceptions import DimensionError, DomainError, SingularCovarianceError
from twint.models.extended import (
    GeneralizedTwinT,
    MultivariateGeneralizedTwinT,
    MultivariateTwinT,
    asinh_of_exp,
    gen_mv_log_pdf,
    log_generalized_abs_moment,
)
from twint.models.twin_t import TwinT
from twint.utils.numerics import integrate_interval, integrate_real_line

V2 = np.array([[2.0, 0.6], [0.6, 1.0]])
MU2 = np.array([1.0, -2.0])


def _radial_mass(log_pdf, mu):
    """Total mass of a spherical (V = I) bivariate density, integrated along one ray."""

    def log_integrand(r):
        r = np.atleast_1d(r)
        rows = mu + np.column_stack([r, np.zeros_like(r)])
        return math.log(2.0 * math.pi) + np.log(r) + log_pdf(rows)

    return integrate_interval(log_integrand, 0.0, math.inf)


def test_asinh_of_exp():
    log_t = np.array([-800.0, -3.0, 0.0, 5.0, 400.0, 1e4])
    out = asinh_of_exp(log_t)
    np.testing.assert_allclose(out[1:4], np.arcsinh(np.exp(log_t[1:4])), rtol=1e-15)
    assert out[0] == 0.0
    assert out[-1] == pytest.approx(math.log(2.0) + 1e4, rel=1e-15)
    assert np.all(np.isfinite(out))


# --- univariate generalized ---

@pytest.mark.parametrize("beta,gam", [(2.0, 2.0), (1.0, 3.0), (4.0, 0.5), (0.7, 5.0)])
def test_generalized_integrates_to_one(beta, gam):
    d = GeneralizedTwinT(beta=beta, gam=gam)
    assert integrate_real_line(d.log_pdf) == pytest.approx(1.0, abs=1e-8)


def test_generalized_beta_two_is_scaled_twin_t():
    nu = 5.0
    d = GeneralizedTwinT(beta=2.0, gam=nu / 2.0)
    base = TwinT(nu=nu)
    x = np.linspace(-8.0, 8.0, 33)
    np.testing.assert_allclose(d.pdf(x), math.sqrt(2.0) * base.pdf(math.sqrt(2.0) * x), rtol=1e-12)
    np.testing.assert_allclose(d.cdf(x), base.cdf(math.sqrt(2.0) * x), atol=1e-12)
    # variance of X / sqrt(2)
    assert d.abs_moment(2.0) == pytest.approx(base.moments().variance / 2.0, rel=1e-12)


def test_generalized_cdf_and_quantile():
    d = GeneralizedTwinT(beta=1.5, gam=2.0)
    assert d.cdf(0.0) == pytest.approx(0.5, abs=1e-15)
    for x in (-30.0, -2.0, 0.3, 4.0):
        assert d.cdf(x) == pytest.approx(integrate_interval(d.log_pdf, -math.inf, x), abs=1e-8)
        assert d.sf(x) == pytest.approx(1.0 - d.cdf(x), abs=1e-14)
    for u in (0.001, 0.3, 0.8):
        assert d.cdf(d.quantile(u)) == pytest.approx(u, abs=1e-9)
    with pytest.raises(DomainError):
        d.quantile(0.0)


def test_generalized_abs_moments():
    d = GeneralizedTwinT(beta=1.5, gam=4.0)
    for r in (0.5, 1.0, 2.5):
        expected = integrate_real_line(lambda x: r * np.log(np.abs(x)) + d.log_pdf(x))
        assert d.abs_moment(r) == pytest.approx(expected, rel=1e-8)
    assert d.abs_moment(0.0) == pytest.approx(1.0, rel=1e-14)
    assert d.abs_moment(6.0) is None
    with pytest.raises(DomainError):
        log_generalized_abs_moment(1.5, 4.0, 6.0)


def test_generalized_tail_exponent():
    d = GeneralizedTwinT(beta=1.5, gam=2.5)
    slope = (d.log_pdf(1e7) - d.log_pdf(1e6)) / math.log(10.0)
    assert slope == pytest.approx(-(1.5 * 2.5 + 1.0), rel=1e-6)
    assert d.log_pdf(-1e6) == d.log_pdf(1e6)


def test_generalized_sampler():
    d = GeneralizedTwinT(beta=1.2, gam=3.0)
    x = d.sample(20_000, seed=12)
    assert stats.kstest(x, d.cdf).pvalue > 1e-3
    np.testing.assert_array_equal(d.sample(10, seed=3), d.sample(10, seed=3))


def test_generalized_validation():
    with pytest.raises(ValidationError):
        GeneralizedTwinT(beta=0.0, gam=1.0)
    with pytest.raises(ValidationError):
        GeneralizedTwinT(beta=1.0, gam=-2.0)


# --- multivariate twin-t ---

def test_multivariate_one_dimension_is_univariate():
    nu = 3.0
    d = MultivariateTwinT(nu=nu, mu=[0.0], V=[[1.0]])
    base = TwinT(nu=nu)
    x = np.linspace(-20.0, 20.0, 41)
    np.testing.assert_allclose(d.log_pdf(x[:, None]), base.log_pdf(x), rtol=1e-13)
    assert d.log_pdf(np.array([1.5])) == pytest.approx(base.log_pdf(1.5), rel=1e-13)
    assert MultivariateTwinT.second_moment_coefficient(nu + 5.0, 1) == pytest.approx(
        TwinT(nu=nu + 5.0).moments().variance, rel=1e-12)


@pytest.mark.parametrize("nu", [0.8, 3.0, 12.0])
def test_multivariate_density_integrates_to_one(nu):
    d = MultivariateTwinT(nu=nu, mu=MU2, V=np.eye(2))
    assert _radial_mass(d.log_pdf, MU2) == pytest.approx(1.0, abs=1e-8)


def test_multivariate_scale_matrix_enters_through_mahalanobis():
    d = MultivariateTwinT(nu=4.0, mu=MU2, V=V2)
    spherical = MultivariateTwinT(nu=4.0, mu=np.zeros(2), V=np.eye(2))
    x = np.array([[0.0, 0.0], [3.0, 1.0], [-5.0, 7.0]])
    z = np.linalg.solve(np.linalg.cholesky(V2), (x - MU2).T).T
    expected = spherical.log_pdf(z) - 0.5 * math.log(np.linalg.det(V2))
    np.testing.assert_allclose(d.log_pdf(x), expected, rtol=1e-12)
    np.testing.assert_allclose(d.mahalanobis(x), np.sum(z * z, axis=1), rtol=1e-12)


def test_bivariate_second_moment_coefficient():
    assert MultivariateTwinT.bivariate_coefficient(4.0) == pytest.approx(128.0 / 120.0, rel=1e-15)
    for nu in (2.5, 4.0, 9.0, 40.0):
        assert MultivariateTwinT.second_moment_coefficient(nu, 2) == pytest.approx(
            MultivariateTwinT.bivariate_coefficient(nu), rel=1e-12)
    assert MultivariateTwinT.second_moment_coefficient(2.0, 3) is None
    assert MultivariateTwinT(nu=1.5, mu=MU2, V=V2).second_moment() is None


def test_multivariate_sampler_moments():
    d = MultivariateTwinT(nu=12.0, mu=MU2, V=V2)
    x = d.sample(100_000, seed=8)
    assert x.shape == (100_000, 2)
    np.testing.assert_allclose(x.mean(axis=0), MU2, atol=0.03)
    np.testing.assert_allclose(np.cov(x, rowvar=False), d.second_moment(), rtol=0.05)


def test_multivariate_sampler_one_dimension_matches_cdf():
    d = MultivariateTwinT(nu=2.5, mu=[0.0], V=[[1.0]])
    x = d.sample(20_000, seed=6)[:, 0]
    assert stats.kstest(x, TwinT(nu=2.5).cdf).pvalue > 1e-3


def test_multivariate_sampler_is_affine_consistent():
    d = MultivariateTwinT(nu=3.0, mu=MU2, V=V2)
    standard = MultivariateTwinT(nu=3.0, mu=np.zeros(2), V=np.eye(2))
    L = d.cholesky_factor
    np.testing.assert_allclose(L @ L.T, V2, rtol=1e-13)
    x = d.sample(20_000, seed=31)
    z = np.linalg.solve(L, (x - MU2).T).T
    q = d.mahalanobis(x)
    np.testing.assert_allclose(np.sum(z * z, axis=1), q, rtol=1e-10)
    # Q of the affine image has the law of Q under the standard law
    assert stats.ks_2samp(q, standard.mahalanobis(standard.sample(20_000, seed=32))).pvalue > 1e-3
    # and the standardized draws are spherical
    angle = np.arctan2(z[:, 1], z[:, 0])
    assert stats.kstest(angle, stats.uniform(loc=-math.pi, scale=2.0 * math.pi).cdf).pvalue > 1e-3


def test_multivariate_normal_limit():
    d = MultivariateTwinT(nu=math.inf, mu=MU2, V=V2)
    x = np.array([[0.5, -1.0], [2.0, 2.0]])
    np.testing.assert_allclose(d.log_pdf(x), stats.multivariate_normal(MU2, V2).logpdf(x), rtol=1e-13)
    assert d.second_moment_coefficient(math.inf, 2) == 1.0


def test_multivariate_rejects_bad_scale_matrix():
    with pytest.raises(ValueError, match="symmetric positive definite"):
        MultivariateTwinT(nu=4.0, mu=MU2, V=[[1.0, 2.0], [2.0, 1.0]])
    with pytest.raises(ValueError, match="symmetric"):
        MultivariateTwinT(nu=4.0, mu=MU2, V=[[1.0, 0.5], [0.0, 1.0]])
    with pytest.raises(ValueError, match="dimension"):
        MultivariateTwinT(nu=4.0, mu=MU2, V=np.eye(3))
    with pytest.raises(ValueError, match="nu must be > 0"):
        MultivariateTwinT(nu=0.0, mu=MU2, V=V2)


def test_multivariate_point_dimension_is_checked():
    d = MultivariateTwinT(nu=4.0, mu=MU2, V=V2)
    with pytest.raises(DimensionError):
        d.log_pdf(np.zeros(3))


def test_method_of_moments_start():
    d = MultivariateTwinT(nu=10.0, mu=MU2, V=V2)
    data = d.sample(50_000, seed=13)
    mu, V = MultivariateTwinT.mom_init(data, nu_fixed=10.0)
    np.testing.assert_allclose(mu, MU2, atol=0.05)
    np.testing.assert_allclose(V, V2, rtol=0.06, atol=0.03)


def test_method_of_moments_errors():
    data = np.column_stack([np.arange(10.0), np.full(10, 3.0)])
    with pytest.raises(SingularCovarianceError):
        MultivariateTwinT.mom_init(data, nu_fixed=5.0)
    with pytest.raises(DomainError):
        MultivariateTwinT.mom_init(np.random.default_rng(1).normal(size=(20, 2)), nu_fixed=2.0)
    with pytest.raises(DimensionError):
        MultivariateTwinT.mom_init(np.ones((2, 2)), nu_fixed=5.0)


# --- multivariate generalized ---

def test_generalized_multivariate_reductions():
    nu = 6.0
    x = np.array([[0.0, 0.0], [1.0, -3.0], [10.0, 4.0]])
    twin = MultivariateTwinT(nu=nu, mu=MU2, V=V2 / 2.0)
    np.testing.assert_allclose(gen_mv_log_pdf(2.0, nu / 2.0, MU2, V2, x), twin.log_pdf(x), rtol=1e-12)
    one_dim = MultivariateGeneralizedTwinT(beta=1.3, gam=2.2, mu=[0.0], V=[[1.0]])
    u = np.linspace(-6.0, 6.0, 13)
    np.testing.assert_allclose(one_dim.log_pdf(u[:, None]), GeneralizedTwinT(beta=1.3, gam=2.2).log_pdf(u),
                               rtol=1e-12)


@pytest.mark.parametrize("beta,gam", [(1.0, 2.0), (3.0, 1.5)])
def test_generalized_multivariate_integrates_to_one(beta, gam):
    d = MultivariateGeneralizedTwinT(beta=beta, gam=gam, mu=MU2, V=np.eye(2))
    assert _radial_mass(d.log_pdf, MU2) == pytest.approx(1.0, abs=1e-8)


def test_generalized_multivariate_sampler():
    d = MultivariateGeneralizedTwinT(beta=1.0, gam=3.0, mu=[0.0], V=[[1.0]])
    x = d.sample(20_000, seed=30)
    assert x.shape == (20_000, 1)
    assert stats.kstest(x[:, 0], GeneralizedTwinT(beta=1.0, gam=3.0).cdf).pvalue > 1e-3
    two_dim = MultivariateGeneralizedTwinT(beta=1.5, gam=4.0, mu=MU2, V=V2)
    draws = two_dim.sample(50_000, seed=31)
    np.testing.assert_allclose(draws.mean(axis=0), MU2, atol=0.05)
