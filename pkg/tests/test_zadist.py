import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate, stats

from lagcast.errors import NegativeY, ValidationError
from lagcast.zadist import (
    ZagaParams, ZaigParams, zaga_cdf, zaga_logpdf, zaga_moments, zaga_pdf, zaga_ppf, zaga_sample,
    zaig_cdf, zaig_moments, zaig_pdf, zaig_sample,
)


def total_mass(pdf, p):
    f = lambda y: pdf(y, p)
    mu = float(p.mu)
    a, _ = integrate.quad(f, 0, mu, epsabs=1e-13, epsrel=1e-12, limit=400)
    b, _ = integrate.quad(f, mu, np.inf, epsabs=1e-13, epsrel=1e-12, limit=400)
    return float(p.nu) + a + b


def random_triples(n, seed):
    rng = np.random.default_rng(seed)
    return [(rng.uniform(0.2, 5), rng.uniform(0.3, 1.5), rng.uniform(0, 0.9)) for _ in range(n)]


class TestZagaPdf:
    def test_point_mass(self):
        assert zaga_pdf(0.0, ZagaParams(2.0, 0.7, 0.3)) == pytest.approx(0.3, abs=1e-15)

    def test_exponential_special_case(self):
        assert zaga_pdf(1.0, ZagaParams(1.0, 1.0, 0.0)) == pytest.approx(math.exp(-1), abs=1e-14)

    def test_matches_scipy_gamma(self):
        p = ZagaParams(2.5, 0.6, 0.2)
        y = np.linspace(0.01, 10, 50)
        ref = 0.8 * stats.gamma.pdf(y, a=1 / 0.36, scale=0.36 * 2.5)
        np.testing.assert_allclose(zaga_pdf(y, p), ref, rtol=1e-12)

    def test_normalization(self):
        for mu, sigma, nu in random_triples(50, 0):
            assert abs(total_mass(zaga_pdf, ZagaParams(mu, sigma, nu)) - 1) < 1e-8

    def test_negative_y(self):
        with pytest.raises(NegativeY):
            zaga_pdf(-0.1, ZagaParams(1, 1, 0.1))

    def test_small_sigma_no_overflow(self):
        p = ZagaParams(3.0, 0.01, 0.1)
        assert np.isfinite(zaga_logpdf(3.0, p))
        assert zaga_pdf(3.0, p) > 0

    @pytest.mark.parametrize("bad", [(0, 1, 0.1), (1, 0, 0.1), (1, 1, 1.5), (np.inf, 1, 0.1)])
    def test_invalid_params(self, bad):
        with pytest.raises(ValidationError):
            ZagaParams(*bad)


class TestZagaCdf:
    def test_point_mass(self):
        assert zaga_cdf(0.0, ZagaParams(1, 1, 0.25)) == 0.25

    def test_limit(self):
        assert zaga_cdf(1e6, ZagaParams(1, 1, 0.25)) == pytest.approx(1.0, abs=1e-15)

    def test_exponential_median(self):
        assert zaga_cdf(math.log(2), ZagaParams(1, 1, 0)) == pytest.approx(0.5, abs=1e-14)

    @given(st.floats(0.1, 5), st.floats(0.3, 1.5), st.floats(0, 0.9), st.floats(0.05, 8))
    def test_derivative_matches_pdf(self, mu, sigma, nu, y):
        p = ZagaParams(mu, sigma, nu)
        h = 1e-5 * max(y, 1)
        deriv = (zaga_cdf(y + h, p) - zaga_cdf(y - h, p)) / (2 * h)
        assert deriv == pytest.approx(zaga_pdf(y, p), abs=1e-5, rel=1e-5)

    @given(st.lists(st.floats(0, 20), min_size=2, max_size=20))
    def test_monotone(self, ys):
        ys = np.sort(ys)
        assert np.all(np.diff(zaga_cdf(ys, ZagaParams(2, 0.8, 0.16))) >= 0)

    def test_ppf_inverts_cdf(self):
        p = ZagaParams(2.0, 0.5, 0.2)
        q = np.linspace(0.21, 0.99, 20)
        np.testing.assert_allclose(zaga_cdf(zaga_ppf(q, p), p), q, atol=1e-10)
        assert zaga_ppf(0.1, p) == 0.0


class TestZagaSample:
    def test_near_one_nu(self):
        assert np.sum(zaga_sample(ZagaParams(1, 1, 0.999), 1000, seed=3) == 0) >= 990

    def test_mean(self):
        x = zaga_sample(ZagaParams(2.0, 0.5, 0.2), 100_000, seed=11)
        assert x.mean() == pytest.approx(1.6, abs=0.02)

    def test_determinism(self):
        p = ZagaParams(2.0, 0.5, 0.2)
        np.testing.assert_array_equal(zaga_sample(p, 50, seed=9), zaga_sample(p, 50, seed=9))

    def test_law(self):
        p = ZagaParams(1.7, 0.6, 0.16)
        n = 100_000
        x = zaga_sample(p, n, seed=21)
        pos = x[x > 0]
        d = stats.kstest(pos, stats.gamma(a=float(p.shape), scale=float(p.scale)).cdf).statistic
        assert d < 0.01
        se = math.sqrt(0.16 * 0.84 / n)
        assert abs(np.mean(x == 0) - 0.16) < 3 * se


class TestMoments:
    def test_no_zeros(self):
        assert zaga_moments(ZagaParams(3.0, 0.4, 0.0)) == pytest.approx((3.0, 0.16 * 9))

    def test_mixture_mean(self):
        assert zaga_moments(ZagaParams(2.0, 1.0, 0.25))[0] == 1.5

    def test_all_zero(self):
        mean, var = zaga_moments(ZagaParams(2.0, 1.0, 1.0))
        assert mean == 0 and var == 0

    @pytest.mark.parametrize("params", [(2.0, 1.0, 0.25), (1.0, 0.5, 0.16), (4.0, 0.3, 0.5)])
    def test_monte_carlo(self, params):
        p = ZagaParams(*params)
        n = 1_000_000
        x = zaga_sample(p, n, seed=5)
        mean, var = zaga_moments(p)
        se_mean = math.sqrt(var / n)
        m4 = np.mean((x - x.mean()) ** 4)
        se_var = math.sqrt((m4 - x.var() ** 2) / n)
        assert abs(x.mean() - mean) < 3 * se_mean
        assert abs(x.var() - var) < 3 * se_var


class TestZaig:
    def test_point_mass(self):
        assert zaig_pdf(0.0, ZaigParams(1.0, 0.5, 0.4)) == pytest.approx(0.4, abs=1e-15)

    def test_at_mean(self):
        mu, sigma, nu = 2.0, 0.7, 0.1
        expected = (1 - nu) / math.sqrt(2 * math.pi * sigma ** 2 * mu ** 3)
        assert zaig_pdf(mu, ZaigParams(mu, sigma, nu)) == pytest.approx(expected, rel=1e-14)

    def test_matches_scipy(self):
        mu, sigma = 1.5, 0.8
        lam = 1 / sigma ** 2
        y = np.linspace(0.05, 6, 40)
        ref = stats.invgauss.pdf(y, mu / lam, scale=lam)
        np.testing.assert_allclose(zaig_pdf(y, ZaigParams(mu, sigma, 0.0)), ref, rtol=1e-10)
        np.testing.assert_allclose(zaig_cdf(y, ZaigParams(mu, sigma, 0.0)),
                                   stats.invgauss.cdf(y, mu / lam, scale=lam), rtol=1e-10)

    def test_normalization(self):
        for mu, sigma, nu in random_triples(50, 1):
            assert abs(total_mass(zaig_pdf, ZaigParams(mu, sigma, nu)) - 1) < 1e-8

    def test_moments_monte_carlo(self):
        p = ZaigParams(1.5, 0.6, 0.2)
        x = zaig_sample(p, 1_000_000, seed=2)
        mean, var = zaig_moments(p)
        assert abs(x.mean() - mean) < 3 * math.sqrt(var / len(x))
