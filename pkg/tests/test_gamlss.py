import numpy as np
import pytest
from hypothesis import given, strategies as st

from lagcast.basis import BasisSpec, cross_basis
from lagcast.errors import (
    AllZeroResponse, ColumnMismatch, MisalignedInputs, NonConvergence, NoZeroObservationsWarning,
    RankDeficient,
)
from lagcast.gamlss import (
    DesignMatrix, ZagaFit, aic, assemble_design, design_row, fit_zaga, gamma_loglik, predict_response,
    zaga_loglik, zaga_score,
)
from lagcast.panel import MonthIndex, RiskSeries, month_range
from lagcast.zadist import ZagaParams, zaga_logpdf, zaga_sample

LIN = BasisSpec("linear")
CUBIC = BasisSpec("bspline", degree=3, df=4)


def zaga_regression(n, beta, sigma=0.5, nu=0.16, seed=0):
    rng = np.random.default_rng(seed)
    X = np.column_stack([np.ones(n), rng.normal(0, 0.5, (n, len(beta) - 1))])
    y = zaga_sample(ZagaParams(np.exp(X @ beta), sigma, nu), n, seed=rng)
    return X, y


def numeric_grad(f, x, h=1e-6):
    g = np.empty_like(x)
    for i in range(len(x)):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (f(x + e) - f(x - e)) / (2 * h)
    return g


class TestDesign:
    def make(self, T=252, const_col=None):
        rng = np.random.default_rng(0)
        months = month_range(MonthIndex(2000, 1), MonthIndex(2000, 1) + (T - 1))
        risk = RiskSeries("a", months, rng.gamma(2, 0.5, T))
        xs = [rng.gamma(2, 50, T), rng.normal(size=T), rng.uniform(0, 1, T), 300 + rng.normal(size=T),
              rng.normal(size=T)]
        if const_col is not None:
            xs[const_col] = np.full(T, 3.0)
        specs = [CUBIC, CUBIC, LIN, LIN, LIN]
        names = ["precip", "ssta", "ndvi", "lst", "tna"]
        cbs = [cross_basis(x, 18, s, LIN, name=nm) for x, s, nm in zip(xs, specs, names)]
        return risk, cbs

    def test_row_count(self):
        design, y = assemble_design(*self.make())
        assert design.shape[0] == 252 - 18 - 1 == len(y)
        assert design.columns[:2] == ("intercept", "rr_lag1")
        assert len(design.columns) == 2 + 6 + 6 + 2 * 3 + 11

    def test_january_reference(self):
        design, _ = assemble_design(*self.make())
        dummies = [i for i, c in enumerate(design.columns) if c.startswith("month_")]
        jan = [i for i, m in enumerate(design.months) if m.month == 1]
        assert np.all(design.values[np.ix_(jan, dummies)] == 0)
        feb = [i for i, m in enumerate(design.months) if m.month == 2]
        assert np.all(design.values[feb, design.columns.index("month_2")] == 1)

    def test_lagged_response(self):
        risk, cbs = self.make()
        design, y = assemble_design(risk, cbs)
        np.testing.assert_array_equal(design.values[1:, 1], y[:-1])

    def test_constant_climate_named(self):
        with pytest.raises(RankDeficient, match="lst") as info:
            assemble_design(*self.make(const_col=3))
        assert any(c.startswith("lst.") for c in info.value.columns)

    def test_misaligned(self):
        risk, cbs = self.make()
        short = cross_basis(np.arange(100.0), 18, LIN, LIN)
        with pytest.raises(MisalignedInputs):
            assemble_design(risk, [*cbs[:4], short])

    def test_design_row_reproduces_rows(self):
        risk, cbs = self.make()
        design, _ = assemble_design(risk, cbs)
        for i in (0, 50, 232):
            t = design.rows[i]
            row = design_row(design, risk.rr[t - 1], [cb.matrix[t] for cb in cbs], risk.months[t].month)
            np.testing.assert_array_equal(row, design.values[i])


class TestFit:
    def test_zero_proportion(self):
        rng = np.random.default_rng(1)
        y = np.r_[np.zeros(4), rng.gamma(2, 1, 21)]
        fit = fit_zaga(np.ones((25, 1)), y)
        assert fit.nu_hat == 0.16

    def test_intercept_only_is_mean(self):
        y = np.random.default_rng(2).gamma(3, 0.7, 200)
        with pytest.warns(NoZeroObservationsWarning):
            fit = fit_zaga(np.ones((200, 1)), y)
        assert np.exp(fit.beta_mu[0]) == pytest.approx(y.mean(), abs=1e-8)
        assert fit.nu_hat == 1 / 400

    def test_all_zero(self):
        with pytest.raises(AllZeroResponse):
            fit_zaga(np.ones((5, 1)), np.zeros(5))

    def test_non_convergence(self):
        X, y = zaga_regression(500, np.array([0.3, 0.5, -0.4]))
        with pytest.raises(NonConvergence) as info:
            fit_zaga(X, y, max_iter=1)
        assert info.value.iterations == 1

    def test_loglik_is_sum_of_logpdf(self):
        X, y = zaga_regression(800, np.array([0.2, 0.4, -0.3, 0.1]), seed=3)
        fit = fit_zaga(X, y)
        ref = zaga_logpdf(y, ZagaParams(np.exp(X @ fit.beta_mu), fit.sigma_hat, fit.nu_hat)).sum()
        assert fit.loglik == pytest.approx(ref, rel=1e-12)

    def test_trace_non_decreasing(self):
        X, y = zaga_regression(1000, np.array([1.0, 0.8, -0.6, 0.3]), sigma=0.9, seed=4)
        fit = fit_zaga(X, y)
        assert np.all(np.diff(fit.trace) >= -1e-9 * abs(fit.trace[-1]))
        assert fit.trace[-1] == pytest.approx(fit.loglik, rel=1e-12)

    def test_score_vanishes_at_optimum(self):
        X, y = zaga_regression(2000, np.array([0.5, 0.3, -0.2]), seed=5)
        fit = fit_zaga(X, y)
        g = zaga_score(X, y, fit.beta_mu, fit.sigma_hat, fit.nu_hat)
        assert np.max(np.abs(g)) < 1e-5 * len(y)

    @given(st.integers(0, 10_000))
    def test_score_matches_finite_differences(self, seed):
        X, y = zaga_regression(300, np.array([0.3, 0.2, -0.5]), seed=seed)
        rng = np.random.default_rng(seed)
        beta = rng.normal(0, 0.3, 3)
        sigma, nu = rng.uniform(0.3, 1.2), rng.uniform(0.05, 0.5)

        def ll(theta):
            return zaga_loglik(X, y, theta[:3], np.exp(theta[3]), 1 / (1 + np.exp(-theta[4])))

        theta = np.r_[beta, np.log(sigma), np.log(nu / (1 - nu))]
        np.testing.assert_allclose(zaga_score(X, y, beta, sigma, nu), numeric_grad(ll, theta),
                                   rtol=1e-5, atol=1e-5)

    @given(st.integers(0, 10_000))
    def test_likelihood_decomposition(self, seed):
        X, y = zaga_regression(200, np.array([0.1, 0.4]), seed=seed)
        rng = np.random.default_rng(seed)
        beta, sigma, nu = rng.normal(0, 0.5, 2), rng.uniform(0.2, 2), rng.uniform(0.01, 0.9)
        pos = y > 0
        n0 = np.count_nonzero(~pos)
        bern = n0 * np.log(nu) + pos.sum() * np.log(1 - nu)
        parts = bern + gamma_loglik(X[pos], y[pos], beta, 1 / sigma ** 2)
        assert zaga_loglik(X, y, beta, sigma, nu) == pytest.approx(parts, rel=1e-10, abs=1e-10)

    def test_permutation_invariance(self):
        X, y = zaga_regression(1000, np.array([0.4, -0.3, 0.6]), seed=6)
        a = fit_zaga(X, y)
        perm = np.random.default_rng(0).permutation(len(y))
        b = fit_zaga(X[perm], y[perm])
        np.testing.assert_allclose(b.beta_mu, a.beta_mu, atol=1e-10)
        assert b.sigma_hat == pytest.approx(a.sigma_hat, abs=1e-10)
        assert b.nu_hat == a.nu_hat

    def test_recovery_smoke(self):
        beta = np.array([0.5, 0.3, -0.2, 0.4, 0.1, -0.3, 0.2, 0.0])
        X, y = zaga_regression(5000, beta, seed=7)
        fit = fit_zaga(X, y)
        assert np.all(np.abs(fit.beta_mu - beta) < 3 * fit.standard_errors)
        assert fit.nu_hat == np.mean(y == 0)
        assert fit.sigma_hat == pytest.approx(0.5, abs=0.02)

    def test_nested_models(self):
        X, y = zaga_regression(600, np.array([0.2, 0.5, -0.4]), seed=8)
        small = fit_zaga(X[:, :2], y)
        big = fit_zaga(X, y)
        assert big.loglik >= small.loglik

    def test_irrelevant_column_aic(self):
        diffs = []
        for seed in range(40):
            X, y = zaga_regression(300, np.array([0.2, 0.5]), seed=100 + seed)
            noise = np.random.default_rng(seed).normal(size=(300, 1))
            diffs.append(aic(fit_zaga(np.hstack([X, noise]), y)) - aic(fit_zaga(X, y)))
        assert np.mean(diffs) > 0


class TestPredict:
    def fit_stub(self, beta, nu, sigma=0.5):
        return ZagaFit(tuple(f"x{i}" for i in range(len(beta))), np.asarray(beta, float), sigma, nu, 0.0, 1, 0)

    def test_zero_beta(self):
        mu, value = predict_response(self.fit_stub([0.0, 0.0], 0.0), np.array([[1.0, 3.0]]))
        assert mu[0] == 1.0 and value[0] == 1.0

    def test_mixture_mean(self):
        _, value = predict_response(self.fit_stub([np.log(2.0)], 0.5), np.array([[1.0]]))
        assert value[0] == pytest.approx(1.0, abs=1e-15)

    def test_point_variants(self):
        fit = self.fit_stub([np.log(2.0)], 0.2)
        assert predict_response(fit, [[1.0]], "mu")[1][0] == pytest.approx(2.0)
        med = predict_response(fit, [[1.0]], "median")[1][0]
        assert 0 < med < 2.0

    def test_calibration(self):
        X, y = zaga_regression(5000, np.array([0.3, 0.4, -0.2]), seed=9)
        fit = fit_zaga(X, y)
        _, value = predict_response(fit, X)
        assert abs(value.mean() / y.mean() - 1) < 0.02

    def test_column_mismatch(self):
        with pytest.raises(ColumnMismatch):
            predict_response(self.fit_stub([0.0, 0.0], 0.1), np.ones((2, 3)))
        with pytest.raises(ColumnMismatch):
            predict_response(self.fit_stub([0.0, 0.0], 0.1), DesignMatrix(np.ones((2, 2)), ("a", "b")))


class TestSerialization:
    def test_aic(self):
        fit = ZagaFit(tuple("abcdefgh"), np.zeros(8), 1.0, 0.1, -100.0, 10, 1)
        assert fit.n_params == 10
        assert aic(fit) == 220.0

    def test_round_trip_exact(self):
        X, y = zaga_regression(400, np.array([0.3, 0.1, -0.7]), seed=10)
        fit = fit_zaga(DesignMatrix.from_array(X, ["intercept", "a", "b"]), y)
        back = ZagaFit.from_text(fit.to_text())
        np.testing.assert_array_equal(back.beta_mu, fit.beta_mu)
        assert (back.sigma_hat, back.nu_hat, back.loglik) == (fit.sigma_hat, fit.nu_hat, fit.loglik)
        assert back.columns == fit.columns
        assert back.to_text() == fit.to_text()
