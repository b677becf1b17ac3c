import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose, assert_array_equal

from aftnet.exceptions import DimensionMismatchError, StepCollapseError
from aftnet.network import PenaltyConfig, build_laplacian, empty_prior
from aftnet.selection import lambda_max
from aftnet.solver import (SolverOptions, fit_path, kkt_violation,
                           prox_grad_fit, soft_threshold)
from aftnet.survival_model import SurvivalDataset

from oracles import newton_mle_beta, penalized_lbfgs

TIGHT = SolverOptions(tol=1e-10, max_iter=100000)


def make_problem(seed, n=60, p=6, censor=0.3):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, p))
    beta = np.zeros(p)
    beta[:3] = [0.8, -0.6, 0.4]
    sigma = 0.9
    y = X @ beta + sigma * np.log(rng.exponential(size=n))
    d = (rng.random(n) > censor).astype(float)
    d[0] = 1
    A = np.zeros((p, p))
    for i in range(p - 1):
        A[i, i + 1] = A[i + 1, i] = 1.0
    return SurvivalDataset(X, y, d), build_laplacian(A), sigma


class TestSoftThreshold:
    def test_examples(self):
        assert_array_equal(soft_threshold([3.0, -3.0, 0.5, -0.5], 1.0),
                           [2.0, -2.0, 0.0, 0.0])

    def test_boundary_is_zero(self):
        assert soft_threshold([1.0], 1.0)[0] == 0.0

    def test_vector_threshold(self):
        assert_array_equal(soft_threshold([2.0, 2.0], [0.5, 3.0]), [1.5, 0.0])

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            soft_threshold([1.0], -0.1)

    @settings(max_examples=100, deadline=None)
    @given(st.floats(-1e6, 1e6), st.floats(0, 1e6))
    def test_is_prox_of_abs(self, u, t):
        # minimizer of 0.5 (x - u)^2 + t |x| against a local grid probe
        x = soft_threshold([u], t)[0]
        obj = lambda z: 0.5 * (z - u) ** 2 + t * abs(z)
        h = 1e-6 * max(1.0, abs(u))
        assert obj(x) <= obj(x + h) + 1e-9 * max(1.0, obj(x))
        assert obj(x) <= obj(x - h) + 1e-9 * max(1.0, obj(x))
        assert abs(x) <= abs(u)


class TestProxGradFit:
    def test_lambda_max_gives_exact_zero(self):
        data, prior, sigma = make_problem(0)
        lmax = lambda_max(data, 0.5, sigma)
        fit = prox_grad_fit(data, prior, PenaltyConfig(lmax, 0.5), sigma)
        assert np.all(fit.beta_hat == 0.0)
        assert fit.converged
        smaller = prox_grad_fit(data, prior, PenaltyConfig(0.95 * lmax, 0.5),
                                sigma)
        assert np.any(smaller.beta_hat != 0.0)

    def test_unpenalized_matches_newton(self):
        data, _, sigma = make_problem(1, n=200)
        fit = prox_grad_fit(data, empty_prior(data.p), PenaltyConfig(0.0, 0.5),
                            sigma, opts=TIGHT)
        ref = newton_mle_beta(np.asarray(data.features), data.log_times,
                              data.events, sigma)
        assert np.max(np.abs(fit.beta_hat - ref)) <= 1e-4

    @pytest.mark.parametrize("alpha", [1.0, 0.5, 0.2])
    def test_matches_bound_constrained_oracle(self, alpha):
        data, prior, sigma = make_problem(2)
        lam = 0.3 * lambda_max(data, alpha, sigma)
        fit = prox_grad_fit(data, prior, PenaltyConfig(lam, alpha), sigma,
                            opts=TIGHT)
        ref, ref_obj = penalized_lbfgs(np.asarray(data.features),
                                       data.log_times, data.events, sigma,
                                       lam, alpha, prior.laplacian.toarray())
        assert fit.objective <= ref_obj + 1e-9
        assert_allclose(fit.beta_hat, ref, atol=1e-4)

    @pytest.mark.parametrize("seed", range(5))
    def test_kkt_at_tight_tolerance(self, seed):
        data, prior, sigma = make_problem(10 + seed, censor=0.5)
        for ratio in (0.7, 0.2, 0.05):
            cfg = PenaltyConfig(ratio * lambda_max(data, 0.5, sigma), 0.5)
            fit = prox_grad_fit(data, prior, cfg, sigma, opts=TIGHT)
            assert kkt_violation(data, prior, cfg, sigma, fit.beta_hat) <= 1e-6

    def test_trace_is_monotone_and_starts_at_init(self):
        data, prior, sigma = make_problem(3)
        cfg = PenaltyConfig(0.1 * lambda_max(data, 0.5, sigma), 0.5)
        fit = prox_grad_fit(data, prior, cfg, sigma)
        assert fit.objective_trace.size == fit.iterations + 1
        assert np.all(np.diff(fit.objective_trace) <= 1e-12)

    def test_deterministic(self):
        data, prior, sigma = make_problem(4)
        cfg = PenaltyConfig(0.05, 0.5)
        a = prox_grad_fit(data, prior, cfg, sigma)
        b = prox_grad_fit(data, prior, cfg, sigma)
        assert_array_equal(a.beta_hat, b.beta_hat)
        assert_array_equal(a.objective_trace, b.objective_trace)

    def test_warm_start_reaches_same_point(self):
        data, prior, sigma = make_problem(5)
        cfg = PenaltyConfig(0.05, 0.5)
        cold = prox_grad_fit(data, prior, cfg, sigma, opts=TIGHT)
        warm = prox_grad_fit(data, prior, cfg, sigma, beta_init=np.ones(6),
                             opts=TIGHT)
        assert_allclose(cold.beta_hat, warm.beta_hat, atol=1e-7)

    def test_network_fuses_neighbours(self):
        # two identical columns joined by an edge get equal coefficients
        rng = np.random.default_rng(6)
        x = rng.normal(size=80)
        X = np.column_stack([x, x, rng.normal(size=80)])
        y = 0.8 * x + np.log(rng.exponential(size=80))
        data = SurvivalDataset(X, y, np.ones(80))
        A = np.zeros((3, 3))
        A[0, 1] = A[1, 0] = 1.0
        fit = prox_grad_fit(data, build_laplacian(A), PenaltyConfig(0.02, 0.5),
                            1.0, beta_init=[0.5, 0.0, 0.0], opts=TIGHT)
        assert fit.beta_hat[0] == pytest.approx(fit.beta_hat[1], abs=1e-6)

    def test_standardize_changes_scale_only(self):
        data, prior, sigma = make_problem(7)
        scaled = SurvivalDataset(np.asarray(data.features) * 3.0,
                                 data.log_times, data.events)
        opts = SolverOptions(tol=1e-10, max_iter=100000, standardize=True)
        a = prox_grad_fit(data, prior, PenaltyConfig(0.05, 0.5), sigma,
                          opts=opts)
        b = prox_grad_fit(scaled, prior, PenaltyConfig(0.05, 0.5), sigma,
                          opts=opts)
        assert_allclose(b.beta_hat * 3.0, a.beta_hat, atol=1e-7)

    def test_intercept_absorbs_shift(self):
        data, prior, sigma = make_problem(8)
        opts = SolverOptions(tol=1e-10, max_iter=100000, fit_intercept=True)
        cfg = PenaltyConfig(0.05, 0.5)
        a = prox_grad_fit(data, prior, cfg, sigma, opts=opts)
        shifted = SurvivalDataset(data.features, data.log_times + 2.0,
                                  data.events)
        b = prox_grad_fit(shifted, prior, cfg, sigma, opts=opts)
        assert_allclose(a.beta_hat, b.beta_hat, atol=1e-6)
        assert b.intercept == pytest.approx(a.intercept + 2.0, abs=1e-6)

    def test_step_collapse(self):
        data, prior, sigma = make_problem(9)
        opts = SolverOptions(m_init=1e-300, max_backtracks=3)
        with pytest.raises(StepCollapseError, match="step collapse"):
            prox_grad_fit(data, prior, PenaltyConfig(0.01, 0.5), sigma,
                          opts=opts)

    def test_iteration_cap_reports_not_converged(self):
        data, prior, sigma = make_problem(9)
        fit = prox_grad_fit(data, prior, PenaltyConfig(0.01, 0.5), sigma,
                            opts=SolverOptions(max_iter=2))
        assert not fit.converged
        assert fit.iterations == 2

    def test_dimension_checks(self):
        data, _, sigma = make_problem(0)
        with pytest.raises(DimensionMismatchError):
            prox_grad_fit(data, empty_prior(3), PenaltyConfig(0.1, 0.5), sigma)
        with pytest.raises(DimensionMismatchError):
            prox_grad_fit(data, empty_prior(6), PenaltyConfig(0.1, 0.5), sigma,
                          beta_init=np.zeros(2))

    @pytest.mark.parametrize("sigma", [0.0, -1.0, np.nan, np.inf])
    def test_rejects_bad_sigma(self, sigma):
        data, prior, _ = make_problem(0)
        with pytest.raises(ValueError):
            prox_grad_fit(data, prior, PenaltyConfig(0.1, 0.5), sigma)


class TestFitPath:
    def test_path_matches_single_fits(self):
        data, prior, sigma = make_problem(11)
        lmax = lambda_max(data, 0.5, sigma)
        grid = lmax * np.array([1.0, 0.5, 0.2, 0.05])
        path = fit_path(data, prior, 0.5, grid, sigma, opts=TIGHT)
        assert len(path) == 4
        assert np.all(path[0].beta_hat == 0)
        for lam, fit in path:
            single = prox_grad_fit(data, prior, PenaltyConfig(lam, 0.5), sigma,
                                   opts=TIGHT)
            assert_allclose(fit.beta_hat, single.beta_hat, atol=1e-7)

    def test_coef_matrix_and_lookup(self):
        data, prior, sigma = make_problem(12)
        path = fit_path(data, prior, 0.5, [0.3, 0.1, 0.03], sigma)
        assert path.coef_matrix().shape == (3, 6)
        assert path.fit_at(0.1) is path[1]
        with pytest.raises(KeyError):
            path.fit_at(0.2)

    @pytest.mark.parametrize("grid", [[0.1, 0.2], [0.1, 0.1], [], [0.1, -0.1]])
    def test_rejects_bad_grid(self, grid):
        data, prior, sigma = make_problem(0)
        with pytest.raises(ValueError):
            fit_path(data, prior, 0.5, grid, sigma)

    def test_support_grows_roughly_along_path(self):
        data, prior, sigma = make_problem(13, n=150)
        lmax = lambda_max(data, 1.0, sigma)
        path = fit_path(data, prior, 1.0, lmax * np.logspace(0, -2, 20), sigma)
        sizes = [f.active_set.size for f in path.fits]
        assert sizes[0] == 0
        assert sizes[-1] == 6
