import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose

from aftnet.exceptions import DimensionMismatchError
from aftnet.network import (PenaltyConfig, build_laplacian, empty_prior,
                            penalty_value, smooth_penalty_gradient)

from oracles import central_gradient


def path_graph(p):
    A = np.zeros((p, p))
    for i in range(p - 1):
        A[i, i + 1] = A[i + 1, i] = 1.0
    return A


def random_graph(rng, p, density=0.4):
    U = np.triu(rng.random((p, p)) < density, k=1) * rng.uniform(0.1, 2, (p, p))
    return U + U.T


class TestBuildLaplacian:
    def test_path_graph(self):
        prior = build_laplacian(path_graph(3))
        assert_allclose(prior.laplacian.toarray(),
                        [[1, -1, 0], [-1, 2, -1], [0, -1, 1]])
        assert prior.n_edges == 2

    def test_rows_sum_to_zero(self):
        prior = build_laplacian(random_graph(np.random.default_rng(0), 12))
        assert_allclose(np.asarray(prior.laplacian.sum(axis=1)).ravel(), 0.0,
                        atol=1e-14)

    def test_accepts_sparse_input(self):
        dense = build_laplacian(path_graph(5))
        sparse = build_laplacian(sp.coo_matrix(path_graph(5)))
        assert_allclose(dense.laplacian.toarray(), sparse.laplacian.toarray())

    def test_negative_weight_names_entry(self):
        A = path_graph(3)
        A[0, 2] = A[2, 0] = -0.5
        with pytest.raises(ValueError, match=r"\(0, 2\)|\(2, 0\)"):
            build_laplacian(A)

    def test_asymmetry_names_first_entry(self):
        A = path_graph(4)
        A[1, 3] = 1.0
        with pytest.raises(ValueError, match=r"\(1, 3\)"):
            build_laplacian(A)

    def test_self_loop(self):
        A = path_graph(3)
        A[1, 1] = 1.0
        with pytest.raises(ValueError, match="self-loop"):
            build_laplacian(A)

    def test_non_square(self):
        with pytest.raises(ValueError, match="square"):
            build_laplacian(np.zeros((2, 3)))

    def test_node_name_count(self):
        with pytest.raises(DimensionMismatchError):
            build_laplacian(path_graph(3), ["a", "b"])

    def test_gershgorin_bound_dominates_spectrum(self):
        prior = build_laplacian(random_graph(np.random.default_rng(5), 15))
        top = np.linalg.eigvalsh(prior.laplacian.toarray()).max()
        assert prior.max_eigenvalue() >= top - 1e-12

    def test_empty(self):
        prior = empty_prior(4)
        assert prior.n_edges == 0
        assert prior.quadratic_form(np.arange(4.0)) == 0.0


class TestQuadraticForm:
    def test_single_edge(self):
        prior = build_laplacian(path_graph(2))
        assert prior.quadratic_form([1.0, 3.0]) == 4.0

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_matches_edge_loop(self, seed):
        rng = np.random.default_rng(seed)
        p = int(rng.integers(2, 12))
        A = random_graph(rng, p)
        b = rng.normal(size=p)
        loop = sum(A[i, j] * (b[i] - b[j]) ** 2
                   for i in range(p) for j in range(i + 1, p))
        assert build_laplacian(A).quadratic_form(b) == pytest.approx(
            loop, rel=1e-12, abs=1e-12)

    def test_constant_vector_in_kernel(self):
        prior = build_laplacian(random_graph(np.random.default_rng(1), 9))
        assert prior.quadratic_form(np.full(9, 2.5)) == pytest.approx(0.0,
                                                                      abs=1e-12)

    def test_nonnegative(self):
        rng = np.random.default_rng(2)
        prior = build_laplacian(random_graph(rng, 10))
        for _ in range(50):
            assert prior.quadratic_form(rng.normal(size=10)) >= -1e-12


class TestPenalty:
    def test_example(self):
        prior = build_laplacian(path_graph(2))
        val = penalty_value([1.0, -1.0], PenaltyConfig(2.0, 0.5), prior)
        # 2 * (0.5 * 2 + 0.5 * 4)
        assert val == 6.0

    def test_pure_lasso_ignores_network(self):
        prior = build_laplacian(path_graph(3))
        assert penalty_value([1.0, -2.0, 0.5], PenaltyConfig(1.0, 1.0),
                             prior) == 3.5

    def test_homogeneous_in_lambda(self):
        rng = np.random.default_rng(3)
        prior = build_laplacian(random_graph(rng, 6))
        b = rng.normal(size=6)
        a = penalty_value(b, PenaltyConfig(0.3, 0.4), prior)
        assert penalty_value(b, PenaltyConfig(0.9, 0.4), prior) == \
            pytest.approx(3 * a, rel=1e-14)

    def test_smooth_gradient_finite_differences(self):
        rng = np.random.default_rng(4)
        prior = build_laplacian(random_graph(rng, 7))
        cfg = PenaltyConfig(0.7, 0.3)
        b = rng.normal(size=7)
        fd = central_gradient(
            lambda v: cfg.lam * (1 - cfg.alpha) * prior.quadratic_form(v), b)
        assert_allclose(smooth_penalty_gradient(b, cfg, prior), fd,
                        rtol=1e-6, atol=1e-8)

    def test_dimension_check(self):
        with pytest.raises(DimensionMismatchError):
            penalty_value([1.0], PenaltyConfig(1.0, 0.5), empty_prior(2))

    @pytest.mark.parametrize("lam,alpha", [(-1.0, 0.5), (np.inf, 0.5),
                                           (1.0, 1.5), (1.0, -0.1)])
    def test_config_validation(self, lam, alpha):
        with pytest.raises(ValueError):
            PenaltyConfig(lam, alpha)
