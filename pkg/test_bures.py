import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from bayesqst.bures import (
    dim_from_params,
    log_prior,
    num_params,
    rho_from_params,
    rho_matrix,
    rho_stack,
    sample_bures,
    sample_bures_batch,
)
from bayesqst.exceptions import DimensionMismatch, NonFiniteState
from bayesqst.qmatrix import check_density_matrix, purity


def direct_bures_purity(x, dim):
    """Tr(rho^2) for one draw, built entry by entry from the four blocks."""
    n = dim * dim
    g = np.empty((dim, dim), dtype=complex)
    h = np.empty((dim, dim), dtype=complex)
    for i in range(dim):
        for j in range(dim):
            k = i * dim + j
            g[i, j] = complex(x[k], x[n + k])
            h[i, j] = complex(x[2 * n + k], x[3 * n + k])
    q, r = np.linalg.qr(h)
    u = q @ np.diag([r[i, i] / abs(r[i, i]) for i in range(dim)])
    w = (u + np.eye(dim)) @ g
    m = w @ w.conj().T
    rho = m / np.trace(m).real
    return sum(abs(rho[i, j]) ** 2 for i in range(dim) for j in range(dim))


class TestParameterLayout:
    def test_num_params(self):
        assert num_params(2) == 16
        assert num_params(4) == 64

    def test_dim_from_params(self):
        assert dim_from_params(16) == 2
        assert dim_from_params(256) == 8

    @pytest.mark.parametrize("n", [0, 5, 12, 17])
    def test_bad_lengths(self, n):
        with pytest.raises(DimensionMismatch):
            dim_from_params(n)

    def test_rho_from_params_rejects_bad_length(self):
        with pytest.raises(DimensionMismatch):
            rho_from_params(np.ones(5))

    def test_rho_from_params_rejects_nan(self):
        x = np.ones(16)
        x[3] = np.nan
        with pytest.raises(NonFiniteState):
            rho_from_params(x)


class TestRhoMap:
    def test_known_blocks(self):
        # G = I, H = I gives U = I, W = 2I, rho = I/2
        x = np.zeros(16)
        x[0:4] = [1, 0, 0, 1]
        x[8:12] = [1, 0, 0, 1]
        assert_allclose(rho_matrix(x), np.eye(2) / 2, atol=1e-15)

    def test_row_major_blocks(self):
        # G = |0><1| (entry G[0, 1]), H = I gives rho = |0><0|
        x = np.zeros(16)
        x[1] = 1.0
        x[8:12] = [1, 0, 0, 1]
        assert_allclose(rho_matrix(x), np.diag([1.0, 0.0]), atol=1e-15)

    def test_draws_are_valid_states(self):
        rng = np.random.default_rng(1)
        for dim in (2, 4, 8):
            _, rho = sample_bures(dim, rng)
            assert rho.dim == dim

    def test_stack_matches_single(self):
        rng = np.random.default_rng(2)
        xs = rng.standard_normal((10, 64))
        stacked = rho_stack(xs)
        for x, rho in zip(xs, stacked):
            assert_allclose(rho, rho_matrix(x), atol=1e-15)

    @settings(max_examples=50, deadline=None)
    @given(seed=st.integers(0, 2 ** 32 - 1), scale=st.floats(1e-3, 1e3))
    def test_scale_invariance(self, seed, scale):
        x = np.random.default_rng(seed).standard_normal(16)
        assert_allclose(rho_matrix(scale * x), rho_matrix(x), atol=1e-10)

    @settings(max_examples=50, deadline=None)
    @given(seed=st.integers(0, 2 ** 32 - 1), dim=st.sampled_from([2, 4]))
    def test_every_draw_is_a_density_matrix(self, seed, dim):
        rho = rho_matrix(np.random.default_rng(seed).standard_normal(num_params(dim)))
        check_density_matrix(rho)


class TestSampling:
    def test_deterministic_for_seed(self):
        x1, rho1 = sample_bures(4, np.random.default_rng(9))
        x2, rho2 = sample_bures(4, np.random.default_rng(9))
        assert_allclose(x1, x2, atol=0)
        assert_allclose(rho1.mat, rho2.mat, atol=0)

    def test_batch_consumes_generator_like_single_draws(self):
        xs, _ = sample_bures_batch(2, 5, np.random.default_rng(10))
        rng = np.random.default_rng(10)
        singles = np.stack([sample_bures(2, rng)[0] for _ in range(5)])
        assert_allclose(xs, singles, atol=0)

    def test_mean_is_maximally_mixed(self):
        _, rhos = sample_bures_batch(2, 10000, np.random.default_rng(12))
        assert np.linalg.norm(rhos.mean(axis=0) - np.eye(2) / 2) <= 0.02

    @pytest.mark.parametrize("dim", [2, 4])
    def test_mean_purity_matches_direct_construction(self, dim):
        draws = 500
        rng = np.random.default_rng(30 + dim)
        purities = [purity(sample_bures(dim, rng)[1]) for _ in range(draws)]

        replay = np.random.default_rng(30 + dim)
        expected = [direct_bures_purity(replay.standard_normal(4 * dim * dim), dim) for _ in range(draws)]
        assert_allclose(purities, expected, rtol=1e-10)
        assert np.mean(purities) == pytest.approx(np.mean(expected), rel=1e-12)
        assert 1 / dim < np.mean(purities) < 1

    def test_rejects_bad_dimension(self):
        with pytest.raises(DimensionMismatch):
            sample_bures(0, np.random.default_rng(0))


class TestLogPrior:
    def test_at_origin(self):
        assert log_prior(np.zeros(16)) == pytest.approx(-8 * math.log(2 * math.pi))

    def test_quadratic_term(self):
        x = np.zeros(16)
        x[0] = 2.0
        assert log_prior(x) - log_prior(np.zeros(16)) == pytest.approx(-2.0)
