"""Covariance structure and exact samplers of fBm."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracpath.fbm_gen import (
    EmbeddingError,
    SeedSpec,
    circulant_sqrt_eigenvalues,
    covariance,
    covariance_matrix,
    sample_fbm,
    sample_fbm_paths,
)
from fracpath.grid import DomainError, TimeGrid


class TestCovariance:
    @pytest.mark.parametrize("h", [0.3, 0.5, 0.7, 0.9])
    def test_unit_diagonal(self, h):
        assert covariance(1.0, 1.0, h) == 1.0

    def test_known_value(self):
        assert covariance(1.0, 2.0, 0.75) == pytest.approx(math.sqrt(2.0), rel=1e-12)

    @pytest.mark.parametrize("t", [0.3, 1.0, 5.0])
    def test_zero_time_row(self, t):
        assert covariance(0.0, t, 0.7) == 0.0

    def test_negative_time_rejected(self):
        with pytest.raises(DomainError):
            covariance(-0.1, 1.0, 0.7)

    @pytest.mark.parametrize("h", [0.0, 1.0, 1.2])
    def test_hurst_range(self, h):
        with pytest.raises(DomainError):
            covariance(1.0, 1.0, h)

    @given(
        s=st.floats(0, 10, allow_nan=False),
        t=st.floats(0, 10, allow_nan=False),
        h=st.floats(0.05, 0.95),
    )
    @settings(max_examples=200, deadline=None)
    def test_symmetric(self, s, t, h):
        assert covariance(s, t, h) == covariance(t, s, h)

    @given(t=st.floats(0, 10, allow_nan=False), h=st.floats(0.05, 0.95))
    @settings(max_examples=100, deadline=None)
    def test_variance_is_power(self, t, h):
        assert covariance(t, t, h) == pytest.approx(t ** (2 * h), rel=1e-12, abs=1e-300)


class TestCovarianceMatrix:
    def test_single_step(self):
        np.testing.assert_array_equal(covariance_matrix(TimeGrid(1.0, 1), 0.6), [[0, 0], [0, 1]])

    def test_corner_entry(self):
        m = covariance_matrix(TimeGrid(2.0, 2), 0.75)
        assert m.shape == (3, 3)
        assert m[2, 2] == pytest.approx(2**1.5)
        np.testing.assert_array_equal(m[0], 0.0)

    def test_entries_match_scalar(self):
        grid = TimeGrid(1.5, 6)
        m = covariance_matrix(grid, 0.65)
        t = grid.points
        for i in range(7):
            for j in range(7):
                assert m[i, j] == pytest.approx(covariance(t[i], t[j], 0.65), abs=1e-14)

    @pytest.mark.parametrize("h", [0.55, 0.7, 0.9])
    @pytest.mark.parametrize("n", [8, 64, 256])
    def test_positive_semidefinite(self, h, n):
        m = covariance_matrix(TimeGrid(1.0, n), h)
        lam = np.linalg.eigvalsh(m)
        assert lam.min() >= -1e-8 * np.linalg.norm(m)


class TestSampler:
    @pytest.mark.parametrize("method", ["cholesky", "circulant"])
    def test_starts_at_zero(self, method):
        b = sample_fbm(TimeGrid(1.0, 64), 0.7, SeedSpec(1, 2), method)
        assert b.values[0] == 0.0
        assert b.values.shape == (65,)

    def test_one_step_cholesky_is_scaled_normal(self):
        b = sample_fbm(TimeGrid(1.0, 1), 0.7, SeedSpec(9, 0), "cholesky")
        z = SeedSpec(9, 0).rng().standard_normal(1)[0]
        assert b.values[1] == pytest.approx(z, rel=1e-14)

    @pytest.mark.parametrize("method", ["cholesky", "circulant"])
    def test_bit_reproducible(self, method):
        grid = TimeGrid(1.0, 128)
        a = sample_fbm(grid, 0.7, SeedSpec(123, 4), method)
        b = sample_fbm(grid, 0.7, SeedSpec(123, 4), method)
        assert np.array_equal(a.values, b.values)

    def test_streams_independent_of_batch(self):
        grid = TimeGrid(1.0, 32)
        batch = sample_fbm_paths(grid, 0.7, 5, [0, 1, 2, 3])
        alone = sample_fbm(grid, 0.7, SeedSpec(5, 2)).values
        assert np.array_equal(batch[2], alone)

    def test_distinct_indices_differ(self):
        grid = TimeGrid(1.0, 32)
        rows = sample_fbm_paths(grid, 0.7, 5, [0, 1])
        assert not np.allclose(rows[0], rows[1])

    def test_unknown_method(self):
        with pytest.raises(DomainError):
            sample_fbm(TimeGrid(1.0, 4), 0.7, 0, "euler")

    def test_terminal_variance(self):
        paths = sample_fbm_paths(TimeGrid(1.0, 64), 0.7, 2024, range(10_000))
        assert 0.95 <= paths[:, -1].var() <= 1.05

    def test_correlation_matches_formula(self):
        paths = sample_fbm_paths(TimeGrid(1.0, 64), 0.7, 77, range(10_000))
        rho = np.corrcoef(paths[:, 32], paths[:, 64])[0, 1]
        expected = covariance(0.5, 1.0, 0.7) / math.sqrt(0.5**1.4)
        assert abs(rho - expected) <= 0.03

    def test_increment_stationarity(self):
        n, h = 64, 0.7
        paths = sample_fbm_paths(TimeGrid(1.0, n), h, 31, range(10_000))
        lag = 4
        delta = lag / n
        for start in (0, 20, 40, 60):
            var = (paths[:, start + lag] - paths[:, start]).var()
            assert var == pytest.approx(delta ** (2 * h), rel=0.05)

    def test_methods_agree_in_law(self):
        grid = TimeGrid(1.0, 16)
        a = sample_fbm_paths(grid, 0.7, 1, range(10_000), "cholesky")
        b = sample_fbm_paths(grid, 0.7, 2, range(10_000), "circulant")
        assert np.max(np.abs(np.cov(a.T) - np.cov(b.T))) <= 0.05


class TestEmbedding:
    @pytest.mark.parametrize("h", [0.1, 0.5, 0.7, 0.95])
    def test_nonnegative_for_fbm(self, h):
        sq = circulant_sqrt_eigenvalues(1.0, 256, h)
        assert np.all(np.isfinite(sq))

    def test_negative_eigenvalue_raises(self, monkeypatch):
        import fracpath.fbm_gen as mod

        def bad(n, h, dt):
            g = np.zeros(n + 1)
            g[0], g[1] = 1.0, 0.9
            g[2] = -0.9
            return g

        monkeypatch.setattr(mod, "fgn_autocovariance", bad)
        with pytest.raises(EmbeddingError):
            mod.circulant_sqrt_eigenvalues.__wrapped__(1.0, 8, 0.7)
