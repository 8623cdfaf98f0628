"""Exact sampling of fractional Brownian motion on uniform grids.

Two exact samplers are provided. ``cholesky`` factors the covariance of
``(B(t_1), ..., B(t_n))`` directly; ``circulant`` embeds the Toeplitz
covariance of the increments (fractional Gaussian noise) in a circulant matrix
of size ``2n`` and diagonalises it with the FFT, then cumulates.

Every path is driven by its own generator seeded from ``(master_seed,
path_index)`` through :class:`numpy.random.SeedSequence`, so paths are
reproducible and independent of how many others are drawn or in which order.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable

import numpy as np

from .grid import DomainError, SamplePath, TimeGrid

METHODS = ("cholesky", "circulant")


class EmbeddingError(RuntimeError):
    """The circulant embedding has a materially negative eigenvalue."""


@dataclass(frozen=True)
class SeedSpec:
    master_seed: int
    path_index: int = 0

    def rng(self) -> np.random.Generator:
        seq = np.random.SeedSequence(int(self.master_seed) & (2**64 - 1), spawn_key=(int(self.path_index),))
        return np.random.default_rng(seq)


def check_hurst(h: float, strict_half: bool = False) -> float:
    """Validate a Hurst index; ``strict_half`` demands ``1/2 < h < 1``."""
    h = float(h)
    lo = 0.5 if strict_half else 0.0
    if not lo < h < 1.0:
        interval = "(1/2, 1)" if strict_half else "(0, 1)"
        raise DomainError(f"Hurst index must lie in {interval}, got {h}")
    return h


def covariance(s: float, t: float, h: float) -> float:
    """``Cov(B(s), B(t)) = (t^2H + s^2H - |t-s|^2H) / 2``."""
    if s < 0 or t < 0:
        raise DomainError(f"times must be nonnegative, got s={s}, t={t}")
    h2 = 2.0 * check_hurst(h)
    return 0.5 * (t**h2 + s**h2 - abs(t - s) ** h2)


def covariance_matrix(grid: TimeGrid, h: float) -> np.ndarray:
    """Covariance of ``B`` at all grid points, including the zero row for ``t_0``."""
    h2 = 2.0 * check_hurst(h)
    t = grid.points
    return 0.5 * (t[:, None] ** h2 + t[None, :] ** h2 - np.abs(t[:, None] - t[None, :]) ** h2)


def fgn_autocovariance(n: int, h: float, dt: float) -> np.ndarray:
    """Autocovariance of increments ``B(t_{i+1}) - B(t_i)`` at lags ``0..n``."""
    h2 = 2.0 * h
    k = np.arange(n + 1, dtype=float)
    return 0.5 * dt**h2 * (np.abs(k + 1) ** h2 - 2.0 * k**h2 + np.abs(k - 1) ** h2)


@lru_cache(maxsize=32)
def _cholesky_factor(horizon: float, n: int, h: float) -> np.ndarray:
    cov = covariance_matrix(TimeGrid(horizon, n), h)[1:, 1:]
    return np.linalg.cholesky(cov)


@lru_cache(maxsize=32)
def circulant_sqrt_eigenvalues(horizon: float, n: int, h: float, tol: float = 1e-10) -> np.ndarray:
    """Square roots of the eigenvalues of the ``2n`` circulant embedding.

    Raises :class:`EmbeddingError` when an eigenvalue is below
    ``-tol * max_eigenvalue``; tiny negative round-off is set to zero.
    """
    gamma = fgn_autocovariance(n, h, horizon / n)
    row = np.concatenate([gamma, gamma[n - 1 : 0 : -1]])
    lam = np.fft.fft(row).real
    floor = -tol * np.max(np.abs(lam))
    if lam.min() < floor:
        raise EmbeddingError(
            f"circulant embedding not nonnegative definite: min eigenvalue {lam.min():.3e} "
            f"(H={h}, n={n})"
        )
    return np.sqrt(np.clip(lam, 0.0, None))


def _draw(grid: TimeGrid, h: float, rng: np.random.Generator, method: str) -> np.ndarray:
    n = grid.n_steps
    values = np.zeros(n + 1)
    if method == "cholesky":
        values[1:] = _cholesky_factor(grid.horizon, n, h) @ rng.standard_normal(n)
    elif method == "circulant":
        m = 2 * n
        sq = circulant_sqrt_eigenvalues(grid.horizon, n, h)
        z = rng.standard_normal(m) + 1j * rng.standard_normal(m)
        w = np.fft.fft(sq * z) / np.sqrt(m)
        values[1:] = np.cumsum(w.real[:n])
    else:
        raise DomainError(f"unknown method {method!r}; expected one of {METHODS}")
    return values


def sample_fbm(
    grid: TimeGrid, h: float, seed: SeedSpec | int, method: str = "circulant"
) -> SamplePath:
    """Draw one fBm path on ``grid`` with ``B(0) = 0``."""
    h = check_hurst(h)
    if isinstance(seed, (int, np.integer)):
        seed = SeedSpec(int(seed), 0)
    return SamplePath(grid, _draw(grid, h, seed.rng(), method))


def sample_fbm_paths(
    grid: TimeGrid,
    h: float,
    master_seed: int,
    path_indices: Iterable[int],
    method: str = "circulant",
) -> np.ndarray:
    """Stack of paths, one row per path index, each from its own stream."""
    h = check_hurst(h)
    rows = [_draw(grid, h, SeedSpec(master_seed, i).rng(), method) for i in path_indices]
    return np.array(rows).reshape(-1, grid.n_steps + 1)
