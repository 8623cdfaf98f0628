"""Geometric fBm, its running geometric and arithmetic averages, and
empirical regularity estimators."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fbm_gen import check_hurst, sample_fbm_paths
from .grid import DomainError, SamplePath, TimeGrid, frame_to_csv
from .payoffs import ConvexPayoff  # noqa: F401  re-exported for convenience

PROCESSES = ("fbm", "log_G", "X")


def cumulative_trapezoid(values: np.ndarray, dt: float) -> np.ndarray:
    """Running composite trapezoid ``int_0^{t_i}`` along the last axis, starting at 0."""
    values = np.asarray(values, dtype=float)
    out = np.zeros_like(values)
    out[..., 1:] = np.cumsum(0.5 * dt * (values[..., 1:] + values[..., :-1]), axis=-1)
    return out


def gfbm(b: SamplePath) -> SamplePath:
    """Geometric fBm ``S = exp(B)``."""
    return b.map(np.exp)


def _check_horizon(s: SamplePath, T: float) -> None:
    if not math.isclose(s.grid.horizon, T, rel_tol=1e-12):
        raise DomainError(f"path horizon {s.grid.horizon} differs from T={T}")


def _weights(grid: TimeGrid, T: float) -> np.ndarray:
    return (T - grid.points) / T


def geometric_average_values(log_s: np.ndarray, dt: float, T: float) -> np.ndarray:
    """``log G`` from ``log S`` on rows of a uniform grid starting at 0."""
    t = np.arange(log_s.shape[-1]) * dt
    return cumulative_trapezoid(log_s, dt) / T + (T - t) / T * log_s


def arithmetic_average_values(s: np.ndarray, dt: float, T: float) -> np.ndarray:
    """``X`` from ``S`` on rows of a uniform grid starting at 0 (no sign check)."""
    t = np.arange(s.shape[-1]) * dt
    return (T - t) / T * s + cumulative_trapezoid(s, dt) / T


def geometric_average_path(s: SamplePath, T: float) -> SamplePath:
    """``G(t) = exp((1/T) int_0^t log S) * S(t)^((T-t)/T)``, trapezoid in time."""
    _check_horizon(s, T)
    if np.any(s.values <= 0):
        raise DomainError("geometric average needs a strictly positive path")
    return SamplePath(s.grid, np.exp(geometric_average_values(np.log(s.values), s.grid.dt, T)))


def arithmetic_average_path(s: SamplePath, T: float) -> SamplePath:
    """``X(t) = ((T-t)/T) S(t) + (1/T) int_0^t S``, trapezoid in time."""
    _check_horizon(s, T)
    if np.any(s.values <= 0):
        raise DomainError("arithmetic average needs a strictly positive path")
    return SamplePath(s.grid, arithmetic_average_values(s.values, s.grid.dt, T))


@dataclass(frozen=True, eq=False)
class AveragePathBundle:
    """``B``, ``S = e^B`` and the running averages ``G`` and ``X`` on one grid."""

    b_path: SamplePath
    s_path: SamplePath
    g_path: SamplePath
    x_path: SamplePath
    horizon: float

    @classmethod
    def from_fbm(cls, b: SamplePath) -> AveragePathBundle:
        T = b.grid.horizon
        s = gfbm(b)
        g = SamplePath(b.grid, np.exp(geometric_average_values(b.values, b.grid.dt, T)))
        return cls(b, s, g, arithmetic_average_path(s, T), T)

    @property
    def grid(self) -> TimeGrid:
        return self.b_path.grid

    def subsample(self, factor: int) -> AveragePathBundle:
        """Bundle rebuilt from ``B`` on the coarser grid (averages recomputed there)."""
        return AveragePathBundle.from_fbm(self.b_path.subsample(factor))

    def to_csv(self) -> str:
        return frame_to_csv(
            ["t", "B", "S", "G", "X"],
            [self.grid.points, self.b_path.values, self.s_path.values, self.g_path.values, self.x_path.values],
        )


def payoff_eval(f: ConvexPayoff, x):
    return f.value(x)


def payoff_left_derivative(f: ConvexPayoff, x):
    return f.left_derivative(x)


# ---------------------------------------------------------------------------
# Regularity estimators
# ---------------------------------------------------------------------------


def holder_exponent_estimate(p: SamplePath, max_level: int | None = None) -> float:
    """Hoelder exponent of a path from dyadic-lag sup statistics.

    For lags ``2^j`` cells, ``j = 0..J``, takes the largest ``|p(t+d)-p(t)|``
    over increments that start on a fixed lattice of spacing ``2^J`` cells,
    so every lag is judged on the same number of increments, and fits the
    log-log slope by least squares. Taking the sup over all overlapping
    increments instead biases the slope low by the growth of Gaussian maxima
    with sample count. ``J`` defaults to ``min(8, log2(n) - 4)``.

    Returns ``+inf`` for a constant path.
    """
    n = p.grid.n_steps
    if n < 64:
        raise DomainError(f"Hoelder estimate needs n_steps >= 64, got {n}")
    J = min(8, int(math.log2(n)) - 4) if max_level is None else int(max_level)
    v = p.values
    stride = 2**J
    starts = np.arange(0, n - stride + 1, stride)
    sups = np.array([np.max(np.abs(v[starts + 2**j] - v[starts])) for j in range(J + 1)])
    if np.all(sups == 0):
        return float("inf")
    if np.any(sups == 0):
        return float("nan")
    lags = (2.0 ** np.arange(J + 1)) * p.grid.dt
    return float(np.polyfit(np.log(lags), np.log(sups), 1)[0])


def _process_rows(process: str, b: np.ndarray, dt: float, T: float) -> np.ndarray:
    if process == "fbm":
        return b
    if process == "log_G":
        return geometric_average_values(b, dt, T)
    if process == "X":
        return arithmetic_average_values(np.exp(b), dt, T)
    raise DomainError(f"process must be one of {PROCESSES}, got {process!r}")


def increment_moments(
    process: str,
    p: float,
    h: float,
    n_paths: int,
    grid: TimeGrid,
    master_seed: int = 0,
    lags: tuple[int, ...] = (1, 2, 4, 8, 16, 32),
    method: str = "circulant",
) -> tuple[np.ndarray, np.ndarray]:
    """Monte Carlo ``E|Z(t)-Z(s)|^p`` at lags ``lags * dt``.

    The expectation is averaged over paths and over all start times ``s``.
    Returns ``(lag_times, moments)``.
    """
    if not 1 <= p <= 4:
        raise DomainError(f"moment order must lie in [1, 4], got {p}")
    h = check_hurst(h)
    b = sample_fbm_paths(grid, h, master_seed, range(n_paths), method)
    z = _process_rows(process, b, grid.dt, grid.horizon)
    moments = np.array([np.mean(np.abs(z[:, d:] - z[:, :-d]) ** p) for d in lags])
    return np.asarray(lags, dtype=float) * grid.dt, moments


def increment_moment_scaling(
    process: str,
    p: float,
    h: float,
    n_paths: int,
    grid: TimeGrid,
    master_seed: int = 0,
    lags: tuple[int, ...] = (1, 2, 4, 8, 16, 32),
    method: str = "circulant",
) -> float:
    """Log-log regression slope of ``E|Z(t)-Z(s)|^p`` against the lag.

    ``process`` selects ``Z``: ``fbm`` is ``B``, ``log_G`` is ``log G`` and
    ``X`` is the arithmetic-average functional.
    """
    if n_paths < 1:
        raise DomainError("n_paths must be positive")
    lag_t, mom = increment_moments(process, p, h, n_paths, grid, master_seed, lags, method)
    return float(np.polyfit(np.log(lag_t), np.log(mom), 1)[0])
