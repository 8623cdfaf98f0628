"""Uniform time grids, sampled paths and integral results."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


class DomainError(ValueError):
    """Raised when an argument lies outside an operation's domain."""


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid ``t_i = i * T / n`` on ``[0, T]``."""

    horizon: float
    n_steps: int

    def __post_init__(self) -> None:
        if not self.horizon > 0:
            raise DomainError(f"horizon must be positive, got {self.horizon}")
        if int(self.n_steps) != self.n_steps or self.n_steps < 1:
            raise DomainError(f"n_steps must be a positive integer, got {self.n_steps}")

    @property
    def dt(self) -> float:
        return self.horizon / self.n_steps

    @property
    def points(self) -> np.ndarray:
        return np.arange(self.n_steps + 1) * self.dt

    def index_of(self, t: float, tol: float = 1e-9) -> int:
        """Index of grid point ``t``; raises if ``t`` is not on the grid."""
        k = int(round(t / self.dt))
        if k < 0 or k > self.n_steps or abs(k * self.dt - t) > tol * max(1.0, self.horizon):
            raise DomainError(f"t={t} is not a point of {self}")
        return k

    def coarsen(self, factor: int) -> TimeGrid:
        if self.n_steps % factor:
            raise DomainError(f"cannot coarsen {self.n_steps} steps by {factor}")
        return TimeGrid(self.horizon, self.n_steps // factor)

    def truncate(self, k: int) -> TimeGrid:
        """Grid on ``[0, t_k]`` with the same spacing."""
        if not 1 <= k <= self.n_steps:
            raise DomainError(f"cannot truncate to index {k}")
        return TimeGrid(k * self.dt, k)


@dataclass(frozen=True, eq=False)
class SamplePath:
    """Values of a real process on a uniform grid.

    ``left_limit`` is the value ``x(t-)`` just before the final grid point. It
    differs from ``values[-1]`` only for vertically perturbed paths, whose
    final value carries a jump that has no weight in time integrals.
    """

    grid: TimeGrid
    values: np.ndarray
    left_limit: float | None = None

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.grid.n_steps + 1,):
            raise DomainError(
                f"expected {self.grid.n_steps + 1} values, got shape {values.shape}"
            )
        object.__setattr__(self, "values", values)

    @property
    def times(self) -> np.ndarray:
        return self.grid.points

    @property
    def end_left_limit(self) -> float:
        return float(self.values[-1] if self.left_limit is None else self.left_limit)

    def continuous_values(self) -> np.ndarray:
        """Values with the endpoint replaced by its left limit."""
        if self.left_limit is None:
            return self.values
        out = self.values.copy()
        out[-1] = self.left_limit
        return out

    def subsample(self, factor: int) -> SamplePath:
        return SamplePath(self.grid.coarsen(factor), self.values[::factor])

    def truncate(self, k: int) -> SamplePath:
        return SamplePath(self.grid.truncate(k), self.values[: k + 1])

    def map(self, func) -> SamplePath:
        return SamplePath(self.grid, func(self.values))

    def to_csv(self) -> str:
        return frame_to_csv(["t", "value"], [self.times, self.values])


# Deterministic functions and realised paths share one carrier.
GridFunction = SamplePath


def grid_function(func, horizon: float, n_steps: int) -> GridFunction:
    """Sample a vectorised callable on the uniform grid."""
    grid = TimeGrid(horizon, n_steps)
    return SamplePath(grid, np.asarray(func(grid.points), dtype=float) * np.ones(n_steps + 1))


def format_float(x: float) -> str:
    return repr(float(x)) if math.isfinite(x) else str(float(x))


def frame_to_csv(header: Sequence[str], columns: Sequence[np.ndarray]) -> str:
    """CSV text with 17 significant digits (round-trip exact)."""
    lines = [",".join(header)]
    for row in zip(*columns):
        lines.append(",".join(f"{float(v):.17g}" for v in row))
    return "\n".join(lines) + "\n"


def richardson_order(values: Sequence[float]) -> float:
    """Observed convergence order from values at successively halved steps.

    Uses the last three values; returns ``nan`` when fewer are available or the
    differences are degenerate.
    """
    if len(values) < 3:
        return float("nan")
    a, b, c = values[-3:]
    d1, d2 = abs(b - a), abs(c - b)
    if d1 == 0.0 or d2 == 0.0:
        return float("inf") if d2 == 0.0 else float("nan")
    return math.log2(d1 / d2)


@dataclass
class IntegralResult:
    """A numerical integral together with its refinement history.

    ``values[i]`` is the approximation on a grid of ``grid_sizes[i]`` steps;
    the sizes increase and ``value`` is the finest approximation.
    """

    value: float
    grid_sizes: list[int]
    values: list[float]
    estimated_order: float = float("nan")
    beta: float | None = None
    extra: dict = field(default_factory=dict)

    @classmethod
    def from_levels(cls, grid_sizes, values, beta=None, **extra) -> IntegralResult:
        values = [float(v) for v in values]
        return cls(
            value=values[-1],
            grid_sizes=[int(n) for n in grid_sizes],
            values=values,
            estimated_order=richardson_order(values),
            beta=beta,
            extra=extra,
        )

    @property
    def extrapolated(self) -> float:
        """Richardson extrapolation with the observed order (finest value if undefined)."""
        p = self.estimated_order
        if len(self.values) < 2 or not math.isfinite(p) or p <= 0:
            return self.value
        return self.value + (self.values[-1] - self.values[-2]) / (2.0**p - 1.0)

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "grid_sizes": list(self.grid_sizes),
            "values": list(self.values),
            "estimated_order": _json_float(self.estimated_order),
            "beta": self.beta,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> IntegralResult:
        d = json.loads(text)
        order = d.get("estimated_order")
        return cls(
            value=float(d["value"]),
            grid_sizes=[int(n) for n in d["grid_sizes"]],
            values=[float(v) for v in d["values"]],
            estimated_order=float("nan") if order is None else float(order),
            beta=d.get("beta"),
        )


def _json_float(x: float):
    return float(x) if math.isfinite(x) else None
