"""Riemann-Stieltjes sums on nested dyadic partitions."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import DomainError, GridFunction, IntegralResult, SamplePath

TAGS = ("left", "trapezoid", "mid")


@dataclass(frozen=True)
class PartitionSpec:
    """Nested uniform partitions given by their step counts, coarse to fine.

    Each level must double the previous one so every grid refines the last.
    """

    levels: tuple[int, ...]

    def __post_init__(self) -> None:
        levels = tuple(int(n) for n in self.levels)
        if not levels or levels[0] < 1:
            raise DomainError("need at least one level with n_steps >= 1")
        for a, b in zip(levels, levels[1:]):
            if b != 2 * a:
                raise DomainError(f"levels must be nested dyadic refinements, got {levels}")
        object.__setattr__(self, "levels", levels)

    @classmethod
    def dyadic(cls, finest: int, count: int) -> PartitionSpec:
        return cls(tuple(finest // 2 ** (count - 1 - i) for i in range(count)))

    @property
    def finest(self) -> int:
        return self.levels[-1]

    def factors(self) -> list[int]:
        return [self.finest // n for n in self.levels]


def _check_paths(spec: PartitionSpec, *paths: SamplePath) -> None:
    for p in paths:
        if p.grid.n_steps != spec.finest:
            raise DomainError(
                f"paths must live on the finest grid ({spec.finest} steps), got {p.grid.n_steps}"
            )


def riemann_sum(phi: np.ndarray, g: np.ndarray, tag: str = "left") -> float:
    """``sum phi(tau_i) (g(t_{i+1}) - g(t_i))`` for one partition.

    ``tag`` picks ``tau_i``: ``left`` is ``t_i``; ``trapezoid`` averages the
    values at both ends; ``mid`` uses the midpoint value, which needs arrays
    of odd length (the odd entries are the midpoints).
    """
    phi = np.asarray(phi, dtype=float)
    g = np.asarray(g, dtype=float)
    if tag == "left":
        return float(phi[:-1] @ np.diff(g))
    if tag == "trapezoid":
        return float(0.5 * (phi[:-1] + phi[1:]) @ np.diff(g))
    if tag == "mid":
        if len(phi) % 2 == 0:
            raise DomainError("midpoint sums need an even number of cells")
        return float(phi[1::2] @ (g[2::2] - g[:-2:2]))
    raise DomainError(f"tag must be one of {TAGS}, got {tag!r}")


def riemann_stieltjes(
    phi: GridFunction,
    g: GridFunction,
    spec: PartitionSpec,
    tag: str = "left",
    t: float | None = None,
) -> IntegralResult:
    """``int_0^t phi dg`` as Riemann-Stieltjes sums on every level of ``spec``.

    ``phi`` and ``g`` live on the finest grid; coarser levels subsample them.
    For ``tag="mid"`` the level with ``n`` cells is summed with tags at the
    points of the grid with ``2n`` cells, so its finest level is half of
    ``spec.finest``.
    """
    _check_paths(spec, phi, g)
    K = phi.grid.n_steps if t is None else phi.grid.index_of(t)
    factors = spec.factors()
    if tag == "mid":
        factors = [2 * f for f in factors]
    if K % factors[0]:
        raise DomainError(f"upper limit index {K} not divisible by coarsest step factor {factors[0]}")
    sizes, values = [], []
    for fac in factors:
        step = fac // 2 if tag == "mid" else fac
        sizes.append(K // fac)
        values.append(riemann_sum(phi.values[: K + 1 : step], g.values[: K + 1 : step], tag))
    return IntegralResult.from_levels(sizes, values, tag=tag)


def quadratic_variation(p: SamplePath, spec: PartitionSpec) -> list[float]:
    """``sum (p(t_{i+1}) - p(t_i))^2`` on every level of ``spec``."""
    _check_paths(spec, p)
    return [float(np.sum(np.diff(p.values[::fac]) ** 2)) for fac in spec.factors()]


def is_cauchy(values, factor: float = 1.2) -> bool:
    """Successive differences shrink by at least ``factor`` per refinement."""
    d = np.abs(np.diff(np.asarray(values, dtype=float)))
    if len(d) < 2:
        return True
    return bool(np.all(d[1:] * factor <= d[:-1] + 1e-300))
