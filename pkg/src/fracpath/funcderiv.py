"""Vertical and horizontal derivatives of non-anticipative path functionals.

A functional ``F`` maps a path on ``[0, t]`` to a number. Its vertical
derivative bumps the endpoint value; its horizontal derivative extends the
path flat in time. Both are computed by finite differences on grid paths.
The bumped path keeps the unbumped value as its left limit at ``t``, so time
integrals inside ``F`` do not see the bump.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .grid import DomainError, SamplePath, TimeGrid, frame_to_csv

KINDS = ("endpoint_square", "running_integral", "paper_geom", "paper_arith", "product", "compose")


@dataclass(frozen=True)
class SmoothScalar:
    """A C^1 real function with its derivative."""

    name: str
    f: Callable[[float], float]
    df: Callable[[float], float]

    def __call__(self, u: float) -> float:
        return self.f(u)


IDENTITY = SmoothScalar("identity", lambda u: u, lambda u: 1.0)
SQUARE = SmoothScalar("square", lambda u: u * u, lambda u: 2.0 * u)
EXP = SmoothScalar("exp", np.exp, np.exp)
SCALARS = {s.name: s for s in (IDENTITY, SQUARE, EXP)}


def _trapezoid(values: np.ndarray, dt: float) -> float:
    return float(dt * (values.sum() - 0.5 * (values[0] + values[-1]))) if len(values) > 1 else 0.0


@dataclass(frozen=True)
class PathFunctional:
    """A non-anticipative functional from a closed set of kinds.

    Use the classmethods to build one. ``horizon`` is the ``T`` of the
    averaging functionals; ``parts`` holds the operands of ``product`` and
    ``compose``.
    """

    kind: str
    horizon: float = 1.0
    parts: tuple = ()

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise DomainError(f"unknown functional kind {self.kind!r}")

    @classmethod
    def endpoint_square(cls) -> PathFunctional:
        return cls("endpoint_square")

    @classmethod
    def running_integral(cls) -> PathFunctional:
        return cls("running_integral")

    @classmethod
    def paper_geom(cls, horizon: float = 1.0) -> PathFunctional:
        """``exp((T-t)/T x(t) + (1/T) int_0^t x)``, the geometric average of ``e^x``."""
        return cls("paper_geom", float(horizon))

    @classmethod
    def paper_arith(cls, horizon: float = 1.0) -> PathFunctional:
        """``(T-t)/T e^x(t) + (1/T) int_0^t e^x``, the arithmetic average of ``e^x``."""
        return cls("paper_arith", float(horizon))

    @classmethod
    def product(cls, F: PathFunctional, E: PathFunctional) -> PathFunctional:
        return cls("product", parts=(F, E))

    @classmethod
    def compose(cls, phi: SmoothScalar, F: PathFunctional) -> PathFunctional:
        return cls("compose", parts=(phi, F))

    def __call__(self, x: SamplePath, t: float | None = None) -> float:
        """``F_t(x)``; ``t`` defaults to the end of ``x`` and must be a grid point."""
        if t is not None:
            x = x.truncate(_index(x, t))
        return self._eval(x)

    def _eval(self, x: SamplePath) -> float:
        k = self.kind
        end = float(x.values[-1])
        if k == "endpoint_square":
            return end * end
        if k == "running_integral":
            return _trapezoid(x.continuous_values(), x.grid.dt)
        if k in ("paper_geom", "paper_arith"):
            T = self.horizon
            t = x.grid.horizon
            w = (T - t) / T
            cont = x.continuous_values()
            if k == "paper_geom":
                return float(np.exp(w * end + _trapezoid(cont, x.grid.dt) / T))
            return float(w * np.exp(end) + _trapezoid(np.exp(cont), x.grid.dt) / T)
        if k == "product":
            return self.parts[0]._eval(x) * self.parts[1]._eval(x)
        phi, F = self.parts
        return float(phi(F._eval(x)))

    def describe(self) -> str:
        if self.kind == "product":
            return f"product({self.parts[0].describe()},{self.parts[1].describe()})"
        if self.kind == "compose":
            return f"compose({self.parts[0].name},{self.parts[1].describe()})"
        return self.kind


def _index(x: SamplePath, t: float) -> int:
    k = x.grid.index_of(t)
    if k == 0:
        raise DomainError("functionals are evaluated at t > 0")
    return k


@dataclass(frozen=True)
class BumpSpec:
    """Finite-difference steps.

    Attributes:
        h_vertical: bump of the endpoint value.
        h_horizontal: time extension; ``None`` means one grid step. Must be a
            whole number of grid steps.
        richardson: combine steps ``h`` and ``h/2`` for the vertical
            derivatives to cancel the ``h^2`` error term.
    """

    h_vertical: float = 1e-3
    h_horizontal: float | None = None
    richardson: bool = False

    def __post_init__(self) -> None:
        if not self.h_vertical > 0:
            raise DomainError("h_vertical must be positive")
        if self.h_horizontal is not None and not self.h_horizontal > 0:
            raise DomainError("h_horizontal must be positive")


def vertical_perturb(x: SamplePath, t: float, h: float) -> SamplePath:
    """Path on ``[0, t]`` with ``x(t)`` replaced by ``x(t) + h``."""
    k = _index(x, t)
    vals = x.values[: k + 1].copy()
    vals[-1] += h
    return SamplePath(x.grid.truncate(k), vals, left_limit=float(x.values[k]))


def horizontal_steps(x: SamplePath, h: float) -> int:
    """Number of grid steps in ``h``; raises unless ``h`` is a whole multiple."""
    m = int(round(h / x.grid.dt))
    if m < 1 or abs(m * x.grid.dt - h) > 1e-9 * x.grid.dt:
        raise DomainError(f"horizontal step {h} is not a positive multiple of dt={x.grid.dt}")
    return m


def horizontal_extend(x: SamplePath, t: float, h: float) -> SamplePath:
    """Path on ``[0, t + h]`` equal to ``x`` up to ``t`` and frozen at ``x(t)`` after."""
    k = _index(x, t)
    m = horizontal_steps(x, h)
    vals = np.concatenate([x.values[: k + 1], np.full(m, x.values[k])])
    return SamplePath(TimeGrid((k + m) * x.grid.dt, k + m), vals)


def _central(F: PathFunctional, x: SamplePath, t: float, h: float) -> float:
    return (F(vertical_perturb(x, t, h)) - F(vertical_perturb(x, t, -h))) / (2.0 * h)


def _second(F: PathFunctional, x: SamplePath, t: float, h: float) -> float:
    mid = F(vertical_perturb(x, t, 0.0))
    return (F(vertical_perturb(x, t, h)) - 2.0 * mid + F(vertical_perturb(x, t, -h))) / (h * h)


def vertical_derivative(F: PathFunctional, x: SamplePath, t: float, spec: BumpSpec = BumpSpec()) -> float:
    """``dF_t/dx`` by a central difference in the endpoint value."""
    h = spec.h_vertical
    d = _central(F, x, t, h)
    if spec.richardson:
        d = (4.0 * _central(F, x, t, h / 2) - d) / 3.0
    return d


def second_vertical_derivative(F: PathFunctional, x: SamplePath, t: float, spec: BumpSpec = BumpSpec()) -> float:
    h = spec.h_vertical
    d = _second(F, x, t, h)
    if spec.richardson:
        d = (4.0 * _second(F, x, t, h / 2) - d) / 3.0
    return d


def horizontal_derivative(F: PathFunctional, x: SamplePath, t: float, spec: BumpSpec = BumpSpec()) -> float:
    """``(F_{t+h}(x_{t,h}) - F_t(x)) / h`` with the flat extension ``x_{t,h}``."""
    h = x.grid.dt if spec.h_horizontal is None else spec.h_horizontal
    return (F(horizontal_extend(x, t, h)) - F(x, t)) / h


# ---------------------------------------------------------------------------
# Rule checks
# ---------------------------------------------------------------------------


def check_vertical_chain_rule(phi: SmoothScalar, F: PathFunctional, x: SamplePath, t: float, spec: BumpSpec = BumpSpec()) -> float:
    """``|d(phi o F)/dx - phi'(F) dF/dx|`` with both derivatives numerical."""
    lhs = vertical_derivative(PathFunctional.compose(phi, F), x, t, spec)
    rhs = phi.df(F(x, t)) * vertical_derivative(F, x, t, spec)
    return abs(lhs - rhs)


def check_product_rule(F: PathFunctional, E: PathFunctional, x: SamplePath, t: float, spec: BumpSpec = BumpSpec()) -> float:
    """``|d(FE)/dx - (F dE/dx + E dF/dx)|``."""
    lhs = vertical_derivative(PathFunctional.product(F, E), x, t, spec)
    rhs = F(x, t) * vertical_derivative(E, x, t, spec) + E(x, t) * vertical_derivative(F, x, t, spec)
    return abs(lhs - rhs)


def check_horizontal_chain_rule(phi: SmoothScalar, F: PathFunctional, x: SamplePath, t: float, spec: BumpSpec = BumpSpec()) -> float:
    """``|D_t(phi o F) - phi'(F) D_t F|`` with forward differences."""
    lhs = horizontal_derivative(PathFunctional.compose(phi, F), x, t, spec)
    rhs = phi.df(F(x, t)) * horizontal_derivative(F, x, t, spec)
    return abs(lhs - rhs)


def residual_sweep(check: Callable[[BumpSpec], float], h0: float, halvings: int = 4, horizontal: bool = False) -> tuple[list[float], list[float]]:
    """Run ``check(spec)`` for ``h0, h0/2, ..., h0/2^halvings``.

    ``horizontal`` selects which step of the :class:`BumpSpec` is swept.
    """
    hs, res = [], []
    for i in range(halvings + 1):
        h = h0 / 2**i
        spec = BumpSpec(h_horizontal=h) if horizontal else BumpSpec(h_vertical=h)
        hs.append(h)
        res.append(float(check(spec)))
    return hs, res


def sweep_to_csv(hs, residuals) -> str:
    return frame_to_csv(["h", "residual"], [np.asarray(hs), np.asarray(residuals)])


# Closed forms for the averaging functionals along a path ``B``.


def paper_geom_derivatives(x: SamplePath, t: float, horizon: float = 1.0) -> tuple[float, float, float]:
    """(vertical, second vertical, horizontal) derivatives of ``paper_geom``."""
    w = (horizon - t) / horizon
    value = PathFunctional.paper_geom(horizon)(x, t)
    return w * value, w * w * value, 0.0


def paper_arith_derivatives(x: SamplePath, t: float, horizon: float = 1.0) -> tuple[float, float, float]:
    """(vertical, second vertical, horizontal) derivatives of ``paper_arith``."""
    w = (horizon - t) / horizon
    e = float(np.exp(x.values[x.grid.index_of(t)]))
    return w * e, w * e, 0.0
