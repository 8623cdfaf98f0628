"""Convex payoff functions with exact left derivatives."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .grid import DomainError

KINDS = ("affine", "quadratic", "call", "put", "abs_shift", "piecewise_linear", "smooth_custom")


@dataclass(frozen=True, eq=False)
class ConvexPayoff:
    """A convex function ``f`` and its left derivative ``f'_-``.

    Build instances with the classmethods; ``params`` holds the numbers that
    define each kind. At a kink the left derivative takes the slope of the
    piece to the left, e.g. ``call(K).left_derivative(K) == 0``.
    """

    kind: str
    params: tuple = ()
    funcs: tuple[Callable, Callable] | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise DomainError(f"unknown payoff kind {self.kind!r}")

    @classmethod
    def affine(cls, a: float, b: float = 0.0) -> ConvexPayoff:
        """``f(x) = a x + b``."""
        return cls("affine", (float(a), float(b)))

    @classmethod
    def quadratic(cls, a: float, b: float = 0.0, c: float = 0.0) -> ConvexPayoff:
        """``f(x) = a x^2 + b x + c`` with ``a >= 0``."""
        if a < 0:
            raise DomainError("quadratic payoff needs a >= 0 to be convex")
        return cls("quadratic", (float(a), float(b), float(c)))

    @classmethod
    def call(cls, strike: float) -> ConvexPayoff:
        return cls("call", (float(strike),))

    @classmethod
    def put(cls, strike: float) -> ConvexPayoff:
        return cls("put", (float(strike),))

    @classmethod
    def abs_shift(cls, center: float = 0.0) -> ConvexPayoff:
        """``f(x) = |x - center|``."""
        return cls("abs_shift", (float(center),))

    @classmethod
    def piecewise_linear(cls, knots, slopes, anchor_value: float = 0.0) -> ConvexPayoff:
        """Continuous piecewise-linear ``f`` with ``f(knots[0]) = anchor_value``.

        ``slopes[0]`` applies left of ``knots[0]``, ``slopes[k]`` between
        ``knots[k-1]`` and ``knots[k]``, ``slopes[-1]`` right of the last knot.
        """
        knots = tuple(float(k) for k in knots)
        slopes = tuple(float(s) for s in slopes)
        if len(slopes) != len(knots) + 1 or not knots:
            raise DomainError("need m >= 1 knots and m + 1 slopes")
        if any(b <= a for a, b in zip(knots, knots[1:])):
            raise DomainError("knots must be strictly increasing")
        if any(b < a for a, b in zip(slopes, slopes[1:])):
            raise DomainError("slopes must be nondecreasing for convexity")
        return cls("piecewise_linear", (knots, slopes, float(anchor_value)))

    @classmethod
    def smooth_custom(cls, f: Callable, fprime: Callable, name: str = "custom") -> ConvexPayoff:
        """A differentiable convex ``f`` with its analytic derivative."""
        return cls("smooth_custom", (name,), (f, fprime))

    # -- evaluation ---------------------------------------------------------

    def __call__(self, x):
        return self.value(x)

    def value(self, x):
        x = np.asarray(x, dtype=float)
        k, p = self.kind, self.params
        if k == "affine":
            out = p[0] * x + p[1]
        elif k == "quadratic":
            out = (p[0] * x + p[1]) * x + p[2]
        elif k == "call":
            out = np.maximum(x - p[0], 0.0)
        elif k == "put":
            out = np.maximum(p[0] - x, 0.0)
        elif k == "abs_shift":
            out = np.abs(x - p[0])
        elif k == "piecewise_linear":
            knots, slopes, anchor = np.array(p[0]), np.array(p[1]), p[2]
            # value at each knot by accumulating the interior slopes
            at_knots = anchor + np.concatenate([[0.0], np.cumsum(np.diff(knots) * slopes[1:-1])])
            idx = np.searchsorted(knots, x, side="left")  # knot index to the right
            base = np.where(idx > 0, idx - 1, 0)
            out = at_knots[base] + slopes[idx] * (x - knots[base])
        else:
            out = np.asarray(self.funcs[0](x), dtype=float)
        return float(out) if out.ndim == 0 else out

    def left_derivative(self, x):
        x = np.asarray(x, dtype=float)
        k, p = self.kind, self.params
        if k == "affine":
            out = np.full_like(x, p[0])
        elif k == "quadratic":
            out = 2.0 * p[0] * x + p[1]
        elif k == "call":
            out = np.where(x > p[0], 1.0, 0.0)
        elif k == "put":
            out = np.where(x > p[0], 0.0, -1.0)
        elif k == "abs_shift":
            out = np.where(x > p[0], 1.0, -1.0)
        elif k == "piecewise_linear":
            knots, slopes = np.array(p[0]), np.array(p[1])
            out = slopes[np.searchsorted(knots, x, side="left")]
        else:
            out = np.asarray(self.funcs[1](x), dtype=float) * np.ones_like(x)
        return float(out) if out.ndim == 0 else out

    def describe(self) -> str:
        if self.kind == "smooth_custom":
            return f"smooth_custom({self.params[0]})"
        return f"{self.kind}{self.params}"


def parse_payoff(text: str) -> ConvexPayoff:
    """Parse ``kind`` or ``kind:p1,p2,...`` e.g. ``call:1.05``, ``quadratic:1,0,0``."""
    kind, _, rest = text.strip().partition(":")
    args = [float(a) for a in rest.split(",") if a.strip()] if rest else []
    if kind == "identity":
        return ConvexPayoff.affine(1.0, 0.0)
    if kind in ("affine", "quadratic", "call", "put", "abs_shift"):
        return getattr(ConvexPayoff, kind)(*args)
    raise DomainError(f"cannot parse payoff {text!r}")
