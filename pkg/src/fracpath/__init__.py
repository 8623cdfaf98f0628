"""Fractional Brownian motion, fractional calculus and pathwise integral
representations of convex functions of running averages of geometric fBm."""

__version__ = "0.1.0"

from .grid import DomainError, IntegralResult, SamplePath, TimeGrid  # noqa: E402
from .payoffs import ConvexPayoff  # noqa: E402

__all__ = ["ConvexPayoff", "DomainError", "IntegralResult", "SamplePath", "TimeGrid", "__version__"]
