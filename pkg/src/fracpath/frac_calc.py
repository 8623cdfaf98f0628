"""Riemann-Liouville operators, fractional Besov norms and the generalized
Lebesgue-Stieltjes integral for functions sampled on a uniform grid.

Grid data are read as their piecewise-linear interpolant. Every singular
kernel ``u**gamma`` is integrated exactly against that interpolant cell by
cell, so the operators are exact for piecewise-linear functions and the cost of
evaluating an operator at all grid points is one convolution.

Derivatives use the Marchaud form

    D^a_{0+} f(x) = [f(x) x^-a + a * int_0^x (f(x) - f(s)) (x-s)^(-a-1) ds] / Gamma(1-a)

and its mirror image for the right-sided derivative. These agree with the
derivative-of-convolution definitions for absolutely continuous functions;
the tests check that numerically rather than assuming it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.signal import fftconvolve
from scipy.special import roots_jacobi

from .grid import DomainError, GridFunction, IntegralResult, SamplePath, TimeGrid

_GL_X, _GL_W = np.polynomial.legendre.leggauss(16)
_GL_X = 0.5 * (_GL_X + 1.0)
_GL_W = 0.5 * _GL_W

# Outer quadrature of the GLS pairing: Gauss-Legendre nodes per grid cell.
OUTER_NODES = 8


class BesovDivergenceError(ArithmeticError):
    """A Besov norm grows under refinement, so the integral is not defined."""

    def __init__(self, message: str, trajectory: list[float]):
        super().__init__(message)
        self.trajectory = trajectory


# ---------------------------------------------------------------------------
# Product-integration weights
# ---------------------------------------------------------------------------


@lru_cache(maxsize=256)
def _cell_moments(gamma: float, theta: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Moments of ``v**gamma`` over the cells ``[c, c+1]``, ``c = m - 1 + theta``.

    Returns ``(P, Q)`` indexed by ``m = 0..n`` (entry 0 unused, zero) with
    ``P_m = int_0^1 (1-w)(c+w)^gamma dw`` and ``Q_m = int_0^1 w (c+w)^gamma dw``.
    Cells away from the origin (``c >= 1``) use 16-point Gauss-Legendre, which
    is accurate to rounding there and avoids the cancellation of the closed form.
    """
    m = np.arange(1, n + 1, dtype=float)
    c = m - 1.0 + theta
    P = np.empty(n)
    Q = np.empty(n)
    near = c < 1.0
    if near.any():
        cn = c[near]
        g1, g2 = gamma + 1.0, gamma + 2.0
        total = ((cn + 1.0) ** g1 - cn**g1) / g1
        Q[near] = ((cn + 1.0) ** g2 - cn**g2) / g2 - cn * total
        P[near] = total - Q[near]
    far = ~near
    if far.any():
        vals = (c[far, None] + _GL_X[None, :]) ** gamma
        Q[far] = vals @ (_GL_W * _GL_X)
        P[far] = vals @ (_GL_W * (1.0 - _GL_X))
    zero = np.zeros(1)
    return np.concatenate([zero, P]), np.concatenate([zero, Q])


def _full_cell_sums(values: np.ndarray, gamma: float, theta: float) -> np.ndarray:
    """``S_k = sum_{m=1..k} Q_m f_{k-m} + P_m f_{k-m+1}`` for ``k = 0..n-1``.

    This is ``int f(x - u) u^gamma du`` over the full cells left of the point
    ``x = x_k + theta * dx``, in units where ``dx = 1``.
    """
    n = len(values) - 1
    P, Q = _cell_moments(float(gamma), float(theta), n)
    if n <= 64:
        conv_q = np.convolve(Q, values)
        conv_p = np.convolve(P, values)
    else:
        conv_q = fftconvolve(Q, values)
        conv_p = fftconvolve(P, values)
    k = np.arange(n)
    return conv_q[:n] + conv_p[1 : n + 1] - P[k + 1] * values[0]


def _full_cell_sum_at(values: np.ndarray, gamma: float, theta: float) -> float:
    """``S_k`` for the single point ``k = len(values) - 2`` (direct dot product)."""
    n = len(values) - 1
    k = n - 1
    if k == 0:
        return 0.0
    P, Q = _cell_moments(float(gamma), float(theta), k)
    m = np.arange(1, k + 1)
    return float(Q[1:] @ values[k - m] + P[1:] @ values[k - m + 1])


def _locate(grid: TimeGrid, x: float) -> tuple[int, float]:
    """Write ``x = x_k + theta * dx`` with ``theta in (0, 1]``."""
    r = x / grid.dt
    k = int(math.ceil(r - 1e-9)) - 1
    k = min(max(k, 0), grid.n_steps - 1)
    theta = r - k
    return k, min(max(theta, 0.0), 1.0)


def _check_order(alpha: float, lo_closed: bool, hi_closed: bool) -> float:
    alpha = float(alpha)
    ok_lo = alpha > 0
    ok_hi = alpha <= 1 if hi_closed else alpha < 1
    if not (ok_lo and ok_hi):
        rng = "(0, 1]" if hi_closed else "(0, 1)"
        raise DomainError(f"order must lie in {rng}, got {alpha}")
    return alpha


# ---------------------------------------------------------------------------
# Left-sided operators, vectorised over all cells
# ---------------------------------------------------------------------------


def _integral_points(values: np.ndarray, dx: float, alpha: float, theta: float) -> np.ndarray:
    """``I^alpha_{0+} f`` at ``x_k + theta*dx``, ``k = 0..n-1``."""
    slope = np.diff(values) / dx
    fx = values[:-1] + theta * dx * slope
    part = fx * (theta * dx) ** alpha / alpha - slope * (theta * dx) ** (alpha + 1.0) / (alpha + 1.0)
    full = dx**alpha * _full_cell_sums(values, alpha - 1.0, theta)
    return (part + full) / math.gamma(alpha)


def _derivative_points(values: np.ndarray, dx: float, alpha: float, theta: float) -> np.ndarray:
    """Marchaud ``D^alpha_{0+} f`` at ``x_k + theta*dx``, ``k = 0..n-1``."""
    slope = np.diff(values) / dx
    fx = values[:-1] + theta * dx * slope
    h = theta * dx
    # f(x) x^-a + a*J with the x^-a terms cancelled analytically.
    out = fx * h**-alpha + alpha * slope * h ** (1.0 - alpha) / (1.0 - alpha)
    out -= alpha * dx**-alpha * _full_cell_sums(values, -alpha - 1.0, theta)
    return out / math.gamma(1.0 - alpha)


def _integral_at(values: np.ndarray, dx: float, alpha: float, theta: float) -> float:
    slope = (values[-1] - values[-2]) / dx
    fx = values[-2] + theta * dx * slope
    part = fx * (theta * dx) ** alpha / alpha - slope * (theta * dx) ** (alpha + 1.0) / (alpha + 1.0)
    full = dx**alpha * _full_cell_sum_at(values, alpha - 1.0, theta)
    return (part + full) / math.gamma(alpha)


def _derivative_at(values: np.ndarray, dx: float, alpha: float, theta: float) -> float:
    slope = (values[-1] - values[-2]) / dx
    fx = values[-2] + theta * dx * slope
    h = theta * dx
    out = fx * h**-alpha + alpha * slope * h ** (1.0 - alpha) / (1.0 - alpha)
    out -= alpha * dx**-alpha * _full_cell_sum_at(values, -alpha - 1.0, theta)
    return out / math.gamma(1.0 - alpha)


def _left_segment(f: GridFunction, x: float) -> tuple[np.ndarray, float]:
    """Values on the cells up to the one containing ``x``, and ``theta``."""
    k, theta = _locate(f.grid, x)
    return f.values[: k + 2], theta


def _right_segment(g: GridFunction, x: float, t: float) -> tuple[np.ndarray, float]:
    """Values of ``s -> g(t - s)`` up to the cell containing ``u = t - x``."""
    K = g.grid.index_of(t)
    reflected = g.values[K::-1]
    k, theta = _locate(g.grid, t - x)
    return reflected[: k + 2], theta


def _validate_point(f: GridFunction, x: float, open_left: bool = False) -> None:
    T = f.grid.horizon
    if x < 0 or x > T * (1 + 1e-12) or (open_left and x <= 0):
        raise DomainError(f"point {x} outside {'(0' if open_left else '[0'}, {T}]")


def rl_integral_left(f: GridFunction, alpha: float, x: float) -> float:
    """``(I^alpha_{0+} f)(x) = Gamma(alpha)^-1 int_0^x f(s)(x-s)^(alpha-1) ds``."""
    alpha = _check_order(alpha, True, True)
    _validate_point(f, x)
    if x == 0:
        return 0.0
    vals, theta = _left_segment(f, x)
    return _integral_at(vals, f.grid.dt, alpha, theta)


def rl_integral_right(f: GridFunction, alpha: float, x: float, t: float) -> float:
    """``(I^alpha_{t-} f)(x) = Gamma(alpha)^-1 int_x^t f(s)(s-x)^(alpha-1) ds``; ``t`` on the grid."""
    alpha = _check_order(alpha, True, True)
    _validate_point(f, x)
    if not 0 <= x <= t:
        raise DomainError(f"need 0 <= x <= t, got x={x}, t={t}")
    if x == t:
        return 0.0
    vals, theta = _right_segment(f, x, t)
    return _integral_at(vals, f.grid.dt, alpha, theta)


def rl_derivative_left(f: GridFunction, alpha: float, x: float) -> float:
    """Marchaud form of ``(D^alpha_{0+} f)(x)`` for ``0 < x <= T``."""
    alpha = _check_order(alpha, True, False)
    if x <= 0:
        raise DomainError("left derivative is singular at x = 0")
    _validate_point(f, x, open_left=True)
    vals, theta = _left_segment(f, x)
    return _derivative_at(vals, f.grid.dt, alpha, theta)


def rl_derivative_right(g: GridFunction, alpha: float, x: float, t: float) -> float:
    """``(D^alpha_{t-} g_{t-})(x)`` with ``g_{t-}(s) = g(s) - g(t-)``.

    With the ``-1/Gamma(1-alpha)`` prefactor of the derivative-of-convolution
    definition, the Marchaud form is

        [h(x)(t-x)^-a + a * int_x^t (h(x) - h(s))(s-x)^(-a-1) ds] / Gamma(1-a),

    ``h = g_{t-}``, i.e. the left-sided operator applied to ``s -> h(t - s)``.
    ``t`` must be a grid point and ``0 <= x < t``.
    """
    alpha = _check_order(alpha, True, False)
    if not 0 <= x < t:
        raise DomainError(f"need 0 <= x < t, got x={x}, t={t}")
    vals, theta = _right_segment(g, x, t)
    return _derivative_at(vals - vals[0], g.grid.dt, alpha, theta)


def rl_integral_left_grid(f: GridFunction, alpha: float) -> GridFunction:
    """``I^alpha_{0+} f`` at every grid point."""
    alpha = _check_order(alpha, True, True)
    out = np.zeros_like(f.values)
    out[1:] = _integral_points(f.values, f.grid.dt, alpha, 1.0)
    return SamplePath(f.grid, out)


def rl_derivative_left_grid(f: GridFunction, alpha: float) -> np.ndarray:
    """``D^alpha_{0+} f`` at grid points ``t_1..t_n`` (``t_0`` is singular)."""
    alpha = _check_order(alpha, True, False)
    return _derivative_points(f.values, f.grid.dt, alpha, 1.0)


# ---------------------------------------------------------------------------
# Generalized Lebesgue-Stieltjes integral
# ---------------------------------------------------------------------------


def _check_beta(beta: float) -> float:
    beta = float(beta)
    if not 0 < beta < 1:
        raise DomainError(f"Besov index must lie in (0, 1), got {beta}")
    return beta


@lru_cache(maxsize=16)
def _jacobi_rule(beta: float, q: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes/weights on ``[0, 1]`` for the weight ``x**-beta``."""
    y, w = roots_jacobi(q, 0.0, -beta)
    return 0.5 * (y + 1.0), w * 0.5 ** (1.0 - beta)


def gls_value(f_vals: np.ndarray, g_vals: np.ndarray, dx: float, beta: float, q: int = OUTER_NODES) -> float:
    """``int_0^t f dg`` on ``[0, t]``, ``t = (len-1)*dx``, via the fractional pairing.

    Evaluates ``int_0^t (D^beta_{0+} f)(x) (D^{1-beta}_{t-} g_{t-})(x) dx``
    with ``q`` Gauss-Legendre nodes per cell. The ``f(0) x^-beta`` part of the
    left derivative is split off and integrated on the first cell with a
    Gauss-Jacobi rule. The pairing of the two real-valued operators equals
    ``-int f dg``; the sign is restored here.
    """
    f_vals = np.asarray(f_vals, dtype=float)
    g_vals = np.asarray(g_vals, dtype=float)
    K = len(f_vals) - 1
    if K < 1 or len(g_vals) != K + 1:
        raise DomainError("f and g must share a grid with at least one cell")
    a = 1.0 - beta
    f0 = f_vals[0]
    f_shift = f_vals - f0
    h_ref = g_vals[::-1] - g_vals[-1]
    nodes, weights = np.polynomial.legendre.leggauss(q)
    nodes = 0.5 * (nodes + 1.0)
    weights = 0.5 * weights
    c0 = f0 / math.gamma(1.0 - beta)
    total = 0.0
    for th, w in zip(nodes, weights):
        left = _derivative_points(f_shift, dx, beta, th)
        right = _derivative_points(h_ref, dx, a, 1.0 - th)[::-1]
        x = (np.arange(K) + th) * dx
        singular = np.zeros(K)
        singular[1:] = c0 * x[1:] ** -beta
        total += w * np.sum((left + singular) * right)
    total *= dx
    if f0 != 0.0:
        # f(0) x^-beta R(x) over the first cell with the weight x^-beta.
        jx, jw = _jacobi_rule(beta, q)
        first = 0.0
        for xn, wn in zip(jx, jw):
            first += wn * _derivative_at(h_ref, dx, a, 1.0 - xn)
        total += c0 * dx ** (1.0 - beta) * first
    return -total


def gls_integral(
    f: GridFunction,
    g: GridFunction,
    beta: float,
    t: float | None = None,
    levels: int = 3,
    check_besov: bool = True,
) -> IntegralResult:
    """Generalized Lebesgue-Stieltjes integral ``int_0^t f dg``.

    Computed on the grid of ``f``/``g`` and on ``levels - 1`` successive
    two-fold coarsenings; the result carries all values and the observed order.

    Raises:
        BesovDivergenceError: ``||f||_{2,beta}`` on ``[0, t]`` changes by more
            than 10% between the two finest levels.
    """
    beta = _check_beta(beta)
    if f.grid != g.grid:
        raise DomainError("f and g must live on the same grid")
    t = f.grid.horizon if t is None else t
    if not 0 < t <= f.grid.horizon * (1 + 1e-12):
        raise DomainError(f"t must lie in (0, T], got {t}")
    K = f.grid.index_of(t)
    factors = [2 ** (levels - 1 - i) for i in range(levels)]
    if K % factors[0]:
        raise DomainError(f"checkpoint index {K} not divisible by {factors[0]}")
    if check_besov:
        traj = [
            besov_norm_2(f.truncate(K).subsample(fac), beta) for fac in factors[-2:]
        ]
        if not _bounded(traj):
            raise BesovDivergenceError(
                f"||f||_(2,{beta}) not refinement-stable: {traj}", traj
            )
    dx = f.grid.dt
    sizes, vals = [], []
    for fac in factors:
        sizes.append(K // fac)
        vals.append(gls_value(f.values[: K + 1 : fac], g.values[: K + 1 : fac], dx * fac, beta))
    return IntegralResult.from_levels(sizes, vals, beta=beta)


# ---------------------------------------------------------------------------
# Fractional Besov norms
# ---------------------------------------------------------------------------


@dataclass
class BesovParts:
    """A Besov norm split into its computed pieces.

    ``diagonal`` is the contribution of the excluded cells ``|t - s| < dx``
    modelled by the local linear interpolant; ``raw`` excludes it.
    """

    value: float
    raw: float
    diagonal: float
    endpoint: float = 0.0
    detail: dict = field(default_factory=dict)


def besov_seminorm_1_parts(f: GridFunction, beta: float) -> BesovParts:
    """``sup_{s<t} |f(t)-f(s)|/(t-s)^beta + int_s^t |f(u)-f(s)|/(u-s)^(beta+1) du``.

    The sup runs over grid pairs. The inner integral is product-integrated
    against the interpolated ``|f(u) - f(s)|`` from the first off-diagonal
    node on; the diagonal cell uses the linear model
    ``|f(s+dx) - f(s)| dx^-beta / (1 - beta)``.
    """
    beta = _check_beta(beta)
    v = f.values
    n = len(v) - 1
    dx = f.grid.dt
    P, Q = _cell_moments(-beta - 1.0, 1.0, n)
    scale = dx**-beta
    prev = np.abs(v[1:] - v[:-1])
    diag = prev * scale / (1.0 - beta)
    inner = np.zeros(n)
    best = best_raw = best_diag = 0.0
    for d in range(1, n + 1):
        cur = np.abs(v[d:] - v[:-d])
        if d > 1:
            # cell [d-1, d] in lag units; P_{d-1} weights node d-1, Q_{d-1} node d
            inner = inner[:-1] + scale * (P[d - 1] * prev[:-1] + Q[d - 1] * cur)
        first = cur / (d * dx) ** beta
        total = first + inner + diag[: n - d + 1]
        i = int(np.argmax(total))
        if total[i] > best:
            best = float(total[i])
            best_raw = float(first[i] + inner[i])
            best_diag = float(diag[i])
        prev = cur
    return BesovParts(best, best_raw, best_diag)


def besov_seminorm_1(f: GridFunction, beta: float) -> float:
    return besov_seminorm_1_parts(f, beta).value


def besov_norm_2_parts(f: GridFunction, beta: float) -> BesovParts:
    """``int_0^T |f(t)|/t^beta dt + int_0^T int_0^t |f(t)-f(s)|/(t-s)^(beta+1) ds dt``.

    The double integral is rewritten over lags ``u = t - s`` as
    ``int_0^T u^(-beta-1) M(u) du`` with ``M(u) = int_0^(T-u) |f(s+u)-f(s)| ds``
    (trapezoid in ``s``), product-integrated in ``u`` beyond the first cell.
    On ``u < dx`` the linear model ``M(u) = (u/dx) M(dx)`` gives the diagonal
    mass ``M(dx) dx^-beta / (1 - beta)``.
    """
    beta = _check_beta(beta)
    v = f.values
    n = len(v) - 1
    dx = f.grid.dt
    # endpoint term: |f| piecewise linear against t^-beta, cells from 0
    # theta = 0 makes entry m the cell [m-1, m], i.e. grid cell m-1 in units of dx
    Pe, Qe = _cell_moments(-beta, 0.0, n)
    a = np.abs(v)
    endpoint = dx ** (1.0 - beta) * float(Pe[1:] @ a[:-1] + Qe[1:] @ a[1:])
    M = np.empty(n + 1)
    M[0] = 0.0
    for d in range(1, n + 1):
        diff = np.abs(v[d:] - v[:-d])
        M[d] = dx * (diff.sum() - 0.5 * (diff[0] + diff[-1])) if len(diff) > 1 else 0.0
    Pk, Qk = _cell_moments(-beta - 1.0, 1.0, n)
    # cells [d, d+1], d = 1..n-1: P_d weights M[d], Q_d weights M[d+1]
    raw = dx**-beta * float(Pk[1:n] @ M[1:n] + Qk[1:n] @ M[2 : n + 1]) if n > 1 else 0.0
    diagonal = M[1] * dx**-beta / (1.0 - beta) if n >= 1 else 0.0
    return BesovParts(endpoint + raw + diagonal, endpoint + raw, diagonal, endpoint)


def besov_norm_2(f: GridFunction, beta: float) -> float:
    return besov_norm_2_parts(f, beta).value


def _bounded(traj: list[float], rel: float = 0.10) -> bool:
    a, b = traj[-2], traj[-1]
    if not (math.isfinite(a) and math.isfinite(b)):
        return False
    return abs(b - a) <= rel * max(abs(a), abs(b), 1e-300)


def refinement_trajectory(f: GridFunction, beta: float, levels: int, norm: str = "2") -> list[float]:
    """Norm of ``f`` subsampled by ``2^(levels-1), ..., 2, 1``."""
    fn = besov_norm_2 if norm == "2" else besov_seminorm_1
    return [fn(f.subsample(2 ** (levels - 1 - i)), beta) for i in range(levels)]


@dataclass
class BesovDiagnostic:
    """Refinement behaviour of a Besov norm along nested grids.

    ``trajectory[i]`` is the norm on ``grid_sizes[i]`` steps. ``verdict`` is
    ``"finite"`` or ``"divergent"``. For the ``W_1`` seminorm
    ``octave_slope`` is the fitted log2 growth of per-octave lag
    contributions from fine to coarse; see :func:`octave_slope`.
    """

    norm: str
    beta: float
    grid_sizes: list[int]
    trajectory: list[float]
    verdict: str
    octave_slope: float | None = None

    @property
    def finite(self) -> bool:
        return self.verdict == "finite"

    def to_dict(self) -> dict:
        return {
            "norm": self.norm,
            "beta": self.beta,
            "grid_sizes": list(self.grid_sizes),
            "trajectory": [float(v) for v in self.trajectory],
            "verdict": self.verdict,
            "octave_slope": self.octave_slope,
        }


def octave_slope(f: GridFunction, beta: float, octaves: int = 4) -> float:
    """Growth rate of the fine-lag part of the ``W_1`` inner integral.

    The inner integral ``int |f(u)-f(s)| (u-s)^(-beta-1) du`` is averaged over
    ``s`` and split into lag octaves ``[2^k, 2^(k+1))`` grid cells. If ``f`` is
    Hoelder of order ``H`` the octave contributions scale like
    ``2^(k(H-beta))``, so the least-squares slope of their log2 over
    ``k = 1..octaves`` estimates ``H - beta``. Positive means the
    contributions shrink toward fine lags and further refinement adds a
    geometrically small amount; negative means each refinement adds more
    than the last. Octave 0 is skipped because it carries the diagonal cell.
    """
    beta = _check_beta(beta)
    v = f.values
    n = len(v) - 1
    top = 2 ** (octaves + 1)
    if n < 2 * top:
        raise DomainError(f"need at least {2 * top} steps for {octaves} octaves, got {n}")
    P, Q = _cell_moments(-beta - 1.0, 1.0, n)
    c = np.array([np.mean(np.abs(v[d:] - v[:-d])) for d in range(1, top + 1)])
    cells = f.grid.dt**-beta * (P[1:top] * c[:-1] + Q[1:top] * c[1:])
    bands = np.array([cells[2**k - 1 : 2 ** (k + 1) - 1].sum() for k in range(1, octaves + 1)])
    if np.any(bands <= 0):
        return float("inf")  # flat at fine lags
    return float(np.polyfit(np.arange(1, octaves + 1), np.log2(bands), 1)[0])


def besov_refinement_diagnostic(
    f: GridFunction,
    beta: float,
    norm: str = "2",
    levels: int = 3,
    octaves: int = 4,
    trajectory: bool = True,
) -> BesovDiagnostic:
    """Refinement verdict for ``||f||_{2,beta}`` or ``||f||_{1,beta}``.

    ``norm="2"``: finite when the two finest values differ by at most 10%.
    ``norm="1"``: the sup in the seminorm grows slowly for every path, so
    the verdict is read from :func:`octave_slope` instead (finite when
    positive). The raw trajectory is still reported unless
    ``trajectory=False``.
    """
    beta = _check_beta(beta)
    factors = [2 ** (levels - 1 - i) for i in range(levels)]
    sizes = [f.grid.n_steps // fac for fac in factors]
    if norm == "2":
        traj = refinement_trajectory(f, beta, levels, "2")
        return BesovDiagnostic("2", beta, sizes, traj, "finite" if _bounded(traj) else "divergent")
    if norm != "1":
        raise DomainError(f"norm must be '1' or '2', got {norm!r}")
    traj = refinement_trajectory(f, beta, levels, "1") if trajectory else []
    slope = octave_slope(f, beta, octaves)
    return BesovDiagnostic(
        "1", beta, sizes if trajectory else [], traj, "finite" if slope > 0 else "divergent", slope
    )


def integrand_besov_check(bundle, f, which: str, beta: float, levels: int = 3) -> BesovDiagnostic:
    """``||.||_{2,beta}`` refinement verdict for a representation integrand.

    ``which="geom"`` uses ``(T-s)/T f'_-(G(s)) G(s)``; ``which="arith"`` uses
    ``(T-s)/T f'_-(X(s)) S(s)``.
    """
    T = bundle.horizon
    grid = bundle.b_path.grid
    w = (T - grid.points) / T
    if which == "geom":
        vals = w * f.left_derivative(bundle.g_path.values) * bundle.g_path.values
    elif which == "arith":
        vals = w * f.left_derivative(bundle.x_path.values) * bundle.s_path.values
    else:
        raise DomainError(f"which must be 'geom' or 'arith', got {which!r}")
    return besov_refinement_diagnostic(SamplePath(grid, vals), beta, "2", levels)
