"""Pathwise integral representations of convex functions of running averages
of geometric fBm, their numerical verification, and the hedging experiments.

Each identity has the form ``f(A(t)) = f(A(0)) + int_0^t phi(s) dB(s)`` where
``A`` is one of the running averages:

=================  ==========================  ==================================
identity           ``A(t)``                    ``phi(s)``
=================  ==========================  ==================================
``prop_hedge1``    ``G(t)``                    ``(T-s)/T G(s)``
``prop_arithmavg`` ``X(t)``                    ``(T-s)/T S(s)``
``thm_limit1``     ``G(t)``                    ``(T-s)/T f'_-(G(s)) G(s)``
``thm_limit2``     ``X(t)``                    ``(T-s)/T f'_-(X(s)) S(s)``
``remark_fbm``     ``(T-t)/T B(t) + int B/T``  ``(T-s)/T f'_-(A(s))``
=================  ==========================  ==================================

The two propositions are the theorems with ``f(x) = x`` and are evaluated
through the same code path.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .fbm_gen import check_hurst, sample_fbm, SeedSpec
from .frac_calc import gls_integral
from .grid import DomainError, GridFunction, IntegralResult, SamplePath, TimeGrid, frame_to_csv
from .path_model import AveragePathBundle, arithmetic_average_values
from .payoffs import ConvexPayoff
from .riemann import PartitionSpec, riemann_stieltjes, riemann_sum

IDENTITIES = ("prop_hedge1", "prop_arithmavg", "thm_limit1", "thm_limit2", "remark_fbm")
INTEGRATORS = ("riemann", "gls")
DEFAULT_CHECKPOINTS = (0.25, 0.5, 0.75, 1.0)

_IDENTITY = ConvexPayoff.affine(1.0, 0.0)


@dataclass(frozen=True)
class IdentitySpec:
    """Which identity to check and how.

    Attributes:
        which: one of :data:`IDENTITIES`.
        payoff: the convex ``f``; ignored (identity) for the propositions.
        checkpoints: fractions of ``T`` at which to compare both sides.
        integrator: ``riemann`` or ``gls``.
        beta: Besov index for ``gls``; must satisfy ``1 - H < beta < 1/2``.
        tag: Riemann-sum tag, see :func:`fracpath.riemann.riemann_sum`.
    """

    which: str
    payoff: ConvexPayoff | None = None
    checkpoints: tuple[float, ...] = DEFAULT_CHECKPOINTS
    integrator: str = "riemann"
    beta: float = 0.35
    tag: str = "trapezoid"

    def __post_init__(self) -> None:
        if self.which not in IDENTITIES:
            raise DomainError(f"which must be one of {IDENTITIES}, got {self.which!r}")
        if self.integrator not in INTEGRATORS:
            raise DomainError(f"integrator must be one of {INTEGRATORS}, got {self.integrator!r}")
        if self.which.startswith("thm") or self.which == "remark_fbm":
            if self.payoff is None:
                raise DomainError(f"{self.which} needs a payoff")
        cps = tuple(float(c) for c in self.checkpoints)
        if not cps or any(not 0 < c <= 1 for c in cps):
            raise DomainError(f"checkpoints must be fractions of T in (0, 1], got {cps}")
        object.__setattr__(self, "checkpoints", cps)

    @property
    def f(self) -> ConvexPayoff:
        return _IDENTITY if self.which.startswith("prop") else self.payoff

    def validate_hurst(self, h: float) -> float:
        h = check_hurst(h, strict_half=True)
        if self.integrator == "gls" and not 1.0 - h < self.beta < 0.5:
            raise DomainError(f"gls needs 1 - H < beta < 1/2, got beta={self.beta}, H={h}")
        return h

    def to_dict(self) -> dict:
        return {
            "which": self.which,
            "payoff": self.f.describe(),
            "checkpoints": list(self.checkpoints),
            "integrator": self.integrator,
            "beta": self.beta,
            "tag": self.tag,
        }


def _running_average(spec: IdentitySpec, bundle: AveragePathBundle) -> np.ndarray:
    if spec.which in ("prop_hedge1", "thm_limit1"):
        return bundle.g_path.values
    if spec.which in ("prop_arithmavg", "thm_limit2"):
        return bundle.x_path.values
    return arithmetic_average_values(bundle.b_path.values, bundle.grid.dt, bundle.horizon)


def lhs_value(spec: IdentitySpec, bundle: AveragePathBundle, t: float) -> float:
    """``f(A(t))`` from the bundle."""
    k = bundle.grid.index_of(t)
    return float(spec.f.value(_running_average(spec, bundle)[k]))


def integrand_path(spec: IdentitySpec, bundle: AveragePathBundle) -> GridFunction:
    """``phi`` on the bundle's grid; zero at ``s = T``."""
    w = (bundle.horizon - bundle.grid.points) / bundle.horizon
    a = _running_average(spec, bundle)
    slope = spec.f.left_derivative(a)
    if spec.which in ("prop_hedge1", "thm_limit1"):
        vals = w * slope * bundle.g_path.values
    elif spec.which in ("prop_arithmavg", "thm_limit2"):
        vals = w * slope * bundle.s_path.values
    else:
        vals = w * slope
    return SamplePath(bundle.grid, vals)


def _initial(spec: IdentitySpec, bundle: AveragePathBundle) -> float:
    start = bundle.b_path.values[0] if spec.which == "remark_fbm" else bundle.s_path.values[0]
    return float(spec.f.value(start))


def rhs_value(spec: IdentitySpec, bundle: AveragePathBundle, t: float, levels: int = 1) -> IntegralResult:
    """``f(A(0)) + int_0^t phi dB`` with the spec's integrator.

    ``levels`` nested grids ending at the bundle's grid are evaluated; each
    entry of ``values`` already includes ``f(A(0))``.
    """
    phi = integrand_path(spec, bundle)
    b = bundle.b_path
    k = bundle.grid.index_of(t)
    f0 = _initial(spec, bundle)
    if k == 0:
        return IntegralResult.from_levels([0], [f0])
    if spec.integrator == "riemann":
        part = PartitionSpec.dyadic(bundle.grid.n_steps, levels)
        res = riemann_stieltjes(phi, b, part, tag=spec.tag, t=t)
    else:
        res = gls_integral(phi, b, spec.beta, t=t, levels=levels, check_besov=False)
    return IntegralResult.from_levels(res.grid_sizes, [f0 + v for v in res.values], beta=res.beta)


# ---------------------------------------------------------------------------
# Verification
# ---------------------------------------------------------------------------


@dataclass
class VerificationReport:
    """Per-path, per-checkpoint, per-level residuals and their summary.

    Each record holds ``path``, ``t``, ``n_steps``, ``lhs``, ``rhs``,
    ``residual = lhs - rhs`` and ``relative_residual = residual /
    max(|lhs|, scale)``.
    """

    spec: dict
    seeds: dict
    levels: list[int]
    records: list[dict] = field(default_factory=list)
    scale: float = 1.0

    def level_abs_relative(self, n_steps: int) -> np.ndarray:
        return np.array([abs(r["relative_residual"]) for r in self.records if r["n_steps"] == n_steps])

    @property
    def summary(self) -> dict:
        per_level = []
        for n in self.levels:
            a = self.level_abs_relative(n)
            per_level.append(
                {"n_steps": n, "median": float(np.median(a)), "p95": float(np.percentile(a, 95)), "count": int(a.size)}
            )
        meds = [p["median"] for p in per_level]
        return {
            "per_level": per_level,
            "top_median": meds[-1],
            "top_p95": per_level[-1]["p95"],
            # an identically zero residual (exact identity) counts as monotone
            "monotone_decreasing": bool(all(b < a or a == b == 0 for a, b in zip(meds, meds[1:]))),
        }

    def passes(self, max_median: float, require_monotone: bool = True) -> bool:
        s = self.summary
        return s["top_median"] <= max_median and (s["monotone_decreasing"] or not require_monotone)

    def to_dict(self) -> dict:
        return {
            "spec": self.spec,
            "seeds": self.seeds,
            "levels": list(self.levels),
            "scale": self.scale,
            "per_path": self.records,
            "summary": self.summary,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1)

    def to_csv(self) -> str:
        keys = ["path", "t", "n_steps", "lhs", "rhs", "residual", "relative_residual"]
        cols = [np.array([r[k] for r in self.records], dtype=float) for k in keys]
        text = frame_to_csv(keys, cols)
        # integer columns without exponent noise
        lines = text.splitlines()
        out = [lines[0]]
        for r, line in zip(self.records, lines[1:]):
            parts = line.split(",")
            parts[0], parts[2] = str(r["path"]), str(r["n_steps"])
            out.append(",".join(parts))
        return "\n".join(out) + "\n"


def verify_identity(
    spec: IdentitySpec,
    h: float,
    master_seed: int,
    path_indices,
    grid_levels,
    horizon: float = 1.0,
    method: str = "circulant",
    scale: float = 1.0,
) -> VerificationReport:
    """Compare both sides of an identity on seeded fBm paths and nested grids.

    Each path is drawn once on the finest grid; coarser levels subsample
    ``B`` and recompute every derived quantity on their own grid.

    Args:
        spec: the identity and integrator.
        h: Hurst index, ``1/2 < h < 1``.
        master_seed, path_indices: seeds of the paths.
        grid_levels: at least two nested dyadic step counts, coarse to fine.
        scale: floor of the denominator of the relative residual; the
            default is ``S(0) = 1``.
    """
    h = spec.validate_hurst(h)
    part = PartitionSpec(tuple(grid_levels))
    if len(part.levels) < 2:
        raise DomainError("verification needs at least two grid levels")
    fine = TimeGrid(horizon, part.finest)
    coarse = TimeGrid(horizon, part.levels[0])
    times = [c * horizon for c in spec.checkpoints]
    for t in times:
        coarse.index_of(t)
    indices = [int(i) for i in path_indices]
    report = VerificationReport(
        spec=spec.to_dict(),
        seeds={"master_seed": int(master_seed), "path_indices": indices, "hurst": h, "method": method},
        levels=list(part.levels),
        scale=scale,
    )
    for i in indices:
        b = sample_fbm(fine, h, SeedSpec(master_seed, i), method)
        for fac, n in zip(part.factors(), part.levels):
            bundle = AveragePathBundle.from_fbm(b.subsample(fac) if fac > 1 else b)
            for t in times:
                lhs = lhs_value(spec, bundle, t)
                rhs = rhs_value(spec, bundle, t).value
                res = lhs - rhs
                report.records.append(
                    {
                        "path": i,
                        "t": t,
                        "n_steps": n,
                        "lhs": lhs,
                        "rhs": rhs,
                        "residual": res,
                        "relative_residual": res / max(abs(lhs), scale),
                    }
                )
    return report


# ---------------------------------------------------------------------------
# Hedging
# ---------------------------------------------------------------------------


def hedging_strategy(bundle: AveragePathBundle, f: ConvexPayoff, s: float) -> float:
    """Position in ``S`` at time ``s``: ``f'_-(X(s)) (T-s)/T``, times ``S(s)`` units of ``B``.

    Returns ``psi(s) = f'_-(X(s)) ((T-s)/T) S(s)``, the integrand against
    ``dB``; since ``dS = S dB`` this is the same as holding
    ``f'_-(X(s)) (T-s)/T`` shares.
    """
    T = bundle.horizon
    if not 0 <= s < T:
        raise DomainError(f"need 0 <= s < T, got s={s}")
    k = bundle.grid.index_of(s)
    return float(f.left_derivative(bundle.x_path.values[k]) * (T - s) / T * bundle.s_path.values[k])


@dataclass
class ArbitrageReport:
    """Outcome of the out-of-the-money call experiment.

    ``otm_fraction`` is the share of paths with ``X(t_obs) < K``. Among those,
    ``itm_at_maturity_fraction`` end with ``X(T) > K``, and
    ``replication_residuals`` are
    ``f(X(T)) - [f(X(t_obs)) + int_{t_obs}^T psi dB]``.
    """

    strike: float
    hurst: float
    t_obs: float
    n_paths: int
    n_steps: int
    n_otm: int
    otm_fraction: float
    itm_at_maturity_fraction: float
    capital_at_t_obs: float
    replication_residuals: list[float]
    tag: str = "left"

    @property
    def median_abs_residual(self) -> float:
        r = np.abs(self.replication_residuals)
        return float(np.median(r)) if r.size else float("nan")

    @property
    def p95_abs_residual(self) -> float:
        r = np.abs(self.replication_residuals)
        return float(np.percentile(r, 95)) if r.size else float("nan")

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("replication_residuals")
        med, p95 = self.median_abs_residual, self.p95_abs_residual
        d["median_abs_residual"] = med if math.isfinite(med) else None
        d["p95_abs_residual"] = p95 if math.isfinite(p95) else None
        d["note"] = "no out-of-the-money paths" if self.n_otm == 0 else ""
        return d


def arbitrage_experiment(
    strike: float,
    h: float,
    t_obs: float,
    n_paths: int,
    grid: TimeGrid,
    master_seed: int = 0,
    tag: str = "left",
    method: str = "circulant",
) -> ArbitrageReport:
    """Hedge an arithmetic-average call that is out of the money at ``t_obs``.

    The position ``psi`` is held from ``t_obs`` to ``T``; with the default
    ``left`` tag each position is fixed at the start of its period, which is
    the self-financing trading reading of the sum.
    """
    h = check_hurst(h, strict_half=True)
    T = grid.horizon
    if not 0 < t_obs < T:
        raise DomainError(f"need 0 < t_obs < T, got {t_obs}")
    k0 = grid.index_of(t_obs)
    f = ConvexPayoff.call(strike)
    n_otm = n_itm = 0
    capital = 0.0
    residuals = []
    for i in range(n_paths):
        bundle = AveragePathBundle.from_fbm(sample_fbm(grid, h, SeedSpec(master_seed, i), method))
        x = bundle.x_path.values
        if not x[k0] < strike:
            continue
        n_otm += 1
        n_itm += bool(x[-1] > strike)
        start = float(f.value(x[k0]))
        capital = max(capital, abs(start))
        psi = integrand_path(IdentitySpec("thm_limit2", f), bundle).values
        gain = riemann_sum(psi[k0:], bundle.b_path.values[k0:], tag)
        residuals.append(float(f.value(x[-1]) - (start + gain)))
    return ArbitrageReport(
        strike=float(strike),
        hurst=h,
        t_obs=float(t_obs),
        n_paths=int(n_paths),
        n_steps=grid.n_steps,
        n_otm=n_otm,
        otm_fraction=n_otm / n_paths if n_paths else 0.0,
        itm_at_maturity_fraction=n_itm / n_otm if n_otm else 0.0,
        capital_at_t_obs=capital,
        replication_residuals=residuals,
        tag=tag,
    )
