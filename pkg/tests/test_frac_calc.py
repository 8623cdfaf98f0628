"""Riemann-Liouville operators, Besov norms and the GLS integral."""

import math

import mpmath as mp
import numpy as np
import pytest

from fracpath.fbm_gen import SeedSpec, sample_fbm
from fracpath.frac_calc import (
    BesovDivergenceError,
    besov_norm_2,
    besov_norm_2_parts,
    besov_refinement_diagnostic,
    besov_seminorm_1,
    gls_integral,
    integrand_besov_check,
    octave_slope,
    rl_derivative_left,
    rl_derivative_left_grid,
    rl_derivative_right,
    rl_integral_left,
    rl_integral_left_grid,
    rl_integral_right,
)
from fracpath.grid import DomainError, SamplePath, TimeGrid, grid_function
from fracpath.path_model import AveragePathBundle
from fracpath.payoffs import ConvexPayoff
from fracpath.riemann import PartitionSpec, riemann_stieltjes

TWO_OVER_ROOT_PI = 2.0 / math.sqrt(math.pi)


def gf(func, n=1024, T=1.0):
    return grid_function(func, T, n)


class TestIntegrals:
    def test_constant(self):
        assert rl_integral_left(gf(np.ones_like, 2**13), 0.5, 1.0) == pytest.approx(TWO_OVER_ROOT_PI, abs=1e-12)

    def test_linear(self):
        expected = math.gamma(2) / math.gamma(2.5)
        assert rl_integral_left(gf(lambda s: s), 0.5, 1.0) == pytest.approx(expected, abs=1e-12)

    def test_order_one_is_trapezoid(self):
        f = gf(np.sin, 64)
        for k in (5, 33, 64):
            x = k / 64
            trap = np.trapezoid(f.values[: k + 1], dx=1 / 64)
            assert rl_integral_left(f, 1.0, x) == pytest.approx(trap, rel=1e-12)

    def test_off_grid_point_linear(self):
        x = 0.3217
        expected = x**1.5 / math.gamma(2.5)
        assert rl_integral_left(gf(lambda s: s, 100), 0.5, x) == pytest.approx(expected, rel=1e-12)

    def test_right_constant(self):
        t, x, a = 1.0, 0.25, 0.4
        assert rl_integral_right(gf(np.ones_like), a, x, t) == pytest.approx((t - x) ** a / math.gamma(a + 1), rel=1e-12)

    def test_right_against_quadrature(self):
        # oracle: adaptive quadrature of the defining integral
        x, t, a = 0.4, 1.0, 0.4
        ref = float(mp.quad(lambda s: s**2 * (s - x) ** (a - 1), [x, t]) / mp.gamma(a))
        assert rl_integral_right(gf(lambda s: s**2, 4096), a, x, t) == pytest.approx(ref, rel=1e-6)

    def test_zero_function(self):
        z = gf(np.zeros_like)
        assert rl_integral_left(z, 0.3, 0.7) == 0.0
        assert rl_integral_right(z, 0.3, 0.2, 1.0) == 0.0

    def test_linearity(self):
        rng = np.random.default_rng(0)
        grid = TimeGrid(1.0, 200)
        for _ in range(5):
            u, v = rng.standard_normal(201), rng.standard_normal(201)
            a, b = rng.standard_normal(2)
            f, g, h = SamplePath(grid, u), SamplePath(grid, v), SamplePath(grid, a * u + b * v)
            for op in (
                lambda p: rl_integral_left(p, 0.6, 0.73),
                lambda p: rl_integral_right(p, 0.6, 0.2, 0.9),
                lambda p: rl_derivative_left(p, 0.35, 0.5),
                lambda p: rl_derivative_right(p, 0.35, 0.1, 0.8),
            ):
                lhs, rhs = op(h), a * op(f) + b * op(g)
                assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-10)

    @pytest.mark.parametrize("alpha", [0.0, -0.2, 1.5])
    def test_order_range(self, alpha):
        with pytest.raises(DomainError):
            rl_integral_left(gf(np.sin), alpha, 0.5)


class TestDerivatives:
    def test_linear(self):
        assert rl_derivative_left(gf(lambda s: s, 2**13), 0.5, 1.0) == pytest.approx(TWO_OVER_ROOT_PI, abs=1e-12)

    @pytest.mark.parametrize("c", [1.0, -2.5])
    def test_constant(self, c):
        assert rl_derivative_left(gf(lambda s: c + 0 * s), 0.5, 1.0) == pytest.approx(c / math.sqrt(math.pi), rel=1e-12)

    def test_at_zero_rejected(self):
        with pytest.raises(DomainError):
            rl_derivative_left(gf(np.sin), 0.5, 0.0)

    def test_matches_convolution_definition(self):
        # oracle: mpmath differentiates the Riemann-Liouville convolution directly
        ref = float(mp.differint(mp.sin, 0.7, 0.3, 0))
        assert rl_derivative_left(gf(np.sin, 4096), 0.3, 0.7) == pytest.approx(ref, rel=1e-7)

    def test_right_constant_is_zero(self):
        assert rl_derivative_right(gf(lambda s: 3 + 0 * s), 0.5, 0.3, 1.0) == 0.0

    @pytest.mark.parametrize("x", [0.0, 0.3, 0.9])
    def test_right_linear_closed_form(self, x):
        val = rl_derivative_right(gf(lambda s: s), 0.5, x, 1.0)
        assert abs(val) == pytest.approx((1 - x) ** 0.5 / math.gamma(1.5), rel=1e-10)

    def test_right_matches_convolution_definition(self):
        # the right derivative of g_{t-} is the left derivative of u -> g_{t-}(t - u)
        t, x, a = 1.0, 0.4, 0.6
        ref = float(mp.differint(lambda u: (t - u) ** 2 - t**2, t - x, a, 0))
        assert rl_derivative_right(gf(lambda s: s**2, 4096), a, x, t) == pytest.approx(ref, rel=1e-6)

    def test_right_needs_x_before_t(self):
        with pytest.raises(DomainError):
            rl_derivative_right(gf(np.sin), 0.5, 1.0, 1.0)

    def test_composition_identity_converges(self):
        errors = []
        for n in (256, 512, 1024):
            f = gf(lambda s: s**2, n)
            back = rl_derivative_left_grid(rl_integral_left_grid(f, 0.5), 0.5)
            errors.append(np.max(np.abs(back - f.values[1:])))
        assert errors[0] > errors[1] > errors[2]
        assert math.log2(errors[1] / errors[2]) >= 1.0

    def test_right_composition(self):
        # D_{t-}^a I_{t-}^a f = f: with f = s, I_{t-}^a s has a closed form
        a, t, x = 0.4, 1.0, 0.35
        # I_{t-}^a s (y) = y (t-y)^a / Gamma(a+1) + (t-y)^(a+1) / ((a+1) Gamma(a))
        errs = []
        for n in (512, 1024, 2048):
            i_vals = gf(lambda y: (t - y) ** a * y / math.gamma(a + 1) + (t - y) ** (a + 1) / ((a + 1) * math.gamma(a)), n)
            # g_{t-} with g(t) = 0 here, so the right derivative returns D(I f)(x) directly
            errs.append(abs(rl_derivative_right(i_vals, a, x, t) - x))
        assert errs[-1] < 1e-3 and errs[0] > errs[-1]


class TestBesov:
    @pytest.mark.parametrize("c", [0.0, 2.0, -1.5])
    def test_constant(self, c):
        f = gf(lambda s: c + 0 * s, 256, 2.0)
        assert besov_seminorm_1(f, 0.3) == 0.0
        assert besov_norm_2(f, 0.3) == pytest.approx(abs(c) * 2.0**0.7 / 0.7, rel=1e-12)

    def test_linear_norm_2(self):
        exact = 0.625 + 1 / (0.6 * 1.6)
        errs = [abs(besov_norm_2(gf(lambda s: s, n), 0.4) - exact) for n in (1024, 2048, 4096)]
        assert errs[-1] < 3e-6
        # the lag mass is quadratic between nodes; error order is 2 - beta
        assert math.log2(errs[1] / errs[2]) == pytest.approx(1.6, abs=0.1)

    def test_linear_seminorm_1(self):
        # sup attained on the full interval: 1 + 1/(1-beta)
        assert besov_seminorm_1(gf(lambda s: s, 256), 0.4) == pytest.approx(1 + 1 / 0.6, rel=1e-10)

    def test_parts_add_up(self):
        p = besov_norm_2_parts(gf(np.sin, 128), 0.3)
        assert p.value == pytest.approx(p.raw + p.diagonal)
        assert p.diagonal > 0

    def test_fbm_seminorm_refinement(self):
        grid = TimeGrid(1.0, 4096)
        for i in range(5):
            b = sample_fbm(grid, 0.7, SeedSpec(3, i))
            assert besov_refinement_diagnostic(b, 0.65, norm="1", trajectory=False).finite
            assert not besov_refinement_diagnostic(b, 0.75, norm="1", trajectory=False).finite

    def test_octave_slope_of_linear(self):
        # Lipschitz path: slope 1 - beta
        assert octave_slope(gf(lambda s: s, 1024), 0.4) == pytest.approx(0.6, abs=0.01)

    def test_trajectory_reported(self):
        b = sample_fbm(TimeGrid(1.0, 1024), 0.7, 1)
        d = besov_refinement_diagnostic(b, 0.65, norm="1")
        assert d.grid_sizes == [256, 512, 1024] and len(d.trajectory) == 3
        assert d.to_dict()["verdict"] in ("finite", "divergent")

    def test_integrand_zero(self):
        bundle = AveragePathBundle.from_fbm(sample_fbm(TimeGrid(1.0, 1024), 0.7, 1))
        d = integrand_besov_check(bundle, ConvexPayoff.affine(0.0, 1.0), "geom", 0.35)
        assert d.trajectory[-1] == 0.0 and d.finite


class TestGls:
    def test_constant_integrand(self):
        f, g = gf(np.ones_like, 2**13), gf(lambda s: s, 2**13)
        assert gls_integral(f, g, 0.35).value == pytest.approx(1.0, abs=1e-6)

    def test_smooth(self):
        f, g = gf(lambda s: s, 2**13), gf(lambda s: s**2, 2**13)
        r = gls_integral(f, g, 0.35)
        assert r.value == pytest.approx(2 / 3, abs=1e-6)
        assert r.grid_sizes == [2048, 4096, 8192]
        assert r.estimated_order > 1

    def test_interior_upper_limit(self):
        f, g = gf(np.cos, 2048), gf(np.sin, 2048)
        exact = 0.5 * 0.5 + math.sin(1.0) / 4  # int_0^0.5 cos^2
        assert gls_integral(f, g, 0.3, t=0.5).value == pytest.approx(exact, abs=1e-5)

    @pytest.mark.parametrize("f_fn,g_fn", [(np.cos, np.sin), (lambda s: s**2, np.exp), (np.exp, lambda s: s**3)])
    def test_agrees_with_riemann(self, f_fn, g_fn):
        n = 2**12
        f, g = gf(f_fn, n), gf(g_fn, n)
        rs = riemann_stieltjes(f, g, PartitionSpec.dyadic(n, 3), tag="trapezoid")
        assert gls_integral(f, g, 0.35).value == pytest.approx(rs.value, abs=1e-6)

    def test_beta_invariance(self):
        f, g = gf(np.cos, 2**12), gf(np.sin, 2**12)
        vals = [gls_integral(f, g, b).value for b in (0.32, 0.38, 0.44)]
        assert max(vals) - min(vals) < 1e-7

    @pytest.mark.parametrize("beta", [0.0, 1.0, -0.1])
    def test_beta_range(self, beta):
        with pytest.raises(DomainError):
            gls_integral(gf(np.sin), gf(np.cos), beta)

    def test_divergent_integrand(self):
        rough = sample_fbm(TimeGrid(1.0, 2048), 0.1, 5)
        with pytest.raises(BesovDivergenceError) as info:
            gls_integral(rough, gf(lambda s: s, 2048), 0.45)
        assert len(info.value.trajectory) == 2

    def test_mollified_call_converges(self):
        grid = TimeGrid(1.0, 2048)
        bundle = AveragePathBundle.from_fbm(sample_fbm(grid, 0.7, SeedSpec(17, 0)))
        G, w = bundle.g_path.values, (1.0 - grid.points)
        K = float(np.median(G))  # a strike the path actually crosses
        kink = SamplePath(grid, w * ConvexPayoff.call(K).left_derivative(G) * G)
        target = gls_integral(kink, bundle.b_path, 0.35, check_besov=False).value
        gaps, dists = [], []
        for eps in (0.1, 0.03, 0.01, 0.003):
            smooth_slope = 0.5 * (1 + np.tanh((G - K) / (2 * eps)))
            f_n = SamplePath(grid, w * smooth_slope * G)
            dists.append(besov_norm_2(SamplePath(grid, f_n.values - kink.values), 0.35))
            gaps.append(abs(gls_integral(f_n, bundle.b_path, 0.35, check_besov=False).value - target))
        assert all(b < a for a, b in zip(dists, dists[1:]))
        assert gaps[-1] < gaps[0]
