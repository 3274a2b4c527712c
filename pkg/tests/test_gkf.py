import math

import numpy as np
import pytest
from scipy import integrate

import rotubes as rt
from rotubes.curves import ResidualField, TimeGrid
from rotubes.errors import InvalidDof, ZeroResidualColumn
from rotubes.gkf import EcContext, expected_ec, lkc_estimate, solve_quantile, t_ec_density
from rotubes.simulation import _error_paths


def tail_by_quadrature(t, n):
    """Upper tail of Student's t with n-1 dof, integrating the density."""
    nu = n - 1
    const = math.gamma(n / 2.0) / (math.sqrt(nu * math.pi) * math.gamma(nu / 2.0))
    value, err = integrate.quad(lambda u: const * (1.0 + u * u / nu) ** (-n / 2.0),
                                t, np.inf)
    assert err < 1e-7
    return value


class TestEcDensities:
    def test_order_zero_at_zero(self):
        assert t_ec_density(0, 0.0, 10) == pytest.approx(0.5, abs=1e-14)

    def test_order_one_at_zero(self):
        assert t_ec_density(1, 0.0, 10) == pytest.approx(1.0 / (2.0 * np.pi), abs=1e-15)

    def test_order_two_at_zero(self):
        assert t_ec_density(2, 0.0, 10) == 0.0

    @pytest.mark.parametrize("n", [4, 10, 31])
    def test_tail_matches_quadrature(self, n):
        for t in np.linspace(0.0, 8.0, 17):
            assert t_ec_density(0, t, n) == pytest.approx(tail_by_quadrature(t, n),
                                                          abs=1e-8)

    def test_tail_example(self):
        assert t_ec_density(0, 2.0, 10) == pytest.approx(tail_by_quadrature(2.0, 10),
                                                         abs=1e-10)

    def test_invalid_dof(self):
        with pytest.raises(InvalidDof):
            t_ec_density(0, 1.0, 2)
        with pytest.raises(InvalidDof):
            EcContext(2, 1.0)

    def test_invalid_order(self):
        with pytest.raises(ValueError):
            t_ec_density(4, 1.0, 10)


class TestLkcEstimate:
    def test_time_constant_residuals_give_zero(self):
        grid = TimeGrid.uniform(7)
        rng = np.random.default_rng(0)
        x = np.repeat(rng.standard_normal((5, 1, 3)), 7, axis=1)
        assert lkc_estimate(ResidualField(grid, x)) == 0.0

    def test_scale_invariance(self):
        grid = TimeGrid.uniform(11)
        rng = np.random.default_rng(1)
        x = rng.standard_normal((6, 11, 3))
        base = lkc_estimate(ResidualField(grid, x))
        assert lkc_estimate(ResidualField(grid, 37.5 * x)) == pytest.approx(base,
                                                                            rel=1e-12)

    def test_trigonometric_process_analytic_value(self):
        # Unit-variance trigonometric process: derivative sd is pi/2 at all t.
        grid = TimeGrid.uniform(101)
        rng = np.random.default_rng(0)
        a = np.stack([_error_paths(1, 1, grid, rng, (200,)) for _ in range(3)], axis=-1)
        res = ResidualField(grid, a - a.mean(axis=0, keepdims=True))
        assert lkc_estimate(res) == pytest.approx(np.pi / 2.0, abs=0.05)

    def test_zero_column_raises(self):
        grid = TimeGrid.uniform(4)
        x = np.ones((5, 4, 3))
        x[:, 2, 1] = 0.0
        with pytest.raises(ZeroResidualColumn):
            lkc_estimate(ResidualField(grid, x))


class TestExpectedEc:
    def test_vanishes_at_infinity(self):
        ctx = EcContext(10, np.pi / 2.0)
        assert expected_ec(1e8, ctx) == pytest.approx(0.0, abs=1e-12)

    def test_unit_value_at_zero_without_lkc(self):
        assert expected_ec(0.0, EcContext(10, 0.0)) == pytest.approx(1.0, abs=1e-14)

    def test_unit_value_at_zero_with_lkc(self):
        # The two L1 terms cancel at h = 0 for every dof.
        for n in (4, 10, 31):
            assert expected_ec(0.0, EcContext(n, 2.0)) == pytest.approx(1.0, abs=1e-12)

    def test_decreasing_past_mode(self):
        ctx = EcContext(8, 1.2)
        hs = np.linspace(5.0, 400.0, 200)
        vals = np.array([expected_ec(h, ctx) for h in hs])
        assert np.all(np.diff(vals) < 0.0)


class TestSolveQuantile:
    def test_residual_equation_value(self):
        for alpha in (0.5, 0.25, 0.1, 0.05, 0.01):
            ctx = EcContext(10, np.pi / 2.0)
            h = solve_quantile(alpha, ctx)
            assert expected_ec(h, ctx) == pytest.approx(alpha, abs=1e-8)

    def test_monotone_in_alpha(self):
        ctx = EcContext(10, np.pi / 2.0)
        assert solve_quantile(0.05, ctx) > solve_quantile(0.10, ctx)

    def test_median_root_without_lkc_matches_direct_bisection(self):
        ctx = EcContext(10, 0.0)
        h = solve_quantile(0.5, ctx)
        lo, hi = 0.0, 100.0
        for _ in range(100):
            mid = 0.5 * (lo + hi)
            if expected_ec(mid, ctx) >= 0.5:
                lo = mid
            else:
                hi = mid
        assert h == pytest.approx(0.5 * (lo + hi), abs=1e-7)

    def test_alpha_validation(self):
        with pytest.raises(ValueError):
            solve_quantile(0.7, EcContext(10, 1.0))
        with pytest.raises(ValueError):
            solve_quantile(0.0, EcContext(10, 1.0))

    def test_bisection_tolerance_contract(self):
        ctx = EcContext(6, 3.0)
        h = solve_quantile(0.05, ctx)
        assert abs(expected_ec(h, ctx) - 0.05) <= 1e-8


class TestGkfAgainstMonteCarlo:
    def test_quantile_tracks_simulation(self):
        # Small-rep version of the acceptance cross-check.
        spec = rt.ErrorProcessSpec(1, 1, 1, 0.05)
        h_mc = rt.mc_quantile_oracle(spec, n=10, reps=4000, alpha=0.05,
                                     grid=TimeGrid.uniform(51), seed=5)
        h_gkf = solve_quantile(0.05, EcContext(10, np.pi / 2.0))
        assert abs(h_gkf - h_mc) / h_mc <= 0.15
