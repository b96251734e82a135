"""Market-module tests: profit formulas against hand-computed values,
analytic gradients against finite differences, solver agreement, and
profit-ordering / lower-bound properties."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bookielab.beliefs import (PointMass, SigmoidGaussianMixture,
                               TruncatedExponential, TruncatedNormal,
                               TwoBlock, Uniform, sosd_compare, SosdResult)
from bookielab.errors import NoInteriorMaxError, UndefinedTailError
from bookielab.market import (BookmakerBelief, Prices, ProfitCurves,
                              count_foc_roots, critical_mrl, expected_profit,
                              fair_profit, foc_residuals, profit_gradient,
                              profit_lower_bounds, solve_fair_optimal,
                              solve_optimal_prices, total_utility)

SGM = SigmoidGaussianMixture((0.25, 0.75), (2.0, -1.0), (1.0, 1.0))
SQRT_HALF = math.sqrt(0.5)

SMOOTH_DISTS = [Uniform(0, 1), Uniform(0.1, 0.9), SGM,
                TruncatedNormal(0.55, 0.25), TruncatedExponential(1.5)]


def _random_dist(rng):
    """Random full-support belief law (solver properties assume the support
    covers [0, 1], so a maximiser exists strictly inside the price box)."""
    kind = rng.integers(0, 4)
    if kind == 0:
        rng.uniform(), rng.uniform()  # keep the draw budget per instance
        return Uniform(0.0, 1.0)
    if kind == 1:
        return TruncatedNormal(rng.uniform(0.2, 0.8), rng.uniform(0.1, 0.5))
    if kind == 2:
        return TruncatedExponential(rng.uniform(0.5, 4.0))
    return SigmoidGaussianMixture(
        (0.5, 0.5), (rng.uniform(-2, 2), rng.uniform(-2, 2)),
        (rng.uniform(0.5, 1.5), rng.uniform(0.5, 1.5)))


class TestPrices:
    def test_validation(self):
        with pytest.raises(ValueError):
            Prices(0.0, 0.5)
        with pytest.raises(ValueError):
            Prices(0.4, 0.4)  # a + b < 1 allows arbitrage

    def test_overround(self):
        assert Prices(0.6, 0.7).overround == pytest.approx(0.3)


class TestExpectedProfit:
    def test_point_mass_hand_value(self):
        got = expected_profit(PointMass(0.8), 0.5, Prices(0.7, 0.9))
        assert got == pytest.approx((0.5 / 0.3 - 0.5 / 0.7) * 0.1, abs=1e-12)

    def test_fair_price_at_belief_is_zero(self):
        for dist in (Uniform(0, 1), TwoBlock(0.75, 0.25, 0.1)):
            assert expected_profit(dist, 0.5, Prices(0.5, 0.5)) == \
                pytest.approx(0.0, abs=1e-10)

    def test_published_optimum_beats_grid_neighbours(self):
        dist = TwoBlock(0.75, 0.25, 0.1)
        best = expected_profit(dist, 0.5, Prices(0.70710, 0.63395))
        for da in (-1e-3, 0.0, 1e-3):
            for db in (-1e-3, 0.0, 1e-3):
                if da == db == 0.0:
                    continue
                other = expected_profit(dist, 0.5,
                                        Prices(0.70710 + da, 0.63395 + db))
                assert other <= best + 1e-12


class TestFairProfit:
    def test_hand_value(self):
        assert fair_profit(Uniform(0, 1), 0.3, 0.4) == \
            pytest.approx(-(0.4 - 0.3) * (0.4 - 0.5) / (0.4 * 0.6), abs=1e-12)

    def test_loss_outside_bracket(self):
        assert fair_profit(Uniform(0, 1), 0.3, 0.6) == pytest.approx(-0.125)

    def test_zero_when_belief_matches_mean(self):
        dist = Uniform(0, 1)  # mean 0.5
        for a in (0.2, 0.5, 0.8):
            assert fair_profit(dist, 0.5, a) <= 1e-12
        assert fair_profit(dist, 0.5, 0.5) == pytest.approx(0.0, abs=1e-12)

    @given(st.floats(0.05, 0.95), st.floats(0.05, 0.95),
           st.integers(0, len(SMOOTH_DISTS) - 1))
    @settings(max_examples=150, deadline=None)
    def test_matches_general_formula_on_fair_diagonal(self, g, a, i):
        dist = SMOOTH_DISTS[i]
        assert fair_profit(dist, g, a) == pytest.approx(
            expected_profit(dist, g, Prices(a, 1.0 - a)), abs=1e-10)

    def test_fair_diagonal_many_random(self):
        rng = np.random.default_rng(5)
        for _ in range(1000):
            dist = _random_dist(rng)
            g = rng.uniform(0.05, 0.95)
            a = rng.uniform(0.05, 0.95)
            # quadrature error in the two tail terms is amplified by the
            # price coefficients ~1/(a(1-a)) near the interval edges
            tol = 1e-10 * max(1.0, 2.0 / (a * (1.0 - a)))
            assert abs(fair_profit(dist, g, a)
                       - expected_profit(dist, g, Prices(a, 1 - a))) < tol


class TestTotalUtility:
    def test_single_bettor(self):
        dist = Uniform(0, 1)
        assert total_utility(dist, 1.0, 0.5, Prices(0.7, 0.7), 1) == \
            pytest.approx(expected_profit(dist, 0.5, Prices(0.7, 0.7)))

    def test_linearity(self):
        dist = Uniform(0, 1)
        u1 = total_utility(dist, 1.0, 0.5, Prices(0.7, 0.7), 1)
        assert total_utility(dist, 2.0, 0.5, Prices(0.7, 0.7), 10) == \
            pytest.approx(20.0 * u1)

    def test_point_mass_hundred_bettors(self):
        got = total_utility(PointMass(0.8), 1.0, 0.5, Prices(0.7, 0.9), 100)
        assert got == pytest.approx(100 * (0.5 / 0.3 - 0.5 / 0.7) * 0.1)

    def test_horizon_domain(self):
        with pytest.raises(ValueError):
            total_utility(Uniform(0, 1), 1.0, 0.5, Prices(0.7, 0.7), 0)


class TestGradient:
    def test_uniform_hand_value(self):
        da, _ = profit_gradient(Uniform(0, 1), 0.5, Prices(0.7, 0.7))
        want = (-0.3 * 0.2) / 0.21 + 0.045 * 0.29 / (0.49 * 0.09)
        assert da == pytest.approx(want, abs=1e-12)

    def test_matches_finite_differences(self):
        rng = np.random.default_rng(17)
        h = 1e-6
        for _ in range(100):
            dist = _random_dist(rng)
            g = rng.uniform(0.2, 0.8)
            a = rng.uniform(0.15, 0.85)
            b = rng.uniform(max(0.15, 1.0 - a + h), 0.85)
            da, db = profit_gradient(dist, g, Prices(a, b))
            fd_a = (expected_profit(dist, g, Prices(a + h, b))
                    - expected_profit(dist, g, Prices(a - h, b))) / (2 * h)
            fd_b = (expected_profit(dist, g, Prices(a, b + h))
                    - expected_profit(dist, g, Prices(a, b - h))) / (2 * h)
            scale = max(abs(fd_a), abs(fd_b), 1.0)
            assert abs(da - fd_a) / scale < 1e-4
            assert abs(db - fd_b) / scale < 1e-4

    def test_vanishes_at_solver_optimum(self):
        for dist in (Uniform(0, 1), SGM):
            best = solve_optimal_prices(dist, 0.5)[0]
            da, db = profit_gradient(dist, 0.5, best.prices)
            assert abs(da) < 1e-6 and abs(db) < 1e-6


class TestCriticalMrl:
    def test_zero_at_belief(self):
        assert critical_mrl(0.5, 0.5) == 0.0

    def test_hand_values(self):
        assert critical_mrl(0.7, 0.5) == pytest.approx(0.144827586206896,
                                                       abs=1e-12)
        assert critical_mrl(0.9, 0.5) == pytest.approx(0.036 / 0.41, abs=1e-12)

    def test_bounded_by_one_minus_x(self):
        for g in (0.2, 0.5, 0.8):
            for x in np.linspace(g, 1.0 - 1e-9, 500):
                assert abs(critical_mrl(x, g)) <= (1.0 - x) + 1e-12


class TestFocResiduals:
    def test_uniform_root(self):
        r, l = foc_residuals(Uniform(0, 1), 0.5, Prices(SQRT_HALF, SQRT_HALF))
        assert abs(r) < 1e-6 and abs(l) < 1e-6

    def test_negative_at_belief_price(self):
        for dist in (Uniform(0, 1), SGM):
            r, _ = foc_residuals(dist, 0.5, Prices(0.5, 0.7))
            assert r < 0.0

    def test_undefined_tail_propagates(self):
        with pytest.raises(UndefinedTailError):
            foc_residuals(Uniform(0, 0.6), 0.5, Prices(0.7, 0.7))

    def test_l_side_parameterisation_matches_gradient(self):
        # where the L-side residual vanishes, du/db must vanish too; this
        # pins the mirrored-law form of the L-side condition
        for dist in (Uniform(0, 1), SGM, TruncatedNormal(0.55, 0.25)):
            best = solve_optimal_prices(dist, 0.5)[0]
            _, resid_l = foc_residuals(dist, 0.5, best.prices)
            _, db = profit_gradient(dist, 0.5, best.prices)
            assert abs(resid_l) < 1e-6
            assert abs(db) < 1e-6


class TestSolvers:
    def test_two_block_published_optimum(self):
        best = solve_optimal_prices(TwoBlock(0.75, 0.25, 0.1), 0.5)[0]
        assert best.is_global
        assert best.prices.a == pytest.approx(0.70710, abs=1e-3)
        assert best.prices.b == pytest.approx(0.63395, abs=1e-3)

    def test_uniform_unique_optimum(self):
        best = solve_optimal_prices(Uniform(0, 1), 0.5)[0]
        assert best.prices.a == pytest.approx(SQRT_HALF, abs=1e-4)
        assert best.prices.b == pytest.approx(SQRT_HALF, abs=1e-4)

    def test_methods_agree(self):
        for dist in (Uniform(0, 1), TwoBlock(0.75, 0.25, 0.1), SGM,
                     TruncatedExponential(1.0)):
            grid = solve_optimal_prices(dist, 0.5)[0]
            foc = solve_optimal_prices(dist, 0.5, method="foc")[0]
            assert abs(grid.prices.a - foc.prices.a) < 2e-3
            assert abs(grid.prices.b - foc.prices.b) < 2e-3

    def test_unknown_method(self):
        with pytest.raises(ValueError):
            solve_optimal_prices(Uniform(0, 1), 0.5, method="newton")

    def test_boundary_optimum_raises(self):
        # all mass at 1: the R-side term increases right up to the box edge
        with pytest.raises(NoInteriorMaxError):
            solve_optimal_prices(PointMass(1.0), 0.5)

    def test_global_flag_marks_best(self):
        optima = solve_optimal_prices(TwoBlock(0.75, 0.25, 0.1), 0.5)
        assert optima[0].is_global
        assert all(not o.is_global for o in optima[1:])
        profits = [o.profit for o in optima]
        assert profits == sorted(profits, reverse=True)

    def test_bracketing_of_global_optimum(self):
        # with positive overround, 1 - b* < g < a*  (smoke-sized here; the
        # 100-instance version runs in the acceptance suite)
        rng = np.random.default_rng(29)
        for _ in range(25):
            dist = _random_dist(rng)
            g = rng.uniform(0.25, 0.75)
            best = solve_optimal_prices(dist, g)[0]
            if best.prices.overround > 1e-6:
                assert 1.0 - best.prices.b < g < best.prices.a


class TestFairOptimal:
    def test_belief_equals_mean(self):
        assert solve_fair_optimal(0.37, 0.37) == pytest.approx(0.37, abs=1e-12)

    def test_hand_values(self):
        assert solve_fair_optimal(0.8, 0.5) == pytest.approx(2.0 / 3.0,
                                                             abs=1e-12)
        assert solve_fair_optimal(0.2, 0.5) == pytest.approx(1.0 / 3.0,
                                                             abs=1e-12)

    def test_maximises_fair_profit_on_grid(self):
        dist = SGM
        a_star = solve_fair_optimal(dist.mean(), 0.5)
        best = fair_profit(dist, 0.5, a_star)
        for a in np.linspace(0.01, 0.99, 10_000):
            assert fair_profit(dist, 0.5, a) <= best + 1e-12


class TestFocRootCount:
    def test_uniform(self):
        assert count_foc_roots(Uniform(0, 1), 0.5) == 1

    def test_grid_step_domain(self):
        with pytest.raises(ValueError):
            count_foc_roots(Uniform(0, 1), 0.5, grid_step=0.01)


class TestLowerBounds:
    def test_deviation_bound_below_optimum(self):
        dist = Uniform(0, 1)
        bounds = profit_lower_bounds(dist, BookmakerBelief(0.3),
                                     Prices(0.5, 0.6))
        assert bounds.deviation_bound == pytest.approx(0.04, abs=1e-12)
        u_star = solve_optimal_prices(dist, 0.3)[0].profit
        assert u_star >= bounds.deviation_bound

    def test_deviation_bound_vacuous_at_mean(self):
        bounds = profit_lower_bounds(Uniform(0, 1), BookmakerBelief(0.5),
                                     Prices(0.75, 0.9))
        assert bounds.deviation_bound == pytest.approx(0.0, abs=1e-12)

    def test_cvar_bound_below_profit(self):
        dist = Uniform(0, 1)
        prices = Prices(0.5, math.sqrt(0.75))
        bounds = profit_lower_bounds(dist, BookmakerBelief(0.25), prices)
        assert bounds.cvar_bound is not None
        assert bounds.cvar_bound <= expected_profit(dist, 0.25, prices) + 1e-10

    def test_cvar_bound_below_profit_many(self):
        rng = np.random.default_rng(31)
        for _ in range(50):
            dist = _random_dist(rng)
            g = rng.uniform(0.2, 0.8)
            a = rng.uniform(math.sqrt(g), 0.98)
            b = rng.uniform(math.sqrt(1 - g), 0.98)
            bounds = profit_lower_bounds(dist, BookmakerBelief(g),
                                         Prices(a, b))
            assert bounds.cvar_bound is not None
            assert bounds.cvar_bound <= \
                expected_profit(dist, g, Prices(a, b)) + 1e-8

    def test_cvar_precondition_flagged(self):
        bounds = profit_lower_bounds(Uniform(0, 1), BookmakerBelief(0.5),
                                     Prices(0.55, 0.9))  # a < sqrt(0.5)
        assert bounds.cvar_bound is None
        assert "cvar_bound" in bounds.unmet

    def test_imprecise_bound_nonnegative_and_valid(self):
        dist = Uniform(0, 1)
        belief = BookmakerBelief(0.5, g_minus=0.4, g_plus=0.6)
        prices = Prices(0.7, 0.7)  # a >= g_plus, 1 - b <= g_minus
        bounds = profit_lower_bounds(dist, belief, prices)
        assert bounds.imprecise_bound is not None
        assert bounds.imprecise_bound >= 0.0
        for g_true in (0.4, 0.45, 0.5, 0.55, 0.6):
            assert expected_profit(dist, g_true, prices) >= \
                bounds.imprecise_bound - 1e-10

    def test_imprecise_needs_interval(self):
        bounds = profit_lower_bounds(Uniform(0, 1), BookmakerBelief(0.5),
                                     Prices(0.7, 0.7))
        assert bounds.imprecise_bound is None
        assert "imprecise_bound" in bounds.unmet


class TestSosdProfitOrdering:
    def test_dominated_law_pays_more(self):
        f1, f2 = Uniform(0.4, 0.6), Uniform(0, 1)
        assert sosd_compare(f1, f2) is SosdResult.DOMINATES
        g = 0.5
        for a in np.arange(g + 0.01, 0.99, 0.02):
            for b in np.arange(1 - g + 0.01, 0.99, 0.02):
                u1 = expected_profit(f1, g, Prices(a, b))
                u2 = expected_profit(f2, g, Prices(a, b))
                assert u1 < u2 + 1e-12
        u1_star = solve_optimal_prices(f1, g)[0].profit
        u2_star = solve_optimal_prices(f2, g)[0].profit
        assert u1_star < u2_star


class TestProfitCurves:
    def test_matches_exact_evaluation(self):
        for dist in (Uniform(0, 1), TwoBlock(0.75, 0.25, 0.1), SGM):
            curves = ProfitCurves(dist, 0.5)
            for a in (0.55, 0.7, 0.9):
                for b in (0.55, 0.7, 0.9):
                    exact = expected_profit(dist, 0.5, Prices(a, b))
                    assert float(curves.u(a, b)) == pytest.approx(exact,
                                                                  abs=1e-8)

    def test_vectorised(self):
        curves = ProfitCurves(Uniform(0, 1), 0.5)
        a = np.array([0.55, 0.7, 0.9])
        b = np.array([0.6, 0.7, 0.8])
        vals = curves.u(a, b)
        assert vals.shape == (3,)


class TestBookmakerBelief:
    def test_interval_ordering(self):
        with pytest.raises(ValueError):
            BookmakerBelief(0.5, g_minus=0.6, g_plus=0.7)
        with pytest.raises(ValueError):
            BookmakerBelief(0.5, g_minus=0.4, g_plus=None)

    def test_prop_3_3_style_bound_many(self):
        # optimal profit is at least the squared belief deviation
        # (smoke-sized; the 100-instance version runs in the acceptance suite)
        rng = np.random.default_rng(41)
        for _ in range(25):
            dist = _random_dist(rng)
            g = rng.uniform(0.2, 0.8)
            u_star = solve_optimal_prices(dist, g)[0].profit
            assert u_star >= (g - dist.mean()) ** 2 - 1e-9
