"""Belief-distribution tests: closed-form oracles, quadrature cross-checks,
Monte Carlo agreement, and dominance-ordering properties."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, optimize

from bookielab.beliefs import (Empirical, PointMass, SigmoidGaussianMixture,
                               SosdResult, TruncatedExponential,
                               TruncatedNormal, TwoBlock, Uniform,
                               distribution_from_config, sosd_compare)
from bookielab.errors import MeanMismatchError, UndefinedTailError

SGM = SigmoidGaussianMixture((0.25, 0.75), (2.0, -1.0), (1.0, 1.0))

ALL_VARIANTS = [
    Uniform(0.0, 1.0),
    Uniform(0.4, 0.6),
    PointMass(0.8),
    TwoBlock(0.75, 0.25, 0.1),
    TwoBlock(0.55, 0.05, 0.01),
    SGM,
    TruncatedNormal(0.6, 0.2),
    TruncatedExponential(1.0),
    Empirical((0.1, 0.3, 0.3, 0.8)),
]

CONTINUOUS = [d for d in ALL_VARIANTS
              if not isinstance(d, (PointMass, Empirical))]


class TestPdf:
    def test_two_block_upper_block(self):
        assert TwoBlock(0.75, 0.25, 0.1).pdf(0.8) == pytest.approx(1.0)

    def test_two_block_block_edge(self):
        assert TwoBlock(0.75, 0.25, 0.1).pdf(0.5001) == pytest.approx(1.0)

    def test_uniform(self):
        assert Uniform(0, 1).pdf(0.3) == 1.0

    def test_mass_in_unit_interval(self):
        for dist in CONTINUOUS:
            total, _ = integrate.quad(dist.pdf, 0.0, 1.0, limit=200)
            assert total == pytest.approx(1.0, abs=1e-8), dist


class TestCdf:
    def test_uniform(self):
        assert Uniform(0, 1).cdf(0.25) == 0.25

    def test_point_mass_step(self):
        pm = PointMass(0.8)
        assert pm.cdf(0.5) == 0.0
        assert pm.cdf(0.9) == 1.0
        assert pm.cdf(0.8) == 1.0  # right-continuous at the atom

    def test_two_block_midpoint(self):
        assert TwoBlock(0.75, 0.25, 0.1).cdf(0.5) == pytest.approx(0.5)

    def test_monotone_and_normalised(self):
        grid = np.linspace(0.0, 1.0, 1001)
        for dist in ALL_VARIANTS:
            vals = np.asarray(dist.cdf(grid), dtype=float)
            assert np.all(np.diff(vals) >= -1e-12), dist
            assert abs(float(dist.cdf(1.0)) - 1.0) < 1e-9, dist


class TestSample:
    def test_point_mass(self):
        rng = np.random.default_rng(0)
        assert PointMass(0.8).sample(rng) == 0.8

    def test_uniform_mean(self):
        rng = np.random.default_rng(42)
        draws = Uniform(0, 1).sample(rng, 1_000_000)
        assert abs(draws.mean() - 0.5) < 0.002

    def test_mixture_kolmogorov_distance(self):
        rng = np.random.default_rng(7)
        draws = np.sort(SGM.sample(rng, 1_000_000))
        ecdf_hi = np.arange(1, draws.size + 1) / draws.size
        ecdf_lo = np.arange(0, draws.size) / draws.size
        analytic = SGM.cdf(draws)
        ks = max(np.max(np.abs(ecdf_hi - analytic)),
                 np.max(np.abs(analytic - ecdf_lo)))
        assert ks < 0.005

    def test_all_variants_match_analytic_cdf(self):
        # Kolmogorov distance on a fixed grid handles atoms and continuous
        # laws alike (cdf convention is right-continuous at atoms)
        grid = np.linspace(0.0, 1.0, 2001)
        for dist in ALL_VARIANTS:
            rng = np.random.default_rng(11)
            draws = np.asarray(dist.sample(rng, 100_000), dtype=float)
            ecdf = np.searchsorted(np.sort(draws), grid, side="right") / draws.size
            analytic = np.asarray(dist.cdf(grid), dtype=float)
            assert np.max(np.abs(ecdf - analytic)) < 0.01, dist

    def test_deterministic_given_seed(self):
        for dist in ALL_VARIANTS:
            a = dist.sample(np.random.default_rng(3), 100)
            b = dist.sample(np.random.default_rng(3), 100)
            np.testing.assert_array_equal(np.asarray(a), np.asarray(b))


class TestTailExpectations:
    def test_uniform_above(self):
        assert Uniform(0, 1).tail_expectation_above(0.5) == pytest.approx(0.125)

    def test_point_mass_above(self):
        pm = PointMass(0.8)
        assert pm.tail_expectation_above(0.7) == pytest.approx(0.1)
        assert pm.tail_expectation_above(0.9) == 0.0

    def test_two_block_above(self):
        # upper block Unif[0.5, 1.0] with weight 1/2 contributes all tail mass
        assert TwoBlock(0.75, 0.25, 0.1).tail_expectation_above(0.5) == \
            pytest.approx(0.125)

    def test_uniform_below(self):
        assert Uniform(0, 1).tail_expectation_below(0.5) == pytest.approx(0.125)

    def test_point_mass_below(self):
        assert PointMass(0.8).tail_expectation_below(0.5) == 0.0

    def test_two_block_below_support_gap(self):
        assert TwoBlock(0.75, 0.25, 0.1).tail_expectation_below(0.9) == 0.0

    def test_identity_with_cdf_integral(self):
        # E[(p-a)+] = (1-a) - integral_a^1 F, via an independent quadrature
        for dist in ALL_VARIANTS:
            breaks = [p for p in
                      (dist.support[0], dist.support[1], 0.35, 0.65)
                      if 0 < p < 1]
            for a in (0.0, 0.3, 0.5, 0.8):
                integral, _ = integrate.quad(
                    lambda x: float(np.asarray(dist.cdf(x))), a, 1.0,
                    points=[p for p in breaks if p > a], limit=300)
                expected = (1.0 - a) - integral
                assert dist.tail_expectation_above(a) == \
                    pytest.approx(expected, abs=1e-8), (dist, a)

    def test_derivative_is_cdf_minus_one(self):
        # d/da E[(p-a)+] = F(a) - 1, central differences
        h = 1e-5
        for dist in CONTINUOUS:
            for a in (0.3, 0.52, 0.77):
                fd = (dist.tail_expectation_above(a + h)
                      - dist.tail_expectation_above(a - h)) / (2 * h)
                assert fd == pytest.approx(float(dist.cdf(a)) - 1.0,
                                           abs=1e-4), (dist, a)

    def test_two_block_mean_exactly_half(self):
        for args in ((0.75, 0.25, 0.1), (0.55, 0.05, 0.05), (0.85, 0.15, 0.01)):
            assert TwoBlock(*args).mean() == pytest.approx(0.5, abs=1e-12)


class TestConditionalTailMean:
    def test_uniform(self):
        assert Uniform(0, 1).conditional_tail_mean(0.5) == pytest.approx(0.75)

    def test_point_mass(self):
        assert PointMass(0.8).conditional_tail_mean(0.5) == pytest.approx(0.8)

    def test_zero_mass_tail_raises(self):
        with pytest.raises(UndefinedTailError):
            Uniform(0, 1).conditional_tail_mean(1.0)


class TestMeanResidualLife:
    def test_uniform(self):
        assert Uniform(0, 1).mean_residual_life(0.5) == pytest.approx(0.25)

    def test_point_mass(self):
        assert PointMass(0.8).mean_residual_life(0.6) == pytest.approx(0.2)

    def test_truncated_exponential_vs_quadrature(self):
        dist = TruncatedExponential(1.0)
        a = 0.5
        num, _ = integrate.quad(lambda p: (p - a) * dist.pdf(p), a, 1.0,
                                epsabs=1e-12)
        denom = 1.0 - dist.cdf(a)
        assert dist.mean_residual_life(a) == pytest.approx(num / denom,
                                                           abs=1e-8)


class TestCvar:
    def test_alpha_one_is_mean(self):
        for dist in ALL_VARIANTS:
            assert dist.cvar_upper(1.0) == pytest.approx(dist.mean(), abs=1e-9)

    def test_uniform_top_half(self):
        assert Uniform(0, 1).cvar_upper(0.5) == pytest.approx(0.75)

    def test_point_mass(self):
        assert PointMass(0.8).cvar_upper(0.3) == pytest.approx(0.8)

    def test_matches_variational_form(self):
        # CVaR_alpha = inf_rho { rho + E[(p - rho)+] / alpha }
        for dist in (Uniform(0, 1), SGM, TruncatedExponential(2.0),
                     TwoBlock(0.75, 0.25, 0.1)):
            for alpha in (0.1, 0.4, 0.9):
                res = optimize.minimize_scalar(
                    lambda r: r + dist.tail_expectation_above(r) / alpha,
                    bounds=(0.0, 1.0), method="bounded",
                    options={"xatol": 1e-10})
                assert dist.cvar_upper(alpha) == pytest.approx(res.fun,
                                                               abs=1e-6)

    def test_alpha_domain(self):
        with pytest.raises(ValueError):
            Uniform(0, 1).cvar_upper(0.0)


class TestSosd:
    def test_narrow_dominates_wide(self):
        assert sosd_compare(Uniform(0.4, 0.6), Uniform(0, 1)) is \
            SosdResult.DOMINATES

    def test_identical_incomparable(self):
        assert sosd_compare(Uniform(0, 1), Uniform(0, 1)) is \
            SosdResult.INCOMPARABLE

    def test_wide_dominated(self):
        assert sosd_compare(Uniform(0, 1), Uniform(0.4, 0.6)) is \
            SosdResult.DOMINATED_BY

    def test_mean_mismatch(self):
        with pytest.raises(MeanMismatchError):
            sosd_compare(Uniform(0, 1), Uniform(0.4, 0.8))

    def test_grid_step_domain(self):
        with pytest.raises(ValueError):
            sosd_compare(Uniform(0, 1), Uniform(0.4, 0.6), grid_step=0.5)

    @given(st.floats(0.02, 0.45), st.floats(0.02, 0.45))
    @settings(max_examples=30, deadline=None)
    def test_antisymmetry(self, h1, h2):
        f1 = Uniform(0.5 - h1, 0.5 + h1)
        f2 = Uniform(0.5 - h2, 0.5 + h2)
        forward = sosd_compare(f1, f2)
        backward = sosd_compare(f2, f1)
        if forward is SosdResult.DOMINATES:
            assert backward is SosdResult.DOMINATED_BY
        elif forward is SosdResult.DOMINATED_BY:
            assert backward is SosdResult.DOMINATES


class TestConstruction:
    def test_config_round_trip(self):
        for dist in ALL_VARIANTS:
            rebuilt = distribution_from_config(dist.config())
            grid = np.linspace(0, 1, 101)
            np.testing.assert_allclose(np.asarray(rebuilt.cdf(grid)),
                                       np.asarray(dist.cdf(grid)), atol=1e-12)

    def test_two_block_domain(self):
        with pytest.raises(ValueError):
            TwoBlock(0.4, 0.1, 0.1)   # m must exceed 0.5
        with pytest.raises(ValueError):
            TwoBlock(0.75, 0.3, 0.1)  # delta exceeds 1 - m

    def test_mixture_weights_must_sum_to_one(self):
        with pytest.raises(ValueError):
            SigmoidGaussianMixture((0.5, 0.4), (0.0, 1.0), (1.0, 1.0))

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            distribution_from_config({"kind": "cauchy", "params": {}})

    def test_ppf_inverts_cdf(self):
        for dist in CONTINUOUS:
            for u in (0.1, 0.5, 0.9):
                x = dist.ppf(u)
                assert float(dist.cdf(x)) == pytest.approx(u, abs=1e-9), dist
