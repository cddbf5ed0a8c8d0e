import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ptflab.errors import DegenerateInputError, InputError
from ptflab.gauss import (DiscretizedGaussianSpec, RngSeed, anticoncentration_check, berry_esseen_gap,
                          binomial_cdf, coupled_from_uniform, coupling_bound, dkw_epsilon, empirical_cdf_gap,
                          make_rng, normal_cdf, normal_quantile, open_uniform, sample_bits, sample_coupled,
                          sample_coupled_array, sample_gaussian, scaled_binomial_cdf)
from ptflab.poly import Polynomial

mpmath.mp.dps = 40


def exact_binomial_cdf(N, j):
    return Fraction(sum(math.comb(N, i) for i in range(j + 1)), 2 ** N)


class TestRandomSources:
    def test_gaussian_moments(self):
        x = sample_gaussian(make_rng(1), 1_000_000)
        assert abs(x.mean()) <= 0.005
        assert 0.99 <= x.var() <= 1.01

    def test_same_seed_same_sequence(self):
        a = sample_gaussian(make_rng(5, 2), 100)
        b = RngSeed(5, 2).generator().standard_normal(100)
        assert np.array_equal(a, b)

    def test_streams_differ(self):
        assert not np.array_equal(sample_gaussian(make_rng(5, 0), 10), sample_gaussian(make_rng(5, 1), 10))

    def test_bits_extremes(self):
        rng = make_rng(0)
        assert not sample_bits(rng, 50, 0.0).any()
        assert sample_bits(rng, 50, 1.0).all()

    def test_bits_rate(self):
        frac = sample_bits(make_rng(2), 100_000, 0.1).mean()
        assert 0.094 <= frac <= 0.106

    @pytest.mark.parametrize("beta", [-0.1, 1.5])
    def test_bits_range_checked(self, beta):
        with pytest.raises(InputError):
            sample_bits(make_rng(0), 3, beta)

    def test_open_uniform_excludes_endpoints(self):
        u = open_uniform(make_rng(3), 100_000)
        assert u.min() > 0.0 and u.max() < 1.0


class TestNormalFunctions:
    def test_center(self):
        assert normal_cdf(0.0) == 0.5

    def test_cdf_accuracy(self):
        for x in np.linspace(-8, 8, 161):
            ref = float(mpmath.ncdf(x))
            assert abs(normal_cdf(x) - ref) <= 1e-12 * ref

    def test_quantile_accuracy(self):
        for x in np.linspace(-8, 8, 161):
            p = float(mpmath.ncdf(x))
            ref = float(mpmath.sqrt(2) * mpmath.erfinv(2 * mpmath.mpf(p) - 1))
            assert abs(normal_quantile(p) - ref) <= 1e-12 * max(1.0, abs(ref)) or abs(x) > 7.5


class TestBinomial:
    @pytest.mark.parametrize("N", [1, 2, 7, 64, 101])
    def test_table_matches_exact_sums(self, N):
        spec = DiscretizedGaussianSpec(N)
        for j in range(N + 1):
            assert spec.cdf_table[j] == pytest.approx(float(exact_binomial_cdf(N, j)), rel=1e-12, abs=1e-300)

    def test_mass_point_at_zero(self):
        spec = DiscretizedGaussianSpec(10)
        assert binomial_cdf(spec, 0.0) == pytest.approx(float(exact_binomial_cdf(10, 5)), rel=1e-14)

    def test_step_function_between_lattice_points(self):
        spec = DiscretizedGaussianSpec(10)
        assert binomial_cdf(spec, 0.5) == binomial_cdf(spec, 0.0)
        assert binomial_cdf(spec, -11) == 0.0 and binomial_cdf(spec, 10) == 1.0

    def test_support(self):
        spec = DiscretizedGaussianSpec(4)
        assert np.allclose(spec.support, np.array([-4, -2, 0, 2, 4]) / 2.0)

    def test_large_N_is_finite_and_monotone(self):
        table = DiscretizedGaussianSpec(100_000).cdf_table
        assert np.isfinite(table).all() and (np.diff(table) >= 0).all()

    def test_berry_esseen_at_100(self):
        assert berry_esseen_gap(DiscretizedGaussianSpec(100), np.linspace(-5, 5, 10_000)) <= 0.1

    @pytest.mark.parametrize("N", [64, 256, 1024])
    def test_berry_esseen_band(self, N):
        spec = DiscretizedGaussianSpec(N)
        grid = np.linspace(-5, 5, 10_000)
        draws = (2.0 * make_rng(N).binomial(N, 0.5, size=100_000) - N) / math.sqrt(N)
        bound = 1 / math.sqrt(N) + dkw_epsilon(100_000)
        assert berry_esseen_gap(spec, grid) <= bound
        assert empirical_cdf_gap(draws, grid, normal_cdf) <= bound

    def test_scaled_cdf(self):
        spec = DiscretizedGaussianSpec(16)
        assert scaled_binomial_cdf(spec, 0.0) == binomial_cdf(spec, 0.0)


class TestDKW:
    def test_formula(self):
        assert dkw_epsilon(100_000) == pytest.approx(math.sqrt(math.log(200) / 200_000))

    def test_doubling_shrinks_by_root_two(self):
        assert dkw_epsilon(1000) / dkw_epsilon(2000) == pytest.approx(math.sqrt(2), rel=1e-14)


class TestCoupling:
    spec = DiscretizedGaussianSpec(1024)

    def test_lattice_invariant(self):
        g, h = sample_coupled_array(make_rng(4), self.spec, 10_000)
        k = h * math.sqrt(self.spec.N) + self.spec.N
        assert np.allclose(k, np.round(k)) and (np.round(k) % 2 == 0).all()
        assert k.min() >= 0 and k.max() <= 2 * self.spec.N

    def test_single_draw(self):
        pair = sample_coupled(make_rng(4), self.spec)
        assert isinstance(pair.g, float) and isinstance(pair.h_scaled, float)

    @given(st.floats(1e-12, 1 - 1e-12))
    def test_g_in_quantile_interval(self, u):
        g, h = coupled_from_uniform(self.spec, u)
        j = round((h * math.sqrt(self.spec.N) + self.spec.N) / 2)
        lo = self.spec.cdf_table[j - 1] if j > 0 else 0.0
        assert lo < u <= self.spec.cdf_table[j]
        assert g <= normal_quantile(self.spec.cdf_table[j])
        if j > 0:
            assert normal_quantile(lo) <= g

    @given(st.floats(1e-12, 1 - 1e-12), st.floats(1e-12, 1 - 1e-12))
    def test_monotone(self, u1, u2):
        lo, hi = min(u1, u2), max(u1, u2)
        g1, h1 = coupled_from_uniform(self.spec, lo)
        g2, h2 = coupled_from_uniform(self.spec, hi)
        assert g1 <= g2 and h1 <= h2

    def test_marginals(self):
        g, h = sample_coupled_array(make_rng(8), self.spec, 100_000)
        assert abs(h.mean()) <= 0.02
        grid = np.linspace(-4, 4, 2001)
        assert empirical_cdf_gap(g, grid, normal_cdf) <= dkw_epsilon(100_000)
        assert empirical_cdf_gap(h, grid, lambda z: scaled_binomial_cdf(self.spec, z)) <= dkw_epsilon(100_000)

    def test_closeness_at_4096(self):
        spec = DiscretizedGaussianSpec(4096)
        g, h = sample_coupled_array(make_rng(9), spec, 20_000)
        radius, need = coupling_bound(spec.N)
        assert np.mean(np.abs(g - h) <= radius) >= need
        assert np.max(np.abs(g - h)) < 0.2


class TestAntiConcentration:
    def test_linear(self):
        res = anticoncentration_check(Polynomial.variable(1, 0), 0.05, 100_000, make_rng(1))
        exact = 2 * normal_cdf(0.05) - 1
        assert abs(res.probability - exact) <= dkw_epsilon(100_000)
        assert res.probability <= 3 * 0.05

    def test_product(self):
        f = Polynomial.from_terms(2, {(0, 1): 1.0})
        res = anticoncentration_check(f, 0.01, 100_000, make_rng(2))
        assert res.bound == pytest.approx(0.6)
        assert res.probability <= res.bound

    def test_large_tau_trivial(self):
        res = anticoncentration_check(Polynomial.variable(2, 1), 10.0, 1000, make_rng(3))
        assert res.bound > 1 and res.probability <= res.bound

    def test_constant_rejected(self):
        with pytest.raises(DegenerateInputError):
            anticoncentration_check(Polynomial.constant(2, 1.0), 0.1, 10, make_rng(0))

    def test_bad_tau(self):
        with pytest.raises(InputError):
            anticoncentration_check(Polynomial.variable(1, 0), 0.0, 10, make_rng(0))
