import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
import sympy
from hypothesis import given
from hypothesis import strategies as st

from ptflab.errors import DegenerateInputError, InputError, NumericError
from ptflab.poly import (Polynomial, all_monomials, coefficient_norm_lower_bound, canonical_key, collapse_substitution,
                         cross_term_adversary, cross_weight, evaluate, evaluate_exact, evaluate_many,
                         gaussian_l2_norm, gaussian_second_moment, index_set, matching_dictator,
                         random_polynomial, restrict_to_block, sign, sign_many, weight)


def P(dim, terms, degree=None):
    return Polynomial.from_terms(dim, terms, degree)


@st.composite
def polynomials(draw, max_dim=6, max_degree=3, integer=False):
    dim = draw(st.integers(1, max_dim))
    degree = draw(st.integers(1, max_degree))
    keys = all_monomials(dim, degree)
    chosen = draw(st.lists(st.sampled_from(keys), min_size=1, max_size=12, unique=True))
    if integer:
        coeff = st.integers(-9, 9).map(float)
    else:
        coeff = st.floats(-100, 100, allow_nan=False).filter(lambda c: c == 0 or abs(c) > 1e-6)
    return P(dim, [(k, draw(coeff)) for k in chosen], degree)


class TestConstruction:
    def test_canonical_key_sorts_multiset(self):
        assert canonical_key([3, 1, 3]) == (1, 3, 3)

    def test_duplicate_terms_merge_and_zeros_purge(self):
        f = P(3, [((0, 1), 2.0), ((1, 0), -2.0), ((2,), 1.0)])
        assert dict(f.terms) == {(2,): 1.0}

    def test_rejects_out_of_range_index(self):
        with pytest.raises(InputError):
            P(2, {(2,): 1.0})

    def test_rejects_degree_overflow(self):
        with pytest.raises(InputError):
            P(2, {(0, 0, 1): 1.0}, degree=2)

    def test_monomial_count(self):
        assert len(all_monomials(5, 3)) == math.comb(8, 3)

    @given(polynomials())
    def test_json_round_trip_is_lossless(self, f):
        assert Polynomial.from_json(f.to_json()) == f

    def test_arithmetic(self):
        x0, x1 = Polynomial.variable(2, 0), Polynomial.variable(2, 1)
        f = (x0 + x1) * (x0 - x1)
        assert dict(f.terms) == {(0, 0): 1.0, (1, 1): -1.0}
        assert (x0 ** 3).coefficient((0, 0, 0)) == 1.0


class TestEvaluate:
    def test_identity_monomial(self):
        assert evaluate(Polynomial.variable(2, 0), [5.0, -1.0]) == 5.0

    def test_hand_arithmetic(self):
        f = P(3, {(0,): 3.0, (1, 2): -2.0})
        assert evaluate(f, [1.0, 1.0, 1.0]) == 1.0

    @pytest.mark.parametrize("d", [1, 2, 3])
    def test_dictator_sees_only_the_margin(self, d):
        n, i, g, delta = 4, 2, 0.7, 2.0 ** -20
        x = np.zeros(2 * n)
        x[i] = g ** d + delta
        x[n + i] = g
        assert evaluate(matching_dictator(n, i, d), x) == pytest.approx(delta, abs=1e-15)

    def test_dimension_mismatch(self):
        with pytest.raises(InputError):
            evaluate(Polynomial.variable(3, 0), [1.0, 2.0])

    @given(polynomials(), st.integers(0, 2 ** 32 - 1))
    def test_batch_matches_scalar_bitwise(self, f, seed):
        X = np.random.default_rng(seed).standard_normal((5, f.dim))
        batch = evaluate_many(f, X)
        for row, v in zip(X, batch):
            assert evaluate(f, row) == v

    @given(polynomials(integer=True), st.lists(st.integers(-4, 4), min_size=6, max_size=6))
    def test_float_matches_exact_on_small_integers(self, f, xs):
        x = [Fraction(v) for v in xs[:f.dim]]
        assert evaluate(f, [float(v) for v in x]) == float(evaluate_exact(f, x))


class TestSign:
    def test_tie_goes_positive(self):
        assert sign(0.0) == 1
        assert sign(-0.0) == 1

    def test_negative(self):
        assert sign(-3.5) == -1

    def test_tiny_positive(self):
        assert sign(2.0 ** -60) == 1

    def test_nan_raises(self):
        with pytest.raises(NumericError):
            sign(float("nan"))
        with pytest.raises(NumericError):
            sign_many(np.array([1.0, np.nan]))


class TestWeightAndIndexSets:
    def test_weight_examples(self):
        assert weight(P(3, {(0,): 3.0, (1, 2): -2.0})) == 5.0
        assert weight(Polynomial.constant(3, 7.0)) == 0.0
        assert weight(P(3, {(0,): 1.0, (2, 2): -1.0})) == 2.0

    def test_index_set_balanced_pair(self):
        assert index_set(P(2, {(0,): 1.0, (1,): -1.0}, 1), 1.0).sorted() == [0, 1]

    def test_index_set_drops_tiny_coefficient(self):
        assert index_set(P(2, {(0,): 1.0, (1,): 1e-12}, 1), 0.5).sorted() == [0]

    @pytest.mark.parametrize("d", [2, 3])
    def test_dictator_first_half(self, d):
        n, i = 8, 5
        fu = restrict_to_block(matching_dictator(n, i, d), range(n), compact=True)
        assert index_set(fu, 0.5).sorted() == [i]

    def test_constant_is_degenerate(self):
        with pytest.raises(DegenerateInputError):
            index_set(Polynomial.constant(3, 2.0), 0.5)

    @given(polynomials(), st.floats(0.1, 1.0), st.floats(1e-3, 1e3), st.booleans())
    def test_scale_invariance(self, f, theta, c, negate):
        if weight(f) == 0:
            return
        c = -c if negate else c
        assert index_set(f.scale(c), theta).members == index_set(f, theta).members

    @given(polynomials(), st.floats(0.01, 1.0))
    def test_nonempty_and_members_meet_threshold(self, f, theta):
        if weight(f) == 0:
            return
        s = index_set(f, theta)
        assert len(s) > 0
        for i in s.members:
            assert any(i in k and abs(c) >= s.threshold for k, c in f.terms.items())


class TestRestriction:
    def test_drops_touching_monomials(self):
        f = P(2, {(0,): 1.0, (0, 1): 1.0, (1, 1): 1.0})
        assert restrict_to_block(f, [0]) == Polynomial.variable(2, 0).embed(2)

    def test_empty_keep_leaves_constant(self):
        f = P(2, {(): 4.0, (0,): 1.0})
        assert dict(restrict_to_block(f, []).terms) == {(): 4.0}

    def test_first_half_is_f1_plus_constant(self):
        f = P(4, {(): 2.0, (0,): 1.0, (2,): 3.0, (0, 3): 5.0, (1, 1): -1.0})
        assert dict(restrict_to_block(f, range(2)).terms) == {(): 2.0, (0,): 1.0, (1, 1): -1.0}

    @given(polynomials(), st.integers(0, 2 ** 32 - 1), st.data())
    def test_matches_zeroed_evaluation(self, f, seed, data):
        keep = data.draw(st.sets(st.integers(0, f.dim - 1)))
        x = np.random.default_rng(seed).standard_normal(f.dim)
        z = np.where(np.isin(np.arange(f.dim), list(keep)), x, 0.0)
        assert evaluate(restrict_to_block(f, keep), x) == pytest.approx(evaluate(f, z), rel=1e-12, abs=1e-9)

    def test_compact_renumbers(self):
        f = matching_dictator(3, 1, 2)
        fv = restrict_to_block(f, range(3, 6), compact=True)
        assert fv.dim == 3 and dict(fv.terms) == {(1, 1): -1.0}


class TestCrossWeight:
    def test_examples(self):
        assert cross_weight(P(4, {(0, 2): 1.0, (0,): 1.0}), {0, 1}, {2, 3}) == 1.0
        assert cross_weight(matching_dictator(4, 1, 3), range(4), range(4, 8)) == 0.0

    def test_motivating_adversary(self):
        x = [Polynomial.variable(4, i) for i in range(4)]
        f = (x[0] - x[2]) * (x[0] * x[0] + x[1] * x[1])
        assert cross_weight(f, {0, 1}, {2, 3}) == 2.0

    def test_overlap_rejected(self):
        with pytest.raises(InputError):
            cross_weight(Polynomial.variable(3, 0), {0, 1}, {1, 2})

    @given(polynomials(), st.data())
    def test_weight_decomposes(self, f, data):
        A = data.draw(st.sets(st.integers(0, f.dim - 1)))
        B = set(range(f.dim)) - A
        total = weight(restrict_to_block(f, A)) + weight(restrict_to_block(f, B)) + cross_weight(f, A, B)
        assert total == pytest.approx(weight(f), rel=1e-12, abs=1e-12)


class TestGaussianNorm:
    def test_square_moment(self):
        assert gaussian_l2_norm(Polynomial.variable(1, 0, 2)) == pytest.approx(math.sqrt(3))

    def test_sum_of_two(self):
        assert gaussian_l2_norm(P(2, {(0,): 1.0, (1,): 1.0})) == pytest.approx(math.sqrt(2))

    def test_exact_mode_agrees(self):
        f = random_polynomial(3, 3, np.random.default_rng(1))
        assert float(gaussian_second_moment(f, exact=True)) == pytest.approx(gaussian_second_moment(f), rel=1e-12)

    @pytest.mark.parametrize("seed", range(6))
    def test_matches_monte_carlo(self, seed):
        rng = np.random.default_rng(seed)
        f = random_polynomial(1 + seed % 6, 1 + seed % 3, rng, n_terms=8)
        vals = evaluate_many(f, rng.standard_normal((100_000, f.dim))) ** 2
        se = vals.std() / math.sqrt(len(vals))
        assert abs(vals.mean() - gaussian_second_moment(f)) <= 5 * se

    @given(polynomials(max_dim=6, max_degree=3))
    def test_coefficient_lower_bound_exact(self, f):
        second = gaussian_second_moment(f, exact=True)
        d = max(f.degree, 1)
        for key, c in f.terms.items():
            lower = Fraction(abs(c)) / (d ** d * math.comb(f.dim + d, d))
            assert second >= lower * lower
            assert coefficient_norm_lower_bound(f, key) == pytest.approx(float(lower))


def sympy_collapse(f: Polynomial) -> dict:
    """Independent oracle: substitute symbolically and read off coefficients."""
    n, d = f.dim // 2, f.degree
    g = sympy.symbols(f"g0:{n}")
    image = [gi ** d for gi in g] + list(g)
    expr = sympy.Integer(0)
    for key, c in f.terms.items():
        term = sympy.Rational(c)
        for i in key:
            term *= image[i]
        expr += term
    poly = sympy.Poly(sympy.expand(expr), *g) if expr != 0 else None
    out = {}
    if poly is None:
        return out
    for powers, c in poly.terms():
        key = tuple(itertools.chain.from_iterable([i] * p for i, p in enumerate(powers)))
        out[key] = float(c)
    return out


class TestCollapse:
    @pytest.mark.parametrize("d", [1, 2, 3])
    def test_dictator_cancels(self, d):
        assert len(collapse_substitution(matching_dictator(3, 1, d))) == 0

    def test_lone_class(self):
        f = P(4, {(0, 1): 1.0}, 2)
        assert dict(collapse_substitution(f).terms) == {(0, 0, 1, 1): 1.0}

    def test_merge_of_linear_and_power(self):
        f = P(4, {(0,): 1.0, (2, 2): 1.0}, 2)
        assert dict(collapse_substitution(f).terms) == {(0, 0): 2.0}

    @pytest.mark.parametrize("n,d", [(n, d) for n in (1, 2, 3) for d in (1, 2, 3)])
    def test_against_symbolic_oracle(self, n, d):
        rng = np.random.default_rng(100 * n + d)
        keys = all_monomials(2 * n, d)
        for _ in range(6):
            f = P(2 * n, zip(keys, rng.choice([-1.0, 1.0], size=len(keys))), d)
            assert dict(collapse_substitution(f).terms) == sympy_collapse(f)


class TestFamilies:
    def test_adversary_shape(self):
        f = cross_term_adversary(3, 0)
        assert f.coefficient((0, 0, 0)) == 1.0
        assert f.coefficient((1, 1, 3)) == -1.0
        assert f.effective_degree == 3

    def test_random_polynomial_is_seeded(self):
        a = random_polynomial(4, 2, np.random.default_rng(9), n_terms=5)
        b = random_polynomial(4, 2, np.random.default_rng(9), n_terms=5)
        assert a == b and len(a) == 5
