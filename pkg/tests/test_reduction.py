import itertools
import json

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given
from hypothesis import strategies as st

from ptflab.analysis import agreement
from ptflab.errors import CapacityError, ConfigError, InputError
from ptflab.gauss import make_rng
from ptflab.poly import Polynomial, evaluate_many, random_polynomial
from ptflab.reduction import (LabelCoverInstance, Labeling, ReductionConfig, UniqueGamesInstance, build_folding,
                              check_folded, fold, folding_check, folding_generators, generate_planted_lc,
                              generate_planted_ug, gram_schmidt, instance_from_json, lc_intended_ptf,
                              opt_bruteforce, reduce_lc, reduce_ug, reduction_examples, regular_bipartite_edges,
                              ug_intended_ptf)


def single_edge_ug(maps):
    maps = np.atleast_2d(maps)
    return UniqueGamesInstance(1, 1, maps.shape[1], tuple((0, 0) for _ in maps), maps)


class TestInstances:
    def test_ug_rejects_non_bijection(self):
        with pytest.raises(InputError):
            single_edge_ug([0, 0])

    def test_lc_requires_m_at_least_k(self):
        with pytest.raises(InputError):
            LabelCoverInstance(1, 1, 3, ((0, 0),), np.zeros((1, 2), dtype=int), m=2)

    def test_lc_projection_range(self):
        with pytest.raises(InputError):
            LabelCoverInstance(1, 1, 2, ((0, 0),), np.array([[0, 2, 1]]), m=3)

    def test_json_round_trip(self):
        inst, _ = generate_planted_lc(3, 3, 2, 2, 3, 0.0, make_rng(0))
        back = instance_from_json(json.loads(json.dumps(inst.to_json())))
        assert back.digest() == inst.digest() and isinstance(back, LabelCoverInstance)

    def test_unknown_type(self):
        with pytest.raises(InputError):
            instance_from_json({"type": "xx", "U": 1, "V": 1, "k": 1, "edges": [], "maps": []})

    def test_labeling_bounds(self):
        inst = single_edge_ug([0, 1])
        with pytest.raises(InputError):
            inst.satisfied_fraction(Labeling((2,), (0,)))

    def test_regular_graph(self):
        edges = regular_bipartite_edges(4, 2, 2, make_rng(0))
        assert sorted(np.bincount([v for _, v in edges]).tolist()) == [4, 4]
        assert len(set(edges)) == len(edges)
        with pytest.raises(InputError):
            regular_bipartite_edges(3, 2, 1, make_rng(0))


class TestOpt:
    def test_single_identity_edge(self):
        assert opt_bruteforce(single_edge_ug([0, 1]))[0] == 1.0

    def test_contradictory_parallel_edges(self):
        assert opt_bruteforce(single_edge_ug([[0, 1], [1, 0]]))[0] == 0.5

    def test_capacity(self):
        inst, _ = generate_planted_ug(8, 8, 2, 8, 0.0, make_rng(0))
        with pytest.raises(CapacityError):
            opt_bruteforce(inst)

    @given(st.integers(0, 10_000))
    def test_matches_full_enumeration(self, seed):
        inst, _ = generate_planted_ug(2, 2, 2, 3, 0.5, make_rng(seed))
        best = max(inst.satisfied_fraction(Labeling(lu, lv))
                   for lu in itertools.product(range(3), repeat=2) for lv in itertools.product(range(3), repeat=2))
        value, lab = opt_bruteforce(inst)
        assert value == best == inst.satisfied_fraction(lab)


class TestPlanted:
    @pytest.mark.parametrize("seed", range(3))
    def test_noiseless_is_satisfiable(self, seed):
        inst, lab = generate_planted_ug(3, 3, 2, 3, 0.0, make_rng(seed))
        assert inst.satisfied_fraction(lab) == 1.0
        assert opt_bruteforce(inst)[0] == 1.0
        assert inst.is_regular()

    @pytest.mark.parametrize("eta", [0.25, 0.5])
    def test_noise_count(self, eta):
        inst, lab = generate_planted_ug(4, 4, 2, 4, eta, make_rng(1))
        assert inst.satisfied_fraction(lab) == 1 - round(eta * 8) / 8

    def test_full_noise_removes_the_plant(self):
        inst, lab = generate_planted_ug(3, 3, 2, 6, 1.0, make_rng(9))
        assert inst.satisfied_fraction(lab) == 0.0
        assert opt_bruteforce(inst)[0] < 1.0

    def test_lc_planted(self):
        inst, lab = generate_planted_lc(4, 4, 2, 2, 4, 0.0, make_rng(3))
        assert inst.satisfied_fraction(lab) == 1.0 and opt_bruteforce(inst)[0] == 1.0


class TestUGReduction:
    inst, lab = generate_planted_ug(4, 4, 2, 4, 0.0, make_rng(5))

    def test_support_is_one_edge(self):
        data = reduction_examples(self.inst, ReductionConfig(seed=1), 2000)
        k = self.inst.k
        for row in data.Y:
            blocks = {int(i) // k for i in np.flatnonzero(row)}
            assert len(blocks) <= 2
            u_blocks = [b for b in blocks if b < self.inst.n_u]
            v_blocks = [b - self.inst.n_u for b in blocks if b >= self.inst.n_u]
            assert len(u_blocks) == 1 and len(v_blocks) == 1
            assert (u_blocks[0], v_blocks[0]) in self.inst.edges

    def test_intended_ptf_completeness(self):
        cfg = ReductionConfig(d=2, seed=2)
        rep = agreement(ug_intended_ptf(self.inst, self.lab, 2), reduction_examples(self.inst, cfg, 20_000))
        assert rep.agreement >= 1 - cfg.beta_for(self.inst.k) - 0.02

    @pytest.mark.parametrize("seed", range(3))
    def test_three_planted_instances(self, seed):
        inst, lab = generate_planted_ug(4, 4, 2, 4, 0.25, make_rng(100 + seed))
        cfg = ReductionConfig(d=3, seed=seed)
        rep = agreement(ug_intended_ptf(inst, lab, 3), reduction_examples(inst, cfg, 20_000))
        assert rep.agreement >= 1 - 0.25 - cfg.beta_for(inst.k) - 0.02

    def test_no_noise_no_bits_is_perfect(self):
        cfg = ReductionConfig(d=2, beta=0.0, seed=3)
        rep = agreement(ug_intended_ptf(self.inst, self.lab, 2), reduction_examples(self.inst, cfg, 5000))
        assert rep.agreement == 1.0

    def test_constant_hypothesis(self):
        data = reduction_examples(self.inst, ReductionConfig(seed=4), 20_000)
        assert abs(agreement(Polynomial.constant(self.inst.dim, 1.0), data).agreement - 0.5) <= 0.015

    def test_stream_is_lazy_and_seeded(self):
        a = [next(reduce_ug(self.inst, ReductionConfig(), make_rng(7))) for _ in range(1)]
        b = [next(reduce_ug(self.inst, ReductionConfig(), make_rng(7))) for _ in range(1)]
        assert np.array_equal(a[0].y, b[0].y) and a[0].b == b[0].b


def unit_instance(m, k=1):
    return LabelCoverInstance(1, 1, k, ((0, 0),), np.zeros((1, m), dtype=np.int64), m=m)


class TestFolding:
    def test_single_edge_hand_values(self):
        basis = build_folding(unit_instance(1))
        assert basis.rank == 1
        assert np.allclose(fold(basis, [1.0, -1.0]), [0.0, 0.0], atol=1e-15)
        assert np.allclose(fold(basis, [1.0, 1.0]), [1.0, 1.0])

    def test_unit_generator(self):
        assert folding_generators(unit_instance(3)).tolist() == [[1.0, -1.0, -1.0, -1.0]]

    @pytest.mark.parametrize("seed", range(4))
    def test_basis_properties(self, seed):
        inst, _ = generate_planted_lc(4, 4, 2, 2, 4, 0.3, make_rng(seed))
        fb = build_folding(inst)
        Q = fb.basis
        assert np.abs(Q.T @ Q - np.eye(fb.rank)).max() <= 1e-10
        assert np.abs(fb.generators.T - Q @ (Q.T @ fb.generators.T)).max() <= 1e-8
        assert fb.rank <= len(inst.edges) * inst.k
        assert fb.rank == np.linalg.matrix_rank(fb.generators)

    @given(st.integers(0, 1000))
    def test_matches_reference_projection(self, seed):
        inst, _ = generate_planted_lc(3, 3, 2, 2, 3, 0.0, make_rng(seed))
        fb = build_folding(inst)
        span = scipy.linalg.orth(fb.generators.T)
        ref = np.eye(inst.dim) - span @ span.T
        y = make_rng(seed, 1).standard_normal(inst.dim)
        assert np.allclose(fold(fb, y), ref @ y, atol=1e-10)
        assert np.allclose(fb.projector(), ref, atol=1e-10)

    def test_idempotent_and_orthogonal(self):
        inst, _ = generate_planted_lc(4, 4, 2, 2, 4, 0.0, make_rng(2))
        fb = build_folding(inst)
        Y = make_rng(3).standard_normal((50, inst.dim))
        F = fold(fb, Y)
        assert np.abs(fold(fb, F) - F).max() <= 1e-9
        assert np.abs(F @ fb.generators.T).max() <= 1e-9
        assert np.abs(fold(fb, fb.generators)).max() <= 1e-9

    def test_orthogonal_input_unchanged(self):
        fb = build_folding(unit_instance(2))
        y = np.array([1.0, 0.5, 0.5])
        assert np.allclose(fold(fb, y), y)

    def test_dimension_mismatch(self):
        with pytest.raises(InputError):
            fold(build_folding(unit_instance(2)), np.zeros(5))

    def test_gram_schmidt_drops_dependent(self):
        v = np.array([[1.0, 0, 0], [0, 1, 0], [1, 1, 0]])
        assert gram_schmidt(v).shape == (3, 2)
        assert gram_schmidt(np.zeros((2, 3))).shape == (3, 0)


class TestLCReduction:
    inst, lab = generate_planted_lc(4, 4, 2, 2, 4, 0.0, make_rng(11))

    def test_intended_is_folded_and_complete(self):
        p = lc_intended_ptf(self.inst, self.lab)
        assert check_folded(p, self.inst)
        cfg = ReductionConfig(seed=1)
        rep = agreement(p, reduction_examples(self.inst, cfg, 20_000))
        assert rep.agreement >= 1 - cfg.beta_for(self.inst.m) - 0.02

    def test_emitted_points_are_folded(self):
        data = reduction_examples(self.inst, ReductionConfig(seed=2), 5000)
        gens = folding_generators(self.inst)
        rel = np.abs(data.Y @ gens.T) / (np.linalg.norm(data.Y, axis=1)[:, None] * np.linalg.norm(gens, axis=1))
        assert rel.max() <= 1e-9

    def test_folded_polynomial_ignores_fold(self):
        p = lc_intended_ptf(self.inst, self.lab)
        rng = make_rng(3)
        fb = build_folding(self.inst)
        Y = rng.standard_normal((200, self.inst.dim))
        before, after = evaluate_many(p, Y), evaluate_many(p, fold(fb, Y))
        assert np.all(np.abs(before - after) <= 1e-8 * (1 + np.abs(before)))
        q = random_polynomial(self.inst.dim, 1, rng)
        assert not np.allclose(evaluate_many(q, Y), evaluate_many(q, fold(fb, Y)))

    def test_constant_hypothesis(self):
        data = reduction_examples(self.inst, ReductionConfig(seed=5), 20_000)
        assert abs(agreement(Polynomial.constant(self.inst.dim, -1.0), data).agreement - 0.5) <= 0.015

    def test_lone_u_coordinate_not_folded(self):
        p = Polynomial.variable(self.inst.dim, self.inst.u_block(0)[1])
        assert not check_folded(p, self.inst)

    def test_stream(self):
        ex = next(reduce_lc(self.inst, ReductionConfig(), make_rng(0)))
        assert ex.y.shape == (self.inst.dim,)

    def test_overflow_guard(self):
        inst, _ = generate_planted_lc(2, 2, 1, 2, 1024, 0.0, make_rng(0))
        with pytest.raises(ConfigError):
            reduction_examples(inst, ReductionConfig(), 10)
        reduction_examples(inst, ReductionConfig(t_exponent_cap=5), 10)


class TestFoldingIdentity:
    @staticmethod
    def invariant(m, rng):
        dim = m + 1
        z = [Polynomial.variable(dim, 0) + Polynomial.variable(dim, j) for j in range(1, m + 1)]
        p = Polynomial.constant(dim, float(rng.integers(-5, 6)), 2)
        for j in range(m):
            p = p + z[j] * float(rng.integers(-5, 6))
            for l in range(j, m):
                p = p + z[j] * z[l] * float(rng.integers(-5, 6))
        return p

    @given(st.integers(0, 2 ** 32 - 1), st.integers(1, 5))
    def test_shift_invariant_satisfies_identity_exactly(self, seed, m):
        rng = np.random.default_rng(seed)
        p = self.invariant(m, rng)
        res = folding_check(p, unit_instance(m), rng=rng)
        assert res.folded and res.max_identity_gap == 0.0
        w = [p.coefficient((j,)) for j in range(m + 1)]
        assert w[0] == sum(w[1:])

    @given(st.integers(0, 2 ** 32 - 1), st.integers(1, 5))
    def test_generic_polynomial_rejected(self, seed, m):
        rng = np.random.default_rng(seed)
        assert not check_folded(random_polynomial(m + 1, 2, rng), unit_instance(m), rng=rng)

    def test_identity_alone_is_not_enough(self):
        # linear part obeys w0 = sum(wi) but the quadratic part breaks invariance
        p = Polynomial.from_terms(3, {(0,): 2.0, (1,): 1.0, (2,): 1.0, (1, 1): 1.0}, 2)
        res = folding_check(p, unit_instance(2))
        assert res.max_identity_gap == 0.0 and not res.folded

    def test_degree_three_rejected(self):
        with pytest.raises(InputError):
            check_folded(Polynomial.variable(3, 0, 3), unit_instance(2))
