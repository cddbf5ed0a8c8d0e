"""Named acceptance checks, grouped into suites.

Each check is a pure function of :class:`VerifySettings`; every random draw
is derived from ``settings.seed`` so a rerun reproduces the report byte for byte.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from .analysis import agreement, decode_ug, lp_consistent, max_agreement_exact
from .data import ExampleSet
from .gadgets import GadgetConfig, estimate_pass_probability
from .gauss import (DiscretizedGaussianSpec, anticoncentration_check, berry_esseen_gap, coupling_bound,
                    dkw_epsilon, empirical_cdf_gap, hoeffding_halfwidth, make_rng, normal_cdf,
                    sample_coupled_array)
from .poly import (Polynomial, all_monomials, collapse_substitution, cross_term_adversary, evaluate_many,
                   gaussian_second_moment, matching_dictator, random_polynomial, sign_many)
from .reduction import (LabelCoverInstance, ReductionConfig, check_folded, folding_check, folding_generators,
                        generate_planted_lc, generate_planted_ug, lc_intended_ptf, reduction_examples,
                        ug_intended_ptf)


@dataclass
class CheckResult:
    name: str
    passed: bool
    measured: float
    bound: float
    details: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return asdict(self)

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} {self.name}: measured={self.measured:.6g} bound={self.bound:.6g}"


@dataclass(frozen=True)
class VerifySettings:
    seed: int = 0
    n: int = 16
    d: int | None = None          # None runs both d = 2 and d = 3 where a check sweeps degree
    samples: int = 100_000

    def degrees(self) -> tuple[int, ...]:
        return (2, 3) if self.d is None else (self.d,)

    def sub_seed(self, tag: int) -> int:
        return self.seed * 1000 + tag


# -- gadget checks -------------------------------------------------------------------


def check_td_completeness(s: VerifySettings) -> CheckResult:
    rows, worst, bound = [], 1.0, None
    for d in s.degrees():
        for i in sorted({0, s.n // 2, s.n - 1}):
            cfg = GadgetConfig("Td", s.n, d, seed=s.sub_seed(1), samples=s.samples)
            est = estimate_pass_probability(matching_dictator(s.n, i, d), cfg)
            bound = 1.0 - cfg.beta_value - 0.01
            rows.append({"d": d, "i": i, "estimate": est.estimate, "ci99": est.half_width})
            worst = min(worst, est.estimate)
    return CheckResult("td_completeness", worst >= bound, worst, bound, {"runs": rows})


def check_t2_completeness(s: VerifySettings) -> CheckResult:
    cfg = GadgetConfig("T2", s.n, seed=s.sub_seed(2), samples=s.samples)
    rows = []
    for i in sorted({0, s.n - 1}):
        est = estimate_pass_probability(Polynomial.variable(s.n, i), cfg)
        rows.append({"i": i, "estimate": est.estimate, "ci99": est.half_width})
    worst = min(r["estimate"] for r in rows)
    bound = 1.0 - cfg.beta_value - 0.01
    return CheckResult("t2_completeness", worst >= bound, worst, bound, {"runs": rows, "beta": cfg.beta_value})


def check_constant_calibration(s: VerifySettings) -> CheckResult:
    rows, gap = [], 0.0
    for variant in ("T1", "Td", "T2"):
        cfg = GadgetConfig(variant, s.n, 2, seed=s.sub_seed(3), samples=s.samples)
        for c in (1.0, -1.0):
            est = estimate_pass_probability(Polynomial.constant(cfg.dim, c), cfg)
            rows.append({"variant": variant, "constant": c, "estimate": est.estimate})
            gap = max(gap, abs(est.estimate - 0.5))
    return CheckResult("constant_calibration", gap <= 0.01, gap, 0.01, {"runs": rows})


def check_soundness_spot(s: VerifySettings) -> CheckResult:
    cfg = GadgetConfig("Td", s.n, 3, seed=s.sub_seed(4), samples=s.samples)
    adv = estimate_pass_probability(cross_term_adversary(s.n, 0), cfg)
    adv_bound = 0.5 + cfg.beta_value + 0.01
    rng = make_rng(s.sub_seed(4), 1)
    worst = 0.0
    for j in range(50):
        d = 2 if j < 25 else 3
        f = random_polynomial(2 * s.n, d, rng, n_terms=40)
        est = estimate_pass_probability(f, GadgetConfig("Td", s.n, d, seed=s.sub_seed(4) + 1 + j, samples=20_000))
        worst = max(worst, est.estimate)
    ok = adv.estimate <= adv_bound and worst <= 0.55
    return CheckResult("soundness_spot", ok, worst, 0.55,
                       {"adversary": adv.estimate, "adversary_bound": adv_bound, "random_max": worst,
                        "random_count": 50, "random_samples": 20_000})


def check_dictator_decoding(s: VerifySettings) -> CheckResult:
    k = 8
    exact = all(decode_ug(matching_dictator(k, i, d)).u_sets == ((i,),) and
                decode_ug(matching_dictator(k, i, d)).v_sets == ((i,),)
                for d in (2, 3) for i in range(k))
    # cap check over every polynomial that clears the completeness threshold
    rng = make_rng(s.sub_seed(5), 0)
    candidates = [matching_dictator(s.n, i, d) for d in (2, 3) for i in range(s.n)]
    candidates += [cross_term_adversary(s.n, 0)]
    candidates += [random_polynomial(2 * s.n, 2, rng, n_terms=40) for _ in range(5)]
    largest, checked, violations = 0, 0, 0
    for j, f in enumerate(candidates):
        cfg = GadgetConfig("Td", s.n, max(f.degree, 2), seed=s.sub_seed(5) + j, samples=20_000)
        est = estimate_pass_probability(f, cfg)
        beta = cfg.beta_value
        if est.estimate >= 0.5 + beta:
            dec = decode_ug(f, beta, est.estimate)
            checked += 1
            largest = max(largest, dec.max_set_size())
            violations += not dec.within_cap(1.0 / beta ** 2)
    cap = 1.0 / GadgetConfig("Td", s.n, 2).beta_value ** 2
    return CheckResult("dictator_decoding", exact and violations == 0 and checked > 0, largest, cap,
                       {"exact_singletons": exact, "polynomials_over_threshold": checked,
                        "cap_violations": violations})


# -- reductions ------------------------------------------------------------------------


def check_ug_reduction(s: VerifySettings) -> CheckResult:
    rows, ok, slack = [], True, math.inf
    for j, eta in enumerate((0.0, 0.25)):
        inst, lab = generate_planted_ug(4, 4, 2, 4, eta, make_rng(s.sub_seed(6), j))
        cfg = ReductionConfig(d=2, seed=s.sub_seed(6) + j)
        ex = reduction_examples(inst, cfg, 50_000)
        rep = agreement(ug_intended_ptf(inst, lab, 2), ex)
        bound = 1.0 - eta - cfg.beta_for(inst.k) - 0.02
        rows.append({"eta": eta, "agreement": rep.agreement, "bound": bound, "instance": inst.digest(),
                     "planted_value": inst.satisfied_fraction(lab)})
        ok &= rep.agreement >= bound
        slack = min(slack, rep.agreement - bound)
    return CheckResult("ug_reduction", ok, slack, 0.0, {"runs": rows})


def check_lc_folding(s: VerifySettings) -> CheckResult:
    inst, lab = generate_planted_lc(4, 4, 2, 2, 4, 0.0, make_rng(s.sub_seed(7), 0))
    cfg = ReductionConfig(seed=s.sub_seed(7))
    ex = reduction_examples(inst, cfg, 50_000)
    p = lc_intended_ptf(inst, lab)
    folded = check_folded(p, inst, rng=make_rng(s.sub_seed(7), 1))
    rep = agreement(p, ex)
    bound = 1.0 - 1.0 / math.log2(inst.m) - 0.02
    gens = folding_generators(inst)
    scale = np.linalg.norm(ex.Y, axis=1)[:, None] * np.linalg.norm(gens, axis=1)[None, :]
    orth = float(np.max(np.abs(ex.Y @ gens.T) / np.maximum(scale, 1.0)))
    ok = folded and rep.agreement >= bound and orth <= 1e-9
    return CheckResult("lc_folding", ok, rep.agreement, bound,
                       {"check_folded": folded, "orthogonality": orth, "orthogonality_tol": 1e-9,
                        "labeling_value": inst.satisfied_fraction(lab), "instance": inst.digest()})


def unit_fold_instance(m: int) -> LabelCoverInstance:
    """One edge, k = 1, all v-labels project to 0: the only generator is (1, -1, ..., -1)."""
    return LabelCoverInstance(1, 1, 1, ((0, 0),), np.zeros((1, m), dtype=np.int64), 1, m=m)


def shift_invariant_polynomial(m: int, rng: np.random.Generator) -> Polynomial:
    """Random integer quadratic in z_j = x_0 + x_j, j = 1..m."""
    dim = m + 1
    z = [Polynomial.variable(dim, 0) + Polynomial.variable(dim, j) for j in range(1, m + 1)]
    p = Polynomial.constant(dim, float(rng.integers(-5, 6)), 2)
    for j in range(m):
        p = p + z[j] * float(rng.integers(-5, 6))
        for l in range(j, m):
            p = p + z[j] * z[l] * float(rng.integers(-5, 6))
    return p


def check_folding_algebra(s: VerifySettings) -> CheckResult:
    m = 4
    inst = unit_fold_instance(m)
    rng = make_rng(s.sub_seed(8), 0)
    exact_hits, worst_gap = 0, 0.0
    for _ in range(100):
        p = shift_invariant_polynomial(m, rng)
        res = folding_check(p, inst, rng=rng)
        exact_hits += res.folded and res.max_identity_gap == 0.0
        worst_gap = max(worst_gap, res.max_probe_gap)
    rejected = sum(not check_folded(random_polynomial(m + 1, 2, rng), inst, rng=rng) for _ in range(100))
    ok = exact_hits == 100 and rejected == 100
    return CheckResult("folding_algebra", ok, exact_hits + rejected, 200,
                       {"invariant_exact": exact_hits, "noninvariant_rejected": rejected,
                        "max_probe_gap": worst_gap})


# -- discretisation and Gaussian facts -------------------------------------------------


def check_discretization(s: VerifySettings) -> CheckResult:
    spec = DiscretizedGaussianSpec(4096)
    rng = make_rng(s.sub_seed(9), 0)
    g, h = sample_coupled_array(rng, spec, (20_000, 6))
    radius, need = coupling_bound(spec.N)
    close = float(np.mean(np.abs(g - h) <= radius))
    worst = 0.0
    for _ in range(20):
        p = random_polynomial(6, 2, rng)
        worst = max(worst, float(np.mean(sign_many(evaluate_many(p, g)) != sign_many(evaluate_many(p, h)))))
    ok = worst <= 0.02 and close >= need
    return CheckResult("discretization", ok, worst, 0.02,
                       {"coupling_close": close, "coupling_radius": radius, "coupling_required": need})


def check_berry_esseen(s: VerifySettings) -> CheckResult:
    grid = np.linspace(-5.0, 5.0, 10_000)
    rng = make_rng(s.sub_seed(10), 0)
    rows, ok, worst_ratio = [], True, 0.0
    slack = dkw_epsilon(100_000)
    for N in (64, 256, 1024):
        spec = DiscretizedGaussianSpec(N)
        exact = berry_esseen_gap(spec, grid)
        draws = (2.0 * rng.binomial(N, 0.5, size=100_000) - N) / math.sqrt(N)
        emp = empirical_cdf_gap(draws, grid, normal_cdf)
        bound = 1.0 / math.sqrt(N) + slack
        rows.append({"N": N, "exact_gap": exact, "empirical_gap": emp, "bound": bound})
        ok &= max(exact, emp) <= bound
        worst_ratio = max(worst_ratio, max(exact, emp) / bound)
    return CheckResult("berry_esseen", ok, worst_ratio, 1.0, {"runs": rows, "dkw": slack})


def check_carbery_wright(s: VerifySettings) -> CheckResult:
    rng = make_rng(s.sub_seed(11), 0)
    worst, rows = 0.0, []
    slack = hoeffding_halfwidth(100_000)
    for j in range(10):
        f = random_polynomial(5, 3, rng)
        for tau in (1e-3, 1e-2, 1e-1):
            res = anticoncentration_check(f, tau, 100_000, rng)
            ratio = res.probability / (res.bound + slack)
            worst = max(worst, ratio)
            rows.append({"poly": j, "tau": tau, "probability": res.probability, "bound": res.bound})
    return CheckResult("carbery_wright", worst <= 1.0, worst, 1.0, {"runs": rows, "slack": slack})


def check_coefficient_bound(s: VerifySettings) -> CheckResult:
    rng = make_rng(s.sub_seed(12), 0)
    checked, failures, tightest = 0, 0, math.inf
    for j in range(100):
        dim, d = 1 + j % 6, 1 + (j // 6) % 3
        f = random_polynomial(dim, d, rng)
        second = gaussian_second_moment(f, exact=True)
        denom = Fraction(d ** d * math.comb(dim + d, d))
        for c in f.terms.values():
            lower = Fraction(abs(c)) / denom
            checked += 1
            failures += second < lower * lower
            if lower:
                tightest = min(tightest, float(second / (lower * lower)))
    return CheckResult("coefficient_bound", failures == 0, tightest, 1.0, {"coefficients": checked, "failures": failures})


# -- solvers and structural identities --------------------------------------------------


def xor_examples() -> ExampleSet:
    return ExampleSet(np.array([[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]]),
                      np.array([1, -1, -1, 1]), {"source": "xor"})


def separable_examples(dim: int, d: int, count: int, rng: np.random.Generator) -> ExampleSet:
    """Points labeled by a random degree-d PTF, keeping only those with margin."""
    target = random_polynomial(dim, d, rng)
    Y = rng.standard_normal((4 * count, dim))
    vals = evaluate_many(target, Y)
    keep = np.flatnonzero(np.abs(vals) > 0.05)[:count]
    return ExampleSet(Y[keep], sign_many(vals[keep]))


def expand_collapse(f: Polynomial) -> Polynomial:
    """Reference collapse by polynomial arithmetic: multiply out x_i -> g_i^d, x_{n+i} -> g_i."""
    n, d = f.dim // 2, f.degree
    images = [Polynomial.variable(n, i, d) for i in range(n)] + [Polynomial.variable(n, i) for i in range(n)]
    total = Polynomial.zero(n, d * d)
    for key, c in f.terms.items():
        term = Polynomial.constant(n, c, d * d)
        for i in key:
            term = term * images[i]
        total = total + term
    return Polynomial.from_terms(n, total.terms, d * d)


def sign_pattern_polynomials(n: int, d: int, rng: np.random.Generator, limit: int = 16):
    keys = all_monomials(2 * n, d)
    if 2 ** len(keys) <= limit:
        patterns = itertools.product((1.0, -1.0), repeat=len(keys))
    else:
        patterns = (rng.choice((1.0, -1.0), size=len(keys)) for _ in range(limit))
    for signs in patterns:
        yield Polynomial.from_terms(2 * n, zip(keys, signs), d)


def check_solvers(s: VerifySettings) -> CheckResult:
    rng = make_rng(s.sub_seed(13), 0)
    lp_ok = 0
    cases = [(dim, d) for dim in (2, 3) for d in (1, 2)] * 5
    for dim, d in cases:
        ex = separable_examples(dim, d, 30, rng)
        res = lp_consistent(ex, dim, d)
        lp_ok += res.feasible and agreement(res.polynomial, ex).agreement == 1.0
    xor = xor_examples()
    ma1 = max_agreement_exact(xor, 2, 1).fraction
    ma2 = max_agreement_exact(xor, 2, 2).fraction
    collapse_total = collapse_ok = 0
    for n in (1, 2, 3):
        for d in (1, 2, 3):
            for f in sign_pattern_polynomials(n, d, rng):
                collapse_total += 1
                collapse_ok += collapse_substitution(f) == expand_collapse(f)
    ok = lp_ok == len(cases) and ma1 == 0.75 and ma2 == 1.0 and collapse_ok == collapse_total
    return CheckResult("solvers", ok, float(lp_ok), float(len(cases)),
                       {"lp_feasible": lp_ok, "lp_cases": len(cases), "xor_d1": ma1, "xor_d2": ma2,
                        "collapse_matches": collapse_ok, "collapse_cases": collapse_total})


# -- suites ------------------------------------------------------------------------------

CHECKS: dict[str, Callable[[VerifySettings], CheckResult]] = {
    "td_completeness": check_td_completeness,
    "t2_completeness": check_t2_completeness,
    "constant_calibration": check_constant_calibration,
    "soundness_spot": check_soundness_spot,
    "dictator_decoding": check_dictator_decoding,
    "ug_reduction": check_ug_reduction,
    "lc_folding": check_lc_folding,
    "folding_algebra": check_folding_algebra,
    "discretization": check_discretization,
    "berry_esseen": check_berry_esseen,
    "carbery_wright": check_carbery_wright,
    "coefficient_bound": check_coefficient_bound,
    "solvers": check_solvers,
}

SUITES: dict[str, tuple[str, ...]] = {
    "completeness": ("td_completeness", "t2_completeness"),
    "calibration": ("constant_calibration",),
    "soundness": ("soundness_spot", "dictator_decoding"),
    "reduction": ("ug_reduction", "lc_folding", "folding_algebra"),
    "gaussian": ("discretization", "berry_esseen", "carbery_wright", "coefficient_bound"),
    "solvers": ("solvers",),
    "all": tuple(CHECKS),
}


def run_checks(names, settings: VerifySettings) -> list[CheckResult]:
    unknown = [n for n in names if n not in CHECKS]
    if unknown:
        raise KeyError(f"unknown checks {unknown}")
    return [CHECKS[n](settings) for n in names]


def serialize(results: list[CheckResult]) -> str:
    return json.dumps([r.to_json() for r in results], sort_keys=True)


def check_determinism(names, settings: VerifySettings, first: list[CheckResult] | None = None) -> CheckResult:
    """Rerun ``names`` and compare the serialized reports byte for byte."""
    first = run_checks(names, settings) if first is None else first
    second = run_checks(names, settings)
    a, b = serialize(first), serialize(second)
    same = a == b
    return CheckResult("determinism", same, float(same), 1.0, {"checks": list(names), "bytes": len(a)})


def run_suite(suite: str, settings: VerifySettings, determinism: bool | None = None) -> list[CheckResult]:
    """Run a suite; ``determinism`` (default: only for ``all``) appends the rerun comparison."""
    if suite not in SUITES:
        raise KeyError(f"unknown suite {suite!r}; choose from {sorted(SUITES)}")
    names = SUITES[suite]
    results = run_checks(names, settings)
    if determinism if determinism is not None else suite == "all":
        results.append(check_determinism(names, settings, results))
    return results
