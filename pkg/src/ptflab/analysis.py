"""Decoding candidate polynomials to labelings, agreement, and exact solvers.

The solvers work in the lifted feature space phi(y) = (chi_S(y))_{|S| <= d},
where a degree-d PTF is a homogeneous halfspace sign(c . phi(y)).
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .data import ExampleSet
from .errors import CapacityError, DegenerateInputError, InputError, NumericError
from .poly import Polynomial, all_monomials, evaluate_many, index_set, restrict_to_block, sign_many
from .reduction import ConstraintInstance, LabelCoverInstance, Labeling
from .simplex import simplex

log = logging.getLogger(__name__)

LP_MAX_FEATURES = 5000
LP_MAX_EXAMPLES = 100_000
LP_MAX_CELLS = 50_000_000
EXACT_LP_MAX_CELLS = 4000
MAX_AGREEMENT_BUDGET = 10 ** 8


# -- decoding ---------------------------------------------------------------------


@dataclass(frozen=True)
class DecodedLabels:
    """Candidate label sets per vertex.

    ``flagged`` names vertices whose decode came back empty; those get a
    uniform label from :func:`randomized_labeling`.
    """

    u_sets: tuple[tuple[int, ...], ...]
    v_sets: tuple[tuple[int, ...], ...]
    u_alphabet: int
    v_alphabet: int
    thresholds: dict = field(default_factory=dict)
    flagged: tuple[str, ...] = ()

    def max_set_size(self) -> int:
        return max((len(s) for s in self.u_sets + self.v_sets), default=0)

    def within_cap(self, cap: float) -> bool:
        return self.max_set_size() <= cap

    def to_json(self) -> dict:
        return {"u": [list(s) for s in self.u_sets], "v": [list(s) for s in self.v_sets],
                "thresholds": self.thresholds, "flagged": list(self.flagged)}


def _index_members(f: Polynomial, theta: float) -> tuple[int, ...] | None:
    try:
        return tuple(index_set(f, theta).sorted())
    except DegenerateInputError:
        return None


def decode_ug(f: Polynomial, beta: float | None = None, pass_probability: float | None = None) -> DecodedLabels:
    """I_0.5 of the first k-block and I_1 of the second, for f on 2k coordinates.

    When ``pass_probability`` >= 1/2 + beta the soundness caps 1/beta^2 are
    checked and violations logged.
    """
    if f.dim % 2:
        raise InputError(f"edge polynomial needs an even dimension, got {f.dim}")
    k = f.dim // 2
    fu = restrict_to_block(f, range(k), compact=True)
    fv = restrict_to_block(f, range(k, 2 * k), compact=True)
    su, sv = _index_members(fu, 0.5), _index_members(fv, 1.0)
    flagged = tuple(name for name, s in (("u0", su), ("v0", sv)) if not s)
    out = DecodedLabels((su or (),), (sv or (),), k, k, {"u": 0.5, "v": 1.0}, flagged)
    _record_caps(out, beta, pass_probability)
    return out


def decode_ug_instance(f: Polynomial, inst: ConstraintInstance, beta: float | None = None,
                       pass_probability: float | None = None) -> DecodedLabels:
    """Per-vertex decode: I_0.5(f_u) for u in U and I_1(f_v) for v in V."""
    if f.dim != inst.dim:
        raise InputError(f"polynomial dimension {f.dim} does not match instance dimension {inst.dim}")
    u_sets, v_sets, flagged = [], [], []
    for u in range(inst.n_u):
        s = _index_members(restrict_to_block(f, inst.u_block(u), compact=True), 0.5)
        u_sets.append(s or ())
        if not s:
            flagged.append(f"u{u}")
    for v in range(inst.n_v):
        s = _index_members(restrict_to_block(f, inst.v_block(v), compact=True), 1.0)
        v_sets.append(s or ())
        if not s:
            flagged.append(f"v{v}")
    out = DecodedLabels(tuple(u_sets), tuple(v_sets), inst.k, inst.v_alphabet, {"u": 0.5, "v": 1.0},
                        tuple(flagged))
    _record_caps(out, beta, pass_probability)
    return out


def _record_caps(decoded: DecodedLabels, beta, pass_probability) -> None:
    if beta is None or pass_probability is None or beta <= 0:
        return
    if pass_probability >= 0.5 + beta and not decoded.within_cap(1.0 / beta ** 2):
        log.warning("soundness-counterexample candidate: pass probability %.4f >= 1/2 + beta but "
                    "decoded set of size %d exceeds 1/beta^2 = %.1f",
                    pass_probability, decoded.max_set_size(), 1.0 / beta ** 2)


def linear_coefficients(p: Polynomial) -> np.ndarray:
    lin = np.zeros(p.dim)
    for key, c in p.terms.items():
        if len(key) == 1:
            lin[key[0]] = c
    return lin


def decode_lc(p: Polynomial, inst: LabelCoverInstance) -> DecodedLabels:
    """J_u = {j : c_u^(j) >= sum_i c_u^(i) / k} and I_v = {j : c_v^(j) > sum_i c_v^(i) / m^2}."""
    if p.dim != inst.dim:
        raise InputError(f"polynomial dimension {p.dim} does not match instance dimension {inst.dim}")
    lin = linear_coefficients(p)
    u_sets, v_sets, flagged = [], [], []
    for u in range(inst.n_u):
        c = lin[list(inst.u_block(u))]
        u_sets.append(tuple(int(j) for j in np.flatnonzero(c >= math.fsum(c) / inst.k)))
    for v in range(inst.n_v):
        c = lin[list(inst.v_block(v))]
        s = tuple(int(j) for j in np.flatnonzero(c > math.fsum(c) / inst.m ** 2))
        v_sets.append(s)
        if not s:
            flagged.append(f"v{v}")
    return DecodedLabels(tuple(u_sets), tuple(v_sets), inst.k, inst.m,
                         {"u": "sum/k (>=)", "v": "sum/m^2 (>)"}, tuple(flagged))


def randomized_labeling(decoded: DecodedLabels, rng: np.random.Generator) -> Labeling:
    """Independent uniform pick from each vertex's set; empty sets fall back to the whole alphabet."""
    def pick(s, alphabet):
        return int(s[rng.integers(len(s))]) if s else int(rng.integers(alphabet))

    return Labeling(tuple(pick(s, decoded.u_alphabet) for s in decoded.u_sets),
                    tuple(pick(s, decoded.v_alphabet) for s in decoded.v_sets))


# -- agreement ---------------------------------------------------------------------


@dataclass(frozen=True)
class AgreementReport:
    hypothesis: str
    agreement: float
    count: int
    provenance: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"hypothesis": self.hypothesis, "agreement": self.agreement, "count": self.count,
                "provenance": self.provenance}


def agreement(f: Polynomial, examples: ExampleSet, hypothesis: str = "f") -> AgreementReport:
    if len(examples) == 0:
        raise InputError("empty example set")
    if f.dim != examples.dim:
        raise InputError(f"polynomial dimension {f.dim} does not match example dimension {examples.dim}")
    hits = int(np.count_nonzero(sign_many(evaluate_many(f, examples.Y)) == examples.b))
    return AgreementReport(hypothesis, hits / len(examples), len(examples), dict(examples.meta))


# -- lifting -------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class LiftedDataset:
    features: np.ndarray      # (count, C(dim+d, d)); column j is chi_{keys[j]}
    labels: np.ndarray
    keys: tuple
    dim: int
    degree: int

    def polynomial(self, coeffs) -> Polynomial:
        return Polynomial.from_terms(self.dim, zip(self.keys, (float(c) for c in coeffs)), self.degree)


def lift(examples: ExampleSet, d: int) -> LiftedDataset:
    keys = tuple(all_monomials(examples.dim, d))
    Y = examples.Y
    cols = np.empty((len(examples), len(keys)))
    for j, key in enumerate(keys):
        v = np.ones(len(examples))
        for i in key:
            v = v * Y[:, i]
        cols[:, j] = v
    if not np.isfinite(cols).all():
        raise NumericError("lifted features overflow")
    return LiftedDataset(cols, examples.b.copy(), keys, examples.dim, d)


# -- LP for perfectly consistent PTFs -----------------------------------------------


@dataclass
class LPConsistency:
    feasible: bool
    polynomial: Polynomial | None
    certificate: np.ndarray | None  # lambda >= 0, sum 1, with lambda . (b_i phi_i) = 0 when infeasible
    iterations: int
    exact: bool


def _is_small_integral(M: np.ndarray) -> bool:
    return bool(np.all(M == np.round(M)) and np.max(np.abs(M), initial=0) <= 1e6)


def lp_consistent(examples: ExampleSet, dim: int, d: int, exact: bool | None = None) -> LPConsistency:
    """Find p of degree <= d with b * p(y) >= 1 on every example, or certify none exists.

    Solved through the normalised dual
        max 1.lam  s.t.  Z^T lam = 0,  1.lam <= 1,  lam >= 0    (rows of Z are b_i phi(y_i))
    whose optimum is 0 exactly when the margin system is feasible; the
    witness p is read off the optimal dual multipliers.
    """
    if examples.dim != dim:
        raise InputError(f"examples have dimension {examples.dim}, expected {dim}")
    n_feat = math.comb(dim + d, d)
    if n_feat > LP_MAX_FEATURES or len(examples) > LP_MAX_EXAMPLES:
        raise CapacityError(f"{n_feat} lifted features x {len(examples)} examples exceeds desk-scale LP limits")
    if (n_feat + 1) * (len(examples) + 2 * n_feat + 3) > LP_MAX_CELLS:
        raise CapacityError("dense simplex tableau would exceed the memory budget")
    data = lift(examples, d)
    Z = data.features * data.labels[:, None].astype(np.float64)
    if exact is None:
        exact = Z.size <= EXACT_LP_MAX_CELLS and _is_small_integral(Z)
    # column scaling keeps float pivots well conditioned; exact mode skips it
    scale = np.ones(n_feat) if exact else 1.0 / np.maximum(np.max(np.abs(Z), axis=0), 1e-300)
    Zs = Z * scale
    N = len(examples)
    A = np.zeros((n_feat + 1, N + 1), dtype=object if exact else np.float64)
    if exact:
        A[:] = Fraction(0)
        A[:n_feat, :N] = np.vectorize(lambda v: Fraction(float(v)), otypes=[object])(Zs.T)
        A[n_feat, :] = Fraction(1)
        rhs = np.array([Fraction(0)] * n_feat + [Fraction(1)], dtype=object)
        cost = [Fraction(-1)] * N + [Fraction(0)]
    else:
        A[:n_feat, :N] = Zs.T
        A[n_feat, :] = 1.0
        rhs = np.zeros(n_feat + 1)
        rhs[-1] = 1.0
        cost = [-1.0] * N + [0.0]
    res = simplex(A, rhs, cost, exact=exact)
    if res.status != "optimal":
        raise NumericError(f"normalised dual LP reported {res.status}")
    if res.objective < (0 if exact else -1e-7):
        return LPConsistency(False, None, np.array([float(v) for v in res.x[:N]]), res.iterations, exact)
    coeffs = -np.array([float(v) for v in res.duals[:n_feat]]) * scale
    margins = Z @ coeffs
    low = float(margins.min())
    if low <= 0:
        raise NumericError(f"LP witness has non-positive margin {low:.3e}")
    if low < 1:
        coeffs = coeffs / low
    return LPConsistency(True, data.polynomial(coeffs), None, res.iterations, exact)


# -- exact maximum agreement ----------------------------------------------------------


@dataclass(frozen=True)
class MaxAgreement:
    fraction: float
    polynomial: Polynomial
    count: int


_ON_TOL = 1e-9


def _best_open(Z: np.ndarray, s: np.ndarray) -> tuple[int, np.ndarray]:
    """Most points of Z (rows in R^r, rank r, none zero) with sign(w.z) == s over open cones.

    Every open cone of the central arrangement has an extreme ray cut out by
    r-1 independent points; near that ray the off-ray points keep their sign
    and the on-ray points form the same problem one dimension down.
    """
    n, r = Z.shape
    if r == 1:
        plus = int(np.count_nonzero(np.sign(Z[:, 0]) == s))
        return (plus, np.array([1.0])) if plus >= n - plus else (n - plus, np.array([-1.0]))
    norms = np.linalg.norm(Z, axis=1)
    best_count, best_w = -1, None
    for subset in itertools.combinations(range(n), r - 1):
        _, sv, vt = np.linalg.svd(Z[list(subset)])
        if sv[-1] < _ON_TOL * max(1.0, sv[0]):
            continue
        c = vt[-1]
        proj = Z @ c
        on = np.abs(proj) <= _ON_TOL * norms
        off = ~on
        # orthonormal basis of the complement of c
        basis = np.linalg.svd(c[None, :])[2][1:].T
        sub_count, sub_w = _best_open(Z[on] @ basis, s[on])
        lift_w = basis @ sub_w
        min_off = float(np.min(np.abs(proj[off]))) if off.any() else 1.0
        eps = 0.5 * min_off / (np.linalg.norm(lift_w) * float(np.max(norms)) + 1e-300)
        for direction in (c, -c):
            w = direction + eps * lift_w
            cnt = int(np.count_nonzero(np.where(Z @ w >= 0, 1, -1) == s))
            if cnt > best_count:
                best_count, best_w = cnt, w
        if best_count == n:
            break
    return best_count, best_w


def max_agreement_exact(examples: ExampleSet, dim: int, d: int) -> MaxAgreement:
    """Exact maximum agreement of a degree-d PTF by arrangement-vertex enumeration."""
    if examples.dim != dim:
        raise InputError(f"examples have dimension {examples.dim}, expected {dim}")
    n_feat = math.comb(dim + d, d)
    N = len(examples)
    if N == 0:
        raise InputError("empty example set")
    if float(N) ** (n_feat + 1) > MAX_AGREEMENT_BUDGET:
        raise CapacityError(f"{N}^{n_feat + 1} candidate hyperplanes exceeds {MAX_AGREEMENT_BUDGET:.0e}")
    data = lift(examples, d)
    X = data.features / np.maximum(np.max(np.abs(data.features), axis=0), 1e-300)
    # restrict to the row space so the arrangement is essential
    _, sv, vt = np.linalg.svd(X, full_matrices=False)
    rank = int(np.count_nonzero(sv > _ON_TOL * sv[0]))
    row_basis = vt[:rank].T
    _, w = _best_open(X @ row_basis, data.labels.astype(np.int64))
    coeffs = (row_basis @ w) / np.maximum(np.max(np.abs(data.features), axis=0), 1e-300)
    coeffs = coeffs / np.max(np.abs(coeffs))
    p = data.polynomial(coeffs)
    report = agreement(p, examples)
    return MaxAgreement(report.agreement, p, round(report.agreement * N))
