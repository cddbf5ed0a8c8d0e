"""Unique Games / Label Cover instances and their reductions to labeled examples.

Coordinate layout: vertex u in U owns the block [u*k, (u+1)*k); vertex v in V
owns [|U|*k + v*s, |U|*k + (v+1)*s) where s = k for Unique Games and s = m
for Label Cover. Labels are 0-based.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import math
from dataclasses import dataclass
from typing import Iterator, Mapping

import numpy as np

from .data import ExampleSet, LabeledExample
from .errors import CapacityError, ConfigError, InputError
from .gadgets import (DELTA_EXPONENT_CAP, check_t_ladder, default_beta, sample_edge_batch,
                      sample_t2_batch, t_exponent_count)
from .gauss import make_rng
from .poly import Polynomial, evaluate_many

BRUTE_FORCE_LIMIT = 10 ** 7
GRAM_SCHMIDT_TOL = 1e-10


@dataclass(frozen=True)
class Labeling:
    u: tuple[int, ...]
    v: tuple[int, ...]

    def to_json(self) -> dict:
        return {"u": list(self.u), "v": list(self.v)}

    @classmethod
    def from_json(cls, obj: Mapping) -> "Labeling":
        return cls(tuple(int(x) for x in obj["u"]), tuple(int(x) for x in obj["v"]))


@dataclass(frozen=True, eq=False)
class ConstraintInstance:
    """Bipartite constraint graph; ``maps[e]`` sends a V-label to the U-label it demands."""

    n_u: int
    n_v: int
    k: int
    edges: tuple[tuple[int, int], ...]
    maps: np.ndarray
    degree: int | None = None

    kind = "base"

    def __post_init__(self):
        maps = np.asarray(self.maps, dtype=np.int64)
        object.__setattr__(self, "maps", maps)
        maps.setflags(write=False)
        object.__setattr__(self, "edges", tuple((int(u), int(v)) for u, v in self.edges))
        if not self.edges:
            raise InputError("instance has no edges")
        if maps.shape != (len(self.edges), self.v_alphabet):
            raise InputError(f"maps must have shape ({len(self.edges)}, {self.v_alphabet}), got {maps.shape}")
        for u, v in self.edges:
            if not (0 <= u < self.n_u and 0 <= v < self.n_v):
                raise InputError(f"edge ({u}, {v}) out of range")
        if maps.size and (maps.min() < 0 or maps.max() >= self.k):
            raise InputError("edge map sends a label outside [k]")

    @property
    def v_alphabet(self) -> int:
        raise NotImplementedError

    @property
    def dim(self) -> int:
        return self.n_u * self.k + self.n_v * self.v_alphabet

    def u_block(self, u: int) -> range:
        return range(u * self.k, (u + 1) * self.k)

    def v_block(self, v: int) -> range:
        start = self.n_u * self.k + v * self.v_alphabet
        return range(start, start + self.v_alphabet)

    @property
    def edge_u(self) -> np.ndarray:
        return np.array([u for u, _ in self.edges])

    @property
    def edge_v(self) -> np.ndarray:
        return np.array([v for _, v in self.edges])

    def is_regular(self) -> bool:
        du = np.bincount(self.edge_u, minlength=self.n_u)
        dv = np.bincount(self.edge_v, minlength=self.n_v)
        return bool((du == du[0]).all() and (dv == dv[0]).all())

    def satisfied(self, labeling: Labeling) -> np.ndarray:
        """Per-edge flags for maps[e](label(v)) == label(u)."""
        self.check_labeling(labeling)
        lu, lv = np.asarray(labeling.u), np.asarray(labeling.v)
        return self.maps[np.arange(len(self.edges)), lv[self.edge_v]] == lu[self.edge_u]

    def satisfied_fraction(self, labeling: Labeling) -> float:
        return float(np.mean(self.satisfied(labeling)))

    def check_labeling(self, labeling: Labeling) -> None:
        if len(labeling.u) != self.n_u or len(labeling.v) != self.n_v:
            raise InputError("labeling does not cover every vertex")
        if any(not 0 <= x < self.k for x in labeling.u) or any(not 0 <= x < self.v_alphabet for x in labeling.v):
            raise InputError("label outside its alphabet")

    def to_json(self) -> dict:
        out = {"type": self.kind, "U": self.n_u, "V": self.n_v, "k": self.k,
               "edges": [list(e) for e in self.edges], "maps": self.maps.tolist()}
        if self.kind == "lc":
            out["m"] = self.v_alphabet
        if self.degree is not None:
            out["degree"] = self.degree
        return out

    def digest(self) -> str:
        blob = json.dumps(self.to_json(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


@dataclass(frozen=True, eq=False)
class UniqueGamesInstance(ConstraintInstance):
    kind = "ug"

    def __post_init__(self):
        super().__post_init__()
        ref = np.arange(self.k)
        for e, row in enumerate(self.maps):
            if not np.array_equal(np.sort(row), ref):
                raise InputError(f"map on edge {e} is not a bijection of [k]")

    @property
    def v_alphabet(self) -> int:
        return self.k

    @property
    def inverse_maps(self) -> np.ndarray:
        return np.argsort(self.maps, axis=1)


@dataclass(frozen=True, eq=False)
class LabelCoverInstance(ConstraintInstance):
    m: int = 1
    kind = "lc"

    def __post_init__(self):
        if self.m < self.k:
            raise InputError(f"label cover needs m >= k, got m={self.m}, k={self.k}")
        super().__post_init__()

    @property
    def v_alphabet(self) -> int:
        return self.m


def instance_from_json(obj: Mapping) -> ConstraintInstance:
    try:
        kind = obj["type"]
        common = dict(n_u=int(obj["U"]), n_v=int(obj["V"]), k=int(obj["k"]),
                      edges=tuple(tuple(e) for e in obj["edges"]), maps=np.array(obj["maps"], dtype=np.int64),
                      degree=obj.get("degree"))
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"malformed instance JSON: {exc}") from exc
    if kind == "ug":
        return UniqueGamesInstance(**common)
    if kind == "lc":
        return LabelCoverInstance(**common, m=int(obj["m"]))
    raise InputError(f"unknown instance type {kind!r}")


# -- exact OPT ------------------------------------------------------------------


def opt_bruteforce(inst: ConstraintInstance) -> tuple[float, Labeling]:
    """Exact value by enumerating every V-labeling and labeling each u optimally.

    For fixed V-labels the U-vertices decouple, so this is the same maximum as
    enumerating all k^|U| * s^|V| labelings.
    """
    s = inst.v_alphabet
    if inst.k ** inst.n_u * s ** inst.n_v > BRUTE_FORCE_LIMIT:
        raise CapacityError(f"search space {inst.k}^{inst.n_u} * {s}^{inst.n_v} exceeds {BRUTE_FORCE_LIMIT:.0e}")
    eu, ev = inst.edge_u, inst.edge_v
    n_edges = len(inst.edges)
    best_val, best_lab = -1, None
    all_v = np.array(list(itertools.product(range(s), repeat=inst.n_v)), dtype=np.int64).reshape(-1, inst.n_v)
    for start in range(0, len(all_v), 1 << 14):
        L = all_v[start:start + (1 << 14)]
        demanded = inst.maps[np.arange(n_edges)[None, :], L[:, ev]]  # (M, E) U-label each edge wants
        counts = np.zeros((len(L), inst.n_u, inst.k), dtype=np.int64)
        for e in range(n_edges):
            np.add.at(counts, (np.arange(len(L)), eu[e], demanded[:, e]), 1)
        totals = counts.max(axis=2).sum(axis=1)
        j = int(np.argmax(totals))
        if totals[j] > best_val:
            best_val = int(totals[j])
            best_lab = Labeling(tuple(int(x) for x in counts[j].argmax(axis=1)), tuple(int(x) for x in L[j]))
    return best_val / n_edges, best_lab


# -- generators -------------------------------------------------------------------


def regular_bipartite_edges(n_u: int, n_v: int, degree: int, rng: np.random.Generator) -> list[tuple[int, int]]:
    """Simple biregular graph: every u has ``degree`` neighbours, every v has n_u*degree/n_v."""
    if n_u < 1 or n_v < 1 or degree < 1:
        raise InputError("vertex counts and degree must be positive")
    if (n_u * degree) % n_v:
        raise InputError(f"no biregular graph with |U|={n_u}, |V|={n_v}, degree {degree}")
    if degree > n_v:
        raise InputError(f"degree {degree} exceeds |V|={n_v}")
    vperm = rng.permutation(n_v)
    return [(u, int(vperm[(u * degree + t) % n_v])) for u in range(n_u) for t in range(degree)]


def _noisy_edges(n_edges: int, eta: float, rng: np.random.Generator) -> set[int]:
    if not 0.0 <= eta <= 1.0:
        raise InputError(f"eta must lie in [0, 1], got {eta}")
    count = int(round(eta * n_edges))
    return set(int(e) for e in rng.choice(n_edges, size=count, replace=False))


def generate_planted_ug(n_u: int, n_v: int, degree: int, k: int, eta: float,
                        rng: np.random.Generator) -> tuple[UniqueGamesInstance, Labeling]:
    """Bijections consistent with a hidden labeling, then round(eta*|E|) edges
    get a fresh bijection that violates it (when k >= 2)."""
    edges = regular_bipartite_edges(n_u, n_v, degree, rng)
    lu = rng.integers(0, k, size=n_u)
    lv = rng.integers(0, k, size=n_v)
    noisy = _noisy_edges(len(edges), eta, rng)
    maps = np.empty((len(edges), k), dtype=np.int64)
    for e, (u, v) in enumerate(edges):
        perm = rng.permutation(k)
        if e in noisy and k >= 2:
            while perm[lv[v]] == lu[u]:
                perm = rng.permutation(k)
        elif e not in noisy:
            j = int(np.flatnonzero(perm == lu[u])[0])
            perm[j], perm[lv[v]] = perm[lv[v]], perm[j]
        maps[e] = perm
    inst = UniqueGamesInstance(n_u, n_v, k, tuple(edges), maps, degree)
    return inst, Labeling(tuple(int(x) for x in lu), tuple(int(x) for x in lv))


def generate_planted_lc(n_u: int, n_v: int, degree: int, k: int, m: int, eta: float,
                        rng: np.random.Generator) -> tuple[LabelCoverInstance, Labeling]:
    """Projections consistent with a hidden labeling; noisy edges violate it."""
    edges = regular_bipartite_edges(n_u, n_v, degree, rng)
    lu = rng.integers(0, k, size=n_u)
    lv = rng.integers(0, m, size=n_v)
    noisy = _noisy_edges(len(edges), eta, rng)
    maps = rng.integers(0, k, size=(len(edges), m))
    for e, (u, v) in enumerate(edges):
        if e in noisy and k >= 2:
            maps[e, lv[v]] = (lu[u] + rng.integers(1, k)) % k
        elif e not in noisy:
            maps[e, lv[v]] = lu[u]
    inst = LabelCoverInstance(n_u, n_v, k, tuple(edges), maps, degree, m=m)
    return inst, Labeling(tuple(int(x) for x in lu), tuple(int(x) for x in lv))


# -- Unique Games reduction --------------------------------------------------------


@dataclass(frozen=True)
class ReductionConfig:
    """Sampler parameters; ``None`` picks beta = 1/log2(alphabet) and the capped delta."""

    d: int = 2
    beta: float | None = None
    delta: float | None = None
    seed: int = 0
    t_exponent_cap: int | None = None

    def beta_for(self, alphabet: int) -> float:
        beta = default_beta(alphabet) if self.beta is None else float(self.beta)
        if not 0.0 <= beta <= 1.0:
            raise ConfigError(f"beta must lie in [0, 1], got {beta}")
        return beta

    def delta_for(self, exponent: int) -> float:
        return 2.0 ** -min(exponent, DELTA_EXPONENT_CAP) if self.delta is None else float(self.delta)

    def exponents_for(self, m: int) -> list[int]:
        top = t_exponent_count(m)
        if self.t_exponent_cap is not None:
            top = min(top, self.t_exponent_cap)
        top = max(top, 1)
        check_t_ladder(m, top)
        return list(range(1, top + 1))


def reduce_ug_batch(inst: UniqueGamesInstance, cfg: ReductionConfig, rng: np.random.Generator, size: int):
    """``size`` draws: a uniform edge (u, v), then y_v^(j) = g_j and
    y_u^(pi_e(j)) = a h + g_j^d + delta*b, every other block zero."""
    k = inst.k
    beta, delta = cfg.beta_for(k), cfg.delta_for(k * k)
    e = rng.integers(0, len(inst.edges), size=size)
    sub, b = sample_edge_batch(k, cfg.d, beta, delta, rng, size, u_source=inst.inverse_maps[e])
    Y = np.zeros((size, inst.dim))
    rows = np.arange(size)[:, None]
    offs = np.arange(k)[None, :]
    Y[rows, (inst.edge_u[e] * k)[:, None] + offs] = sub[:, :k]
    Y[rows, (inst.n_u * k + inst.edge_v[e] * k)[:, None] + offs] = sub[:, k:]
    return Y, b


def _stream(batch_fn, batch: int = 1024) -> Iterator[LabeledExample]:
    while True:
        Y, b = batch_fn(batch)
        for row, lab in zip(Y, b):
            yield LabeledExample(row, int(lab))


def reduce_ug(inst: UniqueGamesInstance, cfg: ReductionConfig, rng: np.random.Generator) -> Iterator[LabeledExample]:
    """Endless lazy stream of reduction examples."""
    return _stream(lambda m: reduce_ug_batch(inst, cfg, rng, m))


def ug_intended_ptf(inst: UniqueGamesInstance, labeling: Labeling, d: int) -> Polynomial:
    """sum_u x_u^(l(u)) - sum_v (x_v^(l(v)))^d."""
    inst.check_labeling(labeling)
    terms = [((inst.u_block(u)[lab],), 1.0) for u, lab in enumerate(labeling.u)]
    terms += [((inst.v_block(v)[lab],) * d, -1.0) for v, lab in enumerate(labeling.v)]
    return Polynomial.from_terms(inst.dim, terms, d)


# -- folding ----------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class FoldingBasis:
    generators: np.ndarray  # one b(e, i) per row
    basis: np.ndarray       # orthonormal columns spanning H
    dim: int

    @property
    def rank(self) -> int:
        return self.basis.shape[1]

    def projector(self) -> np.ndarray:
        """I - P_H, the projector onto the complement."""
        return np.eye(self.dim) - self.basis @ self.basis.T


def folding_generators(inst: LabelCoverInstance) -> np.ndarray:
    """b(e, i): +1 on u^(i) and -1 on every v^(j) with pi_e(j) = i."""
    rows = np.zeros((len(inst.edges) * inst.k, inst.dim))
    for e, (u, v) in enumerate(inst.edges):
        for i in range(inst.k):
            r = rows[e * inst.k + i]
            r[inst.u_block(u)[i]] = 1.0
            for j in np.flatnonzero(inst.maps[e] == i):
                r[inst.v_block(v)[j]] = -1.0
    return rows


def gram_schmidt(vectors: np.ndarray, tol: float = GRAM_SCHMIDT_TOL) -> np.ndarray:
    """Modified Gram-Schmidt with column pivoting on the rows of ``vectors``.

    Returns orthonormal columns; residuals with norm <= tol are dropped.
    """
    work = np.array(vectors, dtype=np.float64)
    dim = work.shape[1] if work.ndim == 2 else 0
    basis = []
    remaining = list(range(work.shape[0]))
    while remaining:
        norms = np.linalg.norm(work[remaining], axis=1)
        j = int(np.argmax(norms))
        if norms[j] <= tol:
            break
        q = work[remaining[j]] / norms[j]
        remaining.pop(j)
        # second pass keeps q orthogonal when many generators overlap
        for prev in basis:
            q = q - (prev @ q) * prev
        q /= np.linalg.norm(q)
        basis.append(q)
        if remaining:
            idx = np.array(remaining)
            work[idx] -= np.outer(work[idx] @ q, q)
    if not basis:
        return np.zeros((dim, 0))
    return np.stack(basis, axis=1)


def build_folding(inst: LabelCoverInstance) -> FoldingBasis:
    gens = folding_generators(inst)
    return FoldingBasis(gens, gram_schmidt(gens), inst.dim)


def fold(basis: FoldingBasis, y: np.ndarray) -> np.ndarray:
    """Projection of y (or each row of a 2-D array) onto H-perp."""
    y = np.asarray(y, dtype=np.float64)
    if y.shape[-1] != basis.dim:
        raise InputError(f"vector length {y.shape[-1]} does not match dimension {basis.dim}")
    Q = basis.basis
    return y - (y @ Q) @ Q.T


# -- Label Cover reduction ------------------------------------------------------------


def reduce_lc_batch(inst: LabelCoverInstance, cfg: ReductionConfig, rng: np.random.Generator, size: int,
                    basis: FoldingBasis | None = None):
    """Uniform v in V, the T2 recipe on v's m coordinates, then Fold."""
    m = inst.m
    beta, delta = cfg.beta_for(m), cfg.delta_for(m)
    exponents = cfg.exponents_for(m)
    basis = build_folding(inst) if basis is None else basis
    v = rng.integers(0, inst.n_v, size=size)
    sub, b = sample_t2_batch(m, beta, delta, exponents, rng, size)
    Y = np.zeros((size, inst.dim))
    Y[np.arange(size)[:, None], (inst.n_u * inst.k + v * m)[:, None] + np.arange(m)[None, :]] = sub
    return fold(basis, Y), b


def reduce_lc(inst: LabelCoverInstance, cfg: ReductionConfig, rng: np.random.Generator) -> Iterator[LabeledExample]:
    basis = build_folding(inst)
    return _stream(lambda n: reduce_lc_batch(inst, cfg, rng, n, basis))


def lc_intended_ptf(inst: LabelCoverInstance, labeling: Labeling) -> Polynomial:
    """sum over all vertices w of x_w^(l(w))."""
    inst.check_labeling(labeling)
    terms = [((inst.u_block(u)[lab],), 1.0) for u, lab in enumerate(labeling.u)]
    terms += [((inst.v_block(v)[lab],), 1.0) for v, lab in enumerate(labeling.v)]
    return Polynomial.from_terms(inst.dim, terms, 1)


def reduction_examples(inst: ConstraintInstance, cfg: ReductionConfig, count: int, stream: int = 0) -> ExampleSet:
    """Materialise ``count`` reduction examples with provenance in ``meta``."""
    rng = make_rng(cfg.seed, stream)
    if isinstance(inst, UniqueGamesInstance):
        Y, b = reduce_ug_batch(inst, cfg, rng, count)
        beta, delta = cfg.beta_for(inst.k), cfg.delta_for(inst.k ** 2)
    elif isinstance(inst, LabelCoverInstance):
        Y, b = reduce_lc_batch(inst, cfg, rng, count)
        beta, delta = cfg.beta_for(inst.m), cfg.delta_for(inst.m)
    else:
        raise InputError(f"unsupported instance type {type(inst).__name__}")
    source = {"instance": inst.digest(), "type": inst.kind, "d": cfg.d, "beta": beta, "delta": delta,
              "t_exponent_cap": cfg.t_exponent_cap}
    return ExampleSet(Y, b, {"seed": cfg.seed, "stream": stream, "source": source})


# -- folded-polynomial check ---------------------------------------------------------


@dataclass(frozen=True)
class FoldingCheck:
    folded: bool
    max_identity_gap: float
    max_probe_gap: float


def folding_check(p: Polynomial, inst: LabelCoverInstance, tol: float = 1e-9, probes: int = 5,
                  rng: np.random.Generator | None = None) -> FoldingCheck:
    if p.dim != inst.dim:
        raise InputError(f"polynomial dimension {p.dim} does not match instance dimension {inst.dim}")
    if p.effective_degree > 2:
        raise InputError("folding check is defined for degree <= 2")
    rng = make_rng(0, 0) if rng is None else rng
    lin = np.zeros(inst.dim)
    for key, c in p.terms.items():
        if len(key) == 1:
            lin[key[0]] = c
    coeff_scale = max(1.0, float(np.max(np.abs(lin))))
    id_gap = 0.0
    for e, (u, v) in enumerate(inst.edges):
        vb = np.asarray(inst.v_block(v))
        for i in range(inst.k):
            rhs = math.fsum(lin[vb[inst.maps[e] == i]])
            id_gap = max(id_gap, abs(lin[inst.u_block(u)[i]] - rhs) / coeff_scale)

    gens = folding_generators(inst)
    abs_p = Polynomial.from_terms(p.dim, {k: abs(c) for k, c in p.terms.items()}, p.degree)
    probe_gap = 0.0
    for g in gens:
        Y = rng.standard_normal((probes, inst.dim))
        c = rng.standard_normal(probes)
        Z = Y + c[:, None] * g[None, :]
        scale = 1.0 + evaluate_many(abs_p, np.abs(Y)) + evaluate_many(abs_p, np.abs(Z))
        gap = np.abs(evaluate_many(p, Z) - evaluate_many(p, Y)) / scale
        probe_gap = max(probe_gap, float(gap.max()))
    return FoldingCheck(id_gap <= tol and probe_gap <= tol, id_gap, probe_gap)


def check_folded(p: Polynomial, inst: LabelCoverInstance, tol: float = 1e-9,
                 rng: np.random.Generator | None = None) -> bool:
    """Linear identity c_u^(i) = sum_{pi_e(j)=i} c_v^(j) on every edge, plus
    invariance p(y + c b(e,i)) = p(y) on random probes."""
    return folding_check(p, inst, tol, rng=rng).folded
