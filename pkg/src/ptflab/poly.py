"""Sparse multivariate polynomials over R^dim.

A monomial is keyed by the sorted tuple of its variable indices with
repetition, so ``(0, 2, 2)`` is x0*x2**2 and ``()`` is the constant term.
Indices are 0-based throughout the package.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter, defaultdict
from dataclasses import dataclass
from fractions import Fraction
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DegenerateInputError, InputError, NumericError

Key = tuple[int, ...]

EXACT_DIM_LIMIT = 64


def canonical_key(indices: Iterable[int]) -> Key:
    return tuple(sorted(int(i) for i in indices))


def _term_order(key: Key) -> tuple[int, Key]:
    return (len(key), key)


def all_monomials(dim: int, degree: int) -> list[Key]:
    """Every multiset of size <= degree over range(dim), constant first."""
    keys: list[Key] = []
    for size in range(degree + 1):
        keys.extend(itertools.combinations_with_replacement(range(dim), size))
    return keys


@dataclass(frozen=True, eq=False)
class Polynomial:
    """Immutable sparse polynomial.

    Use :meth:`from_terms` rather than the raw constructor; it canonicalises
    keys, merges duplicates and purges zero coefficients.
    """

    dim: int
    degree: int
    terms: Mapping[Key, float]

    @classmethod
    def from_terms(cls, dim: int, terms: Mapping[Iterable[int], float] | Iterable[tuple[Iterable[int], float]],
                   degree: int | None = None) -> "Polynomial":
        if dim < 0:
            raise InputError(f"dimension must be non-negative, got {dim}")
        items = terms.items() if isinstance(terms, Mapping) else terms
        buckets: dict[Key, list[float]] = defaultdict(list)
        for raw_key, coeff in items:
            key = canonical_key(raw_key)
            if key and (key[0] < 0 or key[-1] >= dim):
                raise InputError(f"monomial {key} out of range for dimension {dim}")
            coeff = float(coeff)
            if not math.isfinite(coeff):
                raise NumericError(f"non-finite coefficient {coeff} on {key}")
            buckets[key].append(coeff)
        merged = {}
        for key in sorted(buckets, key=_term_order):
            c = math.fsum(buckets[key])
            if c != 0.0:
                merged[key] = c
        top = max((len(k) for k in merged), default=0)
        if degree is None:
            degree = top
        elif top > degree:
            raise InputError(f"monomial of degree {top} exceeds declared degree {degree}")
        return cls(dim, int(degree), MappingProxyType(merged))

    # -- constructors -------------------------------------------------------

    @classmethod
    def zero(cls, dim: int, degree: int = 0) -> "Polynomial":
        return cls.from_terms(dim, {}, degree)

    @classmethod
    def constant(cls, dim: int, value: float, degree: int = 0) -> "Polynomial":
        return cls.from_terms(dim, {(): value}, degree)

    @classmethod
    def variable(cls, dim: int, index: int, power: int = 1, coeff: float = 1.0) -> "Polynomial":
        return cls.from_terms(dim, {(index,) * power: coeff}, power)

    # -- basic queries ------------------------------------------------------

    @property
    def constant_term(self) -> float:
        return self.terms.get((), 0.0)

    @property
    def effective_degree(self) -> int:
        return max((len(k) for k in self.terms), default=0)

    def is_constant(self) -> bool:
        return all(len(k) == 0 for k in self.terms)

    def coefficient(self, key: Iterable[int]) -> float:
        return self.terms.get(canonical_key(key), 0.0)

    def variables(self) -> set[int]:
        return {i for k in self.terms for i in k}

    def __len__(self) -> int:
        return len(self.terms)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self.dim == other.dim and dict(self.terms) == dict(other.terms)

    def __hash__(self) -> int:
        return hash((self.dim, tuple(sorted(self.terms.items()))))

    def __repr__(self) -> str:
        if not self.terms:
            return f"Polynomial(dim={self.dim}, 0)"
        parts = []
        for key, c in self.terms.items():
            mono = "*".join(f"x{i}" for i in key) or "1"
            parts.append(f"{c:+g}*{mono}")
        return f"Polynomial(dim={self.dim}, {' '.join(parts)})"

    # -- arithmetic ---------------------------------------------------------

    def _coerce(self, other: "Polynomial | float") -> "Polynomial":
        if isinstance(other, Polynomial):
            if other.dim != self.dim:
                raise InputError(f"dimension mismatch {self.dim} vs {other.dim}")
            return other
        return Polynomial.constant(self.dim, float(other))

    def __add__(self, other: "Polynomial | float") -> "Polynomial":
        other = self._coerce(other)
        items = list(self.terms.items()) + list(other.terms.items())
        return Polynomial.from_terms(self.dim, items, max(self.degree, other.degree))

    __radd__ = __add__

    def __neg__(self) -> "Polynomial":
        return self.scale(-1.0)

    def __sub__(self, other: "Polynomial | float") -> "Polynomial":
        return self + (-self._coerce(other))

    def __rsub__(self, other: float) -> "Polynomial":
        return (-self) + other

    def __mul__(self, other: "Polynomial | float") -> "Polynomial":
        if not isinstance(other, Polynomial):
            return self.scale(float(other))
        other = self._coerce(other)
        items = []
        for k1, c1 in self.terms.items():
            for k2, c2 in other.terms.items():
                items.append((k1 + k2, c1 * c2))
        return Polynomial.from_terms(self.dim, items, self.degree + other.degree)

    __rmul__ = __mul__

    def __pow__(self, exponent: int) -> "Polynomial":
        if exponent < 0:
            raise InputError("negative powers are not polynomials")
        out = Polynomial.constant(self.dim, 1.0)
        for _ in range(exponent):
            out = out * self
        return out

    def scale(self, c: float) -> "Polynomial":
        return Polynomial.from_terms(self.dim, {k: c * v for k, v in self.terms.items()}, self.degree)

    def embed(self, dim: int, offset: int = 0) -> "Polynomial":
        """Same polynomial with every index shifted by ``offset`` into R^dim."""
        return Polynomial.from_terms(
            dim, {tuple(i + offset for i in k): c for k, c in self.terms.items()}, self.degree)

    # -- serialisation ------------------------------------------------------

    def to_json(self) -> dict:
        return {
            "dim": self.dim,
            "degree": self.degree,
            "terms": [{"vars": list(k), "coeff": c} for k, c in self.terms.items()],
        }

    @classmethod
    def from_json(cls, obj: Mapping) -> "Polynomial":
        try:
            terms = [(t["vars"], t["coeff"]) for t in obj["terms"]]
            return cls.from_terms(int(obj["dim"]), terms, int(obj["degree"]))
        except (KeyError, TypeError) as exc:
            raise InputError(f"malformed polynomial JSON: {exc}") from exc


# -- evaluation -------------------------------------------------------------


def _neumaier(values: Iterable):
    """Compensated sum; works elementwise on numpy arrays as well as floats."""
    total = None
    comp = None
    for v in values:
        if total is None:
            total = v
            comp = v * 0.0
            continue
        t = total + v
        if isinstance(t, np.ndarray):
            comp = comp + np.where(np.abs(total) >= np.abs(v), (total - t) + v, (v - t) + total)
        elif abs(total) >= abs(v):
            comp += (total - t) + v
        else:
            comp += (v - t) + total
        total = t
    if total is None:
        return 0.0
    return total + comp


def evaluate(f: Polynomial, x: Sequence[float]) -> float:
    """f(x) in double precision with compensated summation."""
    if len(x) != f.dim:
        raise InputError(f"point has length {len(x)}, polynomial has dimension {f.dim}")
    xs = [float(v) for v in x]

    def term_values():
        for key, c in f.terms.items():
            v = c
            for i in key:
                v *= xs[i]
            yield v

    return float(_neumaier(term_values()))


def evaluate_many(f: Polynomial, X: np.ndarray) -> np.ndarray:
    """Row-wise evaluation; bit-identical to :func:`evaluate` on each row."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != f.dim:
        raise InputError(f"expected an (N, {f.dim}) array, got shape {X.shape}")
    n = X.shape[0]
    if not f.terms:
        return np.zeros(n)

    def term_values():
        for key, c in f.terms.items():
            v = np.full(n, c)
            for i in key:
                v = v * X[:, i]
            yield v

    return np.asarray(_neumaier(term_values()), dtype=np.float64)


def evaluate_exact(f: Polynomial, x: Sequence) -> Fraction:
    """Exact rational value of f at a rational point (dimension <= 64)."""
    if f.dim > EXACT_DIM_LIMIT:
        raise InputError(f"exact path limited to dimension {EXACT_DIM_LIMIT}")
    if len(x) != f.dim:
        raise InputError(f"point has length {len(x)}, polynomial has dimension {f.dim}")
    xs = [Fraction(v) for v in x]
    total = Fraction(0)
    for key, c in f.terms.items():
        v = Fraction(c)
        for i in key:
            v *= xs[i]
        total += v
    return total


def sign(v: float) -> int:
    """+1 for v >= 0, -1 otherwise. Zero goes positive."""
    if math.isnan(v):
        raise NumericError("sign of NaN")
    return 1 if v >= 0 else -1


def sign_many(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v)
    if np.isnan(v).any():
        raise NumericError("sign of NaN")
    return np.where(v >= 0, 1, -1).astype(np.int8)


# -- structural quantities --------------------------------------------------


def weight(f: Polynomial) -> float:
    return math.fsum(abs(c) for k, c in f.terms.items() if k)


@dataclass(frozen=True)
class IndexSet:
    members: frozenset[int]
    theta: float
    threshold: float

    def __contains__(self, i: int) -> bool:
        return i in self.members

    def __len__(self) -> int:
        return len(self.members)

    def sorted(self) -> list[int]:
        return sorted(self.members)


def index_set(f: Polynomial, theta: float, nvars: int | None = None) -> IndexSet:
    """Coordinates touched by some coefficient of size >= theta*weight/C(nvars+d, d).

    ``nvars`` defaults to the ambient dimension and ``d`` is the declared degree.
    """
    if not 0 < theta <= 1:
        raise InputError(f"theta must lie in (0, 1], got {theta}")
    w = weight(f)
    if w == 0:
        raise DegenerateInputError("index set undefined for a constant polynomial")
    nvars = f.dim if nvars is None else nvars
    threshold = theta * w / math.comb(nvars + f.degree, f.degree)
    members = {i for k, c in f.terms.items() if k and abs(c) >= threshold for i in k}
    return IndexSet(frozenset(members), theta, threshold)


def restrict_to_block(f: Polynomial, keep: Iterable[int], compact: bool = False) -> Polynomial:
    """Zero every variable outside ``keep``.

    With ``compact=True`` the kept variables are renumbered 0..len(keep)-1 in
    increasing order and the result lives in R^len(keep).
    """
    keep = sorted(set(int(i) for i in keep))
    if keep and (keep[0] < 0 or keep[-1] >= f.dim):
        raise InputError(f"block {keep} out of range for dimension {f.dim}")
    kept = set(keep)
    terms = {k: c for k, c in f.terms.items() if all(i in kept for i in k)}
    if not compact:
        return Polynomial.from_terms(f.dim, terms, f.degree)
    pos = {v: j for j, v in enumerate(keep)}
    return Polynomial.from_terms(len(keep), {tuple(pos[i] for i in k): c for k, c in terms.items()}, f.degree)


def cross_weight(f: Polynomial, block_a: Iterable[int], block_b: Iterable[int]) -> float:
    """Total |coefficient| over monomials that touch both blocks."""
    a, b = set(block_a), set(block_b)
    if a & b:
        raise InputError(f"blocks overlap on {sorted(a & b)}")
    return math.fsum(abs(c) for k, c in f.terms.items()
                     if any(i in a for i in k) and any(i in b for i in k))


def _double_factorial_moment(k: int) -> int:
    # E[g^k] for g ~ N(0, 1)
    if k % 2:
        return 0
    out = 1
    for j in range(k - 1, 0, -2):
        out *= j
    return out


def gaussian_second_moment(f: Polynomial, exact: bool = False) -> float | Fraction:
    """E[f(G)^2] for G standard normal, by expanding f^2 against Gaussian moments."""
    items = list(f.terms.items())
    cache: dict[Key, int] = {}

    def moment(key: Key) -> int:
        if key not in cache:
            m = 1
            for cnt in Counter(key).values():
                m *= _double_factorial_moment(cnt)
                if m == 0:
                    break
            cache[key] = m
        return cache[key]

    if exact:
        total = Fraction(0)
        for k1, c1 in items:
            for k2, c2 in items:
                m = moment(canonical_key(k1 + k2))
                if m:
                    total += Fraction(c1) * Fraction(c2) * m
        return total
    parts = []
    for a, (k1, c1) in enumerate(items):
        for k2, c2 in items[a:]:
            m = moment(canonical_key(k1 + k2))
            if m:
                parts.append((1.0 if k1 == k2 else 2.0) * c1 * c2 * m)
    return max(math.fsum(parts), 0.0)


def gaussian_l2_norm(f: Polynomial) -> float:
    return math.sqrt(gaussian_second_moment(f))


def coefficient_norm_lower_bound(f: Polynomial, key: Iterable[int]) -> float:
    """d^-d * |c_T| / C(l+d, d): the coefficient-based lower bound on ||f||_2."""
    d = max(f.degree, 1)
    return abs(f.coefficient(key)) / (d ** d * math.comb(f.dim + d, d))


def collapse_substitution(f: Polynomial) -> Polynomial:
    """Substitute x_i <- g_i^d and x_{n+i} <- g_i for a degree-d polynomial on 2n variables."""
    if f.dim % 2:
        raise InputError(f"expected an even ambient dimension, got {f.dim}")
    n, d = f.dim // 2, f.degree
    buckets: dict[Key, list[float]] = defaultdict(list)
    for key, c in f.terms.items():
        image = []
        for i in key:
            image.extend([i] * d if i < n else [i - n])
        buckets[canonical_key(image)].append(c)
    return Polynomial.from_terms(n, {k: math.fsum(v) for k, v in buckets.items()}, d * d)


# -- named families ---------------------------------------------------------


def matching_dictator(n: int, i: int, d: int) -> Polynomial:
    """x_i - x_{n+i}^d on R^{2n}."""
    return Polynomial.from_terms(2 * n, {(i,): 1.0, (n + i,) * d: -1.0}, d)


def cross_term_adversary(n: int, i: int) -> Polynomial:
    """(x_i - x_{n+i}) * sum_{j<n} x_j^2 on R^{2n}; passes T1 but has no v-part."""
    diff = Polynomial.variable(2 * n, i) - Polynomial.variable(2 * n, n + i)
    sq = Polynomial.from_terms(2 * n, {(j, j): 1.0 for j in range(n)}, 2)
    return diff * sq


def random_polynomial(dim: int, degree: int, rng: np.random.Generator, n_terms: int | None = None,
                      integer: bool = False, include_constant: bool = True) -> Polynomial:
    """Random polynomial with iid N(0, 1) (or small integer) coefficients.

    ``n_terms=None`` puts a coefficient on every monomial of degree <= ``degree``.
    """
    keys = all_monomials(dim, degree)
    if not include_constant:
        keys = keys[1:]
    if n_terms is not None and n_terms < len(keys):
        chosen = rng.choice(len(keys), size=n_terms, replace=False)
        keys = [keys[j] for j in sorted(chosen)]
    if integer:
        coeffs = rng.integers(-5, 6, size=len(keys)).astype(float)
    else:
        coeffs = rng.standard_normal(len(keys))
    return Polynomial.from_terms(dim, zip(keys, coeffs), degree)
