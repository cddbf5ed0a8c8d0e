"""One-query dictator tests T1, Td and T2 as labeled-example samplers.

Each test draws (y, b) and accepts a polynomial f iff sign(f(y)) == b.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np

from .data import ExampleSet, LabeledExample
from .errors import ConfigError, InputError
from .gauss import hoeffding_halfwidth, make_rng, sample_signs
from .poly import Polynomial, evaluate_many, sign_many

VARIANTS = ("T1", "Td", "T2")
DELTA_EXPONENT_CAP = 40
# Largest |g| we plan for when guarding t^3 * r against overflow.
R_MAX = 40.0
LOG10_LIMIT = 300.0
CHUNK = 1 << 14
DEFAULT_SAMPLES = 100_000


def default_beta(n: int) -> float:
    if n < 2:
        raise ConfigError(f"beta = 1/log2(n) needs n >= 2, got {n}")
    return 1.0 / math.log2(n)


def t_exponent_count(n: int) -> int:
    return math.ceil(math.log2(n) ** 2)


def check_t_ladder(n: int, top_exponent: int) -> None:
    if 3 * top_exponent * math.log10(n) + math.log10(R_MAX) >= LOG10_LIMIT:
        raise ConfigError(
            f"t = {n}^{top_exponent} overflows: t^3*|r| exceeds 1e{LOG10_LIMIT:g}; "
            f"set t_exponent_cap below {int((LOG10_LIMIT - math.log10(R_MAX)) / (3 * math.log10(n)))}")


def power(x: np.ndarray, d: int) -> np.ndarray:
    """x**d by repeated multiplication, matching how polynomials are evaluated."""
    out = x
    for _ in range(d - 1):
        out = out * x
    return out


@dataclass(frozen=True)
class GadgetConfig:
    variant: str
    n: int
    d: int = 1
    beta: float | None = None
    delta: float | None = None
    seed: int = 0
    samples: int = DEFAULT_SAMPLES
    t_exponent_cap: int | None = None

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ConfigError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.n < 1 or self.d < 1:
            raise ConfigError(f"n and d must be positive, got n={self.n}, d={self.d}")
        if self.variant == "T2" and self.n < 2:
            raise ConfigError("T2 needs n >= 2")
        if not 0.0 <= self.beta_value <= 1.0:
            raise ConfigError(f"beta must lie in [0, 1], got {self.beta_value}")
        if not self.delta_value > 0:
            raise ConfigError(f"delta must be positive, got {self.delta_value}")
        if self.variant == "T2":
            check_t_ladder(self.n, self.t_exponents[-1])

    @property
    def beta_value(self) -> float:
        return default_beta(self.n) if self.beta is None else float(self.beta)

    @property
    def delta_value(self) -> float:
        if self.delta is not None:
            return float(self.delta)
        e = self.n * self.n if self.variant == "Td" else self.n
        return 2.0 ** -min(e, DELTA_EXPONENT_CAP)

    @property
    def degree(self) -> int:
        return {"T1": 1, "Td": self.d, "T2": 2}[self.variant]

    @property
    def dim(self) -> int:
        return self.n if self.variant == "T2" else 2 * self.n

    @property
    def t_exponents(self) -> list[int]:
        top = t_exponent_count(self.n)
        if self.t_exponent_cap is not None:
            top = min(top, self.t_exponent_cap)
        return list(range(1, max(top, 1) + 1))

    def describe(self) -> dict:
        out = asdict(self)
        out.update(beta=self.beta_value, delta=self.delta_value, dim=self.dim)
        return out


# -- batch samplers -----------------------------------------------------------


def sample_edge_batch(n: int, d: int, beta: float, delta: float, rng: np.random.Generator, size: int,
                      u_source: np.ndarray | None = None):
    """Draws of the matching-dictator recipe on 2n coordinates.

    y_i = a_i h_i + g_{s(i)}^d + b*delta and y_{n+i} = g_i, where s is
    ``u_source`` (identity by default; shape (n,) or one row per draw).
    d = 1 gives T1.
    """
    a = rng.random((size, n)) < beta
    h = rng.standard_normal((size, n))
    g = rng.standard_normal((size, n))
    b = sample_signs(rng, size)
    gd = power(g, d)
    if u_source is not None:
        src = np.asarray(u_source)
        gd = gd[:, src] if src.ndim == 1 else np.take_along_axis(gd, src, axis=1)
    Y = np.empty((size, 2 * n))
    Y[:, :n] = (np.where(a, h, 0.0) + gd) + b[:, None] * delta
    Y[:, n:] = g
    return Y, b


def sample_t2_batch(n: int, beta: float, delta: float, exponents: list[int], rng: np.random.Generator, size: int):
    """y = t^3 r + b t^2 delta * ones, r_i = a_i g_i, t = n^i with i uniform over ``exponents``."""
    a = rng.random((size, n)) < beta
    g = rng.standard_normal((size, n))
    i = rng.integers(0, len(exponents), size=size)
    b = sample_signs(rng, size)
    t = float(n) ** np.asarray(exponents, dtype=np.float64)[i]
    t2 = t * t
    t3 = t2 * t
    Y = t3[:, None] * np.where(a, g, 0.0) + (b * t2 * delta)[:, None]
    if not np.isfinite(Y).all():
        raise ConfigError("T2 sample overflowed; lower t_exponent_cap")
    return Y, b


def sample_batch(cfg: GadgetConfig, rng: np.random.Generator, size: int):
    if cfg.variant == "T1":
        return sample_edge_batch(cfg.n, 1, cfg.beta_value, cfg.delta_value, rng, size)
    if cfg.variant == "Td":
        return sample_edge_batch(cfg.n, cfg.d, cfg.beta_value, cfg.delta_value, rng, size)
    return sample_t2_batch(cfg.n, cfg.beta_value, cfg.delta_value, cfg.t_exponents, rng, size)


def _single(cfg: GadgetConfig, rng: np.random.Generator, variant: str) -> LabeledExample:
    if cfg.variant != variant:
        raise InputError(f"config is for {cfg.variant}, not {variant}")
    Y, b = sample_batch(cfg, rng, 1)
    return LabeledExample(Y[0], int(b[0]))


def sample_T1(cfg: GadgetConfig, rng: np.random.Generator) -> LabeledExample:
    return _single(cfg, rng, "T1")


def sample_Td(cfg: GadgetConfig, rng: np.random.Generator) -> LabeledExample:
    return _single(cfg, rng, "Td")


def sample_T2(cfg: GadgetConfig, rng: np.random.Generator) -> LabeledExample:
    return _single(cfg, rng, "T2")


def draw_examples(cfg: GadgetConfig, count: int, stream: int = 0) -> ExampleSet:
    Y, b = sample_batch(cfg, make_rng(cfg.seed, stream), count)
    return ExampleSet(Y, b, {"source": cfg.describe(), "seed": cfg.seed})


# -- pass-probability estimation -----------------------------------------------


@dataclass(frozen=True)
class PassEstimate:
    estimate: float
    half_width: float
    samples: int
    passes: int

    @property
    def lower(self) -> float:
        return self.estimate - self.half_width

    @property
    def upper(self) -> float:
        return self.estimate + self.half_width


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get("PTFLAB_THREADS", "1")))
    except ValueError:
        return 1


def sharded_count(count_chunk: Callable[[np.random.Generator, int], int], samples: int, seed: int) -> int:
    """Sum ``count_chunk(rng, size)`` over a fixed chunk plan.

    Chunk c always uses stream c, so the total does not depend on how many
    worker threads run the chunks.
    """
    sizes = [min(CHUNK, samples - s) for s in range(0, samples, CHUNK)]
    jobs = [(make_rng(seed, c), m) for c, m in enumerate(sizes)]
    workers = min(worker_count(), len(jobs)) or 1
    if workers == 1:
        return sum(count_chunk(r, m) for r, m in jobs)
    with ThreadPoolExecutor(workers) as pool:
        return sum(pool.map(lambda job: count_chunk(*job), jobs))


def estimate_pass_probability(f: Polynomial, cfg: GadgetConfig, samples: int | None = None) -> PassEstimate:
    """Monte Carlo Pr[sign(f(y)) == b] with a 99% Hoeffding half-width."""
    samples = cfg.samples if samples is None else samples
    if samples < 1:
        raise InputError("need at least one sample")
    if f.dim != cfg.dim:
        raise InputError(f"polynomial dimension {f.dim} does not match {cfg.variant} dimension {cfg.dim}")

    def count(rng, m):
        Y, b = sample_batch(cfg, rng, m)
        return int(np.count_nonzero(sign_many(evaluate_many(f, Y)) == b))

    passes = sharded_count(count, samples, cfg.seed)
    return PassEstimate(passes / samples, hoeffding_halfwidth(samples), samples, passes)
