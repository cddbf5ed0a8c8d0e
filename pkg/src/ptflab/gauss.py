"""Seeded random sources, the scaled binomial H_N/sqrt(N), and its quantile
coupling with a standard normal."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np
from scipy.special import ndtr, ndtri

from .errors import DegenerateInputError, InputError
from .poly import Polynomial, evaluate_many, gaussian_l2_norm

CARBERY_WRIGHT_CONSTANT = 3.0
COUPLING_CONSTANT = 8.0
DEFAULT_N = 4096


@dataclass(frozen=True)
class RngSeed:
    """(seed, stream) pair; each stream is an independent PCG64 substream."""

    seed: int
    stream: int = 0

    def generator(self) -> np.random.Generator:
        return make_rng(self.seed, self.stream)


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    if not 0 <= seed < 2 ** 64:
        raise InputError(f"seed must be a 64-bit unsigned integer, got {seed}")
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(stream),))
    return np.random.Generator(np.random.PCG64(ss))


def sample_gaussian(rng: np.random.Generator, size=None):
    return rng.standard_normal(size)


def sample_bits(rng: np.random.Generator, n: int, beta: float) -> np.ndarray:
    """n iid Bernoulli(beta) bits as an int8 array."""
    if not 0.0 <= beta <= 1.0:
        raise InputError(f"beta must lie in [0, 1], got {beta}")
    return (rng.random(n) < beta).astype(np.int8)


def sample_signs(rng: np.random.Generator, size=None) -> np.ndarray:
    return np.where(rng.random(size) < 0.5, 1, -1).astype(np.int8)


def open_uniform(rng: np.random.Generator, size=None) -> np.ndarray:
    """Uniform on (0, 1) at 53-bit resolution, never hitting either endpoint."""
    return (rng.integers(0, 2 ** 53, size=size) + 0.5) * 2.0 ** -53


# -- normal and binomial CDFs -----------------------------------------------


def normal_cdf(x):
    return ndtr(x)


def normal_quantile(p):
    return ndtri(p)


@dataclass(frozen=True)
class DiscretizedGaussianSpec:
    """H_N = sum of N uniform +-1 bits; samples are reported as H_N / sqrt(N)."""

    N: int = DEFAULT_N

    def __post_init__(self):
        if self.N < 1:
            raise InputError(f"N must be at least 1, got {self.N}")

    @property
    def support(self) -> np.ndarray:
        return (2.0 * np.arange(self.N + 1) - self.N) / math.sqrt(self.N)

    @property
    def cdf_table(self) -> np.ndarray:
        """Pr[H_N <= -N + 2j] for j = 0..N."""
        return _binomial_cdf_table(self.N)


@lru_cache(maxsize=32)
def _binomial_cdf_table(N: int) -> np.ndarray:
    j = np.arange(N + 1)
    log_pmf = (math.lgamma(N + 1) - np.array([math.lgamma(v + 1) + math.lgamma(N - v + 1) for v in j])
               - N * math.log(2.0))
    pmf = np.exp(log_pmf)
    # Accumulate from both ends so each tail keeps its relative accuracy.
    lower = np.cumsum(pmf)
    upper = np.cumsum(pmf[::-1])[::-1]
    cdf = np.where(j < N / 2, lower, 1.0 - np.concatenate([upper[1:], [0.0]]))
    cdf[-1] = 1.0
    cdf.setflags(write=False)
    return cdf


def binomial_cdf(spec: DiscretizedGaussianSpec, x):
    """Pr[H_N <= x] on the unscaled integer lattice {-N, -N+2, ..., N}."""
    x = np.asarray(x, dtype=np.float64)
    j = np.floor((x + spec.N) / 2.0 + 1e-9).astype(np.int64)
    table = spec.cdf_table
    out = np.where(j < 0, 0.0, table[np.clip(j, 0, spec.N)])
    return out if out.ndim else float(out)


def scaled_binomial_cdf(spec: DiscretizedGaussianSpec, z):
    """Pr[H_N / sqrt(N) <= z]."""
    return binomial_cdf(spec, np.asarray(z, dtype=np.float64) * math.sqrt(spec.N))


def berry_esseen_gap(spec: DiscretizedGaussianSpec, grid) -> float:
    """max over the grid of |Pr[H_N/sqrt(N) <= z] - Psi(z)|."""
    grid = np.asarray(grid, dtype=np.float64)
    return float(np.max(np.abs(scaled_binomial_cdf(spec, grid) - normal_cdf(grid))))


def dkw_epsilon(samples: int, alpha: float = 0.01) -> float:
    """Two-sided Dvoretzky-Kiefer-Wolfowitz band at confidence 1 - alpha."""
    return math.sqrt(math.log(2.0 / alpha) / (2.0 * samples))


hoeffding_halfwidth = dkw_epsilon


def empirical_cdf_gap(samples: np.ndarray, grid, cdf) -> float:
    s = np.sort(np.asarray(samples, dtype=np.float64))
    grid = np.asarray(grid, dtype=np.float64)
    emp = np.searchsorted(s, grid, side="right") / len(s)
    return float(np.max(np.abs(emp - cdf(grid))))


# -- coupling -----------------------------------------------------------------


class CoupledPair(NamedTuple):
    g: float
    h_scaled: float


def coupled_from_uniform(spec: DiscretizedGaussianSpec, u):
    """Push one uniform through both inverse CDFs.

    h is the smallest lattice point whose binomial CDF reaches u, and
    g = Psi^{-1}(u), so g falls in (Psi^{-1}(Phi(h-2)), Psi^{-1}(Phi(h))].
    """
    u = np.asarray(u, dtype=np.float64)
    j = np.minimum(np.searchsorted(spec.cdf_table, u, side="left"), spec.N)
    h = (2.0 * j - spec.N) / math.sqrt(spec.N)
    return normal_quantile(u), h


def sample_coupled(rng: np.random.Generator, spec: DiscretizedGaussianSpec) -> CoupledPair:
    g, h = coupled_from_uniform(spec, open_uniform(rng))
    return CoupledPair(float(g), float(h))


def sample_coupled_array(rng: np.random.Generator, spec: DiscretizedGaussianSpec, size):
    """Arrays (g, h_scaled) of iid coupled draws with the given shape."""
    return coupled_from_uniform(spec, open_uniform(rng, size))


def coupling_bound(N: int, c: float = COUPLING_CONSTANT) -> tuple[float, float]:
    """(radius, required probability) for Pr[|g - h| <= c N^-1/4] >= 1 - c N^-1/4."""
    r = c * N ** -0.25
    return r, 1.0 - r


# -- anti-concentration -------------------------------------------------------


class AntiConcentration(NamedTuple):
    probability: float
    bound: float
    l2_norm: float
    samples: int


def anticoncentration_check(f: Polynomial, tau: float, samples: int, rng: np.random.Generator,
                            constant: float = CARBERY_WRIGHT_CONSTANT) -> AntiConcentration:
    """Empirical Pr[|f(G)| <= tau ||f||_2] against constant * d * tau^(1/d)."""
    if tau <= 0:
        raise InputError(f"tau must be positive, got {tau}")
    d = f.effective_degree
    if d == 0:
        raise DegenerateInputError("anti-concentration is undefined for a constant polynomial")
    norm = gaussian_l2_norm(f)
    hits = 0
    chunk = 1 << 15
    done = 0
    while done < samples:
        m = min(chunk, samples - done)
        vals = evaluate_many(f, rng.standard_normal((m, f.dim)))
        hits += int(np.count_nonzero(np.abs(vals) <= tau * norm))
        done += m
    return AntiConcentration(hits / samples, constant * d * tau ** (1.0 / d), norm, samples)
