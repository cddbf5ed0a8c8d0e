"""How quickly the binomial/Gaussian coupling tightens with N.

For each N the script reports the exact Kolmogorov gap, the fraction of coupled
pairs within c N^-1/4, and the worst sign disagreement of random quadratics.
"""

import argparse
import json

import numpy as np

from ptflab.gauss import (DiscretizedGaussianSpec, berry_esseen_gap, coupling_bound, make_rng,
                          sample_coupled_array)
from ptflab.poly import evaluate_many, random_polynomial, sign_many


def run(N: int, vectors: int, dim: int, polys: int, seed: int) -> dict:
    spec = DiscretizedGaussianSpec(N)
    rng = make_rng(seed, N)
    g, h = sample_coupled_array(rng, spec, (vectors, dim))
    radius, _ = coupling_bound(N)
    flips = []
    for _ in range(polys):
        p = random_polynomial(dim, 2, rng)
        flips.append(float(np.mean(sign_many(evaluate_many(p, g)) != sign_many(evaluate_many(p, h)))))
    return {
        "N": N,
        "kolmogorov_gap": berry_esseen_gap(spec, np.linspace(-5, 5, 2001)),
        "mean_abs_diff": float(np.mean(np.abs(g - h))),
        "within_radius": float(np.mean(np.abs(g - h) <= radius)),
        "radius": radius,
        "max_sign_disagreement": max(flips),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description="binomial/Gaussian coupling sweep")
    ap.add_argument("--N", type=int, nargs="+", default=[16, 64, 256, 1024, 4096, 16384])
    ap.add_argument("--vectors", type=int, default=20_000)
    ap.add_argument("--dim", type=int, default=6)
    ap.add_argument("--polys", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    for N in args.N:
        print(json.dumps(run(N, args.vectors, args.dim, args.polys, args.seed), sort_keys=True))


if __name__ == "__main__":
    main()
