"""Pass rate of matching dictators and the cross-term adversary as n grows.

    python3 scripts/completeness_sweep.py --n 4 8 16 32 --d 2 3 --samples 50000
"""

import argparse
import csv
import sys

from ptflab.gadgets import GadgetConfig, estimate_pass_probability
from ptflab.poly import cross_term_adversary, matching_dictator


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, nargs="+", default=[4, 8, 16, 32])
    ap.add_argument("--d", type=int, nargs="+", default=[2, 3])
    ap.add_argument("--samples", type=int, default=50_000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    out = csv.writer(sys.stdout)
    out.writerow(["n", "d", "beta", "hypothesis", "pass", "ci99", "completeness_target"])
    for n in args.n:
        for d in args.d:
            cfg = GadgetConfig("Td", n, d, seed=args.seed, samples=args.samples)
            hyps = [("dictator", matching_dictator(n, 0, d))]
            if d >= 3:  # the adversary has degree 3
                hyps.append(("adversary", cross_term_adversary(n, 0)))
            for name, f in hyps:
                est = estimate_pass_probability(f, cfg)
                out.writerow([n, d, cfg.beta_value, name, f"{est.estimate:.5f}", f"{est.half_width:.5f}",
                              f"{1 - cfg.beta_value:.5f}"])


if __name__ == "__main__":
    main()
