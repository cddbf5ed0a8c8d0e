"""Planted UG instance -> labelled examples -> intended PTF, LP fit and decoding.

Sweeps the noise rate and prints one JSON line per setting.
"""

import argparse
import json

from ptflab.analysis import agreement, decode_ug_instance, lp_consistent
from ptflab.data import ExampleSet
from ptflab.gauss import make_rng
from ptflab.reduction import ReductionConfig, generate_planted_ug, reduction_examples, ug_intended_ptf


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--eta", type=float, nargs="+", default=[0.0, 0.125, 0.25, 0.5])
    ap.add_argument("--k", type=int, default=4)
    ap.add_argument("--nodes", type=int, default=4)
    ap.add_argument("--deg", type=int, default=2)
    ap.add_argument("--samples", type=int, default=20_000)
    ap.add_argument("--lp-samples", type=int, default=200,
                    help="examples handed to the degree-2 LP (kept small: the LP is dense)")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    for j, eta in enumerate(args.eta):
        inst, lab = generate_planted_ug(args.nodes, args.nodes, args.deg, args.k, eta, make_rng(args.seed, j))
        cfg = ReductionConfig(d=2, seed=args.seed + j)
        ex = reduction_examples(inst, cfg, args.samples)
        intended = ug_intended_ptf(inst, lab, 2)
        rep = agreement(intended, ex)
        head = ExampleSet(ex.Y[:args.lp_samples], ex.b[:args.lp_samples])
        fit = lp_consistent(head, ex.dim, 2)
        decoded = decode_ug_instance(intended, inst, cfg.beta_for(inst.k), rep.agreement)
        print(json.dumps({
            "eta": eta,
            "planted_value": inst.satisfied_fraction(lab),
            "beta": cfg.beta_for(inst.k),
            "intended_agreement": rep.agreement,
            "target": 1 - eta - cfg.beta_for(inst.k),
            "lp_feasible_on_prefix": fit.feasible,
            "decoded_max_set": decoded.max_set_size(),
        }, sort_keys=True))


if __name__ == "__main__":
    main()
