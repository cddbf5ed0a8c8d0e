"""Command-line front end: ``ptflab <gen|reduce|test|decode|solve|verify|report> ...``.

Exit codes: 0 success, 1 a verification bound failed, 2 usage, input or capacity error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from dataclasses import asdict
from pathlib import Path

from . import __version__
from .analysis import (agreement, decode_lc, decode_ug_instance, lp_consistent, max_agreement_exact,
                       randomized_labeling)
from .data import format_examples, read_examples
from .errors import InputError, PtfLabError
from .gadgets import GadgetConfig, estimate_pass_probability
from .gauss import make_rng
from .poly import Polynomial, cross_term_adversary, matching_dictator
from .reduction import (LabelCoverInstance, Labeling, ReductionConfig, UniqueGamesInstance, generate_planted_lc,
                        generate_planted_ug, instance_from_json, lc_intended_ptf, reduction_examples,
                        ug_intended_ptf)
from .verify import SUITES, VerifySettings, run_suite

EXIT_OK, EXIT_CHECK_FAILED, EXIT_USAGE = 0, 1, 2
VARIANT_NAMES = {"t1": "T1", "td": "Td", "t2": "T2"}


# -- io helpers ---------------------------------------------------------------------------


def dump_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def flatten(obj, prefix: str = "") -> dict:
    """Nested dicts/lists to a flat {dotted.key: scalar} mapping."""
    out = {}
    if isinstance(obj, dict):
        for k in sorted(obj):
            out.update(flatten(obj[k], f"{prefix}{k}."))
    elif isinstance(obj, list) and any(isinstance(v, (dict, list)) for v in obj):
        for i, v in enumerate(obj):
            out.update(flatten(v, f"{prefix}{i}."))
    elif isinstance(obj, list):
        out[prefix[:-1]] = " ".join(str(v) for v in obj)
    else:
        out[prefix[:-1]] = obj
    return out


def to_csv(rows: list[dict]) -> str:
    flat = [flatten(r) for r in rows]
    fields = sorted({k for r in flat for k in r})
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    writer.writeheader()
    writer.writerows(flat)
    return buf.getvalue()


def render(obj, fmt: str) -> str:
    if fmt == "json":
        return dump_json(obj)
    rows = obj.get("results") if isinstance(obj, dict) and "results" in obj else obj
    return to_csv(rows if isinstance(rows, list) else [rows])


def emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def load_json(path: str) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc


def load_instance(path: str):
    obj = load_json(path)
    inst = instance_from_json(obj)
    planted = Labeling.from_json(obj["planted"]) if "planted" in obj else None
    return inst, planted


# -- polynomial specs for `test` -------------------------------------------------------------


def parse_poly_spec(spec: str, cfg: GadgetConfig) -> Polynomial:
    """dictator:i | neg-dictator:i | const:c | zero | adversary:i | file:path."""
    name, _, arg = spec.partition(":")
    n, dim = cfg.n, cfg.dim
    try:
        if name in ("dictator", "neg-dictator"):
            i = int(arg)
            if not 0 <= i < n:
                raise InputError(f"dictator index {i} outside [0, {n})")
            f = Polynomial.variable(n, i) if cfg.variant == "T2" else matching_dictator(n, i, cfg.degree)
            return -f if name == "neg-dictator" else f
        if name == "const":
            return Polynomial.constant(dim, float(arg))
        if name == "zero":
            return Polynomial.zero(dim)
        if name == "adversary":
            if cfg.variant == "T2":
                raise InputError("the cross-term adversary lives on 2n coordinates; use T1 or Td")
            return cross_term_adversary(n, int(arg))
        if name == "file":
            return Polynomial.from_json(load_json(arg))
    except ValueError as exc:
        raise InputError(f"bad polynomial spec {spec!r}: {exc}") from exc
    raise InputError(f"unknown polynomial spec {spec!r}")


# -- subcommands ----------------------------------------------------------------------------


def cmd_gen(args) -> int:
    rng = make_rng(args.seed)
    if args.kind == "ug":
        inst, lab = generate_planted_ug(args.nu, args.nv, args.deg, args.k, args.eta, rng)
    else:
        inst, lab = generate_planted_lc(args.nu, args.nv, args.deg, args.k, args.m, args.eta, rng)
    obj = inst.to_json()
    obj["provenance"] = {"seed": args.seed, "eta": args.eta, "generator": f"planted-{args.kind}",
                         "digest": inst.digest()}
    if args.planted:
        obj["planted"] = lab.to_json()
        obj["provenance"]["planted_value"] = inst.satisfied_fraction(lab)
    emit(dump_json(obj), args.out)
    return EXIT_OK


def cmd_reduce(args) -> int:
    inst, _ = load_instance(args.instance)
    cfg = ReductionConfig(d=args.d, beta=args.beta, delta=args.delta, seed=args.seed, t_exponent_cap=args.t_cap)
    emit(format_examples(reduction_examples(inst, cfg, args.samples)), args.out)
    return EXIT_OK


def cmd_test(args) -> int:
    cfg = GadgetConfig(VARIANT_NAMES[args.variant], args.n, args.d, args.beta, args.delta, args.seed,
                       args.samples, args.t_cap)
    f = parse_poly_spec(args.poly, cfg)
    est = estimate_pass_probability(f, cfg)
    report = {"variant": cfg.variant, "n": cfg.n, "d": cfg.degree, "beta": cfg.beta_value,
              "delta": cfg.delta_value, "seed": cfg.seed, "samples": est.samples,
              "pass_estimate": est.estimate, "ci99": [est.lower, est.upper], "poly": args.poly,
              "t_exponent_cap": cfg.t_exponent_cap}
    emit(render(report, args.format), args.out)
    return EXIT_OK


def cmd_decode(args) -> int:
    inst, planted = load_instance(args.instance)
    if args.poly == "planted":
        if planted is None:
            raise InputError("instance file carries no planted labeling")
        if isinstance(inst, UniqueGamesInstance):
            p = ug_intended_ptf(inst, planted, args.d)
        else:
            p = lc_intended_ptf(inst, planted)
    else:
        p = Polynomial.from_json(load_json(args.poly))
    if isinstance(inst, LabelCoverInstance):
        decoded = decode_lc(p, inst)
    else:
        decoded = decode_ug_instance(f=p, inst=inst, beta=args.beta, pass_probability=args.pass_probability)
    lab = randomized_labeling(decoded, make_rng(args.seed))
    report = {"instance": inst.digest(), "seed": args.seed, "poly": args.poly, "decoded": decoded.to_json(),
              "labeling": lab.to_json(), "satisfied_fraction": inst.satisfied_fraction(lab)}
    emit(render(report, args.format), args.out)
    return EXIT_OK


def cmd_solve(args) -> int:
    data = read_examples(args.examples)
    report = {"examples": args.examples, "count": len(data), "dim": data.dim, "degree": args.degree,
              "provenance": data.meta}
    if args.max_agreement:
        res = max_agreement_exact(data, data.dim, args.degree)
        report.update(method="max-agreement", agreement=res.fraction, polynomial=res.polynomial.to_json())
    else:
        res = lp_consistent(data, data.dim, args.degree)
        report.update(method="lp", feasible=res.feasible, exact_arithmetic=res.exact, pivots=res.iterations)
        if res.feasible:
            report.update(polynomial=res.polynomial.to_json(), agreement=agreement(res.polynomial, data).agreement)
        else:
            report["certificate_support"] = int((res.certificate > 0).sum())
    emit(render(report, args.format), args.out)
    return EXIT_OK


def cmd_verify(args) -> int:
    settings = VerifySettings(seed=args.seed, n=args.n, d=args.d, samples=args.samples)
    results = run_suite(args.suite, settings, determinism=args.determinism or None)
    report = {"suite": args.suite, "settings": asdict(settings), "passed": all(r.passed for r in results),
              "results": [r.to_json() for r in results]}
    emit(render(report, args.format), args.out)
    for r in results:
        print(r.line(), file=sys.stderr)
    return EXIT_OK if report["passed"] else EXIT_CHECK_FAILED


def cmd_report(args) -> int:
    rows = []
    for path in args.inputs:
        obj = load_json(path)
        items = obj["results"] if isinstance(obj, dict) and "results" in obj else [obj]
        for item in (items if isinstance(items, list) else [items]):
            rows.append({"source": path, **item} if isinstance(item, dict) else {"source": path, "value": item})
    text = to_csv(rows) if args.format == "csv" else dump_json([flatten(r) for r in rows])
    emit(text, args.out)
    return EXIT_OK


# -- parser ---------------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ptflab", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"ptflab {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, seed=True, out=True, fmt=False):
        if seed:
            sp.add_argument("--seed", type=int, default=0)
        if out:
            sp.add_argument("--out", help="output path (default: stdout)")
        if fmt:
            sp.add_argument("--format", choices=("json", "csv"), default="json")

    g = sub.add_parser("gen", help="generate a planted constraint instance")
    g.add_argument("kind", choices=("ug", "lc"))
    g.add_argument("--planted", action="store_true", help="embed the planted labeling in the output")
    g.add_argument("--eta", type=float, default=0.0)
    g.add_argument("--k", type=int, default=4)
    g.add_argument("--m", type=int, default=4, help="V alphabet size for label cover")
    g.add_argument("--nu", type=int, default=4)
    g.add_argument("--nv", type=int, default=4)
    g.add_argument("--deg", type=int, default=2)
    common(g)
    g.set_defaults(func=cmd_gen)

    r = sub.add_parser("reduce", help="sample labeled examples from an instance")
    r.add_argument("--instance", required=True)
    r.add_argument("--samples", type=int, default=10_000)
    r.add_argument("--d", type=int, default=2)
    r.add_argument("--beta", type=float)
    r.add_argument("--delta", type=float)
    r.add_argument("--t-cap", type=int, dest="t_cap")
    common(r)
    r.set_defaults(func=cmd_reduce)

    t = sub.add_parser("test", help="estimate a polynomial's pass probability under a dictator test")
    t.add_argument("--variant", choices=sorted(VARIANT_NAMES), default="td")
    t.add_argument("--n", type=int, default=16)
    t.add_argument("--d", type=int, default=2)
    t.add_argument("--beta", type=float)
    t.add_argument("--delta", type=float)
    t.add_argument("--poly", default="dictator:0")
    t.add_argument("--samples", type=int, default=100_000)
    t.add_argument("--t-cap", type=int, dest="t_cap")
    common(t, fmt=True)
    t.set_defaults(func=cmd_test)

    dc = sub.add_parser("decode", help="decode labels from a polynomial over an instance")
    dc.add_argument("--instance", required=True)
    dc.add_argument("--poly", default="planted", help="polynomial JSON path, or 'planted'")
    dc.add_argument("--d", type=int, default=2, help="degree of the intended UG polynomial")
    dc.add_argument("--beta", type=float)
    dc.add_argument("--pass-probability", type=float, dest="pass_probability")
    common(dc, fmt=True)
    dc.set_defaults(func=cmd_decode)

    so = sub.add_parser("solve", help="LP consistency or exact maximum agreement on an example file")
    so.add_argument("--examples", required=True)
    mode = so.add_mutually_exclusive_group()
    mode.add_argument("--lp", action="store_true", help="LP consistency (default)")
    mode.add_argument("--max-agreement", action="store_true", dest="max_agreement")
    so.add_argument("--degree", type=int, default=1)
    common(so, seed=False, fmt=True)
    so.set_defaults(func=cmd_solve)

    v = sub.add_parser("verify", help="run acceptance checks")
    v.add_argument("--suite", choices=sorted(SUITES), default="all")
    v.add_argument("--n", type=int, default=16)
    v.add_argument("--d", type=int, choices=(2, 3))
    v.add_argument("--samples", type=int, default=100_000)
    v.add_argument("--determinism", action="store_true", help="rerun the suite and compare reports")
    common(v, fmt=True)
    v.set_defaults(func=cmd_verify)

    rp = sub.add_parser("report", help="flatten JSON reports into CSV or flat JSON")
    rp.add_argument("inputs", nargs="+")
    rp.add_argument("--format", choices=("json", "csv"), default="csv")
    common(rp, seed=False)
    rp.set_defaults(func=cmd_report)
    return p


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (PtfLabError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
