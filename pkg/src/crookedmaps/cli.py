"""Command line entry point.

Usage:
    crookedmaps gen-g0 --epsilon 1/2 --gamma 1/9 --out g0.json
    crookedmaps check-crooked --map f.json --epsilon 1/2 --delta 1/8
    crookedmaps lemma212 --map f.json --sigma 2 --eta 3/4 --delta 1/32 --mu 1/4
    crookedmaps thm213 --map f.json --epsilon 1/4 --stages 2 --report run.json
    crookedmaps sn-model --n 2 --depth 3 --out s2.json
    crookedmaps plot --map f.json --resolution 64 --out f.csv
    crookedmaps verify-props --epsilon 1/2 --gamma 1/9 --model sn:2:depth=1

Exit codes:
    0: verified / constructed
    1: violation found (witness written)
    2: input error
    3: resource guard tripped (inconclusive)
"""
import argparse
import csv
import io
import json
import os
import sys
import time
from dataclasses import asdict, dataclass, field
from decimal import Decimal, localcontext

from . import serialize
from .crooked import grid_falsifier, is_crooked, verify_witness
from .crooking import build_g0, g0_params, g_properties, lift_g, lemma_2_12_build, theorem_2_13_drive
from .errors import BudgetError, CapabilityError, CrookedMapsError
from .fibmap import stretch_lipschitz
from .knaster import build_sn, check_doubling, check_s_properties, refine, refinement_consistent
from .plmap import PLMap
from .scalar import default_budget, fmt, q

EXIT_OK, EXIT_VIOLATION, EXIT_INPUT, EXIT_BUDGET = 0, 1, 2, 3


@dataclass
class RunManifest:
    command: str
    argv: list
    params: dict
    inputs: list = field(default_factory=list)
    outputs: list = field(default_factory=list)
    seed: int = None
    budgets: dict = field(default_factory=dict)
    outcome: str = "error"
    elapsed: float = 0.0

    def to_json(self):
        return asdict(self)

    @classmethod
    def from_json(cls, data):
        return cls(**data)


_OUTCOME = {EXIT_OK: "verified", EXIT_VIOLATION: "violated", EXIT_INPUT: "error", EXIT_BUDGET: "inconclusive"}


def rational(text):
    try:
        return q(text)
    except (TypeError, ValueError) as exc:
        raise argparse.ArgumentTypeError(str(exc))


def _emit(obj, path=None):
    text = serialize.dumps(obj)
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _load_map(path):
    return serialize.map_from_json(serialize.read_json(path))


# -- subcommands --------------------------------------------------------------

def cmd_gen_g0(args, run):
    params = g0_params(args.epsilon, args.gamma, args.q)
    meta = {"g0": params.to_json()}
    if not params.fits(args.budget):
        # too large to list: the parameters determine g0 exactly
        out = serialize.generator_to_json(params, args.model)
        out["meta"] = meta
        serialize.write_json(args.out, out)
        run.outputs.append(args.out)
        print(f"g0: q={params.q} p={params.p} symbolic ({meta['g0']['pieces_bound']} steps) -> {args.out}")
        return EXIT_OK
    g0, params = build_g0(args.epsilon, args.gamma, args.budget, q_override=args.q)
    if args.model:
        model = serialize.resolve_model(args.model)
        out = serialize.map_to_json(lift_g(model, g0), model_ref=args.model, meta=meta)
    else:
        out = serialize.map_to_json(g0, meta=meta)
    serialize.write_json(args.out, out)
    run.outputs.append(args.out)
    print(f"g0: q={params.q} p={params.p} pieces={g0.pieces} -> {args.out}")
    return EXIT_OK


def cmd_check_crooked(args, run):
    f = serialize.as_fibered(_load_map(args.map))
    run.inputs.append(args.map)
    verdict = is_crooked(f, args.epsilon, args.delta, args.candidate_budget)
    report = verdict.to_json()
    if verdict.witness is not None:
        if hasattr(f, "crookedness"):
            # symbolic lifts re-check their witness window on exact values
            report["witness_revalidated"] = verdict.witness.get("independently_checked")
        else:
            report["witness_revalidated"] = verify_witness(f, verdict.witness, args.epsilon, args.delta)
        if args.witness:
            serialize.write_json(args.witness, report["witness"])
            run.outputs.append(args.witness)
    if args.falsify:
        run.seed = args.seed
        hit = grid_falsifier(f, args.epsilon, args.delta, args.falsify, seed=args.seed)
        report["falsifier"] = {"resolution": args.falsify, "seed": args.seed,
                               "found_violation": hit is not None}
    _emit(report, args.out)
    if args.out:
        run.outputs.append(args.out)
    return EXIT_OK if verdict.crooked else EXIT_VIOLATION


def cmd_lemma212(args, run):
    f = serialize.as_fibered(_load_map(args.map))
    run.inputs.append(args.map)
    F, n, params, certs = lemma_2_12_build(
        f, args.sigma, args.eta, args.delta, args.mu, args.budget, args.s, args.candidate_budget
    )
    report = {"n": n, "params": params, "certificates": certs}
    if args.out:
        serialize.write_json(args.out, serialize.map_to_json(F))
        run.outputs.append(args.out)
        report["map_file"] = args.out
    _emit(report, args.report)
    if args.report:
        run.outputs.append(args.report)
    ok = certs["d_lambda"]["ok"] and certs["stretch"]["ok"] and certs["crooked"]["ok"]
    return EXIT_OK if ok else EXIT_VIOLATION


def cmd_thm213(args, run):
    f0 = serialize.as_fibered(_load_map(args.map))
    run.inputs.append(args.map)
    sigma = args.sigma if args.sigma is not None else stretch_lipschitz(f0)[0]
    reports, summary = theorem_2_13_drive(
        f0, sigma, args.epsilon, args.stages, args.budget, args.candidate_budget
    )
    stem = os.path.splitext(args.report)[0]
    for r in reports:
        r.map_file = f"{stem}_stage{r.stage}.json"
        serialize.write_json(r.map_file, serialize.map_to_json(r.map))
        run.outputs.append(r.map_file)
    serialize.write_json(args.report, {"sigma": fmt(sigma), "stages": [r.to_json() for r in reports],
                                       "summary": summary})
    run.outputs.append(args.report)
    print(f"{len(reports)} stage(s); telescoping ok: {summary['telescoping_ok']}")
    if summary["truncated"]:
        return EXIT_BUDGET
    ok = summary["telescoping_ok"] and all(summary["conditions_ii"])
    ok = ok and all(r.certificates["crooked"]["ok"] for r in reports)
    ok = ok and all(v["ok"] for r in reports for v in r.certificates["crooked_earlier"].values())
    return EXIT_OK if ok else EXIT_VIOLATION


def cmd_sn_model(args, run):
    sn = build_sn(args.n, args.depth)
    serialize.write_json(args.out, sn.to_json())
    run.outputs.append(args.out)
    if args.check:
        report = check_s_properties(sn)
        checked, bad = check_doubling(sn)
        report["doubling"] = {"arcs": checked, "failures": bad, "ok": bad == 0}
        fine, proj = refine(sn)
        report["refinement_consistent"] = refinement_consistent(sn, fine, proj)
        _emit(report, args.report)
        ok = report["doubling"]["ok"] and report["refinement_consistent"]
        ok = ok and report["S2"]["ok"] and report["S5"]["ok"] is not False and report["S6"]["ok"] is not False
        return EXIT_OK if ok else EXIT_VIOLATION
    print(f"S_{args.n} depth {args.depth}: {sn.N} fibers -> {args.out}")
    return EXIT_OK


def _decimal(x, digits):
    with localcontext() as ctx:
        ctx.prec = digits
        return str(Decimal(int(x.numerator)) / Decimal(int(x.denominator)))


def plot_rows(f, resolution=0):
    """(chain, x, f(x), is_breakpoint) rows, sorted, on exact rationals."""
    from .plmap import evaluate

    if isinstance(f, PLMap):
        chains = [(0, f.nodes, f.values, 1)]
    elif not hasattr(f, "chains"):
        raise CapabilityError("a symbolic generator has too many breakpoints to list")
    else:
        chains = [(c, xs, ys, f.model.chains[c].length) for c, (_, xs, ys) in enumerate(f.chains)]
    rows = []
    for c, xs, ys, m in chains:
        pts = {x: True for x in xs}
        for k in range(resolution + 1 if resolution else 0):
            pts.setdefault(q(m) * k / resolution, False)
        for x in sorted(pts):
            rows.append((c, x, evaluate(xs, ys, x), pts[x]))
    return rows


def cmd_plot(args, run):
    f = _load_map(args.map)
    run.inputs.append(args.map)
    buf = io.StringIO()
    buf.write(f"# decimal columns are rounded to {args.precision} significant digits (lossy)\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["chain", "x", "fx", "x_exact", "fx_exact", "breakpoint"])
    for c, x, y, bp in plot_rows(f, args.resolution):
        w.writerow([c, _decimal(x, args.precision), _decimal(y, args.precision), fmt(x), fmt(y), int(bp)])
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(buf.getvalue())
        run.outputs.append(args.out)
    else:
        sys.stdout.write(buf.getvalue())
    return EXIT_OK


def cmd_verify_props(args, run):
    model = serialize.resolve_model(args.model)
    params = g0_params(args.epsilon, args.gamma, args.q)
    g = lift_g(model, params)
    report = {"g0": params.to_json(), "model": args.model or "interval"}
    report["properties"] = g_properties(g, args.epsilon, args.gamma)
    ok = report["properties"]["ok"]
    if not args.skip_crooked:
        verdict = is_crooked(g, args.epsilon, args.gamma, args.candidate_budget)
        report["crooked"] = verdict.to_json()
        ok = ok and verdict.crooked
    _emit(report, args.report)
    if args.report:
        run.outputs.append(args.report)
    return EXIT_OK if ok else EXIT_VIOLATION


# -- plumbing -------------------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(prog="crookedmaps", description="Exact crooked-map constructions")
    parser.add_argument("--budget", type=int, default=None, help="piece budget (default: env or 5e6)")
    parser.add_argument("--candidate-budget", type=int, default=None, help="crookedness candidate arcs")
    parser.add_argument("--manifest", help="write a run manifest here")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-g0", help="build the generator g0")
    p.add_argument("--epsilon", type=rational, required=True)
    p.add_argument("--gamma", type=rational, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--model", help="lift onto this model (interval or sn:<n>:depth=<d>)")
    p.add_argument("--q", type=int, default=None, help="override q (flagged surrogate)")
    p.set_defaults(func=cmd_gen_g0)

    p = sub.add_parser("check-crooked", help="decide (eps, delta)-crookedness")
    p.add_argument("--map", required=True)
    p.add_argument("--epsilon", type=rational, required=True)
    p.add_argument("--delta", type=rational, required=True)
    p.add_argument("--witness", help="write the witness here on violation")
    p.add_argument("--out", help="verdict file (default stdout)")
    p.add_argument("--falsify", type=int, default=0, help="also run the grid falsifier at this resolution")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_check_crooked)

    p = sub.add_parser("lemma212", help="build F = f o g with certificates")
    p.add_argument("--map", required=True)
    p.add_argument("--sigma", type=rational, required=True)
    p.add_argument("--eta", type=rational, required=True)
    p.add_argument("--delta", type=rational, required=True)
    p.add_argument("--mu", type=rational, required=True)
    p.add_argument("--s", type=rational, default=None, help="working Lipschitz constant")
    p.add_argument("--out", help="write F here")
    p.add_argument("--report", help="certificate report (default stdout)")
    p.set_defaults(func=cmd_lemma212)

    p = sub.add_parser("thm213", help="run the staged driver")
    p.add_argument("--map", required=True)
    p.add_argument("--epsilon", type=rational, required=True)
    p.add_argument("--stages", type=int, required=True)
    p.add_argument("--report", required=True)
    p.add_argument("--sigma", type=rational, default=None, help="stretch factor (default: min slope)")
    p.set_defaults(func=cmd_thm213)

    p = sub.add_parser("sn-model", help="write a finite-depth S_n model")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--depth", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--check", action="store_true", help="also run the property checks")
    p.add_argument("--report", help="property report (default stdout)")
    p.set_defaults(func=cmd_sn_model)

    p = sub.add_parser("plot", help="CSV of a map at breakpoints and grid points")
    p.add_argument("--map", required=True)
    p.add_argument("--resolution", type=int, default=0)
    p.add_argument("--precision", type=int, default=12)
    p.add_argument("--out")
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("verify-props", help="audit the lifted generator")
    p.add_argument("--epsilon", type=rational, required=True)
    p.add_argument("--gamma", type=rational, required=True)
    p.add_argument("--model", default=None)
    p.add_argument("--q", type=int, default=None)
    p.add_argument("--skip-crooked", action="store_true")
    p.add_argument("--report")
    p.set_defaults(func=cmd_verify_props)
    return parser


def _params(args):
    skip = {"func", "manifest", "budget", "candidate_budget", "command"}
    return {k: (fmt(v) if not isinstance(v, (str, int, bool, type(None))) else v)
            for k, v in sorted(vars(args).items()) if k not in skip}


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    if args.budget is None:
        args.budget = default_budget()
    run = RunManifest(args.command, argv, _params(args),
                      budgets={"pieces": args.budget, "candidates": args.candidate_budget})
    t0 = time.perf_counter()
    try:
        code = args.func(args, run)
    except BudgetError as exc:
        print(f"inconclusive: {exc}", file=sys.stderr)
        sys.stderr.write(serialize.dumps({"required": exc.required, "budget": exc.budget,
                                          "report": exc.report}))
        code = EXIT_BUDGET
    except (CrookedMapsError, OSError, ValueError, TypeError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        code = EXIT_INPUT
    run.outcome = _OUTCOME[code]
    run.elapsed = round(time.perf_counter() - t0, 3)
    if args.manifest:
        serialize.write_json(args.manifest, run.to_json())
    return code


def replay(manifest_path):
    """Re-run a manifest's command line; returns the exit code."""
    run = RunManifest.from_json(serialize.read_json(manifest_path))
    argv = [a for a in run.argv]
    if "--manifest" in argv:
        i = argv.index("--manifest")
        del argv[i:i + 2]
    return main(argv)


def entry():
    sys.exit(main())


if __name__ == "__main__":
    entry()
