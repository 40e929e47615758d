"""Command line entry point: ``kei <command> ...``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

from .core import KeiError, load_instance, save_instance, stats
from .schemes import SchemeKind, WeightScheme, scheme_from_json

LOGGER = logging.getLogger("kei")
SCHEMES = [k.value for k in SchemeKind]


def _scheme(args) -> WeightScheme:
    if args.scheme == SchemeKind.CUSTOM.value:
        if not args.scheme_file:
            raise KeiError("--scheme custom needs --scheme-file with the gains")
        return scheme_from_json(json.loads(Path(args.scheme_file).read_text()))
    return WeightScheme.of(args.scheme)


def _emit(payload, out: Optional[str]) -> None:
    text = json.dumps(payload, indent=2) + "\n"
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _env_float(name: str) -> Optional[float]:
    raw = os.environ.get(name)
    return float(raw) if raw else None


# -- commands ----------------------------------------------------------------------


def cmd_solve(args) -> int:
    from .matching import solve_h_max_kei_sbm, solve_objective

    inst = load_instance(args.instance)
    scheme = _scheme(args)
    if args.budget is None:
        alloc, st = solve_objective(inst, scheme, strict_pairs=args.strict_pairs)
    else:
        alloc, st = solve_h_max_kei_sbm(inst, args.budget, scheme, strict_pairs=args.strict_pairs)
    _emit(
        {
            "scheme": scheme.kind.value,
            "budget": args.budget,
            "allocation": alloc.to_json(),
            "stats": {"CO": st.CO, "HC": st.HC, "TR": st.TR},
            "objective": list(scheme.key(inst, alloc)),
            "weight": scheme.score(inst, alloc),
            "suppressants": st.HC,
        },
        args.out,
    )
    return 0


def cmd_ilp_solve(args) -> int:
    from .picef import picef_model, to_lp
    from .solver import solve_ilp

    inst = load_instance(args.instance)
    scheme = _scheme(args)
    model = picef_model(inst, args.cycle_cap, args.chain_cap, args.budget, scheme, args.strict_pairs)
    if args.lp:
        Path(args.lp).write_text(to_lp(model))
    time_limit = args.time_limit if args.time_limit is not None else _env_float("KEI_TIME_LIMIT")
    out = solve_ilp(
        inst,
        args.cycle_cap,
        args.chain_cap,
        args.budget,
        scheme,
        backend=args.backend,
        time_limit=time_limit,
        node_limit=args.node_limit,
        strict_pairs=args.strict_pairs,
        model=model,
    )
    res = out.result
    LOGGER.info("status=%s nodes=%d objective=%d bound=%s", res.status.value, res.nodes, out.objective, res.bound)
    if args.trace:
        with open(args.trace, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["node", "seconds", "incumbent"])
            for node, secs, val in res.trajectory:
                w.writerow([node, f"{secs:.6f}", val])
    st = stats(inst, out.allocation)
    _emit(
        {
            "status": res.status.value,
            "objective": out.objective,
            "bound": res.bound + model.offset,
            "nodes": res.nodes,
            "cycles": [list(c) for c in out.solution.cycles],
            "chains": [{"altruist": a, "vertices": list(vs)} for a, vs in out.solution.chains],
            "suppressants": out.solution.suppressants,
            "allocation": out.allocation.to_json(),
            "stats": {"CO": st.CO, "HC": st.HC, "TR": st.TR},
        },
        args.out,
    )
    return 0


def cmd_gen(args) -> int:
    from .generator import SPARSE_POOL, GeneratorConfig, generate_pool, load_config

    base = load_config(args.config).to_json() if args.config else GeneratorConfig().to_json()
    if args.preset == "sparse":
        base.update(SPARSE_POOL)
    for key, value in (("n_vertices", args.n), ("alpha", args.alpha), ("seed", args.seed)):
        if value is not None:
            base[key] = value
    config = GeneratorConfig.from_json(base)
    save_instance(generate_pool(config), args.out)
    return 0


def cmd_sweep(args) -> int:
    from .experiments import load_spec, run_sweep

    spec = load_spec(args.spec)
    if args.workers is not None:
        spec = type(spec).from_json({**spec.to_json(), "workers": args.workers})
    report = run_sweep(spec, args.out_dir, resume=args.resume)
    if not report.ok:
        LOGGER.error("%d pool(s) failed; see results.csv rows with status 'error'", report.errors)
        return 1
    return 0


def cmd_oracle(args) -> int:
    from .oracle import oracle_optimum

    inst = load_instance(args.instance)
    res = oracle_optimum(
        inst,
        _scheme(args),
        h=args.budget,
        cycle_cap=args.cycle_cap,
        chain_cap=args.chain_cap,
        strict_pairs=args.strict_pairs,
        max_n=args.max_n,
    )
    _emit(
        {
            "objective": list(res.objective),
            "weight": res.score,
            "witness": res.witness.to_json(),
            "optima": res.count,
        },
        args.out,
    )
    return 0


def cmd_export_budgeted(args) -> int:
    from .matching import export_budgeted_matching

    inst = load_instance(args.instance)
    bm = export_budgeted_matching(inst, args.budget, args.target, _scheme(args), args.strict_pairs)
    _emit(bm.to_json(), args.out)
    return 0


def cmd_dot(args) -> int:
    from .graph import build_graph, restrict_compatible_pairs, to_dot
    from .matching import max_weight_perfect_matching

    inst = load_instance(args.instance)
    g = build_graph(inst, _scheme(args))
    if args.strict_pairs:
        g = restrict_compatible_pairs(g, inst)
    m = max_weight_perfect_matching(g) if args.solve else None
    text = to_dot(g, m.edges if m else ())
    if args.out in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(args.out).write_text(text)
    return 0


# -- parser ----------------------------------------------------------------------


def _add_scheme(p: argparse.ArgumentParser, default: Optional[str] = None) -> None:
    p.add_argument("--scheme", choices=SCHEMES, default=default, required=default is None)
    p.add_argument("--scheme-file", help="JSON gains for --scheme custom")


def _add_strict(p: argparse.ArgumentParser) -> None:
    p.add_argument(
        "--strict-pairs",
        action=argparse.BooleanOptionalAction,
        default=True,
        help="keep own-compatible recipients off half-compatible kidneys (default: on)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kei", description="Kidney exchange clearing with immunosuppressants.")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    p = sub.add_parser("solve", help="optimal allocation via bipartite matching")
    p.add_argument("--instance", required=True)
    _add_scheme(p)
    p.add_argument("--budget", type=int, help="suppressant budget (Silver Bullet instances only)")
    _add_strict(p)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("ilp-solve", help="bounded cycles and chains via the integer program")
    p.add_argument("--instance", required=True)
    p.add_argument("--cycle-cap", type=int, required=True)
    p.add_argument("--chain-cap", type=int, required=True)
    p.add_argument("--budget", type=int, help="suppressant budget; omit for none")
    _add_scheme(p, default=SchemeKind.MAX_TR.value)
    p.add_argument("--backend", choices=["bnb", "highs"], default="bnb")
    p.add_argument("--time-limit", type=float, help="seconds (env KEI_TIME_LIMIT)")
    p.add_argument("--node-limit", type=int)
    p.add_argument("--lp", help="also write the model in LP format")
    p.add_argument("--trace", help="write the incumbent trajectory as CSV")
    _add_strict(p)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_ilp_solve)

    p = sub.add_parser("gen", help="generate a synthetic pool")
    p.add_argument("--n", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--config", help="versioned generator config JSON")
    p.add_argument("--preset", choices=["default", "sparse"], default="default")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("sweep", help="budget sweep over generated pools")
    p.add_argument("--spec", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--workers", type=int)
    p.add_argument("--resume", action="store_true", help="keep finished pools from an interrupted run")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("export-budgeted", help="write the equivalent budgeted matching instance")
    p.add_argument("--instance", required=True)
    p.add_argument("--budget", type=int, required=True)
    p.add_argument("--target", type=int, required=True)
    _add_scheme(p, default=SchemeKind.MAX_TR.value)
    p.add_argument("--strict-pairs", action=argparse.BooleanOptionalAction, default=False)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_export_budgeted)

    p = sub.add_parser("dot", help="Graphviz drawing of the exchange graph")
    p.add_argument("--instance", required=True)
    _add_scheme(p, default=SchemeKind.MAX_TR.value)
    _add_strict(p)
    p.add_argument("--solve", action="store_true", help="highlight an optimal matching")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_dot)

    # fixture generation; deliberately left out of the help listing
    p = sub.add_parser("oracle")
    p.add_argument("--instance", required=True)
    _add_scheme(p, default=SchemeKind.MAX_TR.value)
    p.add_argument("--budget", type=int)
    p.add_argument("--cycle-cap", type=int)
    p.add_argument("--chain-cap", type=int)
    p.add_argument("--max-n", type=int, default=10)
    _add_strict(p)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_oracle)
    sub._choices_actions = [a for a in sub._choices_actions if a.dest != "oracle"]
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (KeiError, ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"kei: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
