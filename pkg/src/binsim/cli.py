"""Command line entry point: ``binsim <command> ...``.

Exit status is 0 on success, 2 when an audit finds an invariant violation
and 1 on usage or I/O errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Sequence

from . import experiments as ex
from .allocators import Algorithm, SimConfig
from .bounds import EMPIRICAL_LABEL, BoundParams, beta_sequence, heavy_probe_bound, janson_tail
from .coupling import all_majorized, couple_alg_greedyk, couple_firstdiff_greedy2

EXIT_OK, EXIT_ERROR, EXIT_VIOLATION = 0, 1, 2

log = logging.getLogger("binsim")


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # argparse would exit with 2
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _u64(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return value


def _write(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
        return
    try:
        Path(out).write_text(text)
    except OSError as exc:
        raise OSError(f"cannot write {out}: {exc.strerror}") from exc


def _dump(doc: dict, out: str | None) -> None:
    _write(json.dumps(doc, indent=2, sort_keys=True) + "\n", out)


def _emit(summaries, args) -> None:
    if args.out in (None, "-"):
        if args.format == "csv":
            sys.stdout.write(ex.csv_text(summaries))
        else:
            _dump(ex.json_doc(summaries, timing=args.timing), None)
    else:
        ex.emit_results(summaries, args.out, args.format, timing=args.timing)
    for s in summaries:
        log.info("%s n=%d: %.2fs", s.config.algorithm.value, s.config.n, s.wall_time)


def cmd_simulate(args) -> int:
    algo = Algorithm(args.algo)
    m = args.n if args.m is None else args.m
    d = args.d if args.d is not None else (1 if algo is Algorithm.UNIFORM else 2)
    cell = ex.GridCell(algo, args.n, m, d, args.max_probes)
    config, requested = cell.to_config(args.seed)
    if args.distinct_probes:
        config = SimConfig(**{**config.__dict__, "distinct_probes": True})
    summary = ex.run_cell(config, args.trials, args.workers, n_requested=requested)
    _emit([summary], args)
    if args.probe_profile:
        prof = ex.probe_profile(config, args.trials)
        _write(ex.profile_csv_text(prof, config.n), args.probe_profile)
    return EXIT_OK


def cmd_table1(args) -> int:
    if args.grid:
        cells = ex.load_grid(args.grid)
    else:
        sizes = [2**e for e in args.log_sizes]
        cells = ex.table1_cells(sizes)
    grid = ex.ExperimentGrid(cells, trials=args.trials, seed=args.seed, format=args.format)
    _emit(ex.run_table1(grid, args.workers), args)
    return EXIT_OK


def cmd_couple(args) -> int:
    runs = []
    if args.against == "greedy2":
        label = f"firstdiff[k={args.max_probes}] vs greedy[2]"
    else:
        label = f"greedy[{args.max_probes}] vs {args.alg}"
    for i in range(args.seeds):
        seed = args.seed + i
        if args.against == "greedy2":
            trace = couple_firstdiff_greedy2(
                args.n, args.steps, args.d, args.max_probes, seed, keep_vectors=False
            )
        else:
            trace = couple_alg_greedyk(
                args.alg, args.n, args.steps, args.max_probes, seed, keep_vectors=False
            )
        runs.append({"seed": seed, "majorized": [t.majorized for t in trace]})
    failures = [r["seed"] for r in runs if not all(r["majorized"])]
    doc = {
        "coupling": label,
        "n": args.n,
        "steps": args.steps,
        "seeds": args.seeds,
        "all_majorized": not failures,
        "failing_seeds": failures,
        "runs": runs,
    }
    _dump(doc, args.out)
    return EXIT_VIOLATION if failures else EXIT_OK


def cmd_bounds(args) -> int:
    params = BoundParams(lam=args.lam, a=args.a, b_const=args.b, gamma=args.gamma)
    doc: dict = {}
    if params.is_default:
        doc["label"] = EMPIRICAL_LABEL
    beta = beta_sequence(args.n, args.k)
    doc["beta"] = {
        "n": args.n,
        "k": args.k,
        "values": beta.values,
        "floor": beta.floor,
        "floor_index": beta.floor_index,
        "i_star": beta.i_star,
        "max_load_bound": beta.i_star + 4,
    }
    if args.janson:
        p, mu, lam = args.janson
        doc["janson"] = {"p_min": p, "mu": mu, "Lambda": lam, "bound": janson_tail(p, mu, lam)}
    if args.m:
        hb = heavy_probe_bound(args.m, args.n, args.k, params)
        doc["heavy"] = {
            "m": args.m,
            "total": hb.total,
            "per_ball": hb.per_ball,
            "intermediate": hb.intermediate,
            "regime_min_m": hb.regime_min_m,
            "in_regime": hb.in_regime,
        }
    if args.estimate_lambda:
        ns = [2**e for e in args.estimate_lambda]
        doc["lambda_estimate"] = ex.estimate_lambda(ns, rounds=16, trials=10, seed=args.seed)
    _dump(doc, args.out)
    return EXIT_OK


def cmd_budget(args) -> int:
    m = args.n if args.m is None else args.m
    config = SimConfig(n=args.n, m=m, algorithm=Algorithm.FIRSTDIFF, d=args.d,
                       k=args.max_probes, seed=args.seed)
    report = ex.probe_budget_report(config, args.trials, args.workers)
    _dump(report.as_dict(), args.out)
    return EXIT_VIOLATION if report.violation else EXIT_OK


def cmd_heavy(args) -> int:
    report = ex.heavy_gap_report(args.n, args.m, args.d, args.max_probes, args.trials,
                                 c=args.c, seed=args.seed, workers=args.workers)
    _dump(report.as_dict(), args.out)
    return EXIT_OK


def cmd_audit(args) -> int:
    m = 16 * args.n if args.m is None else args.m
    audits = ex.audit_runs(args.n, m, args.max_probes, args.seeds, seed=args.seed)
    dup = sum(len(a["duplicates"]) for a in audits)
    _dump({"n": args.n, "m": m, "k": args.max_probes, "duplicates": dup, "runs": audits}, args.out)
    return EXIT_VIOLATION if dup else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="binsim", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, *, fmt: bool = False, workers: bool = True):
        sp.add_argument("--seed", type=_u64, default=0)
        sp.add_argument("--out", help="output path (default: stdout)")
        if workers:
            sp.add_argument("--workers", type=int, default=1)
        if fmt:
            sp.add_argument("--format", choices=["csv", "json"], default="csv")
            sp.add_argument("--timing", action="store_true", help="include wall times in JSON")

    sp = sub.add_parser("simulate", help="run trials of one configuration")
    sp.add_argument("--algo", choices=[a.value for a in Algorithm], required=True)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--m", type=int)
    sp.add_argument("--d", type=int)
    sp.add_argument("--max-probes", type=int, default=3, help="FirstDiff probe cap k")
    sp.add_argument("--trials", type=int, default=1)
    sp.add_argument("--distinct-probes", action="store_true",
                    help="FirstDiff: never probe the same bin twice for one ball")
    sp.add_argument("--probe-profile", metavar="PATH",
                    help="write mean probes per ball index as CSV")
    common(sp, fmt=True)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("table1", help="max-load histograms for n = m")
    sp.add_argument("--grid", help="grid file (key=value lines or JSON array)")
    sp.add_argument("--log-sizes", type=int, nargs="+", default=[8, 12, 16],
                    help="log2 n values for the built-in grid")
    sp.add_argument("--trials", type=int, default=100)
    common(sp, fmt=True)
    sp.set_defaults(func=cmd_table1)

    sp = sub.add_parser("couple", help="rank-coupled majorization check")
    sp.add_argument("--against", choices=["greedy2", "greedyk"], default="greedy2")
    sp.add_argument("--alg", choices=["uniform", "greedy", "firstdiff"], default="firstdiff",
                    help="process compared with greedy[k]")
    sp.add_argument("--n", type=int, default=64)
    sp.add_argument("--steps", type=int, default=640)
    sp.add_argument("--seeds", type=int, default=100)
    sp.add_argument("--d", type=int, default=4)
    sp.add_argument("--max-probes", type=int, default=6)
    common(sp, workers=False)
    sp.set_defaults(func=cmd_couple)

    sp = sub.add_parser("bounds", help="beta sequence, Janson and heavy probe bounds")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--k", type=int, required=True)
    sp.add_argument("--m", type=int)
    sp.add_argument("--janson", type=float, nargs=3, metavar=("P_MIN", "MU", "LAMBDA"))
    sp.add_argument("--lambda", dest="lam", type=float, default=4.0)
    sp.add_argument("--a", type=float, default=0.5)
    sp.add_argument("--b", type=float, default=4.0)
    sp.add_argument("--gamma", type=int, default=15)
    sp.add_argument("--estimate-lambda", type=int, nargs="+", metavar="LOG2_N",
                    help="estimate lambda from FirstDiff gaps at these sizes")
    common(sp, workers=False)
    sp.set_defaults(func=cmd_bounds)

    sp = sub.add_parser("budget", help="FirstDiff probes per ball")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--m", type=int)
    sp.add_argument("--d", type=int, required=True)
    sp.add_argument("--max-probes", type=int, required=True)
    sp.add_argument("--trials", type=int, default=20)
    common(sp)
    sp.set_defaults(func=cmd_budget)

    sp = sub.add_parser("heavy", help="final gap distribution for m >> n")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--m", type=int, required=True)
    sp.add_argument("--d", type=int, required=True)
    sp.add_argument("--max-probes", type=int, required=True)
    sp.add_argument("--trials", type=int, default=50)
    sp.add_argument("--c", type=float, default=1.0)
    common(sp)
    sp.set_defaults(func=cmd_heavy)

    sp = sub.add_parser("audit", help="canonical-configuration uniqueness audit")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--m", type=int)
    sp.add_argument("--max-probes", type=int, default=6)
    sp.add_argument("--seeds", type=int, default=100)
    common(sp, workers=False)
    sp.set_defaults(func=cmd_audit)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"binsim: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
