"""Command-line driver: analyze, sweep, simulate, claims."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import experiment as ex
from .cache import classify_accesses, dump_classification
from .ipet import analyze_wcet, build_block_costs, build_ipet, format_lp
from .layout import emit_annotation
from .program import ProgramError, load_program
from .sim import (TraceError, format_sim_result, format_trace, generate_trace, parse_trace,
                  simulate_cached, simulate_flat, validate_trace)

log = logging.getLogger("spmwcet")

HIERARCHY_NAMES = {"spm": ex.SPM, "scratchpad": ex.SPM, "cache": ex.CACHE}


def resolve_program(ref: str):
    """A path to a program file, or the name of a bundled benchmark."""
    path = Path(ref)
    if path.exists():
        return path.stem, load_program(path.read_text())
    if ref in ex.BENCHMARKS:
        return ref, ex.load_benchmark(ref)
    raise FileNotFoundError(f"no program file or bundled benchmark named {ref!r}")


def _write(text: str, out: str | None):
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _hierarchy(text: str) -> str:
    try:
        return HIERARCHY_NAMES[text]
    except KeyError:
        raise argparse.ArgumentTypeError(f"unknown hierarchy {text!r} (spm|cache)") from None


def _sizes(text: str):
    try:
        sizes = ex.parse_sizes(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None
    if not sizes:
        raise argparse.ArgumentTypeError("empty size list")
    return sizes


def cmd_analyze(args) -> int:
    name, p = resolve_program(args.program)
    layout, cache, alloc = ex.build_configuration(p, args.hierarchy, args.size)
    res = analyze_wcet(p, layout, cache)
    trace = generate_trace(p, args.trace_policy)
    if cache is None:
        sim = simulate_flat(p, layout, trace)
    else:
        sim = simulate_cached(p, layout, cache, trace)
    row = ex.ExperimentRow(name, args.hierarchy, args.size, sim.cycles, res.wcet)
    lines = [f"program: {name}", f"hierarchy: {args.hierarchy}", f"size: {args.size}"]
    if alloc is not None:
        lines.append("scratchpad: " + (" ".join(sorted(alloc.selected)) or "(empty)")
                     + f" [{alloc.total_size} bytes, benefit {alloc.total_benefit}]")
    lines += [f"wcet_cycles: {res.wcet}", f"sim_cycles: {sim.cycles} ({args.trace_policy} trace)",
              f"ratio: {float(row.ratio):.3f}" if row.ratio is not None else "ratio: -"]
    _write("\n".join(lines) + "\n", args.out)
    if args.dump_lp:
        Path(args.dump_lp).write_text(format_lp(build_ipet(p, build_block_costs(p, layout, cache))))
    if args.dump_annotation:
        Path(args.dump_annotation).write_text(emit_annotation(layout, p))
    if args.dump_classification:
        if cache is None:
            log.warning("--dump-classification only applies to the cache hierarchy")
        else:
            Path(args.dump_classification).write_text(dump_classification(classify_accesses(p, layout, cache)))
    return 0


def cmd_simulate(args) -> int:
    name, p = resolve_program(args.program)
    layout, cache, _ = ex.build_configuration(p, args.hierarchy, args.size)
    if args.trace:
        trace = parse_trace(Path(args.trace).read_text())
        validate_trace(p, trace)
    else:
        trace = generate_trace(p, args.trace_policy)
    if args.dump_trace:
        Path(args.dump_trace).write_text(format_trace(trace))
    if cache is None:
        sim = simulate_flat(p, layout, trace)
    else:
        sim = simulate_cached(p, layout, cache, trace)
    _write(format_sim_result(sim), args.out)
    return 0


def _programs(refs):
    return [resolve_program(r) for r in (refs or ex.BENCHMARKS)]


def _sweep_rows(args):
    rows = []
    hierarchies = [args.hierarchy] if args.hierarchy else list(ex.HIERARCHIES)
    for name, p in _programs(args.program):
        for h in hierarchies:
            rows += ex.run_sweep(p, h, args.sizes, name=name, trace_policy=args.trace_policy, jobs=args.jobs)
    return sorted(rows, key=ex.ExperimentRow.sort_key)


def cmd_sweep(args) -> int:
    rows = _sweep_rows(args)
    _write(ex.report(rows, args.format), args.out)
    failed = [r for r in rows if r.error]
    for r in failed:
        log.error("row %s %s %d failed: %s", r.benchmark, r.hierarchy, r.size, r.error)
    return 1 if failed else 0


def cmd_claims(args) -> int:
    if args.input:
        rows = ex.parse_csv(Path(args.input).read_text())
    else:
        args.hierarchy = None
        rows = _sweep_rows(args)
    claims = ex.check_claims(rows)
    _write("".join(c.line() + "\n" for c in claims), args.out)
    return 0 if all(c.passed for c in claims) else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="spmwcet", description="Scratchpad vs cache WCET experiments")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(sp, many=False):
        if many:
            sp.add_argument("--program", action="append",
                            help="program file or bundled benchmark (repeatable; default: all bundled)")
        else:
            sp.add_argument("--program", required=True, help="program file or bundled benchmark name")
        sp.add_argument("--trace-policy", default="typical", help="typical | worst | random:<seed>")
        sp.add_argument("--out", help="output file (default stdout)")

    a = sub.add_parser("analyze", help="WCET and simulation for one configuration")
    common(a)
    a.add_argument("--hierarchy", type=_hierarchy, default=ex.SPM)
    a.add_argument("--size", type=lambda s: int(s, 0), required=True)
    a.add_argument("--dump-lp", metavar="FILE")
    a.add_argument("--dump-annotation", metavar="FILE")
    a.add_argument("--dump-classification", metavar="FILE")
    a.set_defaults(func=cmd_analyze)

    s = sub.add_parser("simulate", help="replay or generate a trace and simulate it")
    common(s)
    s.add_argument("--hierarchy", type=_hierarchy, default=ex.SPM)
    s.add_argument("--size", type=lambda v: int(v, 0), required=True)
    s.add_argument("--trace", metavar="FILE", help="trace file to replay instead of generating one")
    s.add_argument("--dump-trace", metavar="FILE")
    s.set_defaults(func=cmd_simulate)

    w = sub.add_parser("sweep", help="size sweep, CSV or table report")
    common(w, many=True)
    w.add_argument("--hierarchy", type=_hierarchy, default=None, help="spm | cache (default both)")
    w.add_argument("--sizes", type=_sizes, default=list(ex.SIZES))
    w.add_argument("--format", choices=("csv", "table"), default="csv")
    w.add_argument("--jobs", type=int, default=1)
    w.set_defaults(func=cmd_sweep)

    c = sub.add_parser("claims", help="check the ratio claims on sweep rows")
    common(c, many=True)
    c.add_argument("--input", metavar="CSV", help="rows from a previous sweep (default: run the sweep)")
    c.add_argument("--sizes", type=_sizes, default=list(ex.SIZES))
    c.add_argument("--jobs", type=int, default=1)
    c.set_defaults(func=cmd_claims)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except (ProgramError, TraceError, OSError, ValueError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
    return 2


if __name__ == "__main__":
    sys.exit(main())
