"""Size sweeps over the bundled benchmarks and the qualitative claim checks."""

from __future__ import annotations

import csv
import io
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from fractions import Fraction
from importlib import resources

from .allocator import build_problem, solve_knapsack
from .cache import CacheConfig
from .ipet import analyze_wcet
from .layout import LayoutConfig, assign_layout
from .program import Program, load_program
from .sim import generate_trace, simulate_cached, simulate_flat

log = logging.getLogger(__name__)

SIZES = (64, 128, 256, 512, 1024, 2048, 4096, 8192)
BENCHMARKS = ("insertion_sort", "multi_sort_like", "codec_like")
SPM = "scratchpad"
CACHE = "cache"
HIERARCHIES = (SPM, CACHE)
CSV_COLUMNS = ("benchmark", "hierarchy", "size", "sim_cycles", "wcet_cycles", "ratio")

# acceptance-gate constants of this artifact
SPM_RATIO_SPREAD = Fraction(110, 100)
CACHE_RATIO_GROWTH = Fraction(3, 2)
CONFLICT_SIM_DROP = Fraction(120, 100)


class IncompleteRows(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentRow:
    benchmark: str
    hierarchy: str
    size: int
    sim_cycles: int | None
    wcet_cycles: int | None
    error: str | None = None

    @property
    def ratio(self) -> Fraction | None:
        if self.error or not self.sim_cycles:
            return None
        return Fraction(self.wcet_cycles, self.sim_cycles)

    def sort_key(self):
        return (self.benchmark, self.hierarchy, self.size)


def load_benchmark(name: str) -> Program:
    text = resources.files("spmwcet.benchmarks").joinpath(f"{name}.prog").read_text()
    return load_program(text)


def parse_sizes(text: str) -> list:
    """'64..8192' (doubling) or a comma-separated list."""
    if ".." in text:
        lo, _, hi = text.partition("..")
        lo, hi = int(lo, 0), int(hi, 0)
        if lo <= 0 or hi < lo:
            raise ValueError(f"bad size range {text!r}")
        out = []
        s = lo
        while s <= hi:
            out.append(s)
            s *= 2
        return out
    return sorted(int(x, 0) for x in text.split(",") if x)


def build_configuration(p: Program, hierarchy: str, size: int, layout_config: LayoutConfig = LayoutConfig()):
    """(layout, cache config or None, allocation or None) for one sweep point."""
    if hierarchy == SPM:
        res = solve_knapsack(build_problem(p, size, alignment=layout_config.alignment))
        cfg = replace(layout_config, spm_capacity=size)
        return assign_layout(p, res.selected, cfg), None, res
    if hierarchy == CACHE:
        return assign_layout(p, (), layout_config), CacheConfig(size), None
    raise ValueError(f"unknown hierarchy {hierarchy!r}")


def _row(name, p, hierarchy, size, trace, layout_config):
    try:
        layout, cache, _ = build_configuration(p, hierarchy, size, layout_config)
        if cache is None:
            sim = simulate_flat(p, layout, trace).cycles
        else:
            sim = simulate_cached(p, layout, cache, trace).cycles
        wcet = analyze_wcet(p, layout, cache).wcet
        return ExperimentRow(name, hierarchy, size, sim, wcet)
    except Exception as exc:  # reported per row, the sweep goes on
        log.error("%s %s %d: %s", name, hierarchy, size, exc)
        return ExperimentRow(name, hierarchy, size, None, None, str(exc))


def _run_one(args):
    return _row(*args)


def run_sweep(program: Program | str, hierarchy: str, sizes=SIZES, *, name: str | None = None,
              trace_policy: str = "typical", layout_config: LayoutConfig = LayoutConfig(),
              jobs: int = 1) -> list:
    """One ExperimentRow per size. The typical trace is simulated in both legs."""
    if isinstance(program, str):
        name = name or program
        program = load_benchmark(program)
    name = name or "program"
    if hierarchy not in HIERARCHIES:
        raise ValueError(f"unknown hierarchy {hierarchy!r}")
    trace = generate_trace(program, trace_policy)
    work = [(name, program, hierarchy, s, trace, layout_config) for s in sizes]
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            rows = list(ex.map(_run_one, work))
    else:
        rows = [_run_one(w) for w in work]
    return sorted(rows, key=ExperimentRow.sort_key)


def run_benchmark(name: str, sizes=SIZES, **kw) -> list:
    p = load_benchmark(name)
    rows = []
    for h in HIERARCHIES:
        rows += run_sweep(p, h, sizes, name=name, **kw)
    return sorted(rows, key=ExperimentRow.sort_key)


# -- reporting ----------------------------------------------------------------

def _fmt_ratio(r) -> str:
    return "" if r is None else f"{float(r):.3f}"


def report(rows, fmt: str = "csv") -> str:
    if not rows:
        raise ValueError("no rows to report")
    rows = sorted(rows, key=ExperimentRow.sort_key)
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in rows:
            w.writerow([r.benchmark, r.hierarchy, r.size,
                        "" if r.sim_cycles is None else r.sim_cycles,
                        "" if r.wcet_cycles is None else r.wcet_cycles,
                        _fmt_ratio(r.ratio)])
        return buf.getvalue()
    if fmt == "table":
        header = ("benchmark", "hierarchy", "size", "sim_cycles", "wcet_cycles", "sim", "wcet/sim")
        body = []
        for r in rows:
            if r.error:
                body.append((r.benchmark, r.hierarchy, str(r.size), "-", "-", "-", f"error: {r.error}"))
            else:
                body.append((r.benchmark, r.hierarchy, str(r.size), str(r.sim_cycles),
                             str(r.wcet_cycles), "1.000", _fmt_ratio(r.ratio)))
        widths = [max(len(x) for x in col) for col in zip(header, *body)]
        lines = ["  ".join(c.rjust(w) if i >= 2 else c.ljust(w) for i, (c, w) in enumerate(zip(row, widths)))
                 for row in [header] + body]
        return "\n".join(line.rstrip() for line in lines) + "\n"
    raise ValueError(f"unknown report format {fmt!r}")


def parse_csv(text: str) -> list:
    reader = csv.DictReader(io.StringIO(text))
    if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
        raise ValueError(f"expected columns {','.join(CSV_COLUMNS)}")
    rows = []
    for rec in reader:
        sim, wcet = rec["sim_cycles"], rec["wcet_cycles"]
        err = None if sim and wcet else "missing values"
        rows.append(ExperimentRow(rec["benchmark"], rec["hierarchy"], int(rec["size"]),
                                  int(sim) if sim else None, int(wcet) if wcet else None, err))
    return rows


# -- claims -------------------------------------------------------------------

@dataclass(frozen=True)
class Claim:
    name: str
    benchmark: str
    passed: bool
    detail: str
    applicable: bool = True

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        if not self.applicable:
            status = "N/A "
        return f"{status} {self.name} [{self.benchmark}] {self.detail}"


def check_claims(rows) -> list:
    """Scratchpad ratio constancy (C1), cache ratio growth (C2), safety (C3)."""
    by_bench = {}
    for r in rows:
        by_bench.setdefault(r.benchmark, {}).setdefault(r.hierarchy, {})[r.size] = r
    if not by_bench:
        raise IncompleteRows("incomplete: no rows")
    claims = []
    for bench in sorted(by_bench):
        legs = by_bench[bench]
        for h in HIERARCHIES:
            if h not in legs:
                raise IncompleteRows(f"incomplete: missing {h} leg for {bench}")
            bad = [r for r in legs[h].values() if r.error]
            if bad:
                raise IncompleteRows(f"incomplete: {bench} {h} {bad[0].size} failed: {bad[0].error}")

        spm = [legs[SPM][s].ratio for s in sorted(legs[SPM])]
        spread = max(spm) / min(spm)
        claims.append(Claim("C1 scratchpad ratio constant", bench, spread <= SPM_RATIO_SPREAD,
                            f"max/min ratio = {float(spread):.3f} (limit {float(SPM_RATIO_SPREAD):.2f})"))

        cache = legs[CACHE]
        if 1024 not in cache or 8192 not in cache:
            raise IncompleteRows(f"incomplete: cache leg of {bench} needs sizes 1024 and 8192")
        drop = Fraction(cache[1024].sim_cycles, cache[8192].sim_cycles)
        big = [cache[s].ratio for s in sorted(cache) if s >= 256]
        growth = cache[8192].ratio / min(big)
        conflicting = drop >= CONFLICT_SIM_DROP
        claims.append(Claim("C2 cache ratio grows", bench, not conflicting or growth >= CACHE_RATIO_GROWTH,
                            f"ratio(8K)/min ratio(>=256) = {float(growth):.3f} (limit "
                            f"{float(CACHE_RATIO_GROWTH):.2f}); sim(1K)/sim(8K) = {float(drop):.3f}",
                            applicable=conflicting))

        ratios = [r.ratio for leg in legs.values() for r in leg.values()]
        worst = min(ratios)
        claims.append(Claim("C3 wcet >= sim", bench, worst >= 1, f"min ratio = {float(worst):.3f}"))
    return claims
