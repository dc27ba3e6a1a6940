"""WCET bound by implicit path enumeration over the whole-program CFG."""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

from . import lp
from .cache import CacheConfig, classify_accesses, wcet_event_cost
from .layout import MemoryLayout, access_cost
from .program import Program


SINK = ("sink", "exit")


class IpetError(ValueError):
    pass


@dataclass(frozen=True)
class IpetModel:
    variables: tuple  # ("block", id) | ("edge", (u, v)) | SINK
    constraints: tuple  # lp.Constraint over variable indices
    objective: Mapping  # variable index -> cost

    def index(self, var) -> int:
        return self.variables.index(var)


@dataclass(frozen=True)
class WcetResult:
    wcet: int
    witness: Mapping  # block id -> execution count
    edge_counts: Mapping


def flat_block_costs(p: Program, layout: MemoryLayout) -> dict:
    return {bid: sum(access_cost(layout, e) for e in p.events(bid)) for bid in p.blocks}


def cache_block_costs(p: Program, classification: Mapping, config: CacheConfig) -> dict:
    costs = {}
    for bid in p.blocks:
        if bid not in classification:
            raise IpetError(f"no classification for block {bid!r}")
        costs[bid] = sum(wcet_event_cost(c, config) for c in classification[bid])
    return costs


def build_block_costs(p: Program, layout: MemoryLayout, cache: CacheConfig | None = None,
                      classification: Mapping | None = None) -> dict:
    """Scratchpad/main region timing without ``cache``; hit/miss timing with it."""
    if cache is None:
        return flat_block_costs(p, layout)
    if classification is None:
        classification = classify_accesses(p, layout, cache)
    return cache_block_costs(p, classification, cache)


def build_ipet(p: Program, costs: Mapping) -> IpetModel:
    variables = [("block", b) for b in p.blocks]
    variables += [("edge", e) for e in p.edges]
    # exit blocks have no successors, so one virtual sink edge collects them all
    variables.append(SINK)
    idx = {v: i for i, v in enumerate(variables)}
    entry = p.flow.entry
    cons = []
    for bid, b in p.blocks.items():
        xb = idx[("block", bid)]
        inflow = {xb: 1}
        for q in p.predecessors[bid]:
            j = idx[("edge", (q, bid))]
            inflow[j] = inflow.get(j, 0) - 1
        cons.append(lp.Constraint(inflow, "==", Fraction(1 if bid == entry else 0)))
        if bid in p.flow.exits:
            continue
        outflow = {xb: 1}
        for s in b.successors:
            outflow[idx[("edge", (bid, s))]] = -1
        cons.append(lp.Constraint(outflow, "==", Fraction(0)))
    sink = {idx[("block", x)]: 1 for x in p.flow.exits}
    sink[idx[SINK]] = -1
    cons.append(lp.Constraint(sink, "==", Fraction(0)))
    cons.append(lp.Constraint({idx[SINK]: 1}, "==", Fraction(1)))
    for (u, h) in sorted(p.back_edges):
        if (u, h) not in p.flow.loop_bounds:
            raise IpetError(f"unbounded back edge {u}->{h}")
        n = p.flow.loop_bounds[(u, h)]
        row = {idx[("edge", (u, h))]: 1}
        for q in p.predecessors[h]:
            if (q, h) not in p.back_edges:
                row[idx[("edge", (q, h))]] = -n
        # the program start counts as one entry into a header at the entry block
        cons.append(lp.Constraint(row, "<=", Fraction(n if h == entry else 0)))
    objective = {idx[("block", b)]: costs[b] for b in p.blocks}
    return IpetModel(tuple(variables), tuple(cons), objective)


def solve_ipet(m: IpetModel) -> WcetResult:
    try:
        sol = lp.solve_ilp(len(m.variables), m.objective, m.constraints)
    except lp.Infeasible as exc:
        raise IpetError(f"infeasible IPET model: {exc}") from None
    except lp.Unbounded as exc:
        raise IpetError(f"unbounded IPET model (missing loop bound?): {exc}") from None
    for con in m.constraints:
        if not con.holds(sol.x):
            raise IpetError("solver returned a witness violating the model")
    counts = [int(v) for v in sol.x]
    wcet = sum(c * counts[j] for j, c in m.objective.items())
    if wcet != sol.value:
        raise IpetError("witness does not reproduce the objective value")
    witness = {v[1]: counts[i] for i, v in enumerate(m.variables) if v[0] == "block"}
    edges = {v[1]: counts[i] for i, v in enumerate(m.variables) if v[0] == "edge"}
    return WcetResult(wcet, witness, edges)


def analyze_wcet(p: Program, layout: MemoryLayout, cache: CacheConfig | None = None) -> WcetResult:
    return solve_ipet(build_ipet(p, build_block_costs(p, layout, cache)))


def _lp_name(var) -> str:
    kind, key = var
    text = f"{key[0]}__{key[1]}" if kind == "edge" else key
    return kind[0] + "_" + re.sub(r"[^A-Za-z0-9_]", "_", text)


def format_lp(m: IpetModel) -> str:
    """CPLEX LP text, for cross-checking with external solvers."""
    names = [_lp_name(v) for v in m.variables]

    def expr(coeffs):
        parts = []
        for j, c in sorted(coeffs.items()):
            c = Fraction(c)
            sign = "-" if c < 0 else "+"
            parts.append(f"{sign} {abs(c)} {names[j]}")
        text = " ".join(parts)
        return text[2:] if text.startswith("+ ") else text

    out = ["\\ IPET model", "Maximize", " wcet: " + (expr(m.objective) or "0"), "Subject To"]
    for i, c in enumerate(m.constraints):
        sense = {"<=": "<=", ">=": ">=", "==": "="}[c.sense]
        out.append(f" c{i}: {expr(c.coeffs)} {sense} {c.rhs}")
    out.append("General")
    out.append(" " + " ".join(names))
    out.append("End")
    return "\n".join(out) + "\n"
