"""Trace-driven simulation with region timing or an exact direct-mapped cache.

A trace is the sequence of executed blocks together with the concrete byte
offset chosen for each of the block's data accesses.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Mapping

from .cache import CacheConfig
from .layout import MemoryLayout, access_cost
from .program import Program

TYPICAL = "typical"
WORST = "worst"
RANDOM = "random"


class TraceError(ValueError):
    pass


@dataclass(frozen=True)
class TraceStep:
    block: str
    offsets: tuple = ()


@dataclass(frozen=True)
class SimResult:
    cycles: int
    hits: int = 0
    misses: int = 0
    block_cycles: Mapping = field(default_factory=dict)


# -- loop bookkeeping shared by validation and generation ---------------------

class _LoopTracker:
    def __init__(self, p: Program):
        self.p = p
        self.back = sorted(p.back_edges)
        self.bidx = {e: i for i, e in enumerate(self.back)}
        self.by_header = {}
        for i, (u, h) in enumerate(self.back):
            self.by_header.setdefault(h, []).append(i)
        self.loops = p.loops
        self.bounds = [p.flow.loop_bounds[e] for e in self.back]
        # back edge indices to clear when an edge leaves loops
        self.resets = {}
        for u, v in p.edges:
            if (u, v) in self.bidx:
                continue
            clear = []
            for h, body in self.loops.items():
                if u in body and v not in body or v == h:
                    clear.extend(self.by_header[h])
            self.resets[(u, v)] = tuple(clear)

    def initial(self):
        return (0,) * len(self.back)

    def step(self, counters, u, v):
        """Counters after taking u->v, or None if a loop bound forbids it."""
        i = self.bidx.get((u, v))
        if i is not None:
            if counters[i] >= self.bounds[i]:
                return None
            c = list(counters)
            c[i] += 1
            # a back edge may also leave inner loops
            h = v
            for hh, body in self.loops.items():
                if hh != h and u in body and h not in body:
                    for k in self.by_header[hh]:
                        c[k] = 0
            return tuple(c)
        clear = self.resets[(u, v)]
        if not clear or all(counters[k] == 0 for k in clear):
            return counters
        c = list(counters)
        for k in clear:
            c[k] = 0
        return tuple(c)


def validate_trace(p: Program, trace) -> None:
    if not trace or trace[0].block != p.flow.entry:
        raise TraceError("trace must start at entry")
    if trace[-1].block not in p.flow.exits:
        raise TraceError("trace must end at an exit block")
    for i, step in enumerate(trace):
        if step.block not in p.blocks:
            raise TraceError(f"step {i}: unknown block {step.block!r}")
    tracker = _LoopTracker(p)
    counters = tracker.initial()
    for i, step in enumerate(trace):
        b = p.blocks[step.block]
        if len(step.offsets) != len(b.data_accesses):
            raise TraceError(f"step {i}: block {b.id!r} needs {len(b.data_accesses)} offsets")
        for a, off in zip(b.data_accesses, step.offsets):
            if not a.lo <= off <= a.hi or (off - a.lo) % (a.width // 8):
                raise TraceError(f"step {i}: offset {off} outside [{a.lo}, {a.hi}] of {a.target!r}")
        if i + 1 < len(trace):
            nxt = trace[i + 1].block
            if nxt not in b.successors:
                raise TraceError(f"step {i}: {b.id!r} -> {nxt!r} is not a CFG edge")
            counters = tracker.step(counters, b.id, nxt)
            if counters is None:
                raise TraceError(f"step {i}: loop bound of {b.id}->{nxt} exceeded")


# -- simulation ---------------------------------------------------------------

def simulate_flat(p: Program, layout: MemoryLayout, trace) -> SimResult:
    validate_trace(p, trace)
    per_block = {bid: sum(access_cost(layout, e) for e in p.events(bid)) for bid in p.blocks}
    block_cycles = {}
    total = 0
    for step in trace:
        c = per_block[step.block]
        total += c
        block_cycles[step.block] = block_cycles.get(step.block, 0) + c
    return SimResult(total, 0, 0, block_cycles)


def _cache_plan(p: Program, layout: MemoryLayout, line_size: int) -> dict:
    """Per block: list of fixed line numbers, or ``(access index, object start)`` for data."""
    plan = {}
    for bid in p.blocks:
        items = []
        for e in p.events(bid):
            start = layout.start(e.obj)
            if e.is_fetch:
                items.append((start + e.lo) // line_size)
            else:
                items.append((e.access_index, start))
        plan[bid] = items
    return plan


def simulate_cached(p: Program, layout: MemoryLayout, cache: CacheConfig, trace) -> SimResult:
    validate_trace(p, trace)
    plan = _cache_plan(p, layout, cache.line_size)
    n_sets = cache.n_sets
    ls = cache.line_size
    hit_c, miss_c = cache.hit_cycles, cache.miss_cycles
    tags = [None] * n_sets
    hits = misses = 0
    block_cycles = {}
    for step in trace:
        h0, m0 = hits, misses
        offs = step.offsets
        for item in plan[step.block]:
            if type(item) is int:
                line = item
            else:
                line = (item[1] + offs[item[0]]) // ls
            s = line % n_sets
            if tags[s] == line:
                hits += 1
            else:
                misses += 1
                tags[s] = line
        c = (hits - h0) * hit_c + (misses - m0) * miss_c
        block_cycles[step.block] = block_cycles.get(step.block, 0) + c
    return SimResult(hits * hit_c + misses * miss_c, hits, misses, block_cycles)


def access_profile(p: Program, trace) -> dict:
    """Object id -> number of accesses (fetches included) along the trace."""
    per_block = {}
    for bid in p.blocks:
        counts = {}
        for e in p.events(bid):
            counts[e.obj] = counts.get(e.obj, 0) + 1
        per_block[bid] = counts
    total = {oid: 0 for oid in p.objects}
    for step in trace:
        for oid, n in per_block[step.block].items():
            total[oid] += n
    return total


# -- trace generation ---------------------------------------------------------

def parse_policy(text: str):
    """'typical' | 'worst' | 'random:<seed>' -> (kind, seed)."""
    if text in (TYPICAL, WORST):
        return text, None
    kind, _, seed = text.partition(":")
    if kind == RANDOM and seed:
        try:
            return RANDOM, int(seed)
        except ValueError:
            pass
    raise ValueError(f"bad trace policy {text!r}; expected typical, worst or random:<seed>")


class _Walker:
    def __init__(self, p: Program, kind: str, seed):
        self.p = p
        self.kind = kind
        self.tracker = _LoopTracker(p)
        self.memo = {}
        self.rng = random.Random(seed)
        f = p.flow
        src = f.typical_counts if kind == TYPICAL else {}
        self.targets = {}
        for h, idxs in self.tracker.by_header.items():
            self.targets[h] = sum(src.get(self.tracker.back[i], self.tracker.bounds[i]) for i in idxs)

        # search order for feasibility: leave loops first, back edges last
        self.search_order = {}
        for bid, b in p.blocks.items():
            def pref(s, bid=bid):
                leaving = sum(1 for body in p.loops.values() if bid in body and s not in body)
                return ((bid, s) in self.tracker.bidx, -leaving)
            self.search_order[bid] = tuple(sorted(b.successors, key=pref))

    def moves(self, state, order=None):
        node, counters = state
        succs = self.p.blocks[node].successors if order is None else order[node]
        for s in succs:
            c = self.tracker.step(counters, node, s)
            if c is not None:
                yield (s, c)

    def can_finish(self, state) -> bool:
        memo = self.memo
        if state in memo:
            return memo[state]
        exits = self.p.flow.exits
        order = self.search_order
        stack = [[state, iter(self.moves(state, order)), None]]
        while stack:
            frame = stack[-1]
            st, it, pending = frame
            if pending is not None:
                if memo[pending]:
                    memo[st] = True
                    stack.pop()
                    continue
                frame[2] = None
            if st[0] in exits:
                memo[st] = True
                stack.pop()
                continue
            for nxt in it:
                r = memo.get(nxt)
                if r is True:
                    memo[st] = True
                    break
                if r is None:
                    frame[2] = nxt
                    stack.append([nxt, iter(self.moves(nxt, order)), None])
                    break
            else:
                memo[st] = False
            if st in memo:
                stack.pop()
        return memo[state]

    def _loop_done(self, h, counters):
        done = sum(counters[i] for i in self.tracker.by_header[h])
        return done >= self.targets[h]

    def _rank(self, node, counters, succ):
        """2 wanted, 1 neutral, 0 unwanted for reaching per-loop targets."""
        parts = []
        for h, body in self.p.loops.items():
            if node in body and succ not in body:
                parts.append(2 if self._loop_done(h, counters) else 0)
        if (node, succ) in self.tracker.bidx:
            parts.append(0 if self._loop_done(succ, counters) else 2)
        return min(parts) if parts else 1

    def choose(self, node, counters, cands, visits, taken):
        if self.kind == RANDOM:
            return self.rng.choice(cands)
        ranks = [self._rank(node, counters, s) for s, _ in cands]
        top = max(ranks)
        cands = [c for c, r in zip(cands, ranks) if r == top]
        if len(cands) == 1:
            return cands[0]
        f = self.p.flow
        if self.kind == WORST:
            for c in cands:
                if (node, c[0]) in f.worst_hints:
                    return c
            return cands[0]
        succs = self.p.blocks[node].successors
        given = {s: f.branch_probs[(node, s)] for s in succs if (node, s) in f.branch_probs}
        rest = [s for s in succs if s not in given]
        share = (1.0 - sum(given.values())) / len(rest) if rest else 0.0
        n = visits.get(node, 0) + 1

        def deficit(c):
            prob = given.get(c[0], share)
            return prob * n - taken.get((node, c[0]), 0)

        return max(cands, key=deficit)


def generate_trace(p: Program, policy: str = TYPICAL, seed: int | None = None, max_steps: int = 10_000_000):
    """Bounded walk from entry to an exit.

    ``typical`` follows TYPICAL loop counts and PROB branch probabilities
    deterministically; ``worst`` runs every loop to its bound and follows
    WORST hints; ``random:<seed>`` picks uniformly among moves that can still
    reach an exit. Data offsets sweep each access range sequentially
    (uniformly at random for the random policy).
    """
    kind, pseed = parse_policy(policy) if seed is None else (policy, seed)
    w = _Walker(p, kind, pseed)
    counters = w.tracker.initial()
    node = p.flow.entry
    if not w.can_finish((node, counters)):
        raise TraceError("no bounded path from entry to an exit")
    visits, taken = {}, {}
    seq = {}
    steps = []
    exits = p.flow.exits
    while True:
        b = p.blocks[node]
        offsets = []
        for i, a in enumerate(b.data_accesses):
            step = a.width // 8
            span = (a.hi - a.lo) // step + 1
            if kind == RANDOM:
                k = w.rng.randrange(span)
            else:
                k = seq.get((node, i), 0)
                seq[(node, i)] = k + 1
            offsets.append(a.lo + (k % span) * step)
        steps.append(TraceStep(node, tuple(offsets)))
        if node in exits:
            break
        if len(steps) >= max_steps:
            raise TraceError("trace exceeded max_steps")
        cands = [m for m in w.moves((node, counters)) if w.can_finish(m)]
        nxt, counters = w.choose(node, counters, cands, visits, taken)
        visits[node] = visits.get(node, 0) + 1
        taken[(node, nxt)] = taken.get((node, nxt), 0) + 1
        node = nxt
    return tuple(steps)


# -- text formats -------------------------------------------------------------

def format_trace(trace) -> str:
    lines = []
    for s in trace:
        lines.append(s.block + (" " + ",".join(str(o) for o in s.offsets) if s.offsets else ""))
    return "\n".join(lines) + "\n"


def parse_trace(text: str):
    steps = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) > 2:
            raise TraceError(f"line {lineno}: expected '<block> [offset,...]'")
        offsets = ()
        if len(parts) == 2:
            try:
                offsets = tuple(int(x, 0) for x in parts[1].split(","))
            except ValueError:
                raise TraceError(f"line {lineno}: bad offsets {parts[1]!r}") from None
        steps.append(TraceStep(parts[0], offsets))
    return tuple(steps)


def format_sim_result(r: SimResult) -> str:
    lines = ["cycles,hits,misses", f"{r.cycles},{r.hits},{r.misses}", "", "block,cycles"]
    for bid, c in r.block_cycles.items():
        lines.append(f"{bid},{c}")
    return "\n".join(lines) + "\n"
