"""Brute-force reference implementations used by the tests.

Nothing here imports the analysis code it checks: graphs are read straight
from the Program's blocks and all answers come from enumeration.
"""

from __future__ import annotations

import bisect
import itertools
import sys


def brute_knapsack(items, capacity):
    """items: [(id, size, benefit)] -> best benefit by trying every subset."""
    best = 0
    for r in range(len(items) + 1):
        for combo in itertools.combinations(items, r):
            if sum(i[1] for i in combo) <= capacity:
                best = max(best, sum(i[2] for i in combo))
    return best


def _all_subsets(items):
    sums = [(0, 0)]
    for _, size, benefit in items:
        sums += [(s + size, b + benefit) for s, b in sums]
    return sums


def split_knapsack(items, capacity):
    """Exhaustive over both halves' subsets, paired by size; exact for any item count."""
    half = len(items) // 2
    left = _all_subsets(items[:half])
    right = sorted(_all_subsets(items[half:]))
    sizes = [s for s, _ in right]
    best_upto, best = [], 0
    for _, b in right:
        best = max(best, b)
        best_upto.append(best)
    out = 0
    for s, b in left:
        k = bisect.bisect_right(sizes, capacity - s)
        if k:
            out = max(out, b + best_upto[k - 1])
    return out


def successors(p):
    return {b.id: tuple(b.successors) for b in p.blocks.values()}


def reachable(succ, start, removed=None):
    if start == removed:
        return set()
    seen = {start}
    stack = [start]
    while stack:
        n = stack.pop()
        for s in succ[n]:
            if s != removed and s not in seen:
                seen.add(s)
                stack.append(s)
    return seen


def dominators(p):
    """d dominates n iff n becomes unreachable from the entry once d is removed."""
    succ = successors(p)
    entry = p.flow.entry
    nodes = list(succ)
    dom = {}
    for n in nodes:
        dom[n] = {d for d in nodes if d == n or n not in reachable(succ, entry, removed=d)}
    return dom


def back_edges(p):
    dom = dominators(p)
    return {(u, v) for u, ss in successors(p).items() for v in ss if v in dom[u]}


def has_cycle(succ, skip=frozenset()):
    """Exhaustive DFS cycle check on the graph minus the ``skip`` edges."""
    color = {}
    sys.setrecursionlimit(max(10_000, sys.getrecursionlimit()))

    def visit(n):
        color[n] = 1
        for s in succ[n]:
            if (n, s) in skip:
                continue
            c = color.get(s)
            if c == 1 or c is None and visit(s):
                return True
        color[n] = 2
        return False

    return any(color.get(n) is None and visit(n) for n in succ)


def cycle_edges(succ):
    """Edges lying on at least one cycle: u->v with u reachable from v."""
    return {(u, v) for u, ss in succ.items() for v in ss if u in reachable(succ, v)}


def _loop_bodies(p, backs):
    succ = successors(p)
    pred = {n: [] for n in succ}
    for u, ss in succ.items():
        for v in ss:
            pred[v].append(u)
    bodies = {}
    for u, h in backs:
        body = {h}
        stack = [u]
        while stack:
            n = stack.pop()
            if n not in body:
                body.add(n)
                stack.extend(pred[n])
        bodies.setdefault(h, set()).update(body)
    return bodies


class PathSpace:
    """All bounded paths from entry to an exit.

    A back edge (u, h) may be taken at most ``bound`` times per entry into
    the loop at h; an entry is any non-back edge into h (or the program
    start when h is the entry block). Leaving a loop and coming back is a
    new entry, so its counters restart.
    """

    def __init__(self, p):
        self.p = p
        self.succ = successors(p)
        self.backs = sorted(back_edges(p))
        self.bounds = [p.flow.loop_bounds[e] for e in self.backs]
        self.bidx = {e: i for i, e in enumerate(self.backs)}
        self.header_edges = {}
        for i, (_, h) in enumerate(self.backs):
            self.header_edges.setdefault(h, []).append(i)
        self.bodies = _loop_bodies(p, self.backs)
        self.exits = set(p.flow.exits)

    def step(self, counters, u, v):
        c = list(counters)
        i = self.bidx.get((u, v))
        if i is not None:
            if c[i] >= self.bounds[i]:
                return None
            c[i] += 1
        else:
            for k in self.header_edges.get(v, ()):
                c[k] = 0
        # loops left by this edge forget their counters
        for h, body in self.bodies.items():
            if u in body and v not in body:
                for k in self.header_edges[h]:
                    c[k] = 0
        return tuple(c)

    def count(self, cap=None):
        """Number of bounded paths (saturating at ``cap``), by memoized post-order walk."""
        memo = {}
        start = (self.p.flow.entry, (0,) * len(self.backs))
        stack = [(start, False)]
        while stack:
            state, expanded = stack.pop()
            if state in memo:
                continue
            n, counters = state
            nexts = []
            for s in self.succ[n]:
                c = self.step(counters, n, s)
                if c is not None:
                    nexts.append((s, c))
            if not expanded:
                stack.append((state, True))
                stack.extend((m, False) for m in nexts if m not in memo)
                continue
            total = (1 if n in self.exits else 0) + sum(memo[m] for m in nexts)
            memo[state] = total if cap is None else min(total, cap)
        return memo[start]

    def paths(self):
        """Explicit enumeration, one block list per path."""
        stack = [(self.p.flow.entry, (0,) * len(self.backs), (self.p.flow.entry,))]
        while stack:
            n, counters, path = stack.pop()
            if n in self.exits:
                yield path
            for s in self.succ[n]:
                c = self.step(counters, n, s)
                if c is not None:
                    stack.append((s, c, path + (s,)))


def max_path_cost(p, costs, limit=10_000):
    """Exhaustive maximum over bounded paths; None if there are more than ``limit``."""
    space = PathSpace(p)
    if space.count(cap=limit + 1) > limit:
        return None
    return max(sum(costs[b] for b in path) for path in space.paths())


def dag_longest_path(p, costs):
    """Topological-order dynamic programming on an acyclic CFG."""
    succ = successors(p)
    indeg = {n: 0 for n in succ}
    for ss in succ.values():
        for s in ss:
            indeg[s] += 1
    order = []
    ready = [n for n, d in indeg.items() if d == 0]
    while ready:
        n = ready.pop()
        order.append(n)
        for s in succ[n]:
            indeg[s] -= 1
            if indeg[s] == 0:
                ready.append(s)
    assert len(order) == len(succ), "graph has a cycle"
    best = {n: None for n in succ}
    best[p.flow.entry] = costs[p.flow.entry]
    for n in order:
        if best[n] is None:
            continue
        for s in succ[n]:
            cand = best[n] + costs[s]
            if best[s] is None or cand > best[s]:
                best[s] = cand
    return max(best[x] for x in p.flow.exits if best[x] is not None)


def code_offsets(p):
    """Blocks are laid out back to back inside their owner, in file order."""
    used, out = {}, {}
    for b in p.blocks.values():
        out[b.id] = used.get(b.owner, 0)
        used[b.owner] = out[b.id] + 2 * b.instr_count
    return out


def concrete_events(p, layout, step, offsets=None):
    """(address, width, is_fetch) per event of one trace step, in program order."""
    b = p.blocks[step.block]
    base = layout.start(b.owner)
    off = (offsets or code_offsets(p))[b.id]
    by_pos = {}
    for i, a in enumerate(b.data_accesses):
        by_pos.setdefault(a.pos, []).append(i)
    out = []
    for k in range(b.instr_count + 1):
        for i in by_pos.get(k, ()):
            a = b.data_accesses[i]
            out.append((layout.start(a.target) + step.offsets[i], a.width, False))
        if k < b.instr_count:
            out.append((base + off + 2 * k, 16, True))
    return out


def cache_replay(p, layout, trace, capacity, line_size=16):
    """Exact direct-mapped replay: list of (block, event index, hit) per event."""
    n_sets = capacity // line_size
    tags = {}
    out = []
    offsets = code_offsets(p)
    for step in trace:
        for idx, (addr, _, _) in enumerate(concrete_events(p, layout, step, offsets)):
            line = addr // line_size
            s = line % n_sets
            hit = tags.get(s) == line
            tags[s] = line
            out.append((step.block, idx, hit))
    return out


def flat_cycles(p, layout, trace, main=None, spm=None):
    main = main or {8: 2, 16: 2, 32: 4}
    spm = spm or {8: 1, 16: 1, 32: 1}
    total = 0
    for step in trace:
        b = p.blocks[step.block]
        objs = [b.owner] * b.instr_count + [a.target for a in b.data_accesses]
        widths = [16] * b.instr_count + [a.width for a in b.data_accesses]
        for o, w in zip(objs, widths):
            total += (spm if layout.in_scratchpad(o) else main)[w]
    return total
