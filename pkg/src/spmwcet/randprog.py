"""Random structured programs and layouts for property testing.

Programs are built from nested single-entry regions (sequences, if/else,
while, do-while, loops with a break), so every generated CFG is reducible,
every loop has a dedicated header and every back edge carries a bound.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .layout import LayoutConfig, assign_layout, footprint
from .program import (BasicBlock, DataAccess, FlowFacts, MemoryObject, ObjectKind, Program,
                      validate_program)


@dataclass(frozen=True)
class GenConfig:
    max_blocks: int = 15
    max_bound: int = 8
    max_instrs: int = 8
    max_accesses: int = 3
    n_functions: tuple = (1, 2)
    n_data: tuple = (0, 3)
    n_literals: tuple = (0, 1)
    loops: bool = True


class _Builder:
    def __init__(self, rng: random.Random, cfg: GenConfig, owners):
        self.rng = rng
        self.cfg = cfg
        self.owners = owners
        self.order = []
        self.succ = {}
        self.owner = {}
        self.bounds = {}

    def block(self) -> str:
        bid = f"b{len(self.order)}"
        self.order.append(bid)
        self.succ[bid] = []
        self.owner[bid] = self.rng.choice(self.owners)
        return bid

    def link(self, u, v):
        self.succ[u].append(v)

    def loop_bound(self, u, h):
        self.bounds[(u, h)] = self.rng.randint(1, self.cfg.max_bound)

    def region(self, budget: int):
        """Build a region using at most ``budget`` blocks: (entry, exit block)."""
        kinds = ["block"]
        if budget >= 2:
            kinds += ["seq"]
        loops = self.cfg.loops
        if budget >= 3:
            kinds += ["if", "while"] if loops else ["if"]
        if budget >= 4:
            kinds += ["ifelse", "dowhile"] if loops else ["ifelse"]
        if budget >= 5 and loops:
            kinds += ["break"]
        kind = self.rng.choice(kinds)
        if kind == "block":
            b = self.block()
            return b, b
        if kind == "seq":
            split = self.rng.randint(1, budget - 1)
            e1, x1 = self.region(split)
            e2, x2 = self.region(budget - split)
            self.link(x1, e2)
            return e1, x2
        if kind == "if":
            c = self.block()
            te, tx = self.region(budget - 2)
            j = self.block()
            self.link(c, te)
            self.link(c, j)
            self.link(tx, j)
            return c, j
        if kind == "ifelse":
            c = self.block()
            inner = budget - 2
            split = self.rng.randint(1, inner - 1)
            te, tx = self.region(split)
            ee, ex = self.region(inner - split)
            j = self.block()
            self.link(c, te)
            self.link(c, ee)
            self.link(tx, j)
            self.link(ex, j)
            return c, j
        if kind == "while":
            h = self.block()
            be, bx = self.region(budget - 2)
            x = self.block()
            self.link(h, be)
            self.link(h, x)
            self.link(bx, h)
            self.loop_bound(bx, h)
            return h, x
        if kind == "dowhile":
            h = self.block()
            be, bx = self.region(budget - 3)
            latch = self.block()
            x = self.block()
            self.link(h, be)
            self.link(bx, latch)
            self.link(latch, h)
            self.link(latch, x)
            self.loop_bound(latch, h)
            return h, x
        # loop whose body may leave early
        h = self.block()
        be, bx = self.region(budget - 4)
        c = self.block()
        latch = self.block()
        x = self.block()
        self.link(h, be)
        self.link(h, x)
        self.link(bx, c)
        self.link(c, latch)
        self.link(c, x)
        self.link(latch, h)
        self.loop_bound(latch, h)
        return h, x


def _objects(rng: random.Random, cfg: GenConfig):
    funcs = [f"f{i}" for i in range(rng.randint(*cfg.n_functions))]
    data = []
    for i in range(rng.randint(*cfg.n_data)):
        w = rng.choice((8, 16, 32))
        data.append(MemoryObject(f"d{i}", ObjectKind.DATA, w // 8 * rng.randint(1, 16), w,
                                 rng.randint(0, 50)))
    lits = [MemoryObject(f"l{i}", ObjectKind.LITERAL, 4 * rng.randint(1, 4), 32, rng.randint(0, 50))
            for i in range(rng.randint(*cfg.n_literals))]
    return funcs, data, lits


def _accesses(rng: random.Random, cfg: GenConfig, instrs: int, targets) -> tuple:
    out = []
    if not targets:
        return ()
    for _ in range(rng.randint(0, cfg.max_accesses)):
        o = rng.choice(targets)
        step = o.element_width // 8
        n = o.size // step
        lo = rng.randrange(n)
        hi = lo if rng.random() < 0.5 else rng.randrange(lo, n)
        write = o.kind is ObjectKind.DATA and rng.random() < 0.3
        out.append(DataAccess(o.id, o.element_width, lo * step, hi * step, rng.randint(0, instrs), write))
    out.sort(key=lambda a: a.pos)
    return tuple(out)


def random_program(rng: random.Random | int, cfg: GenConfig = GenConfig()) -> Program:
    """A valid random program with at most ``cfg.max_blocks`` blocks."""
    if not isinstance(rng, random.Random):
        rng = random.Random(rng)
    funcs, data, lits = _objects(rng, cfg)
    b = _Builder(rng, cfg, funcs)
    two_exits = cfg.max_blocks >= 5 and rng.random() < 0.2
    if two_exits:
        c = b.block()
        budget = cfg.max_blocks - 3
        split = rng.randint(1, budget - 1)
        e1, x1 = b.region(split)
        e2, x2 = b.region(budget - split)
        end1, end2 = b.block(), b.block()
        b.link(c, e1)
        b.link(c, e2)
        b.link(x1, end1)
        b.link(x2, end2)
        entry, exits = c, (end1, end2)
    else:
        entry, x = b.region(rng.randint(1, cfg.max_blocks - 1))
        end = b.block()
        b.link(x, end)
        exits = (end,)

    return _finish(rng, cfg, b.order, b.succ, b.owner, entry, exits, b.bounds, funcs, data, lits)


def _finish(rng, cfg, order, succ, owner, entry, exits, bounds, funcs, data, lits) -> Program:
    targets = data + lits
    blocks = {}
    code = {f: 0 for f in funcs}
    for bid in order:
        n = rng.randint(1, cfg.max_instrs)
        code[owner[bid]] += 2 * n
        blocks[bid] = BasicBlock(bid, owner[bid], n, tuple(succ[bid]), _accesses(rng, cfg, n, targets))
    objects = {}
    for f in funcs:
        objects[f] = MemoryObject(f, ObjectKind.FUNCTION, max(code[f], 2), 16, rng.randint(0, 200))
    for o in lits + data:
        objects[o.id] = o

    typical = {e: rng.randint(0, n) for e, n in bounds.items() if rng.random() < 0.5}
    probs = {}
    hints = set()
    for bid, ss in succ.items():
        if len(ss) > 1 and rng.random() < 0.5:
            k = rng.randint(0, 100)
            probs[(bid, ss[0])] = k / 100
            probs[(bid, ss[1])] = (100 - k) / 100
        if len(ss) > 1 and rng.random() < 0.5:
            hints.add((bid, rng.choice(ss)))
    flow = FlowFacts(entry, frozenset(exits), dict(bounds), typical, probs, frozenset(hints))
    p = Program(objects, blocks, flow)
    validate_program(p)
    return p


def random_dag(rng: random.Random | int, n_blocks: int | None = None, cfg: GenConfig = GenConfig()) -> Program:
    """Unstructured acyclic CFG; every block without successors is an exit."""
    if not isinstance(rng, random.Random):
        rng = random.Random(rng)
    n = n_blocks or rng.randint(1, cfg.max_blocks)
    funcs, data, lits = _objects(rng, cfg)
    order = [f"b{i}" for i in range(n)]
    succ = {b: [] for b in order}
    for i in range(1, n):
        open_ = [j for j in range(i) if len(succ[order[j]]) < 2]
        succ[order[rng.choice(open_)]].append(order[i])
    for i in range(n - 1):
        if len(succ[order[i]]) < 2 and rng.random() < 0.4:
            j = rng.randrange(i + 1, n)
            if order[j] not in succ[order[i]]:
                succ[order[i]].append(order[j])
    owner = {b: rng.choice(funcs) for b in order}
    exits = [b for b in order if not succ[b]]
    return _finish(rng, cfg, order, succ, owner, order[0], exits, {}, funcs, data, lits)


def random_layout(p: Program, rng: random.Random | int, capacity: int | None = None):
    """Random scratchpad selection that fits, with a randomly placed main region."""
    if not isinstance(rng, random.Random):
        rng = random.Random(rng)
    if capacity is None:
        capacity = rng.choice((0, 16, 64, 128, 256, 1024))
    ids = list(p.objects)
    rng.shuffle(ids)
    chosen, used = [], 0
    for oid in ids:
        need = footprint(p.objects[oid].size)
        if used + need <= capacity and rng.random() < 0.6:
            chosen.append(oid)
            used += need
    cfg = LayoutConfig(main_base=0x100000 + 4 * rng.randrange(64), spm_capacity=capacity)
    return assign_layout(p, chosen, cfg)
