"""Analyzable program representation: objects, basic blocks, accesses, flow facts.

Programs are read from a line-oriented text format::

    OBJECT <id> <function|data|literal> size=<bytes> width=<8|16|32> accesses=<n>
    BLOCK <id> owner=<object> instrs=<n> succ=<id,...>
    ACCESS <block> pos=<k> obj=<id> lo=<bytes> hi=<bytes> width=<bits> [write]
    ENTRY <id>
    EXIT <id>
    LOOPBOUND <src>-><dst> <n>
    TYPICAL <src>-><dst> <n>      # typical iterations per loop entry
    PROB <src>-><dst> <p>         # branch probability for typical traces
    WORST <src>-><dst>            # successor taken by worst-case traces

``pos=k`` places a data access after the k-th instruction fetch of its block.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping

HALFWORD = 16
WIDTHS = (8, 16, 32)

Edge = tuple  # (source id, target id)


class ObjectKind(str, enum.Enum):
    FUNCTION = "function"
    DATA = "data"
    LITERAL = "literal"


class ProgramError(ValueError):
    pass


class ProgramParseError(ProgramError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class ProgramValidationError(ProgramError):
    pass


@dataclass(frozen=True)
class MemoryObject:
    id: str
    kind: ObjectKind
    size: int
    element_width: int
    access_count: int = 0

    @property
    def is_code(self) -> bool:
        return self.kind is ObjectKind.FUNCTION

    @property
    def access_width(self) -> int:
        return HALFWORD if self.is_code else self.element_width


@dataclass(frozen=True)
class DataAccess:
    target: str
    width: int
    lo: int
    hi: int
    pos: int
    is_write: bool = False

    @property
    def is_exact(self) -> bool:
        return self.lo == self.hi


@dataclass(frozen=True)
class BasicBlock:
    id: str
    owner: str
    instr_count: int
    successors: tuple = ()
    data_accesses: tuple = ()


@dataclass(frozen=True)
class AccessEvent:
    """A symbolic memory access: object plus byte offset range inside it."""

    obj: str
    lo: int
    hi: int
    width: int
    is_fetch: bool
    is_write: bool = False
    # index into the block's data accesses, -1 for fetches
    access_index: int = -1


@dataclass(frozen=True)
class FlowFacts:
    entry: str
    exits: frozenset
    loop_bounds: Mapping = field(default_factory=dict)
    typical_counts: Mapping = field(default_factory=dict)
    branch_probs: Mapping = field(default_factory=dict)
    worst_hints: frozenset = frozenset()


@dataclass(frozen=True)
class Program:
    objects: Mapping  # id -> MemoryObject, declaration order
    blocks: Mapping  # id -> BasicBlock, declaration order
    flow: FlowFacts

    @cached_property
    def edges(self) -> tuple:
        return tuple((b.id, s) for b in self.blocks.values() for s in b.successors)

    @cached_property
    def predecessors(self) -> dict:
        preds = {bid: [] for bid in self.blocks}
        for u, v in self.edges:
            preds[v].append(u)
        return preds

    @cached_property
    def dominators(self) -> dict:
        return compute_dominators(self)

    @cached_property
    def back_edges(self) -> frozenset:
        return find_back_edges(self)

    @cached_property
    def loops(self) -> dict:
        """Header id -> frozenset of block ids in its natural loop."""
        body = {}
        for u, h in self.back_edges:
            nodes = body.setdefault(h, {h})
            stack = [u]
            while stack:
                n = stack.pop()
                if n in nodes:
                    continue
                nodes.add(n)
                stack.extend(self.predecessors[n])
        return {h: frozenset(ns) for h, ns in body.items()}

    @cached_property
    def code_offsets(self) -> dict:
        """Block id -> byte offset of its first instruction inside its owner."""
        cursor = {}
        offsets = {}
        for b in self.blocks.values():
            off = cursor.get(b.owner, 0)
            offsets[b.id] = off
            cursor[b.owner] = off + 2 * b.instr_count
        return offsets

    @cached_property
    def reverse_postorder(self) -> tuple:
        seen = set()
        order = []
        stack = [(self.flow.entry, iter(self.blocks[self.flow.entry].successors))]
        seen.add(self.flow.entry)
        while stack:
            node, it = stack[-1]
            for s in it:
                if s not in seen:
                    seen.add(s)
                    stack.append((s, iter(self.blocks[s].successors)))
                    break
            else:
                order.append(node)
                stack.pop()
        return tuple(reversed(order))

    def events(self, block_id: str) -> tuple:
        return enumerate_access_events(self, block_id)


def compute_dominators(p: Program) -> dict:
    """Iterative dataflow dominator sets over reverse postorder."""
    order = p.reverse_postorder
    everything = frozenset(order)
    dom = {n: everything for n in order}
    dom[p.flow.entry] = frozenset([p.flow.entry])
    changed = True
    while changed:
        changed = False
        for n in order:
            if n == p.flow.entry:
                continue
            preds = [q for q in p.predecessors[n] if q in dom]
            new = frozenset.intersection(*(dom[q] for q in preds)) | {n}
            if new != dom[n]:
                dom[n] = new
                changed = True
    return dom


def find_back_edges(p: Program) -> frozenset:
    dom = p.dominators
    return frozenset((u, v) for u, v in p.edges if u in dom and v in dom[u])


def enumerate_access_events(p: Program, block_id: str) -> tuple:
    b = p.blocks[block_id]
    base = p.code_offsets[block_id]
    by_pos = {}
    for i, a in enumerate(b.data_accesses):
        by_pos.setdefault(a.pos, []).append((i, a))
    events = []
    for k in range(b.instr_count + 1):
        for i, a in by_pos.get(k, ()):
            events.append(AccessEvent(a.target, a.lo, a.hi, a.width, False, a.is_write, i))
        if k < b.instr_count:
            off = base + 2 * k
            events.append(AccessEvent(b.owner, off, off, HALFWORD, True))
    return tuple(events)


# -- parsing -----------------------------------------------------------------

class _Line:
    def __init__(self, lineno: int, raw: str):
        self.lineno = lineno
        self.raw = raw
        self.tokens = []  # (column, text)
        for m in re.finditer(r"\S+", raw):
            self.tokens.append((m.start() + 1, m.group()))

    def error(self, message, token_index=0):
        col = self.tokens[token_index][0] if token_index < len(self.tokens) else len(self.raw) + 1
        return ProgramParseError(message, self.lineno, col)

    def kv(self, start: int, required: Iterable[str], flags=()):
        values = {}
        seen_flags = set()
        for i in range(start, len(self.tokens)):
            text = self.tokens[i][1]
            if "=" in text:
                key, _, val = text.partition("=")
                if key in values:
                    raise self.error(f"duplicate key '{key}'", i)
                values[key] = (val, i)
            elif text in flags:
                seen_flags.add(text)
            else:
                raise self.error(f"unexpected token '{text}'", i)
        for key in required:
            if key not in values:
                raise self.error(f"missing '{key}='", len(self.tokens))
        return values, seen_flags

    def int_value(self, values, key):
        text, i = values[key]
        try:
            return int(text, 0)
        except ValueError:
            raise self.error(f"'{key}' expects an integer, got '{text}'", i) from None


def _parse_edge(line: _Line, i: int) -> Edge:
    if i >= len(line.tokens):
        raise line.error("expected <src>-><dst>", i)
    text = line.tokens[i][1]
    src, sep, dst = text.partition("->")
    if not sep or not src or not dst:
        raise line.error(f"expected <src>-><dst>, got '{text}'", i)
    return (src, dst)


def parse_program(text: str) -> Program:
    """Parse without semantic validation (see load_program)."""
    objects = {}
    blocks = {}
    accesses = {}
    entry = None
    exits = []
    bounds, typical, probs = {}, {}, {}
    worst = set()

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _Line(lineno, raw.split("#", 1)[0])
        if not line.tokens:
            continue
        directive = line.tokens[0][1]
        nt = len(line.tokens)
        if directive == "OBJECT":
            if nt < 3:
                raise line.error("OBJECT needs <id> <kind>", nt)
            oid, kind = line.tokens[1][1], line.tokens[2][1]
            try:
                okind = ObjectKind(kind)
            except ValueError:
                raise line.error(f"unknown object kind '{kind}'", 2) from None
            vals, _ = line.kv(3, ("size", "width"))
            if oid in objects:
                raise line.error(f"duplicate object id '{oid}'", 1)
            objects[oid] = MemoryObject(
                oid, okind, line.int_value(vals, "size"), line.int_value(vals, "width"),
                line.int_value(vals, "accesses") if "accesses" in vals else 0)
        elif directive == "BLOCK":
            if nt < 2:
                raise line.error("BLOCK needs <id>", nt)
            bid = line.tokens[1][1]
            vals, _ = line.kv(2, ("owner", "instrs"))
            if bid in blocks:
                raise line.error(f"duplicate block id '{bid}'", 1)
            succ_text = vals.get("succ", ("", 0))[0]
            succ = tuple(s for s in succ_text.split(",") if s)
            blocks[bid] = BasicBlock(bid, vals["owner"][0], line.int_value(vals, "instrs"), succ)
            accesses[bid] = []
        elif directive == "ACCESS":
            if nt < 2:
                raise line.error("ACCESS needs <block>", nt)
            bid = line.tokens[1][1]
            if bid not in blocks:
                raise line.error(f"ACCESS before BLOCK '{bid}'", 1)
            vals, flags = line.kv(2, ("pos", "obj", "lo", "hi", "width"), flags=("write",))
            accesses[bid].append(DataAccess(
                vals["obj"][0], line.int_value(vals, "width"), line.int_value(vals, "lo"),
                line.int_value(vals, "hi"), line.int_value(vals, "pos"), "write" in flags))
        elif directive in ("ENTRY", "EXIT"):
            if nt != 2:
                raise line.error(f"{directive} takes exactly one block id", min(nt, 2))
            if directive == "ENTRY":
                if entry is not None:
                    raise line.error("duplicate ENTRY", 0)
                entry = line.tokens[1][1]
            else:
                exits.append(line.tokens[1][1])
        elif directive in ("LOOPBOUND", "TYPICAL", "PROB"):
            edge = _parse_edge(line, 1)
            if nt != 3:
                raise line.error(f"{directive} expects <src>-><dst> <value>", min(nt, 3))
            val = line.tokens[2][1]
            target = {"LOOPBOUND": bounds, "TYPICAL": typical, "PROB": probs}[directive]
            if edge in target:
                raise line.error(f"duplicate {directive} for {edge[0]}->{edge[1]}", 1)
            try:
                target[edge] = float(val) if directive == "PROB" else int(val, 0)
            except ValueError:
                raise line.error(f"bad value '{val}'", 2) from None
        elif directive == "WORST":
            if nt != 2:
                raise line.error("WORST expects <src>-><dst>", min(nt, 2))
            worst.add(_parse_edge(line, 1))
        else:
            raise line.error(f"unknown directive '{directive}'", 0)

    if entry is None:
        raise ProgramParseError("missing ENTRY", len(text.splitlines()) + 1, 1)
    blocks = {bid: BasicBlock(b.id, b.owner, b.instr_count, b.successors, tuple(accesses[bid]))
              for bid, b in blocks.items()}
    flow = FlowFacts(entry, frozenset(exits), bounds, typical, probs, frozenset(worst))
    return Program(objects, blocks, flow)


def load_program(text: str) -> Program:
    p = parse_program(text)
    validate_program(p)
    return p


def _fail(msg):
    raise ProgramValidationError(msg)


def validate_program(p: Program) -> None:
    for o in p.objects.values():
        if o.size <= 0:
            _fail(f"object '{o.id}': size must be positive")
        if o.element_width not in WIDTHS:
            _fail(f"object '{o.id}': width must be one of {WIDTHS}")
        if o.kind is ObjectKind.FUNCTION and o.element_width != HALFWORD:
            _fail(f"function '{o.id}': width must be 16")
        if o.kind is ObjectKind.LITERAL and o.element_width != 32:
            _fail(f"literal pool '{o.id}': width must be 32")
        if o.size % (o.element_width // 8):
            _fail(f"object '{o.id}': size is not a multiple of its element width")
        if o.access_count < 0:
            _fail(f"object '{o.id}': negative access count")

    code_bytes = {}
    for b in p.blocks.values():
        owner = p.objects.get(b.owner)
        if owner is None or not owner.is_code:
            _fail(f"block '{b.id}': owner '{b.owner}' is not a function object")
        if b.instr_count < 1:
            _fail(f"block '{b.id}': instr_count must be >= 1")
        if len(b.successors) > 2:
            _fail(f"block '{b.id}': at most two successors")
        if len(set(b.successors)) != len(b.successors):
            _fail(f"block '{b.id}': duplicate successor")
        for s in b.successors:
            if s not in p.blocks:
                _fail(f"block '{b.id}': unknown successor '{s}'")
        code_bytes[b.owner] = code_bytes.get(b.owner, 0) + 2 * b.instr_count
        for a in b.data_accesses:
            t = p.objects.get(a.target)
            if t is None or t.is_code:
                _fail(f"block '{b.id}': access target '{a.target}' is not a data object")
            if a.width != t.element_width:
                _fail(f"block '{b.id}': access width {a.width} does not match '{t.id}'")
            step = a.width // 8
            if not (0 <= a.lo <= a.hi and a.hi + step <= t.size):
                _fail(f"block '{b.id}': offset range [{a.lo}, {a.hi}] outside '{t.id}'")
            if a.lo % step or a.hi % step:
                _fail(f"block '{b.id}': misaligned access to '{t.id}'")
            if not 0 <= a.pos <= b.instr_count:
                _fail(f"block '{b.id}': access position {a.pos} out of range")
            if t.kind is ObjectKind.LITERAL and a.is_write:
                _fail(f"block '{b.id}': write to literal pool '{t.id}'")
    for oid, used in code_bytes.items():
        if used > p.objects[oid].size:
            _fail(f"function '{oid}': blocks need {used} bytes, object has {p.objects[oid].size}")

    f = p.flow
    if f.entry not in p.blocks:
        _fail(f"unknown entry block '{f.entry}'")
    if not f.exits:
        _fail("no EXIT block")
    for x in f.exits:
        if x not in p.blocks:
            _fail(f"unknown exit block '{x}'")
        if p.blocks[x].successors:
            _fail(f"exit block '{x}' has successors")
    for b in p.blocks.values():
        if not b.successors and b.id not in f.exits:
            _fail(f"block '{b.id}' has no successors and is not an exit")

    reachable = set(p.reverse_postorder)
    if len(reachable) != len(p.blocks):
        missing = sorted(set(p.blocks) - reachable)
        _fail(f"unreachable blocks: {', '.join(missing)}")
    can_exit = set(f.exits)
    frontier = list(f.exits)
    while frontier:
        n = frontier.pop()
        for q in p.predecessors[n]:
            if q not in can_exit:
                can_exit.add(q)
                frontier.append(q)
    if len(can_exit) != len(p.blocks):
        stuck = sorted(set(p.blocks) - can_exit)
        _fail(f"blocks cannot reach an exit: {', '.join(stuck)}")

    back = p.back_edges
    # reducibility: the graph without back edges must be acyclic
    indeg = {n: 0 for n in p.blocks}
    for e in p.edges:
        if e not in back:
            indeg[e[1]] += 1
    ready = [n for n, d in indeg.items() if d == 0]
    done = 0
    while ready:
        n = ready.pop()
        done += 1
        for s in p.blocks[n].successors:
            if (n, s) not in back:
                indeg[s] -= 1
                if indeg[s] == 0:
                    ready.append(s)
    if done != len(p.blocks):
        _fail("irreducible control flow: cycle without a dominating header")

    for e in back:
        if e not in f.loop_bounds:
            _fail(f"unbounded back edge {e[0]}->{e[1]}")
    for e, n in f.loop_bounds.items():
        if e not in back:
            _fail(f"LOOPBOUND on {e[0]}->{e[1]}, which is not a back edge")
        if n < 0:
            _fail(f"negative loop bound on {e[0]}->{e[1]}")
    for e, n in f.typical_counts.items():
        if e not in back:
            _fail(f"TYPICAL on {e[0]}->{e[1]}, which is not a back edge")
        if not 0 <= n <= f.loop_bounds[e]:
            _fail(f"typical count on {e[0]}->{e[1]} exceeds its loop bound")
    edges = set(p.edges)
    for e in list(f.branch_probs) + list(f.worst_hints):
        if e not in edges:
            _fail(f"annotation on non-existent edge {e[0]}->{e[1]}")
    for e, prob in f.branch_probs.items():
        if not 0.0 <= prob <= 1.0:
            _fail(f"probability on {e[0]}->{e[1]} outside [0, 1]")
    for b in p.blocks.values():
        total = sum(f.branch_probs.get((b.id, s), 0.0) for s in b.successors)
        if total > 1.0 + 1e-9:
            _fail(f"branch probabilities of '{b.id}' sum above 1")


def dump_program(p: Program) -> str:
    out = []
    for o in p.objects.values():
        out.append(f"OBJECT {o.id} {o.kind.value} size={o.size} width={o.element_width} "
                   f"accesses={o.access_count}")
    for b in p.blocks.values():
        out.append(f"BLOCK {b.id} owner={b.owner} instrs={b.instr_count} succ={','.join(b.successors)}")
        for a in b.data_accesses:
            line = f"ACCESS {b.id} pos={a.pos} obj={a.target} lo={a.lo} hi={a.hi} width={a.width}"
            out.append(line + (" write" if a.is_write else ""))
    f = p.flow
    out.append(f"ENTRY {f.entry}")
    for x in sorted(f.exits):
        out.append(f"EXIT {x}")
    for (u, v), n in f.loop_bounds.items():
        out.append(f"LOOPBOUND {u}->{v} {n}")
    for (u, v), n in f.typical_counts.items():
        out.append(f"TYPICAL {u}->{v} {n}")
    for (u, v), prob in f.branch_probs.items():
        out.append(f"PROB {u}->{v} {prob!r}")
    for u, v in sorted(f.worst_hints):
        out.append(f"WORST {u}->{v}")
    return "\n".join(out) + "\n"


def with_access_counts(p: Program, counts: Mapping) -> Program:
    objects = {oid: MemoryObject(o.id, o.kind, o.size, o.element_width, counts.get(oid, 0))
               for oid, o in p.objects.items()}
    return Program(objects, p.blocks, p.flow)
