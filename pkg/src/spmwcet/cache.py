"""Direct-mapped unified cache model and MUST-only abstract interpretation.

The abstract state keeps, per cache set, the memory line that is guaranteed
to be cached on every path (or ``None`` when nothing is known). Lines are
identified by ``address // line_size``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .layout import MAIN_TIMING, MemoryLayout
from .program import AccessEvent, Program

LINE_SIZE = 16  # four 32-bit words


class Classification(str, enum.Enum):
    ALWAYS_HIT = "always-hit"
    NOT_CLASSIFIED = "not-classified"


@dataclass(frozen=True)
class CacheConfig:
    capacity: int
    line_size: int = LINE_SIZE
    hit_cycles: int = 1
    # a line fill is line_size / 4 word reads from main memory
    miss_cycles: int = (LINE_SIZE // 4) * MAIN_TIMING[32]

    def __post_init__(self):
        c = self.capacity
        if c < 64 or c > 8192 or c & (c - 1):
            raise ValueError(f"cache capacity must be a power of two in [64, 8192], got {c}")
        if c % self.line_size:
            raise ValueError("capacity must be a multiple of the line size")

    @property
    def n_sets(self) -> int:
        return self.capacity // self.line_size

    def set_of(self, line: int) -> int:
        return line % self.n_sets


@dataclass(frozen=True)
class MustState:
    config: CacheConfig
    sets: tuple

    @classmethod
    def empty(cls, config: CacheConfig) -> "MustState":
        return cls(config, (None,) * config.n_sets)

    def __contains__(self, line: int) -> bool:
        return self.sets[self.config.set_of(line)] == line

    def leq(self, other: "MustState") -> bool:
        """Pointwise order with unknown (None) at the bottom."""
        return all(a is None or a == b for a, b in zip(self.sets, other.sets))


def event_lines(layout: MemoryLayout, event: AccessEvent, line_size: int = LINE_SIZE) -> range:
    """Memory lines the event may touch (one line for exact addresses)."""
    start = layout.start(event.obj)
    return range((start + event.lo) // line_size, (start + event.hi) // line_size + 1)


def abstract_update(s: MustState, lines) -> MustState:
    """Effect of one access touching one of ``lines``.

    A single candidate line is installed in its set. A range of candidates
    clears every set it spans, since any of them may have been evicted.
    """
    if len(lines) == 1:
        line = lines[0]
        idx = s.config.set_of(line)
        if s.sets[idx] == line:
            return s
        sets = list(s.sets)
        sets[idx] = line
        return MustState(s.config, tuple(sets))
    sets = list(s.sets)
    n = s.config.n_sets
    if len(lines) >= n:
        return MustState.empty(s.config)
    for line in lines:
        sets[line % n] = None
    return MustState(s.config, tuple(sets))


def abstract_join(a: MustState, b: MustState) -> MustState:
    if a.config != b.config:
        raise ValueError("cannot join states of different cache configurations")
    return MustState(a.config, tuple(x if x == y else None for x, y in zip(a.sets, b.sets)))


def block_lines(p: Program, layout: MemoryLayout, config: CacheConfig) -> dict:
    return {bid: [event_lines(layout, e, config.line_size) for e in p.events(bid)] for bid in p.blocks}


def _transfer(state: MustState, lines_seq) -> MustState:
    for lines in lines_seq:
        state = abstract_update(state, lines)
    return state


def fixpoint_must(p: Program, layout: MemoryLayout, config: CacheConfig, lines=None) -> dict:
    """Incoming MUST state of every block; the entry starts with nothing cached."""
    if lines is None:
        lines = block_lines(p, layout, config)
    order = p.reverse_postorder
    rank = {b: i for i, b in enumerate(order)}
    incoming = {}
    outgoing = {}
    entry = p.flow.entry
    work = set(order)
    while work:
        bid = min(work, key=rank.__getitem__)
        work.discard(bid)
        state = MustState.empty(config) if bid == entry else None
        if bid != entry:
            for q in p.predecessors[bid]:
                out = outgoing.get(q)
                if out is None:
                    continue
                state = out if state is None else abstract_join(state, out)
        if state is None:
            continue
        if incoming.get(bid) == state:
            continue
        incoming[bid] = state
        new_out = _transfer(state, lines[bid])
        if outgoing.get(bid) != new_out:
            outgoing[bid] = new_out
            work.update(p.blocks[bid].successors)
    return incoming


def classify_accesses(p: Program, layout: MemoryLayout, config: CacheConfig, fixpoint=None, lines=None) -> dict:
    """Block id -> tuple of Classification, one per access event."""
    if lines is None:
        lines = block_lines(p, layout, config)
    if fixpoint is None:
        fixpoint = fixpoint_must(p, layout, config, lines)
    result = {}
    for bid in p.blocks:
        state = fixpoint[bid]
        classes = []
        for ls in lines[bid]:
            hit = len(ls) == 1 and ls[0] in state
            classes.append(Classification.ALWAYS_HIT if hit else Classification.NOT_CLASSIFIED)
            state = abstract_update(state, ls)
        result[bid] = tuple(classes)
    return result


def wcet_event_cost(cls: Classification, config: CacheConfig) -> int:
    return config.hit_cycles if cls is Classification.ALWAYS_HIT else config.miss_cycles


def dump_classification(classification: dict) -> str:
    lines = []
    for bid, classes in classification.items():
        for i, c in enumerate(classes):
            lines.append(f"{bid} {i} {c.value}")
    return "\n".join(lines) + ("\n" if lines else "")
