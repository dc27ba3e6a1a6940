"""Static scratchpad allocation as an exact 0/1 knapsack over memory objects."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Mapping

from .layout import MAIN_TIMING, SPM_TIMING, footprint
from .program import MemoryObject, Program

# above this capacity the O(n*C) table is replaced by branch and bound
DP_CAPACITY_LIMIT = 1 << 16


@dataclass(frozen=True)
class Item:
    id: str
    size: int
    benefit: int


@dataclass(frozen=True)
class AllocationProblem:
    items: tuple
    capacity: int

    def __post_init__(self):
        if self.capacity < 0:
            raise ValueError("capacity must be non-negative")
        for it in self.items:
            if it.size <= 0:
                raise ValueError(f"item {it.id!r}: size must be positive")
            if it.benefit < 0:
                raise ValueError(f"item {it.id!r}: benefit must be non-negative")
        if len({it.id for it in self.items}) != len(self.items):
            raise ValueError("duplicate item ids")


@dataclass(frozen=True)
class AllocationResult:
    selected: frozenset
    total_benefit: int
    total_size: int


def compute_benefit(obj: MemoryObject, main: Mapping = MAIN_TIMING, spm: Mapping = SPM_TIMING) -> int:
    """Cycles saved by moving ``obj`` from main memory to the scratchpad."""
    w = obj.access_width
    return obj.access_count * (main[w] - spm[w])


def build_problem(p: Program, capacity: int,
                  benefit: Callable[[MemoryObject], int] = compute_benefit,
                  alignment: int = 4) -> AllocationProblem:
    # sizes are padded to the layout alignment so any feasible selection packs
    items = tuple(Item(o.id, footprint(o.size, alignment), benefit(o)) for o in p.objects.values())
    return AllocationProblem(items, capacity)


def _key(benefit, size):
    return (benefit, -size)


def solve_knapsack(prob: AllocationProblem) -> AllocationResult:
    """Optimal selection; ties go to smaller total size, then the
    lexicographically smallest sorted id tuple."""
    items = sorted(prob.items, key=lambda it: it.id)
    total = sum(it.size for it in items)
    cap = min(prob.capacity, total)
    if cap > DP_CAPACITY_LIMIT:
        chosen = _branch_and_bound(items, cap)
    else:
        chosen = _dynamic_program(items, cap)
    return AllocationResult(frozenset(it.id for it in chosen),
                            sum(it.benefit for it in chosen), sum(it.size for it in chosen))


def _dynamic_program(items, cap):
    n = len(items)
    zero = (0, 0)
    # best[i][c]: best (benefit, -size) over items[i:] within capacity c
    best = [None] * (n + 1)
    best[n] = [zero] * (cap + 1)
    for i in range(n - 1, -1, -1):
        nxt = best[i + 1]
        s, b = items[i].size, items[i].benefit
        row = list(nxt)
        for c in range(s, cap + 1):
            rb, rs = nxt[c - s]
            cand = (rb + b, rs - s)
            if cand > row[c]:
                row[c] = cand
        best[i] = row
    chosen = []
    c = cap
    for i, it in enumerate(items):
        if it.size <= c:
            rb, rs = best[i + 1][c - it.size]
            if (rb + it.benefit, rs - it.size) == best[i][c]:
                chosen.append(it)
                c -= it.size
    return chosen


def _branch_and_bound(items, cap):
    n = len(items)
    by_ratio = sorted(range(n), key=lambda i: items[i].benefit / items[i].size, reverse=True)

    def bound(i, room):
        # fractional relaxation over the undecided items[i:]
        value = 0
        for j in by_ratio:
            if j < i:
                continue
            it = items[j]
            if it.size <= room:
                room -= it.size
                value += it.benefit
            else:
                value += Fraction(it.benefit * room, it.size)
                break
        return value

    best_key = (-1, 0)
    best_set = []
    current = []

    def visit(i, room, benefit, size):
        nonlocal best_key, best_set
        if _key(benefit, size) > best_key:
            best_key = _key(benefit, size)
            best_set = list(current)
        if i == n or benefit + bound(i, room) < best_key[0]:
            return
        it = items[i]
        if it.size <= room:
            current.append(it)
            visit(i + 1, room - it.size, benefit + it.benefit, size + it.size)
            current.pop()
        visit(i + 1, room, benefit, size)

    visit(0, cap, 0, 0)
    return best_set


def sweep_capacities(problem_or_program, capacities: Iterable[int]) -> list:
    if isinstance(problem_or_program, Program):
        base = build_problem(problem_or_program, 0)
    else:
        base = problem_or_program
    return [(c, solve_knapsack(AllocationProblem(base.items, c))) for c in capacities]
