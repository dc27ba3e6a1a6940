"""Exact rational simplex with branch and bound for small integer programs.

Problems are maximisations over non-negative variables ``x[0..n)`` with
constraints given as ``(coeffs, sense, rhs)`` where ``coeffs`` maps a variable
index to a coefficient and ``sense`` is one of ``"<="``, ``"=="``, ``">="``.
All arithmetic uses :class:`fractions.Fraction`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence


class LPError(ArithmeticError):
    pass


class Infeasible(LPError):
    pass


class Unbounded(LPError):
    pass


@dataclass(frozen=True)
class Constraint:
    coeffs: Mapping
    sense: str
    rhs: Fraction

    def holds(self, x: Sequence) -> bool:
        lhs = sum(Fraction(c) * x[j] for j, c in self.coeffs.items())
        if self.sense == "<=":
            return lhs <= self.rhs
        if self.sense == ">=":
            return lhs >= self.rhs
        return lhs == self.rhs


@dataclass(frozen=True)
class LPSolution:
    value: Fraction
    x: tuple


def _pivot(rows, rhs, pr, pc):
    prow = rows[pr]
    inv = 1 / prow[pc]
    if inv != 1:
        for j in list(prow):
            prow[j] *= inv
        rhs[pr] *= inv
    items = list(prow.items())
    for r, row in enumerate(rows):
        if r == pr:
            continue
        f = row.get(pc)
        if not f:
            continue
        for j, v in items:
            nv = row.get(j, 0) - f * v
            if nv:
                row[j] = nv
            else:
                row.pop(j, None)
        rhs[r] -= f * rhs[pr]


def _simplex(rows, rhs, basis, cost, allowed):
    """Maximise ``cost`` from a feasible basis. Bland's rule, sparse rows."""
    while True:
        # reduced costs d_j = c_j - sum_r c_B(r) a_rj
        d = {j: c for j, c in cost.items() if j in allowed}
        for r, b in enumerate(basis):
            cb = cost.get(b)
            if cb:
                for j, v in rows[r].items():
                    if j in allowed:
                        d[j] = d.get(j, 0) - cb * v
        basic = set(basis)
        enter = None
        for j in sorted(d):
            if d[j] > 0 and j not in basic:
                enter = j
                break
        if enter is None:
            return
        best = None
        leave = None
        for r, row in enumerate(rows):
            a = row.get(enter)
            if a is not None and a > 0:
                ratio = rhs[r] / a
                if best is None or ratio < best or ratio == best and basis[r] < basis[leave]:
                    best, leave = ratio, r
        if leave is None:
            raise Unbounded("objective is unbounded")
        _pivot(rows, rhs, leave, enter)
        basis[leave] = enter


def solve_lp(n: int, objective: Mapping, constraints: Sequence[Constraint]) -> LPSolution:
    rows, rhs, basis = [], [], []
    artificial = set()
    nxt = n
    for con in constraints:
        row = {j: Fraction(c) for j, c in con.coeffs.items() if c}
        b = Fraction(con.rhs)
        sense = con.sense
        if b < 0:
            row = {j: -v for j, v in row.items()}
            b = -b
            sense = {"<=": ">=", ">=": "<=", "==": "=="}[sense]
        if sense == "<=":
            row[nxt] = Fraction(1)
            basis.append(nxt)
            nxt += 1
        else:
            if sense == ">=":
                row[nxt] = Fraction(-1)
                nxt += 1
            row[nxt] = Fraction(1)
            artificial.add(nxt)
            basis.append(nxt)
            nxt += 1
        rows.append(row)
        rhs.append(b)
    all_vars = set(range(nxt))

    if artificial:
        _simplex(rows, rhs, basis, {j: Fraction(-1) for j in artificial}, all_vars)
        if any(rhs[r] != 0 for r, b in enumerate(basis) if b in artificial):
            raise Infeasible("no feasible point")
        # drive zero-level artificials out of the basis
        for r in range(len(rows) - 1, -1, -1):
            if basis[r] not in artificial:
                continue
            col = next((j for j in sorted(rows[r]) if j not in artificial), None)
            if col is None:
                del rows[r], rhs[r], basis[r]
            else:
                _pivot(rows, rhs, r, col)
                basis[r] = col
        for row in rows:
            for j in artificial:
                row.pop(j, None)

    cost = {j: Fraction(c) for j, c in objective.items() if c}
    _simplex(rows, rhs, basis, cost, all_vars - artificial)
    x = [Fraction(0)] * n
    for r, b in enumerate(basis):
        if b < n:
            x[b] = rhs[r]
    value = sum(cost.get(j, 0) * x[j] for j in range(n))
    return LPSolution(Fraction(value), tuple(x))


def solve_ilp(n: int, objective: Mapping, constraints: Sequence[Constraint]) -> LPSolution:
    """Integer optimum by depth-first branch and bound over LP relaxations."""
    root = solve_lp(n, objective, constraints)
    integral_objective = all(Fraction(c).denominator == 1 for c in objective.values())
    best = None
    stack = [(list(constraints), root)]
    while stack:
        cons, sol = stack.pop()
        if best is not None:
            limit = math.floor(sol.value) if integral_objective else sol.value
            if limit <= best.value:
                continue
        frac = next((j for j, v in enumerate(sol.x) if v.denominator != 1), None)
        if frac is None:
            best = sol
            continue
        v = sol.x[frac]
        for extra in (Constraint({frac: 1}, ">=", Fraction(math.ceil(v))),
                      Constraint({frac: 1}, "<=", Fraction(math.floor(v)))):
            child = cons + [extra]
            try:
                stack.append((child, solve_lp(n, objective, child)))
            except Infeasible:
                pass
    if best is None:
        raise Infeasible("no integer feasible point")
    return best
