import itertools
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from spmwcet.lp import Constraint, Infeasible, Unbounded, solve_ilp, solve_lp


def C(coeffs, sense, rhs):
    return Constraint(coeffs, sense, Fraction(rhs))


def test_textbook_lp():
    # max 3x + 5y  s.t. x <= 4, 2y <= 12, 3x + 2y <= 18  -> (2, 6), value 36
    cons = [C({0: 1}, "<=", 4), C({1: 2}, "<=", 12), C({0: 3, 1: 2}, "<=", 18)]
    sol = solve_lp(2, {0: 3, 1: 5}, cons)
    assert sol.value == 36 and sol.x == (2, 6)


def test_fractional_relaxation_then_integer():
    # max x + y  s.t. 2x + 2y <= 3: LP gives 3/2, ILP gives 1
    cons = [C({0: 2, 1: 2}, "<=", 3)]
    assert solve_lp(2, {0: 1, 1: 1}, cons).value == Fraction(3, 2)
    assert solve_ilp(2, {0: 1, 1: 1}, cons).value == 1


def test_equalities_and_ge():
    cons = [C({0: 1, 1: 1}, "==", 5), C({0: 1}, ">=", 2)]
    sol = solve_lp(2, {0: -1, 1: 1}, cons)
    assert sol.x == (2, 3) and sol.value == 1


def test_negative_rhs_rows():
    cons = [C({0: -1}, "<=", -3), C({0: 1}, "<=", 7)]
    assert solve_lp(1, {0: -1}, cons).x == (3,)


def test_infeasible():
    with pytest.raises(Infeasible):
        solve_lp(1, {0: 1}, [C({0: 1}, ">=", 3), C({0: 1}, "<=", 2)])
    with pytest.raises(Infeasible):
        solve_ilp(1, {0: 1}, [C({0: 2}, "==", 1)])


def test_unbounded():
    with pytest.raises(Unbounded):
        solve_lp(2, {0: 1}, [C({0: 1, 1: -1}, "<=", 1)])


def test_redundant_equalities():
    cons = [C({0: 1, 1: 1}, "==", 2), C({0: 2, 1: 2}, "==", 4), C({0: 1}, "<=", 1)]
    sol = solve_lp(2, {0: 1, 1: 2}, cons)
    assert sol.value == 4


def test_holds():
    c = C({0: 1, 1: 2}, "<=", 5)
    assert c.holds((1, 2)) and not c.holds((2, 2))


@st.composite
def small_ilps(draw):
    n = draw(st.integers(1, 3))
    cons = [C({j: 1}, "<=", draw(st.integers(0, 4))) for j in range(n)]
    for _ in range(draw(st.integers(0, 3))):
        coeffs = {j: draw(st.integers(-3, 3)) for j in range(n)}
        sense = draw(st.sampled_from(["<=", ">=", "=="]))
        cons.append(C(coeffs, sense, draw(st.integers(-4, 8))))
    obj = {j: draw(st.integers(-5, 5)) for j in range(n)}
    return n, obj, cons


@settings(max_examples=300, deadline=None)
@given(small_ilps())
def test_ilp_matches_grid_search(case):
    n, obj, cons = case
    best = None
    for x in itertools.product(range(5), repeat=n):
        if all(c.holds(x) for c in cons):
            v = sum(obj[j] * x[j] for j in range(n))
            best = v if best is None else max(best, v)
    if best is None:
        with pytest.raises(Infeasible):
            solve_ilp(n, obj, cons)
        return
    sol = solve_ilp(n, obj, cons)
    assert sol.value == best
    assert all(c.holds(sol.x) for c in cons)
    assert all(v.denominator == 1 for v in sol.x)
