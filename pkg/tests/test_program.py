import pytest
from hypothesis import given, settings, strategies as st

from spmwcet.experiment import load_benchmark
from spmwcet.program import (AccessEvent, BasicBlock, FlowFacts, MemoryObject, ObjectKind, Program,
                             ProgramParseError, ProgramValidationError, dump_program,
                             enumerate_access_events, find_back_edges, load_program)
from spmwcet.randprog import GenConfig, random_dag, random_program

import oracles

MINIMAL = """\
OBJECT f function size=2 width=16 accesses=1
BLOCK a owner=f instrs=1 succ=
ENTRY a
EXIT a
"""

NESTED = """\
OBJECT f function size=64 width=16 accesses=0
BLOCK e owner=f instrs=1 succ=h1
BLOCK h1 owner=f instrs=1 succ=h2,x
BLOCK h2 owner=f instrs=1 succ=b,l1
BLOCK b owner=f instrs=1 succ=h2
BLOCK l1 owner=f instrs=1 succ=h1
BLOCK x owner=f instrs=1 succ=
ENTRY e
EXIT x
LOOPBOUND b->h2 3
LOOPBOUND l1->h1 4
"""


def test_minimal_program():
    p = load_program(MINIMAL)
    assert list(p.blocks) == ["a"]
    assert p.flow.entry == "a" and p.flow.exits == {"a"}


def test_missing_loop_bound():
    text = NESTED.replace("LOOPBOUND b->h2 3\n", "")
    with pytest.raises(ProgramValidationError, match="unbounded back edge"):
        load_program(text)


def test_parse_error_position():
    with pytest.raises(ProgramParseError) as exc:
        load_program(MINIMAL.replace("instrs=1", "instrs=one"))
    assert exc.value.line == 2
    assert exc.value.column > 1


@pytest.mark.parametrize("text, msg", [
    (MINIMAL + "FROB x\n", "unknown directive"),
    (MINIMAL.replace("function", "blob"), "unknown object kind"),
    (MINIMAL + "LOOPBOUND a 3\n", "expected <src>-><dst>"),
])
def test_parse_errors(text, msg):
    with pytest.raises(ProgramParseError, match=msg):
        load_program(text)


@pytest.mark.parametrize("edit, msg", [
    (lambda t: t.replace("EXIT a\n", ""), "no EXIT"),
    (lambda t: t.replace("width=16", "width=32"), "width must be 16"),
    (lambda t: t.replace("instrs=1", "instrs=2"), "blocks need 4 bytes"),
    (lambda t: t + "OBJECT d data size=6 width=32 accesses=0\n", "multiple of its element width"),
    (lambda t: t + "OBJECT d data size=8 width=32 accesses=0\nACCESS a pos=0 obj=d lo=0 hi=8 width=32\n",
     "outside 'd'"),
    (lambda t: t + "OBJECT d data size=8 width=32 accesses=0\nACCESS a pos=0 obj=d lo=2 hi=2 width=32\n",
     "misaligned"),
    (lambda t: t + "OBJECT l literal size=8 width=32 accesses=0\nACCESS a pos=0 obj=l lo=0 hi=0 width=32 write\n",
     "write to literal pool"),
])
def test_validation_errors(edit, msg):
    with pytest.raises(ProgramValidationError, match=msg):
        load_program(edit(MINIMAL))


def test_unreachable_block():
    text = MINIMAL.replace("size=2", "size=4") + "BLOCK z owner=f instrs=1 succ=a\n"
    with pytest.raises(ProgramValidationError, match="unreachable"):
        load_program(text)


def test_irreducible_rejected():
    text = """\
OBJECT f function size=8 width=16 accesses=0
BLOCK e owner=f instrs=1 succ=p,q
BLOCK p owner=f instrs=1 succ=q,x
BLOCK q owner=f instrs=1 succ=p
BLOCK x owner=f instrs=1 succ=
ENTRY e
EXIT x
"""
    with pytest.raises(ProgramValidationError, match="irreducible"):
        load_program(text)


def test_typical_above_bound_rejected():
    with pytest.raises(ProgramValidationError, match="exceeds its loop bound"):
        load_program(NESTED + "TYPICAL b->h2 4\n")


def test_self_loop_back_edge():
    text = """\
OBJECT f function size=4 width=16 accesses=0
BLOCK b owner=f instrs=1 succ=b,x
BLOCK x owner=f instrs=1 succ=
ENTRY b
EXIT x
LOOPBOUND b->b 5
"""
    assert find_back_edges(load_program(text)) == {("b", "b")}


def test_diamond_has_no_back_edges():
    text = """\
OBJECT f function size=8 width=16 accesses=0
BLOCK e owner=f instrs=1 succ=l,r
BLOCK l owner=f instrs=1 succ=j
BLOCK r owner=f instrs=1 succ=j
BLOCK j owner=f instrs=1 succ=
ENTRY e
EXIT j
"""
    assert find_back_edges(load_program(text)) == set()


def test_nested_loops_back_edges():
    p = load_program(NESTED)
    assert find_back_edges(p) == {("b", "h2"), ("l1", "h1")}
    # every cycle needs a back edge, and removing them leaves a DAG
    succ = oracles.successors(p)
    assert oracles.has_cycle(succ)
    assert not oracles.has_cycle(succ, skip=find_back_edges(p))
    assert find_back_edges(p) <= oracles.cycle_edges(succ)
    assert p.loops["h1"] == {"h1", "h2", "b", "l1"}
    assert p.loops["h2"] == {"h2", "b"}


def test_fetch_only_events():
    text = MINIMAL.replace("size=2", "size=6").replace("instrs=1", "instrs=3")
    p = load_program(text)
    ev = enumerate_access_events(p, "a")
    assert [(e.lo, e.width, e.is_fetch) for e in ev] == [(0, 16, True), (2, 16, True), (4, 16, True)]


def test_fetch_then_data_event():
    text = MINIMAL + "OBJECT A data size=16 width=32 accesses=0\nACCESS a pos=1 obj=A lo=8 hi=8 width=32\n"
    ev = enumerate_access_events(load_program(text), "a")
    assert ev == (AccessEvent("f", 0, 0, 16, True), AccessEvent("A", 8, 8, 32, False, False, 0))


def test_insertion_sort_counts():
    p = load_benchmark("insertion_sort")
    assert len(p.blocks) == 12
    assert len(p.objects) == 5
    assert len(p.back_edges) == 3
    # hand count of in_b: 8 fetches and two array accesses
    assert len(p.events("in_b")) == 10
    for bid, b in p.blocks.items():
        assert len(p.events(bid)) == b.instr_count + len(b.data_accesses)


@pytest.mark.parametrize("name", ["insertion_sort", "multi_sort_like", "codec_like"])
def test_benchmark_round_trip(name):
    p = load_benchmark(name)
    assert load_program(dump_program(p)) == p


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 10**9), st.integers(1, 10))
def test_back_edges_match_bruteforce(seed, n):
    p = random_program(seed, GenConfig(max_blocks=n + 1)) if n > 1 else random_dag(seed, 1)
    assert find_back_edges(p) == oracles.back_edges(p)
    assert {n: set(d) for n, d in p.dominators.items()} == oracles.dominators(p)
    assert not oracles.has_cycle(oracles.successors(p), skip=find_back_edges(p))


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10**9))
def test_dump_load_round_trip(seed):
    p = random_program(seed)
    assert load_program(dump_program(p)) == p


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10**9))
def test_events_inside_objects(seed):
    p = random_program(seed)
    for bid in p.blocks:
        for e in p.events(bid):
            size = p.objects[e.obj].size
            assert 0 <= e.lo <= e.hi and e.hi + e.width // 8 <= size


@st.composite
def digraphs(draw):
    """Arbitrary graphs (irreducible ones included) with every node reachable from n0."""
    n = draw(st.integers(1, 10))
    succ = {f"n{i}": [] for i in range(n)}
    for i in range(1, n):
        succ[f"n{draw(st.integers(0, i - 1))}"].append(f"n{i}")
    for _ in range(draw(st.integers(0, 2 * n))):
        u, v = draw(st.integers(0, n - 1)), draw(st.integers(0, n - 1))
        if f"n{v}" not in succ[f"n{u}"]:
            succ[f"n{u}"].append(f"n{v}")
    return succ


@settings(max_examples=300, deadline=None)
@given(digraphs())
def test_dominators_on_arbitrary_graphs(succ):
    blocks = {b: BasicBlock(b, "f", 1, tuple(s)) for b, s in succ.items()}
    p = Program({"f": MemoryObject("f", ObjectKind.FUNCTION, 2 * len(blocks), 16)}, blocks,
                FlowFacts("n0", frozenset()))
    assert {k: set(v) for k, v in p.dominators.items()} == oracles.dominators(p)
    assert find_back_edges(p) == oracles.back_edges(p)
