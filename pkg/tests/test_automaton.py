import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tdesloc.automaton import (
    TICK,
    TimedAutomaton,
    counterexample,
    eligible,
    equality_witness,
    is_nonblocking,
    language_equal,
    language_subset,
    natural_projection,
    reachable,
    sync_product,
    to_dot,
    trim,
)

import oracles
from generators import random_automaton


def chain(events, marked):
    return TimedAutomaton.build(
        set(events), len(events) + 1, [(i, e, i + 1) for i, e in enumerate(events)], 0, marked
    )


@st.composite
def automata(draw, max_states=5, alphabet=("a", "b", "c")):
    seed = draw(st.integers(0, 2**32 - 1))
    n = draw(st.integers(1, max_states))
    return random_automaton(random.Random(seed), n, list(alphabet), density=0.6)


def test_rejects_nondeterminism_and_bad_indices():
    with pytest.raises(ValueError):
        TimedAutomaton.build("a", 2, [(0, "a", 1), (0, "a", 0)])
    with pytest.raises(ValueError):
        TimedAutomaton.build("a", 2, [(0, "a", 5)])
    with pytest.raises(ValueError):
        TimedAutomaton.build("a", 2, [(0, "b", 1)])
    with pytest.raises(ValueError):
        TimedAutomaton.build("a", 2, [], initial=3)


def test_eligible():
    a = chain(["a", "b"], [2])
    assert eligible(a, 2) == frozenset()
    assert eligible(a, 0) == {"a"}
    with pytest.raises(IndexError):
        eligible(a, 7)


def test_cell_sup_initially_only_tick(cell):
    assert eligible(cell.sup, cell.sup.initial) == {TICK}


@given(automata())
def test_eligible_within_alphabet(a):
    for x in range(a.n_states):
        assert eligible(a, x) <= set(a.alphabet)


def test_reachable_drops_unreachable_marked_state():
    a = TimedAutomaton.build("ab", 3, [(0, "a", 1), (2, "b", 1)], 0, [1, 2])
    r = reachable(a)
    assert r.n_states == 2
    assert language_equal(r, a)


def test_reachable_is_identity_on_reachable():
    a = chain(["a", "b"], [1])
    assert reachable(a) == a


def test_reachable_matches_string_enumeration():
    rng = random.Random(7)
    for _ in range(10):
        a = random_automaton(rng, 20, ["a", "b"], density=0.12)
        expected = oracles.reachable_by_enumeration(a, 20)
        assert reachable(a).n_states == len(expected)


def test_trim():
    nb = chain(["a", "b"], [2])
    assert trim(nb) == nb
    assert trim(TimedAutomaton.build("a", 2, [(0, "a", 1)], 0, [])).n_states == 0
    t = trim(chain(["a", "b"], [1]))
    assert t.n_states == 2 and t.marked == {1}
    assert is_nonblocking(t)


@given(automata())
def test_trim_idempotent_and_nonblocking(a):
    t = trim(a)
    assert trim(t) == t
    assert reachable(reachable(a)) == reachable(a)
    assert is_nonblocking(t)


def test_sync_product_identity():
    a = chain(["a", "b"], [2])
    u = TimedAutomaton.universal(["a", "b"])
    assert language_equal(sync_product([a, u]), a)


def test_sync_product_requires_operand():
    with pytest.raises(ValueError):
        sync_product([])


def test_sync_product_against_pair_construction():
    a = TimedAutomaton.build(["a", "s"], 2, [(0, "a", 1), (1, "s", 0)], 0, [0])
    b = TimedAutomaton.build(["b", "s"], 2, [(0, "b", 1), (1, "s", 0)], 0, [0])
    reach, trans = oracles.product_by_pairs(a, b)
    p = sync_product([a, b])
    assert p.n_states == len(reach) == 4
    assert p.n_transitions == len(trans) == 5


@settings(max_examples=60)
@given(automata(max_states=4), automata(max_states=4, alphabet=("b", "c", "d")), automata(max_states=3))
def test_sync_product_commutative_associative(a, b, c):
    assert language_equal(sync_product([a, b]), sync_product([b, a]))
    left = sync_product([sync_product([a, b]), c])
    right = sync_product([a, sync_product([b, c])])
    assert language_equal(left, right)


def test_projection_identity():
    a = chain(["a", "b", "a"], [3])
    assert language_equal(natural_projection(a, a.alphabet), a)


def test_projection_erases():
    a = chain(["a11", TICK, "b11"], [3])
    p = natural_projection(a, [TICK])
    closed, marked = oracles.strings(p, 5)
    assert closed == {(), (TICK,)}
    assert marked == {(TICK,)}


def test_projection_requires_subset():
    with pytest.raises(ValueError):
        natural_projection(chain(["a"], [1]), ["z"])


def test_projection_of_cell_sup(cell):
    sub = {"a11", TICK}
    p = natural_projection(cell.sup, sub)
    closed, marked = oracles.strings(cell.sup, 12)
    proj_closed = {oracles.project(s, sub) for s in closed}
    proj_marked = {oracles.project(s, sub) for s in marked}
    got_closed, got_marked = oracles.strings(p, 12)
    # Any SUP string has at most 7 events outside {a11, tick}, so projected
    # strings of length <= 5 all have preimages of length <= 12.
    short = lambda S: {s for s in S if len(s) <= 5}
    assert short(got_closed) == short(proj_closed)
    assert short(got_marked) == short(proj_marked)
    assert proj_closed <= got_closed and proj_marked <= got_marked


@given(automata(), st.sets(st.sampled_from("abc")))
def test_projection_inverse_contains_original(a, sub):
    p = natural_projection(a, sub)
    lifted = sync_product([a, p])
    assert language_equal(lifted, a)


def test_language_equal_and_witness():
    a = chain(["a", "b"], [1, 2])
    assert language_equal(a, a)
    b = TimedAutomaton.build(a.alphabet, 3, a.transitions(), 0, [2])
    assert not language_equal(a, b)
    assert equality_witness(a, b) == (("a",), "marked")
    assert counterexample(b, a) is None
    assert language_subset(b, a)


@settings(max_examples=200, deadline=None)
@given(automata(max_states=6, alphabet=("a", "b")), automata(max_states=6, alphabet=("a", "b")))
def test_language_equal_agrees_with_enumeration(a, b):
    # two DFAs that differ already differ on a string of length < |A| + |B|
    bound = a.n_states + b.n_states
    assert language_equal(a, b) == oracles.equal_by_enumeration(a, b, bound)
    assert language_subset(a, b) == all(
        s <= t for s, t in zip(oracles.strings(a, bound), oracles.strings(b, bound))
    )


def test_empty_automaton_is_empty_language():
    e = TimedAutomaton.empty("a")
    assert not e.generates([])
    assert language_equal(e, trim(TimedAutomaton.build("a", 1, [(0, "a", 0)], 0, [])))


def test_operations_do_not_mutate_inputs():
    a = chain(["a", "b"], [1])
    before = a.transitions()
    trim(a), reachable(a), natural_projection(a, ["a"]), sync_product([a, a])
    assert a.transitions() == before


def test_dot_output_is_deterministic():
    a = chain(["a", "b"], [2])
    text = to_dot(a)
    assert text == to_dot(a)
    assert "doublecircle" in text and 'label="a"' in text and "init -> 0" in text
