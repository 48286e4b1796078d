"""Localization of a monolithic supervisor into local preemptors and controllers.

A local preemptor handles one forcible event's tick preemption; a local
controller handles one prohibitible event's disabling. Each is the quotient
of SUP by a congruence whose cells only group states that agree on that
event's control decision.
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .automaton import TICK, TimedAutomaton, equality_witness, product_map, sync_product
from .tdes import EventClassification

PREEMPTION = "preemption"
CONTROL = "control"
PREEMPTOR = "preemptor"
CONTROLLER = "controller"


class LocalizationError(ValueError):
    pass


@dataclass(frozen=True)
class StateFlags:
    """Per-SUP-state booleans driving the consistency relations."""

    e_tick: tuple[bool, ...]
    preempt: Mapping[str, tuple[bool, ...]]  # F_alpha
    enabled: Mapping[str, tuple[bool, ...]]  # E_beta
    disable: Mapping[str, tuple[bool, ...]]  # D_beta
    marked: tuple[bool, ...]  # M
    plant_marked: tuple[bool, ...]  # T


def compute_flags(SUP: TimedAutomaton, G: TimedAutomaton, cls: EventClassification) -> StateFlags:
    """Evaluate the flags exactly over the reachable pairs (SUP state, G state)."""
    n = SUP.n_states
    pairs: list[set[int]] = [set() for _ in range(n)]
    if n:
        if G.initial is None:
            raise LocalizationError("plant is empty but supervisor is not")
        start = (SUP.initial, G.initial)
        seen = {start}
        queue = deque([start])
        while queue:
            x, q = queue.popleft()
            pairs[x].add(q)
            for e, x2 in SUP.delta[x].items():
                q2 = G.delta[q].get(e)
                if q2 is None:
                    raise LocalizationError(f"supervisor event {e} at state {x} is not possible in the plant")
                if (x2, q2) not in seen:
                    seen.add((x2, q2))
                    queue.append((x2, q2))

    def g_has(x, e):
        return any(e in G.delta[q] for q in pairs[x])

    e_tick = tuple(TICK in SUP.delta[x] for x in range(n))
    preempt = {
        a: tuple(a in SUP.delta[x] and not e_tick[x] and g_has(x, TICK) for x in range(n))
        for a in sorted(cls.forcible)
    }
    enabled = {b: tuple(b in SUP.delta[x] for x in range(n)) for b in sorted(cls.prohibitible)}
    disable = {
        b: tuple(b not in SUP.delta[x] and g_has(x, b) for x in range(n))
        for b in sorted(cls.prohibitible)
    }
    marked = tuple(x in SUP.marked for x in range(n))
    plant_marked = tuple(any(q in G.marked for q in pairs[x]) for x in range(n))
    return StateFlags(e_tick, preempt, enabled, disable, marked, plant_marked)


def preemption_consistent(x: int, y: int, alpha: str, flags: StateFlags) -> bool:
    f = flags.preempt[alpha]
    return not (flags.e_tick[x] and f[y]) and not (flags.e_tick[y] and f[x])


def control_consistent(x: int, y: int, beta: str, flags: StateFlags) -> bool:
    e, d = flags.enabled[beta], flags.disable[beta]
    if (e[x] and d[y]) or (e[y] and d[x]):
        return False
    if flags.plant_marked[x] == flags.plant_marked[y] and flags.marked[x] != flags.marked[y]:
        return False
    return True


def _relation(kind: str):
    if kind == PREEMPTION:
        return preemption_consistent
    if kind == CONTROL:
        return control_consistent
    raise ValueError(f"unknown congruence kind {kind!r}")


@dataclass(frozen=True)
class Congruence:
    cells: tuple[tuple[int, ...], ...]
    event: str
    kind: str

    def cell_of(self) -> dict[int, int]:
        return {x: i for i, cell in enumerate(self.cells) for x in cell}


def compute_congruence(
    SUP: TimedAutomaton,
    flags: StateFlags,
    event: str,
    kind: str,
    max_search: int = 12,
) -> Congruence:
    """A small congruence for ``event``: fewest cells, then fewest observed events.

    Candidates are greedy coarsenings of several starting partitions: the
    singleton partition, and for each set of observed events the finest
    partition that leaves every other event as a selfloop on cells. Any
    congruence observing only that set coarsens the finest partition, and
    consistency is pairwise, so sets whose finest partition is inconsistent
    are skipped. With more than ``max_search`` candidate events only the
    singleton start is used.
    """
    consistent = _relation(kind)
    n = SUP.n_states
    partners = _partners(n, _incompatible(SUP, lambda x, y: consistent(x, y, event, flags)))
    base = {event, TICK} if kind == PREEMPTION else {event}
    others = sorted({e for row in SUP.delta for e in row} - base)
    starts = [list(range(n))]
    if len(others) <= max_search:
        for size in range(len(others) + 1):
            for observed in itertools.combinations(others, size):
                part = _finest(SUP, base | set(observed), partners)
                if part is not None:
                    starts.append(part)
    best = None
    seen = set()
    for start in starts:
        key = tuple(start)
        if key in seen:
            continue
        seen.add(key)
        cell = tuple(_greedy(SUP, start, partners))
        score = (len(set(cell)), len(_observed(SUP, cell) | base))
        if best is None or score < best[0]:
            best = (score, cell)
    cell = best[1]
    reps = sorted(set(cell))
    cells = tuple(tuple(x for x in range(n) if cell[x] == r) for r in reps)
    return Congruence(cells, event, kind)


def _observed(SUP, cell) -> set[str]:
    return {e for x, e, y in SUP.transitions() if cell[x] != cell[y]}


def _incompatible(SUP, rel) -> set[tuple[int, int]]:
    """Pairs (x, y), x < y, that no congruence can put in one cell: pairs that
    are inconsistent or lead by a common string to an inconsistent pair."""
    n = SUP.n_states
    pred: dict[str, dict[int, list[int]]] = {}
    for x, e, y in SUP.transitions():
        pred.setdefault(e, {}).setdefault(y, []).append(x)
    bad = {(x, y) for x in range(n) for y in range(x + 1, n) if not rel(x, y)}
    stack = list(bad)
    while stack:
        a, b = stack.pop()
        for by_target in pred.values():
            for p in by_target.get(a, ()):
                for q in by_target.get(b, ()):
                    if p != q:
                        pair = (p, q) if p < q else (q, p)
                        if pair not in bad:
                            bad.add(pair)
                            stack.append(pair)
    return bad


class _Partition:
    """Partition of SUP states whose cells are closed under every event.

    Each cell is named by its least member and keeps one successor per
    event; closure makes any member's successor a valid representative.
    """

    def __init__(self, SUP, part, partners):
        self.SUP, self.partners = SUP, partners
        self.part = list(part)
        self.groups: dict[int, list[int]] = {}
        for x, r in enumerate(self.part):
            self.groups.setdefault(r, []).append(x)
        self.succ = {}
        for r, members in self.groups.items():
            row: dict[str, int] = {}
            for x in members:
                for e, y in SUP.delta[x].items():
                    row.setdefault(e, y)
            self.succ[r] = row

    def merge(self, i, j) -> bool:
        """Merge the cells of ``i`` and ``j`` plus whatever forward closure
        drags in; commit and return True only if no clashing pair results."""
        part, groups, succ, partners = self.part, self.groups, self.succ, self.partners
        new_part: dict[int, int] = {}
        new_groups: dict[int, list[int] | None] = {}
        new_succ: dict[int, dict[str, int]] = {}

        def rep(x):
            return new_part.get(x, part[x])

        def members(r):
            return new_groups[r] if r in new_groups else groups[r]

        pending = [(i, j)]
        while pending:
            a, b = pending.pop()
            ra, rb = rep(a), rep(b)
            if ra == rb:
                continue
            left, right = members(ra), members(rb)
            small, big = (left, rb) if len(left) <= len(right) else (right, ra)
            for x in small:
                for y in partners[x]:
                    if rep(y) == big:
                        return False
            keep, gone = (ra, rb) if ra < rb else (rb, ra)
            for x in members(gone):
                new_part[x] = keep
            new_groups[keep] = left + right
            new_groups[gone] = None
            row = dict(new_succ.get(keep, succ[keep]))
            for e, y in new_succ.get(gone, succ[gone]).items():
                first = row.setdefault(e, y)
                if first != y:
                    pending.append((first, y))
            new_succ[keep] = row
        for x, r in new_part.items():
            part[x] = r
        for r, m in new_groups.items():
            if m is None:
                del groups[r]
                del succ[r]
            else:
                groups[r] = m
                succ[r] = new_succ[r]
        return True


def _partners(n, clash) -> list[set[int]]:
    out: list[set[int]] = [set() for _ in range(n)]
    for x, y in clash:
        out[x].add(y)
        out[y].add(x)
    return out


def _finest(SUP, observed, partners) -> list[int] | None:
    """Finest partition in which every event outside ``observed`` is a
    selfloop on cells, or ``None`` if no such congruence exists."""
    p = _Partition(SUP, range(SUP.n_states), partners)
    for x, e, y in SUP.transitions():
        if e not in observed and p.part[x] != p.part[y]:
            if not p.merge(x, y):
                return None
    return p.part


def _greedy(SUP, start, partners) -> list[int]:
    """Visit cells by ascending representative and try merging each with
    every later cell; keep each merge that stays consistent."""
    p = _Partition(SUP, start, partners)
    part = p.part
    n = SUP.n_states
    for i in range(n):
        if part[i] != i:
            continue
        for j in range(i + 1, n):
            if part[j] != j or part[i] != i:
                continue
            if j in partners[i]:
                continue
            p.merge(i, j)
    return part


def check_congruence(SUP: TimedAutomaton, flags: StateFlags, cong: Congruence) -> list[str]:
    """Problems with ``cong`` (empty list when it is a valid congruence)."""
    consistent = _relation(cong.kind)
    problems = []
    seen = [x for c in cong.cells for x in c]
    if sorted(seen) != list(range(SUP.n_states)):
        problems.append("cells do not partition the state set")
    if any(not c for c in cong.cells):
        problems.append("empty cell")
    where = cong.cell_of()
    for k, c in enumerate(cong.cells):
        for a in c:
            for b in c:
                if a < b and not consistent(a, b, cong.event, flags):
                    problems.append(f"cell {k}: states {a} and {b} inconsistent")
        targets: dict[str, set[int]] = {}
        for x in c:
            for e, y in SUP.delta[x].items():
                targets.setdefault(e, set()).add(where.get(y, -1))
        for e, ts in sorted(targets.items()):
            if len(ts) > 1:
                problems.append(f"cell {k}: event {e} leads to cells {sorted(ts)}")
    return problems


@dataclass(frozen=True)
class LocalUnit:
    automaton: TimedAutomaton
    kind: str
    event: str
    cells: tuple[tuple[int, ...], ...] = field(default=())

    @property
    def alphabet(self) -> tuple[str, ...]:
        return self.automaton.alphabet

    @property
    def key(self) -> tuple[str, str]:
        return (self.kind, self.event)

    @property
    def title(self) -> str:
        return f"LOC_{'P' if self.kind == PREEMPTOR else 'C'}_{self.event}"


def extract_local(
    SUP: TimedAutomaton, cong: Congruence, event: str, kind: str, flags: StateFlags | None = None
) -> LocalUnit:
    """Quotient SUP by ``cong`` and keep only the events that move between cells.

    The alphabet is decided on the bare quotient; the selfloops added
    afterwards never change it. With ``flags``, a preemptor also lets tick
    pass on cells where its event never preempts tick.
    """
    if kind not in (PREEMPTOR, CONTROLLER):
        raise ValueError(f"unknown unit kind {kind!r}")
    where = cong.cell_of()
    full: dict[tuple[int, str], int] = {}
    for x, e, y in SUP.transitions():
        i, j = where[x], where[y]
        if full.setdefault((i, e), j) != j:
            raise LocalizationError(f"cells are not closed under {e}: cell {i} reaches {full[(i, e)]} and {j}")
    base = {event, TICK} if kind == PREEMPTOR else {event}
    alphabet = base | {e for (i, e), j in full.items() if i != j}
    n = len(cong.cells)
    # A preemptor refuses only tick and a controller only its own event.
    # Any other move undefined on a cell becomes a selfloop: SUP refuses it
    # at every state of the cell, and the unit responsible for it does too.
    own = TICK if kind == PREEMPTOR else event
    for i in range(n):
        for e in alphabet - {own}:
            full.setdefault((i, e), i)
        if kind == PREEMPTOR and flags is not None:
            if not any(flags.preempt[event][x] for x in cong.cells[i]):
                full.setdefault((i, TICK), i)
    trans = [(i, e, j) for (i, e), j in sorted(full.items()) if e in alphabet]
    initial = where[SUP.initial] if n else None
    marked = [i for i, c in enumerate(cong.cells) if any(x in SUP.marked for x in c)]
    labels = ["[" + ",".join(map(str, c)) + "]" for c in cong.cells]
    prefix = "LOC_P_" if kind == PREEMPTOR else "LOC_C_"
    aut = TimedAutomaton.build(alphabet, n, trans, initial, marked, labels, prefix + event)
    return LocalUnit(aut, kind, event, cong.cells)


def localize_event(SUP, flags, event, kind) -> LocalUnit:
    ckind = PREEMPTION if kind == PREEMPTOR else CONTROL
    cong = compute_congruence(SUP, flags, event, ckind)
    return extract_local(SUP, cong, event, kind, flags)


def localize_all(
    G: TimedAutomaton, SUP: TimedAutomaton, cls: EventClassification, check: bool = True
) -> list[LocalUnit]:
    """One preemptor per forcible event and one controller per prohibitible
    event, preemptors first, each group in event order."""
    flags = compute_flags(SUP, G, cls)
    units = [localize_event(SUP, flags, a, PREEMPTOR) for a in sorted(cls.forcible)]
    units += [localize_event(SUP, flags, b, CONTROLLER) for b in sorted(cls.prohibitible)]
    if check:
        witness = equivalence_witness(G, SUP, units)
        if witness is not None:
            raise LocalizationError(f"local units are not control equivalent: {witness}")
    return units


def joint_behavior(G: TimedAutomaton, units: Iterable[LocalUnit | TimedAutomaton]) -> TimedAutomaton:
    auts = [u.automaton if isinstance(u, LocalUnit) else u for u in units]
    return sync_product([G, *auts], name="G||LOC")


def equivalence_witness(G, SUP, units) -> tuple[tuple[str, ...], str] | None:
    """Shortest string separating G || LOC from SUP, or ``None``."""
    auts = [u.automaton if isinstance(u, LocalUnit) else u for u in units]
    extra = set().union(*(a.alphabet for a in auts)) - set(G.alphabet) if auts else set()
    if extra:
        raise LocalizationError(f"unit events {sorted(extra)} not in plant alphabet")
    return equality_witness(joint_behavior(G, auts), SUP)


def verify_control_equivalence(G: TimedAutomaton, SUP: TimedAutomaton, units: Sequence) -> bool:
    return equivalence_witness(G, SUP, units) is None


def _preemptor_bad(unit: LocalUnit, strict: bool):
    alpha = unit.event

    def bad(g_ev, row):
        if TICK not in g_ev or TICK in row:
            return False
        return alpha not in row or (strict and alpha not in g_ev)

    return bad


def _controller_bad(unit: LocalUnit):
    def bad(g_ev, row):
        return any(e in unit.alphabet and e not in row and e != unit.event for e in g_ev)

    return bad


def preemptor_violation(G: TimedAutomaton, units: Sequence[LocalUnit], unit: LocalUnit, strict: bool = False):
    """String after which ``unit`` refuses tick (plant allows it) without
    offering its event; ``None`` if it behaves as a local preemptor.

    With ``strict`` the event must also be possible in the plant at that point.
    """
    return _walk(G, units, {units.index(unit): _preemptor_bad(unit, strict)})[unit.title]


def controller_violation(G: TimedAutomaton, units: Sequence[LocalUnit], unit: LocalUnit):
    """String after which ``unit`` refuses a plant-eligible event other than its own."""
    return _walk(G, units, {units.index(unit): _controller_bad(unit)})[unit.title]


def role_violations(G: TimedAutomaton, units: Sequence[LocalUnit], strict: bool = False) -> dict:
    """Shortest role-violating string per unit title (``None`` when it has none),
    from a single walk over the joint behaviour."""
    checks = {
        k: _preemptor_bad(u, strict) if u.kind == PREEMPTOR else _controller_bad(u)
        for k, u in enumerate(units)
    }
    return _walk(G, units, checks)


def _walk(G, units, checks):
    """Breadth-first walk of G || units; ``checks`` maps a unit index to a
    predicate on (plant-eligible events, unit transition row)."""
    found = {units[k].title: None for k in checks}
    auts = [G] + [u.automaton for u in units]
    prod, tuples = product_map(auts)
    if prod.initial is None:
        return found
    parent = {0: None}
    queue = deque([0])
    open_checks = dict(checks)
    while queue and open_checks:
        x = queue.popleft()
        t = tuples[x]
        g_ev = set(G.delta[t[0]])
        for k, bad in list(open_checks.items()):
            if bad(g_ev, auts[k + 1].delta[t[k + 1]]):
                s = []
                cur = x
                while parent[cur] is not None:
                    cur, e = parent[cur]
                    s.append(e)
                found[units[k].title] = tuple(reversed(s))
                del open_checks[k]
        for e, y in prod.delta[x].items():
            if y not in parent:
                parent[y] = (x, e)
                queue.append(y)
    return found
