"""Controllability checking and supremal controllable sublanguage synthesis."""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass
from typing import Sequence

from .automaton import TICK, TimedAutomaton, product_map, restrict, _coreachable
from .tdes import EventClassification

log = logging.getLogger(__name__)

UNCONTROLLABLE_EVENT = "uncontrollable-event"
TICK_WITHOUT_FORCIBLE = "tick-without-forcible"


@dataclass(frozen=True)
class ControllabilityReport:
    controllable: bool
    string: tuple[str, ...] | None = None
    event: str | None = None
    case: str | None = None

    def __bool__(self):
        return self.controllable


def _violation(f_events, g_events, cls: EventClassification) -> tuple[str, str] | None:
    """First event (in name order) that control cannot legally refuse."""
    for e in sorted(g_events - f_events):
        if e in cls.uncontrollable:
            return e, UNCONTROLLABLE_EVENT
        if e == TICK and not (f_events & cls.forcible):
            return e, TICK_WITHOUT_FORCIBLE
    return None


def is_controllable(F: TimedAutomaton, G: TimedAutomaton, cls: EventClassification) -> ControllabilityReport:
    """Check the closed behaviour of ``F`` against plant ``G``.

    Walks the synchronized product of ``F`` and ``G`` breadth first, so a
    returned witness string is a shortest one.
    """
    if set(F.alphabet) != set(G.alphabet):
        raise ValueError(
            f"alphabet mismatch: {sorted(set(F.alphabet) ^ set(G.alphabet))}"
        )
    if F.initial is None or G.initial is None:
        return ControllabilityReport(True)
    start = (F.initial, G.initial)
    parent: dict = {start: None}
    queue = deque([start])
    while queue:
        node = queue.popleft()
        x, q = node
        bad = _violation(set(F.delta[x]), set(G.delta[q]), cls)
        if bad is not None:
            s = []
            cur = node
            while parent[cur] is not None:
                cur, e = parent[cur]
                s.append(e)
            return ControllabilityReport(False, tuple(reversed(s)), *bad)
        for e, x2 in F.delta[x].items():
            q2 = G.delta[q].get(e)
            if q2 is not None and (x2, q2) not in parent:
                parent[(x2, q2)] = (node, e)
                queue.append((x2, q2))
    return ControllabilityReport(True)


def supcon(
    G: TimedAutomaton,
    E: TimedAutomaton | Sequence[TimedAutomaton],
    cls: EventClassification,
    name: str = "SUP",
    trace: list[list[int]] | None = None,
) -> TimedAutomaton:
    """Automaton marking the supremal controllable sublanguage of E ∩ Lm(G).

    ``E`` may be a single automaton or a list of them; events outside a
    specification's alphabet are unconstrained by it. If ``trace`` is given,
    the product states removed in each pass are appended to it.
    """
    specs = [E] if isinstance(E, TimedAutomaton) else list(E)
    prod, tuples = product_map([G, *specs])
    if prod.initial is None:
        return TimedAutomaton.empty(prod.alphabet, name)
    plant_state = [t[0] for t in tuples]
    alive = set(range(prod.n_states))
    while True:
        removed = []
        for x in sorted(alive):
            here = {e for e, y in prod.delta[x].items() if y in alive}
            if _violation(here, set(G.delta[plant_state[x]]), cls) is not None:
                removed.append(x)
        alive.difference_update(removed)
        # Trim: drop states that can no longer reach a marked state.
        sub = _restricted(prod, alive)
        co = _coreachable(sub)
        blocking = sorted(alive - co)
        alive &= co
        removed += blocking
        if trace is not None and removed:
            trace.append(sorted(removed))
        log.debug("supcon pass removed %d states", len(removed))
        if not removed:
            break
        if prod.initial not in alive:
            break
    out = restrict(prod, alive)
    return TimedAutomaton(out.alphabet, out.delta, out.initial, out.marked, None, name)


def _restricted(aut: TimedAutomaton, alive: set[int]) -> TimedAutomaton:
    """Same numbering, with dead states and the transitions into them cut."""
    delta = tuple(
        {e: y for e, y in row.items() if y in alive} if x in alive else {}
        for x, row in enumerate(aut.delta)
    )
    return TimedAutomaton(aut.alphabet, delta, aut.initial, aut.marked & alive)
