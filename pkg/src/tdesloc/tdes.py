"""Activity models with time bounds and their timed transition graphs."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .automaton import TICK, TimedAutomaton, sync_product


class ModelError(ValueError):
    """An activity model violates one of its invariants."""


@dataclass(frozen=True)
class EventSpec:
    """Time bounds and control attributes of one activity event.

    ``upper=None`` stands for an infinite upper bound (a remote event).
    """

    lower: int
    upper: int | None = None
    prohibitible: bool = False
    forcible: bool = False

    @property
    def remote(self) -> bool:
        return self.upper is None

    @property
    def default(self) -> int:
        return default_timer(self)

    @property
    def interval(self) -> tuple[int, int]:
        return (0, self.lower if self.remote else self.upper)


def default_timer(bounds: EventSpec) -> int:
    """Timer value on (re)enablement: upper bound if prospective, lower if remote."""
    return bounds.lower if bounds.upper is None else bounds.upper


@dataclass(frozen=True)
class ActivityModel:
    name: str
    activities: tuple[str, ...]
    events: Mapping[str, EventSpec]
    transitions: Mapping[tuple[str, str], str]
    initial: str
    marked: frozenset[str] = field(default_factory=frozenset)

    def __post_init__(self):
        validate(self)

    @property
    def event_names(self) -> list[str]:
        return sorted(self.events)

    def enabled(self, activity: str, event: str) -> bool:
        return (activity, event) in self.transitions


def validate(m: ActivityModel) -> None:
    acts = set(m.activities)
    if len(acts) != len(m.activities):
        raise ModelError(f"{m.name}: duplicate activity names")
    if m.initial not in acts:
        raise ModelError(f"{m.name}: initial activity {m.initial!r} undeclared")
    if not set(m.marked) <= acts:
        raise ModelError(f"{m.name}: marked activities {sorted(set(m.marked) - acts)} undeclared")
    if TICK in m.events:
        raise ModelError(f"{m.name}: {TICK!r} is reserved and cannot be an activity event")
    for name, ev in m.events.items():
        if not name:
            raise ModelError(f"{m.name}: empty event name")
        if ev.lower < 0 or (ev.upper is not None and ev.upper < 0):
            raise ModelError(f"{m.name}: negative time bound on {name}")
        if ev.upper is not None and ev.lower > ev.upper:
            raise ModelError(f"{m.name}: lower bound {ev.lower} exceeds upper bound {ev.upper} on {name}")
        if ev.prohibitible and not ev.remote:
            raise ModelError(f"{m.name}: prohibitible event {name} must have infinite upper bound")
    for (a, e), b in m.transitions.items():
        if a not in acts or b not in acts:
            raise ModelError(f"{m.name}: transition ({a}, {e}) -> {b} uses an undeclared activity")
        if e not in m.events:
            raise ModelError(f"{m.name}: transition ({a}, {e}) -> {b} uses an undeclared event")


def state_bound(m: ActivityModel) -> int:
    """Upper bound on the states of ``build_tdes(m)``.

    A timer ranges over ``0..default``, so it contributes ``default + 1`` values.
    """
    return len(m.activities) * math.prod(ev.default + 1 for ev in m.events.values())


def nominal_bound(m: ActivityModel) -> int:
    """The customary estimate ``|A| * prod(default)``, zero defaults counted as one.

    This undercounts by ignoring the zero timer value; ``state_bound`` is exact
    as an upper bound.
    """
    return len(m.activities) * math.prod(max(ev.default, 1) for ev in m.events.values())


def _label(activity: str, timers: Sequence[int]) -> str:
    return f"{activity}|{','.join(map(str, timers))}"


def build_tdes(m: ActivityModel) -> TimedAutomaton:
    """Timed transition graph of ``m``, restricted to its reachable part.

    States are ``(activity, timers)`` with timers ordered by event name.
    An activity event fires when its activity transition exists and its timer
    has run down far enough; ``tick`` is blocked exactly when some enabled
    prospective event has timer zero.
    """
    names = m.event_names
    specs = [m.events[e] for e in names]
    defaults = tuple(s.default for s in specs)
    start = (m.initial, defaults)
    index = {start: 0}
    states = [start]
    trans: list[tuple[int, str, int]] = []
    queue = deque([start])
    alphabet = sorted(set(names) | {TICK})

    def add(src, e, nxt):
        dst = index.get(nxt)
        if dst is None:
            dst = index[nxt] = len(states)
            states.append(nxt)
            queue.append(nxt)
        trans.append((src, e, dst))

    while queue:
        a, t = cur = queue.popleft()
        src = index[cur]
        # Collect candidate successors first so edges come out in event order.
        moves: list[tuple[str, tuple[str, tuple[int, ...]]]] = []
        for i, (e, s) in enumerate(zip(names, specs)):
            target = m.transitions.get((a, e))
            if target is None:
                continue
            ready = t[i] == 0 if s.remote else t[i] <= s.upper - s.lower
            if not ready:
                continue
            timers = tuple(
                defaults[j] if j == i
                else t[j] if m.enabled(a, names[j]) and m.enabled(target, names[j])
                else defaults[j]
                for j in range(len(names))
            )
            moves.append((e, (target, timers)))
        tick_ok = all(
            not (m.enabled(a, e) and not s.remote and t[i] == 0)
            for i, (e, s) in enumerate(zip(names, specs))
        )
        if tick_ok:
            timers = tuple(
                defaults[i] if not m.enabled(a, e)
                else max(t[i] - 1, 0)
                for i, (e, s) in enumerate(zip(names, specs))
            )
            moves.append((TICK, (a, timers)))
        for e, nxt in sorted(moves, key=lambda mv: mv[0]):
            add(src, e, nxt)

    marked = [i for i, (a, _) in enumerate(states) if a in m.marked]
    labels = [_label(a, t) for a, t in states]
    return TimedAutomaton.build(alphabet, len(states), trans, 0, marked, labels, m.name)


def shared_event_check(models: Sequence[ActivityModel]) -> dict[str, EventSpec]:
    """Merge event specs across models; shared names must agree exactly."""
    merged: dict[str, tuple[str, EventSpec]] = {}
    for m in models:
        for e, spec in m.events.items():
            if e in merged and merged[e][1] != spec:
                other, prev = merged[e]
                raise ModelError(
                    f"event {e} declared differently in {other} "
                    f"(lower={prev.lower}, upper={_fmt(prev.upper)}, "
                    f"prohibitible={prev.prohibitible}, forcible={prev.forcible}) and {m.name} "
                    f"(lower={spec.lower}, upper={_fmt(spec.upper)}, "
                    f"prohibitible={spec.prohibitible}, forcible={spec.forcible})"
                )
            merged.setdefault(e, (m.name, spec))
    return {e: spec for e, (_, spec) in sorted(merged.items())}


def _fmt(upper):
    return "inf" if upper is None else str(upper)


def compose_tdes(models: Sequence[ActivityModel], name: str = "PLANT") -> TimedAutomaton:
    """Synchronous product of the individual timed graphs (``tick`` shared)."""
    if not models:
        raise ModelError("compose_tdes needs at least one model")
    shared_event_check(models)
    if len(models) == 1:
        return build_tdes(models[0])
    return sync_product([build_tdes(m) for m in models], name=name)


@dataclass(frozen=True)
class EventClassification:
    prospective: frozenset[str]
    remote: frozenset[str]
    prohibitible: frozenset[str]
    forcible: frozenset[str]

    @property
    def activity_events(self) -> frozenset[str]:
        return self.prospective | self.remote

    @property
    def alphabet(self) -> frozenset[str]:
        return self.activity_events | {TICK}

    @property
    def controllable(self) -> frozenset[str]:
        return self.prohibitible | {TICK}

    @property
    def uncontrollable(self) -> frozenset[str]:
        return self.prospective | (self.remote - self.prohibitible)


def classify(models: Sequence[ActivityModel]) -> EventClassification:
    events = shared_event_check(models)
    return EventClassification(
        prospective=frozenset(e for e, s in events.items() if not s.remote),
        remote=frozenset(e for e, s in events.items() if s.remote),
        prohibitible=frozenset(e for e, s in events.items() if s.prohibitible),
        forcible=frozenset(e for e, s in events.items() if s.forcible),
    )


def parse_label(label: str) -> tuple[str, tuple[int, ...]]:
    activity, _, timers = label.rpartition("|")
    return activity, tuple(int(v) for v in timers.split(",")) if timers else ()
