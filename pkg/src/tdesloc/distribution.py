"""Allocation of local units to agents and the events agents must exchange."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .automaton import TICK
from .localization import PREEMPTOR, LocalUnit
from .tdes import ActivityModel


class AllocationError(ValueError):
    pass


@dataclass(frozen=True)
class AgentSpec:
    name: str
    alphabet: frozenset[str]  # includes tick
    forcible: frozenset[str] = frozenset()
    prohibitible: frozenset[str] = frozenset()

    def __post_init__(self):
        if TICK not in self.alphabet:
            raise AllocationError(f"agent {self.name}: alphabet must contain {TICK}")
        if not (self.forcible | self.prohibitible) <= self.alphabet:
            raise AllocationError(f"agent {self.name}: control events outside its alphabet")

    @classmethod
    def from_model(cls, m: ActivityModel) -> "AgentSpec":
        return cls(
            name=m.name,
            alphabet=frozenset(m.events) | {TICK},
            forcible=frozenset(e for e, s in m.events.items() if s.forcible),
            prohibitible=frozenset(e for e, s in m.events.items() if s.prohibitible),
        )

    @property
    def activity_events(self) -> frozenset[str]:
        return self.alphabet - {TICK}


@dataclass(frozen=True)
class Allocation:
    agents: tuple[AgentSpec, ...]
    owner: dict[tuple[str, str], int] = field(default_factory=dict)  # unit key -> agent index
    shared: tuple[tuple[str, str], ...] = ()  # units that had several candidate owners

    def units_of(self, k: int) -> list[tuple[str, str]]:
        return sorted(key for key, a in self.owner.items() if a == k)


def allocate(agents: Sequence[AgentSpec], units: Sequence[LocalUnit]) -> Allocation:
    """Give each unit to the lowest-indexed agent that controls its event."""
    owner = {}
    shared = []
    for u in units:
        attr = "forcible" if u.kind == PREEMPTOR else "prohibitible"
        candidates = [k for k, a in enumerate(agents) if u.event in getattr(a, attr)]
        if not candidates:
            raise AllocationError(f"no agent can own {u.title}: {u.event} is not {attr} in any agent")
        owner[u.key] = candidates[0]
        if len(candidates) > 1:
            shared.append(u.key)
    return Allocation(tuple(agents), owner, tuple(shared))


def critical_events(allocation: Allocation, units: Sequence[LocalUnit]) -> dict[str, frozenset[str]]:
    """Per agent, the events it must transmit: its own activity events that
    some unit owned by another agent observes. ``tick`` is never listed."""
    out = {}
    for k, agent in enumerate(allocation.agents):
        sent = set()
        for u in units:
            if allocation.owner[u.key] != k:
                sent |= set(u.alphabet) & agent.activity_events
        out[agent.name] = frozenset(sent - {TICK})
    return out


def channels(allocation: Allocation, units: Sequence[LocalUnit]) -> dict[tuple[str, str], frozenset[str]]:
    """Events sent from one agent to another, per ordered pair (sender, receiver)."""
    out = {}
    for k, sender in enumerate(allocation.agents):
        for r, receiver in enumerate(allocation.agents):
            if k == r:
                continue
            events = set()
            for u in units:
                if allocation.owner[u.key] == r:
                    events |= set(u.alphabet) & sender.activity_events
            # An event the receiver generates itself needs no message.
            events -= receiver.activity_events
            if events:
                out[(sender.name, receiver.name)] = frozenset(events)
    return out


def report(allocation: Allocation, units: Sequence[LocalUnit]) -> str:
    by_key = {u.key: u for u in units}
    lines = []
    for k, agent in enumerate(allocation.agents):
        lines.append(f"agent {agent.name}")
        for key in allocation.units_of(k):
            u = by_key[key]
            lines.append(
                f"  {u.title}: {u.automaton.n_states} states, alphabet {{{', '.join(u.alphabet)}}}"
            )
    crit = critical_events(allocation, units)
    lines.append("critical events")
    for agent in allocation.agents:
        lines.append(f"  {agent.name} transmits {{{', '.join(sorted(crit[agent.name]))}}}")
    union = sorted(set().union(*crit.values())) if crit else []
    lines.append(f"  all: {{{', '.join(union)}}}")
    for (s, r), evs in sorted(channels(allocation, units).items()):
        lines.append(f"  {s} -> {r}: {{{', '.join(sorted(evs))}}}")
    if allocation.shared:
        names = ", ".join(f"{kind} {event}" for kind, event in allocation.shared)
        lines.append(f"shared ownership resolved to lowest index: {names}")
    return "\n".join(lines) + "\n"


def architecture_dot(allocation: Allocation, units: Sequence[LocalUnit]) -> str:
    by_key = {u.key: u for u in units}
    lines = ["digraph architecture {", "  node [shape=box];"]
    for k, agent in enumerate(allocation.agents):
        inner = "\\n".join(by_key[key].title for key in allocation.units_of(k))
        lines.append(f'  "{agent.name}" [label="{agent.name}\\n{inner}"];')
    for (s, r), evs in sorted(channels(allocation, units).items()):
        lines.append(f'  "{s}" -> "{r}" [label="{", ".join(sorted(evs))}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
