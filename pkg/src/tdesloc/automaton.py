"""Deterministic finite automata and the language operations built on them.

States are dense integer indices ``0..n-1``; events are plain strings kept in
lexicographic order so every traversal (and hence every output) is
reproducible. The automaton with zero states is the canonical empty language.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

TICK = "tick"


@dataclass(frozen=True, eq=False)
class TimedAutomaton:
    """A deterministic automaton whose alphabet may contain ``tick``.

    ``delta[x]`` maps each event defined at state ``x`` to its successor.
    """

    alphabet: tuple[str, ...]
    delta: tuple[Mapping[str, int], ...]
    initial: int | None
    marked: frozenset[int]
    labels: tuple[str, ...] | None = None
    name: str = ""

    def __post_init__(self):
        n = len(self.delta)
        if list(self.alphabet) != sorted(set(self.alphabet)):
            raise ValueError("alphabet must be sorted and duplicate-free")
        if any(not e for e in self.alphabet):
            raise ValueError("event names must be non-empty")
        if n == 0:
            if self.initial is not None or self.marked:
                raise ValueError("empty automaton has no initial or marked state")
        elif self.initial is None or not 0 <= self.initial < n:
            raise ValueError(f"initial state {self.initial!r} out of range")
        if any(not 0 <= x < n for x in self.marked):
            raise ValueError("marked state out of range")
        events = set(self.alphabet)
        for x, row in enumerate(self.delta):
            for e, y in row.items():
                if e not in events:
                    raise ValueError(f"event {e!r} at state {x} not in alphabet")
                if not 0 <= y < n:
                    raise ValueError(f"transition ({x}, {e}) -> {y} out of range")
        if self.labels is not None and len(self.labels) != n:
            raise ValueError("need exactly one label per state")

    @classmethod
    def build(
        cls,
        alphabet: Iterable[str],
        n_states: int,
        transitions: Iterable[tuple[int, str, int]],
        initial: int | None = 0,
        marked: Iterable[int] = (),
        labels: Sequence[str] | None = None,
        name: str = "",
    ) -> "TimedAutomaton":
        """Construct from transition triples, rejecting nondeterminism."""
        rows: list[dict[str, int]] = [{} for _ in range(n_states)]
        for x, e, y in transitions:
            if not 0 <= x < n_states:
                raise ValueError(f"transition source {x} out of range")
            if e in rows[x] and rows[x][e] != y:
                raise ValueError(f"nondeterministic transition ({x}, {e})")
            rows[x][e] = y
        if n_states == 0:
            initial = None
        return cls(
            alphabet=tuple(sorted(set(alphabet))),
            delta=tuple({e: row[e] for e in sorted(row)} for row in rows),
            initial=initial,
            marked=frozenset(marked),
            labels=tuple(labels) if labels else None,
            name=name,
        )

    @classmethod
    def empty(cls, alphabet: Iterable[str] = (), name: str = "") -> "TimedAutomaton":
        return cls.build(alphabet, 0, (), name=name)

    @classmethod
    def universal(cls, alphabet: Iterable[str], name: str = "") -> "TimedAutomaton":
        """One marked state with a selfloop on every event."""
        alphabet = sorted(set(alphabet))
        return cls.build(alphabet, 1, [(0, e, 0) for e in alphabet], 0, [0], name=name)

    @property
    def n_states(self) -> int:
        return len(self.delta)

    @property
    def n_transitions(self) -> int:
        return sum(len(row) for row in self.delta)

    def transitions(self) -> list[tuple[int, str, int]]:
        return [(x, e, y) for x, row in enumerate(self.delta) for e, y in row.items()]

    def step(self, state: int | None, event: str) -> int | None:
        if state is None:
            return None
        return self.delta[state].get(event)

    def run(self, string: Iterable[str]) -> int | None:
        """State reached by ``string`` from the initial state, or ``None``."""
        x = self.initial
        for e in string:
            x = self.step(x, e)
            if x is None:
                return None
        return x

    def accepts(self, string: Iterable[str]) -> bool:
        x = self.run(string)
        return x is not None and x in self.marked

    def generates(self, string: Iterable[str]) -> bool:
        return self.run(string) is not None

    def with_name(self, name: str) -> "TimedAutomaton":
        return TimedAutomaton(self.alphabet, self.delta, self.initial, self.marked, self.labels, name)

    def __eq__(self, other):
        # Structural identity (used for serialization round trips).
        if not isinstance(other, TimedAutomaton):
            return NotImplemented
        return (
            self.alphabet == other.alphabet
            and self.initial == other.initial
            and self.marked == other.marked
            and self.labels == other.labels
            and self.name == other.name
            and [dict(r) for r in self.delta] == [dict(r) for r in other.delta]
        )

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self):
        return (
            f"TimedAutomaton(name={self.name!r}, states={self.n_states}, "
            f"transitions={self.n_transitions}, alphabet={list(self.alphabet)})"
        )


def eligible(aut: TimedAutomaton, state: int) -> frozenset[str]:
    """Events defined at ``state``."""
    if not 0 <= state < aut.n_states:
        raise IndexError(f"state {state} not in automaton with {aut.n_states} states")
    return frozenset(aut.delta[state])


def _bfs_order(aut: TimedAutomaton) -> list[int]:
    if aut.initial is None:
        return []
    seen = {aut.initial}
    order = [aut.initial]
    queue = deque(order)
    while queue:
        x = queue.popleft()
        for y in aut.delta[x].values():
            if y not in seen:
                seen.add(y)
                order.append(y)
                queue.append(y)
    return order


def _coreachable(aut: TimedAutomaton, states: Iterable[int] | None = None) -> set[int]:
    pred: dict[int, set[int]] = {}
    for x, _, y in aut.transitions():
        pred.setdefault(y, set()).add(x)
    found = set(aut.marked)
    stack = list(found)
    while stack:
        y = stack.pop()
        for x in pred.get(y, ()):
            if x not in found:
                found.add(x)
                stack.append(x)
    return found


def restrict(aut: TimedAutomaton, keep: Iterable[int]) -> TimedAutomaton:
    """Sub-automaton on ``keep``, renumbered in breadth-first order from the
    initial state. States not reachable within ``keep`` are dropped too."""
    keep = set(keep)
    if aut.initial is None or aut.initial not in keep:
        return TimedAutomaton.empty(aut.alphabet, aut.name)
    index = {aut.initial: 0}
    order = [aut.initial]
    queue = deque(order)
    while queue:
        x = queue.popleft()
        for y in aut.delta[x].values():
            if y in keep and y not in index:
                index[y] = len(order)
                order.append(y)
                queue.append(y)
    trans = [
        (index[x], e, index[y])
        for x in order
        for e, y in aut.delta[x].items()
        if y in index
    ]
    labels = [aut.labels[x] for x in order] if aut.labels is not None else None
    marked = [index[x] for x in order if x in aut.marked]
    return TimedAutomaton.build(aut.alphabet, len(order), trans, 0, marked, labels, aut.name)


def reachable(aut: TimedAutomaton) -> TimedAutomaton:
    return restrict(aut, range(aut.n_states))


def trim(aut: TimedAutomaton) -> TimedAutomaton:
    """Keep the states that are both reachable and coreachable."""
    reach = set(_bfs_order(aut))
    co = _coreachable(aut)
    return restrict(aut, reach & co)


def is_nonblocking(aut: TimedAutomaton) -> bool:
    reach = _bfs_order(aut)
    co = _coreachable(aut)
    return all(x in co for x in reach)


def product_map(auts: Sequence[TimedAutomaton]) -> tuple[TimedAutomaton, list[tuple[int, ...]]]:
    """Synchronous product together with the component-state tuple of every
    product state.

    An event fires iff every operand whose alphabet contains it can fire it;
    events private to some operands interleave.
    """
    if not auts:
        raise ValueError("sync_product needs at least one automaton")
    alphabet = sorted(set().union(*(a.alphabet for a in auts)))
    if any(a.initial is None for a in auts):
        return TimedAutomaton.empty(alphabet), []
    owners = {e: [k for k, a in enumerate(auts) if e in a.alphabet] for e in alphabet}
    start = tuple(a.initial for a in auts)
    index = {start: 0}
    tuples = [start]
    trans: list[tuple[int, str, int]] = []
    queue = deque([start])
    while queue:
        cur = queue.popleft()
        src = index[cur]
        for e in alphabet:
            nxt = list(cur)
            for k in owners[e]:
                y = auts[k].delta[cur[k]].get(e)
                if y is None:
                    break
                nxt[k] = y
            else:
                nxt_t = tuple(nxt)
                dst = index.get(nxt_t)
                if dst is None:
                    dst = index[nxt_t] = len(tuples)
                    tuples.append(nxt_t)
                    queue.append(nxt_t)
                trans.append((src, e, dst))
    marked = [i for i, t in enumerate(tuples) if all(t[k] in a.marked for k, a in enumerate(auts))]
    return TimedAutomaton.build(alphabet, len(tuples), trans, 0, marked), tuples


def sync_product(auts: Sequence[TimedAutomaton], name: str = "") -> TimedAutomaton:
    return product_map(auts)[0].with_name(name)


def natural_projection(aut: TimedAutomaton, sub: Iterable[str]) -> TimedAutomaton:
    """Deterministic automaton for the projection of ``aut`` onto ``sub``.

    Built by subset construction; states are labelled by their sorted subset.
    """
    sub = sorted(set(sub))
    if not set(sub) <= set(aut.alphabet):
        raise ValueError(f"events {sorted(set(sub) - set(aut.alphabet))} not in alphabet")
    if aut.initial is None:
        return TimedAutomaton.empty(sub, aut.name)
    kept = set(sub)

    def closure(states):
        out = set(states)
        stack = list(states)
        while stack:
            x = stack.pop()
            for e, y in aut.delta[x].items():
                if e not in kept and y not in out:
                    out.add(y)
                    stack.append(y)
        return frozenset(out)

    start = closure([aut.initial])
    index = {start: 0}
    subsets = [start]
    trans = []
    queue = deque([start])
    while queue:
        cur = queue.popleft()
        for e in sub:
            targets = {aut.delta[x][e] for x in cur if e in aut.delta[x]}
            if not targets:
                continue
            nxt = closure(targets)
            if nxt not in index:
                index[nxt] = len(subsets)
                subsets.append(nxt)
                queue.append(nxt)
            trans.append((index[cur], e, index[nxt]))
    marked = [i for i, s in enumerate(subsets) if s & aut.marked]
    labels = ["{" + ",".join(map(str, sorted(s))) + "}" for s in subsets]
    return TimedAutomaton.build(sub, len(subsets), trans, 0, marked, labels, aut.name)


def selfloop(aut: TimedAutomaton, events: Iterable[str]) -> TimedAutomaton:
    """Add selfloops for ``events`` (new to the alphabet) at every state."""
    events = set(events) - set(aut.alphabet)
    trans = aut.transitions() + [(x, e, x) for x in range(aut.n_states) for e in events]
    return TimedAutomaton.build(
        set(aut.alphabet) | events, aut.n_states, trans, aut.initial, aut.marked, aut.labels, aut.name
    )


def counterexample(a: TimedAutomaton, b: TimedAutomaton) -> tuple[tuple[str, ...], str] | None:
    """Shortest witness that ``a`` is not included in ``b``.

    Returns ``(string, kind)`` where ``kind`` is ``"closed"`` if the string is
    generated by ``a`` but not ``b``, or ``"marked"`` if it is marked by ``a``
    only. ``None`` means L(a) ⊆ L(b) and Lm(a) ⊆ Lm(b).
    """
    if a.initial is None:
        return None
    if b.initial is None:
        return (), "closed"
    start = (a.initial, b.initial)
    parent: dict[tuple[int, int], tuple[tuple[int, int], str] | None] = {start: None}
    queue = deque([start])

    def path(node):
        out = []
        while parent[node] is not None:
            node, e = parent[node]
            out.append(e)
        return tuple(reversed(out))

    while queue:
        node = queue.popleft()
        x, y = node
        if x in a.marked and y not in b.marked:
            return path(node), "marked"
        for e, x2 in a.delta[x].items():
            y2 = b.delta[y].get(e)
            if y2 is None:
                return path(node) + (e,), "closed"
            nxt = (x2, y2)
            if nxt not in parent:
                parent[nxt] = (node, e)
                queue.append(nxt)
    return None


def language_subset(a: TimedAutomaton, b: TimedAutomaton) -> bool:
    return counterexample(a, b) is None


def equality_witness(a: TimedAutomaton, b: TimedAutomaton) -> tuple[tuple[str, ...], str] | None:
    """Shortest string on which ``a`` and ``b`` disagree, or ``None``."""
    found = [w for w in (counterexample(a, b), counterexample(b, a)) if w is not None]
    if not found:
        return None
    return min(found, key=lambda w: (len(w[0]), w[0]))


def language_equal(a: TimedAutomaton, b: TimedAutomaton) -> bool:
    return equality_witness(a, b) is None


def to_dot(aut: TimedAutomaton) -> str:
    """Graphviz rendering: double circles are marked, the arrow from the
    invisible ``init`` node points at the initial state."""
    title = aut.name or "automaton"
    lines = [f'digraph "{title}" {{', "  rankdir=LR;", '  init [shape=point, label=""];']
    for x in range(aut.n_states):
        shape = "doublecircle" if x in aut.marked else "circle"
        label = str(x) if aut.labels is None else f"{x}\\n{aut.labels[x]}"
        lines.append(f'  {x} [shape={shape}, label="{label}"];')
    if aut.initial is not None:
        lines.append(f"  init -> {aut.initial};")
    for x, e, y in aut.transitions():
        lines.append(f'  {x} -> {y} [label="{e}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
