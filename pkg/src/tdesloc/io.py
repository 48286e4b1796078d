"""Text formats: model files (agents + specifications) and automaton files.

Model file::

    agent MACH1
      activities I W1 W2
      initial I
      marked I
      event a11 lower=1 upper=inf prohibitible=true forcible=true
      event b11 lower=3 upper=3
      trans I a11 W1
    end

    spec SPEC1
      states 2
      initial 0
      marked 0 1
      trans 0 b11 1
      selfloop 0 1 : tick a12
    end

``#`` starts a comment. A spec's alphabet is every event it mentions plus an
optional ``alphabet`` line (events listed there but never used are blocked).
"""

from __future__ import annotations

import os
import tempfile
from dataclasses import dataclass

from .automaton import TICK, TimedAutomaton
from .tdes import ActivityModel, EventSpec, ModelError

AGENT_KEYS = {"activities", "initial", "marked", "event", "trans"}
SPEC_KEYS = {"states", "initial", "marked", "trans", "selfloop", "alphabet"}
EVENT_FIELDS = {"lower", "upper", "prohibitible", "forcible"}


class ParseError(ModelError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass
class ModelFile:
    agents: list[ActivityModel]
    specs: list[TimedAutomaton]


def _bool(text, lineno):
    if text in ("true", "yes", "1"):
        return True
    if text in ("false", "no", "0"):
        return False
    raise ParseError(f"expected a boolean, got {text!r}", lineno)


def _int(text, lineno, what="integer"):
    try:
        value = int(text)
    except ValueError:
        raise ParseError(f"expected {what}, got {text!r}", lineno) from None
    if value < 0:
        raise ParseError(f"expected non-negative {what}, got {value}", lineno)
    return value


def _blocks(text):
    """Yield (kind, name, header line, [(lineno, words)]) for each block."""
    current = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        words = raw.split("#", 1)[0].split()
        if not words:
            continue
        head = words[0]
        if current is None:
            if head not in ("agent", "spec"):
                raise ParseError(f"expected 'agent' or 'spec', got {head!r}", lineno)
            if len(words) != 2:
                raise ParseError(f"'{head}' needs exactly one name", lineno)
            current = (head, words[1], lineno, [])
        elif head == "end":
            if len(words) != 1:
                raise ParseError("'end' takes no arguments", lineno)
            yield current
            current = None
        else:
            current[3].append((lineno, words))
    if current is not None:
        raise ParseError(f"{current[0]} {current[1]} is missing 'end'", current[2])


def _parse_event(words, lineno):
    if len(words) < 2:
        raise ParseError("event needs a name", lineno)
    name = words[1]
    fields = {}
    for item in words[2:]:
        key, sep, value = item.partition("=")
        if not sep or key not in EVENT_FIELDS:
            raise ParseError(f"unknown event attribute {item!r}", lineno)
        if key in fields:
            raise ParseError(f"duplicate attribute {key!r}", lineno)
        fields[key] = value
    if "lower" not in fields:
        raise ParseError(f"event {name} needs lower=", lineno)
    lower = _int(fields["lower"], lineno, "lower bound")
    upper_text = fields.get("upper", "inf")
    upper = None if upper_text == "inf" else _int(upper_text, lineno, "upper bound")
    if upper is not None and lower > upper:
        raise ParseError(f"event {name}: lower bound {lower} exceeds upper bound {upper}", lineno)
    return name, EventSpec(
        lower,
        upper,
        _bool(fields.get("prohibitible", "false"), lineno),
        _bool(fields.get("forcible", "false"), lineno),
    )


def _parse_agent(name, header, body):
    acts, initial, marked, events, trans = None, None, [], {}, {}
    for lineno, words in body:
        key = words[0]
        if key not in AGENT_KEYS:
            raise ParseError(f"unknown agent key {key!r}", lineno)
        if key == "activities":
            acts = tuple(words[1:])
        elif key == "initial":
            if len(words) != 2:
                raise ParseError("initial needs one activity", lineno)
            initial = words[1]
        elif key == "marked":
            marked += words[1:]
        elif key == "event":
            ev, spec = _parse_event(words, lineno)
            if ev in events:
                raise ParseError(f"event {ev} declared twice", lineno)
            if ev == TICK:
                raise ParseError(f"{TICK!r} is reserved", lineno)
            events[ev] = spec
        elif key == "trans":
            if len(words) != 4:
                raise ParseError("trans needs: source event target", lineno)
            _, a, e, b = words
            if acts is None or a not in acts or b not in acts:
                raise ParseError(f"transition uses undeclared activity ({a} or {b})", lineno)
            if e not in events:
                raise ParseError(f"transition uses undeclared event {e}", lineno)
            if (a, e) in trans:
                raise ParseError(f"duplicate transition ({a}, {e})", lineno)
            trans[(a, e)] = b
    if acts is None:
        raise ParseError(f"agent {name} has no activities", header)
    if initial is None:
        raise ParseError(f"agent {name} has no initial activity", header)
    try:
        return ActivityModel(name, acts, events, trans, initial, frozenset(marked))
    except ModelError as exc:
        raise ParseError(str(exc), header) from None


def _parse_spec(name, header, body, known):
    n, initial, marked, trans, extra = None, 0, [], [], set()
    for lineno, words in body:
        key = words[0]
        if key not in SPEC_KEYS:
            raise ParseError(f"unknown spec key {key!r}", lineno)
        if key == "states":
            if len(words) != 2:
                raise ParseError("states needs a count", lineno)
            n = _int(words[1], lineno, "state count")
        elif key == "initial":
            initial = _int(words[1], lineno, "state") if len(words) == 2 else None
            if initial is None:
                raise ParseError("initial needs one state", lineno)
        elif key == "marked":
            marked += [_int(w, lineno, "state") for w in words[1:]]
        elif key == "alphabet":
            extra |= set(words[1:])
        elif key == "trans":
            if len(words) != 4:
                raise ParseError("trans needs: source event target", lineno)
            trans.append((_int(words[1], lineno, "state"), words[2], _int(words[3], lineno, "state"), lineno))
        elif key == "selfloop":
            if ":" not in words:
                raise ParseError("selfloop needs: states : events", lineno)
            cut = words.index(":")
            for x in words[1:cut]:
                for e in words[cut + 1:]:
                    trans.append((_int(x, lineno, "state"), e, _int(x, lineno, "state"), lineno))
    if n is None:
        raise ParseError(f"spec {name} has no 'states' line", header)
    for x, e, y, lineno in trans:
        if not (0 <= x < n and 0 <= y < n):
            raise ParseError(f"state out of range in ({x}, {e}, {y})", lineno)
    for x in marked + [initial]:
        if not 0 <= x < n:
            raise ParseError(f"state {x} out of range", header)
    alphabet = {e for _, e, _, _ in trans} | extra
    unknown = sorted(alphabet - known)
    if unknown:
        raise ParseError(f"spec {name} uses undeclared events {unknown}", header)
    try:
        return TimedAutomaton.build(alphabet, n, [t[:3] for t in trans], initial, marked, name=name)
    except ValueError as exc:
        raise ParseError(f"spec {name}: {exc}", header) from None


def parse_model(text: str) -> ModelFile:
    agents, specs, names = [], [], set()
    pending_specs = []
    for kind, name, header, body in _blocks(text):
        if name in names:
            raise ParseError(f"duplicate block name {name}", header)
        names.add(name)
        if kind == "agent":
            agents.append(_parse_agent(name, header, body))
        else:
            pending_specs.append((name, header, body))
    if not agents:
        raise ParseError("no agent block")
    known = {TICK} | {e for m in agents for e in m.events}
    for name, header, body in pending_specs:
        specs.append(_parse_spec(name, header, body, known))
    return ModelFile(agents, specs)


def load_model(path) -> ModelFile:
    with open(path, encoding="utf-8") as fh:
        return parse_model(fh.read())


def serialize(aut: TimedAutomaton) -> str:
    lines = [f"automaton {aut.name}".rstrip()]
    lines.append("alphabet " + " ".join(aut.alphabet) if aut.alphabet else "alphabet")
    lines.append(f"states {aut.n_states}")
    lines.append(f"initial {'-' if aut.initial is None else aut.initial}")
    lines.append("marked " + " ".join(map(str, sorted(aut.marked))) if aut.marked else "marked")
    for x, e, y in aut.transitions():
        lines.append(f"trans {x} {e} {y}")
    if aut.labels is not None:
        for x, label in enumerate(aut.labels):
            lines.append(f"label {x} {label}".rstrip())
    lines.append("end")
    return "\n".join(lines) + "\n"


def parse_automaton(text: str) -> TimedAutomaton:
    lines = [(i, ln) for i, ln in enumerate(text.splitlines(), 1) if ln.strip()]
    if not lines or not lines[0][1].startswith("automaton"):
        raise ParseError("expected 'automaton' header", lines[0][0] if lines else 1)
    name = lines[0][1][len("automaton"):].strip()
    alphabet, n, initial, marked, trans, labels = None, None, 0, [], [], {}
    ended = False
    for lineno, line in lines[1:]:
        words = line.split()
        key = words[0]
        if ended:
            raise ParseError("content after 'end'", lineno)
        if key == "alphabet":
            alphabet = words[1:]
        elif key == "states":
            n = _int(words[1], lineno, "state count")
        elif key == "initial":
            initial = None if words[1] == "-" else _int(words[1], lineno, "state")
        elif key == "marked":
            marked = [_int(w, lineno, "state") for w in words[1:]]
        elif key == "trans":
            if len(words) != 4:
                raise ParseError("trans needs: source event target", lineno)
            trans.append((_int(words[1], lineno, "state"), words[2], _int(words[3], lineno, "state")))
        elif key == "label":
            parts = line.strip().split(" ", 2)
            labels[_int(parts[1], lineno, "state")] = parts[2] if len(parts) == 3 else ""
        elif key == "end":
            ended = True
        else:
            raise ParseError(f"unknown automaton key {key!r}", lineno)
    if alphabet is None or n is None:
        raise ParseError("automaton file needs 'alphabet' and 'states'", lines[0][0])
    if not ended:
        raise ParseError("missing 'end'", lines[-1][0])
    label_list = None
    if labels:
        if sorted(labels) != list(range(n)):
            raise ParseError("labels must cover every state", lines[0][0])
        label_list = [labels[x] for x in range(n)]
    try:
        return TimedAutomaton.build(alphabet, n, trans, initial if n else None, marked, label_list, name)
    except ValueError as exc:
        raise ParseError(str(exc), lines[0][0]) from None


def load_automaton(path) -> TimedAutomaton:
    with open(path, encoding="utf-8") as fh:
        return parse_automaton(fh.read())


def write_atomic(path, text: str) -> None:
    """Write via a temporary file in the same directory, then rename."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
