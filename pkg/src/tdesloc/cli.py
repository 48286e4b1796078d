"""Command line entry point: ``tdesloc VERB ...``.

Exit codes: 0 success, 1 verification failure, 2 bad input.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import dataclass
from importlib import resources

from . import io
from .automaton import TimedAutomaton, to_dot
from .distribution import AgentSpec, AllocationError, allocate, architecture_dot, report
from .localization import LocalizationError, equivalence_witness, localize_all
from .synthesis import supcon
from .tdes import EventClassification, ModelError, build_tdes, classify, compose_tdes, nominal_bound, state_bound

log = logging.getLogger("tdesloc")


def bundled_model(name: str = "manufacturing_cell") -> str:
    """Path of a model file shipped with the package."""
    return str(resources.files("tdesloc").joinpath("models", f"{name}.model"))


@dataclass
class Pipeline:
    model: io.ModelFile
    plant: TimedAutomaton
    cls: EventClassification
    sup: TimedAutomaton

    @classmethod
    def from_model(cls, model: io.ModelFile, trace=None) -> "Pipeline":
        plant = compose_tdes(model.agents)
        classes = classify(model.agents)
        specs = model.specs or [TimedAutomaton.universal(plant.alphabet)]
        return cls(model, plant, classes, supcon(plant, specs, classes, trace=trace))


def _emit(text: str, out: str | None) -> None:
    if out:
        io.write_atomic(out, text)
    else:
        sys.stdout.write(text)


def _load(path):
    if path == "cell":
        path = bundled_model()
    return io.load_model(path)


def cmd_build(args):
    model = _load(args.model)
    agents = [m for m in model.agents if args.agent in (None, m.name)]
    if not agents:
        raise ModelError(f"no agent named {args.agent}")
    _emit("".join(io.serialize(build_tdes(m)) for m in agents), args.output)
    return 0


def cmd_compose(args):
    model = _load(args.model)
    _emit(io.serialize(compose_tdes(model.agents)), args.output)
    return 0


def cmd_supcon(args):
    trace = [] if args.trace else None
    p = Pipeline.from_model(_load(args.model), trace)
    if args.output:
        io.write_atomic(args.output, io.serialize(p.sup))
    if trace is not None:
        for k, removed in enumerate(trace, 1):
            print(f"pass {k}: removed {len(removed)} states")
    print(f"SUP: {p.sup.n_states} states, {p.sup.n_transitions} transitions")
    return 0


def cmd_localize(args):
    p = Pipeline.from_model(_load(args.model))
    units = localize_all(p.plant, p.sup, p.cls)
    lines = [f"SUP: {p.sup.n_states} states, {p.sup.n_transitions} transitions"]
    if args.directory:
        os.makedirs(args.directory, exist_ok=True)
    for u in units:
        cells = " ".join("[" + ",".join(map(str, c)) + "]" for c in u.cells)
        lines.append(
            f"{u.title}: {u.automaton.n_states} states, alphabet {{{', '.join(u.alphabet)}}}, cells {cells}"
        )
        if args.directory:
            io.write_atomic(os.path.join(args.directory, f"{u.title}.aut"), io.serialize(u.automaton))
    lines.append("control equivalence: verified")
    text = "\n".join(lines) + "\n"
    if args.directory:
        io.write_atomic(os.path.join(args.directory, "summary.txt"), text)
        io.write_atomic(os.path.join(args.directory, "PLANT.aut"), io.serialize(p.plant.with_name("PLANT")))
        io.write_atomic(os.path.join(args.directory, "SUP.aut"), io.serialize(p.sup))
    sys.stdout.write(text)
    return 0


def cmd_verify(args):
    plant = io.load_automaton(args.plant)
    sup = io.load_automaton(args.sup)
    units = [io.load_automaton(u) for u in args.units]
    witness = equivalence_witness(plant, sup, units)
    if witness is None:
        print("control equivalent: L(G)∩L(LOC) = L(SUP) and Lm(G)∩Lm(LOC) = Lm(SUP)")
        return 0
    string, kind = witness
    print(f"NOT control equivalent ({kind} behaviour differs)")
    print("witness: " + (" ".join(string) if string else "(empty string)"))
    return 1


def cmd_allocate(args):
    p = Pipeline.from_model(_load(args.model))
    units = localize_all(p.plant, p.sup, p.cls)
    agents = [AgentSpec.from_model(m) for m in p.model.agents]
    alloc = allocate(agents, units)
    if args.dot:
        io.write_atomic(args.dot, architecture_dot(alloc, units))
    sys.stdout.write(report(alloc, units))
    return 0


def cmd_dot(args):
    _emit(to_dot(io.load_automaton(args.automaton)), args.output)
    return 0


def cmd_stats(args):
    model = _load(args.model)
    for m in model.agents:
        g = build_tdes(m)
        print(f"{m.name}: {g.n_states} states, {g.n_transitions} transitions, bound {state_bound(m)} (nominal {nominal_bound(m)})")
    plant = compose_tdes(model.agents)
    print(f"PLANT: {plant.n_states} states, {plant.n_transitions} transitions")
    for s in model.specs:
        print(f"{s.name}: {s.n_states} states, {s.n_transitions} transitions")
    return 0


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tdesloc", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="verb", required=True)
    model_help = "model file ('cell' for the bundled manufacturing cell)"

    p = sub.add_parser("build", help="timed transition graph of each agent")
    p.add_argument("model", help=model_help)
    p.add_argument("--agent")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("compose", help="plant as the product of all agents")
    p.add_argument("model", help=model_help)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_compose)

    p = sub.add_parser("supcon", help="monolithic supervisor")
    p.add_argument("model", help=model_help)
    p.add_argument("-o", "--output")
    p.add_argument("--trace", action="store_true", help="print states removed per pass")
    p.set_defaults(func=cmd_supcon)

    p = sub.add_parser("localize", help="local preemptors and controllers")
    p.add_argument("model", help=model_help)
    p.add_argument("-d", "--directory", help="write one automaton file per unit here")
    p.set_defaults(func=cmd_localize)

    p = sub.add_parser("verify", help="check control equivalence of unit files")
    p.add_argument("plant")
    p.add_argument("sup")
    p.add_argument("units", nargs="*")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("allocate", help="distribute units over agents")
    p.add_argument("model", help=model_help)
    p.add_argument("--dot", help="write the architecture graph here")
    p.set_defaults(func=cmd_allocate)

    p = sub.add_parser("dot", help="Graphviz rendering of an automaton file")
    p.add_argument("automaton")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_dot)

    p = sub.add_parser("stats", help="state and transition counts")
    p.add_argument("model", help=model_help)
    p.set_defaults(func=cmd_stats)
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        return args.func(args)
    except (ModelError, OSError, LocalizationError, AllocationError) as exc:
        print(f"tdesloc: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
