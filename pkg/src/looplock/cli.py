"""Command-line front end.

Exit codes: 0 success (``verify``: similar), 1 error, 2 ``verify``: not similar.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import automaton as automaton_mod
from .dsl import format_spec, format_system_decl, parse_file, parse_value
from .elaborate import build_automaton
from .errors import LooplockError
from .interpreter import Interpretation, run_automaton, run_system, trace_jsonl
from .shapes import format_shape
from .systems import check_system, compose
from .typesys import format_type
from .verification import commutative_extension, epsilon_eliminate, verify

EXIT_OK, EXIT_ERROR, EXIT_NOT_SIMILAR = 0, 1, 2


class Style:
    """ANSI colouring governed by ``LOOPLOCK_COLOR`` (auto, never, always)."""

    def __init__(self, stream):
        mode = os.environ.get("LOOPLOCK_COLOR", "auto").lower()
        if mode == "always":
            self.on = True
        elif mode == "never":
            self.on = False
        else:
            self.on = hasattr(stream, "isatty") and stream.isatty()

    def paint(self, text, code):
        return f"\033[{code}m{text}\033[0m" if self.on else text

    def good(self, text):
        return self.paint(text, "32")

    def bad(self, text):
        return self.paint(text, "31")


def _write(path, text):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def cmd_check(args) -> int:
    spec = parse_file(args.file)
    typed = spec.check()
    style = Style(sys.stdout)
    for name, ts in typed.items():
        shape = format_shape(ts.type.shape_f, unicode=args.unicode)
        param = format_type(ts.type.param, 3, args.unicode)
        rel = "◁" if args.unicode else "<|"
        print(f"{style.good('ok')} {name} : [{shape} {rel} {shape}]^{param}"
              f"  state {format_type(ts.state, unicode=args.unicode)}")
    print(f"{len(spec.table.types)} types, {len(spec.table.functions)} functions, "
          f"{len(spec.defs)} definitions, {len(typed)} systems")
    return EXIT_OK


def cmd_compose(args) -> int:
    spec = parse_file(args.file)
    closed = compose(spec.table, spec.system(args.plant), spec.system(args.controller))
    name = args.name or f"{args.plant}{args.controller}"
    if args.standalone:
        text = format_system_decl(name, closed, args.unicode) + "\n"
    else:
        text = format_spec(spec, args.unicode) + format_system_decl(name, closed, args.unicode) + "\n"
    _write(args.output, text)
    return EXIT_OK


def cmd_elaborate(args) -> int:
    spec = parse_file(args.file)
    a = build_automaton(spec.table, spec.system(args.system))
    if args.eps_eliminate or args.commutative_extension:
        a = epsilon_eliminate(a)
    if args.commutative_extension:
        a = commutative_extension(a)
        if args.eps_eliminate:
            a = epsilon_eliminate(a)
    if args.emit == "dot":
        text = automaton_mod.to_dot(a)
    else:
        text = json.dumps(automaton_mod.to_json(a), indent=2, ensure_ascii=False) + "\n"
    _write(args.output, text)
    return EXIT_OK


def cmd_verify(args) -> int:
    spec = parse_file(args.file)
    result = verify(spec.table, spec.system(args.spec), spec.system(args.plant),
                    spec.system(args.controller), extend=not args.no_extension)
    style = Style(sys.stdout)
    if result.verdict:
        print(style.good("similar") + f": {args.spec} is simulated by {args.plant} (x) {args.controller}")
    else:
        print(style.bad("not similar") + f": {args.plant} (x) {args.controller} misses a computation of {args.spec}")
        for step in result.similarity.counterexample:
            tail = " (no matching computation)" if step.get("unmatched") else f" -> outcome {step['outcome']}"
            print(f"  {step['spec_state']} ~ {step['impl_state']}: {step['function']}"
                  f"/{step['variant']} on {step['args']}{tail}")
    if args.report:
        _write(args.report, json.dumps(result.to_json(), indent=2) + "\n")
    return EXIT_OK if result.verdict else EXIT_NOT_SIMILAR


def cmd_simulate(args) -> int:
    spec = parse_file(args.file)
    s = spec.system(args.system)
    with open(args.interp, encoding="utf-8") as fh:
        interp = Interpretation.from_script(spec.table, json.load(fh))
    param = check_system(spec.table, s).type.param
    x0 = parse_value(args.param, param)
    if args.automaton:
        depth = args.depth if args.depth is not None else args.cycles
        run = run_automaton(build_automaton(spec.table, s), interp, x0, depth)
    else:
        run = run_system(s, interp, x0, args.cycles, args.depth)
    seen = []
    for app in run.applications:
        if app not in seen:
            seen.append(app)
    for name, arg in seen:
        print(f"{name} {arg}")
    print(f"{len(run.applications)} applications, {len(seen)} distinct")
    if args.trace:
        _write(args.trace, trace_jsonl(run))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="looplock", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("check", help="typecheck every declaration")
    c.add_argument("file")
    c.add_argument("--unicode", action="store_true", help="print types with mathematical symbols")
    c.set_defaults(run=cmd_check)

    c = sub.add_parser("compose", help="close a plant with a controller")
    c.add_argument("file")
    c.add_argument("--plant", required=True)
    c.add_argument("--controller", required=True)
    c.add_argument("--name", help="name of the composed system (default: plant name + controller name)")
    c.add_argument("--standalone", action="store_true", help="emit only the composed declaration")
    c.add_argument("--unicode", action="store_true")
    c.add_argument("-o", "--output")
    c.set_defaults(run=cmd_compose)

    c = sub.add_parser("elaborate", help="compile a closed-loop system to an automaton")
    c.add_argument("file")
    c.add_argument("--system", required=True)
    c.add_argument("--emit", choices=("json", "dot"), default="json")
    c.add_argument("--eps-eliminate", action="store_true")
    c.add_argument("--commutative-extension", action="store_true",
                   help="eliminate ε first, then extend (add --eps-eliminate to eliminate again)")
    c.add_argument("-o", "--output")
    c.set_defaults(run=cmd_elaborate)

    c = sub.add_parser("verify", help="check spec against plant (x) controller")
    c.add_argument("file")
    c.add_argument("--spec", required=True)
    c.add_argument("--plant", required=True)
    c.add_argument("--controller", required=True)
    c.add_argument("--report", help="write a JSON verdict report here")
    c.add_argument("--no-extension", action="store_true", help="skip the commutative extension")
    c.set_defaults(run=cmd_verify)

    c = sub.add_parser("simulate", help="run a closed-loop system on a scripted interpretation")
    c.add_argument("file")
    c.add_argument("--system", required=True)
    c.add_argument("--interp", required=True, help="JSON scenario script")
    c.add_argument("--param", required=True, help="initial parameter literal, e.g. 0 or (a, inr(*))")
    c.add_argument("--cycles", type=int, default=10)
    c.add_argument("--depth", type=int, help="stop after this many opaque applications")
    c.add_argument("--automaton", action="store_true", help="run the elaborated automaton instead")
    c.add_argument("--trace", help="write the trace as JSON lines here")
    c.set_defaults(run=cmd_simulate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.run(args)
    except (LooplockError, OSError, json.JSONDecodeError) as exc:
        print(f"looplock {args.command}: {Style(sys.stderr).bad('error')}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
