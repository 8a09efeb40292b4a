"""Concrete execution of systems and automata.

Runs record every opaque application ``(function, argument)`` in order; the
set of those pairs is the run's diamond set. Depth is always counted in
opaque applications, never in raw steps, so runs of differently shaped but
equivalent automata can be compared directly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Hashable, Mapping, Sequence

from .automaton import Automaton, EpsTransition
from .combinational import evaluate
from .errors import (
    EvaluationError,
    InterpretationError,
    InterpretationMissing,
    NondeterministicWithoutExhaustiveFlag,
)
from .systems import (
    Alpha,
    LiftBeta,
    LiftOmega,
    LiftOplus,
    LiftTensor,
    SystemExpr,
    check_system,
    normal_form,
)
from .typesys import SymbolTable, opaque_names, variant_count
from .values import InL, InR, PairVal, flatten, has_type, to_json, unflatten

Application = tuple  # (function name, argument value)


@dataclass
class Interpretation:
    """Executables for opaque functions over payload domains.

    Every call is checked against the function's signature in both
    directions.
    """

    table: SymbolTable
    domains: Mapping[str, Sequence[Hashable]]
    executables: Mapping[str, Callable]

    def apply(self, name: str, value):
        sig = self.table.signature(name)
        if not has_type(value, sig.domain):
            raise InterpretationError(f"{name} applied to {value}, expected {sig.domain}")
        try:
            exe = self.executables[name]
        except KeyError:
            raise InterpretationMissing(f"no executable for opaque function {name!r}") from None
        result = exe(value)
        if not has_type(result, sig.codomain):
            raise InterpretationError(f"{name}({value}) returned {result}, expected {sig.codomain}")
        return result

    @classmethod
    def from_script(cls, table: SymbolTable, doc: dict) -> "Interpretation":
        """Build lookup-table executables from a JSON scenario document.

        ``doc["functions"][name]`` maps argument literals to result literals,
        with an optional ``"default"`` result for unlisted arguments.
        """
        from .dsl import parse_value

        domains = {k: list(v) for k, v in doc.get("domains", {}).items()}
        executables = {}
        for name, spec in doc.get("functions", {}).items():
            sig = table.signature(name)
            rows = {
                parse_value(arg, sig.domain): parse_value(res, sig.codomain)
                for arg, res in spec.get("table", {}).items()
            }
            default = spec.get("default")
            default = None if default is None else parse_value(default, sig.codomain)
            executables[name] = _lookup(name, rows, default)
        return cls(table, domains, executables)


def _lookup(name, rows, default):
    def run(value):
        if value in rows:
            return rows[value]
        if default is None:
            raise InterpretationError(f"scenario for {name} has no row for {value}")
        return default

    return run


@dataclass(frozen=True)
class WorldModel:
    """Marks one opaque type as the state of the outside world.

    Side-effecting opaque functions take the current world and return the
    next one; nothing beyond the signatures is enforced.
    """

    world_type: str

    def threading_functions(self, table: SymbolTable) -> list[str]:
        return [
            f.name for f in table.functions
            if self.world_type in opaque_names(f.domain) and self.world_type in opaque_names(f.codomain)
        ]


@dataclass
class Run:
    applications: list = field(default_factory=list)
    trace: list = field(default_factory=list)
    complete: bool = False  # the run provably performs no further applications

    @property
    def diamond(self) -> frozenset:
        return frozenset(self.applications)

    def prefix(self, k: int) -> frozenset:
        return frozenset(self.applications[:k])


def diamond_subset(d1, d2) -> bool:
    return set(d1) <= set(d2)


class _Budget(Exception):
    pass


class _Recorder:
    def __init__(self, interp, run: Run, limit):
        self.interp, self.run, self.limit = interp, run, limit

    def apply(self, name, value):
        if self.limit is not None and len(self.run.applications) >= self.limit:
            raise _Budget
        result = self.interp.apply(name, value)
        self.run.applications.append((name, value))
        return result


def run_system(s: SystemExpr, interp: Interpretation, x0, cycles: int, depth: int | None = None,
               *, param=None) -> Run:
    """Apply the initialization function to ``x0``, then the loop function
    up to ``cycles`` times (stopping early after ``depth`` applications).

    ``param`` fixes the initial parameter type when the system leaves it open.
    """
    nf = normal_form(interp.table, s, param)
    if not has_type(x0, nf.param):
        raise EvaluationError(f"initial parameter {x0} is not a value of {nf.param}")
    run = Run()
    rec = _Recorder(interp, run, depth)
    silent, limit = 0, variant_count(nf.state)
    try:
        state = evaluate(rec, nf.init, x0)
        run.trace.append({"step": 0, "state": "init", "variables": [to_json(state)]})
        for cycle in range(1, cycles + 1):
            before = len(run.applications)
            state = evaluate(rec, nf.loop, state)
            run.trace.append({"step": cycle, "state": "loop", "variables": [to_json(state)]})
            silent = silent + 1 if len(run.applications) == before else 0
            if silent > limit:
                # a computation-free cycle depends only on the state's variant
                run.complete = True
                break
    except _Budget:
        pass
    return run


def run_automaton(a: Automaton, interp: Interpretation, x0, depth: int, *,
                  exhaustive: bool = False, max_steps: int = 100_000) -> Run:
    """Execute ``a`` from the initial state selected by ``x0``'s variant.

    Single-path mode follows the unique outgoing transition and raises on
    branching; exhaustive mode explores every path of at most ``depth``
    applications and unions what they compute.
    """
    v, comps = flatten(x0, a.param)
    start = (a.initial[v], comps)
    if exhaustive:
        return _explore(a, interp, start, depth)
    run = Run()
    q, vals = start
    quiet = 0
    for step in range(max_steps):
        if len(run.applications) >= depth:
            break
        outs = a.outgoing(q)
        if not outs:
            run.complete = True
            break
        if len(outs) > 1:
            raise NondeterministicWithoutExhaustiveFlag(f"state {a.label(q)} has {len(outs)} transitions")
        t = outs[0]
        entry = {"step": step, "state": a.label(q), "variables": [to_json(x) for x in vals]}
        if isinstance(t, EpsTransition):
            q, vals = t.target, tuple(vals[i] for i in t.map)
            quiet += 1
            run.trace.append(entry)
            if quiet > len(a.rho):
                run.complete = True
                break
            continue
        quiet = 0
        (name, arg), v1, q, vals = _fire(a, interp, t, vals)
        run.applications.append((name, arg))
        run.trace.append({**entry, "function": name, "variant": v1})
    return run


def _fire(a, interp, t, vals):
    sig = a.table.signature(t.fn)
    arg = unflatten(sig.domain, t.dom_variant, [vals[i] for i in t.input_map])
    result = interp.apply(t.fn, arg)
    v1, comps = flatten(result, sig.codomain)
    target, m1 = t.outcomes[v1]
    source = tuple(comps) + tuple(vals)
    return (t.fn, arg), v1, target, tuple(source[i] for i in m1)


def _explore(a, interp, start, depth) -> Run:
    run = Run()
    found = set()
    seen = set()
    stack = [(start[0], tuple(start[1]), depth)]
    while stack:
        q, vals, budget = stack.pop()
        if (q, vals, budget) in seen:
            continue
        seen.add((q, vals, budget))
        for t in a.outgoing(q):
            if isinstance(t, EpsTransition):
                stack.append((t.target, tuple(vals[i] for i in t.map), budget))
            elif budget > 0:
                app, _, q1, vals1 = _fire(a, interp, t, vals)
                found.add(app)
                stack.append((q1, vals1, budget - 1))
    run.applications = sorted(found, key=repr)
    run.complete = True
    return run


def trace_jsonl(run: Run) -> str:
    return "".join(json.dumps(entry) + "\n" for entry in run.trace)


# -- plant/controller co-simulation ----------------------------------------------


def cosimulate(plant: SystemExpr, controller: SystemExpr, interp: Interpretation, x0, cycles: int,
               *, param=None) -> Run:
    """Run a plant and a complement-shaped controller side by side, passing
    port values between them, without building their composition."""
    table = interp.table
    tp = check_system(table, plant, param=param)
    if not has_type(x0, tp.type.param):
        raise EvaluationError(f"initial parameter {x0} is not a value of {tp.type.param}")
    run = Run()
    rec = _Recorder(interp, run, None)
    s2 = evaluate(rec, controller.init, x0)
    s1 = evaluate(rec, plant.init, x0)
    for _ in range(cycles):
        s1, s2 = _step(rec, plant.loop, s1, controller.loop, s2)
    return run


def _step(rec, g1, d1, g2, d2):
    if isinstance(g1, LiftOmega) and isinstance(g2, LiftOmega):
        b = evaluate(rec, g2.f, d2)
        return evaluate(rec, g1.f, d1), b
    if isinstance(g1, Alpha) and isinstance(g2, LiftBeta):
        out = _pair(evaluate(rec, g2.f, d2))
        return _step(rec, g1.inner, PairVal(d1, out.right), g2.inner, out.left)
    if isinstance(g1, LiftBeta) and isinstance(g2, Alpha):
        out = _pair(evaluate(rec, g1.f, d1))
        return _step(rec, g1.inner, out.left, g2.inner, PairVal(d2, out.right))
    if isinstance(g1, (LiftTensor, LiftOplus)) and isinstance(g2, (LiftTensor, LiftOplus)) \
            and type(g1) is not type(g2):
        y = evaluate(rec, g2.f, d2)
        x = evaluate(rec, g1.f, d1)
        plant_chooses = isinstance(g1, LiftOplus)
        chooser = x if plant_chooses else y
        if not isinstance(chooser, (InL, InR)):
            raise EvaluationError(f"(o) branch selector {chooser} is not a coproduct value")
        if plant_chooses:
            x = chooser.value
        else:
            y = chooser.value
        if isinstance(chooser, InL):
            return _step(rec, g1.left, x, g2.left, y)
        return _step(rec, g1.right, x, g2.right, y)
    raise EvaluationError(f"loops {type(g1).__name__} and {type(g2).__name__} do not interlock")


def _pair(v):
    if not isinstance(v, PairVal):
        raise EvaluationError(f"beta expects a pair, got {v}")
    return v
