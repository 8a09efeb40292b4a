"""Automata whose states carry typed variables.

A variable mapping is a tuple ``m`` with ``m[i]`` the source index that fills
target variable ``i``; mappings may drop or duplicate source variables.
"""

from __future__ import annotations

import json
from collections import defaultdict
from dataclasses import dataclass, field
from functools import cached_property
from typing import Hashable, Iterable

from .errors import LooplockError
from .typesys import (
    CompositeType,
    FunctionSignature,
    Product,
    SymbolTable,
    format_type,
    typ,
    variant_count,
)

State = Hashable
Mapping = tuple[int, ...]


@dataclass(frozen=True)
class CompTransitionGroup:
    source: State
    fn: str
    dom_variant: int
    input_map: Mapping
    outcomes: tuple[tuple[State, Mapping], ...]  # indexed by codomain variant


@dataclass(frozen=True)
class EpsTransition:
    source: State
    target: State
    map: Mapping


Transition = CompTransitionGroup | EpsTransition


def identity_map(n: int) -> Mapping:
    return tuple(range(n))


def compose_maps(outer: Mapping, inner: Mapping) -> Mapping:
    """``outer ∘ inner``: first look up ``inner``, then ``outer``."""
    return tuple(outer[i] for i in inner)


def shift_map(m: Mapping, n: int) -> Mapping:
    """Extend ``m`` to lists prefixed by ``n`` fresh result components."""
    return tuple(range(n)) + tuple(j + n for j in m)


@dataclass(frozen=True)
class Automaton:
    """A 5-tuple (states with variable lists, initial parameter type, initial
    state set, transitions), plus the symbol table that gives every opaque
    function its signature.

    ``rho`` lists the states in a deterministic order; ``initial[i]`` is the
    state for variant ``i`` of ``param``.
    """

    table: SymbolTable
    rho: dict
    param: CompositeType
    initial: tuple
    transitions: tuple
    labels: dict = field(default_factory=dict, compare=False)

    @property
    def states(self):
        return self.rho.keys()

    @cached_property
    def _outgoing(self) -> dict:
        out = defaultdict(list)
        for t in self.transitions:
            out[t.source].append(t)
        return dict(out)

    def outgoing(self, q) -> list:
        return self._outgoing.get(q, [])

    def label(self, q) -> str:
        return self.labels.get(q, str(q))

    def comp_groups(self):
        return [t for t in self.transitions if isinstance(t, CompTransitionGroup)]

    def eps_transitions(self):
        return [t for t in self.transitions if isinstance(t, EpsTransition)]

    def has_epsilon(self) -> bool:
        return any(isinstance(t, EpsTransition) for t in self.transitions)

    def is_pseudo_deterministic(self) -> bool:
        return all(len(self.outgoing(q)) <= 1 for q in self.rho)

    def is_deterministic(self) -> bool:
        return not self.has_epsilon() and self.is_pseudo_deterministic()

    def validate(self) -> None:
        """Raise if any state set or variable mapping is ill-typed."""
        if len(self.initial) != variant_count(self.param):
            raise LooplockError("initial state set does not cover every variant")
        for v, q in enumerate(self.initial):
            if self.rho[q] != typ(self.param, v):
                raise LooplockError(f"initial state {self.label(q)} has wrong variables for variant {v}")
        for t in self.transitions:
            src = self.rho[t.source]
            if isinstance(t, EpsTransition):
                check_mapping(src, self.rho[t.target], t.map)
                continue
            sig = self.table.signature(t.fn)
            check_mapping(src, typ(sig.domain, t.dom_variant), t.input_map)
            if len(t.outcomes) != variant_count(sig.codomain):
                raise LooplockError(f"{t.fn}: outcomes do not cover the codomain")
            for v1, (target, m1) in enumerate(t.outcomes):
                check_mapping(typ(sig.codomain, v1) + src, self.rho[target], m1)

    def reachable(self) -> set:
        seen, stack = set(self.initial), list(self.initial)
        while stack:
            q = stack.pop()
            for t in self.outgoing(q):
                targets = [t.target] if isinstance(t, EpsTransition) else [o[0] for o in t.outcomes]
                for r in targets:
                    if r not in seen:
                        seen.add(r)
                        stack.append(r)
        return seen

    def restrict(self, keep: Iterable) -> "Automaton":
        keep = set(keep)
        return Automaton(
            self.table,
            {q: v for q, v in self.rho.items() if q in keep},
            self.param,
            self.initial,
            tuple(t for t in self.transitions if t.source in keep),
            {q: l for q, l in self.labels.items() if q in keep},
        )

    def relabel(self) -> "Automaton":
        """Renumber states 0..n-1 in ``rho`` order, keeping old names as labels."""
        index = {q: i for i, q in enumerate(self.rho)}
        return Automaton(
            self.table,
            {index[q]: v for q, v in self.rho.items()},
            self.param,
            tuple(index[q] for q in self.initial),
            tuple(_rename(t, index) for t in self.transitions),
            {index[q]: self.label(q) for q in self.rho},
        )

    def stats(self) -> dict:
        return {
            "states": len(self.rho),
            "computational": len(self.comp_groups()),
            "epsilon": len(self.eps_transitions()),
        }


def check_mapping(source, target, m) -> None:
    if len(m) != len(target):
        raise LooplockError(f"mapping {m} has arity {len(m)}, target needs {len(target)}")
    for i, j in enumerate(m):
        if not 0 <= j < len(source) or source[j] != target[i]:
            raise LooplockError(f"mapping {m} is ill-typed from {source} to {target}")


def _rename(t, index):
    if isinstance(t, EpsTransition):
        return EpsTransition(index[t.source], index[t.target], t.map)
    return CompTransitionGroup(
        index[t.source], t.fn, t.dom_variant, t.input_map,
        tuple((index[q], m) for q, m in t.outcomes),
    )


# -- parallel state ------------------------------------------------------------


@dataclass
class Fragment:
    """A mutable automaton fragment under construction."""

    rho: dict = field(default_factory=dict)
    transitions: list = field(default_factory=list)
    labels: dict = field(default_factory=dict)

    def add_state(self, q, variables, label=None):
        self.rho[q] = tuple(variables)
        if label is not None:
            self.labels[q] = label
        return q

    def merge(self, other: "Fragment") -> None:
        self.rho.update(other.rho)
        self.transitions.extend(other.transitions)
        self.labels.update(other.labels)


def _parallel_transitions(transitions, rho, t: CompositeType, table):
    out = []
    for v in range(variant_count(t)):
        k = len(typ(t, v))
        for tr in transitions:
            n0 = len(rho[tr.source])
            if isinstance(tr, EpsTransition):
                out.append(EpsTransition((tr.source, v), (tr.target, v),
                                         tr.map + tuple(n0 + i for i in range(k))))
                continue
            if table is None:
                raise LooplockError("parallel state on a computational group needs a symbol table")
            cod = table.signature(tr.fn).codomain
            outcomes = []
            for v1, (q1, m1) in enumerate(tr.outcomes):
                n1 = len(typ(cod, v1))
                outcomes.append(((q1, v), m1 + tuple(n1 + n0 + i for i in range(k))))
            out.append(CompTransitionGroup((tr.source, v), tr.fn, tr.dom_variant,
                                           tr.input_map, tuple(outcomes)))
    return out


def parallel_state(a, t: CompositeType, table: SymbolTable | None = None):
    """Carry an extra value of type ``t`` through ``a`` unchanged.

    States become ``(q, v)`` for each variant ``v`` of ``t``, with the parallel
    components appended to every variable list and forwarded by every
    transition. Works on a :class:`Fragment` (``table`` required when it
    holds computational groups) or an :class:`Automaton`.
    """
    if isinstance(a, Fragment):
        frag = Fragment()
        for q, vars_ in a.rho.items():
            for v in range(variant_count(t)):
                frag.add_state((q, v), vars_ + typ(t, v),
                               f"{a.labels.get(q, q)}|{v}" if q in a.labels else None)
        frag.transitions = _parallel_transitions(a.transitions, a.rho, t, table)
        return frag
    n = variant_count(t)
    rho = {(q, v): vars_ + typ(t, v) for q, vars_ in a.rho.items() for v in range(n)}
    initial = tuple((a.initial[i], j) for i in range(variant_count(a.param)) for j in range(n))
    return Automaton(
        a.table, rho, Product(a.param, t), initial,
        tuple(_parallel_transitions(a.transitions, a.rho, t, a.table)),
        {(q, v): f"{a.label(q)}|{v}" for q in a.rho for v in range(n)},
    )


# -- export --------------------------------------------------------------------


def to_json(a: Automaton) -> dict:
    from .dsl import format_signature

    return {
        "version": 1,
        "types": list(a.table.types),
        "functions": [format_signature(f) for f in a.table.functions],
        "param": format_type(a.param),
        "states": [
            {"id": q, "label": a.label(q), "vars": list(vs)} for q, vs in a.rho.items()
        ],
        "initial": list(a.initial),
        "transitions": [_transition_json(t) for t in a.transitions],
    }


def _transition_json(t):
    if isinstance(t, EpsTransition):
        return {"kind": "eps", "source": t.source, "target": t.target, "map": list(t.map)}
    return {
        "kind": "comp",
        "source": t.source,
        "function": t.fn,
        "variant": t.dom_variant,
        "args": list(t.input_map),
        "outcomes": [{"target": q, "map": list(m)} for q, m in t.outcomes],
    }


def from_json(doc: dict) -> Automaton:
    from .dsl import parse_signature, parse_type

    table = SymbolTable.of(doc["types"], [parse_signature(s) for s in doc["functions"]])
    rho = {s["id"]: tuple(s["vars"]) for s in doc["states"]}
    labels = {s["id"]: s["label"] for s in doc["states"]}
    transitions = []
    for t in doc["transitions"]:
        if t["kind"] == "eps":
            transitions.append(EpsTransition(t["source"], t["target"], tuple(t["map"])))
        else:
            transitions.append(CompTransitionGroup(
                t["source"], t["function"], t["variant"], tuple(t["args"]),
                tuple((o["target"], tuple(o["map"])) for o in t["outcomes"]),
            ))
    a = Automaton(table, rho, parse_type(doc["param"]), tuple(doc["initial"]),
                  tuple(transitions), labels)
    a.validate()
    return a


def to_dot(a: Automaton) -> str:
    def node(q):
        return f"q{q}" if isinstance(q, int) else json.dumps(str(q))

    lines = ["digraph automaton {", "  rankdir=LR;"]
    initial = set(a.initial)
    for q, vs in a.rho.items():
        shape = "doublecircle" if q in initial else "circle"
        text = f"{a.label(q)}: {','.join(vs)}" if vs else f"{a.label(q)}:"
        lines.append(f"  {node(q)} [shape={shape}, label={json.dumps(text)}];")
    for t in a.transitions:
        if isinstance(t, EpsTransition):
            lines.append(f"  {node(t.source)} -> {node(t.target)} [style=dashed, label=\"ε\"];")
        else:
            for v1, (q1, _) in enumerate(t.outcomes):
                text = f"{t.fn}/{t.dom_variant}→{v1}"
                lines.append(f"  {node(t.source)} -> {node(q1)} [label={json.dumps(text)}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def signature_of(a: Automaton, fn: str) -> FunctionSignature:
    return a.table.signature(fn)
