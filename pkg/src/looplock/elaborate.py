"""Compile closed-loop systems into pseudo-deterministic automata.

``elaborate_comb`` wires a typed combinational expression between a state set
for its domain and a state set for its codomain. Every input state receives
exactly one outgoing transition, so the finished automaton is
pseudo-deterministic by construction.
"""

from __future__ import annotations

import itertools

from .automaton import (
    Automaton,
    CompTransitionGroup,
    EpsTransition,
    Fragment,
    identity_map,
    parallel_state,
)
from .combinational import (
    Case,
    Compose,
    Delta1,
    Fn,
    Identity,
    Kappa1,
    Kappa2,
    Pair,
    Pi1,
    Pi2,
    Theta,
    Typed,
)
from .errors import LooplockError
from .systems import SystemExpr, check_system, normal_form
from .typesys import SymbolTable, typ, variant_count


class Elaborator:
    def __init__(self, table: SymbolTable):
        self.table = table
        self._ids = itertools.count()

    def fresh(self, frag: Fragment, variables, label: str):
        return frag.add_state(next(self._ids), variables, label)

    def fresh_set(self, frag: Fragment, t, label: str) -> list:
        return [self.fresh(frag, typ(t, v), f"{label}#{v}") for v in range(variant_count(t))]

    def elaborate(self, frag: Fragment, tf: Typed, ins, outs, path: str = "") -> None:
        e, T, U = tf.expr, tf.dom, tf.cod
        if len(ins) != variant_count(T) or len(outs) != variant_count(U):
            raise LooplockError(f"state sets do not match {T} -> {U} at {path or 'root'}")
        eps = frag.transitions.append

        if isinstance(e, Fn):
            for v0, q0 in enumerate(ins):
                outcomes = tuple(
                    (q1, identity_map(len(typ(U, v1)))) for v1, q1 in enumerate(outs)
                )
                eps(CompTransitionGroup(q0, e.name, v0, identity_map(len(typ(T, v0))), outcomes))
        elif isinstance(e, (Identity, Delta1)):
            # d1 only permutes variant indices: both sides share component lists
            for v, q in enumerate(ins):
                target = outs[v] if isinstance(e, Identity) else outs[_delta1_index(T, v)]
                eps(EpsTransition(q, target, identity_map(len(typ(T, v)))))
        elif isinstance(e, Theta):
            for q in ins:
                eps(EpsTransition(q, outs[0], ()))
        elif isinstance(e, (Pi1, Pi2)):
            nb = variant_count(T.right)
            for v, q in enumerate(ins):
                i, j = divmod(v, nb)
                width_left = len(typ(T.left, i))
                if isinstance(e, Pi1):
                    eps(EpsTransition(q, outs[i], identity_map(width_left)))
                else:
                    m = tuple(width_left + k for k in range(len(typ(T.right, j))))
                    eps(EpsTransition(q, outs[j], m))
        elif isinstance(e, (Kappa1, Kappa2)):
            offset = 0 if isinstance(e, Kappa1) else variant_count(U.left)
            for v, q in enumerate(ins):
                eps(EpsTransition(q, outs[offset + v], identity_map(len(typ(T, v)))))
        elif isinstance(e, Compose):
            after, before = tf.children
            mid = self.fresh_set(frag, before.cod, f"{path}.mid")
            self.elaborate(frag, before, ins, mid, path + ".before")
            self.elaborate(frag, after, mid, outs, path + ".after")
        elif isinstance(e, Pair):
            self._pair(frag, tf, ins, outs, path)
        elif isinstance(e, Case):
            left, right = tf.children
            n = variant_count(T.left)
            self.elaborate(frag, left, ins[:n], outs, path + ".inl")
            self.elaborate(frag, right, ins[n:], outs, path + ".inr")
        else:
            raise LooplockError(f"cannot elaborate {e!r}")

    def _pair(self, frag, tf, ins, outs, path):
        # Right component first; the left one runs with the input carried in
        # parallel, then both results are packed into the product.
        left, right = tf.children
        T, U, V = tf.dom, left.cod, right.cod

        f1 = Fragment()
        in1 = self.fresh_set(f1, T, f"{path}.l.in")
        out1 = self.fresh_set(f1, U, f"{path}.l.out")
        self.elaborate(f1, left, in1, out1, path + ".l")

        f2 = Fragment()
        in2 = self.fresh_set(f2, T, f"{path}.r.in")
        out2 = self.fresh_set(f2, V, f"{path}.r.out")
        self.elaborate(f2, right, in2, out2, path + ".r")

        frag.merge(parallel_state(f2, T, self.table))
        frag.merge(parallel_state(f1, V, self.table))

        for v, q in enumerate(ins):
            n = len(typ(T, v))
            frag.transitions.append(EpsTransition(q, (in2[v], v), identity_map(n) * 2))
        for w in range(variant_count(V)):
            a = len(typ(V, w))
            for v in range(variant_count(T)):
                b = len(typ(T, v))
                swap = tuple(range(a, a + b)) + tuple(range(a))
                frag.transitions.append(EpsTransition((out2[w], v), (in1[v], w), swap))
        for u in range(variant_count(U)):
            for w in range(variant_count(V)):
                n = len(typ(U, u)) + len(typ(V, w))
                target = outs[u * variant_count(V) + w]
                frag.transitions.append(EpsTransition((out1[u], w), target, identity_map(n)))


def _delta1_index(T, v: int) -> int:
    """Variant of ``(A*B) + (A*C)`` matching variant ``v`` of ``A * (B + C)``."""
    a, sum_ = T.left, T.right
    nb, nc = variant_count(sum_.left), variant_count(sum_.right)
    i, j = divmod(v, nb + nc)
    if j < nb:
        return i * nb + j
    return variant_count(a) * nb + i * nc + (j - nb)


def elaborate_comb(table: SymbolTable, tf: Typed, ins, outs, frag: Fragment | None = None) -> Fragment:
    """Elaborate ``tf`` between existing state sets, returning the fragment."""
    frag = frag if frag is not None else Fragment()
    Elaborator(table).elaborate(frag, tf, list(ins), list(outs))
    return frag


def build_automaton(ctx: SymbolTable, s: SystemExpr, *, param=None, prune: bool = True) -> Automaton:
    """Compile a closed-loop system.

    Initial states (one per variant of the initial parameter type) feed the
    initialization function into the system states (one per variant of the
    loop state type), which the loop function maps back onto themselves.
    With ``prune`` the result keeps only states reachable from the initial
    state set.
    """
    normal_form(ctx, s, param)
    ts = check_system(ctx, s, param=param)
    el = Elaborator(ctx)
    frag = Fragment()
    initial = el.fresh_set(frag, ts.type.param, "init")
    system = el.fresh_set(frag, ts.state, "sys")
    el.elaborate(frag, ts.init, initial, system, "i")
    el.elaborate(frag, ts.loop, system, system, "g")
    a = Automaton(ctx, dict(frag.rho), ts.type.param, tuple(initial),
                  tuple(frag.transitions), dict(frag.labels))
    if prune:
        a = a.restrict(a.reachable())
    a = a.relabel()
    a.validate()
    return a
