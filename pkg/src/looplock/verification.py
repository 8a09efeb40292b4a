"""Deciding whether one closed-loop system performs every computation of another.

The pipeline is: elaborate both systems, remove ε-transitions, extend the
implementation side so that independent computations may happen early, then
search for a simulation of the specification automaton in the extension.
"""

from __future__ import annotations

import time
from collections import deque
from dataclasses import dataclass, field

from .automaton import Automaton, CompTransitionGroup, EpsTransition, identity_map
from .elaborate import build_automaton
from .errors import (
    EpsilonPresent,
    NotDeterministic,
    NotPseudoDeterministic,
    ParamMismatch,
)
from .systems import SystemExpr, common_param, compose
from .typesys import SymbolTable, typ, variant_count

# -- ε-elimination -------------------------------------------------------------


def epsilon_eliminate(a: Automaton, stats: dict | None = None) -> Automaton:
    """Replace ε-chains by the computational groups they lead to.

    Each state's ε-chain is followed until it repeats a state; every
    computational group found on the way is copied to the chain's start with
    the accumulated variable mapping composed in. For a pseudo-deterministic
    input that is exactly one group (or none, for chains that end or cycle
    without computing). States that have both an ε-transition and groups,
    as produced by :func:`commutative_extension`, keep all of them.

    If ``stats`` is given it receives ``max_depth``, the deepest recursion
    (one level per chain state visited).
    """
    out = []
    max_depth = 0
    for q in a.rho:
        eps = _eps_of(a, q)
        if len(eps) > 1:
            raise NotPseudoDeterministic(f"state {a.label(q)} has {len(eps)} ε-transitions")
        cur, m_hat, seen, depth = q, identity_map(len(a.rho[q])), {q}, 1
        while True:
            for g in a.outgoing(cur):
                if isinstance(g, CompTransitionGroup):
                    out.append(_precompose(g, q, m_hat, a))
            eps = _eps_of(a, cur)
            if len(eps) > 1:
                raise NotPseudoDeterministic(f"state {a.label(cur)} has {len(eps)} ε-transitions")
            if not eps or eps[0].target in seen:
                break
            e = eps[0]
            m_hat = tuple(m_hat[i] for i in e.map)
            cur = e.target
            seen.add(cur)
            depth += 1
        max_depth = max(max_depth, depth)
    if stats is not None:
        stats["max_depth"] = max_depth
        stats["states"] = len(a.rho)
    return Automaton(a.table, dict(a.rho), a.param, a.initial, tuple(out), dict(a.labels))


def _eps_of(a, q):
    return [t for t in a.outgoing(q) if isinstance(t, EpsTransition)]


def _precompose(g: CompTransitionGroup, q, m_hat, a) -> CompTransitionGroup:
    cod = a.table.signature(g.fn).codomain
    outcomes = []
    for v1, (q1, m1) in enumerate(g.outcomes):
        n = len(typ(cod, v1))
        outcomes.append((q1, tuple(j if j < n else m_hat[j - n] + n for j in m1)))
    return CompTransitionGroup(q, g.fn, g.dom_variant,
                               tuple(m_hat[i] for i in g.input_map), tuple(outcomes))


# -- commutative extension -----------------------------------------------------

# An entry of the guaranteed-computation set is keyed by the computation it
# denotes: (function, domain variant, argument indices into the state's
# variables). Interning by key keeps every set finite.


def guaranteed_computations(a: Automaton) -> dict:
    """Map each state to the sorted keys of computations it is sure to perform
    later using only its own variables (its own group included)."""
    group = _single_groups(a)
    box = {q: ({_key(group[q])} if q in group else set()) for q in a.rho}
    changed = True
    while changed:
        changed = False
        for q, g in group.items():
            common = None
            cod = a.table.signature(g.fn).codomain
            for v1, (q1, m1) in enumerate(g.outcomes):
                n = len(typ(cod, v1))
                here = {k for k in (_back(e, m1, n) for e in box[q1]) if k is not None}
                common = here if common is None else common & here
            new = (common or set()) - box[q]
            if new:
                box[q] |= new
                changed = True
    return {q: tuple(sorted(keys)) for q, keys in box.items()}


def guarantee_horizon(a: Automaton) -> int:
    """An upper bound on how many computations ahead of its source state an
    entry of a guaranteed-computation set is actually performed."""
    group = _single_groups(a)
    dist = {q: ({_key(g): 0} if (g := group.get(q)) else {}) for q in a.rho}
    changed = True
    while changed:
        changed = False
        for q, g in group.items():
            cod = a.table.signature(g.fn).codomain
            reach = None
            for v1, (q1, m1) in enumerate(g.outcomes):
                n = len(typ(cod, v1))
                here = {}
                for e1, d1 in dist[q1].items():
                    k = _back(e1, m1, n)
                    if k is not None:
                        here[k] = min(here.get(k, d1), d1)
                reach = here if reach is None else {
                    k: max(d, here[k]) for k, d in reach.items() if k in here}
            for k, d in (reach or {}).items():
                if k not in dist[q]:
                    dist[q][k] = d + 1
                    changed = True
    return max((d for ds in dist.values() for d in ds.values()), default=0)


def _single_groups(a: Automaton) -> dict:
    group = {}
    for q in a.rho:
        outs = a.outgoing(q)
        if len(outs) > 1 or any(isinstance(t, EpsTransition) for t in outs):
            raise NotDeterministic(f"state {a.label(q)} is not deterministic")
        if outs:
            group[q] = outs[0]
    return group


def _key(g: CompTransitionGroup):
    return (g.fn, g.dom_variant, g.input_map)


def _back(entry, m1, n):
    """Translate a successor's entry into the predecessor's variables, if it
    uses none of the fresh result components."""
    fn, v0, args = entry
    sources = [m1[i] for i in args]
    if any(s < n for s in sources):
        return None
    return (fn, v0, tuple(s - n for s in sources))


def _forward(entry, m1, n, candidates):
    """The successor entry that ``entry`` reappears as (first in key order)."""
    for e1 in candidates:
        if _back(e1, m1, n) == entry:
            return e1
    return None


def commutative_extension(a: Automaton) -> Automaton:
    """Build the extension reachable from the initial states.

    Sub-states are ``(q, E, r)``: ``E`` the already-performed entries of
    ``q``'s guaranteed set (sorted) and ``r`` their codomain variants. The
    variables are ``q``'s followed by one result block per entry of ``E``.
    """
    group = _single_groups(a)
    box = guaranteed_computations(a)
    table = a.table

    def sig(fn):
        return table.signature(fn)

    def blocks(E, r):
        offsets, pos = [], 0
        for e, v in zip(E, r):
            offsets.append(pos)
            pos += len(typ(sig(e[0]).codomain, v))
        return offsets

    rho, labels, transitions = {}, {}, []
    start = [(q, (), ()) for q in a.initial]
    queue = deque()

    def visit(s):
        if s not in rho:
            q, E, r = s
            extra = tuple(x for e, v in zip(E, r) for x in typ(sig(e[0]).codomain, v))
            rho[s] = a.rho[q] + extra
            labels[s] = a.label(q) + ("" if not E else "+" + ",".join(
                f"{e[0]}/{v}" for e, v in zip(E, r)))
            queue.append(s)
        return s

    for s in start:
        visit(s)
    while queue:
        s = queue.popleft()
        q, E, r = s
        base = len(a.rho[q])
        offs = blocks(E, r)
        for e in box[q]:
            if e in E:
                continue
            fn, v0, args = e
            cod = sig(fn).codomain
            outcomes = []
            for v1 in range(variant_count(cod)):
                n = len(typ(cod, v1))
                E2 = tuple(sorted(E + (e,)))
                r2 = tuple(dict(zip(E + (e,), r + (v1,)))[x] for x in E2)
                # new layout: rho(q), then blocks in E2 order; source = result . old vars
                m = list(range(n, n + base))
                for x in E2:
                    if x == e:
                        m.extend(range(n))
                    else:
                        i = E.index(x)
                        w = len(typ(sig(x[0]).codomain, r[i]))
                        m.extend(n + base + offs[i] + k for k in range(w))
                outcomes.append((visit((q, E2, r2)), tuple(m)))
            transitions.append(CompTransitionGroup(s, fn, v0, args, tuple(outcomes)))
        g = group.get(q)
        if g is None:
            continue
        bar = _key(g)
        if bar not in E:
            continue
        ib = E.index(bar)
        v1 = r[ib]
        q1, m1 = g.outcomes[v1]
        n = len(typ(sig(g.fn).codomain, v1))
        moved = []
        for i, e in enumerate(E):
            if i == ib:
                continue
            e1 = _forward(e, m1, n, box[q1])
            if e1 is not None:
                moved.append((e1, i))
        moved.sort()
        E1 = tuple(e1 for e1, _ in moved)
        r1 = tuple(r[i] for _, i in moved)
        m = [base + offs[ib] + j if j < n else j - n for j in m1]
        for _, i in moved:
            w = len(typ(sig(E[i][0]).codomain, r[i]))
            m.extend(base + offs[i] + k for k in range(w))
        transitions.append(EpsTransition(s, visit((q1, E1, r1)), tuple(m)))

    ext = Automaton(table, rho, a.param, tuple(start), tuple(transitions), labels).relabel()
    ext.validate()
    return ext


# -- similarity ----------------------------------------------------------------


@dataclass(frozen=True)
class Simulation:
    """Classes ``(q1, q2, pattern)`` of related state pairs.

    ``pattern`` holds the index pairs ``(i, j)`` whose variables in ``q1`` and
    ``q2`` carry the same value.
    """

    classes: frozenset

    def __len__(self):
        return len(self.classes)

    def pairs(self):
        return sorted((q1, q2) for q1, q2, _ in self.classes)


@dataclass
class SimilarityResult:
    similar: bool
    witness: Simulation | None = None
    counterexample: list = field(default_factory=list)
    classes_explored: int = 0

    def __bool__(self):
        return self.similar


def _successor_pattern(pattern, m1, m2, n):
    out = []
    for i, a in enumerate(m1):
        for j, b in enumerate(m2):
            if a < n and b < n:
                if a == b:
                    out.append((i, j))
            elif a >= n and b >= n and (a - n, b - n) in pattern:
                out.append((i, j))
    return frozenset(out)


def is_similar(a1: Automaton, a2: Automaton) -> SimilarityResult:
    """Search for a simulation of ``a1`` in ``a2`` (both ε-free).

    Classes are explored breadth-first from the initial pairs; a class
    survives if each of ``a1``'s groups there has some matching group in
    ``a2`` whose successor classes all survive (greatest fixpoint).
    """
    if a1.param != a2.param:
        raise ParamMismatch(f"initial parameter types differ: {a1.param} vs {a2.param}")
    for side, a in (("left", a1), ("right", a2)):
        if a.has_epsilon():
            raise EpsilonPresent(f"{side} automaton has ε-transitions; eliminate them first")

    seeds = [(q1, q2, frozenset((i, i) for i in range(len(a1.rho[q1]))))
             for q1, q2 in zip(a1.initial, a2.initial)]
    moves, order, parent = {}, [], {}
    queue = deque()
    for c in seeds:
        if c not in parent:
            parent[c] = None
            queue.append(c)
    while queue:
        c = queue.popleft()
        order.append(c)
        q1, q2, pattern = c
        per = []
        for g1 in a1.outgoing(q1):
            cod = a1.table.signature(g1.fn).codomain
            cands = []
            for g2 in a2.outgoing(q2):
                if g2.fn != g1.fn or g2.dom_variant != g1.dom_variant:
                    continue
                if not all(p in pattern for p in zip(g1.input_map, g2.input_map)):
                    continue
                succ = []
                for v1, ((t1, m1), (t2, m2)) in enumerate(zip(g1.outcomes, g2.outcomes)):
                    s = (t1, t2, _successor_pattern(pattern, m1, m2, len(typ(cod, v1))))
                    if s not in parent:
                        parent[s] = (c, g1, v1)
                        queue.append(s)
                    succ.append(s)
                cands.append(tuple(succ))
            per.append((g1, cands))
        moves[c] = per

    good = set(order)
    removed_at = {}
    rnd = 0
    while True:
        rnd += 1
        bad = [c for c in order if c in good and any(
            not any(all(s in good for s in succ) for succ in cands) for _, cands in moves[c])]
        if not bad:
            break
        for c in bad:
            good.discard(c)
            removed_at[c] = rnd

    failing = [c for c in seeds if c not in good]
    if not failing:
        return SimilarityResult(True, _witness(seeds, moves, good), [], len(order))
    return SimilarityResult(False, None, _counterexample(a1, a2, failing[0], moves, good, removed_at),
                            len(order))


def _witness(seeds, moves, good):
    keep, stack = set(), list(seeds)
    while stack:
        c = stack.pop()
        if c in keep:
            continue
        keep.add(c)
        for _, cands in moves[c]:
            succ = next(s for s in cands if all(x in good for x in s))
            stack.extend(succ)
    return Simulation(frozenset(keep))


def _step_json(a1, a2, c, g1, v1=None):
    q1, q2, _ = c
    step = {"spec_state": a1.label(q1), "impl_state": a2.label(q2),
            "function": g1.fn, "variant": g1.dom_variant, "args": list(g1.input_map)}
    if v1 is not None:
        step["outcome"] = v1
    return step


def _counterexample(a1, a2, c, moves, good, removed_at):
    trace = []
    while True:
        failing = [(g1, cands) for g1, cands in moves[c]
                   if not any(all(s in good for s in succ) for succ in cands)]
        g1, cands = failing[0]
        if not cands:
            trace.append({**_step_json(a1, a2, c, g1), "unmatched": True})
            return trace
        succ = cands[0]
        nxt = min((s for s in succ if s not in good), key=lambda s: removed_at[s])
        trace.append(_step_json(a1, a2, c, g1, succ.index(nxt)))
        c = nxt


# -- end to end ----------------------------------------------------------------


@dataclass
class VerifyResult:
    verdict: bool
    similarity: SimilarityResult
    timings: dict
    sizes: dict
    extended: bool = True

    def __bool__(self):
        return self.verdict

    def to_json(self) -> dict:
        doc = {
            "version": 1,
            "verdict": "similar" if self.verdict else "not-similar",
            "extended": self.extended,
            "timings": {k: round(v, 6) for k, v in self.timings.items()},
            "sizes": self.sizes,
            "classes_explored": self.similarity.classes_explored,
        }
        if self.verdict:
            doc["witness_size"] = len(self.similarity.witness)
        else:
            doc["counterexample"] = self.similarity.counterexample
        return doc


def verify(ctx: SymbolTable, spec: SystemExpr, plant: SystemExpr, controller: SystemExpr,
           *, extend: bool = True) -> VerifyResult:
    """Check that ``plant`` wired to ``controller`` performs every computation
    ``spec`` performs. With ``extend=False`` the commutative extension is
    skipped, which can only turn verdicts from similar to not-similar."""
    timings = {}
    clock = time.perf_counter()

    def lap(name):
        nonlocal clock
        now = time.perf_counter()
        timings[name] = now - clock
        clock = now

    closed = compose(ctx, plant, controller)
    # a spec that leaves its parameter open adopts the plant's
    param = common_param(ctx, spec, closed)
    lap("compose")
    a_spec = build_automaton(ctx, spec, param=param)
    a_impl = build_automaton(ctx, closed, param=param)
    lap("elaborate")
    e_spec, e_impl = epsilon_eliminate(a_spec), epsilon_eliminate(a_impl)
    lap("eliminate")
    if extend:
        e_impl = epsilon_eliminate(commutative_extension(e_impl))
    lap("extend")
    result = is_similar(e_spec, e_impl)
    lap("similarity")
    sizes = {"spec": a_spec.stats(), "composed": a_impl.stats(), "target": e_impl.stats()}
    return VerifyResult(result.similar, result, timings, sizes, extend)
