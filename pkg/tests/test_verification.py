import json
from pathlib import Path

import jsonschema
import pytest

from gen import corpus, hashed_interpretation, similarity_pairs
from looplock.automaton import Automaton, CompTransitionGroup, EpsTransition
from looplock.combinational import ID, Fn, times
from looplock.dsl import parse_file, parse_system
from looplock.elaborate import build_automaton
from looplock.errors import EpsilonPresent, NotDeterministic, NotPseudoDeterministic, ParamMismatch
from looplock.interpreter import run_automaton
from looplock.shapes import ID as ID_SHAPE
from looplock.systems import LiftOmega, SystemExpr
from looplock.typesys import FunctionSignature, Opaque, SymbolTable
from looplock.verification import (
    commutative_extension,
    epsilon_eliminate,
    guarantee_horizon,
    guaranteed_computations,
    is_similar,
    verify,
)

ROOT = Path(__file__).resolve().parent.parent
MSG = parse_file(ROOT / "specs" / "msg.spec")
DELAY = parse_file(ROOT / "specs" / "delay.spec")
A, B = Opaque("A"), Opaque("B")
INDEPENDENT = SymbolTable.of(["A", "B"], [FunctionSignature("f", A, A), FunctionSignature("g", B, B)])
CHAIN = SymbolTable.of(["A"], [FunctionSignature("f", A, A), FunctionSignature("g", A, A)])


def eliminated(table, s, param=None):
    return epsilon_eliminate(build_automaton(table, s, param=param))


def extended(a):
    return epsilon_eliminate(commutative_extension(a))


def is_simulation(a1, a2, witness):
    """Check the simulation conditions on a witness directly."""
    classes = witness.classes
    for q1, q2, pattern in classes:
        for g1 in a1.outgoing(q1):
            n_of = [len(o) for o in _codomain_variants(a1, g1)]
            ok = False
            for g2 in a2.outgoing(q2):
                if (g2.fn, g2.dom_variant) != (g1.fn, g1.dom_variant):
                    continue
                if not all((i, j) in pattern for i, j in zip(g1.input_map, g2.input_map)):
                    continue
                succ_ok = True
                for v1, ((t1, m1), (t2, m2)) in enumerate(zip(g1.outcomes, g2.outcomes)):
                    n = n_of[v1]
                    pat = frozenset(
                        (i, j) for i, a in enumerate(m1) for j, b in enumerate(m2)
                        if (a < n and a == b) or (a >= n and b >= n and (a - n, b - n) in pattern)
                    )
                    succ_ok &= (t1, t2, pat) in classes
                ok |= succ_ok
            if not ok:
                return False
    return True


def _codomain_variants(a, g):
    from looplock.typesys import variants

    return [v.components for v in variants(a.table.signature(g.fn).codomain)]


# -- ε-elimination ----------------------------------------------------------------


def test_pure_epsilon_cycle_loses_all_transitions():
    table = SymbolTable.of(["A"])
    a = Automaton(table, {0: ("A",), 1: ("A",)}, A, (0,),
                  (EpsTransition(0, 1, (0,)), EpsTransition(1, 0, (0,))))
    e = epsilon_eliminate(a)
    assert e.transitions == ()


def test_epsilon_free_automaton_is_unchanged():
    a = eliminated(MSG.table, MSG.system("S"))
    assert epsilon_eliminate(a).transitions == a.transitions


def test_two_epsilons_are_rejected():
    table = SymbolTable.of(["A"])
    a = Automaton(table, {0: ("A",), 1: ("A",)}, A, (0,),
                  (EpsTransition(0, 1, (0,)), EpsTransition(0, 0, (0,))))
    with pytest.raises(NotPseudoDeterministic):
        epsilon_eliminate(a)


def test_chain_mappings_are_composed():
    table = SymbolTable.of(["A"], [FunctionSignature("f", A * A, A)])
    # 0 -(swap)-> 1 -(f on vars 0,1)-> 2
    a = Automaton(table, {0: ("A", "A"), 1: ("A", "A"), 2: ("A",)}, A * A, (0,),
                  (EpsTransition(0, 1, (1, 0)), CompTransitionGroup(1, "f", 0, (0, 1), ((2, (0,)),))))
    e = epsilon_eliminate(a)
    (g,) = [t for t in e.transitions if t.source == 0]
    assert g.input_map == (1, 0)


def test_elimination_preserves_delay_diamonds():
    a = build_automaton(DELAY.table, DELAY.system("Loop"))
    e = epsilon_eliminate(a)
    interp = hashed_interpretation(DELAY.table, {"T": [0, 1, 2]}, 1)
    from looplock.values import UNIT

    assert run_automaton(a, interp, UNIT, 5).diamond == run_automaton(e, interp, UNIT, 5).diamond


def test_recursion_depth_is_bounded_by_state_count():
    for case in corpus(21, 20, 10):
        a = build_automaton(case.table, case.system, param=case.param)
        stats = {}
        epsilon_eliminate(a, stats)
        assert stats["max_depth"] <= len(a.rho)


# -- commutative extension ----------------------------------------------------------


def test_dependent_chain_is_not_reordered():
    s = SystemExpr(ID, LiftOmega(parse_system("lift(g . f)(mu(omega))").init), ID_SHAPE)
    a = eliminated(CHAIN, s, A)
    assert all(len(v) == 1 for q, v in guaranteed_computations(a).items() if a.outgoing(q))
    x = extended(a)
    assert is_similar(a, x) and is_similar(x, a)


def test_independent_calls_can_swap():
    # one cycle performs g on the B half, then f on the A half
    s = SystemExpr(ID, LiftOmega(times(Fn("f"), Fn("g"))), ID_SHAPE)
    a = eliminated(INDEPENDENT, s, A * B)
    x = extended(a)
    first = {g.fn for g in x.outgoing(x.initial[0])}
    assert {g.fn for g in a.outgoing(a.initial[0])} == {"g"}
    assert first == {"f", "g"}
    domains = {"A": [0, 1], "B": [0, 1]}
    interp = hashed_interpretation(INDEPENDENT, domains, 4)
    from looplock.values import enumerate_values

    for x0 in enumerate_values(A * B, domains):
        for k in range(1, 7):
            base = run_automaton(a, interp, x0, k).diamond
            ext = run_automaton(x, interp, x0, k, exhaustive=True).diamond
            assert base <= ext <= run_automaton(a, interp, x0, k + guarantee_horizon(a)).diamond


def test_extension_requires_determinism():
    with pytest.raises(NotDeterministic):
        commutative_extension(build_automaton(MSG.table, MSG.system("S")))


def test_delay_loop_and_its_extension_are_mutually_similar():
    a = eliminated(DELAY.table, DELAY.system("Loop"))
    x = extended(a)
    assert is_similar(a, x) and is_similar(x, a)


def test_corpus_automata_are_simulated_by_their_extensions():
    # the converse fails as soon as the extension performs something early:
    # a deterministic automaton cannot match a computation out of order
    for case in corpus(31, 25, 10):
        a = eliminated(case.table, case.system, case.param)
        x = extended(a)
        assert is_similar(a, x)
        if all(len(v) <= 1 for v in guaranteed_computations(a).values()):
            assert is_similar(x, a)


# -- similarity ----------------------------------------------------------------------


def test_reflexive_with_identity_witness():
    a = eliminated(MSG.table, MSG.system("S"))
    res = is_similar(a, a)
    assert res.similar
    assert all(q1 == q2 for q1, q2 in res.witness.pairs())
    assert is_simulation(a, a, res.witness)


def test_automaton_without_transitions_is_simulated_by_anything():
    empty = Automaton(MSG.table, {0: ("WORLD",)}, Opaque("WORLD"), (0,), ())
    assert is_similar(empty, eliminated(MSG.table, MSG.system("S")))


def test_witnesses_are_simulations():
    for p in similarity_pairs(3, 30):
        a1 = eliminated(p.table, p.left, p.param)
        a2 = extended(eliminated(p.table, p.right, p.param))
        res = is_similar(a1, a2)
        if res:
            assert is_simulation(a1, a2, res.witness)
        else:
            assert res.counterexample and res.counterexample[-1].get("unmatched")


def test_transitivity_on_sampled_triples():
    pairs = similarity_pairs(11, 60)
    for p in pairs:
        if p.kind != "extra":
            continue
        a1 = eliminated(p.table, p.left, p.param)
        a2 = eliminated(p.table, p.right, p.param)
        a3 = extended(a2)
        r12, r23 = is_similar(a1, a2), is_similar(a2, a3)
        if r12 and r23:
            assert is_similar(a1, a3)


def test_parameter_types_must_agree():
    a = eliminated(MSG.table, MSG.system("S"))
    b = eliminated(DELAY.table, DELAY.system("Loop"))
    with pytest.raises(ParamMismatch):
        is_similar(a, b)


def test_epsilon_transitions_are_refused():
    a = build_automaton(MSG.table, MSG.system("S"))
    with pytest.raises(EpsilonPresent):
        is_similar(a, a)


# -- end to end ------------------------------------------------------------------------


def test_transceiver_is_verified():
    res = verify(MSG.table, MSG.system("S"), MSG.system("P"), MSG.system("C"))
    assert res.verdict and res.similarity.witness
    assert set(res.timings) == {"compose", "elaborate", "eliminate", "extend", "similarity"}


def test_mutated_controller_gives_counterexample():
    res = verify(MSG.table, MSG.system("S"), MSG.system("P"), MSG.system("Cbad"))
    assert not res.verdict
    last = res.similarity.counterexample[-1]
    assert last["unmatched"] and last["function"] == "send"


def test_computation_free_spec_always_holds():
    spec = SystemExpr(ID, LiftOmega(ID), ID_SHAPE)
    assert verify(MSG.table, spec, MSG.system("P"), MSG.system("C")).verdict


def test_reordering_needs_the_extension():
    # the spec receives and then sends; reordering is not needed here, so both
    # settings agree on the transceiver
    plain = verify(MSG.table, MSG.system("S"), MSG.system("P"), MSG.system("C"), extend=False)
    assert plain.verdict and not plain.extended


def test_report_matches_schema():
    schema = json.loads((ROOT / "src" / "looplock" / "schemas" / "verdict.v1.json").read_text())
    for controller in ("C", "Cbad"):
        doc = verify(MSG.table, MSG.system("S"), MSG.system("P"), MSG.system(controller)).to_json()
        jsonschema.validate(doc, schema)


def test_spec_parameter_must_fit():
    with pytest.raises(ParamMismatch):
        verify(MSG.table, SystemExpr(Fn("dflt"), LiftOmega(ID), ID_SHAPE), MSG.system("P"), MSG.system("C"))
