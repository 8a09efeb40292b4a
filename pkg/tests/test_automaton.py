import json
import random
from pathlib import Path

import jsonschema
import pytest

from gen import corpus, hashed_interpretation, random_domains, sample_params
from looplock.automaton import (
    Automaton,
    CompTransitionGroup,
    EpsTransition,
    Fragment,
    from_json,
    parallel_state,
    to_dot,
    to_json,
)
from looplock.combinational import ID, PI2, THETA, Fn, Pair, annotate, evaluate, times
from looplock.combinational import compose as compose_fns
from looplock.dsl import parse_file
from looplock.elaborate import Elaborator, build_automaton, elaborate_comb
from looplock.errors import LooplockError, NotClosedLoop
from looplock.interpreter import run_automaton, run_system
from looplock.systems import LiftOmega, SystemExpr, compose
from looplock.shapes import ID as ID_SHAPE
from looplock.typesys import ONE, FunctionSignature, Opaque, SymbolTable
from looplock.values import enumerate_values

ROOT = Path(__file__).resolve().parent.parent
SCHEMAS = ROOT / "src" / "looplock" / "schemas"
MSG = parse_file(ROOT / "specs" / "msg.spec")
DELAY = parse_file(ROOT / "specs" / "delay.spec")
A, B, C, D, E = (Opaque(n) for n in "ABCDE")
BAR_TABLE = SymbolTable.of("ABCDE", [FunctionSignature("bar", A, B)])


def bar_fragment():
    frag = Fragment()
    frag.add_state("alpha", ["A"], "alpha")
    frag.add_state("beta", ["B"], "beta")
    frag.transitions.append(CompTransitionGroup("alpha", "bar", 0, (0,), (("beta", (0,)),)))
    return frag


def test_parallel_state_adds_one_copy_per_variant():
    frag = parallel_state(bar_fragment(), C * D + E, BAR_TABLE)
    assert frag.rho == {
        ("alpha", 0): ("A", "C", "D"), ("alpha", 1): ("A", "E"),
        ("beta", 0): ("B", "C", "D"), ("beta", 1): ("B", "E"),
    }
    assert len(frag.transitions) == 2
    by_source = {t.source: t for t in frag.transitions}
    # the result component comes first, then the carried C, D
    assert by_source[("alpha", 0)].outcomes == ((("beta", 0), (0, 2, 3)),)
    assert by_source[("alpha", 1)].outcomes == ((("beta", 1), (0, 2)),)


def test_parallel_unit_changes_nothing_but_names():
    frag = parallel_state(bar_fragment(), ONE, BAR_TABLE)
    assert sorted(frag.rho.values()) == [("A",), ("B",)]
    assert [t.outcomes[0][1] for t in frag.transitions] == [(0,)]


def test_parallel_state_on_automaton_keeps_it_valid():
    a = build_automaton(MSG.table, MSG.system("S"))
    p = parallel_state(a, A + ONE)
    assert len(p.rho) == 2 * len(a.rho)
    Automaton(MSG.table, p.rho, p.param, p.initial, p.transitions).validate()


def _elaborate(expr, dom, table=BAR_TABLE):
    el = Elaborator(table)
    frag = Fragment()
    typed = annotate(table, expr, dom)
    ins = el.fresh_set(frag, typed.dom, "in")
    outs = el.fresh_set(frag, typed.cod, "out")
    elaborate_comb(table, typed, ins, outs, frag)
    return frag, ins, outs


def test_identity_is_one_identity_epsilon():
    frag, ins, outs = _elaborate(ID, A)
    assert frag.transitions == [EpsTransition(ins[0], outs[0], (0,))]


def test_theta_forgets_every_variable():
    frag, ins, outs = _elaborate(THETA, A * B + C)
    assert len(frag.transitions) == 2
    assert all(isinstance(t, EpsTransition) and t.target == outs[0] and t.map == () for t in frag.transitions)


def test_delay_loop_automaton():
    a = build_automaton(DELAY.table, DELAY.system("Loop"))
    assert len(a.initial) == 1 and a.rho[a.initial[0]] == ()
    system_states = [q for q in a.rho if a.label(q).startswith("sys")]
    assert [a.rho[q] for q in system_states] == [("T",)]
    assert [t.fn for t in a.comp_groups()] == ["init"]
    assert a.is_pseudo_deterministic()


def test_identity_loop_is_an_epsilon_cycle():
    table = SymbolTable.of(["foo"])
    a = build_automaton(table, SystemExpr(ID, LiftOmega(ID), ID_SHAPE), param=Opaque("foo"))
    assert not a.comp_groups() and a.eps_transitions()
    interp = hashed_interpretation(table, {"foo": [0]}, 0)
    run = run_automaton(a, interp, enumerate_values(Opaque("foo"), {"foo": [0]})[0], 5)
    assert run.diamond == frozenset() and run.complete


def test_composed_transceiver_automaton():
    a = build_automaton(MSG.table, compose(MSG.table, MSG.system("P"), MSG.system("C")))
    assert a.is_pseudo_deterministic()
    assert {t.fn for t in a.comp_groups()} == {"recv", "send"}


def test_open_systems_do_not_elaborate():
    with pytest.raises(NotClosedLoop):
        build_automaton(DELAY.table, DELAY.system("D"))


def test_validate_catches_ill_typed_mappings():
    a = build_automaton(MSG.table, MSG.system("S"))
    t = a.comp_groups()[0]
    broken = CompTransitionGroup(t.source, t.fn, t.dom_variant, t.input_map + (0,), t.outcomes)
    bad = Automaton(a.table, a.rho, a.param, a.initial,
                    tuple(broken if x is t else x for x in a.transitions))
    with pytest.raises(LooplockError):
        bad.validate()


def test_elaborated_pairing_matches_evaluation():
    # <theta, id> . pi2 inside a loop over 1 * T, run under both semantics
    table = SymbolTable.of(["T"], [FunctionSignature("step", Opaque("T"), Opaque("T"))])
    pairing = compose_fns(Pair(THETA, ID), PI2)
    s = SystemExpr(Pair(THETA, ID), LiftOmega(compose_fns(times(ID, Fn("step")), pairing)), ID_SHAPE)
    domains = {"T": [0, 1, 2]}
    interp = hashed_interpretation(table, domains, 3)
    a = build_automaton(table, s, param=Opaque("T"))
    for x0 in enumerate_values(Opaque("T"), domains):
        assert run_system(s, interp, x0, 10, 6).applications == run_automaton(a, interp, x0, 6).applications
    for v in enumerate_values(ONE * Opaque("T"), domains):
        assert evaluate(interp, pairing, v) == v


def _schema(name):
    return json.loads((SCHEMAS / name).read_text())


def test_json_export_round_trips_and_validates():
    schema = _schema("automaton.v1.json")
    for case in corpus(5, 15, 5):
        a = build_automaton(case.table, case.system, param=case.param)
        doc = to_json(a)
        jsonschema.validate(doc, schema)
        back = from_json(json.loads(json.dumps(doc)))
        assert back == a


def test_dot_has_one_node_per_state():
    a = build_automaton(DELAY.table, DELAY.system("Loop"))
    dot = to_dot(a)
    nodes = [line for line in dot.splitlines() if "shape=" in line]
    assert len(nodes) == len(to_json(a)["states"]) == len(a.rho)


def test_elaboration_agrees_with_evaluation_on_corpus():
    for i, case in enumerate(corpus(77, 20, 10)):
        rng = random.Random(i)
        a = build_automaton(case.table, case.system, param=case.param)
        domains = random_domains(rng, case.table)
        interp = hashed_interpretation(case.table, domains, i)
        for x0 in sample_params(rng, case.param, domains):
            r1 = run_system(case.system, interp, x0, 60, 5, param=case.param)
            assert r1.applications == run_automaton(a, interp, x0, 5).applications
