import json
from pathlib import Path

import jsonschema
import pytest

from looplock.combinational import ID, Fn, times
from looplock.dsl import parse_file, parse_type, parse_value
from looplock.elaborate import build_automaton
from looplock.errors import (
    EvaluationError,
    InterpretationError,
    NondeterministicWithoutExhaustiveFlag,
)
from looplock.interpreter import (
    Interpretation,
    WorldModel,
    diamond_subset,
    run_automaton,
    run_system,
    trace_jsonl,
)
from looplock.shapes import ID as ID_SHAPE
from looplock.systems import LiftOmega, SystemExpr, compose
from looplock.typesys import FunctionSignature, Opaque, SymbolTable
from looplock.values import UNIT, OpaqueVal, PairVal
from looplock.verification import commutative_extension, epsilon_eliminate

ROOT = Path(__file__).resolve().parent.parent
SCHEMAS = ROOT / "src" / "looplock" / "schemas"
MSG = parse_file(ROOT / "specs" / "msg.spec")
DELAY = parse_file(ROOT / "specs" / "delay.spec")
WORLD = parse_type("WORLD")
SCENARIO = json.loads((ROOT / "specs" / "msg_interp.json").read_text())


def scripted():
    return Interpretation.from_script(MSG.table, SCENARIO)


def w(name):
    return OpaqueVal("WORLD", name)


def test_scenario_matches_schema():
    jsonschema.validate(SCENARIO, json.loads((SCHEMAS / "interp.v1.json").read_text()))


def test_zero_cycles_runs_only_initialization():
    run = run_system(MSG.system("S"), scripted(), w("w0"), 0)
    assert run.applications == []
    assert [e["state"] for e in run.trace] == ["init"]


def test_spec_run_on_scripted_world():
    run = run_system(MSG.system("S"), scripted(), w("w0"), 3)
    assert [f for f, _ in run.applications] == ["recv", "recv", "send", "recv", "send"]
    assert run.applications[2][1] == parse_value("(w2, hello)", parse_type("WORLD * MSG"))


def test_depth_bound_counts_applications():
    run = run_system(MSG.system("S"), scripted(), w("w0"), 100, depth=4)
    assert len(run.applications) == 4


def test_silent_loop_is_detected():
    run = run_system(DELAY.system("Loop"), Interpretation(DELAY.table, {}, {"init": lambda _: OpaqueVal("T", 0)}),
                     UNIT, 1000)
    assert run.complete and run.applications == [("init", UNIT)]


def test_wrong_parameter_is_rejected():
    with pytest.raises(EvaluationError):
        run_system(MSG.system("S"), scripted(), UNIT, 1)


def test_executable_results_are_checked():
    bad = Interpretation(MSG.table, {}, {"recv": lambda v: v})
    with pytest.raises(InterpretationError, match="recv"):
        run_system(MSG.system("S"), bad, w("w0"), 1)


def test_script_without_row_or_default():
    doc = {"functions": {"recv": {"table": {"w0": "(w1, inr(*))"}}}}
    interp = Interpretation.from_script(MSG.table, doc)
    with pytest.raises(InterpretationError, match="no row"):
        run_system(MSG.system("S"), interp, w("w0"), 2)


def test_automaton_run_agrees_and_trace_validates():
    schema = json.loads((SCHEMAS / "trace.v1.json").read_text())
    a = build_automaton(MSG.table, MSG.system("S"))
    run = run_automaton(a, scripted(), w("w0"), 6)
    assert run.applications == run_system(MSG.system("S"), scripted(), w("w0"), 20, 6).applications
    lines = trace_jsonl(run).splitlines()
    assert lines
    for line in lines:
        jsonschema.validate(json.loads(line), schema)
    assert {json.loads(line).get("function") for line in lines} >= {"recv", "send"}


def test_stuck_state_ends_the_run():
    a = epsilon_eliminate(build_automaton(DELAY.table, DELAY.system("Loop")))
    interp = Interpretation(DELAY.table, {}, {"init": lambda _: OpaqueVal("T", 0)})
    run = run_automaton(a, interp, UNIT, 10)
    assert run.complete and len(run.applications) == 1


def test_branching_needs_exhaustive_mode():
    A, B = Opaque("A"), Opaque("B")
    table = SymbolTable.of(["A", "B"], [FunctionSignature("f", A, A), FunctionSignature("g", B, B)])
    s = SystemExpr(ID, LiftOmega(times(Fn("f"), Fn("g"))), ID_SHAPE)
    x = commutative_extension(epsilon_eliminate(build_automaton(table, s, param=A * B)))
    interp = Interpretation(table, {}, {"f": lambda v: v, "g": lambda v: v})
    x0 = PairVal(OpaqueVal("A", 0), OpaqueVal("B", 0))
    with pytest.raises(NondeterministicWithoutExhaustiveFlag):
        run_automaton(x, interp, x0, 6)
    run = run_automaton(x, interp, x0, 6, exhaustive=True)
    assert run.diamond == {("f", x0.left), ("g", x0.right)}


def test_spec_diamonds_are_covered_by_the_composition():
    closed = compose(MSG.table, MSG.system("P"), MSG.system("C"))
    interp = scripted()
    for name in SCENARIO["domains"]["WORLD"]:
        spec = run_system(MSG.system("S"), interp, w(name), 30, 6).diamond
        impl = run_system(closed, interp, w(name), 30, 6).diamond
        assert diamond_subset(spec, impl)


def test_diamond_subset_basics():
    d = {("f", UNIT)}
    assert diamond_subset(set(), d)
    assert diamond_subset(d, d)
    assert not diamond_subset(d, set())


def test_world_threading_functions():
    assert sorted(WorldModel("WORLD").threading_functions(MSG.table)) == ["recv", "send"]


def test_identity_loop_never_computes():
    s = SystemExpr(ID, LiftOmega(ID), ID_SHAPE)
    run = run_system(s, scripted(), w("w0"), 50, param=WORLD)
    assert run.applications == [] and run.complete


def test_missing_executable_is_reported():
    s = SystemExpr(ID, LiftOmega(Fn("recv")), ID_SHAPE)
    with pytest.raises(Exception, match="recv"):
        run_system(s, Interpretation(MSG.table, {}, {}), w("w0"), 1)
