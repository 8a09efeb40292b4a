"""Typed closed-loop system specifications, their automata, and a decision
procedure for timing-agnostic similarity."""

from .automaton import Automaton, CompTransitionGroup, EpsTransition, parallel_state
from .combinational import annotate, evaluate, format_comb, infer
from .dsl import SpecFile, format_spec, parse, parse_file, parse_value
from .elaborate import build_automaton
from .errors import (
    DslError,
    DslSyntaxError,
    EpsilonPresent,
    EvaluationError,
    InterpretationError,
    InterpretationMissing,
    LooplockError,
    NondeterministicWithoutExhaustiveFlag,
    NormalFormError,
    NotClosedLoop,
    NotDeterministic,
    NotPseudoDeterministic,
    ParamMismatch,
    ResolutionError,
    ShapeMismatch,
    TypeCheckError,
    UnknownSymbol,
)
from .interpreter import Interpretation, Run, WorldModel, diamond_subset, run_automaton, run_system
from .shapes import complement, format_shape, refines
from .systems import SystemExpr, SystemType, check_system, compose, normal_form, type_system
from .typesys import FunctionSignature, SymbolTable, format_type, typ, variant_count, variants
from .verification import (
    Simulation,
    SimilarityResult,
    VerifyResult,
    commutative_extension,
    epsilon_eliminate,
    is_similar,
    verify,
)

__version__ = "0.1.0"

__all__ = [
    "Automaton",
    "CompTransitionGroup",
    "DslError",
    "DslSyntaxError",
    "EpsTransition",
    "EpsilonPresent",
    "EvaluationError",
    "FunctionSignature",
    "Interpretation",
    "InterpretationError",
    "InterpretationMissing",
    "LooplockError",
    "NondeterministicWithoutExhaustiveFlag",
    "NormalFormError",
    "NotClosedLoop",
    "NotDeterministic",
    "NotPseudoDeterministic",
    "ParamMismatch",
    "ResolutionError",
    "Run",
    "ShapeMismatch",
    "SimilarityResult",
    "Simulation",
    "SpecFile",
    "SymbolTable",
    "SystemExpr",
    "SystemType",
    "TypeCheckError",
    "UnknownSymbol",
    "VerifyResult",
    "WorldModel",
    "annotate",
    "build_automaton",
    "check_system",
    "commutative_extension",
    "complement",
    "compose",
    "diamond_subset",
    "epsilon_eliminate",
    "evaluate",
    "format_comb",
    "format_shape",
    "format_spec",
    "format_type",
    "infer",
    "is_similar",
    "normal_form",
    "parallel_state",
    "parse",
    "parse_file",
    "parse_value",
    "refines",
    "run_automaton",
    "run_system",
    "typ",
    "type_system",
    "variant_count",
    "variants",
    "verify",
]
