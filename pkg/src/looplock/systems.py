"""System expressions: a loop function iterated forever from an initial state,
typed against an interface shape, and the closed-loop composition of a plant
with a complement-shaped controller."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

from .combinational import (
    DELTA2,
    D1,
    ID,
    PI1,
    PI2,
    Case,
    CombChecker,
    Pair,
    Typed,
    compose as compose_fns,
    format_comb,
    times,
)
from .errors import (
    NormalFormError,
    NotClosedLoop,
    ParamMismatch,
    ShapeMismatch,
    TypeCheckError,
)
from .shapes import ID as ID_SHAPE, Coprod, Id, Input, Output, Prod, complement, refines
from .typesys import CompositeType, Coproduct, Product, SymbolTable, format_type


@dataclass(frozen=True)
class LiftOmega:
    """``lift(f) . omega``: store ``f`` of the current data as the next state."""

    f: object = ID


@dataclass(frozen=True)
class Alpha:
    """``alpha . inner``: read an input port, pairing it with the current data."""

    inner: "LoopExpr"


@dataclass(frozen=True)
class LiftBeta:
    """``lift(f) . beta . inner``: ``f`` yields ``(rest, out)``; ``out`` is written."""

    f: object
    inner: "LoopExpr"


@dataclass(frozen=True)
class LiftTensor:
    """``lift(f) . (left (x) right)``: the environment picks the branch."""

    f: object
    left: "LoopExpr"
    right: "LoopExpr"


@dataclass(frozen=True)
class LiftOplus:
    """``lift(f) . (left (o) right)``: ``f`` yields a coproduct; its tag picks the branch."""

    f: object
    left: "LoopExpr"
    right: "LoopExpr"


LoopExpr = Union[LiftOmega, Alpha, LiftBeta, LiftTensor, LiftOplus]


@dataclass(frozen=True)
class SystemExpr:
    """``lift(init)(mu(loop))`` with its declared interface shape."""

    init: object
    loop: LoopExpr
    shape: object = field(default=ID_SHAPE)


@dataclass(frozen=True)
class SystemType:
    shape_f: object
    shape_g: object
    param: CompositeType

    def __post_init__(self):
        if not refines(self.shape_f, self.shape_g):
            raise ShapeMismatch(f"{self.shape_f} ◁ {self.shape_g} does not hold")

    def __str__(self):
        return f"[{self.shape_f} ◁ {self.shape_g}]^{format_type(self.param, 3)}"


@dataclass(frozen=True)
class TypedSystem:
    expr: SystemExpr
    type: SystemType
    state: CompositeType
    init: Typed
    loop: Typed | None  # only for closed-loop systems


@dataclass(frozen=True)
class NormalForm:
    init: object
    loop: object
    param: CompositeType
    state: CompositeType


# -- typing --------------------------------------------------------------------


class _SystemChecker:
    def __init__(self, ctx: SymbolTable):
        self.comb = CombChecker(ctx)
        self.u = self.comb.u

    def gen_system(self, s: SystemExpr, shape, param):
        state = self.u.fresh()
        init = self.comb.gen(s.init, param, state)
        lifts = []
        self.gen_loop(s.loop, shape, state, state, lifts)
        return state, init, lifts

    def gen_loop(self, loop, shape, data, state, lifts):
        u = self.u
        if isinstance(loop, LiftOmega):
            if not isinstance(shape, Id):
                raise ShapeMismatch(f"omega closes a cycle only at Id, but the interface still has {shape}")
            lifts.append(self.comb.gen(loop.f, data, state))
        elif isinstance(loop, Alpha):
            if not isinstance(shape, Input):
                raise ShapeMismatch(f"alpha reads an input port (F^U), but the interface here is {shape}")
            self.gen_loop(loop.inner, shape.inner, Product(data, shape.port_type), state, lifts)
        elif isinstance(loop, LiftBeta):
            if not isinstance(shape, Output):
                raise ShapeMismatch(f"beta writes an output port (F_U), but the interface here is {shape}")
            rest = u.fresh()
            lifts.append(self.comb.gen(loop.f, data, Product(rest, shape.port_type)))
            self.gen_loop(loop.inner, shape.inner, rest, state, lifts)
        elif isinstance(loop, LiftTensor):
            if not isinstance(shape, Prod):
                raise ShapeMismatch(f"(x) builds a product interface, but the interface here is {shape}")
            mid = u.fresh()
            lifts.append(self.comb.gen(loop.f, data, mid))
            self.gen_loop(loop.left, shape.left, mid, state, lifts)
            self.gen_loop(loop.right, shape.right, mid, state, lifts)
        elif isinstance(loop, LiftOplus):
            if not isinstance(shape, Coprod):
                raise ShapeMismatch(f"(o) builds a coproduct interface, but the interface here is {shape}")
            a, b = u.fresh(), u.fresh()
            lifts.append(self.comb.gen(loop.f, data, Coproduct(a, b)))
            self.gen_loop(loop.left, shape.left, a, state, lifts)
            self.gen_loop(loop.right, shape.right, b, state, lifts)
        else:
            raise TypeCheckError(f"not a loop expression: {loop!r}")

    def finish(self, s, shape, param, state, init, lifts) -> TypedSystem:
        r = self.u.resolve
        closed = isinstance(s.loop, LiftOmega) and isinstance(shape, Id)
        return TypedSystem(
            expr=s,
            type=SystemType(shape, shape, r(param)),
            state=r(state),
            init=self.comb.finish(init),
            loop=self.comb.finish(lifts[0]) if closed else None,
        )


def check_system(ctx: SymbolTable, s: SystemExpr, declared_shape=None, param=None) -> TypedSystem:
    """Typecheck ``s`` against its interface, optionally fixing the parameter type."""
    shape = s.shape if declared_shape is None else declared_shape
    checker = _SystemChecker(ctx)
    p = checker.u.fresh() if param is None else param
    state, init, lifts = checker.gen_system(s, shape, p)
    return checker.finish(s, shape, p, state, init, lifts)


def common_param(ctx: SymbolTable, *systems: SystemExpr) -> CompositeType:
    """The initial parameter type the given systems can all be typed at.

    Raises ParamMismatch when no single type fits; parts left open by every
    system default to 1.
    """
    checker = _SystemChecker(ctx)
    shared = checker.u.fresh()
    for s in systems:
        check_system(ctx, s)
        try:
            checker.gen_system(s, s.shape, shared)
        except TypeCheckError:
            found = ", ".join(str(check_system(ctx, x).type.param) for x in systems)
            raise ParamMismatch(f"no common initial parameter type (found {found})") from None
    return checker.u.resolve(shared)


def type_system(ctx: SymbolTable, s: SystemExpr, declared_shape=None, param=None) -> SystemType:
    return check_system(ctx, s, declared_shape, param).type


def loop_state_type(ctx: SymbolTable, s: SystemExpr, param=None) -> CompositeType:
    return check_system(ctx, s, param=param).state


def normal_form(ctx: SymbolTable, s: SystemExpr, param=None) -> NormalForm:
    if not isinstance(s.shape, Id) or not isinstance(s.loop, LiftOmega):
        raise NotClosedLoop(f"system with interface {s.shape} is not closed-loop")
    ts = check_system(ctx, s, param=param)
    return NormalForm(s.init, s.loop.f, ts.type.param, ts.state)


def from_normal_form(nf: NormalForm) -> SystemExpr:
    return SystemExpr(nf.init, LiftOmega(nf.loop), ID_SHAPE)


# -- closed-loop composition -----------------------------------------------------

# (a, (x, u)) -> ((a, u), x)
_ROUTE_INPUT_LEFT = Pair(Pair(PI1, compose_fns(PI2, PI2)), compose_fns(PI1, PI2))
# ((x, u), b) -> (x, (b, u))
_ROUTE_INPUT_RIGHT = Pair(compose_fns(PI1, PI1), Pair(PI2, compose_fns(PI2, PI1)))


def _name(loop) -> str:
    return {LiftOmega: "omega", Alpha: "alpha", LiftBeta: "beta",
            LiftTensor: "(x)", LiftOplus: "(o)"}[type(loop)]


def tensor_loops(g1, g2):
    """The combinational function computed by one cycle of two loops wired together.

    ``g1`` takes data of type A and ``g2`` data of type B; the result maps
    ``A * B`` to the pair of next states.
    """
    if isinstance(g1, LiftOmega) and isinstance(g2, LiftOmega):
        return times(g1.f, g2.f)
    if isinstance(g1, Alpha) and isinstance(g2, LiftBeta):
        return compose_fns(tensor_loops(g1.inner, g2.inner), _ROUTE_INPUT_LEFT, times(ID, g2.f))
    if isinstance(g1, LiftBeta) and isinstance(g2, Alpha):
        return compose_fns(tensor_loops(g1.inner, g2.inner), _ROUTE_INPUT_RIGHT, times(g1.f, ID))
    if isinstance(g1, LiftTensor) and isinstance(g2, LiftOplus):
        branches = Case(tensor_loops(g1.left, g2.left), tensor_loops(g1.right, g2.right))
        return compose_fns(branches, D1, times(g1.f, g2.f))
    if isinstance(g1, LiftOplus) and isinstance(g2, LiftTensor):
        branches = Case(tensor_loops(g1.left, g2.left), tensor_loops(g1.right, g2.right))
        return compose_fns(branches, DELTA2, times(g1.f, g2.f))
    raise NormalFormError(f"no composition rule pairs {_name(g1)} with {_name(g2)}")


def compose(ctx: SymbolTable, plant: SystemExpr, controller: SystemExpr) -> SystemExpr:
    """Wire ``plant`` to a controller of the complementary shape, closing the loop.

    Both systems must share an initial parameter type; the composed system
    hands the same parameter to both initialization functions.
    """
    if complement(plant.shape) != controller.shape:
        raise ShapeMismatch(
            f"controller shape {controller.shape} is not the complement of plant shape "
            f"{plant.shape} (expected {complement(plant.shape)})"
        )
    checker = _SystemChecker(ctx)
    param = checker.u.fresh()
    try:
        checker.gen_system(plant, plant.shape, param)
        checker.gen_system(controller, controller.shape, param)
    except TypeCheckError:
        check_system(ctx, plant)
        check_system(ctx, controller)
        raise ParamMismatch(
            f"plant and controller disagree on the initial parameter type "
            f"({check_system(ctx, plant).type.param} vs {check_system(ctx, controller).type.param})"
        ) from None
    closed = SystemExpr(
        init=Pair(plant.init, controller.init),
        loop=LiftOmega(tensor_loops(plant.loop, controller.loop)),
        shape=ID_SHAPE,
    )
    check_system(ctx, closed, param=checker.u.resolve(param))
    return closed


# -- printing ------------------------------------------------------------------


def format_loop(loop, unicode: bool = False) -> str:
    def lift(f, rest):
        if f == ID:
            return rest
        inner = format_comb(f, unicode)
        head = f"⌈{inner}⌉" if unicode else f"lift({inner})"
        return f"{head}{' ∘ ' if unicode else ' . '}{rest}"

    dot = " ∘ " if unicode else " . "
    if isinstance(loop, LiftOmega):
        return lift(loop.f, "ω" if unicode else "omega")
    if isinstance(loop, Alpha):
        return ("α" if unicode else "alpha") + dot + format_loop(loop.inner, unicode)
    if isinstance(loop, LiftBeta):
        return lift(loop.f, ("β" if unicode else "beta") + dot + format_loop(loop.inner, unicode))
    op = {LiftTensor: (" ⊗ ", " (x) "), LiftOplus: (" ⊕ ", " (o) ")}[type(loop)][0 if unicode else 1]
    body = f"({format_loop(loop.left, unicode)}{op}{format_loop(loop.right, unicode)})"
    return lift(loop.f, body)


def format_system(s: SystemExpr, unicode: bool = False) -> str:
    init = format_comb(s.init, unicode)
    if unicode:
        return f"⌈{init}⌉(μ({format_loop(s.loop, True)}))"
    return f"lift({init})(mu({format_loop(s.loop)}))"
