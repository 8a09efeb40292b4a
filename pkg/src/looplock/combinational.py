"""Combinational expressions: the point-free combinator language for
loop-free functions between composite types.

Typing is by unification. The primitives are schematic (``id : T -> T`` for
every T), so each occurrence gets fresh type metavariables; a caller supplies
the domain (and optionally the codomain) and any metavariable left unconstrained
afterwards is defaulted to the singleton type ``1``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Union

from .errors import EvaluationError, TypeCheckError
from .typesys import (
    ONE,
    CompositeType,
    Coproduct,
    Product,
    SymbolTable,
    format_type,
)
from .values import UNIT, InL, InR, PairVal


# -- syntax ------------------------------------------------------------------


@dataclass(frozen=True)
class Fn:
    """A reference to an opaque function."""

    name: str


@dataclass(frozen=True)
class Compose:
    """``after . before``"""

    after: "CombExpr"
    before: "CombExpr"


@dataclass(frozen=True)
class Pair:
    left: "CombExpr"
    right: "CombExpr"


@dataclass(frozen=True)
class Case:
    left: "CombExpr"
    right: "CombExpr"


@dataclass(frozen=True)
class Identity:
    pass


@dataclass(frozen=True)
class Theta:
    pass


@dataclass(frozen=True)
class Pi1:
    pass


@dataclass(frozen=True)
class Pi2:
    pass


@dataclass(frozen=True)
class Kappa1:
    pass


@dataclass(frozen=True)
class Kappa2:
    pass


@dataclass(frozen=True)
class Delta1:
    pass


CombExpr = Union[Fn, Compose, Pair, Case, Identity, Theta, Pi1, Pi2, Kappa1, Kappa2, Delta1]

ID, THETA, PI1, PI2, K1, K2, D1 = Identity(), Theta(), Pi1(), Pi2(), Kappa1(), Kappa2(), Delta1()

OpaqueFn = Fn


def subexpressions(e):
    yield e
    if isinstance(e, Compose):
        yield from subexpressions(e.after)
        yield from subexpressions(e.before)
    elif isinstance(e, (Pair, Case)):
        yield from subexpressions(e.left)
        yield from subexpressions(e.right)


def opaque_calls(e) -> set[str]:
    return {x.name for x in subexpressions(e) if isinstance(x, Fn)}


# -- derived combinators -------------------------------------------------------


def compose(*fs):
    """Right-to-left composition, dropping identities: ``compose(g, f) = g . f``."""
    fs = [f for f in fs if not isinstance(f, Identity)]
    if not fs:
        return ID
    out = fs[-1]
    for f in reversed(fs[:-1]):
        out = Compose(f, out)
    return out


def times(f, g):
    return Pair(Compose(f, PI1), Compose(g, PI2))


def plus(f, g):
    return Case(Compose(K1, f), Compose(K2, g))


SWAP_PRODUCT = Pair(PI2, PI1)
SWAP_COPRODUCT = Case(K2, K1)
# right distributive law (X + Y) * Z -> X * Z + Y * Z
DELTA2 = Compose(plus(SWAP_PRODUCT, SWAP_PRODUCT), Compose(D1, SWAP_PRODUCT))

_DERIVED = {
    "times": (2, times),
    "plus": (2, plus),
    "swapP": (0, lambda: SWAP_PRODUCT),
    "swapC": (0, lambda: SWAP_COPRODUCT),
    "d2": (0, lambda: DELTA2),
}
_ALIASES = {
    "×": "times", "**": "times",
    "+": "plus", "++": "plus",
    "σπ": "swapP", "sigma_pi": "swapP",
    "σκ": "swapC", "sigma_kappa": "swapC",
    "δ2": "d2", "delta2": "d2",
}


def desugar(name: str, *args):
    """Expand a derived combinator into primitives."""
    key = _ALIASES.get(name, name)
    if key not in _DERIVED:
        raise KeyError(f"unknown derived combinator {name!r}")
    arity, build = _DERIVED[key]
    if len(args) != arity:
        raise TypeError(f"{name} takes {arity} arguments, got {len(args)}")
    return build(*args)


# -- typing --------------------------------------------------------------------


@dataclass(frozen=True)
class Meta:
    id: int

    def __str__(self):
        return f"?{self.id}"


class Unifier:
    """Union-find substitution over types containing :class:`Meta` holes."""

    def __init__(self):
        self._ids = itertools.count()
        self._binding: dict[Meta, object] = {}

    def fresh(self) -> Meta:
        return Meta(next(self._ids))

    def find(self, t):
        while isinstance(t, Meta) and t in self._binding:
            t = self._binding[t]
        return t

    def _occurs(self, m, t) -> bool:
        t = self.find(t)
        if t == m:
            return True
        if isinstance(t, (Product, Coproduct)):
            return self._occurs(m, t.left) or self._occurs(m, t.right)
        return False

    def unify(self, a, b, rule: str) -> None:
        a, b = self.find(a), self.find(b)
        if a == b:
            return
        if isinstance(a, Meta) or isinstance(b, Meta):
            m, t = (a, b) if isinstance(a, Meta) else (b, a)
            if self._occurs(m, t):
                raise TypeCheckError(f"{rule}: infinite type {m} ~ {self.show(t)}")
            self._binding[m] = t
            return
        if type(a) is type(b) and isinstance(a, (Product, Coproduct)):
            try:
                self.unify(a.left, b.left, rule)
                self.unify(a.right, b.right, rule)
            except TypeCheckError:
                raise TypeCheckError(
                    f"{rule}: cannot match {self.show(a)} with {self.show(b)}"
                ) from None
            return
        raise TypeCheckError(f"{rule}: cannot match {self.show(a)} with {self.show(b)}")

    def resolve(self, t, default=ONE):
        t = self.find(t)
        if isinstance(t, Meta):
            return t if default is None else default
        if isinstance(t, Product):
            return Product(self.resolve(t.left, default), self.resolve(t.right, default))
        if isinstance(t, Coproduct):
            return Coproduct(self.resolve(t.left, default), self.resolve(t.right, default))
        return t

    def show(self, t) -> str:
        return format_type(self.resolve(t, default=None))


@dataclass(frozen=True)
class CombType:
    domain: CompositeType
    codomain: CompositeType

    def __str__(self):
        return f"{self.domain} ⟶ {self.codomain}"


@dataclass(frozen=True)
class Typed:
    """An expression occurrence annotated with its resolved type.

    ``children`` follow the field order of ``expr`` (``after, before`` for
    composition; ``left, right`` for pairs and cases).
    """

    expr: CombExpr
    dom: CompositeType
    cod: CompositeType
    children: tuple["Typed", ...] = ()


class _Pending:
    __slots__ = ("expr", "dom", "cod", "children")

    def __init__(self, expr, dom, cod, children=()):
        self.expr, self.dom, self.cod, self.children = expr, dom, cod, children


class CombChecker:
    """Constraint generation for combinational expressions."""

    def __init__(self, ctx: SymbolTable, unifier: Unifier | None = None):
        self.ctx = ctx
        self.u = unifier or Unifier()

    def gen(self, e, dom, cod) -> _Pending:
        u = self.u
        if isinstance(e, Fn):
            sig = self.ctx.signature(e.name)
            u.unify(dom, sig.domain, f"opaque function {e.name} (domain)")
            u.unify(cod, sig.codomain, f"opaque function {e.name} (codomain)")
            return _Pending(e, dom, cod)
        if isinstance(e, Compose):
            mid = u.fresh()
            before = self.gen(e.before, dom, mid)
            after = self.gen(e.after, mid, cod)
            return _Pending(e, dom, cod, (after, before))
        if isinstance(e, Pair):
            a, b = u.fresh(), u.fresh()
            u.unify(cod, Product(a, b), "pair <f, g> (codomain must be a product)")
            left = self.gen(e.left, dom, a)
            right = self.gen(e.right, dom, b)
            return _Pending(e, dom, cod, (left, right))
        if isinstance(e, Case):
            a, b = u.fresh(), u.fresh()
            u.unify(dom, Coproduct(a, b), "case [f, g] (domain must be a coproduct)")
            left = self.gen(e.left, a, cod)
            right = self.gen(e.right, b, cod)
            return _Pending(e, dom, cod, (left, right))
        if isinstance(e, Identity):
            u.unify(dom, cod, "id")
        elif isinstance(e, Theta):
            u.unify(cod, ONE, "theta")
        elif isinstance(e, (Pi1, Pi2)):
            a, b = u.fresh(), u.fresh()
            name = "pi1" if isinstance(e, Pi1) else "pi2"
            u.unify(dom, Product(a, b), f"{name} (domain must be a product)")
            u.unify(cod, a if isinstance(e, Pi1) else b, name)
        elif isinstance(e, (Kappa1, Kappa2)):
            a, b = u.fresh(), u.fresh()
            name = "k1" if isinstance(e, Kappa1) else "k2"
            u.unify(cod, Coproduct(a, b), f"{name} (codomain must be a coproduct)")
            u.unify(dom, a if isinstance(e, Kappa1) else b, name)
        elif isinstance(e, Delta1):
            t, a, b = u.fresh(), u.fresh(), u.fresh()
            u.unify(dom, Product(t, Coproduct(a, b)), "d1 (domain must be T * (U + V))")
            u.unify(cod, Coproduct(Product(t, a), Product(t, b)), "d1")
        else:
            raise TypeCheckError(f"not a combinational expression: {e!r}")
        return _Pending(e, dom, cod)

    def finish(self, p: _Pending) -> Typed:
        r = self.u.resolve
        return Typed(p.expr, r(p.dom), r(p.cod), tuple(self.finish(c) for c in p.children))


def annotate(ctx: SymbolTable, e, domain, codomain=None) -> Typed:
    """Type ``e`` at ``domain`` (and ``codomain`` if given); annotate every node."""
    checker = CombChecker(ctx)
    cod = checker.u.fresh() if codomain is None else codomain
    return checker.finish(checker.gen(e, domain, cod))


def infer(ctx: SymbolTable, e, domain_hint, codomain=None) -> CombType:
    t = annotate(ctx, e, domain_hint, codomain)
    return CombType(t.dom, t.cod)


# -- evaluation ----------------------------------------------------------------


def evaluate(interp, e, v):
    """Evaluate ``e`` on ``v``; ``interp.apply(name, value)`` runs opaque calls.

    Pairs evaluate their right component first, which is the order in which
    elaborated automata perform the two computations.
    """
    if isinstance(e, Fn):
        return interp.apply(e.name, v)
    if isinstance(e, Compose):
        return evaluate(interp, e.after, evaluate(interp, e.before, v))
    if isinstance(e, Pair):
        right = evaluate(interp, e.right, v)
        left = evaluate(interp, e.left, v)
        return PairVal(left, right)
    if isinstance(e, Case):
        if isinstance(v, InL):
            return evaluate(interp, e.left, v.value)
        if isinstance(v, InR):
            return evaluate(interp, e.right, v.value)
        raise EvaluationError(f"case applied to non-coproduct value {v}")
    if isinstance(e, Identity):
        return v
    if isinstance(e, Theta):
        return UNIT
    if isinstance(e, (Pi1, Pi2)):
        if not isinstance(v, PairVal):
            raise EvaluationError(f"projection applied to non-pair value {v}")
        return v.left if isinstance(e, Pi1) else v.right
    if isinstance(e, Kappa1):
        return InL(v)
    if isinstance(e, Kappa2):
        return InR(v)
    if isinstance(e, Delta1):
        if not isinstance(v, PairVal) or not isinstance(v.right, (InL, InR)):
            raise EvaluationError(f"d1 applied to {v}")
        inner = PairVal(v.left, v.right.value)
        return InL(inner) if isinstance(v.right, InL) else InR(inner)
    raise EvaluationError(f"not a combinational expression: {e!r}")


# -- printing ------------------------------------------------------------------

_ATOMS_ASCII = {Identity: "id", Theta: "theta", Pi1: "pi1", Pi2: "pi2",
                Kappa1: "k1", Kappa2: "k2", Delta1: "d1"}
_ATOMS_UNICODE = {Identity: "id", Theta: "θ", Pi1: "π1", Pi2: "π2",
                  Kappa1: "κ1", Kappa2: "κ2", Delta1: "δ1"}


def format_comb(e, unicode: bool = False, prec: int = 0) -> str:
    """Render an expression; composition is right-associative and loosest."""
    if isinstance(e, Fn):
        return e.name
    if isinstance(e, Compose):
        dot = " ∘ " if unicode else " . "
        body = format_comb(e.after, unicode, 1) + dot + format_comb(e.before, unicode, 0)
        return f"({body})" if prec > 0 else body
    if isinstance(e, Pair):
        lo, hi = ("⟨", "⟩") if unicode else ("<", ">")
        return f"{lo}{format_comb(e.left, unicode)}, {format_comb(e.right, unicode)}{hi}"
    if isinstance(e, Case):
        return f"[{format_comb(e.left, unicode)}, {format_comb(e.right, unicode)}]"
    return (_ATOMS_UNICODE if unicode else _ATOMS_ASCII)[type(e)]
