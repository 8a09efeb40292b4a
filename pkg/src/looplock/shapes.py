"""Interface shapes: polynomial functors built from Id, products, coproducts
and typed input/output ports."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Union

from .typesys import CompositeType, Opaque, One, format_type


@dataclass(frozen=True)
class Id:
    def __str__(self):
        return "Id"


@dataclass(frozen=True)
class Prod:
    left: "Shape"
    right: "Shape"

    def __str__(self):
        return format_shape(self)


@dataclass(frozen=True)
class Coprod:
    left: "Shape"
    right: "Shape"

    def __str__(self):
        return format_shape(self)


@dataclass(frozen=True)
class Input:
    """``inner ^ port_type``: the system accepts a value of ``port_type``."""

    inner: "Shape"
    port_type: CompositeType

    def __str__(self):
        return format_shape(self)


@dataclass(frozen=True)
class Output:
    """``inner _ port_type``: the system produces a value of ``port_type``."""

    inner: "Shape"
    port_type: CompositeType

    def __str__(self):
        return format_shape(self)


Shape = Union[Id, Prod, Coprod, Input, Output]
ID = Id()


def _port(t, unicode):
    s = format_type(t, unicode=unicode)
    return s if isinstance(t, (Opaque, One)) else f"({s})"


def format_shape(f, prec: int = 0, unicode: bool = False) -> str:
    if isinstance(f, Id):
        return "Id"
    if isinstance(f, (Input, Output)):
        # nested ports are parenthesized: (Id^T)_T
        mark = "^" if isinstance(f, Input) else "_"
        body = f"{format_shape(f.inner, 4, unicode)}{mark}{_port(f.port_type, unicode)}"
        return f"({body})" if prec > 3 else body
    p = 2 if isinstance(f, Prod) else 1
    if unicode:
        op = "×" if isinstance(f, Prod) else "+"
    else:
        op = "x" if isinstance(f, Prod) else "(+)"
    body = f"{format_shape(f.left, p, unicode)} {op} {format_shape(f.right, p + 1, unicode)}"
    return f"({body})" if p < prec else body


def complement(f: Shape) -> Shape:
    """Swap every input for an output and every product for a coproduct."""
    if isinstance(f, Id):
        return f
    if isinstance(f, Prod):
        return Coprod(complement(f.left), complement(f.right))
    if isinstance(f, Coprod):
        return Prod(complement(f.left), complement(f.right))
    if isinstance(f, Input):
        return Output(complement(f.inner), f.port_type)
    if isinstance(f, Output):
        return Input(complement(f.inner), f.port_type)
    raise TypeError(f"not a shape: {f!r}")


@lru_cache(maxsize=4096)
def refines(f: Shape, g: Shape) -> bool:
    """Decide ``f ◁ g``.

    Every generating rule relates a shape to a strictly larger one, so it is
    enough to descend through the immediate sub-shapes of ``g``.
    """
    if f == g:
        return True
    if isinstance(g, (Prod, Coprod)):
        return refines(f, g.left) or refines(f, g.right)
    if isinstance(g, (Input, Output)):
        return refines(f, g.inner)
    return False


def sub_shapes(g: Shape):
    """Immediate operands of ``g`` under the generating rules."""
    if isinstance(g, (Prod, Coprod)):
        return (g.left, g.right)
    if isinstance(g, (Input, Output)):
        return (g.inner,)
    return ()
