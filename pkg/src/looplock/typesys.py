"""Composite types over opaque atoms, their sum-of-products form, and the
symbol table of opaque types and functions."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Iterable, Union

from .errors import UnknownSymbol, TypeCheckError


class _TypeSyntax:
    """Operator sugar: ``A * B`` is a product, ``A + B`` a coproduct."""

    def __mul__(self, other):
        return Product(self, other)

    def __add__(self, other):
        return Coproduct(self, other)


@dataclass(frozen=True)
class Opaque(_TypeSyntax):
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class One(_TypeSyntax):
    def __str__(self):
        return "1"


@dataclass(frozen=True)
class Product(_TypeSyntax):
    left: "CompositeType"
    right: "CompositeType"

    def __hash__(self):
        # types are hashed constantly by the variant caches; memoize
        try:
            return self.__dict__["_hash"]
        except KeyError:
            h = hash((type(self).__name__, self.left, self.right))
            object.__setattr__(self, "_hash", h)
            return h

    def __str__(self):
        return format_type(self)


@dataclass(frozen=True)
class Coproduct(_TypeSyntax):
    left: "CompositeType"
    right: "CompositeType"

    def __hash__(self):
        # types are hashed constantly by the variant caches; memoize
        try:
            return self.__dict__["_hash"]
        except KeyError:
            h = hash((type(self).__name__, self.left, self.right))
            object.__setattr__(self, "_hash", h)
            return h

    def __str__(self):
        return format_type(self)


CompositeType = Union[Opaque, One, Product, Coproduct]
ONE = One()

_PREC = {Coproduct: 1, Product: 2}


def format_type(t, prec: int = 0, unicode: bool = False) -> str:
    """Render a type; ``+`` binds looser than ``*`` and both associate left."""
    if isinstance(t, (Product, Coproduct)):
        p = _PREC[type(t)]
        op = ("×" if unicode else "*") if isinstance(t, Product) else "+"
        body = f"{format_type(t.left, p, unicode)} {op} {format_type(t.right, p + 1, unicode)}"
        return f"({body})" if p < prec else body
    return str(t)


@dataclass(frozen=True)
class Variant:
    """One product term of a type's sum-of-products form.

    Variants are identified by ``index``; two variants with equal component
    lists are still distinct.
    """

    index: int
    components: tuple[str, ...]


@lru_cache(maxsize=None)
def _variant_lists(t) -> tuple[tuple[str, ...], ...]:
    if isinstance(t, Opaque):
        return ((t.name,),)
    if isinstance(t, One):
        return ((),)
    if isinstance(t, Coproduct):
        return _variant_lists(t.left) + _variant_lists(t.right)
    if isinstance(t, Product):
        return tuple(a + b for a in _variant_lists(t.left) for b in _variant_lists(t.right))
    raise TypeCheckError(f"not a composite type: {t!r}")


def variants(t: CompositeType) -> tuple[Variant, ...]:
    """Variants of ``t`` in canonical order.

    Coproducts list the left operand's variants before the right's; products
    enumerate pairs with the left factor major, concatenating the left
    factor's components before the right's.
    """
    return tuple(Variant(i, comps) for i, comps in enumerate(_variant_lists(t)))


def typ(t: CompositeType, index: int) -> tuple[str, ...]:
    return _variant_lists(t)[index]


def variant_count(t: CompositeType) -> int:
    return len(_variant_lists(t))


def product_index(t: CompositeType, u: CompositeType, i: int, j: int) -> int:
    """Index in ``var(t × u)`` of the pair (variant i of t, variant j of u)."""
    return i * variant_count(u) + j


@dataclass(frozen=True)
class VariantCounts:
    left: int
    right: int
    product: int
    coproduct: int


def variant_count_product(t: CompositeType, u: CompositeType) -> VariantCounts:
    return VariantCounts(
        left=variant_count(t),
        right=variant_count(u),
        product=variant_count(Product(t, u)),
        coproduct=variant_count(Coproduct(t, u)),
    )


def opaque_names(t: CompositeType) -> set[str]:
    if isinstance(t, Opaque):
        return {t.name}
    if isinstance(t, (Product, Coproduct)):
        return opaque_names(t.left) | opaque_names(t.right)
    return set()


@dataclass(frozen=True)
class FunctionSignature:
    name: str
    domain: CompositeType
    codomain: CompositeType

    def __str__(self):
        return f"{self.name} : {self.domain} -> {self.codomain}"


@dataclass(frozen=True)
class SymbolTable:
    """Declared opaque types and opaque function signatures."""

    types: tuple[str, ...] = ()
    functions: tuple[FunctionSignature, ...] = field(default=())

    def __post_init__(self):
        if len(set(self.types)) != len(self.types):
            raise UnknownSymbol(f"duplicate opaque type in {self.types}")
        names = [f.name for f in self.functions]
        if len(set(names)) != len(names):
            raise UnknownSymbol(f"duplicate opaque function in {names}")
        declared = set(self.types)
        for sig in self.functions:
            missing = (opaque_names(sig.domain) | opaque_names(sig.codomain)) - declared
            if missing:
                raise UnknownSymbol(f"{sig.name} uses undeclared types {sorted(missing)}")

    @classmethod
    def of(cls, types: Iterable[str] = (), functions: Iterable[FunctionSignature] = ()):
        return cls(tuple(types), tuple(functions))

    @cached_property
    def _by_name(self) -> dict[str, FunctionSignature]:
        return {f.name: f for f in self.functions}

    def signature(self, name: str) -> FunctionSignature:
        try:
            return self._by_name[name]
        except KeyError:
            raise UnknownSymbol(f"unknown opaque function {name!r}") from None

    def has_function(self, name: str) -> bool:
        return name in self._by_name

    def check_type(self, t: CompositeType) -> None:
        missing = opaque_names(t) - set(self.types)
        if missing:
            raise UnknownSymbol(f"undeclared opaque types {sorted(missing)}")
