"""Concrete values inhabiting composite types, and the bijection between a
value and its (variant index, opaque components) decomposition."""

from __future__ import annotations

import itertools
import json
import re
from dataclasses import dataclass
from typing import Hashable, Mapping, Sequence

from .errors import EvaluationError
from .typesys import (
    CompositeType,
    Coproduct,
    One,
    Opaque,
    Product,
    variant_count,
)


@dataclass(frozen=True)
class OpaqueVal:
    type: str
    payload: Hashable

    def __str__(self):
        return format_payload(self.payload)


@dataclass(frozen=True)
class Unit:
    def __str__(self):
        return "*"


UNIT = Unit()


@dataclass(frozen=True)
class PairVal:
    left: "ConcreteValue"
    right: "ConcreteValue"

    def __str__(self):
        return f"({self.left}, {self.right})"


@dataclass(frozen=True)
class InL:
    value: "ConcreteValue"

    def __str__(self):
        return f"inl({self.value})"


@dataclass(frozen=True)
class InR:
    value: "ConcreteValue"

    def __str__(self):
        return f"inr({self.value})"


ConcreteValue = OpaqueVal | Unit | PairVal | InL | InR

_BARE = re.compile(r"[A-Za-z][A-Za-z0-9']*\Z")


def format_payload(p) -> str:
    if isinstance(p, str) and _BARE.match(p) and p not in ("inl", "inr"):
        return p
    return json.dumps(p)


def has_type(v, t: CompositeType) -> bool:
    if isinstance(t, Opaque):
        return isinstance(v, OpaqueVal) and v.type == t.name
    if isinstance(t, One):
        return isinstance(v, Unit)
    if isinstance(t, Product):
        return isinstance(v, PairVal) and has_type(v.left, t.left) and has_type(v.right, t.right)
    if isinstance(t, Coproduct):
        if isinstance(v, InL):
            return has_type(v.value, t.left)
        return isinstance(v, InR) and has_type(v.value, t.right)
    return False


def flatten(v, t: CompositeType) -> tuple[int, tuple[OpaqueVal, ...]]:
    """Decompose ``v : t`` into its variant index and component values."""
    if isinstance(t, Opaque):
        if not (isinstance(v, OpaqueVal) and v.type == t.name):
            raise EvaluationError(f"{v} is not a value of {t}")
        return 0, (v,)
    if isinstance(t, One):
        if not isinstance(v, Unit):
            raise EvaluationError(f"{v} is not a value of 1")
        return 0, ()
    if isinstance(t, Product):
        if not isinstance(v, PairVal):
            raise EvaluationError(f"{v} is not a value of {t}")
        i, a = flatten(v.left, t.left)
        j, b = flatten(v.right, t.right)
        return i * variant_count(t.right) + j, a + b
    if isinstance(t, Coproduct):
        if isinstance(v, InL):
            return flatten(v.value, t.left)
        if isinstance(v, InR):
            j, comps = flatten(v.value, t.right)
            return variant_count(t.left) + j, comps
        raise EvaluationError(f"{v} is not a value of {t}")
    raise EvaluationError(f"not a composite type: {t!r}")


def unflatten(t: CompositeType, index: int, components: Sequence[OpaqueVal]):
    """Inverse of :func:`flatten`."""
    value, rest = _unflatten(t, index, tuple(components))
    if rest:
        raise EvaluationError(f"{len(rest)} surplus components for variant {index} of {t}")
    return value


def _unflatten(t, index, comps):
    if isinstance(t, Opaque):
        if not comps:
            raise EvaluationError(f"missing component of type {t}")
        return comps[0], comps[1:]
    if isinstance(t, One):
        return UNIT, comps
    if isinstance(t, Product):
        n = variant_count(t.right)
        left, comps = _unflatten(t.left, index // n, comps)
        right, comps = _unflatten(t.right, index % n, comps)
        return PairVal(left, right), comps
    if isinstance(t, Coproduct):
        n = variant_count(t.left)
        if index < n:
            inner, comps = _unflatten(t.left, index, comps)
            return InL(inner), comps
        inner, comps = _unflatten(t.right, index - n, comps)
        return InR(inner), comps
    raise EvaluationError(f"not a composite type: {t!r}")


def enumerate_values(t: CompositeType, domains: Mapping[str, Sequence[Hashable]]) -> list:
    """All values of ``t`` given a finite payload domain per opaque type."""
    if isinstance(t, Opaque):
        return [OpaqueVal(t.name, p) for p in domains[t.name]]
    if isinstance(t, One):
        return [UNIT]
    if isinstance(t, Product):
        return [
            PairVal(a, b)
            for a, b in itertools.product(
                enumerate_values(t.left, domains), enumerate_values(t.right, domains)
            )
        ]
    if isinstance(t, Coproduct):
        return [InL(a) for a in enumerate_values(t.left, domains)] + [
            InR(b) for b in enumerate_values(t.right, domains)
        ]
    raise EvaluationError(f"not a composite type: {t!r}")


def canonical(v) -> str:
    """Stable text encoding, suitable for hashing across processes."""
    if isinstance(v, OpaqueVal):
        return f"{v.type}:{json.dumps(v.payload, sort_keys=True)}"
    return str(v) if isinstance(v, Unit) else type(v).__name__ + "(" + ",".join(
        canonical(x) for x in ((v.left, v.right) if isinstance(v, PairVal) else (v.value,))
    ) + ")"


def to_json(v):
    """JSON-friendly encoding of a value (used by trace export)."""
    if isinstance(v, OpaqueVal):
        return v.payload
    if isinstance(v, Unit):
        return "*"
    if isinstance(v, PairVal):
        return [to_json(v.left), to_json(v.right)]
    if isinstance(v, InL):
        return {"inl": to_json(v.value)}
    return {"inr": to_json(v.value)}
