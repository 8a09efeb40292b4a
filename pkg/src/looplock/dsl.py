"""A small text language for declaring opaque types, functions, shapes,
combinational definitions and systems, plus a printer that inverts it.

    -- line comment
    type MSG;
    fn send : WORLD * MSG -> WORLD;
    shape Port = Id^MSG x Id_(MSG + 1);
    def step = [send, pi1] . d1;
    sys S : Id = lift(id)(mu(lift(step . recv) . omega));

Definitions are inlined and derived combinators expanded while parsing, so the
resulting expressions only contain primitives.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

from .combinational import (
    D1,
    ID,
    K1,
    K2,
    PI1,
    PI2,
    THETA,
    Case,
    CombChecker,
    Compose,
    Fn,
    Pair,
    desugar,
    format_comb,
)
from .errors import DslSyntaxError, LooplockError, ResolutionError
from .shapes import ID as ID_SHAPE, Coprod, Input, Output, Prod, format_shape
from .systems import (
    Alpha,
    LiftBeta,
    LiftOmega,
    LiftOplus,
    LiftTensor,
    SystemExpr,
    TypedSystem,
    check_system,
    format_loop,
)
from .typesys import (
    ONE,
    Coproduct,
    FunctionSignature,
    Opaque,
    Product,
    SymbolTable,
    format_type,
)
from .values import UNIT, InL, InR, OpaqueVal, PairVal

# -- lexing --------------------------------------------------------------------

_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r]+|--[^\n]*)
  | (?P<nl>\n)
  | (?P<ident>[A-Za-z][A-Za-z0-9']*)
  | (?P<int>-?[0-9]+)
  | (?P<string>"(?:[^"\\\n]|\\.)*")
  | (?P<sym>->|\*\*|\+\+|[()<>\[\],.;:=*+^_×])
  | (?P<uni>π[12]|κ[12]|δ[12]|σ[πκ]|[θμωαβ∘⟨⟩⌈⌉⊗⊕→⟶])
""", re.VERBOSE)

# the printer's mathematical notation, spelled as the ASCII tokens it abbreviates
_UNICODE = {
    "θ": [("ident", "theta")], "π1": [("ident", "pi1")], "π2": [("ident", "pi2")],
    "κ1": [("ident", "k1")], "κ2": [("ident", "k2")], "δ1": [("ident", "d1")],
    "δ2": [("ident", "d2")], "σπ": [("ident", "swapP")], "σκ": [("ident", "swapC")],
    "μ": [("ident", "mu")], "ω": [("ident", "omega")], "α": [("ident", "alpha")],
    "β": [("ident", "beta")], "∘": [("sym", ".")], "⟨": [("sym", "<")], "⟩": [("sym", ">")],
    "⌈": [("ident", "lift"), ("sym", "(")], "⌉": [("sym", ")")],
    "⊗": [("sym", "("), ("ident", "x"), ("sym", ")")],
    "⊕": [("sym", "("), ("ident", "o"), ("sym", ")")],
    "→": [("sym", "->")], "⟶": [("sym", "->")],
}


@dataclass(frozen=True)
class Token:
    kind: str  # ident, int, string, sym, eof
    text: str
    line: int
    column: int


def tokenize(text: str) -> list[Token]:
    tokens, pos, line, start = [], 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise DslSyntaxError(f"unexpected character {text[pos]!r}", line, pos - start + 1)
        kind = m.lastgroup
        if kind == "nl":
            line, start = line + 1, m.end()
        elif kind == "uni":
            tokens.extend(Token(k, t, line, pos - start + 1) for k, t in _UNICODE[m.group()])
        elif kind != "ws":
            tokens.append(Token(kind, m.group(), line, pos - start + 1))
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - start + 1))
    return tokens


KEYWORDS = {"type", "fn", "shape", "def", "sys", "lift", "mu", "omega", "alpha", "beta", "Id",
            "id", "theta", "pi1", "pi2", "k1", "k2", "d1", "swapP", "swapC", "d2", "inl", "inr"}

_ATOMS = {"id": ID, "theta": THETA, "pi1": PI1, "pi2": PI2, "k1": K1, "k2": K2, "d1": D1}
_DERIVED_ATOMS = ("swapP", "swapC", "d2")


# -- declarations --------------------------------------------------------------


@dataclass
class SpecFile:
    """Parsed declarations, in source order."""

    table: SymbolTable = field(default_factory=SymbolTable)
    shapes: dict = field(default_factory=dict)
    defs: dict = field(default_factory=dict)
    systems: dict = field(default_factory=dict)
    order: list = field(default_factory=list)  # (kind, name)

    def system(self, name: str) -> SystemExpr:
        try:
            return self.systems[name]
        except KeyError:
            raise ResolutionError(f"no system named {name!r}") from None

    def check(self) -> dict[str, TypedSystem]:
        """Typecheck every definition and system; returns the typed systems."""
        for name, e in self.defs.items():
            checker = CombChecker(self.table)
            try:
                checker.gen(e, checker.u.fresh(), checker.u.fresh())
            except LooplockError as exc:
                raise type(exc)(f"def {name}: {exc}") from None
        typed = {}
        for name, s in self.systems.items():
            try:
                typed[name] = check_system(self.table, s)
            except LooplockError as exc:
                raise type(exc)(f"sys {name}: {exc}") from None
        return typed

    def __eq__(self, other):
        if not isinstance(other, SpecFile):
            return NotImplemented
        return (self.table, self.shapes, self.defs, self.systems, self.order) == (
            other.table, other.shapes, other.defs, other.systems, other.order)


class Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.i = 0
        self.types: list[str] = []
        self.functions: list[FunctionSignature] = []
        self.spec = SpecFile()
        self.strict_types = False

    # token helpers

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def at(self, text: str, k: int = 0) -> bool:
        t = self.peek(k)
        return t.kind in ("sym", "ident") and t.text == text

    def next(self) -> Token:
        t = self.tok
        self.i += 1
        return t

    def error(self, msg: str, tok: Token | None = None, cls=DslSyntaxError):
        tok = tok or self.tok
        return cls(msg, tok.line, tok.column)

    def expect(self, text: str) -> Token:
        if not self.at(text):
            found = self.tok.text or "end of input"
            raise self.error(f"expected {text!r}, found {found!r}")
        return self.next()

    def ident(self, what: str = "a name") -> Token:
        if self.tok.kind != "ident":
            raise self.error(f"expected {what}, found {self.tok.text or 'end of input'!r}")
        return self.next()

    def name(self, what: str) -> Token:
        t = self.ident(what)
        if t.text in KEYWORDS:
            raise self.error(f"{t.text!r} is reserved", t)
        return t

    def at_op(self, inner: str) -> bool:
        return self.at("(") and self.at(inner, 1) and self.at(")", 2)

    def end(self):
        if self.tok.kind != "eof":
            raise self.error(f"unexpected {self.tok.text!r}")

    # file

    def parse_file(self) -> SpecFile:
        self.strict_types = True
        while self.tok.kind != "eof":
            self.declaration()
        return self.spec

    def _declare(self, kind, tok):
        taken = ({n for _, n in self.spec.order})
        if tok.text in taken:
            raise self.error(f"duplicate declaration of {tok.text!r}", tok, ResolutionError)
        if kind == "shape" and tok.text == "x":
            raise self.error("'x' cannot name a shape", tok, ResolutionError)
        self.spec.order.append((kind, tok.text))

    def _table(self):
        self.spec.table = SymbolTable.of(self.types, self.functions)

    def declaration(self):
        kw = self.ident("a declaration")
        if kw.text == "type":
            t = self.name("a type name")
            self._declare("type", t)
            self.types.append(t.text)
            self._table()
        elif kw.text == "fn":
            t = self.name("a function name")
            self.expect(":")
            dom = self.type_()
            self.expect("->")
            cod = self.type_()
            self._declare("fn", t)
            self.functions.append(FunctionSignature(t.text, dom, cod))
            self._table()
        elif kw.text == "shape":
            t = self.name("a shape name")
            self.expect("=")
            shape = self.shape()
            self._declare("shape", t)
            self.spec.shapes[t.text] = shape
        elif kw.text == "def":
            t = self.name("a definition name")
            self.expect("=")
            e = self.comb()
            self._declare("def", t)
            self.spec.defs[t.text] = e
        elif kw.text == "sys":
            t = self.name("a system name")
            shape = ID_SHAPE
            if self.at(":"):
                self.next()
                shape = self.shape()
            self.expect("=")
            s = self.system(shape)
            self._declare("sys", t)
            self.spec.systems[t.text] = s
        else:
            raise self.error(f"unknown declaration {kw.text!r}", kw)
        self.expect(";")

    # types: + looser than *, both left-associative

    def type_(self):
        t = self.type_prod()
        while self.at("+"):
            self.next()
            t = Coproduct(t, self.type_prod())
        return t

    def type_prod(self):
        t = self.type_atom()
        while self.at("*") or self.at("×"):
            self.next()
            t = Product(t, self.type_atom())
        return t

    def type_atom(self):
        tok = self.tok
        if tok.kind == "int" and tok.text == "1":
            self.next()
            return ONE
        if self.at("("):
            self.next()
            t = self.type_()
            self.expect(")")
            return t
        if tok.kind == "ident" and tok.text not in KEYWORDS:
            self.next()
            if self.strict_types and tok.text not in self.types:
                raise self.error(f"undeclared type {tok.text!r}", tok, ResolutionError)
            return Opaque(tok.text)
        raise self.error(f"expected a type, found {tok.text or 'end of input'!r}")

    # shapes: ports bind tightest, then x, then (+)

    def shape(self):
        f = self.shape_prod()
        while self.at_op("+") or self.at("+"):
            self.i += 3 if self.at("(") else 1
            f = Coprod(f, self.shape_prod())
        return f

    def shape_prod(self):
        f = self.shape_port()
        while (self.at("x") and self.tok.kind == "ident") or self.at("×"):
            self.next()
            f = Prod(f, self.shape_port())
        return f

    def shape_port(self):
        f = self.shape_atom()
        while self.at("^") or self.at("_"):
            mark = self.next().text
            port = self.type_atom()
            f = Input(f, port) if mark == "^" else Output(f, port)
        return f

    def shape_atom(self):
        tok = self.tok
        if self.at("Id"):
            self.next()
            return ID_SHAPE
        if self.at("("):
            self.next()
            f = self.shape()
            self.expect(")")
            return f
        if tok.kind == "ident" and tok.text in self.spec.shapes:
            self.next()
            return self.spec.shapes[tok.text]
        if tok.kind == "ident":
            raise self.error(f"unknown shape {tok.text!r}", tok, ResolutionError)
        raise self.error(f"expected a shape, found {tok.text or 'end of input'!r}")

    # combinational expressions: . (right-assoc) < ++ < ** < atoms

    def comb(self):
        e = self.comb_plus()
        if self.at("."):
            self.next()
            return Compose(e, self.comb())
        return e

    def comb_plus(self):
        e = self.comb_times()
        while self.at("++"):
            self.next()
            e = desugar("plus", e, self.comb_times())
        return e

    def comb_times(self):
        e = self.comb_atom()
        while self.at("**"):
            self.next()
            e = desugar("times", e, self.comb_atom())
        return e

    def comb_atom(self):
        tok = self.tok
        if tok.kind == "ident":
            self.next()
            if tok.text in _ATOMS:
                return _ATOMS[tok.text]
            if tok.text in _DERIVED_ATOMS:
                return desugar(tok.text)
            if tok.text in self.spec.defs:
                return self.spec.defs[tok.text]
            if tok.text in KEYWORDS:
                raise self.error(f"{tok.text!r} is not a combinational expression", tok)
            if self.strict_types and not self.spec.table.has_function(tok.text):
                raise self.error(f"unknown function or definition {tok.text!r}", tok, ResolutionError)
            return Fn(tok.text)
        if self.at("<") or self.at("["):
            close = ">" if self.next().text == "<" else "]"
            left = self.comb()
            self.expect(",")
            right = self.comb()
            self.expect(close)
            return Pair(left, right) if close == ">" else Case(left, right)
        if self.at("("):
            self.next()
            e = self.comb()
            self.expect(")")
            return e
        raise self.error(f"expected a combinational expression, found {tok.text or 'end of input'!r}")

    # systems

    def system(self, shape) -> SystemExpr:
        init = ID
        if self.at("lift"):
            self.next()
            self.expect("(")
            init = self.comb()
            self.expect(")")
            self.expect("(")
            loop = self.mu()
            self.expect(")")
        else:
            loop = self.mu()
        return SystemExpr(init, loop, shape)

    def mu(self):
        self.expect("mu")
        self.expect("(")
        items = self.loop_group()
        self.expect(")")
        return self.build_loop(items)

    def loop_group(self) -> list:
        """A chain, or two chains joined by (x) or (o)."""
        tok = self.tok
        left = self.loop_items()
        for op, kind in (("x", "tensor"), ("o", "oplus")):
            if self.at_op(op):
                self.i += 3
                right = self.loop_items()
                return [(kind, (self.build_loop(left), self.build_loop(right)), tok)]
        return left

    def loop_items(self) -> list:
        items = [self.loop_item()]
        while self.at("."):
            self.next()
            items.append(self.loop_item())
        return [x for item in items for x in (item if isinstance(item, list) else [item])]

    def loop_item(self):
        tok = self.tok
        if self.at("lift"):
            self.next()
            self.expect("(")
            f = self.comb()
            self.expect(")")
            return ("lift", f, tok)
        for word in ("omega", "alpha", "beta"):
            if self.at(word):
                self.next()
                return (word, None, tok)
        if self.at("("):
            self.next()
            items = self.loop_group()
            self.expect(")")
            return items  # a parenthesized chain is spliced in place
        raise self.error(f"expected a loop expression, found {tok.text or 'end of input'!r}")

    def build_loop(self, items):
        f = ID
        i = 0
        # lifting is contravariant: lift(f) . lift(g) = lift(g . f)
        while i < len(items) and items[i][0] == "lift":
            f = f if items[i][1] == ID else (items[i][1] if f == ID else Compose(items[i][1], f))
            i += 1
        if i == len(items):
            raise self.error("loop must end in omega or a (x)/(o) group", items[-1][2])
        kind, payload, tok = items[i]
        rest = items[i + 1:]
        if kind in ("omega", "tensor", "oplus") and rest:
            raise self.error(f"nothing may follow {kind} in a loop", rest[0][2])
        if kind == "omega":
            return LiftOmega(f)
        if kind == "alpha":
            if f != ID:
                raise self.error("lift(...) cannot be applied directly before alpha", tok)
            return Alpha(self.build_loop(rest))
        if kind == "beta":
            return LiftBeta(f, self.build_loop(rest))
        left, right = payload
        return (LiftTensor if kind == "tensor" else LiftOplus)(f, left, right)


def parse(text: str) -> SpecFile:
    return Parser(text).parse_file()


def parse_file(path) -> SpecFile:
    with open(path, encoding="utf-8") as fh:
        return parse(fh.read())


def _standalone(text, method, *args):
    p = Parser(text)
    out = getattr(p, method)(*args)
    p.end()
    return out


def parse_type(text: str):
    return _standalone(text, "type_")


def parse_shape(text: str):
    return _standalone(text, "shape")


def parse_comb(text: str, spec: SpecFile | None = None):
    p = Parser(text)
    if spec is not None:
        p.spec = spec
        p.strict_types = True
    e = p.comb()
    p.end()
    return e


def parse_system(text: str, shape=ID_SHAPE, spec: SpecFile | None = None) -> SystemExpr:
    p = Parser(text)
    if spec is not None:
        p.spec = spec
        p.strict_types = True
    s = p.system(shape)
    p.end()
    return s


def parse_signature(text: str) -> FunctionSignature:
    p = Parser(text)
    if p.at("fn"):
        p.next()
    name = p.name("a function name").text
    p.expect(":")
    dom = p.type_()
    p.expect("->")
    cod = p.type_()
    p.end()
    return FunctionSignature(name, dom, cod)


def format_signature(f: FunctionSignature) -> str:
    return f"{f.name} : {format_type(f.domain)} -> {format_type(f.codomain)}"


# -- values --------------------------------------------------------------------


def parse_value(src, t):
    """Read a value of type ``t`` from literal text (``*``, ``(a, b)``,
    ``inl(v)``, ``inr(v)``, payloads as integers, names or JSON strings) or
    from the JSON encoding produced by :func:`looplock.values.to_json`."""
    if isinstance(src, str):
        p = Parser(src)
        v = _value(p, t)
        p.end()
        return v
    return _from_json(src, t)


def _value(p: Parser, t):
    tok = p.tok
    if isinstance(t, Opaque):
        if tok.kind == "int":
            p.next()
            return OpaqueVal(t.name, int(tok.text))
        if tok.kind == "string":
            p.next()
            return OpaqueVal(t.name, json.loads(tok.text))
        if tok.kind == "ident" and tok.text not in ("inl", "inr"):
            p.next()
            return OpaqueVal(t.name, tok.text)
        raise p.error(f"expected a payload of {t.name}")
    if t == ONE:
        p.expect("*")
        return UNIT
    if isinstance(t, Product):
        p.expect("(")
        a = _value(p, t.left)
        p.expect(",")
        b = _value(p, t.right)
        p.expect(")")
        return PairVal(a, b)
    if isinstance(t, Coproduct):
        tag = p.ident("inl or inr").text
        if tag not in ("inl", "inr"):
            raise p.error(f"expected inl or inr, found {tag!r}")
        p.expect("(")
        v = _value(p, t.left if tag == "inl" else t.right)
        p.expect(")")
        return InL(v) if tag == "inl" else InR(v)
    raise p.error(f"cannot read values of {t!r}")


def _from_json(obj, t):
    if isinstance(t, Opaque):
        return OpaqueVal(t.name, obj)
    if t == ONE:
        if obj != "*":
            raise DslSyntaxError(f"expected '*', got {obj!r}")
        return UNIT
    if isinstance(t, Product) and isinstance(obj, list) and len(obj) == 2:
        return PairVal(_from_json(obj[0], t.left), _from_json(obj[1], t.right))
    if isinstance(t, Coproduct) and isinstance(obj, dict) and len(obj) == 1:
        (tag, inner), = obj.items()
        if tag == "inl":
            return InL(_from_json(inner, t.left))
        if tag == "inr":
            return InR(_from_json(inner, t.right))
    raise DslSyntaxError(f"{obj!r} is not a value of {format_type(t)}")


def format_value(v) -> str:
    return str(v)


# -- printing ------------------------------------------------------------------


def format_system_decl(name: str, s: SystemExpr, unicode: bool = False) -> str:
    shape = format_shape(s.shape, unicode=unicode)
    if unicode:
        body = f"⌈{format_comb(s.init, True)}⌉(μ({format_loop(s.loop, True)}))"
    else:
        body = f"lift({format_comb(s.init)})(mu({format_loop(s.loop)}))"
    return f"sys {name} : {shape} = {body};"


def format_spec(spec: SpecFile, unicode: bool = False) -> str:
    """Print declarations in source order; parsing the result gives ``spec`` back."""
    lines = []
    sigs = {f.name: f for f in spec.table.functions}
    for kind, name in spec.order:
        if kind == "type":
            lines.append(f"type {name};")
        elif kind == "fn":
            lines.append(f"fn {format_signature(sigs[name])};")
        elif kind == "shape":
            lines.append(f"shape {name} = {format_shape(spec.shapes[name], unicode=unicode)};")
        elif kind == "def":
            lines.append(f"def {name} = {format_comb(spec.defs[name], unicode)};")
        else:
            lines.append(format_system_decl(name, spec.systems[name], unicode))
    return "\n".join(lines) + ("\n" if lines else "")
