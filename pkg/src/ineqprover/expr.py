"""Expression trees, the inequality DSL, its parser and printer.

A source file holds one or more blocks::

    # comment
    ineq EX1 "toy" {
      dom x0 in [0, 1];
      constraint x0 >= 0;
      goal x0*x0 - x0 - 0.1 < 0 \\/ x0 - 2 < 0;
    }

Variables are ``x0 .. x{n-1}`` where ``n`` is the number of ``dom`` lines.
Decimal constants keep their source text and an outward-rounded enclosure.
"""

from __future__ import annotations

import re
from decimal import Decimal
from dataclasses import dataclass, field
from typing import Iterator, Sequence

from . import interval as iv
from .interval import Box, Interval, PartialDomain

__all__ = [
    "Expr",
    "Const",
    "Var",
    "Pi",
    "Neg",
    "Add",
    "Sub",
    "Mul",
    "Div",
    "Pow",
    "Func",
    "Atn2",
    "InequalitySpec",
    "ParseError",
    "DslSyntaxError",
    "ArityError",
    "UnboundVariable",
    "DuplicateId",
    "parse",
    "to_source",
    "format_expr",
    "evaluate",
    "eval_point",
    "max_var_index",
    "UNARY_FUNCS",
]

UNARY_FUNCS = ("sqrt", "sin", "cos", "atn", "acs")


class Expr:
    """Base class of expression nodes; supports operator sugar."""

    __slots__ = ()

    def __add__(self, other):
        return Add(self, _lift(other))

    def __radd__(self, other):
        return Add(_lift(other), self)

    def __sub__(self, other):
        return Sub(self, _lift(other))

    def __rsub__(self, other):
        return Sub(_lift(other), self)

    def __mul__(self, other):
        return Mul(self, _lift(other))

    def __rmul__(self, other):
        return Mul(_lift(other), self)

    def __truediv__(self, other):
        return Div(self, _lift(other))

    def __rtruediv__(self, other):
        return Div(_lift(other), self)

    def __neg__(self):
        return Neg(self)

    def __pow__(self, n: int):
        return Pow(self, n)

    def __str__(self) -> str:
        return format_expr(self)


def _lift(x) -> Expr:
    if isinstance(x, Expr):
        return x
    if isinstance(x, bool) or not isinstance(x, (int, str)):
        raise TypeError(f"cannot use {x!r} as a constant; pass an int or decimal string")
    text = str(x)
    if text.startswith("-"):
        return Neg(Const(text[1:]))
    return Const(text)


@dataclass(frozen=True)
class Const(Expr):
    text: str
    value: Interval = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if not _NUMBER_RE.fullmatch(self.text):
            raise ValueError(f"not a decimal literal: {self.text!r}")
        if self.value is None:
            object.__setattr__(self, "value", iv.make(self.text, self.text))


@dataclass(frozen=True)
class Var(Expr):
    index: int

    def __post_init__(self):
        if self.index < 0:
            raise ValueError("variable index must be >= 0")


@dataclass(frozen=True)
class Pi(Expr):
    pass


@dataclass(frozen=True)
class Neg(Expr):
    arg: Expr


@dataclass(frozen=True)
class Add(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Sub(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Mul(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Div(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Pow(Expr):
    base: Expr
    exponent: int

    def __post_init__(self):
        if not isinstance(self.exponent, int) or self.exponent < 0:
            raise ValueError("Pow exponent must be a natural number")


@dataclass(frozen=True)
class Func(Expr):
    """One-argument builtin: sqrt, sin, cos, atn or acs."""

    name: str
    arg: Expr

    def __post_init__(self):
        if self.name not in UNARY_FUNCS:
            raise ValueError(f"unknown function {self.name!r}")


@dataclass(frozen=True)
class Atn2(Expr):
    """Angle of the point ``(x, y)``; ``x`` is the abscissa."""

    x: Expr
    y: Expr


def children(e: Expr) -> tuple[Expr, ...]:
    if isinstance(e, (Add, Sub, Mul, Div)):
        return (e.left, e.right)
    if isinstance(e, (Neg, Func)):
        return (e.arg,)
    if isinstance(e, Pow):
        return (e.base,)
    if isinstance(e, Atn2):
        return (e.x, e.y)
    return ()


def max_var_index(e: Expr) -> int:
    """Largest variable index used in ``e``, or -1."""
    stack = [e]
    best = -1
    while stack:
        node = stack.pop()
        if isinstance(node, Var):
            best = max(best, node.index)
        stack.extend(children(node))
    return best


# ---------------------------------------------------------------------------
# specs


def _exact(x: float) -> str:
    return format(Decimal(x), "f")


@dataclass(frozen=True)
class InequalitySpec:
    """``forall x in domain: OR_i (x in R_i and disjuncts[i](x) < 0)``.

    ``constraints`` are expressions ``g`` read as ``g(x) >= 0``; they refine
    every disjunct's partial domain.
    """

    id: str
    name: str
    domain: Box
    disjuncts: tuple[Expr, ...]
    constraints: tuple[Expr, ...] = ()
    domain_text: tuple[tuple[str, str], ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "domain", Box(self.domain))
        object.__setattr__(self, "disjuncts", tuple(self.disjuncts))
        object.__setattr__(self, "constraints", tuple(self.constraints))
        if not self.disjuncts:
            raise ValueError("a spec needs at least one disjunct")
        n = len(self.domain)
        for e in self.disjuncts + self.constraints:
            if max_var_index(e) >= n:
                raise UnboundVariable(
                    f"variable x{max_var_index(e)} out of range for dimension {n}"
                )
        if self.domain_text is None:
            text = tuple((_exact(c.lo), _exact(c.hi)) for c in self.domain)
            object.__setattr__(self, "domain_text", text)
        elif len(self.domain_text) != n:
            raise ValueError("domain_text length does not match the domain")

    @property
    def dimension(self) -> int:
        return len(self.domain)

    @property
    def k(self) -> int:
        return len(self.disjuncts)


# ---------------------------------------------------------------------------
# evaluation


def evaluate(e: Expr, box: Sequence[Interval]) -> Interval:
    """Natural interval extension of ``e`` over ``box``.

    Raises :class:`PartialDomain` when some sub-operation may leave its
    natural domain on the box.
    """
    if isinstance(e, Var):
        return box[e.index]
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Add):
        return iv.add(evaluate(e.left, box), evaluate(e.right, box))
    if isinstance(e, Sub):
        return iv.sub(evaluate(e.left, box), evaluate(e.right, box))
    if isinstance(e, Mul):
        if e.left == e.right:
            return iv.sqr(evaluate(e.left, box))
        return iv.mul(evaluate(e.left, box), evaluate(e.right, box))
    if isinstance(e, Div):
        return iv.div(evaluate(e.left, box), evaluate(e.right, box))
    if isinstance(e, Neg):
        return iv.neg(evaluate(e.arg, box))
    if isinstance(e, Pow):
        return iv.pow_nat(evaluate(e.base, box), e.exponent)
    if isinstance(e, Func):
        return _FUNC_IMPL[e.name](evaluate(e.arg, box))
    if isinstance(e, Atn2):
        return iv.atn2(evaluate(e.x, box), evaluate(e.y, box))
    if isinstance(e, Pi):
        return iv.pi_enclosure()
    raise TypeError(f"unknown expression node {e!r}")


_FUNC_IMPL = {
    "sqrt": iv.sqrt,
    "sin": iv.sin,
    "cos": iv.cos,
    "atn": iv.atn,
    "acs": iv.acs,
}


def eval_point(e: Expr, x: Sequence[float] | Box) -> Interval:
    """Thin-interval enclosure of ``e`` at a point."""
    if not isinstance(x, Box):
        x = Box.point(x)
    return evaluate(e, x)


# ---------------------------------------------------------------------------
# lexer

_NUMBER_RE = re.compile(r"(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?")

_TOKEN_SPEC = [
    ("WS", r"[ \t\r\n]+"),
    ("COMMENT", r"#[^\n]*"),
    ("NUMBER", _NUMBER_RE.pattern),
    ("STRING", r'"(?:[^"\\\n]|\\.)*"'),
    ("IDENT", r"[A-Za-z_][A-Za-z0-9_]*"),
    ("OR", r"\\/"),
    ("GE", r">="),
    ("OP", r"[-+*/^(),;\[\]{}<]"),
]
_TOKEN_RE = re.compile("|".join(f"(?P<{name}>{pat})" for name, pat in _TOKEN_SPEC))
_VAR_RE = re.compile(r"x(0|[1-9]\d*)")


class ParseError(ValueError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{line}:{column}: {message}")
        self.message = message
        self.line = line
        self.column = column


class DslSyntaxError(ParseError):
    pass


class ArityError(ParseError):
    pass


class UnboundVariable(ParseError):
    def __init__(self, message: str, line: int = 0, column: int = 0):
        super().__init__(message, line, column)


class DuplicateId(ParseError):
    pass


@dataclass(frozen=True)
class _Tok:
    kind: str
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Tok]:
    toks = []
    pos = 0
    line, line_start = 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise DslSyntaxError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        tok_text = m.group()
        if kind not in ("WS", "COMMENT"):
            toks.append(_Tok(kind, tok_text, line, pos - line_start + 1))
        newlines = tok_text.count("\n")
        if newlines:
            line += newlines
            line_start = pos + tok_text.rindex("\n") + 1
        pos = m.end()
    toks.append(_Tok("EOF", "", line, pos - line_start + 1))
    return toks


# ---------------------------------------------------------------------------
# parser


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0
        self.dimension = 0

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def error(self, msg: str, tok: _Tok | None = None, cls=DslSyntaxError):
        tok = tok or self.tok
        return cls(msg, tok.line, tok.col)

    def advance(self) -> _Tok:
        t = self.toks[self.i]
        self.i += 1
        return t

    def at(self, text: str) -> bool:
        t = self.tok
        return t.text == text and t.kind in ("IDENT", "OP", "OR", "GE")

    def expect(self, text: str) -> _Tok:
        if not self.at(text):
            shown = self.tok.text or "end of input"
            raise self.error(f"expected {text!r}, found {shown!r}")
        return self.advance()

    def expect_kind(self, kind: str, what: str) -> _Tok:
        if self.tok.kind != kind:
            shown = self.tok.text or "end of input"
            raise self.error(f"expected {what}, found {shown!r}")
        return self.advance()

    # file := ineq+
    def file(self) -> list[InequalitySpec]:
        specs = []
        seen: dict[str, _Tok] = {}
        while self.tok.kind != "EOF":
            start = self.tok
            spec = self.ineq()
            if spec.id in seen:
                raise self.error(f"duplicate inequality id {spec.id!r}", start, DuplicateId)
            seen[spec.id] = start
            specs.append(spec)
        if not specs:
            raise self.error("expected at least one 'ineq' block")
        return specs

    def ineq(self) -> InequalitySpec:
        self.expect("ineq")
        ident = self.expect_kind("IDENT", "an inequality id").text
        name = _unescape(self.expect_kind("STRING", "a quoted name").text)
        self.expect("{")
        doms: dict[int, tuple[_Tok, str, str]] = {}
        if not self.at("dom"):
            raise self.error("expected at least one 'dom' line")
        while self.at("dom"):
            tok, index, lo, hi = self.dom()
            if index in doms:
                raise self.error(f"duplicate domain for x{index}", tok)
            doms[index] = (tok, lo, hi)
        n = len(doms)
        for index, (tok, _, _) in doms.items():
            if index >= n:
                raise self.error(
                    f"domain variables must be x0..x{n - 1}; got x{index}", tok, UnboundVariable
                )
        self.dimension = n
        constraints = []
        while self.at("constraint"):
            self.advance()
            constraints.append(self.expr())
            self.expect(">=")
            self.zero()
            self.expect(";")
        if not self.at("goal"):
            raise self.error("expected 'constraint' or 'goal'")
        self.advance()
        disjuncts = [self.expr()]
        self.expect("<")
        self.zero()
        while self.tok.kind == "OR":
            self.advance()
            disjuncts.append(self.expr())
            self.expect("<")
            self.zero()
        self.expect(";")
        self.expect("}")
        texts = tuple((doms[i][1], doms[i][2]) for i in range(n))
        try:
            domain = Box(iv.make(lo, hi) for lo, hi in texts)
        except iv.InvalidEndpoints as exc:
            raise self.error(str(exc), doms[0][0]) from exc
        return InequalitySpec(ident, name, domain, tuple(disjuncts), tuple(constraints), texts)

    def dom(self):
        tok = self.expect("dom")
        var = self.expect_kind("IDENT", "a variable")
        m = _VAR_RE.fullmatch(var.text)
        if m is None:
            raise self.error(f"expected a variable x0, x1, ...; found {var.text!r}", var)
        self.expect("in")
        self.expect("[")
        lo = self.signed_number()
        self.expect(",")
        hi = self.signed_number()
        self.expect("]")
        self.expect(";")
        try:
            iv.make(lo, hi)
        except iv.InvalidEndpoints as exc:
            raise self.error(f"bad domain for {var.text}: {exc}", tok) from exc
        return tok, int(m.group(1)), lo, hi

    def signed_number(self) -> str:
        sign = ""
        if self.at("-"):
            self.advance()
            sign = "-"
        return sign + self.expect_kind("NUMBER", "a number").text

    def zero(self):
        t = self.expect_kind("NUMBER", "0")
        if not _is_zero_literal(t.text):
            raise self.error("right-hand side must be 0", t)

    # expr := term (('+'|'-') term)*
    def expr(self) -> Expr:
        e = self.term()
        while self.at("+") or self.at("-"):
            op = self.advance().text
            rhs = self.term()
            e = Add(e, rhs) if op == "+" else Sub(e, rhs)
        return e

    def term(self) -> Expr:
        e = self.unary()
        while self.at("*") or self.at("/"):
            op = self.advance().text
            rhs = self.unary()
            e = Mul(e, rhs) if op == "*" else Div(e, rhs)
        return e

    def unary(self) -> Expr:
        if self.at("-"):
            self.advance()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Expr:
        e = self.atom()
        while self.at("^"):
            self.advance()
            t = self.expect_kind("NUMBER", "a natural exponent")
            if not t.text.isdigit():
                raise self.error("exponent must be a natural number", t)
            e = Pow(e, int(t.text))
        return e

    def atom(self) -> Expr:
        t = self.tok
        if t.kind == "NUMBER":
            self.advance()
            return Const(t.text)
        if self.at("("):
            self.advance()
            e = self.expr()
            self.expect(")")
            return e
        if t.kind == "IDENT":
            self.advance()
            m = _VAR_RE.fullmatch(t.text)
            if m is not None:
                index = int(m.group(1))
                if index >= self.dimension:
                    raise self.error(
                        f"variable {t.text} out of range for dimension {self.dimension}",
                        t,
                        UnboundVariable,
                    )
                return Var(index)
            if t.text == "pi":
                return Pi()
            if t.text in UNARY_FUNCS or t.text == "atn2":
                args = self.call_args()
                want = 2 if t.text == "atn2" else 1
                if len(args) != want:
                    raise self.error(
                        f"{t.text} takes {want} argument(s), got {len(args)}", t, ArityError
                    )
                return Atn2(*args) if t.text == "atn2" else Func(t.text, args[0])
            raise self.error(f"unknown identifier {t.text!r}", t)
        shown = t.text or "end of input"
        raise self.error(f"unexpected {shown!r} in expression")

    def call_args(self) -> list[Expr]:
        self.expect("(")
        args = [self.expr()]
        while self.at(","):
            self.advance()
            args.append(self.expr())
        self.expect(")")
        return args


def _is_zero_literal(text: str) -> bool:
    return float(text) == 0.0


def _unescape(s: str) -> str:
    return re.sub(r"\\(.)", r"\1", s[1:-1])


def _escape(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def parse(text: str) -> list[InequalitySpec]:
    """Parse DSL source into specs, in file order."""
    return _Parser(text).file()


# ---------------------------------------------------------------------------
# printer

_LEVEL_ADD, _LEVEL_MUL, _LEVEL_NEG, _LEVEL_POW, _LEVEL_ATOM = 1, 2, 3, 4, 5


def _level(e: Expr) -> int:
    if isinstance(e, (Add, Sub)):
        return _LEVEL_ADD
    if isinstance(e, (Mul, Div)):
        return _LEVEL_MUL
    if isinstance(e, Neg):
        return _LEVEL_NEG
    if isinstance(e, Pow):
        return _LEVEL_POW
    return _LEVEL_ATOM


def _wrap(e: Expr, min_level: int) -> str:
    s = format_expr(e)
    return f"({s})" if _level(e) < min_level else s


_BIN_SYMBOL = {Add: "+", Sub: "-", Mul: "*", Div: "/"}


def format_expr(e: Expr) -> str:
    """Render ``e`` in DSL syntax with the minimal parentheses that round-trip."""
    if isinstance(e, Const):
        return e.text
    if isinstance(e, Var):
        return f"x{e.index}"
    if isinstance(e, Pi):
        return "pi"
    if isinstance(e, Neg):
        return "-" + _wrap(e.arg, _LEVEL_NEG)
    if isinstance(e, Pow):
        return f"{_wrap(e.base, _LEVEL_POW)}^{e.exponent}"
    if isinstance(e, Func):
        return f"{e.name}({format_expr(e.arg)})"
    if isinstance(e, Atn2):
        return f"atn2({format_expr(e.x)}, {format_expr(e.y)})"
    sym = _BIN_SYMBOL.get(type(e))
    if sym is None:
        raise TypeError(f"unknown expression node {e!r}")
    lvl = _level(e)
    return f"{_wrap(e.left, lvl)} {sym} {_wrap(e.right, lvl + 1)}"


def _iter_source(spec: InequalitySpec) -> Iterator[str]:
    yield f"ineq {spec.id} {_escape(spec.name)} {{"
    for i, (lo, hi) in enumerate(spec.domain_text):
        yield f"  dom x{i} in [{lo}, {hi}];"
    for g in spec.constraints:
        yield f"  constraint {format_expr(g)} >= 0;"
    goal = " \\/ ".join(f"{format_expr(f)} < 0" for f in spec.disjuncts)
    yield f"  goal {goal};"
    yield "}"


def to_source(spec: InequalitySpec | Sequence[InequalitySpec]) -> str:
    """Render one spec, or several, back to DSL source."""
    specs = [spec] if isinstance(spec, InequalitySpec) else list(spec)
    return "\n\n".join("\n".join(_iter_source(s)) for s in specs) + "\n"
