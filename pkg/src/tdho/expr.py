"""Arithmetic expressions in the time variable ``t``.

Coefficient functions such as ``omega_sq`` and ``force`` arrive as strings.
They are parsed into a small immutable tree that can be evaluated and
differentiated symbolically::

    >>> f = parse("t^3 + 2*t")
    >>> evaluate(differentiate(f), 2.0)
    14.0

Grammar (lowest to highest precedence)::

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := ('-' | '+') unary | power
    power   := atom ('^' unary)?          # right associative
    atom    := NUMBER | NAME | NAME '(' expr ')' | '(' expr ')'

Evaluation never returns a non-finite value; out-of-domain arguments raise
:class:`ExprDomainError` carrying the source offset of the failing node.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

__all__ = [
    "BinOp",
    "Call",
    "Const",
    "Expr",
    "ExprDomainError",
    "ExprError",
    "ExprSyntaxError",
    "Neg",
    "UnknownIdentifierError",
    "Var",
    "differentiate",
    "evaluate",
    "is_constant",
    "parse",
    "to_source",
]

FUNCTIONS = ("sin", "cos", "tan", "exp", "log", "sqrt", "sinh", "cosh", "tanh", "abs")
CONSTANTS = {"pi": math.pi, "e": math.e}


class ExprError(ValueError):
    """Base class for expression errors."""


class ExprSyntaxError(ExprError):
    def __init__(self, message: str, offset: int, expected: str):
        super().__init__(f"{message} at offset {offset} (expected {expected})")
        self.offset = offset
        self.expected = expected


class UnknownIdentifierError(ExprError):
    def __init__(self, name: str, offset: int):
        super().__init__(f"unknown identifier {name!r} at offset {offset}")
        self.name = name
        self.offset = offset


class ExprDomainError(ExprError, ArithmeticError):
    def __init__(self, message: str, offset: int | None, t: float):
        where = f" at offset {offset}" if offset is not None else ""
        super().__init__(f"{message}{where} (t={t!r})")
        self.offset = offset
        self.t = t


# --------------------------------------------------------------------------- nodes


@dataclass(frozen=True)
class Expr:
    # source offset of the node; None for nodes synthesized by differentiate()
    pos: int | None = field(default=None, compare=False, kw_only=True)

    def evaluate(self, t: float) -> float:
        raise NotImplementedError

    def __call__(self, t: float) -> float:
        return evaluate(self, t)


@dataclass(frozen=True)
class Const(Expr):
    value: float

    def evaluate(self, t):
        return self.value


@dataclass(frozen=True)
class Var(Expr):
    def evaluate(self, t):
        return t


@dataclass(frozen=True)
class Neg(Expr):
    arg: Expr

    def evaluate(self, t):
        return -self.arg.evaluate(t)


@dataclass(frozen=True)
class BinOp(Expr):
    op: str
    left: Expr
    right: Expr

    def evaluate(self, t):
        a = self.left.evaluate(t)
        b = self.right.evaluate(t)
        op = self.op
        if op == "+":
            return a + b
        if op == "-":
            return a - b
        if op == "*":
            return a * b
        if op == "/":
            if b == 0.0:
                raise ExprDomainError("division by zero", self.pos, t)
            return a / b
        # op == "^"
        if a == 0.0 and b < 0.0:
            raise ExprDomainError("zero raised to a negative power", self.pos, t)
        if a < 0.0 and not float(b).is_integer():
            raise ExprDomainError("negative base with non-integer exponent", self.pos, t)
        try:
            return math.pow(a, b)
        except OverflowError:
            raise ExprDomainError("overflow in power", self.pos, t) from None


def _checked_log(x):
    if x <= 0.0:
        raise ValueError("log of non-positive argument")
    return math.log(x)


def _checked_sqrt(x):
    if x < 0.0:
        raise ValueError("sqrt of negative argument")
    return math.sqrt(x)


_IMPL = {
    "sin": math.sin,
    "cos": math.cos,
    "tan": math.tan,
    "exp": math.exp,
    "log": _checked_log,
    "sqrt": _checked_sqrt,
    "sinh": math.sinh,
    "cosh": math.cosh,
    "tanh": math.tanh,
    "abs": abs,
}


@dataclass(frozen=True)
class Call(Expr):
    func: str
    arg: Expr

    def evaluate(self, t):
        x = self.arg.evaluate(t)
        try:
            return _IMPL[self.func](x)
        except (ValueError, OverflowError) as exc:
            raise ExprDomainError(f"{self.func}: {exc}", self.pos, t) from None


def evaluate(expr: Expr, t: float) -> float:
    """Value of ``expr`` at time ``t``; raises instead of returning inf/nan."""
    if not math.isfinite(t):
        raise ExprDomainError("non-finite time", None, t)
    value = expr.evaluate(float(t))
    if not math.isfinite(value):
        raise ExprDomainError("non-finite result", expr.pos, t)
    return float(value)


# --------------------------------------------------------------------------- parser

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_]\w*)|(?P<op>[-+*/^()]))"
)


def _tokenize(source: str):
    tokens = []
    pos = 0
    n = len(source)
    while pos < n:
        if source[pos:].strip() == "":
            break
        m = _TOKEN.match(source, pos)
        if m is None:
            bad = pos + len(source[pos:]) - len(source[pos:].lstrip())
            raise ExprSyntaxError(f"unexpected character {source[bad]!r}", bad, "number, name, operator or parenthesis")
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("end", "", len(source)))
    return tokens


class _Parser:
    def __init__(self, source: str):
        self.tokens = _tokenize(source)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect_op(self, op: str, expected: str):
        kind, text, pos = self.peek()
        if kind != "op" or text != op:
            found = "end of input" if kind == "end" else repr(text)
            raise ExprSyntaxError(f"unexpected {found}", pos, expected)
        return self.advance()

    def parse(self) -> Expr:
        node = self.expr()
        kind, text, pos = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected {text!r}", pos, "operator or end of input")
        return node

    def expr(self):
        node = self.term()
        while True:
            kind, text, pos = self.peek()
            if kind == "op" and text in "+-":
                self.advance()
                node = BinOp(text, node, self.term(), pos=pos)
            else:
                return node

    def term(self):
        node = self.unary()
        while True:
            kind, text, pos = self.peek()
            if kind == "op" and text in "*/":
                self.advance()
                node = BinOp(text, node, self.unary(), pos=pos)
            else:
                return node

    def unary(self):
        kind, text, pos = self.peek()
        if kind == "op" and text == "-":
            self.advance()
            return Neg(self.unary(), pos=pos)
        if kind == "op" and text == "+":
            self.advance()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        kind, text, pos = self.peek()
        if kind == "op" and text == "^":
            self.advance()
            return BinOp("^", base, self.unary(), pos=pos)
        return base

    def atom(self):
        kind, text, pos = self.advance()
        if kind == "num":
            return Const(float(text), pos=pos)
        if kind == "name":
            if text in FUNCTIONS:
                self.expect_op("(", f"'(' after function {text!r}")
                arg = self.expr()
                self.expect_op(")", "')'")
                return Call(text, arg, pos=pos)
            if text == "t":
                return Var(pos=pos)
            if text in CONSTANTS:
                return Const(CONSTANTS[text], pos=pos)
            raise UnknownIdentifierError(text, pos)
        if kind == "op" and text == "(":
            node = self.expr()
            self.expect_op(")", "')'")
            return node
        found = "end of input" if kind == "end" else repr(text)
        raise ExprSyntaxError(f"unexpected {found}", pos, "number, name, '(' or unary sign")


def parse(source: str) -> Expr:
    """Parse ``source`` into an expression tree."""
    if not isinstance(source, str) or not source.strip():
        raise ExprSyntaxError("empty expression", 0, "an expression")
    return _Parser(source).parse()


# --------------------------------------------------------------------------- printing

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 4}


def to_source(expr: Expr) -> str:
    """Render ``expr`` back to parseable text (fully parenthesized)."""
    if isinstance(expr, Const):
        text = repr(expr.value)
        return f"({text})" if expr.value < 0 or "inf" in text or "nan" in text else text
    if isinstance(expr, Var):
        return "t"
    if isinstance(expr, Neg):
        return f"(-{to_source(expr.arg)})"
    if isinstance(expr, BinOp):
        return f"({to_source(expr.left)} {expr.op} {to_source(expr.right)})"
    if isinstance(expr, Call):
        return f"{expr.func}({to_source(expr.arg)})"
    raise TypeError(f"not an expression node: {expr!r}")


# --------------------------------------------------------------------------- derivative

ZERO = Const(0.0)
ONE = Const(1.0)


def _is_const(e: Expr, value: float | None = None) -> bool:
    return isinstance(e, Const) and (value is None or e.value == value)


def _add(a, b):
    if _is_const(a, 0.0):
        return b
    if _is_const(b, 0.0):
        return a
    return BinOp("+", a, b)


def _sub(a, b):
    if _is_const(b, 0.0):
        return a
    if _is_const(a, 0.0):
        return _neg(b)
    return BinOp("-", a, b)


def _neg(a):
    if _is_const(a):
        return Const(-a.value)
    if isinstance(a, Neg):
        return a.arg
    return Neg(a)


def _mul(a, b):
    if _is_const(a, 0.0) or _is_const(b, 0.0):
        return ZERO
    if _is_const(a, 1.0):
        return b
    if _is_const(b, 1.0):
        return a
    return BinOp("*", a, b)


def _div(a, b):
    if _is_const(a, 0.0):
        return ZERO
    if _is_const(b, 1.0):
        return a
    return BinOp("/", a, b)


def _depends_on_t(e: Expr) -> bool:
    if isinstance(e, Var):
        return True
    if isinstance(e, Const):
        return False
    if isinstance(e, (Neg, Call)):
        return _depends_on_t(e.arg)
    return _depends_on_t(e.left) or _depends_on_t(e.right)


def is_constant(expr: Expr) -> bool:
    """True when ``expr`` does not mention ``t``."""
    return not _depends_on_t(expr)


def differentiate(expr: Expr) -> Expr:
    """Symbolic d/dt of ``expr``. Only trivial 0/1 folding is applied."""
    e = expr
    if isinstance(e, Const):
        return ZERO
    if isinstance(e, Var):
        return ONE
    if isinstance(e, Neg):
        return _neg(differentiate(e.arg))
    if isinstance(e, BinOp):
        u, v = e.left, e.right
        du, dv = differentiate(u), differentiate(v)
        if e.op == "+":
            return _add(du, dv)
        if e.op == "-":
            return _sub(du, dv)
        if e.op == "*":
            return _add(_mul(du, v), _mul(u, dv))
        if e.op == "/":
            return _div(_sub(_mul(du, v), _mul(u, dv)), BinOp("^", v, Const(2.0)))
        # power
        if not _depends_on_t(v):
            return _mul(_mul(v, BinOp("^", u, _sub(v, ONE))), du)
        if not _depends_on_t(u):
            return _mul(_mul(e, Call("log", u)), dv)
        return _mul(e, _add(_mul(dv, Call("log", u)), _div(_mul(v, du), u)))
    if isinstance(e, Call):
        u = e.arg
        du = differentiate(u)
        if _is_const(du, 0.0):
            return ZERO
        f = e.func
        if f == "sin":
            outer = Call("cos", u)
        elif f == "cos":
            outer = _neg(Call("sin", u))
        elif f == "tan":
            outer = _div(ONE, BinOp("^", Call("cos", u), Const(2.0)))
        elif f == "exp":
            outer = e
        elif f == "log":
            outer = _div(ONE, u)
        elif f == "sqrt":
            outer = _div(ONE, _mul(Const(2.0), e))
        elif f == "sinh":
            outer = Call("cosh", u)
        elif f == "cosh":
            outer = Call("sinh", u)
        elif f == "tanh":
            outer = _sub(ONE, BinOp("^", e, Const(2.0)))
        elif f == "abs":
            outer = _div(u, e)
        else:  # pragma: no cover - parser admits only FUNCTIONS
            raise ExprError(f"no derivative rule for {f!r}")
        return _mul(outer, du)
    raise TypeError(f"not an expression node: {expr!r}")
