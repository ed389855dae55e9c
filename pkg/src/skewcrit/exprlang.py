"""Tiny expression language for problem data.

Grammar (whitespace insensitive)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | power
    power  := atom ('^' INT)*           # exponent: nonnegative integer literal
    atom   := NUMBER | IDENT | IDENT '(' expr ')' | '(' expr ')'

Identifiers are the coordinates ``x1..xn``, the family parameter ``t``,
named parameters ``p1..pk``, and the functions sin, cos, exp, log, sqrt.
Precedence is ^ over unary minus over * / over + -, all left associative.

Expressions are immutable trees; ``differentiate`` is symbolic with constant
folding and 0/1 absorption, so derivatives stay readable and cheap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

from .errors import (
    DimensionError,
    DomainError,
    ExprSyntaxError,
    MissingBinding,
    UnknownIdentifier,
)

__all__ = [
    "Expr",
    "Num",
    "Var",
    "Neg",
    "Add",
    "Sub",
    "Mul",
    "Div",
    "Pow",
    "Call",
    "ExprContext",
    "parse",
    "evaluate",
    "differentiate",
    "to_text",
]

FUNCTIONS = ("sin", "cos", "exp", "log", "sqrt")


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    kind: str  # 'x', 't', or 'p'
    index: int  # 1-based; 0 for t


@dataclass(frozen=True)
class Neg:
    operand: "Expr"


@dataclass(frozen=True)
class Add:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Sub:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Mul:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Div:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Pow:
    base: "Expr"
    exponent: int


@dataclass(frozen=True)
class Call:
    func: str
    operand: "Expr"


Expr = Union[Num, Var, Neg, Add, Sub, Mul, Div, Pow, Call]


@dataclass(frozen=True)
class ExprContext:
    """Declares how many coordinates and parameters are in scope."""

    n_vars: int
    n_params: int = 0
    allow_t: bool = True


# --- tokenizer / parser -----------------------------------------------------

_SINGLE = set("+-*/^()")


def _tokenize(src):
    tokens = []  # (kind, text, pos)
    i, n = 0, len(src)
    while i < n:
        c = src[i]
        if c.isspace():
            i += 1
            continue
        if c in _SINGLE:
            tokens.append((c, c, i))
            i += 1
            continue
        if c.isdigit() or (c == "." and i + 1 < n and src[i + 1].isdigit()):
            j = i
            seen_dot = False
            while j < n and (src[j].isdigit() or (src[j] == "." and not seen_dot)):
                if src[j] == ".":
                    seen_dot = True
                j += 1
            # exponent part: 1e-3, 2.5E+4
            if j < n and src[j] in "eE":
                k = j + 1
                if k < n and src[k] in "+-":
                    k += 1
                if k < n and src[k].isdigit():
                    while k < n and src[k].isdigit():
                        k += 1
                    j = k
            tokens.append(("num", src[i:j], i))
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (src[j].isalnum() or src[j] == "_"):
                j += 1
            tokens.append(("ident", src[i:j], i))
            i = j
            continue
        raise ExprSyntaxError(f"unexpected character {c!r} at position {i}", position=i)
    tokens.append(("end", "", n))
    return tokens


class _Parser:
    def __init__(self, tokens, ctx, src):
        self.tokens = tokens
        self.pos = 0
        self.ctx = ctx
        self.src = src

    def peek(self):
        return self.tokens[self.pos]

    def advance(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, kind):
        tok = self.advance()
        if tok[0] != kind:
            raise ExprSyntaxError(
                f"expected {kind!r}, got {tok[1]!r} at position {tok[2]}",
                position=tok[2],
            )
        return tok

    def parse_expr(self):
        node = self.parse_term()
        while self.peek()[0] in ("+", "-"):
            op = self.advance()[0]
            rhs = self.parse_term()
            node = Add(node, rhs) if op == "+" else Sub(node, rhs)
        return node

    def parse_term(self):
        node = self.parse_unary()
        while self.peek()[0] in ("*", "/"):
            op = self.advance()[0]
            rhs = self.parse_unary()
            node = Mul(node, rhs) if op == "*" else Div(node, rhs)
        return node

    def parse_unary(self):
        if self.peek()[0] == "-":
            self.advance()
            operand = self.parse_unary()
            # fold a bare negated literal so -2 and (-2) mean Num(-2)
            if isinstance(operand, Num):
                return Num(-operand.value)
            return Neg(operand)
        return self.parse_power()

    def parse_power(self):
        node = self.parse_atom()
        while self.peek()[0] == "^":
            self.advance()
            tok = self.advance()
            if tok[0] != "num" or not tok[1].isdigit():
                raise ExprSyntaxError(
                    f"exponent must be a nonnegative integer literal, "
                    f"got {tok[1]!r} at position {tok[2]}",
                    position=tok[2],
                )
            node = Pow(node, int(tok[1]))
        return node

    def parse_atom(self):
        tok = self.advance()
        kind, text, pos = tok
        if kind == "num":
            return Num(float(text))
        if kind == "(":
            node = self.parse_expr()
            self.expect(")")
            return node
        if kind == "ident":
            if self.peek()[0] == "(":
                if text not in FUNCTIONS:
                    raise UnknownIdentifier(f"unknown function {text!r} at position {pos}")
                self.advance()
                arg = self.parse_expr()
                self.expect(")")
                return Call(text, arg)
            return self._resolve_var(text, pos)
        raise ExprSyntaxError(
            f"unexpected token {text!r} at position {pos}", position=pos
        )

    def _resolve_var(self, name, pos):
        ctx = self.ctx
        if name == "t":
            if not ctx.allow_t:
                raise UnknownIdentifier(f"'t' is not in scope at position {pos}")
            return Var("t", 0)
        if len(name) >= 2 and name[0] in ("x", "p") and name[1:].isdigit():
            index = int(name[1:])
            if index == 0:
                raise DimensionError(f"indices are 1-based, got {name!r}")
            limit = ctx.n_vars if name[0] == "x" else ctx.n_params
            if index > limit:
                raise DimensionError(
                    f"{name!r} exceeds declared dimension {limit}"
                )
            return Var(name[0], index)
        raise UnknownIdentifier(f"unknown identifier {name!r} at position {pos}")


def parse(src, ctx):
    """Parse ``src`` into an expression tree under declaration ``ctx``."""
    parser = _Parser(_tokenize(src), ctx, src)
    node = parser.parse_expr()
    tok = parser.peek()
    if tok[0] != "end":
        raise ExprSyntaxError(
            f"trailing input {tok[1]!r} at position {tok[2]}", position=tok[2]
        )
    return node


# --- evaluation ---------------------------------------------------------------

def evaluate(expr, x=None, t=None, p=None):
    """Evaluate an expression tree in IEEE double arithmetic.

    Args:
        expr: expression tree.
        x: sequence of coordinate values (1-based access).
        t: family parameter value.
        p: sequence of parameter values.

    Raises:
        MissingBinding: a needed variable has no value.
        DomainError: log/sqrt domain violations, division by zero, or a
            non-finite result.
    """
    value = _eval(expr, x, t, p)
    if not math.isfinite(value):
        raise DomainError("evaluation produced a non-finite value")
    return value


def _eval(expr, x, t, p):
    match expr:
        case Num(value=v):
            return v
        case Var(kind="t"):
            if t is None:
                raise MissingBinding("no value bound for 't'")
            return float(t)
        case Var(kind="x", index=i):
            if x is None or i > len(x):
                raise MissingBinding(f"no value bound for x{i}")
            return float(x[i - 1])
        case Var(kind="p", index=i):
            if p is None or i > len(p):
                raise MissingBinding(f"no value bound for p{i}")
            return float(p[i - 1])
        case Neg(operand=a):
            return -_eval(a, x, t, p)
        case Add(left=a, right=b):
            return _eval(a, x, t, p) + _eval(b, x, t, p)
        case Sub(left=a, right=b):
            return _eval(a, x, t, p) - _eval(b, x, t, p)
        case Mul(left=a, right=b):
            return _eval(a, x, t, p) * _eval(b, x, t, p)
        case Div(left=a, right=b):
            denom = _eval(b, x, t, p)
            if denom == 0.0:
                raise DomainError("division by zero")
            return _eval(a, x, t, p) / denom
        case Pow(base=a, exponent=k):
            try:
                return _eval(a, x, t, p) ** k
            except OverflowError as exc:
                raise DomainError("overflow in power") from exc
        case Call(func=f, operand=a):
            v = _eval(a, x, t, p)
            if f == "sin":
                return math.sin(v)
            if f == "cos":
                return math.cos(v)
            if f == "exp":
                try:
                    return math.exp(v)
                except OverflowError as exc:
                    raise DomainError("overflow in exp") from exc
            if f == "log":
                if v <= 0.0:
                    raise DomainError(f"log of nonpositive value {v!r}")
                return math.log(v)
            if f == "sqrt":
                if v < 0.0:
                    raise DomainError(f"sqrt of negative value {v!r}")
                return math.sqrt(v)
            raise UnknownIdentifier(f"unknown function {f!r}")
    raise TypeError(f"not an expression node: {expr!r}")


# --- smart constructors (fold constants, absorb 0/1) -------------------------

def _is_num(e, v=None):
    return isinstance(e, Num) and (v is None or e.value == v)


def _add(a, b):
    if _is_num(a) and _is_num(b):
        return Num(a.value + b.value)
    if _is_num(a, 0.0):
        return b
    if _is_num(b, 0.0):
        return a
    return Add(a, b)


def _sub(a, b):
    if _is_num(a) and _is_num(b):
        return Num(a.value - b.value)
    if _is_num(b, 0.0):
        return a
    if _is_num(a, 0.0):
        return _neg(b)
    return Sub(a, b)


def _mul(a, b):
    if _is_num(a) and _is_num(b):
        return Num(a.value * b.value)
    if _is_num(a, 0.0) or _is_num(b, 0.0):
        return Num(0.0)
    if _is_num(a, 1.0):
        return b
    if _is_num(b, 1.0):
        return a
    return Mul(a, b)


def _div(a, b):
    if _is_num(a, 0.0):
        return Num(0.0)
    if _is_num(b, 1.0):
        return a
    if _is_num(a) and _is_num(b) and b.value != 0.0:
        return Num(a.value / b.value)
    return Div(a, b)


def _neg(a):
    if _is_num(a):
        return Num(-a.value)
    if isinstance(a, Neg):
        return a.operand
    return Neg(a)


def _pow(a, k):
    if k == 0:
        return Num(1.0)
    if k == 1:
        return a
    if _is_num(a):
        return Num(a.value**k)
    return Pow(a, k)


# --- differentiation ----------------------------------------------------------

def differentiate(expr, var):
    """Symbolic derivative with respect to ``var``.

    Args:
        expr: expression tree.
        var: a Var node, or a name like "x2" / "t" / "p1".

    Returns:
        A new expression tree, constant-folded.
    """
    if isinstance(var, str):
        if var == "t":
            var = Var("t", 0)
        elif len(var) >= 2 and var[0] in ("x", "p") and var[1:].isdigit():
            var = Var(var[0], int(var[1:]))
        else:
            raise UnknownIdentifier(f"cannot differentiate with respect to {var!r}")
    return _diff(expr, var)


def _diff(expr, var):
    match expr:
        case Num():
            return Num(0.0)
        case Var(kind=k, index=i):
            return Num(1.0 if (k == var.kind and i == var.index) else 0.0)
        case Neg(operand=a):
            return _neg(_diff(a, var))
        case Add(left=a, right=b):
            return _add(_diff(a, var), _diff(b, var))
        case Sub(left=a, right=b):
            return _sub(_diff(a, var), _diff(b, var))
        case Mul(left=a, right=b):
            return _add(_mul(_diff(a, var), b), _mul(a, _diff(b, var)))
        case Div(left=a, right=b):
            num = _sub(_mul(_diff(a, var), b), _mul(a, _diff(b, var)))
            return _div(num, _pow(b, 2))
        case Pow(base=a, exponent=k):
            if k == 0:
                return Num(0.0)
            return _mul(_mul(Num(float(k)), _pow(a, k - 1)), _diff(a, var))
        case Call(func=f, operand=a):
            da = _diff(a, var)
            if f == "sin":
                return _mul(Call("cos", a), da)
            if f == "cos":
                return _neg(_mul(Call("sin", a), da))
            if f == "exp":
                return _mul(Call("exp", a), da)
            if f == "log":
                return _div(da, a)
            if f == "sqrt":
                return _div(da, _mul(Num(2.0), Call("sqrt", a)))
            raise UnknownIdentifier(f"unknown function {f!r}")
    raise TypeError(f"not an expression node: {expr!r}")


# --- printing -----------------------------------------------------------------

def _prec(expr):
    match expr:
        case Add() | Sub():
            return 1
        case Mul() | Div():
            return 2
        case Neg():
            return 3
        case Num(value=v) if v < 0:
            return 3  # prints with a leading minus, binds like unary minus
        case Pow():
            return 4
        case _:
            return 5


def _wrap(child, parent_prec, strict=False):
    text = to_text(child)
    child_prec = _prec(child)
    if child_prec < parent_prec or (strict and child_prec == parent_prec):
        return f"({text})"
    return text


def to_text(expr):
    """Render an expression; ``parse(to_text(e), ctx) == e`` structurally."""
    match expr:
        case Num(value=v):
            if v < 0:
                return f"-{_format_num(-v)}"
            return _format_num(v)
        case Var(kind="t"):
            return "t"
        case Var(kind=k, index=i):
            return f"{k}{i}"
        case Neg(operand=a):
            return f"-{_wrap(a, 3, strict=True)}"
        case Add(left=a, right=b):
            return f"{_wrap(a, 1)} + {_wrap(b, 1, strict=True)}"
        case Sub(left=a, right=b):
            return f"{_wrap(a, 1)} - {_wrap(b, 1, strict=True)}"
        case Mul(left=a, right=b):
            return f"{_wrap(a, 2)}*{_wrap(b, 2, strict=True)}"
        case Div(left=a, right=b):
            return f"{_wrap(a, 2)}/{_wrap(b, 2, strict=True)}"
        case Pow(base=a, exponent=k):
            return f"{_wrap(a, 4, strict=True)}^{k}"
        case Call(func=f, operand=a):
            return f"{f}({to_text(a)})"
    raise TypeError(f"not an expression node: {expr!r}")


def _format_num(v):
    if v == int(v) and abs(v) < 1e15:
        return str(int(v))
    return repr(v)
