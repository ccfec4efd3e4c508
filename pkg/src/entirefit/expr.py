"""Parsing, evaluation, and symbolic differentiation of one-variable expressions.

The expression language is deliberately small: constants, the variable x,
the binary operators + - * /, ^ with an integer-constant exponent, and the
functions sin, cos, exp, log, sqrt, abs.  This class of expressions is
closed under differentiation (abs excluded, which is why abs is reserved
for error envelopes and never differentiated).
"""

from __future__ import annotations

import cmath
import re
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "Expr", "Const", "Var", "Neg", "Call", "BinOp", "Pow",
    "ParseError", "DomainError", "DifferentiationError",
    "parse", "to_string", "evaluate", "eval_grid", "differentiate",
    "expr_from_coeffs", "contains_abs", "grid_fn",
]

FUNCTIONS = ("sin", "cos", "exp", "log", "abs", "sqrt")


class ParseError(ValueError):
    """Malformed expression text; `offset` is the byte position of the failure."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class DomainError(ArithmeticError):
    """Evaluation left the domain of a subexpression (log, division, overflow)."""


class DifferentiationError(ValueError):
    """Raised when differentiating an expression that contains abs."""


class Expr:
    """Base class for expression nodes.  Nodes are immutable and hashable."""

    __slots__ = ()

    def __str__(self) -> str:
        return to_string(self)


@dataclass(frozen=True)
class Const(Expr):
    value: complex


@dataclass(frozen=True)
class Var(Expr):
    pass


@dataclass(frozen=True)
class Neg(Expr):
    arg: Expr


@dataclass(frozen=True)
class Call(Expr):
    fn: str
    arg: Expr


@dataclass(frozen=True)
class BinOp(Expr):
    op: str  # one of + - * /
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Pow(Expr):
    base: Expr
    exponent: int


X = Var()
ZERO = Const(0.0 + 0.0j)
ONE = Const(1.0 + 0.0j)


# ---------------------------------------------------------------------------
# tokenizer / parser

_TOKEN_RE = re.compile(
    r"(?P<num>(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^(),])"
    r"|(?P<ws>\s+)"
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    toks = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup
        if kind != "ws":
            toks.append((kind, m.group(), pos))
        pos = m.end()
    toks.append(("end", "", len(text)))
    return toks


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.idx = 0

    def peek(self):
        return self.toks[self.idx]

    def advance(self):
        tok = self.toks[self.idx]
        self.idx += 1
        return tok

    def expect_op(self, op: str):
        kind, text, off = self.peek()
        if kind != "op" or text != op:
            raise ParseError(f"expected {op!r}", off)
        return self.advance()

    def expression(self) -> Expr:
        node = self.multiplicative()
        while True:
            kind, text, _ = self.peek()
            if kind == "op" and text in "+-":
                self.advance()
                node = BinOp(text, node, self.multiplicative())
            else:
                return node

    def multiplicative(self) -> Expr:
        node = self.unary()
        while True:
            kind, text, _ = self.peek()
            if kind == "op" and text in "*/":
                self.advance()
                node = BinOp(text, node, self.unary())
            else:
                return node

    def unary(self) -> Expr:
        kind, text, _ = self.peek()
        if kind == "op" and text == "-":
            self.advance()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Expr:
        base = self.primary()
        kind, text, _ = self.peek()
        if kind == "op" and text == "^":
            self.advance()
            _, _, exp_off = self.peek()
            exp_node = self.unary()
            n = _fold_integer(exp_node)
            if n is None:
                raise ParseError("exponent must be an integer constant", exp_off)
            return Pow(base, n)
        return base

    def primary(self) -> Expr:
        kind, text, off = self.advance()
        if kind == "num":
            return Const(complex(float(text)))
        if kind == "name":
            if text == "x":
                return Var()
            if text in FUNCTIONS:
                self.expect_op("(")
                arg = self.expression()
                self.expect_op(")")
                return Call(text, arg)
            if text == "complex":
                self.expect_op("(")
                _, _, a_off = self.peek()
                re_node = self.expression()
                self.expect_op(",")
                im_node = self.expression()
                self.expect_op(")")
                re_v = _fold(re_node)
                im_v = _fold(im_node)
                if re_v is None or im_v is None or re_v.imag or im_v.imag:
                    raise ParseError("complex() arguments must be real constants", a_off)
                return Const(complex(re_v.real, im_v.real))
            raise ParseError(f"unknown identifier {text!r}", off)
        if kind == "op" and text == "(":
            node = self.expression()
            self.expect_op(")")
            return node
        raise ParseError("expected expression", off)

    def expect_end(self):
        kind, _, off = self.peek()
        if kind != "end":
            raise ParseError("unexpected trailing input", off)


def _fold(e: Expr) -> complex | None:
    """Constant-fold e, or None if it is not a constant expression."""
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Neg):
        v = _fold(e.arg)
        return None if v is None else -v
    if isinstance(e, BinOp):
        a, b = _fold(e.left), _fold(e.right)
        if a is None or b is None:
            return None
        if e.op == "+":
            return a + b
        if e.op == "-":
            return a - b
        if e.op == "*":
            return a * b
        if b == 0:
            return None
        return a / b
    if isinstance(e, Pow):
        v = _fold(e.base)
        if v is None or (v == 0 and e.exponent < 0):
            return None
        return v ** e.exponent
    return None


def _fold_integer(e: Expr) -> int | None:
    v = _fold(e)
    if v is None or v.imag != 0 or not float(v.real).is_integer():
        return None
    if abs(v.real) > 2**31:
        return None
    return int(v.real)


def parse(text: str) -> Expr:
    """Parse expression text into a tree; see GRAMMAR.md for the language."""
    p = _Parser(text)
    node = p.expression()
    p.expect_end()
    return node


# ---------------------------------------------------------------------------
# printing

def _const_str(v: complex) -> str:
    if v.imag == 0:
        return repr(float(v.real))
    return f"complex({float(v.real)!r}, {float(v.imag)!r})"


def _prec(e: Expr) -> int:
    if isinstance(e, Const):
        # negative real constants print with a leading '-': treat like unary
        if e.value.imag == 0 and e.value.real < 0:
            return 25
        return 100
    if isinstance(e, (Var, Call)):
        return 100
    if isinstance(e, Pow):
        return 40
    if isinstance(e, Neg):
        return 30
    if isinstance(e, BinOp):
        return 20 if e.op in "*/" else 10
    raise TypeError(f"not an Expr: {e!r}")


def _render(e: Expr, parent: int) -> str:
    mine = _prec(e)
    if isinstance(e, Const):
        s = _const_str(e.value)
    elif isinstance(e, Var):
        s = "x"
    elif isinstance(e, Call):
        s = f"{e.fn}({_render(e.arg, 0)})"
    elif isinstance(e, Neg):
        s = "-" + _render(e.arg, mine)
    elif isinstance(e, Pow):
        exp = str(e.exponent) if e.exponent >= 0 else f"({e.exponent})"
        s = f"{_render(e.base, mine + 1)}^{exp}"
    elif isinstance(e, BinOp):
        s = f"{_render(e.left, mine)} {e.op} {_render(e.right, mine + 1)}"
    else:
        raise TypeError(f"not an Expr: {e!r}")
    return f"({s})" if mine < parent else s


def to_string(e: Expr) -> str:
    """Render e as text that parses back to a structurally identical tree."""
    return _render(e, 0)


# ---------------------------------------------------------------------------
# evaluation

def evaluate(e: Expr, x: float | complex) -> complex:
    """Evaluate e at the point x.  Raises DomainError outside the domain."""
    return _ev(e, complex(x), x)


def _ev(e: Expr, z: complex, x) -> complex:
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Var):
        return z
    if isinstance(e, Neg):
        return -_ev(e.arg, z, x)
    if isinstance(e, BinOp):
        a = _ev(e.left, z, x)
        b = _ev(e.right, z, x)
        if e.op == "+":
            return a + b
        if e.op == "-":
            return a - b
        if e.op == "*":
            return a * b
        if b == 0:
            raise DomainError(f"division by zero in '{to_string(e)}' at x={x}")
        return a / b
    if isinstance(e, Pow):
        b = _ev(e.base, z, x)
        if b == 0 and e.exponent < 0:
            raise DomainError(f"zero base with negative exponent in '{to_string(e)}' at x={x}")
        return b ** e.exponent
    if isinstance(e, Call):
        v = _ev(e.arg, z, x)
        try:
            if e.fn == "sin":
                return cmath.sin(v)
            if e.fn == "cos":
                return cmath.cos(v)
            if e.fn == "exp":
                return cmath.exp(v)
            if e.fn == "log":
                if v.imag == 0 and v.real <= 0:
                    raise DomainError(f"log of nonpositive real in '{to_string(e)}' at x={x}")
                return cmath.log(v)
            if e.fn == "sqrt":
                return cmath.sqrt(v)
            if e.fn == "abs":
                return complex(abs(v))
        except OverflowError:
            raise DomainError(f"overflow in '{to_string(e)}' at x={x}") from None
    raise TypeError(f"not an Expr: {e!r}")


def eval_grid(e: Expr, xs: np.ndarray) -> np.ndarray:
    """Vectorized evaluation over an array of points; returns complex128."""
    arr = np.asarray(xs, dtype=complex)
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        out = _evg(e, arr)
    if not np.all(np.isfinite(out.real) & np.isfinite(out.imag)):
        raise DomainError(f"non-finite value evaluating '{to_string(e)}' on grid")
    return out


def _evg(e: Expr, arr: np.ndarray) -> np.ndarray:
    if isinstance(e, Const):
        return np.full(arr.shape, e.value, dtype=complex)
    if isinstance(e, Var):
        return arr.copy()
    if isinstance(e, Neg):
        return -_evg(e.arg, arr)
    if isinstance(e, BinOp):
        a = _evg(e.left, arr)
        b = _evg(e.right, arr)
        if e.op == "+":
            return a + b
        if e.op == "-":
            return a - b
        if e.op == "*":
            return a * b
        if np.any(b == 0):
            raise DomainError(f"division by zero in '{to_string(e)}'")
        return a / b
    if isinstance(e, Pow):
        b = _evg(e.base, arr)
        if e.exponent < 0 and np.any(b == 0):
            raise DomainError(f"zero base with negative exponent in '{to_string(e)}'")
        return b ** e.exponent
    if isinstance(e, Call):
        v = _evg(e.arg, arr)
        if e.fn == "sin":
            return np.sin(v)
        if e.fn == "cos":
            return np.cos(v)
        if e.fn == "exp":
            return np.exp(v)
        if e.fn == "log":
            if np.any((v.imag == 0) & (v.real <= 0)):
                raise DomainError(f"log of nonpositive real in '{to_string(e)}'")
            return np.log(v)
        if e.fn == "sqrt":
            return np.sqrt(v)
        if e.fn == "abs":
            return np.abs(v).astype(complex)
    raise TypeError(f"not an Expr: {e!r}")


def grid_fn(e: Expr) -> Callable[[np.ndarray], np.ndarray]:
    """Bind e into a vectorized callable, for use as a sampling target source."""
    return lambda xs: eval_grid(e, xs)


# ---------------------------------------------------------------------------
# differentiation with local simplification

def _is_const(e: Expr, v: complex) -> bool:
    return isinstance(e, Const) and e.value == v


def _add(a: Expr, b: Expr) -> Expr:
    if _is_const(a, 0):
        return b
    if _is_const(b, 0):
        return a
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value + b.value)
    return BinOp("+", a, b)


def _sub(a: Expr, b: Expr) -> Expr:
    if _is_const(b, 0):
        return a
    if _is_const(a, 0):
        return _neg(b)
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value - b.value)
    return BinOp("-", a, b)


def _mul(a: Expr, b: Expr) -> Expr:
    if _is_const(a, 0) or _is_const(b, 0):
        return ZERO
    if _is_const(a, 1):
        return b
    if _is_const(b, 1):
        return a
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value * b.value)
    return BinOp("*", a, b)


def _div(a: Expr, b: Expr) -> Expr:
    if _is_const(a, 0):
        return ZERO
    if _is_const(b, 1):
        return a
    if isinstance(a, Const) and isinstance(b, Const) and b.value != 0:
        return Const(a.value / b.value)
    return BinOp("/", a, b)


def _neg(a: Expr) -> Expr:
    if isinstance(a, Const):
        return Const(-a.value)
    if isinstance(a, Neg):
        return a.arg
    return Neg(a)


def _pow(base: Expr, n: int) -> Expr:
    if n == 0:
        return ONE
    if n == 1:
        return base
    if isinstance(base, Const):
        return Const(base.value ** n)
    return Pow(base, n)


def differentiate(e: Expr) -> Expr:
    """Symbolic derivative of e with constant folding and 0/1 identities."""
    if isinstance(e, Const):
        return ZERO
    if isinstance(e, Var):
        return ONE
    if isinstance(e, Neg):
        return _neg(differentiate(e.arg))
    if isinstance(e, BinOp):
        du = differentiate(e.left)
        dv = differentiate(e.right)
        u, v = e.left, e.right
        if e.op == "+":
            return _add(du, dv)
        if e.op == "-":
            return _sub(du, dv)
        if e.op == "*":
            return _add(_mul(du, v), _mul(u, dv))
        return _div(_sub(_mul(du, v), _mul(u, dv)), _pow(v, 2))
    if isinstance(e, Pow):
        if e.exponent == 0:
            return ZERO
        du = differentiate(e.base)
        return _mul(_mul(Const(complex(e.exponent)), _pow(e.base, e.exponent - 1)), du)
    if isinstance(e, Call):
        if e.fn == "abs":
            raise DifferentiationError("abs is not differentiable; it is allowed only in envelopes")
        du = differentiate(e.arg)
        u = e.arg
        if e.fn == "sin":
            return _mul(Call("cos", u), du)
        if e.fn == "cos":
            return _neg(_mul(Call("sin", u), du))
        if e.fn == "exp":
            return _mul(Call("exp", u), du)
        if e.fn == "log":
            return _div(du, u)
        if e.fn == "sqrt":
            return _div(du, _mul(Const(2.0 + 0j), Call("sqrt", u)))
    raise TypeError(f"not an Expr: {e!r}")


def contains_abs(e: Expr) -> bool:
    if isinstance(e, Call):
        return e.fn == "abs" or contains_abs(e.arg)
    if isinstance(e, Neg):
        return contains_abs(e.arg)
    if isinstance(e, BinOp):
        return contains_abs(e.left) or contains_abs(e.right)
    if isinstance(e, Pow):
        return contains_abs(e.base)
    return False


def expr_from_coeffs(coeffs: Sequence[complex]) -> Expr:
    """Build the expression c0 + c1*x + c2*x^2 + ... , dropping zero terms."""
    node: Expr = ZERO
    for k, c in enumerate(coeffs):
        c = complex(c)
        if c == 0:
            continue
        term = _mul(Const(c), _pow(X, k)) if k else Const(c)
        node = _add(node, term)
    return node
