"""Polynomial differential functions over jet coordinates.

Grammar (EBNF)::

    expr    = term { ("+" | "-") term } ;
    term    = unary { ("*" | "/") unary } ;
    unary   = ("+" | "-") unary | power ;
    power   = atom [ ("^" | "**") ["-"] integer ] ;
    atom    = number | variable | coord | "(" expr ")" ;
    number  = digits [ "." digits ] ;
    variable= "x0" | "x1" | "x2" | "x3" ;
    coord   = "a" "[" int "," int "]"
            | "d" q "[" int "," int "," int { "," int } "]" ;   (q derivative indices)

``a[al,i]`` is a^al_i and ``dq[al,i,j1..jq]`` is a^al_{i,j1..jq}; derivative
indices are sorted at parse time.  Denominators and negative powers must be
constant.  Division of two literals folds into a rational literal.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from math import factorial
from typing import Optional, Union

import numpy as np

from .taylor import OrderExceeded, Series

MAX_DERIV = 5


class ExprError(ValueError):
    pass


class ExprSyntaxError(ExprError, SyntaxError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position
        self.msg = f"{message} at position {position}"

    def __str__(self):
        return self.msg


class UnknownCoordinate(ExprError):
    pass


class BadIndexRange(ExprError):
    pass


class NonLiteralDenominator(ExprError):
    pass


# ---------------------------------------------------------------- AST

class Expr:
    __slots__ = ()

    def __add__(self, o):
        return add(self, _wrap(o))

    def __radd__(self, o):
        return add(_wrap(o), self)

    def __sub__(self, o):
        return sub(self, _wrap(o))

    def __rsub__(self, o):
        return sub(_wrap(o), self)

    def __mul__(self, o):
        return mul(self, _wrap(o))

    def __rmul__(self, o):
        return mul(_wrap(o), self)

    def __neg__(self):
        return neg(self)

    def __str__(self):
        return to_string(self)

    # evaluation on series (used by the jet module)
    def series(self, xs: Series, A: Series) -> Series:
        return _series(self, xs, A, {})


@dataclass(frozen=True)
class Num(Expr):
    value: Fraction


@dataclass(frozen=True)
class Var(Expr):
    index: int


@dataclass(frozen=True)
class Coord(Expr):
    alpha: int
    i: int
    deriv: tuple = ()

    @property
    def q(self) -> int:
        return len(self.deriv)


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
    right: Expr  # constant


@dataclass(frozen=True)
class Neg(Expr):
    operand: Expr


@dataclass(frozen=True)
class Pow(Expr):
    base: Expr
    exponent: int


ZERO, ONE = Num(Fraction(0)), Num(Fraction(1))


def _wrap(v) -> Expr:
    if isinstance(v, Expr):
        return v
    if isinstance(v, (int, Fraction)):
        return Num(Fraction(v))
    if isinstance(v, float):
        return Num(Fraction(v))
    raise TypeError(f"cannot use {type(v).__name__} in an expression")


def coord(alpha: int, i: int, *deriv: int) -> Coord:
    return Coord(alpha, i, tuple(sorted(deriv)))


def x(i: int) -> Var:
    return Var(i)


def num(v) -> Num:
    return Num(Fraction(v))


# smart constructors: only trivial folding, no canonical forms
def add(a: Expr, b: Expr) -> Expr:
    if a == ZERO:
        return b
    if b == ZERO:
        return a
    return Add(a, b)


def sub(a: Expr, b: Expr) -> Expr:
    if b == ZERO:
        return a
    if a == ZERO:
        return neg(b)
    return Sub(a, b)


def mul(a: Expr, b: Expr) -> Expr:
    if a == ZERO or b == ZERO:
        return ZERO
    if a == ONE:
        return b
    if b == ONE:
        return a
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value * b.value)
    return Mul(a, b)


def neg(a: Expr) -> Expr:
    if a == ZERO:
        return ZERO
    if isinstance(a, Neg):
        return a.operand
    return Neg(a)


def div(a: Expr, b: Expr) -> Expr:
    if not is_constant(b):
        raise NonLiteralDenominator(f"denominator {to_string(b)} is not constant")
    if isinstance(a, Num) and isinstance(b, Num):
        if b.value == 0:
            raise ZeroDivisionError("division by zero literal")
        return Num(a.value / b.value)
    if a == ZERO:
        return ZERO
    return Div(a, b)


def power(a: Expr, n: int) -> Expr:
    if n < 0 and not is_constant(a):
        raise NonLiteralDenominator("negative powers need a constant base")
    if n == 0:
        return ONE
    if n == 1:
        return a
    if isinstance(a, Num):
        return Num(a.value ** n)
    return Pow(a, n)


def is_constant(e: Expr) -> bool:
    return not any(isinstance(n, (Var, Coord)) for n in _walk(e))


def _walk(e: Expr):
    yield e
    if isinstance(e, (Add, Sub, Mul, Div)):
        yield from _walk(e.left)
        yield from _walk(e.right)
    elif isinstance(e, Neg):
        yield from _walk(e.operand)
    elif isinstance(e, Pow):
        yield from _walk(e.base)


def coordinates(e: Expr) -> set:
    return {n for n in _walk(e) if isinstance(n, Coord)}


def order(e: Expr) -> int:
    """Highest derivative order of a jet coordinate in e (0 if none)."""
    return max((c.q for c in coordinates(e)), default=0)


# ---------------------------------------------------------------- parser

_TOKEN = re.compile(r"\s*(?:(?P<num>\d+(?:\.\d+)?)|(?P<name>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>\*\*|[-+*/^(),\[\]]))")


def _tokenize(text: str):
    pos, out = 0, []
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            pos += len(text[pos:]) - len(text[pos:].lstrip())
            raise ExprSyntaxError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup
        start = m.start(kind)
        out.append((kind, m.group(kind), start))
        pos = m.end()
    out.append(("end", "", len(text)))
    return out


class _Parser:
    def __init__(self, text: str, dim: Optional[int]):
        self.toks = _tokenize(text)
        self.k = 0
        self.dim = dim

    def peek(self):
        return self.toks[self.k]

    def take(self, value=None):
        tok = self.toks[self.k]
        if value is not None and tok[1] != value:
            raise ExprSyntaxError(f"expected {value!r}, found {tok[1] or 'end of input'!r}", tok[2])
        self.k += 1
        return tok

    def parse(self) -> Expr:
        e = self.expr()
        tok = self.peek()
        if tok[0] != "end":
            raise ExprSyntaxError(f"unexpected {tok[1]!r}", tok[2])
        return e

    def expr(self):
        e = self.term()
        while self.peek()[1] in ("+", "-"):
            op = self.take()[1]
            r = self.term()
            e = Add(e, r) if op == "+" else Sub(e, r)
        return e

    def term(self):
        e = self.unary()
        while self.peek()[1] in ("*", "/"):
            _, op, pos = self.take()
            r = self.unary()
            if op == "*":
                e = Mul(e, r)
                continue
            if not is_constant(r):
                raise NonLiteralDenominator(f"denominator at position {pos} depends on variables")
            if _const_value(r) == 0:
                raise ZeroDivisionError(f"division by zero at position {pos}")
            e = div(e, r) if isinstance(e, Num) and isinstance(r, Num) else Div(e, r)
        return e

    def unary(self):
        if self.peek()[1] == "-":
            self.take()
            return Neg(self.unary())
        if self.peek()[1] == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[1] in ("^", "**"):
            self.take()
            sign = 1
            if self.peek()[1] == "-":
                self.take()
                sign = -1
            tok = self.take()
            if tok[0] != "num" or "." in tok[1]:
                raise ExprSyntaxError("exponent must be an integer literal", tok[2])
            n = sign * int(tok[1])
            if n < 0:
                if not is_constant(base):
                    raise NonLiteralDenominator(f"negative power of a non-constant at position {tok[2]}")
            return Pow(base, n)
        return base

    def atom(self):
        kind, val, pos = self.take()
        if kind == "num":
            return Num(Fraction(val))
        if val == "(":
            e = self.expr()
            self.take(")")
            return e
        if kind == "name":
            m = re.fullmatch(r"x([0-3])", val)
            if m:
                return Var(int(m.group(1)))
            if val == "a" or re.fullmatch(r"d[1-9]", val):
                return self.coordinate(val, pos)
            raise UnknownCoordinate(f"unknown name {val!r} at position {pos}")
        raise ExprSyntaxError(f"unexpected {val or 'end of input'!r}", pos)

    def coordinate(self, name: str, pos: int) -> Coord:
        q = 0 if name == "a" else int(name[1:])
        if q > MAX_DERIV:
            raise UnknownCoordinate(f"{name} exceeds the maximal derivative order {MAX_DERIV}")
        self.take("[")
        idx = []
        while True:
            tok = self.take()
            if tok[0] != "num" or "." in tok[1]:
                raise ExprSyntaxError("index must be a non-negative integer", tok[2])
            idx.append(int(tok[1]))
            if self.peek()[1] == ",":
                self.take()
                continue
            self.take("]")
            break
        if len(idx) != q + 2:
            raise BadIndexRange(f"{name} at position {pos} takes {q + 2} indices, got {len(idx)}")
        alpha, rest = idx[0], idx[1:]
        if self.dim is not None and alpha >= self.dim:
            raise BadIndexRange(f"algebra index {alpha} out of range for dimension {self.dim} at position {pos}")
        if any(v > 3 for v in rest):
            raise BadIndexRange(f"space-time index out of range at position {pos}")
        return Coord(alpha, rest[0], tuple(sorted(rest[1:])))


def parse(text: str, dim: Optional[int] = None) -> Expr:
    return _Parser(text, dim).parse()


# ---------------------------------------------------------------- printer

_PREC = {Add: 1, Sub: 1, Mul: 2, Div: 2, Neg: 3, Pow: 4}


def _prec(e: Expr) -> int:
    if isinstance(e, Num) and e.value < 0 and e.value.denominator == 1:
        return 3  # leading minus sign binds like negation
    if isinstance(e, Num) and e.value.denominator != 1:
        return 5  # printed in parentheses
    return _PREC.get(type(e), 5)


def to_string(e: Expr) -> str:
    if isinstance(e, Num):
        v = e.value
        return str(v.numerator) if v.denominator == 1 else f"({v.numerator}/{v.denominator})"
    if isinstance(e, Var):
        return f"x{e.index}"
    if isinstance(e, Coord):
        name = "a" if e.q == 0 else f"d{e.q}"
        return f"{name}[{','.join(str(v) for v in (e.alpha, e.i) + e.deriv)}]"
    if isinstance(e, Neg):
        inner = to_string(e.operand)
        return f"-{inner}" if _prec(e.operand) >= 3 else f"-({inner})"
    if isinstance(e, Pow):
        inner = to_string(e.base)
        if _prec(e.base) < 5 or isinstance(e.base, Neg):
            inner = f"({inner})"
        return f"{inner}^{e.exponent}" if e.exponent >= 0 else f"{inner}^-{-e.exponent}"
    p = _PREC[type(e)]
    sym = {Add: "+", Sub: "-", Mul: "*", Div: "/"}[type(e)]
    left, right = to_string(e.left), to_string(e.right)
    if _prec(e.left) < p:
        left = f"({left})"
    if _prec(e.right) <= p:
        right = f"({right})"
    return f"{left} {sym} {right}"


# ---------------------------------------------------------------- evaluation

def evaluate(e: Expr, point) -> float:
    """Value at a jet point (anything with ``x``, ``order`` and ``coordinate``)."""
    if order(e) > point.order:
        raise OrderExceeded(f"expression of order {order(e)} on a jet of order {point.order}")
    return float(_eval(e, point))


def _eval(e: Expr, point):
    if isinstance(e, Num):
        return float(e.value)
    if isinstance(e, Var):
        return float(point.x[e.index])
    if isinstance(e, Coord):
        return point.coordinate(e.alpha, e.i, e.deriv)
    if isinstance(e, Add):
        return _eval(e.left, point) + _eval(e.right, point)
    if isinstance(e, Sub):
        return _eval(e.left, point) - _eval(e.right, point)
    if isinstance(e, Mul):
        return _eval(e.left, point) * _eval(e.right, point)
    if isinstance(e, Div):
        return _eval(e.left, point) / _eval(e.right, point)
    if isinstance(e, Neg):
        return -_eval(e.operand, point)
    if isinstance(e, Pow):
        return _eval(e.base, point) ** e.exponent
    raise TypeError(type(e).__name__)


def _series(e: Expr, xs: Series, A: Series, cache: dict) -> Series:
    if e in cache:
        return cache[e]
    if isinstance(e, Num):
        out = Series.const(float(e.value), xs.sp)
    elif isinstance(e, Var):
        out = xs[e.index]
    elif isinstance(e, Coord):
        out = A[e.alpha, e.i]
        for j in e.deriv:
            out = out.d(j)
    elif isinstance(e, Add):
        out = _series(e.left, xs, A, cache) + _series(e.right, xs, A, cache)
    elif isinstance(e, Sub):
        out = _series(e.left, xs, A, cache) - _series(e.right, xs, A, cache)
    elif isinstance(e, Mul):
        out = _series(e.left, xs, A, cache) * _series(e.right, xs, A, cache)
    elif isinstance(e, Div):
        out = _series(e.left, xs, A, cache) / float(_const_value(e.right))
    elif isinstance(e, Neg):
        out = -_series(e.operand, xs, A, cache)
    elif isinstance(e, Pow):
        if e.exponent < 0:
            out = Series.const(float(_const_value(e)), xs.sp)
        else:
            out = _series(e.base, xs, A, cache) ** e.exponent
    else:
        raise TypeError(type(e).__name__)
    cache[e] = out
    return out


def _const_value(e: Expr) -> Fraction:
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Add):
        return _const_value(e.left) + _const_value(e.right)
    if isinstance(e, Sub):
        return _const_value(e.left) - _const_value(e.right)
    if isinstance(e, Mul):
        return _const_value(e.left) * _const_value(e.right)
    if isinstance(e, Div):
        return _const_value(e.left) / _const_value(e.right)
    if isinstance(e, Neg):
        return -_const_value(e.operand)
    if isinstance(e, Pow):
        return _const_value(e.base) ** e.exponent
    raise NonLiteralDenominator(f"{to_string(e)} is not constant")


# ---------------------------------------------------------------- calculus

def _plain_partial(e: Expr, var) -> Expr:
    """Ordinary derivative with respect to a Var or a stored Coord."""
    if isinstance(e, (Num,)):
        return ZERO
    if isinstance(e, (Var, Coord)):
        return ONE if e == var else ZERO
    if isinstance(e, Add):
        return add(_plain_partial(e.left, var), _plain_partial(e.right, var))
    if isinstance(e, Sub):
        return sub(_plain_partial(e.left, var), _plain_partial(e.right, var))
    if isinstance(e, Mul):
        return add(mul(_plain_partial(e.left, var), e.right), mul(e.left, _plain_partial(e.right, var)))
    if isinstance(e, Div):
        return div(_plain_partial(e.left, var), e.right)
    if isinstance(e, Neg):
        return neg(_plain_partial(e.operand, var))
    if isinstance(e, Pow):
        if e.exponent <= 0:
            return ZERO
        inner = _plain_partial(e.base, var)
        if inner == ZERO:
            return ZERO
        return mul(mul(Num(Fraction(e.exponent)), power(e.base, e.exponent - 1)), inner)
    raise TypeError(type(e).__name__)


def symmetric_weight(deriv) -> Fraction:
    """prod(m_v!) / q! for a derivative multiset with multiplicities m_v."""
    q = len(deriv)
    w = 1
    for v in set(deriv):
        w *= factorial(deriv.count(v))
    return Fraction(w, factorial(q))


def partial(e: Expr, c: Union[Coord, Var, tuple]) -> Expr:
    """Derivative with respect to a jet coordinate with the symmetrized-delta weight."""
    if isinstance(c, tuple):
        c = coord(*c[:2], *c[2]) if len(c) == 3 else coord(*c)
    if isinstance(c, Coord):
        c = Coord(c.alpha, c.i, tuple(sorted(c.deriv)))
        d = _plain_partial(e, c)
        w = symmetric_weight(c.deriv)
        return d if w == 1 else mul(Num(w), d)
    return _plain_partial(e, c)


def total_derivative_expr(e: Expr, i: int) -> Expr:
    """D_i e = d_i e + sum over stored coordinates of a_{j, K i} times the plain partial."""
    out = _plain_partial(e, Var(i))
    for c in sorted(coordinates(e), key=lambda c: (c.q, c.alpha, c.i, c.deriv)):
        if c.q + 1 > MAX_DERIV:
            raise OrderExceeded(f"total derivative of {to_string(c)} exceeds order {MAX_DERIV}")
        shifted = Coord(c.alpha, c.i, tuple(sorted(c.deriv + (i,))))
        out = add(out, mul(_plain_partial(e, c), shifted))
    return out


def expr_array(texts, dim: Optional[int] = None) -> np.ndarray:
    """Object array of parsed expressions with the nesting of ``texts``."""
    arr = np.asarray(texts, dtype=object)
    out = np.empty(arr.shape, dtype=object)
    for idx in np.ndindex(arr.shape):
        v = arr[idx]
        out[idx] = v if isinstance(v, Expr) else parse(str(v), dim)
    return out


def bracket_expr(c, X, Y) -> np.ndarray:
    """[X, Y]^a = c^a_{bg} X^b Y^g for Expr vectors (c is a Fraction array)."""
    dim = len(X)
    out = np.empty(dim, dtype=object)
    for a in range(dim):
        acc = ZERO
        for b in range(dim):
            for g in range(dim):
                cv = Fraction(c[a, b, g])
                if cv != 0 and X[b] != ZERO and Y[g] != ZERO:
                    acc = add(acc, mul(Num(cv), mul(X[b], Y[g])))
        out[a] = acc
    return out
