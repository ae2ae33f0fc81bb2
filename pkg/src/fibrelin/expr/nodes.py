"""Expression tree nodes and the infix printer.

Nodes are immutable and compare structurally, so they can be used as
dictionary keys and cached.  The printer emits text in the same grammar the
parser reads.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Union

FUNCTIONS = ("exp", "ln", "sin", "cos", "tan", "sqrt")

Number = Union[int, float, Fraction]


class Expr:
    """Base class for expression nodes."""

    __slots__ = ()

    def children(self) -> tuple["Expr", ...]:
        return ()

    def walk(self) -> Iterator["Expr"]:
        yield self
        for c in self.children():
            yield from c.walk()

    def free_symbols(self) -> frozenset[str]:
        return frozenset(n.name for n in self.walk() if isinstance(n, Var))

    def __str__(self) -> str:
        return to_text(self)

    # Operator sugar; results are unsimplified trees.
    def __add__(self, other: "Expr | Number") -> "Expr":
        return Add((self, as_expr(other)))

    def __radd__(self, other: Number) -> "Expr":
        return Add((as_expr(other), self))

    def __sub__(self, other: "Expr | Number") -> "Expr":
        return Add((self, Neg(as_expr(other))))

    def __rsub__(self, other: Number) -> "Expr":
        return Add((as_expr(other), Neg(self)))

    def __mul__(self, other: "Expr | Number") -> "Expr":
        return Mul((self, as_expr(other)))

    def __rmul__(self, other: Number) -> "Expr":
        return Mul((as_expr(other), self))

    def __truediv__(self, other: "Expr | Number") -> "Expr":
        return Div(self, as_expr(other))

    def __rtruediv__(self, other: Number) -> "Expr":
        return Div(as_expr(other), self)

    def __neg__(self) -> "Expr":
        return Neg(self)

    def __pow__(self, k: int) -> "Expr":
        return Pow(self, int(k))


@dataclass(frozen=True, slots=True, repr=False)
class Const(Expr):
    value: Fraction

    def __post_init__(self):
        if not isinstance(self.value, Fraction):
            object.__setattr__(self, "value", Fraction(self.value))

    def __repr__(self) -> str:
        return f"Const({self.value})"


@dataclass(frozen=True, slots=True, repr=False)
class Var(Expr):
    name: str

    def __repr__(self) -> str:
        return f"Var({self.name})"


@dataclass(frozen=True, slots=True, repr=False)
class Neg(Expr):
    arg: Expr

    def children(self):
        return (self.arg,)

    def __repr__(self) -> str:
        return f"Neg({self.arg!r})"


@dataclass(frozen=True, slots=True, repr=False)
class Add(Expr):
    terms: tuple[Expr, ...]

    def children(self):
        return self.terms

    def __repr__(self) -> str:
        return f"Add({', '.join(map(repr, self.terms))})"


@dataclass(frozen=True, slots=True, repr=False)
class Mul(Expr):
    factors: tuple[Expr, ...]

    def children(self):
        return self.factors

    def __repr__(self) -> str:
        return f"Mul({', '.join(map(repr, self.factors))})"


@dataclass(frozen=True, slots=True, repr=False)
class Div(Expr):
    num: Expr
    den: Expr

    def children(self):
        return (self.num, self.den)

    def __repr__(self) -> str:
        return f"Div({self.num!r}, {self.den!r})"


@dataclass(frozen=True, slots=True, repr=False)
class Pow(Expr):
    base: Expr
    exp: int

    def children(self):
        return (self.base,)

    def __repr__(self) -> str:
        return f"Pow({self.base!r}, {self.exp})"


@dataclass(frozen=True, slots=True, repr=False)
class Func(Expr):
    name: str
    arg: Expr

    def __post_init__(self):
        if self.name not in FUNCTIONS:
            raise ValueError(f"unknown function {self.name!r}")

    def children(self):
        return (self.arg,)

    def __repr__(self) -> str:
        return f"Func({self.name}, {self.arg!r})"


ZERO = Const(Fraction(0))
ONE = Const(Fraction(1))


def as_expr(x: "Expr | Number | str") -> Expr:
    if isinstance(x, Expr):
        return x
    if isinstance(x, str):
        return Var(x)
    if isinstance(x, float):
        # Shortest repr keeps decimal literals such as 0.1 exact.
        return Const(Fraction(repr(x)))
    return Const(Fraction(x))


def exp(x) -> Expr:
    return Func("exp", as_expr(x))


def ln(x) -> Expr:
    return Func("ln", as_expr(x))


def sin(x) -> Expr:
    return Func("sin", as_expr(x))


def cos(x) -> Expr:
    return Func("cos", as_expr(x))


def tan(x) -> Expr:
    return Func("tan", as_expr(x))


def sqrt(x) -> Expr:
    return Func("sqrt", as_expr(x))


# --- printing ---------------------------------------------------------------

_PREC_ADD, _PREC_MUL, _PREC_UNARY, _PREC_POW, _PREC_ATOM = 1, 2, 3, 4, 5


def _const_text(v: Fraction) -> str:
    if v.denominator == 1:
        return str(v.numerator)
    return f"{v.numerator}/{v.denominator}"


def _prec(e: Expr) -> int:
    if isinstance(e, Add):
        return _PREC_ADD
    if isinstance(e, (Mul, Div)):
        return _PREC_MUL
    if isinstance(e, Neg):
        return _PREC_UNARY
    if isinstance(e, Const):
        if e.value < 0:
            return _PREC_UNARY
        return _PREC_MUL if e.value.denominator != 1 else _PREC_ATOM
    if isinstance(e, Pow):
        return _PREC_POW
    return _PREC_ATOM


def _wrap(e: Expr, min_prec: int) -> str:
    s = to_text(e)
    return f"({s})" if _prec(e) < min_prec else s


def _is_negative_term(e: Expr) -> bool:
    if isinstance(e, Neg):
        return True
    if isinstance(e, Const):
        return e.value < 0
    if isinstance(e, Mul):
        return _is_negative_term(e.factors[0])
    if isinstance(e, Div):
        return _is_negative_term(e.num)
    return False


def _negate_for_print(e: Expr) -> Expr:
    if isinstance(e, Neg):
        return e.arg
    if isinstance(e, Const):
        return Const(-e.value)
    if isinstance(e, Div):
        return Div(_negate_for_print(e.num), e.den)
    assert isinstance(e, Mul)
    first, rest = e.factors[0], e.factors[1:]
    if first == Const(-1):
        return rest[0] if len(rest) == 1 else Mul(rest)
    return Mul((_negate_for_print(first),) + rest)


def to_text(e: Expr) -> str:
    """Render ``e`` in the parser's grammar."""
    if isinstance(e, Const):
        return _const_text(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Func):
        return f"{e.name}({to_text(e.arg)})"
    if isinstance(e, Neg):
        # A unary minus binds looser than '*' when re-parsed only at the
        # start of a factor, so products and quotients keep their shape.
        inner = e.arg
        if isinstance(inner, (Mul, Div)) and not _is_negative_term(inner):
            return "-" + to_text(inner)
        return "-" + _wrap(inner, _PREC_POW)
    if isinstance(e, Add):
        parts = [to_text(e.terms[0]) if not isinstance(e.terms[0], Add) else f"({to_text(e.terms[0])})"]
        for t in e.terms[1:]:
            if _is_negative_term(t):
                parts.append(" - " + _wrap(_negate_for_print(t), _PREC_MUL))
            else:
                parts.append(" + " + _wrap(t, _PREC_MUL))
        return "".join(parts)
    if isinstance(e, Mul):
        out = [_wrap(e.factors[0], _PREC_MUL)]
        for f in e.factors[1:]:
            # Right operands must bind tighter than '*' to survive left
            # associativity of a/b*c.
            out.append(_wrap(f, _PREC_POW))
        return "*".join(out)
    if isinstance(e, Div):
        return f"{_wrap(e.num, _PREC_MUL)}/{_wrap(e.den, _PREC_POW)}"
    if isinstance(e, Pow):
        return f"{_wrap(e.base, _PREC_ATOM)}^{e.exp}"
    raise TypeError(f"not an expression node: {e!r}")


_NUM_SPLIT = re.compile(r"(\d+)")


def natural_key(name: str) -> tuple:
    """Sort key ordering ``x2`` before ``x10``."""
    return tuple(int(p) if p.isdigit() else p for p in _NUM_SPLIT.split(name))
