"""Symbolic differentiation, Jacobians and substitution."""

from __future__ import annotations

from typing import Mapping, Sequence

from .nodes import ONE, ZERO, Add, Const, Div, Expr, Func, Mul, Neg, Pow, Var
from .simplify import simplify


def _d(e: Expr, var: str) -> Expr:
    if var not in e.free_symbols():
        return ZERO
    if isinstance(e, Var):
        return ONE
    if isinstance(e, Neg):
        return Neg(_d(e.arg, var))
    if isinstance(e, Add):
        return Add(tuple(_d(t, var) for t in e.terms))
    if isinstance(e, Mul):
        terms = []
        for i, f in enumerate(e.factors):
            df = _d(f, var)
            if df == ZERO:
                continue
            terms.append(Mul(e.factors[:i] + (df,) + e.factors[i + 1:]))
        return Add(tuple(terms)) if len(terms) > 1 else terms[0]
    if isinstance(e, Div):
        n, d = e.num, e.den
        return Div(Add((Mul((_d(n, var), d)), Neg(Mul((n, _d(d, var)))))), Pow(d, 2))
    if isinstance(e, Pow):
        return Mul((Const(e.exp), Pow(e.base, e.exp - 1), _d(e.base, var)))
    if isinstance(e, Func):
        a = e.arg
        da = _d(a, var)
        if e.name == "exp":
            outer = e
        elif e.name == "ln":
            outer = Div(ONE, a)
        elif e.name == "sin":
            outer = Func("cos", a)
        elif e.name == "cos":
            outer = Neg(Func("sin", a))
        elif e.name == "tan":
            outer = Add((ONE, Pow(e, 2)))
        elif e.name == "sqrt":
            outer = Div(ONE, Mul((Const(2), e)))
        else:  # pragma: no cover - Func validates names
            raise ValueError(e.name)
        return Mul((outer, da))
    raise TypeError(f"not an expression node: {e!r}")


def diff(e: Expr, var: str) -> Expr:
    """Exact partial derivative of ``e`` with respect to ``var``, simplified."""
    return simplify(_d(e, var))


def jacobian(v: Sequence[Expr], vars: Sequence[str]) -> list[list[Expr]]:
    return [[diff(e, x) for x in vars] for e in v]


def substitute(e: Expr, mapping: Mapping[str, Expr]) -> Expr:
    """Replace variables by expressions (no simplification)."""
    if not mapping or not (e.free_symbols() & mapping.keys()):
        return e
    if isinstance(e, Var):
        return mapping.get(e.name, e)
    if isinstance(e, Neg):
        return Neg(substitute(e.arg, mapping))
    if isinstance(e, Add):
        return Add(tuple(substitute(t, mapping) for t in e.terms))
    if isinstance(e, Mul):
        return Mul(tuple(substitute(f, mapping) for f in e.factors))
    if isinstance(e, Div):
        return Div(substitute(e.num, mapping), substitute(e.den, mapping))
    if isinstance(e, Pow):
        return Pow(substitute(e.base, mapping), e.exp)
    if isinstance(e, Func):
        return Func(e.name, substitute(e.arg, mapping))
    return e


def determinant(m: Sequence[Sequence[Expr]]) -> Expr:
    """Cofactor expansion along the first row; meant for n <= 4."""
    n = len(m)
    if n == 1:
        return simplify(m[0][0])
    if n == 2:
        return simplify(Add((Mul((m[0][0], m[1][1])), Neg(Mul((m[0][1], m[1][0]))))))
    terms = []
    for j in range(n):
        if simplify(m[0][j]) == ZERO:
            continue
        minor = [row[:j] + row[j + 1:] for row in m[1:]]
        t = Mul((m[0][j], determinant(minor)))
        terms.append(t if j % 2 == 0 else Neg(t))
    if not terms:
        return ZERO
    return simplify(Add(tuple(terms)) if len(terms) > 1 else terms[0])


def adjugate(m: Sequence[Sequence[Expr]]) -> list[list[Expr]]:
    """Transpose of the cofactor matrix, so that ``adj(M) @ M = det(M) * I``."""
    n = len(m)
    if n == 1:
        return [[ONE]]
    adj = [[ZERO] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            minor = [row[:j] + row[j + 1:] for k, row in enumerate(m) if k != i]
            c = determinant(minor)
            adj[j][i] = c if (i + j) % 2 == 0 else simplify(Neg(c))
    return adj
