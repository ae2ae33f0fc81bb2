"""Expression simplification.

Expressions are expanded into a sum of monomials over *atoms* (variables,
function calls, and irreducible sums appearing in denominators or in large
powers), like terms are collected with exact rational coefficients, and the
result is rebuilt with a common monomial factor pulled out.  This is not a
canonical form: ``exp(a)*exp(b)`` and ``exp(a+b)`` stay distinct, as do
rational functions that only agree after cross-multiplication.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache

from .nodes import Add, Const, Div, Expr, Func, Mul, Neg, Pow, Var, natural_key, to_text

# Sums raised to a power above this stay as atoms instead of being expanded.
MAX_EXPAND_POWER = 8

Monomial = tuple  # tuple[(atom, int), ...] sorted by atom key
Poly = dict  # Monomial -> Fraction

_EXACT_FUNC_VALUES = {
    ("exp", Fraction(0)): Fraction(1),
    ("ln", Fraction(1)): Fraction(0),
    ("sin", Fraction(0)): Fraction(0),
    ("cos", Fraction(0)): Fraction(1),
    ("tan", Fraction(0)): Fraction(0),
    ("sqrt", Fraction(0)): Fraction(0),
    ("sqrt", Fraction(1)): Fraction(1),
}


def _atom_key(a: Expr) -> tuple:
    if isinstance(a, Var):
        return (0, natural_key(a.name))
    if isinstance(a, Func):
        return (1, a.name, to_text(a.arg))
    return (2, to_text(a))


def _mono_key(m: Monomial) -> tuple:
    degree = sum(abs(p) for _, p in m)
    return (degree, tuple((_atom_key(a), p) for a, p in m))


def _mono(items: dict) -> Monomial:
    return tuple(sorted(((a, p) for a, p in items.items() if p != 0), key=lambda t: _atom_key(t[0])))


def _mono_mul(m1: Monomial, m2: Monomial) -> Monomial:
    acc = dict(m1)
    for a, p in m2:
        acc[a] = acc.get(a, 0) + p
    return _mono(acc)


def _mono_pow(m: Monomial, k: int) -> Monomial:
    return tuple((a, p * k) for a, p in m)


def _const(c) -> Poly:
    c = Fraction(c)
    return {(): c} if c != 0 else {}


def _add(p: Poly, q: Poly) -> Poly:
    out = dict(p)
    for m, c in q.items():
        s = out.get(m, 0) + c
        if s == 0:
            out.pop(m, None)
        else:
            out[m] = s
    return out


def _scale(p: Poly, c: Fraction) -> Poly:
    if c == 0:
        return {}
    return {m: v * c for m, v in p.items()}


def _mul(p: Poly, q: Poly) -> Poly:
    out: Poly = {}
    for m1, c1 in p.items():
        for m2, c2 in q.items():
            m = _mono_mul(m1, m2)
            s = out.get(m, 0) + c1 * c2
            if s == 0:
                out.pop(m, None)
            else:
                out[m] = s
    return out


def _mono_poly(m: Monomial, c=Fraction(1)) -> Poly:
    return {m: Fraction(c)}


def _sorted_terms(p: Poly) -> list:
    return sorted(p.items(), key=lambda t: _mono_key(t[0]))


def _common_monomial(p: Poly) -> Monomial:
    """Atoms shared by every term with same-sign powers, at the smallest magnitude."""
    terms = list(p)
    if len(terms) < 2:
        return ()
    first = dict(terms[0])
    common = {}
    for a, e in first.items():
        exps = [dict(m).get(a, 0) for m in terms]
        if all(x > 0 for x in exps):
            common[a] = min(exps)
        elif all(x < 0 for x in exps):
            common[a] = max(exps)
    return _mono(common)


def _content(p: Poly) -> tuple[Fraction, Monomial, Poly]:
    """Split a multi-term poly as coef * monomial * primitive sum (leading coefficient 1)."""
    g = _common_monomial(p)
    lead_m, lead_c = _sorted_terms(p)[0]
    inv_g = _mono_pow(g, -1)
    prim = {_mono_mul(m, inv_g): c / lead_c for m, c in p.items()}
    return lead_c, g, prim


def _sum_atom_power(p: Poly, k: int) -> Poly:
    """``p**k`` keeping the primitive sum of ``p`` as an atom."""
    if not p:
        return {((Const(0), k),): Fraction(1)}
    c, g, prim = _content(p)
    if len(prim) == 1:
        (m, v), = prim.items()
        return {_mono_pow(_mono_mul(g, m), k): (c * v) ** k}
    atom = _from_poly_plain(prim)
    return {_mono_mul(_mono_pow(g, k), ((atom, k),)): c ** k}


def _pow(p: Poly, k: int) -> Poly:
    if k == 0:
        return _const(1)
    if len(p) == 1:
        (m, c), = p.items()
        return {_mono_pow(m, k): c ** k}
    if 0 < k <= MAX_EXPAND_POWER:
        out = p
        for _ in range(k - 1):
            out = _mul(out, p)
        return out
    return _sum_atom_power(p, k)


def _inverse(den: Expr) -> Poly:
    """Poly of ``1/den``, keeping powers and products of sums unexpanded."""
    if isinstance(den, Mul):
        out = _const(1)
        for f in den.factors:
            out = _mul(out, _inverse(f))
        return out
    if isinstance(den, Pow):
        base = to_poly(den.base)
        return _sum_atom_power(base, -den.exp) if len(base) != 1 else _pow(base, -den.exp)
    p = to_poly(den)
    return _pow(p, -1) if len(p) == 1 else _sum_atom_power(p, -1)


def _cancel_sum_denominators(p: Poly) -> Poly:
    """Collapse ``(k*S**j) / S**e`` when every term shares the denominator sum ``S``."""
    changed = True
    while changed and len(p) > 1:
        changed = False
        common = _common_monomial(p)
        for a, e in common:
            if e >= 0 or not isinstance(a, Add):
                continue
            rest = tuple((b, f) for b, f in common if b != a)
            strip = _mono_mul(_mono_pow(rest, -1), ((a, -e),))
            inner = {_mono_mul(m, strip): c for m, c in p.items()}
            base = to_poly(a)
            for j in range(min(-e, MAX_EXPAND_POWER), 0, -1):
                target = _pow(base, j)
                if inner.keys() != target.keys():
                    continue
                ratios = {inner[m] / target[m] for m in target}
                if len(ratios) == 1:
                    p = {_mono_mul(rest, ((a, e + j),)): ratios.pop()}
                    changed = True
                    break
            if changed:
                break
    return p


def to_poly(e: Expr) -> Poly:
    if isinstance(e, Const):
        return _const(e.value)
    if isinstance(e, Var):
        return _mono_poly(((e, 1),))
    if isinstance(e, Neg):
        return _scale(to_poly(e.arg), Fraction(-1))
    if isinstance(e, Add):
        out: Poly = {}
        for t in e.terms:
            out = _add(out, to_poly(t))
        return _cancel_sum_denominators(out)
    if isinstance(e, Mul):
        out = _const(1)
        for f in e.factors:
            out = _mul(out, to_poly(f))
            if not out:
                return out
        return _cancel_sum_denominators(out)
    if isinstance(e, Div):
        num = to_poly(e.num)
        if not num:
            return {}
        return _cancel_sum_denominators(_mul(num, _inverse(e.den)))
    if isinstance(e, Pow):
        base = to_poly(e.base)
        if not base and e.exp > 0:
            return {}
        if not base and e.exp < 0:
            return _sum_atom_power(base, e.exp)
        return _pow(base, e.exp)
    if isinstance(e, Func):
        arg = simplify(e.arg)
        if isinstance(arg, Const):
            exact = _EXACT_FUNC_VALUES.get((e.name, arg.value))
            if exact is not None:
                return _const(exact)
        return _mono_poly(((Func(e.name, arg), 1),))
    raise TypeError(f"not an expression node: {e!r}")


def _factor_expr(a: Expr, p: int) -> Expr:
    return a if p == 1 else Pow(a, p)


def _product(factors: list[Expr]) -> Expr:
    if not factors:
        return Const(1)
    if len(factors) == 1:
        return factors[0]
    flat = []
    for f in factors:
        flat.extend(f.factors if isinstance(f, Mul) else (f,))
    return Mul(tuple(flat))


def _term_expr(c: Fraction, m: Monomial, extra: Expr | None = None) -> Expr:
    if not m and extra is None:
        return Const(c)
    num_factors = [_factor_expr(a, p) for a, p in m if p > 0]
    if extra is not None:
        num_factors.append(extra)
    den_factors = [_factor_expr(a, -p) for a, p in m if p < 0]
    negative = c < 0
    c = abs(c)
    if c.numerator != 1 or not num_factors:
        num_factors.insert(0, Const(c.numerator))
    if c.denominator != 1:
        den_factors.insert(0, Const(c.denominator))
    body = _product(num_factors)
    if den_factors:
        body = Div(body, _product(den_factors))
    if negative:
        if isinstance(body, Const):
            return Const(-body.value)
        if isinstance(body, Mul) and isinstance(body.factors[0], Const):
            return Mul((Const(-body.factors[0].value),) + body.factors[1:])
        return Neg(body)
    return body


def _from_poly_plain(p: Poly) -> Expr:
    if not p:
        return Const(0)
    terms = [_term_expr(c, m) for m, c in _sorted_terms(p)]
    return terms[0] if len(terms) == 1 else Add(tuple(terms))


def from_poly(p: Poly) -> Expr:
    """Rebuild an expression, pulling out a shared monomial factor when present."""
    if len(p) < 2:
        return _from_poly_plain(p)
    g = _common_monomial(p)
    if not g:
        return _from_poly_plain(p)
    inv_g = _mono_pow(g, -1)
    inner = {_mono_mul(m, inv_g): c for m, c in p.items()}
    sign = Fraction(1)
    if _sorted_terms(inner)[0][1] < 0:
        sign = Fraction(-1)
        inner = _scale(inner, sign)
    return _term_expr(sign, g, extra=_from_poly_plain(inner))


@lru_cache(maxsize=65536)
def simplify(e: Expr) -> Expr:
    """Return a simplified, structurally deterministic form of ``e``.

    Folds constants, applies the 0/1 identities, flattens nested sums and
    products, expands products of sums and cancels like terms.
    """
    return from_poly(to_poly(e))
