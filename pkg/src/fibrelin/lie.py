"""Lie derivatives and relative degree."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .errors import Degenerate, NoRelativeDegree
from .expr import Add, Expr, Mul, ZeroVerdict, diff, evaluate, is_zero, simplify
from .system import SystemDef

BETA_TOL = 1e-9


def lie_derivative(X: Sequence[Expr], h: Expr, states: Sequence[str]) -> Expr:
    """Directional derivative of ``h`` along the vector field ``X``."""
    terms = [Mul((diff(h, x), Xi)) for x, Xi in zip(states, X)]
    return simplify(Add(tuple(terms)) if len(terms) > 1 else terms[0])


def iterated_lie(X: Sequence[Expr], h: Expr, k: int, states: Sequence[str]) -> Expr:
    if k < 0:
        raise ValueError("k must be non-negative")
    out = h
    for _ in range(k):
        out = lie_derivative(X, out, states)
    return out


@dataclass
class RelativeDegreeResult:
    r: int
    alpha: Expr  # L_f^r h
    beta: Expr  # L_g L_f^(r-1) h
    certificates: list[ZeroVerdict] = field(default_factory=list)
    beta_at_point: float = 0.0


def relative_degree(sys: SystemDef, point: Mapping[str, float] | None = None,
                    tol: float = BETA_TOL, box=(-2.0, 2.0), samples: int = 20) -> RelativeDegreeResult:
    """Smallest ``r`` with ``L_g L_f^(r-1) h`` nonzero at ``point``.

    Each ``L_g L_f^k h`` for ``k < r - 1`` must vanish identically, certified
    by :func:`is_zero` (symbolically or on a sample box).
    """
    point = dict(point if point is not None else sys.operating_point)
    states = sys.states
    trail: list[ZeroVerdict] = []
    lf = sys.h
    for k in range(sys.n):
        lglf = lie_derivative(sys.g, lf, states)
        verdict = is_zero(lglf, box=box, n=samples, tol=tol, variables=states)
        if not verdict.is_zero:
            beta_val = evaluate(lglf, point)
            if abs(beta_val) <= tol:
                raise Degenerate(
                    f"L_g L_f^{k} h = {lglf} is not identically zero but vanishes at the "
                    f"operating point ({beta_val:.3e}); relative degree is not defined there")
            alpha = lie_derivative(sys.f, lf, states)
            return RelativeDegreeResult(k + 1, alpha, lglf, trail, beta_val)
        trail.append(verdict)
        lf = lie_derivative(sys.f, lf, states)
    raise NoRelativeDegree(f"L_g L_f^k h vanishes for every k < {sys.n}", trail)
