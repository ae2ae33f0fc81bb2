"""Normal-form coordinates, linearising feedback and coordinate completion."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import CompletionFailed, DimensionError, DomainError, RankDeficient
from .expr import Expr, Var, compile_exprs, jacobian, simplify, to_text
from .lie import RelativeDegreeResult, iterated_lie, relative_degree
from .linalg import LU
from .system import SystemDef

DET_TOL = 1e-9


@dataclass(frozen=True)
class LinearQuotient:
    """Brunovsky chain ``z' = A z + b v``."""

    A: np.ndarray
    b: np.ndarray

    @property
    def r(self) -> int:
        return self.A.shape[0]

    def __call__(self, z, v: float) -> np.ndarray:
        return self.A @ np.asarray(z, dtype=float) + self.b * v


def quotient_linear(r: int) -> LinearQuotient:
    if r < 1:
        raise ValueError("r must be at least 1")
    A = np.eye(r, k=1)
    b = np.zeros(r)
    b[-1] = 1.0
    return LinearQuotient(A, b)


@dataclass(frozen=True)
class NormalForm:
    r: int
    states: tuple[str, ...]
    input: str
    phi: tuple[Expr, ...]
    alpha: Expr
    beta: Expr
    complement: tuple[Expr, ...]
    lam: tuple[Expr, ...]
    J_lambda: list[list[Expr]]
    min_abs_det: float
    det_at_point: float
    relative_degree: RelativeDegreeResult
    completion_source: str = "supplied"
    operating_point: dict[str, float] = field(default_factory=dict)

    @property
    def n(self) -> int:
        return len(self.states)

    @property
    def quotient(self) -> LinearQuotient:
        return quotient_linear(self.r)

    def feedback(self) -> Expr:
        """``Psi(x, u) = alpha(x) + beta(x) u`` as an expression."""
        return simplify(self.alpha + self.beta * Var(self.input))

    def inverse_feedback(self, v: Expr | float) -> Expr:
        """``u = (v - alpha) / beta`` as an expression."""
        return simplify((v - self.alpha) / self.beta)

    # Compiled evaluators, built lazily and shared.
    def phi_program(self):
        return compile_exprs(self.phi, self.states)

    def lambda_program(self):
        return compile_exprs(self.lam, self.states)

    def jacobian_program(self):
        return compile_exprs(tuple(e for row in self.J_lambda for e in row), self.states)

    def feedback_program(self):
        return compile_exprs((self.alpha, self.beta), self.states)

    def jacobian_at(self, x) -> np.ndarray:
        return self.jacobian_program()(x).reshape(self.n, self.n)

    def psi(self, x, u: float) -> float:
        a, b = self.feedback_program()(x)
        return a + b * u

    def psi_inverse(self, x, v: float) -> float:
        a, b = self.feedback_program()(x)
        return (v - a) / b

    def to_dict(self) -> dict:
        return {
            "r": self.r,
            "phi": [to_text(e) for e in self.phi],
            "psi": to_text(self.feedback()),
            "alpha": to_text(self.alpha),
            "beta": to_text(self.beta),
            "complement": [to_text(e) for e in self.complement],
            "completion_source": self.completion_source,
            "lambda": [to_text(e) for e in self.lam],
            "det_at_point": self.det_at_point,
            "min_abs_det": self.min_abs_det,
        }


def build_phi(sys: SystemDef, rd: RelativeDegreeResult) -> tuple[Expr, ...]:
    return tuple(simplify(iterated_lie(sys.f, sys.h, i, sys.states)) for i in range(rd.r))


def build_feedback(rd: RelativeDegreeResult) -> tuple[Expr, Expr]:
    return rd.alpha, rd.beta


def _jac_at(exprs: Sequence[Expr], states: Sequence[str], x: np.ndarray) -> np.ndarray:
    jac = jacobian(exprs, states)
    prog = compile_exprs(tuple(e for row in jac for e in row), tuple(states))
    return prog(x).reshape(len(exprs), len(states))


def _smallest_sv(m: np.ndarray) -> float:
    return float(np.linalg.svd(m, compute_uv=False)[-1])


def complete_coordinates(sys: SystemDef, phi: Sequence[Expr],
                         point: Mapping[str, float] | None = None) -> tuple[Expr, ...]:
    """Choose ``n - r`` functions that complete ``phi`` to local coordinates.

    Uses ``sys.complement`` when supplied.  Otherwise state coordinates are
    added greedily, each time taking the one that maximises the smallest
    singular value of the stacked Jacobian (lowest index wins ties).
    """
    states = sys.states
    n, r = sys.n, len(phi)
    point = dict(point if point is not None else sys.operating_point)
    x = np.array([point[s] for s in states], dtype=float)
    jphi = _jac_at(phi, states, x)
    if r and np.linalg.matrix_rank(jphi, tol=DET_TOL) < r:
        raise RankDeficient(f"Jacobian of phi has rank < {r} at {point}")
    if sys.complement is not None:
        comp = tuple(sys.complement)
        if len(comp) != n - r:
            raise DimensionError(f"complement has {len(comp)} functions, need n - r = {n - r}")
        d = LU(np.vstack([jphi, _jac_at(comp, states, x)])).det if comp else LU(jphi).det
        if abs(d) <= DET_TOL:
            raise CompletionFailed(f"supplied complement gives det J = {d:.3e} at {point}")
        return comp
    if r == n:
        return ()
    rows = [jphi]
    chosen: list[int] = []
    eye = np.eye(n)
    for _ in range(n - r):
        best_i, best_s = -1, -1.0
        for i in range(n):
            if i in chosen:
                continue
            s = _smallest_sv(np.vstack(rows + [eye[i:i + 1]]))
            if s > best_s + 1e-12:
                best_i, best_s = i, s
        chosen.append(best_i)
        rows.append(eye[best_i:best_i + 1])
    if abs(LU(np.vstack(rows)).det) <= DET_TOL:
        best = None
        for combo in itertools.combinations(range(n), n - r):
            d = abs(LU(np.vstack([jphi, eye[list(combo)]])).det)
            if d > DET_TOL and (best is None or d > best[0] + 1e-12):
                best = (d, combo)
        if best is None:
            raise CompletionFailed(f"no coordinate completion is nonsingular at {point}")
        chosen = list(best[1])
    return tuple(Var(states[i]) for i in chosen)


@dataclass
class DiffeomorphismReport:
    min_abs_det: float
    argmin: dict[str, float]
    samples: int
    flagged: list[dict] = field(default_factory=list)
    domain_errors: list[dict] = field(default_factory=list)
    tol: float = DET_TOL

    @property
    def ok(self) -> bool:
        return not self.flagged and self.min_abs_det > self.tol

    def to_dict(self) -> dict:
        return {"min_abs_det": self.min_abs_det, "argmin": self.argmin, "samples": self.samples,
                "flagged": len(self.flagged), "domain_errors": len(self.domain_errors),
                "tol": self.tol, "pass": self.ok}


def check_diffeomorphism(lam: Sequence[Expr], states: Sequence[str], box=(-2.0, 2.0),
                         samples: int = 100, seed: int = 0,
                         extra_points: Sequence[Sequence[float]] = ()) -> DiffeomorphismReport:
    """Sample ``det J_Lambda`` over a box and report its smallest magnitude."""
    states = tuple(states)
    n = len(states)
    jac = jacobian(lam, states)
    prog = compile_exprs(tuple(e for row in jac for e in row), states)
    rng = np.random.default_rng(seed)
    pts = [np.asarray(p, dtype=float) for p in extra_points]
    pts += list(rng.uniform(box[0], box[1], size=(samples, n)))
    best, arg = np.inf, None
    flagged, errors = [], []
    for x in pts:
        where = dict(zip(states, map(float, x)))
        try:
            J = prog(x).reshape(n, n)
        except DomainError as err:
            errors.append({"point": where, "error": str(err)})
            continue
        d = abs(LU(J).det)
        if d < best:
            best, arg = d, where
        if d <= DET_TOL:
            flagged.append({"point": where, "det": d})
    return DiffeomorphismReport(float(best), arg or {}, len(pts), flagged, errors)


def build_normal_form(sys: SystemDef, point: Mapping[str, float] | None = None,
                      rd: RelativeDegreeResult | None = None) -> NormalForm:
    point = dict(point if point is not None else sys.operating_point)
    if rd is None:
        rd = relative_degree(sys, point)
    phi = build_phi(sys, rd)
    alpha, beta = build_feedback(rd)
    comp = complete_coordinates(sys, phi, point)
    lam = tuple(phi) + tuple(comp)
    J = jacobian(lam, sys.states)
    x = np.array([point[s] for s in sys.states], dtype=float)
    det = LU(compile_exprs(tuple(e for row in J for e in row), sys.states)(x).reshape(sys.n, sys.n)).det
    if abs(det) < DET_TOL:
        raise CompletionFailed(f"det J_Lambda = {det:.3e} at the operating point")
    return NormalForm(
        r=rd.r, states=sys.states, input=sys.input, phi=phi, alpha=alpha, beta=beta,
        complement=comp, lam=lam, J_lambda=J, min_abs_det=abs(det), det_at_point=det,
        relative_degree=rd,
        completion_source="supplied" if sys.complement is not None else "heuristic",
        operating_point=point,
    )
