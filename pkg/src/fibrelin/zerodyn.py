"""Horizontally lifted linear dynamics and the zero-dynamics vector field.

The zero dynamics are the vertical residual ``F(x, u) - Hor_x(A Phi(x) + b Psi(x, u))``:
the part of the motion that stays inside a fibre of ``Phi``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .connection import horizontal_lift_symbolic
from .errors import ConstraintNotExplicit, PreconditionError, SingularJacobian
from .expr import (Const, Expr, Var, compile_exprs, diff, simplify, substitute)
from .lie import lie_derivative
from .linalg import LU
from .normal_form import DET_TOL, NormalForm
from .ode import InputSignal, integrate
from .system import SystemDef, total_dynamics

DRIFT_TOL = 1e-6


class LiftedSystem:
    """Compiled evaluators for ``F``, ``Phi``, ``Psi`` and the horizontal lift."""

    def __init__(self, sys: SystemDef, nf: NormalForm):
        self.sys = sys
        self.nf = nf
        self.n, self.r = nf.n, nf.r
        self.quotient = nf.quotient
        self.F_exprs = total_dynamics(sys)
        self._f = compile_exprs(sys.f, sys.states)
        self._g = compile_exprs(sys.g, sys.states)
        self._phi = nf.phi_program()
        self._jac = nf.jacobian_program()
        self._fb = nf.feedback_program()

    def F(self, x, u: float) -> np.ndarray:
        return self._f(x) + self._g(x) * u

    def phi(self, x) -> np.ndarray:
        return self._phi(x)

    def psi(self, x, u: float) -> float:
        a, b = self._fb(x)
        return a + b * u

    def psi_inverse(self, x, v: float) -> float:
        a, b = self._fb(x)
        return (v - a) / b

    def output_zeroing_input(self, x) -> float:
        a, b = self._fb(x)
        return -a / b

    def factor(self, x, time: float | None = None) -> tuple[np.ndarray, LU]:
        J = self._jac(x).reshape(self.n, self.n)
        lu = LU(J)
        det = lu.det
        if not np.isfinite(det) or abs(det) <= DET_TOL * float(np.max(np.linalg.norm(J, axis=1))):
            raise SingularJacobian(det, dict(zip(self.nf.states, np.asarray(x).tolist())), time)
        return J, lu

    def lift(self, x, Y, time: float | None = None) -> np.ndarray:
        _, lu = self.factor(x, time)
        rhs = np.zeros(self.n)
        rhs[: self.r] = Y
        return lu.solve(rhs)

    def lifted_v(self, x, v: float, time: float | None = None) -> np.ndarray:
        """``Hor_x(A Phi(x) + b v)``."""
        return self.lift(x, self.quotient(self._phi(x), v), time)

    def lifted(self, x, u: float, time: float | None = None) -> np.ndarray:
        return self.lifted_v(x, self.psi(x, u), time)

    def zero(self, x, u: float, time: float | None = None) -> np.ndarray:
        return self.F(x, u) - self.lifted(x, u, time)

    def project(self, x, X) -> np.ndarray:
        return self._jac(x).reshape(self.n, self.n)[: self.r] @ np.asarray(X, dtype=float)


def _vec(nf: NormalForm, point) -> np.ndarray:
    if isinstance(point, Mapping):
        return np.array([float(point[s]) for s in nf.states])
    return np.asarray(point, dtype=float)


def lifted_dynamics(sys: SystemDef, nf: NormalForm, point, u: float) -> np.ndarray:
    """``Hor_x(f~(Phi(x), Psi(x, u)))`` at one point."""
    return LiftedSystem(sys, nf).lifted(_vec(nf, point), u)


def zero_dynamics_at(sys: SystemDef, nf: NormalForm, point, u: float) -> np.ndarray:
    """``F(x, u)`` minus the lifted linear dynamics at one point."""
    return LiftedSystem(sys, nf).zero(_vec(nf, point), u)


def lifted_dynamics_symbolic(sys: SystemDef, nf: NormalForm) -> tuple[Expr, ...] | None:
    Y = [nf.phi[i + 1] for i in range(nf.r - 1)] + [nf.feedback()]
    return horizontal_lift_symbolic(nf, Y)


def zero_dynamics_symbolic(sys: SystemDef, nf: NormalForm) -> tuple[Expr, ...] | None:
    """Closed-form zero dynamics in states and input, or ``None`` if too large."""
    lifted = lifted_dynamics_symbolic(sys, nf)
    if lifted is None:
        return None
    return tuple(simplify(F - L) for F, L in zip(total_dynamics(sys), lifted))


def solve_zero_fibre(nf: NormalForm) -> dict[str, Expr]:
    """Solve ``Phi(x) = 0`` for ``r`` states by explicit coordinate substitution.

    Each component must be affine, with a constant nonzero coefficient, in a
    state not yet solved for.
    """
    solved: dict[str, Expr] = {}
    for comp in nf.phi:
        e = simplify(substitute(comp, solved))
        if isinstance(e, Const):
            raise ConstraintNotExplicit(f"component {comp} of Phi reduces to the constant {e} on the zero fibre")
        for s in nf.states:
            if s in solved or s not in e.free_symbols():
                continue
            c = diff(e, s)
            if not isinstance(c, Const) or c.value == 0:
                continue
            rest = simplify(e - c * Var(s))
            if s in rest.free_symbols():
                continue
            value = simplify(-rest / c)
            solved = {k: simplify(substitute(v, {s: value})) for k, v in solved.items()}
            solved[s] = value
            break
        else:
            raise ConstraintNotExplicit(f"cannot solve {comp} = 0 for a single state explicitly")
    return solved


@dataclass(frozen=True)
class FibreRestriction:
    """Zero dynamics on ``Phi = 0`` written in the complement coordinates."""

    solved: dict[str, Expr]
    free_states: tuple[str, ...]
    field: tuple[Expr, ...]  # d/dt of each complement coordinate along f^Z, on Phi = 0
    state_field: tuple[Expr, ...] = field(default=())  # f^Z components of the free states on Phi = 0

    def __iter__(self):
        return iter(self.field)

    def __len__(self) -> int:
        return len(self.field)


def restrict_to_zero_fibre(sys: SystemDef, nf: NormalForm,
                           fz: Sequence[Expr] | None = None) -> FibreRestriction:
    if fz is None:
        fz = zero_dynamics_symbolic(sys, nf)
    if fz is None:
        raise PreconditionError("symbolic zero dynamics are not available for this system")
    solved = solve_zero_fibre(nf)
    free = tuple(s for s in nf.states if s not in solved)
    field_exprs = tuple(simplify(substitute(lie_derivative(fz, lam, nf.states), solved))
                        for lam in nf.complement)
    idx = {s: i for i, s in enumerate(nf.states)}
    state_field = tuple(simplify(substitute(fz[idx[s]], solved)) for s in free)
    return FibreRestriction(solved, free, field_exprs, state_field)


@dataclass
class ConstrainedComparison:
    x0: list[float]
    t_end: float
    dt: float
    max_discrepancy: float
    max_output_drift: float
    final_full: list[float]
    final_zero: list[float]
    warnings: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "x0": self.x0, "t_end": self.t_end, "dt": self.dt,
            "max_discrepancy": self.max_discrepancy, "max_output_drift": self.max_output_drift,
            "final_full": self.final_full, "final_zero": self.final_zero, "warnings": self.warnings,
        }


def compare_with_constrained_definition(sys: SystemDef, nf: NormalForm, x0, t_end: float = 1.0,
                                        dt: float = 1e-3, tol: float = 1e-9) -> ConstrainedComparison:
    """Output-zeroing closed loop versus the zero-dynamics field from the same start.

    The closed loop uses ``u = -alpha/beta`` so that ``v = 0``; the zero
    dynamics are integrated with the same input.  ``x0`` must lie on
    ``Phi = 0``.
    """
    ls = LiftedSystem(sys, nf)
    x0 = _vec(nf, x0)
    if np.max(np.abs(ls.phi(x0))) > tol:
        raise PreconditionError(f"x0 is not on the zero fibre: Phi(x0) = {ls.phi(x0).tolist()}")

    def closed_loop(x, _u, t):
        return ls.F(x, ls.output_zeroing_input(x))

    def zero_field(x, _u, t):
        return ls.zero(x, ls.output_zeroing_input(x), t)

    full = integrate(closed_loop, x0, 0.0, t_end, dt, names=nf.states)
    zero = integrate(zero_field, x0, 0.0, t_end, dt, names=nf.states)
    drift = max(float(np.max(np.abs(ls.phi(x)))) for x in full.states)
    warnings = []
    if drift > DRIFT_TOL:
        warnings.append(f"output drifted off the zero fibre: max |Phi(x(t))| = {drift:.3e}")
    disc = float(np.max(np.abs(full.states - zero.states)))
    return ConstrainedComparison(x0.tolist(), t_end, dt, disc, drift, full.final.tolist(),
                                 zero.final.tolist(), warnings)


@dataclass(frozen=True)
class ZeroDynamics:
    symbolic: tuple[Expr, ...] | None
    fibre_restricted: FibreRestriction | None
    system: LiftedSystem

    def __call__(self, point, u: float) -> np.ndarray:
        return self.system.zero(_vec(self.system.nf, point), u)


def zero_dynamics(sys: SystemDef, nf: NormalForm) -> ZeroDynamics:
    """Bundle the symbolic form (when available), its fibre restriction and a numeric evaluator."""
    fz = zero_dynamics_symbolic(sys, nf)
    restricted = None
    if fz is not None:
        try:
            restricted = restrict_to_zero_fibre(sys, nf, fz)
        except ConstraintNotExplicit:
            restricted = None
    return ZeroDynamics(fz, restricted, LiftedSystem(sys, nf))
