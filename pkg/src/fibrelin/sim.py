"""Trajectory-level checks: projection of lifted trajectories, curve lifts, fibre invariance."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import PreconditionError, SingularJacobian
from .normal_form import NormalForm
from .ode import InputSignal, Trajectory, integrate
from .system import SystemDef
from .zerodyn import LiftedSystem

__all__ = [
    "InputSignal", "Trajectory", "integrate", "ProjectionReport", "verify_projection",
    "integrate_linear", "lift_curve", "fibre_invariance", "simulate",
]


@dataclass
class ProjectionReport:
    max_error: float
    t_end: float
    dt: float
    mode: str
    lifted: Trajectory
    quotient: Trajectory

    def to_dict(self) -> dict:
        return {"max_error": self.max_error, "t_end": self.t_end, "dt": self.dt, "mode": self.mode}


def integrate_linear(nf: NormalForm, z0: Sequence[float], v_sig, t_end: float, dt: float) -> Trajectory:
    q = nf.quotient
    names = tuple(f"z{i + 1}" for i in range(nf.r))
    return integrate(lambda z, v, t: q(z, v), z0, v_sig, t_end, dt, names=names)


def verify_projection(sys: SystemDef, nf: NormalForm, x0, v_sig="sin(t)", t_end: float = 1.0,
                      dt: float = 1e-3, mode: str = "lifted") -> ProjectionReport:
    """Integrate the lifted system and the linear quotient side by side.

    In ``lifted`` mode the state follows ``Hor(f~(Phi, Psi))`` with the input
    ``u = Psi^-1(x, v)``; in ``full`` mode it follows the original dynamics
    with the same input.  The report holds ``max_t |Phi(x(t)) - z(t)|``.
    """
    ls = LiftedSystem(sys, nf)
    x0 = np.asarray(x0, dtype=float)
    v_sig = v_sig if isinstance(v_sig, InputSignal) else InputSignal(v_sig)

    if mode == "lifted":
        def field(x, v, t):
            return ls.lifted(x, ls.psi_inverse(x, v), t)
    elif mode == "full":
        def field(x, v, t):
            return ls.F(x, ls.psi_inverse(x, v))
    else:
        raise ValueError(f"unknown mode {mode!r}")

    traj = integrate(field, x0, v_sig, t_end, dt, names=nf.states)
    quot = integrate_linear(nf, ls.phi(x0), v_sig, t_end, dt)
    err = max(float(np.max(np.abs(ls.phi(x) - z))) for x, z in zip(traj.states, quot.states))
    return ProjectionReport(err, t_end, dt, mode, traj, quot)


def lift_curve(nf: NormalForm, base_curve: Trajectory, x0, sys: SystemDef | None = None,
               tol: float = 1e-6) -> Trajectory:
    """Horizontally lift a sampled base curve starting from ``x0``.

    Base velocities come from finite differences of the samples: central at
    interior samples, one-sided (second order) at the ends, and the chord
    slope at half steps.
    """
    if sys is None:
        ls = None
        phi = nf.phi_program()
        jac = nf.jacobian_program()
    else:
        ls = LiftedSystem(sys, nf)
    x0 = np.asarray(x0, dtype=float)
    z = np.asarray(base_curve.states, dtype=float)
    t = np.asarray(base_curve.times, dtype=float)
    if z.shape[1] != nf.r:
        raise PreconditionError(f"base curve has {z.shape[1]} coordinates, expected r = {nf.r}")
    phi0 = ls.phi(x0) if ls else phi(x0)
    if np.max(np.abs(phi0 - z[0])) > tol:
        raise PreconditionError(f"Phi(x0) = {phi0.tolist()} does not match the base curve start {z[0].tolist()}")
    if len(t) < 2:
        return Trajectory(t.copy(), x0[None, :], np.zeros(1), nf.states)
    vel = np.gradient(z, t, axis=0, edge_order=2 if len(t) > 2 else 1)
    n = nf.n

    def hor(x, Y, time):
        if ls is not None:
            return ls.lift(x, Y, time)
        from .linalg import LU
        J = jac(x).reshape(n, n)
        lu = LU(J)
        if abs(lu.det) <= 1e-9 * float(np.max(np.linalg.norm(J, axis=1))):
            raise SingularJacobian(lu.det, dict(zip(nf.states, x.tolist())), time)
        rhs = np.zeros(n)
        rhs[: nf.r] = Y
        return lu.solve(rhs)

    states = np.empty((len(t), n))
    states[0] = x = x0
    for k in range(len(t) - 1):
        h = t[k + 1] - t[k]
        mid = (z[k + 1] - z[k]) / h
        k1 = hor(x, vel[k], t[k])
        k2 = hor(x + 0.5 * h * k1, mid, t[k] + 0.5 * h)
        k3 = hor(x + 0.5 * h * k2, mid, t[k] + 0.5 * h)
        k4 = hor(x + h * k3, vel[k + 1], t[k + 1])
        x = x + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        states[k + 1] = x
    return Trajectory(t.copy(), states, np.zeros(len(t)), nf.states)


def fibre_invariance(sys: SystemDef, nf: NormalForm, x0, u_sig=0.0, t_end: float = 1.0,
                     dt: float = 1e-3) -> tuple[float, Trajectory]:
    """Integrate the zero dynamics alone; return ``max_t |Phi(x(t)) - Phi(x0)|``."""
    ls = LiftedSystem(sys, nf)
    traj = integrate(lambda x, u, t: ls.zero(x, u, t), x0, u_sig, t_end, dt, names=nf.states)
    p0 = ls.phi(traj.states[0])
    drift = max(float(np.max(np.abs(ls.phi(x) - p0))) for x in traj.states)
    return drift, traj


def simulate(sys: SystemDef, nf: NormalForm | None, mode: str, x0, u_sig=0.0, t_end: float = 1.0,
             dt: float = 1e-3) -> Trajectory:
    """Integrate one of the four fields: ``full`` (F), ``lifted``, ``zero`` or ``linear``.

    ``lifted`` and ``linear`` take the transformed input ``v``; ``full`` and
    ``zero`` take ``u``.
    """
    x0 = np.asarray(x0, dtype=float)
    if mode == "full":
        if x0.size != sys.n:
            raise PreconditionError(f"x0 needs {sys.n} entries")
        from .expr import compile_exprs
        f = compile_exprs(sys.f, sys.states)
        g = compile_exprs(sys.g, sys.states)
        return integrate(lambda x, u, t: f(x) + g(x) * u, x0, u_sig, t_end, dt, names=sys.states)
    if nf is None:
        raise PreconditionError(f"mode {mode!r} needs the normal form")
    if mode == "linear":
        if x0.size != nf.r:
            raise PreconditionError(f"x0 needs r = {nf.r} entries in linear mode")
        return integrate_linear(nf, x0, u_sig, t_end, dt)
    if x0.size != sys.n:
        raise PreconditionError(f"x0 needs {sys.n} entries")
    ls = LiftedSystem(sys, nf)
    if mode == "lifted":
        return integrate(lambda x, v, t: ls.lifted_v(x, v, t), x0, u_sig, t_end, dt, names=sys.states)
    if mode == "zero":
        return integrate(lambda x, u, t: ls.zero(x, u, t), x0, u_sig, t_end, dt, names=sys.states)
    raise PreconditionError(f"unknown mode {mode!r}")
