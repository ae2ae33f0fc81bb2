"""Analysis and verification reports.

Every numeric claim is a :class:`Check`: an observed value, a tolerance and
the direction of the bound.  ``pass`` is always recomputed from those three,
never stored on its own.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from . import __version__
from .connection import connection_at, decompose, horizontal_lift
from .errors import DomainError, SingularJacobian
from .expr import compile_exprs, to_text
from .normal_form import DET_TOL, NormalForm, check_diffeomorphism
from .sim import fibre_invariance, verify_projection
from .system import SystemDef, is_projectable
from .zerodyn import LiftedSystem, zero_dynamics

DEFAULT_TOL = 1e-9
TRAJECTORY_TOL = 1e-6
STATE_BOX = (-2.0, 2.0)
INPUT_BOX = (-1.0, 1.0)
START_BOX = (-0.5, 0.5)
MAX_TRAJECTORIES = 3


def default_tolerance() -> float:
    """``FIBRELIN_TOL`` from the environment, else ``1e-9``."""
    raw = os.environ.get("FIBRELIN_TOL")
    if raw is None or raw.strip() == "":
        return DEFAULT_TOL
    try:
        tol = float(raw)
    except ValueError:
        raise ValueError(f"FIBRELIN_TOL must be a number, got {raw!r}") from None
    if not tol > 0:
        raise ValueError("FIBRELIN_TOL must be positive")
    return tol


@dataclass
class Check:
    observed: float
    tol: float
    bound: str = "upper"  # "upper": observed <= tol; "lower": observed > tol
    samples: int = 0
    skipped: int = 0

    @property
    def passed(self) -> bool:
        if not np.isfinite(self.observed):
            return False
        return self.observed <= self.tol if self.bound == "upper" else self.observed > self.tol

    def to_dict(self) -> dict:
        return {"observed": float(self.observed), "tol": float(self.tol), "bound": self.bound,
                "samples": self.samples, "skipped": self.skipped, "pass": self.passed}


class _Worst:
    """Running maximum (or minimum) of a residual over trials."""

    def __init__(self, bound: str = "upper"):
        self.bound = bound
        self.value = -np.inf if bound == "upper" else np.inf
        self.samples = 0
        self.skipped = 0

    def add(self, value: float) -> None:
        value = float(value)
        self.samples += 1
        if not np.isfinite(value):
            self.value = np.nan
        elif self.bound == "upper" and value > self.value:
            self.value = value
        elif self.bound == "lower" and value < self.value:
            self.value = value

    def check(self, tol: float) -> Check:
        value = self.value if self.samples else 0.0
        if self.bound == "lower" and not self.samples:
            value = np.inf
        return Check(value, tol, self.bound, self.samples, self.skipped)


def _inf(v) -> float:
    return float(np.max(np.abs(v))) if np.size(v) else 0.0


def _starts(sys: SystemDef, rng: np.random.Generator, count: int) -> list[np.ndarray]:
    base = sys.point_array()
    return [base + rng.uniform(*START_BOX, size=sys.n) for _ in range(count)]


# --- verification suites --------------------------------------------------------


def run_verification(sys: SystemDef, nf: NormalForm, trials: int = 100, seed: int = 0,
                     tol: float | None = None) -> dict:
    """Run the invariant suites with a seeded generator; return the report dict."""
    tol = default_tolerance() if tol is None else tol
    report = {"kind": "verification", "version": __version__, "system": sys.name,
              "seed": seed, "trials": trials, "tol": tol, "r": nf.r, "n": nf.n,
              "suites": {}, "diagnostics": [], "worst_residual": None, "pass": True}
    if trials <= 0:
        return report
    if nf.r == nf.n:
        report["diagnostics"].append(
            "r = n: the fibres of Phi are points, so the connection and zero-dynamics "
            "suites were skipped")
        return report

    rng = np.random.default_rng(seed)
    ls = LiftedSystem(sys, nf)
    n, r = nf.n, nf.r
    names = ("verticality", "lift_identity", "lift_linearity", "decomposition",
             "exact_split", "basis_nonsingular")
    worst = {k: _Worst("lower" if k == "basis_nonsingular" else "upper") for k in names}
    fz = zero_dynamics(sys, nf)
    sym_prog = (compile_exprs(fz.symbolic, nf.states + (nf.input,))
                if fz.symbolic is not None else None)
    if sym_prog is not None:
        worst["symbolic_agreement"] = _Worst()

    for _ in range(trials):
        x = rng.uniform(*STATE_BOX, size=n)
        u = float(rng.uniform(*INPUT_BOX))
        Y1 = rng.uniform(-1.0, 1.0, size=r)
        Y2 = rng.uniform(-1.0, 1.0, size=r)
        a, b = rng.uniform(-2.0, 2.0, size=2)
        X = rng.uniform(-1.0, 1.0, size=n)
        try:
            cp = connection_at(nf, x)
            F = ls.F(x, u)
            zero = ls.zero(x, u)
            lifted = ls.lifted(x, u)
        except (SingularJacobian, DomainError):
            for w in worst.values():
                w.skipped += 1
            continue
        J = cp.J
        worst["verticality"].add(_inf(J[:r] @ zero))
        worst["lift_identity"].add(_inf(cp.project(horizontal_lift(cp, Y1)) - Y1))
        worst["lift_linearity"].add(_inf(horizontal_lift(cp, a * Y1 + b * Y2)
                                         - a * horizontal_lift(cp, Y1)
                                         - b * horizontal_lift(cp, Y2)))
        Xh, Xv = decompose(cp, X)
        worst["decomposition"].add(max(_inf(Xh + Xv - X), _inf(J[:r] @ Xv), _inf(J[r:] @ Xh)))
        _, Fv = decompose(cp, F)
        worst["exact_split"].add(max(_inf(F - lifted - zero), _inf(Fv - zero)))
        worst["basis_nonsingular"].add(abs(np.linalg.det(np.hstack([cp.H_basis, cp.V_basis]))))
        if sym_prog is not None:
            worst["symbolic_agreement"].add(_inf(sym_prog(np.append(x, u)) - zero))

    suites = {k: w.check(tol if k != "basis_nonsingular" else DET_TOL) for k, w in worst.items()}

    # Trajectory-level suites: a few seeded starts near the operating point.
    count = min(trials, MAX_TRAJECTORIES)
    proj, full, fibre = _Worst(), _Worst(), _Worst()
    for x0 in _starts(sys, rng, count):
        try:
            proj.add(verify_projection(sys, nf, x0, "sin(t)", mode="lifted").max_error)
            full.add(verify_projection(sys, nf, x0, "sin(t)", mode="full").max_error)
            fibre.add(fibre_invariance(sys, nf, x0, "0.5*sin(t)")[0])
        except (SingularJacobian, DomainError) as err:
            report["diagnostics"].append(f"trajectory from {x0.tolist()} skipped: {err}")
            proj.skipped += 1
    suites["projection"] = proj.check(TRAJECTORY_TOL)
    suites["projection_full"] = full.check(TRAJECTORY_TOL)
    suites["fibre_invariance"] = fibre.check(TRAJECTORY_TOL)

    # Projectability of F with the transformed input v held fixed.
    v_fixed = float(rng.uniform(*INPUT_BOX))
    verdict = is_projectable(lambda x: ls.F(x, ls.psi_inverse(x, v_fixed)), nf.phi, nf.states,
                             n_targets=min(trials, 3), seed=seed, tol=max(tol, 1e-7))
    suites["projectable_v_fixed"] = Check(verdict.max_discrepancy, verdict.tol, "upper",
                                          verdict.pairs)

    report["suites"] = {k: c.to_dict() for k, c in suites.items()}
    uppers = [(k, c) for k, c in suites.items() if c.bound == "upper" and c.samples]
    if uppers:
        k, c = max(uppers, key=lambda kc: kc[1].observed / kc[1].tol)
        report["worst_residual"] = {"suite": k, "observed": float(c.observed), "tol": c.tol}
    report["pass"] = all(c.passed for c in suites.values())
    return report


# --- analysis -----------------------------------------------------------------


def analysis_report(sys: SystemDef, nf: NormalForm, point: Mapping[str, float] | None = None,
                    seed: int = 0, tol: float | None = None, samples: int = 100) -> dict:
    """Pipeline summary: normal form, zero dynamics and three headline checks."""
    tol = default_tolerance() if tol is None else tol
    point = dict(point if point is not None else sys.operating_point)
    rd = nf.relative_degree
    diff_report = check_diffeomorphism(nf.lam, nf.states, STATE_BOX, samples, seed,
                                       extra_points=[[point[s] for s in nf.states]])
    report = {
        "kind": "analysis", "version": __version__, "system": sys.name,
        "states": list(sys.states), "input": sys.input, "point": point,
        "seed": seed, "tol": tol, "r": nf.r,
        "certificates": [c.to_dict() for c in rd.certificates],
        "beta_at_point": float(rd.beta_at_point),
        "phi": [to_text(e) for e in nf.phi],
        "psi": to_text(nf.feedback()),
        "alpha": to_text(nf.alpha),
        "beta": to_text(nf.beta),
        "complement": [to_text(e) for e in nf.complement],
        "completion_source": nf.completion_source,
        "lambda": [to_text(e) for e in nf.lam],
        "det_at_point": float(nf.det_at_point),
        "min_abs_det": Check(diff_report.min_abs_det, DET_TOL, "lower", diff_report.samples,
                             len(diff_report.domain_errors)).to_dict(),
        "zero_dynamics": None,
        "verification": {},
        "diagnostics": [],
        "pass": True,
    }
    if nf.r == nf.n:
        report["diagnostics"].append(
            "r = n: the fibres of Phi are points; zero dynamics and fibre checks skipped")
    else:
        zd = zero_dynamics(sys, nf)
        zsec = {"symbolic": None, "depends_on_input": None, "fibre_restricted": None}
        if zd.symbolic is not None:
            zsec["symbolic"] = [to_text(e) for e in zd.symbolic]
            zsec["depends_on_input"] = any(sys.input in e.free_symbols() for e in zd.symbolic)
        if zd.fibre_restricted is not None:
            fr = zd.fibre_restricted
            zsec["fibre_restricted"] = {
                "solved": {k: to_text(v) for k, v in fr.solved.items()},
                "free_states": list(fr.free_states),
                "complement_field": [to_text(e) for e in fr.field],
                "state_field": [to_text(e) for e in fr.state_field],
            }
        report["zero_dynamics"] = zsec

    rng = np.random.default_rng(seed)
    ls = LiftedSystem(sys, nf)
    vert = _Worst()
    for _ in range(samples):
        x = rng.uniform(*STATE_BOX, size=nf.n)
        u = float(rng.uniform(*INPUT_BOX))
        try:
            zero = ls.zero(x, u)
        except (SingularJacobian, DomainError):
            vert.skipped += 1
            continue
        vert.add(_inf(ls.project(x, zero)))
    checks = {"verticality": vert.check(tol)}
    x0 = _starts(sys, rng, 1)[0]
    checks["projection"] = Check(verify_projection(sys, nf, x0, "sin(t)").max_error,
                                 TRAJECTORY_TOL, samples=1)
    if nf.r < nf.n:
        checks["fibre_invariance"] = Check(fibre_invariance(sys, nf, x0, "0.5*sin(t)")[0],
                                           TRAJECTORY_TOL, samples=1)
    report["verification"] = {k: c.to_dict() for k, c in checks.items()}
    report["pass"] = Check(diff_report.min_abs_det, DET_TOL, "lower").passed and all(
        c.passed for c in checks.values())
    return report


def format_analysis(report: dict) -> str:
    """Human-readable rendering of :func:`analysis_report`."""
    lines = [f"system {report['system']}  (states {' '.join(report['states'])}, input {report['input']})",
             f"relative degree r = {report['r']}",
             f"Phi    = [{', '.join(report['phi'])}]",
             f"Psi    = {report['psi']}",
             f"Lambda = [{', '.join(report['lambda'])}]  ({report['completion_source']} complement)",
             f"det J_Lambda at point = {report['det_at_point']:.12g}",
             f"min |det J_Lambda| over samples = {report['min_abs_det']['observed']:.6g}"]
    zd = report.get("zero_dynamics")
    if zd and zd["symbolic"] is not None:
        lines.append(f"f^Z    = [{', '.join(zd['symbolic'])}]")
    if zd and zd["fibre_restricted"] is not None:
        fr = zd["fibre_restricted"]
        for s, e in zip(fr["free_states"], fr["state_field"]):
            lines.append(f"on Phi = 0: d{s}/dt = {e}")
    for name, c in report["verification"].items():
        status = "PASS" if c["pass"] else "FAIL"
        op = "<=" if c["bound"] == "upper" else ">"
        lines.append(f"{status} {name}: {c['observed']:.3e} {op} {c['tol']:.0e}")
    lines.extend(f"note: {d}" for d in report["diagnostics"])
    return "\n".join(lines) + "\n"
