"""The Ehresmann connection prescribed by the complementary coordinates.

The fibres are the level sets of ``phi``.  At a point with coordinate
Jacobian ``J`` (rows ``d lambda_1 .. d lambda_n``), the vertical space is the
kernel of the first ``r`` rows and the horizontal space the kernel of the
last ``n - r`` rows.  Both come out of one LU factorisation of ``J``: the
columns of ``J^-1`` split into a horizontal block and a vertical block.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import SingularJacobian
from .expr import Const, Expr, adjugate, determinant, simplify
from .linalg import LU
from .normal_form import DET_TOL, NormalForm

SYMBOLIC_MAX_N = 4


def _normalise_columns(m: np.ndarray) -> np.ndarray:
    out = m / np.linalg.norm(m, axis=0, keepdims=True)
    for j in range(out.shape[1]):
        nz = np.flatnonzero(np.abs(out[:, j]) > 1e-14)
        if nz.size and out[nz[0], j] < 0:
            out[:, j] = -out[:, j]
    return out


@dataclass(frozen=True)
class ConnectionPoint:
    point: dict[str, float]
    x: np.ndarray
    r: int
    J: np.ndarray
    lu: LU
    det: float
    H_basis: np.ndarray  # n x r
    V_basis: np.ndarray  # n x (n - r)

    @property
    def n(self) -> int:
        return self.J.shape[0]

    def project(self, X) -> np.ndarray:
        """``TPhi . X``."""
        return self.J[: self.r] @ np.asarray(X, dtype=float)


def _as_vector(nf: NormalForm, point) -> np.ndarray:
    if isinstance(point, Mapping):
        return np.array([float(point[s]) for s in nf.states])
    return np.asarray(point, dtype=float)


def connection_at(nf: NormalForm, point, time: float | None = None) -> ConnectionPoint:
    """Factor the coordinate Jacobian at ``point`` and extract H and V bases."""
    x = _as_vector(nf, point)
    J = nf.jacobian_at(x)
    lu = LU(J)
    det = lu.det
    scale = float(np.max(np.linalg.norm(J, axis=1)))
    if not np.isfinite(det) or abs(det) <= DET_TOL * scale:
        raise SingularJacobian(det, dict(zip(nf.states, x.tolist())), time)
    inv = lu.inverse()
    return ConnectionPoint(
        point=dict(zip(nf.states, x.tolist())), x=x, r=nf.r, J=J, lu=lu, det=det,
        H_basis=_normalise_columns(inv[:, : nf.r]),
        V_basis=_normalise_columns(inv[:, nf.r:]) if nf.r < nf.n else np.zeros((nf.n, 0)),
    )


def horizontal_lift(cp: ConnectionPoint, Y) -> np.ndarray:
    """The unique horizontal vector whose projection is ``Y``."""
    rhs = np.zeros(cp.n)
    rhs[: cp.r] = np.asarray(Y, dtype=float)
    return cp.lu.solve(rhs)


def decompose(cp: ConnectionPoint, X) -> tuple[np.ndarray, np.ndarray]:
    """Split ``X`` into horizontal and vertical parts."""
    X = np.asarray(X, dtype=float)
    Xh = horizontal_lift(cp, cp.project(X))
    return Xh, X - Xh


def horizontal_lift_symbolic(nf: NormalForm, Y: Sequence[Expr]) -> tuple[Expr, ...] | None:
    """Closed-form ``Hor_x(Y)`` via the adjugate of ``J_Lambda``.

    Returns ``None`` above ``SYMBOLIC_MAX_N`` states, where expression swell
    makes the symbolic route impractical.
    """
    n, r = nf.n, nf.r
    if n > SYMBOLIC_MAX_N:
        return None
    J = nf.J_lambda
    det = determinant(J)
    adj = adjugate(J)
    out = []
    for i in range(n):
        terms = [adj[i][j] * Y[j] for j in range(r) if adj[i][j] != Const(0)]
        if not terms:
            out.append(Const(0))
            continue
        num = terms[0] if len(terms) == 1 else sum(terms[1:], terms[0])
        out.append(simplify(num / det))
    return tuple(out)
