"""Numeric evaluation of expression trees.

Expressions are compiled once into a flat postfix program and executed by the
kernel backend (compiled when available).  Several expressions can share one
program, which is how Jacobians and vector fields are evaluated in one call.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Mapping, Sequence

import numpy as np
from scipy.stats import qmc

from .. import kernels
from ..errors import DomainError, PreconditionError, SamplingError
from .nodes import Add, Const, Div, Expr, Func, Mul, Neg, Pow, Var, natural_key
from .simplify import simplify

Point = Mapping[str, float]

_FUNC_OPS = {"exp": 7, "ln": 8, "sin": 9, "cos": 10, "tan": 11, "sqrt": 12}
_OP_CONST, _OP_VAR, _OP_NEG, _OP_ADD, _OP_MUL, _OP_DIV, _OP_POW, _OP_STORE = 0, 1, 2, 3, 4, 5, 6, 13

_FAULTS = {
    _OP_DIV: "division by zero",
    _OP_POW: "zero raised to a negative power",
    8: "ln of a non-positive value",
    12: "sqrt of a negative value",
}


class Program:
    """A batch of expressions compiled against an ordered variable list."""

    def __init__(self, exprs: Sequence[Expr], variables: Sequence[str]):
        self.exprs = tuple(exprs)
        self.variables = tuple(variables)
        slots = {v: i for i, v in enumerate(self.variables)}
        ops: list[int] = []
        args: list[int] = []
        consts: list[float] = []
        const_idx: dict[float, int] = {}
        self.nodes: list[Expr] = []
        depth = 0
        max_depth = 0

        def emit(op: int, arg: int, node: Expr, delta: int) -> None:
            nonlocal depth, max_depth
            ops.append(op)
            args.append(arg)
            self.nodes.append(node)
            depth += delta
            max_depth = max(max_depth, depth)

        def comp(e: Expr) -> None:
            if isinstance(e, Const):
                v = float(e.value)
                if v not in const_idx:
                    const_idx[v] = len(consts)
                    consts.append(v)
                emit(_OP_CONST, const_idx[v], e, 1)
            elif isinstance(e, Var):
                if e.name not in slots:
                    raise PreconditionError(f"no value bound for symbol {e.name!r}")
                emit(_OP_VAR, slots[e.name], e, 1)
            elif isinstance(e, Neg):
                comp(e.arg)
                emit(_OP_NEG, 0, e, 0)
            elif isinstance(e, (Add, Mul)):
                kids = e.children()
                for c in kids:
                    comp(c)
                emit(_OP_ADD if isinstance(e, Add) else _OP_MUL, len(kids), e, 1 - len(kids))
            elif isinstance(e, Div):
                comp(e.num)
                comp(e.den)
                emit(_OP_DIV, 0, e, -1)
            elif isinstance(e, Pow):
                comp(e.base)
                emit(_OP_POW, e.exp, e, 0)
            elif isinstance(e, Func):
                comp(e.arg)
                emit(_FUNC_OPS[e.name], 0, e, 0)
            else:
                raise TypeError(f"not an expression node: {e!r}")

        for k, e in enumerate(self.exprs):
            comp(e)
            emit(_OP_STORE, k, e, -1)

        self.ops = np.asarray(ops, dtype=np.int32)
        self.args = np.asarray(args, dtype=np.int32)
        self.consts = np.asarray(consts or [0.0], dtype=np.float64)
        self.stack_depth = max(max_depth, 1)

    def __len__(self) -> int:
        return len(self.exprs)

    def _raise(self, pc: int) -> None:
        node = self.nodes[pc]
        op = int(self.ops[pc])
        raise DomainError(_FAULTS.get(op, "domain error"), node)

    def __call__(self, x) -> np.ndarray:
        """Evaluate at one point given as an array ordered like ``variables``."""
        xv = np.ascontiguousarray(x, dtype=np.float64)
        out = np.empty(len(self.exprs), dtype=np.float64)
        pc = kernels.run_program(self.ops, self.args, self.consts, xv, out,
                                 np.empty(self.stack_depth))
        if pc >= 0:
            self._raise(pc)
        return out

    def at(self, point: Point) -> np.ndarray:
        return self(point_vector(point, self.variables))

    def batch(self, xs) -> tuple[np.ndarray, np.ndarray]:
        """Evaluate at each row; returns values and per-row fault index (-1 = ok)."""
        xs = np.ascontiguousarray(np.atleast_2d(xs), dtype=np.float64)
        outs = np.zeros((xs.shape[0], len(self.exprs)), dtype=np.float64)
        status = np.empty(xs.shape[0], dtype=np.int64)
        kernels.run_batch(self.ops, self.args, self.consts, xs, outs,
                          np.empty(self.stack_depth), status)
        return outs, status


@lru_cache(maxsize=4096)
def _compiled(exprs: tuple[Expr, ...], variables: tuple[str, ...]) -> Program:
    return Program(exprs, variables)


def compile_exprs(exprs: Sequence[Expr], variables: Sequence[str]) -> Program:
    return _compiled(tuple(exprs), tuple(variables))


def point_vector(point: Point, variables: Sequence[str]) -> np.ndarray:
    missing = [v for v in variables if v not in point]
    if missing:
        raise PreconditionError(f"point does not bind {', '.join(missing)}")
    return np.array([float(point[v]) for v in variables], dtype=np.float64)


def sorted_symbols(names) -> list[str]:
    return sorted(names, key=natural_key)


def evaluate(e: Expr, p: Point) -> float:
    """Evaluate ``e`` at the point ``p`` in double precision."""
    variables = tuple(sorted_symbols(e.free_symbols()))
    return float(compile_exprs((e,), variables).at(p)[0])


# --- zero testing ------------------------------------------------------------


class ZeroKind(enum.Enum):
    SYMBOLIC_ZERO = "SymbolicZero"
    NUMERIC_ZERO = "NumericZero"
    NONZERO = "NonZero"


@dataclass(frozen=True)
class ZeroVerdict:
    kind: ZeroKind
    max_abs: float = 0.0
    samples: int = 0
    witness: dict[str, float] | None = field(default=None)

    @property
    def is_zero(self) -> bool:
        return self.kind is not ZeroKind.NONZERO

    def to_dict(self) -> dict:
        d = {"verdict": self.kind.value, "max_abs": self.max_abs, "samples": self.samples}
        if self.witness is not None:
            d["witness"] = dict(self.witness)
        return d


DEFAULT_BOX = (-2.0, 2.0)
DEFAULT_SAMPLES = 20
DEFAULT_TOL = 1e-9


def _box_bounds(box, variables) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(box, Mapping):
        lo = [box[v][0] for v in variables]
        hi = [box[v][1] for v in variables]
    else:
        lo = [box[0]] * len(variables)
        hi = [box[1]] * len(variables)
    lo, hi = np.asarray(lo, float), np.asarray(hi, float)
    if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
        raise PreconditionError("sample box bounds must be finite")
    return lo, hi


def is_zero(e: Expr, box=DEFAULT_BOX, n: int = DEFAULT_SAMPLES, tol: float = DEFAULT_TOL,
            variables: Sequence[str] | None = None) -> ZeroVerdict:
    """Decide whether ``e`` vanishes identically on a box.

    A literal zero after simplification is reported as ``SymbolicZero``.
    Otherwise ``e`` is evaluated at ``n`` Halton points in the box; points
    outside the expression's domain are skipped and replaced, and more than
    90% failures raises :class:`SamplingError`.
    """
    s = simplify(e)
    if s == Const(0):
        return ZeroVerdict(ZeroKind.SYMBOLIC_ZERO)
    if variables is None:
        variables = sorted_symbols(s.free_symbols())
    variables = tuple(variables)
    prog = compile_exprs((s,), variables)
    if not variables:
        v = float(prog(np.empty(0))[0])
        kind = ZeroKind.NUMERIC_ZERO if abs(v) <= tol else ZeroKind.NONZERO
        return ZeroVerdict(kind, abs(v), 1, None if kind is not ZeroKind.NONZERO else {})
    lo, hi = _box_bounds(box, variables)
    sampler = qmc.Halton(d=len(variables), scramble=False)
    sampler.fast_forward(1)  # skip the corner point
    good = 0
    tried = 0
    worst = 0.0
    budget = max(10 * n, n + 1)
    while good < n and tried < budget:
        batch = min(n - good, budget - tried)
        xs = lo + (hi - lo) * sampler.random(batch)
        vals, status = prog.batch(xs)
        tried += batch
        for row, val, st in zip(xs, vals[:, 0], status):
            if st >= 0 or not np.isfinite(val):
                continue
            good += 1
            worst = max(worst, abs(float(val)))
            if abs(val) > tol:
                witness = {v: float(x) for v, x in zip(variables, row)}
                return ZeroVerdict(ZeroKind.NONZERO, abs(float(val)), good, witness)
    if good < n and tried - good > 0.9 * tried:
        raise SamplingError(f"{tried - good} of {tried} sample points left the domain of {s}")
    return ZeroVerdict(ZeroKind.NUMERIC_ZERO, worst, good)
