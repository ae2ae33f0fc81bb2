"""Fixed-step classical Runge-Kutta integration and trajectory I/O."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import NonFinite, ParseError, PreconditionError
from .expr import Const, Expr, compile_exprs, parse_expr

Field = Callable[[np.ndarray, float, float], np.ndarray]


class InputSignal:
    """A scalar input ``u(t)``: a constant or an expression in ``t``."""

    def __init__(self, source: Expr | float | int | str = 0.0):
        if isinstance(source, str):
            source = parse_expr(source, {"t"})
        if not isinstance(source, Expr):
            source = Const(source)
        extra = source.free_symbols() - {"t"}
        if extra:
            raise PreconditionError(f"input signal may only depend on t, found {sorted(extra)}")
        self.expr = source
        self._prog = compile_exprs((source,), ("t",))
        self._const = float(source.value) if isinstance(source, Const) else None

    def __call__(self, t: float) -> float:
        if self._const is not None:
            return self._const
        return float(self._prog(np.array([t]))[0])

    def __repr__(self) -> str:
        return f"InputSignal({self.expr})"


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # (m, n)
    input_trace: np.ndarray
    names: tuple[str, ...] = ()

    def __post_init__(self):
        if not (len(self.times) == len(self.states) == len(self.input_trace)):
            raise ValueError("times, states and input trace must have equal length")
        if not self.names:
            self.names = tuple(f"x{i + 1}" for i in range(self.states.shape[1]))

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def to_csv(self, input_name: str = "u") -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", *self.names, input_name])
        for t, x, u in zip(self.times, self.states, self.input_trace):
            w.writerow([f"{t:.17g}", *(f"{v:.17g}" for v in x), f"{u:.17g}"])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "Trajectory":
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or rows[0][0] != "t" or len(rows[0]) < 3:
            raise ParseError("trajectory CSV must start with a header t,<states...>,<input>", line=1, column=1)
        header = rows[0]
        data = []
        for i, row in enumerate(rows[1:], start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ParseError(f"expected {len(header)} columns", line=i, column=1)
            try:
                data.append([float(v) for v in row])
            except ValueError:
                raise ParseError("non-numeric entry", line=i, column=1) from None
        arr = np.array(data, dtype=float).reshape(-1, len(header))
        return cls(arr[:, 0], arr[:, 1:-1], arr[:, -1], tuple(header[1:-1]))


def integrate(field: Field, x0: Sequence[float], u_sig: InputSignal | float | str = 0.0,
              t_end: float = 1.0, dt: float = 1e-3, t0: float = 0.0,
              names: Sequence[str] = ()) -> Trajectory:
    """Classical RK4 with the input sampled at every stage time."""
    if dt <= 0:
        raise PreconditionError("dt must be positive")
    if t_end < dt:
        raise PreconditionError("t_end must be at least dt")
    if not isinstance(u_sig, InputSignal):
        u_sig = InputSignal(u_sig)
    steps = int(round(t_end / dt))
    x = np.array(x0, dtype=float)
    n = x.size
    times = t0 + dt * np.arange(steps + 1)
    states = np.empty((steps + 1, n))
    inputs = np.empty(steps + 1)
    states[0] = x
    inputs[0] = u_sig(times[0])
    half = 0.5 * dt
    for k in range(steps):
        t = times[k]
        u0 = inputs[k]
        um = u_sig(t + half)
        u1 = u_sig(times[k + 1])
        k1 = field(x, u0, t)
        k2 = field(x + half * k1, um, t + half)
        k3 = field(x + half * k2, um, t + half)
        k4 = field(x + dt * k3, u1, times[k + 1])
        x = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(x)):
            raise NonFinite(times[k + 1])
        states[k + 1] = x
        inputs[k + 1] = u1
    return Trajectory(times, states, inputs, tuple(names))
