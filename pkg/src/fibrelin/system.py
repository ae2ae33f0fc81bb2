"""SISO affine control systems: file format, validated model, projectability.

A system file is line oriented, ``#`` starts a comment::

    system "example"
    states x1 x2 x3
    input u
    f = [-x1, x1*x2, x2]
    g = [exp(x2), 1, 0]
    h = x3
    complement = [1 + x1 - exp(x2)]   # optional
    point = [0, 0, 0]                 # optional, defaults to the origin
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import (DimensionError, DomainError, FibreSamplingError, InputInSystemError, ParseError,
                     UndeclaredSymbolError)
from .expr import Expr, Var, compile_exprs, jacobian, parse_expr, simplify, to_text

_IDENT = re.compile(r"[A-Za-z_][A-Za-z_0-9]*$")


@dataclass(frozen=True)
class SystemDef:
    """The affine system ``x' = f(x) + g(x) u``, ``y = h(x)``."""

    name: str
    states: tuple[str, ...]
    input: str
    f: tuple[Expr, ...]
    g: tuple[Expr, ...]
    h: Expr
    complement: tuple[Expr, ...] | None = None
    operating_point: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        n = len(self.states)
        if n < 2:
            raise DimensionError(f"need at least 2 states, got {n}")
        if len(set(self.states)) != n:
            raise DimensionError("state names must be distinct")
        if self.input in self.states:
            raise DimensionError(f"input {self.input!r} is also declared as a state")
        if len(self.f) != n:
            raise DimensionError(f"f has {len(self.f)} components but there are {n} states")
        if len(self.g) != n:
            raise DimensionError(f"g has {len(self.g)} components but there are {n} states")
        allowed = set(self.states)
        for label, exprs in (("f", self.f), ("g", self.g), ("h", (self.h,)),
                             ("complement", self.complement or ())):
            for e in exprs:
                syms = e.free_symbols()
                if self.input in syms:
                    raise InputInSystemError(f"input symbol {self.input!r} appears in {label}")
                extra = syms - allowed
                if extra:
                    raise UndeclaredSymbolError(sorted(extra)[0])
        if not self.operating_point:
            object.__setattr__(self, "operating_point", {s: 0.0 for s in self.states})
        elif set(self.operating_point) != allowed:
            raise DimensionError("operating point must bind every state")

    @property
    def n(self) -> int:
        return len(self.states)

    def point_array(self) -> np.ndarray:
        return np.array([self.operating_point[s] for s in self.states], dtype=float)

    def without_complement(self) -> "SystemDef":
        return SystemDef(self.name, self.states, self.input, self.f, self.g, self.h, None,
                         dict(self.operating_point))

    def to_text(self) -> str:
        lines = [
            f'system "{self.name}"',
            "states " + " ".join(self.states),
            f"input {self.input}",
            "f = [" + ", ".join(map(to_text, self.f)) + "]",
            "g = [" + ", ".join(map(to_text, self.g)) + "]",
            f"h = {to_text(self.h)}",
        ]
        if self.complement is not None:
            lines.append("complement = [" + ", ".join(map(to_text, self.complement)) + "]")
        lines.append("point = [" + ", ".join(repr(self.operating_point[s]) for s in self.states) + "]")
        return "\n".join(lines) + "\n"


def _split_list(body: str, line: int, col0: int) -> list[tuple[str, int]]:
    """Split a bracketed list at top-level commas; returns (item, column) pairs."""
    s = body.strip()
    lead = len(body) - len(body.lstrip())
    if not (s.startswith("[") and s.endswith("]")):
        raise ParseError("expected a bracketed list [e1, e2, ...]", line=line, column=col0 + lead + 1)
    inner = s[1:-1]
    base = col0 + lead + 1
    items = []
    depth = 0
    start = 0
    for i, ch in enumerate(inner + ","):
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        elif ch == "," and depth == 0:
            items.append((inner[start:i], base + start))
            start = i + 1
        if depth < 0:
            raise ParseError("unbalanced ')'", line=line, column=base + i + 1)
    if depth != 0:
        raise ParseError("unclosed '(' in list", line=line, column=base + len(inner) + 1)
    if len(items) == 1 and not items[0][0].strip():
        return []
    return items


def _parse_at(text: str, symbols, line: int, col: int) -> Expr:
    try:
        return parse_expr(text, symbols)
    except UndeclaredSymbolError as err:
        raise UndeclaredSymbolError(err.symbol, kind=err.kind, line=line,
                                    column=col + (err.position or 0) + 1) from None
    except ParseError as err:
        raise ParseError(err.bare_message, line=line, column=col + (err.position or 0) + 1) from None


def parse_system(text: str) -> SystemDef:
    """Parse and validate a system description."""
    fields: dict[str, tuple[str, int, int]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        stripped = line.lstrip()
        col0 = len(line) - len(stripped)
        m = re.match(r"(system|states|input)\b\s*(.*)$", stripped)
        if m:
            key, rest = m.group(1), m.group(2)
            rest_col = col0 + m.start(2)
        else:
            m = re.match(r"([A-Za-z_]+)\s*=\s*(.*)$", stripped)
            if not m:
                raise ParseError("expected 'key = value' or a declaration", line=lineno, column=col0 + 1)
            key, rest = m.group(1), m.group(2)
            rest_col = col0 + m.start(2)
            if key not in ("f", "g", "h", "complement", "point"):
                raise ParseError(f"unknown field {key!r}", line=lineno, column=col0 + 1)
        if key in fields:
            raise ParseError(f"duplicate field {key!r}", line=lineno, column=col0 + 1)
        fields[key] = (rest, lineno, rest_col)

    for key in ("states", "input", "f", "g", "h"):
        if key not in fields:
            raise ParseError(f"missing required field {key!r}", line=len(text.splitlines()) + 1, column=1)

    name = "system"
    if "system" in fields:
        rest, ln, col = fields["system"]
        m = re.fullmatch(r'\s*"([^"]*)"\s*', rest)
        if not m:
            raise ParseError('system name must be a double-quoted string', line=ln, column=col + 1)
        name = m.group(1)

    rest, ln, col = fields["states"]
    states = tuple(rest.split())
    for s in states:
        if not _IDENT.match(s):
            raise ParseError(f"invalid state name {s!r}", line=ln, column=col + rest.index(s) + 1)
    rest, ln, col = fields["input"]
    input_name = rest.strip()
    if not _IDENT.match(input_name or "-"):
        raise ParseError("input must be a single identifier", line=ln, column=col + 1)

    symbols = set(states) | {input_name}

    def checked(item: str, ln: int, col: int, key: str) -> Expr:
        e = _parse_at(item, symbols, ln, col)
        if input_name in e.free_symbols():
            at = col + item.index(input_name) + 1 if input_name in item else col + 1
            raise InputInSystemError(f"input symbol {input_name!r} appears in {key}", line=ln, column=at)
        return e

    def exprs(key: str, expected: int | None) -> tuple[Expr, ...]:
        rest, ln, col = fields[key]
        out = tuple(checked(item, ln, c, key) for item, c in _split_list(rest, ln, col))
        if expected is not None and len(out) != expected:
            raise DimensionError(f"{key} has {len(out)} components but there are {expected} states",
                                 line=ln, column=col + 1)
        return out

    f = exprs("f", len(states))
    g = exprs("g", len(states))
    rest, ln, col = fields["h"]
    h = checked(rest, ln, col, "h")
    complement = exprs("complement", None) if "complement" in fields else None
    point = {}
    if "point" in fields:
        rest, ln, col = fields["point"]
        vals = []
        for item, c in _split_list(rest, ln, col):
            try:
                vals.append(float(item))
            except ValueError:
                raise ParseError(f"point entries must be numbers, got {item.strip()!r}",
                                 line=ln, column=c + 1) from None
        if len(vals) != len(states):
            raise DimensionError(f"point has {len(vals)} entries but there are {len(states)} states",
                                 line=ln, column=col + 1)
        point = dict(zip(states, vals))
    return SystemDef(name, states, input_name, f, g, h, complement, point)


def load_system(path) -> SystemDef:
    with open(path, encoding="utf-8") as fh:
        return parse_system(fh.read())


def total_dynamics(sys: SystemDef) -> tuple[Expr, ...]:
    """Component-wise ``f_i + g_i * u``, simplified."""
    u = Var(sys.input)
    return tuple(simplify(fi + gi * u) for fi, gi in zip(sys.f, sys.g))


# --- projectability -----------------------------------------------------------


@dataclass
class ProjectabilityVerdict:
    projectable: bool
    max_discrepancy: float
    pairs: int
    tol: float
    projections: list[list[float]] = field(default_factory=list)
    witness: dict | None = None

    def to_dict(self) -> dict:
        d = {"projectable": self.projectable, "max_discrepancy": self.max_discrepancy,
             "pairs": self.pairs, "tol": self.tol}
        if self.witness is not None:
            d["witness"] = self.witness
        return d


def solve_fibre(phi_prog, jac_prog, z: np.ndarray, x0: np.ndarray, tol: float = 1e-12,
                max_iter: int = 100) -> np.ndarray | None:
    """Damped Gauss-Newton on ``|phi(x) - z|^2`` with minimum-norm steps."""
    x = np.array(x0, dtype=float)
    r = phi_prog(x) - z
    for _ in range(max_iter):
        nr = np.linalg.norm(r)
        if nr <= tol:
            return x
        J = jac_prog(x).reshape(len(z), len(x))
        try:
            step = -J.T @ np.linalg.solve(J @ J.T, r)
        except np.linalg.LinAlgError:
            return None
        t = 1.0
        while t > 1e-8:
            xn = x + t * step
            try:
                rn = phi_prog(xn) - z
            except DomainError:
                rn = None
            if rn is not None and np.all(np.isfinite(rn)) and np.linalg.norm(rn) < nr:
                x, r = xn, rn
                break
            t *= 0.5
        else:
            return None
    return x if np.linalg.norm(r) <= tol else None


def is_projectable(X: Sequence[Expr] | Callable[[np.ndarray], np.ndarray], phi: Sequence[Expr],
                   states: Sequence[str], *, targets: Sequence[Sequence[float]] | None = None,
                   n_targets: int = 3, starts: int = 8, box=(-2.0, 2.0), seed: int = 0,
                   pair_tol: float = 1e-9, tol: float = 1e-7) -> ProjectabilityVerdict:
    """Check that ``TPhi . X`` is constant along the fibres of ``phi``.

    ``X`` is a list of expressions in the states or a callable on state
    vectors.  Fibres are sampled by solving ``phi(x) = z`` from several random
    starts; points whose images agree within ``pair_tol`` are compared.
    """
    states = tuple(states)
    n, r = len(states), len(phi)
    phi_prog = compile_exprs(tuple(phi), states)
    jac_prog = compile_exprs(tuple(e for row in jacobian(phi, states) for e in row), states)
    if callable(X):
        field_fn = X
    else:
        x_prog = compile_exprs(tuple(X), states)
        field_fn = x_prog
    rng = np.random.default_rng(seed)
    lo, hi = box
    if targets is None:
        targets = [phi_prog(rng.uniform(lo, hi, n)) for _ in range(n_targets)]
    worst = 0.0
    pairs = 0
    projections = []
    witness = None
    for z in targets:
        z = np.asarray(z, dtype=float)
        found: list[np.ndarray] = []
        for _ in range(starts):
            x = solve_fibre(phi_prog, jac_prog, z, rng.uniform(lo, hi, n))
            if x is None or np.max(np.abs(phi_prog(x) - z)) > pair_tol:
                continue
            if all(np.linalg.norm(x - y) > 1e-6 for y in found):
                found.append(x)
        if len(found) < 2:
            continue
        proj = [jac_prog(x).reshape(r, n) @ np.asarray(field_fn(x), dtype=float) for x in found]
        projections.append(proj[0].tolist())
        for x, p in zip(found[1:], proj[1:]):
            pairs += 1
            d = float(np.max(np.abs(p - proj[0])))
            if d > worst:
                worst = d
                if d > tol:
                    witness = {"x": found[0].tolist(), "x_prime": x.tolist(),
                               "projection": proj[0].tolist(), "projection_prime": p.tolist()}
    if pairs == 0:
        raise FibreSamplingError("could not find two distinct points on any sampled fibre")
    return ProjectabilityVerdict(worst <= tol, worst, pairs, tol, projections, witness)
