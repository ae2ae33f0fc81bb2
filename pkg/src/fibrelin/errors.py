"""Exception hierarchy.

Input problems derive from :class:`InputError`, numerical breakdowns from
:class:`NumericalError`; the CLI maps the two families to distinct exit codes.
"""

from __future__ import annotations


class FibrelinError(Exception):
    """Base class for all package errors."""

    def to_dict(self) -> dict:
        d = {"type": type(self).__name__, "message": str(self)}
        for key in ("line", "column", "position", "time", "det", "symbol"):
            val = getattr(self, key, None)
            if val is not None:
                d[key] = val
        return d


class InputError(FibrelinError):
    pass


class NumericalError(FibrelinError):
    pass


class ParseError(InputError):
    def __init__(self, message: str, position: int | None = None,
                 line: int | None = None, column: int | None = None):
        self.position = position
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f" (line {line}, column {column})"
        elif position is not None:
            where = f" (position {position})"
        super().__init__(message + where)
        self.bare_message = message


class UndeclaredSymbolError(ParseError):
    def __init__(self, symbol: str, position: int | None = None, kind: str = "identifier",
                 line: int | None = None, column: int | None = None):
        self.symbol = symbol
        self.kind = kind
        super().__init__(f"undeclared {kind} {symbol!r}", position, line, column)


class _Located(InputError):
    """An input error that may know the line and column it refers to."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(message + where)


class DimensionError(_Located):
    pass


class InputInSystemError(_Located):
    """The input symbol appears inside f, g or h."""


class PreconditionError(InputError):
    pass


class DomainError(NumericalError):
    """Evaluation left a function's domain (division by zero, ln of x <= 0, ...)."""

    def __init__(self, message: str, subexpr=None):
        self.subexpr = subexpr
        super().__init__(message if subexpr is None else f"{message} in {subexpr}")


class SamplingError(NumericalError):
    pass


class NoRelativeDegree(NumericalError):
    def __init__(self, message: str, trail=()):
        self.trail = list(trail)
        super().__init__(message)


class Degenerate(NumericalError):
    pass


class RankDeficient(NumericalError):
    pass


class CompletionFailed(NumericalError):
    pass


class SingularJacobian(NumericalError):
    def __init__(self, det: float, point, time: float | None = None):
        self.det = float(det)
        self.point = point
        self.time = time
        at = f" at t={time:g}" if time is not None else ""
        super().__init__(f"Jacobian of the coordinate map is singular (det={det:.3e}){at} at {point}")


class NonFinite(NumericalError):
    def __init__(self, time: float):
        self.time = float(time)
        super().__init__(f"state became non-finite at t={time:g}")


class ConstraintNotExplicit(NumericalError):
    pass


class FibreSamplingError(NumericalError):
    pass
