"""Symbolic expression core."""

from .calculus import adjugate, determinant, diff, jacobian, substitute
from .evaluate import (Program, ZeroKind, ZeroVerdict, compile_exprs, evaluate, is_zero,
                       point_vector, sorted_symbols)
from .nodes import (FUNCTIONS, ONE, ZERO, Add, Const, Div, Expr, Func, Mul, Neg, Pow, Var,
                    as_expr, cos, exp, ln, natural_key, sin, sqrt, tan, to_text)
from .parser import parse_expr
from .simplify import simplify

__all__ = [
    "Add", "Const", "Div", "Expr", "Func", "Mul", "Neg", "Pow", "Var", "ONE", "ZERO", "FUNCTIONS",
    "Program", "ZeroKind", "ZeroVerdict",
    "adjugate", "as_expr", "compile_exprs", "cos", "determinant", "diff", "evaluate", "exp",
    "is_zero", "jacobian", "ln", "natural_key", "parse_expr", "point_vector", "simplify", "sin",
    "sorted_symbols", "sqrt", "substitute", "tan", "to_text",
]
