"""Recursive-descent parser for the expression grammar.

    expr   := term (('+'|'-') term)*
    term   := factor (('*'|'/') factor)*
    factor := ['-'] atom ['^' integer]
    atom   := number | ident | ident '(' expr ')' | '(' expr ')'
"""

from __future__ import annotations

import re
from fractions import Fraction
from typing import Iterable

from ..errors import ParseError, UndeclaredSymbolError
from .nodes import FUNCTIONS, Add, Const, Div, Expr, Func, Mul, Neg, Pow, Var

_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+(?:\.\d*)?(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^(),\[\]]))"
)


def tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            bad = len(text) - len(text[pos:].lstrip())
            raise ParseError(f"unexpected character {text[bad]!r}", position=bad)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, symbols: frozenset[str] | None):
        self.text = text
        self.tokens = tokenize(text)
        self.i = 0
        self.symbols = symbols

    def peek(self) -> tuple[str, str, int]:
        return self.tokens[self.i]

    def take(self) -> tuple[str, str, int]:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value: str) -> None:
        kind, val, pos = self.take()
        if val != value or kind != "op":
            found = val or "end of input"
            raise ParseError(f"expected {value!r}, found {found!r}", position=pos)

    def parse(self) -> Expr:
        e = self.expr()
        kind, val, pos = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected {val!r}", position=pos)
        return e

    def expr(self) -> Expr:
        terms = [self.term()]
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            t = self.term()
            terms.append(t if op == "+" else Neg(t))
        return terms[0] if len(terms) == 1 else Add(tuple(terms))

    def term(self) -> Expr:
        left = self.factor()
        factors = [left]
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            right = self.factor()
            if op == "*":
                factors.append(right)
            else:
                num = factors[0] if len(factors) == 1 else Mul(tuple(factors))
                factors = [Div(num, right)]
        return factors[0] if len(factors) == 1 else Mul(tuple(factors))

    def factor(self) -> Expr:
        negate = False
        if self.peek()[:2] == ("op", "-"):
            self.take()
            negate = True
        base = self.atom()
        if self.peek()[:2] == ("op", "^"):
            self.take()
            sign = 1
            if self.peek()[:2] == ("op", "-"):
                self.take()
                sign = -1
            kind, val, pos = self.take()
            if kind != "num" or not val.isdigit():
                raise ParseError("exponent must be an integer literal", position=pos)
            base = Pow(base, sign * int(val))
        return Neg(base) if negate else base

    def atom(self) -> Expr:
        kind, val, pos = self.take()
        if kind == "num":
            return Const(Fraction(val))
        if kind == "ident":
            if self.peek()[:2] == ("op", "("):
                if val not in FUNCTIONS:
                    raise UndeclaredSymbolError(val, position=pos, kind="function")
                self.take()
                arg = self.expr()
                self.expect(")")
                return Func(val, arg)
            if self.symbols is not None and val not in self.symbols:
                raise UndeclaredSymbolError(val, position=pos)
            return Var(val)
        if (kind, val) == ("op", "("):
            e = self.expr()
            self.expect(")")
            return e
        found = val or "end of input"
        raise ParseError(f"unexpected {found!r}", position=pos)


def parse_expr(text: str, symbols: Iterable[str] | None = None) -> Expr:
    """Parse ``text`` into an expression tree.

    ``symbols`` is the table of declared identifiers; any other identifier
    raises :class:`UndeclaredSymbolError`.  Pass ``None`` to accept any name.
    """
    table = frozenset(symbols) if symbols is not None else None
    return _Parser(text, table).parse()
