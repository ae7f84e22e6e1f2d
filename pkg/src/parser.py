"""Text grammar for equations and point transformations, plus a round-tripping printer.

Grammar:
    expr     := term {('+'|'-') term}
    term     := unary {('*'|'/') unary}
    unary    := ['-'] factor
    factor   := base ['^' exponent]
    base     := NUMBER | 't' | 'x' | "x'" | "x''" | 'x0' | 'x1' | 'x2'
              | '(' expr ')' | 'sqrt' '(' expr ')'
    exponent := INTEGER | '(' ['-'] INTEGER ['/' INTEGER] ')'
"""
import logging
from typing import List, NamedTuple, Optional, Tuple, Union

import sympy as sp
from pydantic import BaseModel, Field
from sympy.printing.str import StrPrinter

from src.errors import (
    BadExponent,
    DependsOnJetVariables,
    DivisionByZero,
    ExpressionSyntaxError,
    UnknownSymbol,
)
from src.expr_core import SYMBOLS_BY_NAME, simplify, t, x0, x1, x2
from src.jet_calculus import Equation, PointMap
from src.schemas import SamplePlan

logger = logging.getLogger(__name__)

ALIASES = {"x": x0, "x'": x1, "x''": x2, **SYMBOLS_BY_NAME}
OPERATORS = "+-*/^()"


class SourceText(BaseModel):
    """Raw input text with position diagnostics."""

    raw: str = Field(..., description="Input exactly as supplied")
    label: str = Field("expression", description="What the text describes, for messages")

    def locate(self, offset: int) -> Tuple[int, int]:
        """One-based (line, column) of a character offset, clamped into the text."""
        offset = max(0, min(offset, len(self.raw)))
        line = self.raw.count("\n", 0, offset) + 1
        column = offset - (self.raw.rfind("\n", 0, offset) + 1) + 1
        return line, column


TextLike = Union[str, SourceText]


def _as_source(src: TextLike, label: str = "expression") -> SourceText:
    return src if isinstance(src, SourceText) else SourceText(raw=src, label=label)


class Token(NamedTuple):
    kind: str  # NUMBER, NAME, OP, END
    text: str
    offset: int


def tokenize(source: str) -> List[Token]:
    """Split source into tokens, recording character offsets."""
    tokens: List[Token] = []
    idx = 0
    while idx < len(source):
        c = source[idx]
        if c.isspace():
            idx += 1
            continue
        start = idx
        if c.isdigit() or (c == "." and idx + 1 < len(source) and source[idx + 1].isdigit()):
            while idx < len(source) and source[idx].isdigit():
                idx += 1
            if idx < len(source) and source[idx] == ".":
                idx += 1
                while idx < len(source) and source[idx].isdigit():
                    idx += 1
            tokens.append(Token("NUMBER", source[start:idx], start))
            continue
        if c.isalpha() or c == "_":
            while idx < len(source) and (source[idx].isalnum() or source[idx] == "_"):
                idx += 1
            while idx < len(source) and source[idx] == "'":
                idx += 1
            tokens.append(Token("NAME", source[start:idx], start))
            continue
        if c in OPERATORS:
            tokens.append(Token("OP", c, start))
            idx += 1
            continue
        raise ExpressionSyntaxError(f"unexpected character {c!r}", source, start)
    tokens.append(Token("END", "", len(source)))
    return tokens


class _Parser:
    """Recursive-descent parser producing sympy expressions."""

    def __init__(self, source: str):
        self.source = source
        self.tokens = tokenize(source)
        self.pos = 0

    @property
    def current(self) -> Token:
        return self.tokens[self.pos]

    def _advance(self) -> Token:
        token = self.tokens[self.pos]
        if token.kind != "END":
            self.pos += 1
        return token

    def _error(self, message: str, token: Optional[Token] = None, cls=ExpressionSyntaxError):
        token = token or self.current
        found = "end of input" if token.kind == "END" else repr(token.text)
        return cls(f"{message}, found {found}", self.source, token.offset)

    def _expect(self, text: str) -> Token:
        if self.current.kind == "OP" and self.current.text == text:
            return self._advance()
        raise self._error(f"expected {text!r}")

    def _at(self, text: str) -> bool:
        return self.current.kind == "OP" and self.current.text == text

    def parse(self) -> sp.Expr:
        if self.current.kind == "END":
            raise self._error("empty expression")
        result = self.expr()
        if self.current.kind != "END":
            if self.current.kind in ("NUMBER", "NAME") or self._at("("):
                raise self._error("implicit multiplication is not allowed; use '*'")
            raise self._error("unexpected token")
        return result

    def expr(self) -> sp.Expr:
        result = self.term()
        while self._at("+") or self._at("-"):
            op = self._advance().text
            rhs = self.term()
            result = result + rhs if op == "+" else result - rhs
        return result

    def term(self) -> sp.Expr:
        result = self.unary()
        while self._at("*") or self._at("/"):
            op = self._advance().text
            rhs = self.unary()
            result = result * rhs if op == "*" else result / rhs
        return result

    def unary(self) -> sp.Expr:
        if self._at("-"):
            self._advance()
            return -self.factor()
        return self.factor()

    def factor(self) -> sp.Expr:
        base = self.base()
        if self._at("^"):
            self._advance()
            return sp.Pow(base, self.exponent())
        return base

    def base(self) -> sp.Expr:
        token = self.current
        if token.kind == "NUMBER":
            self._advance()
            return sp.Rational(token.text)
        if token.kind == "NAME":
            self._advance()
            if token.text == "sqrt":
                self._expect("(")
                inner = self.expr()
                self._expect(")")
                return sp.Pow(inner, sp.Rational(1, 2))
            if token.text in ALIASES:
                return ALIASES[token.text]
            raise self._error("unknown symbol", token, UnknownSymbol)
        if self._at("("):
            self._advance()
            inner = self.expr()
            self._expect(")")
            return inner
        raise self._error("expected a number, variable or '('")

    def _integer(self) -> int:
        token = self.current
        if token.kind != "NUMBER" or not token.text.isdigit():
            raise self._error("exponent must be an exact rational", token, BadExponent)
        self._advance()
        return int(token.text)

    def exponent(self) -> sp.Rational:
        if not self._at("("):
            return sp.Integer(self._integer())
        self._advance()
        sign = 1
        if self._at("-"):
            self._advance()
            sign = -1
        numerator = self._integer()
        denominator = 1
        if self._at("/"):
            self._advance()
            slash = self.current
            denominator = self._integer()
            if denominator == 0:
                raise self._error("zero denominator in exponent", slash, BadExponent)
        if not self._at(")"):
            raise self._error("exponent must be an exact rational", cls=BadExponent)
        self._advance()
        return sp.Rational(sign * numerator, denominator)


def parse_expression(src: TextLike) -> sp.Expr:
    """Parse text into a simplified expression over (t, x0, x1, x2)."""
    source = _as_source(src)
    raw = _Parser(source.raw).parse()
    if raw.has(sp.zoo, sp.nan, sp.oo, -sp.oo):
        raise DivisionByZero(f"{source.label} {source.raw!r} divides by zero")
    return simplify(raw)


def parse_equation(src: TextLike) -> Equation:
    """Parse the right-hand side F of x''' = F(t, x, x', x'')."""
    source = _as_source(src, "equation")
    return Equation(parse_expression(source))


def _point_component(src: TextLike, label: str) -> sp.Expr:
    source = _as_source(src, label)
    expr = parse_expression(source)
    forbidden = sorted(s.name for s in expr.free_symbols & {x1, x2})
    if forbidden:
        raise DependsOnJetVariables(
            f"{label} {source.raw!r} depends on {', '.join(forbidden)}; "
            "point transformations may only use t and x"
        )
    return expr


def parse_transformation(
    t_src: TextLike,
    x_src: TextLike,
    t_inv_src: TextLike,
    x_inv_src: TextLike,
    plan: Optional[SamplePlan] = None,
    name: str = "map",
) -> PointMap:
    """Parse and validate a point transformation with its explicit inverse.

    The forward texts give (t~, x~) in terms of (t, x); the inverse texts give
    (t, x) in terms of the new coordinates, written with the same names t and x.
    """
    forward = (
        _point_component(t_src, "map t"),
        _point_component(x_src, "map x"),
    )
    inverse = (
        _point_component(t_inv_src, "inverse t"),
        _point_component(x_inv_src, "inverse x"),
    )
    point_map = PointMap(forward, inverse, name=name)
    point_map.validate(plan or SamplePlan.from_settings())
    return point_map


class GrammarPrinter(StrPrinter):
    """StrPrinter emitting the equation grammar: '^' powers and sqrt."""

    def _print_base(self, base: sp.Expr) -> str:
        if base.is_Symbol or (base.is_Integer and base.is_nonnegative):
            return self._print(base)
        return f"({self._print(base)})"

    def _print_Pow(self, expr, rational=False):
        base, exponent = expr.as_base_exp()
        if exponent == sp.S.Half:
            return f"sqrt({self._print(base)})"
        if exponent == -sp.S.Half:
            return f"1/sqrt({self._print(base)})"
        if exponent.is_Integer and exponent.is_negative:
            if exponent == -1:
                return f"1/{self._print_base(base)}"
            return f"1/{self._print_base(base)}^{-exponent}"
        if exponent.is_Integer:
            return f"{self._print_base(base)}^{exponent}"
        if exponent.is_Rational:
            return f"{self._print_base(base)}^({exponent.p}/{exponent.q})"
        raise BadExponent(f"cannot render non-rational exponent {exponent}")


_PRINTER = GrammarPrinter()


def render(e: sp.Expr) -> str:
    """Render an expression in the input grammar; parse_expression(render(e)) == e."""
    return _PRINTER.doprint(sp.sympify(e))
