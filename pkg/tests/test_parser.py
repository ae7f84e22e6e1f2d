import pytest
import sympy as sp

from src.errors import (
    BadExponent,
    DependsOnJetVariables,
    DivisionByZero,
    ExpressionSyntaxError,
    InverseMismatch,
    UnknownSymbol,
)
from src.expr_core import simplify, t, x0, x1, x2
from src.parser import SourceText, parse_equation, parse_expression, parse_transformation, render, tokenize


class TestParse:
    def test_aliases(self):
        assert parse_expression("x + x' + x''") == x0 + x1 + x2
        assert parse_expression("x0 + x1 + x2 + t") == t + x0 + x1 + x2

    def test_rational_exponent(self):
        assert parse_expression("x''^(3/2)") == x2 ** sp.Rational(3, 2)
        assert parse_expression("x2^(-2)") == x2**-2

    def test_sqrt_and_decimals(self):
        assert parse_expression("sqrt(9 - 2*x1*x2)") == sp.sqrt(9 - 2 * x1 * x2)
        assert parse_expression("1.5*x2") == sp.Rational(3, 2) * x2

    def test_precedence(self):
        assert parse_expression("-x2^2") == -(x2**2)
        assert parse_expression("1 - 2*3/4") == sp.Rational(-1, 2)

    def test_equation(self):
        assert parse_equation("x2^3").rhs == x2**3

    def test_tokens_carry_offsets(self):
        tokens = tokenize("x'' + 1")
        assert [(tok.kind, tok.text, tok.offset) for tok in tokens[:3]] == [
            ("NAME", "x''", 0),
            ("OP", "+", 4),
            ("NUMBER", "1", 6),
        ]


class TestErrors:
    def test_implicit_multiplication(self):
        with pytest.raises(ExpressionSyntaxError) as info:
            parse_expression("2x1")
        assert info.value.offset == 1
        assert (info.value.line, info.value.column) == (1, 2)
        assert info.value.exit_code == 1

    def test_unknown_symbol(self):
        with pytest.raises(UnknownSymbol):
            parse_expression("y + 1")

    @pytest.mark.parametrize("text", ["x2^x1", "x2^1.5", "x2^(1/0)", "x2^(1/2"])
    def test_bad_exponent(self, text):
        with pytest.raises(BadExponent):
            parse_expression(text)

    @pytest.mark.parametrize("text", ["", "x2 +", "(x1", "x1 $ 2", "x1)"])
    def test_malformed(self, text):
        with pytest.raises(ExpressionSyntaxError):
            parse_expression(text)

    def test_division_by_zero(self):
        with pytest.raises(DivisionByZero):
            parse_expression("1/(x1 - x1)")

    def test_location_on_second_line(self):
        assert SourceText(raw="x1 +\n  y").locate(7) == (2, 3)


class TestRender:
    def test_examples(self):
        assert render(x2 ** sp.Rational(3, 2)) == "x2^(3/2)"
        assert render(sp.S.Zero) == "0"
        assert render(-6 * x2) == "-6*x2"

    @pytest.mark.parametrize(
        "text",
        [
            "x2^(3/2)",
            "t^2*x0 - 1/sqrt(x2)",
            "24*x2^3/(-3+sqrt(9-2*x1*x2))^3 + 12*x1*x2^4/(-3+sqrt(9-2*x1*x2))^4",
            "(x1 + 1)^(-3)",
            "x1^(2/3)/(t + 1)",
        ],
    )
    def test_round_trip(self, text):
        e = parse_expression(text)
        assert parse_expression(render(e)) == e

    def test_random_round_trip(self, random_expressions, random_polynomials):
        for e in random_expressions + random_polynomials:
            canonical = simplify(e)
            assert parse_expression(render(canonical)) == canonical

    def test_random_rational_round_trip(self, random_polynomials):
        for p, q in zip(random_polynomials[::2], random_polynomials[1::2]):
            e = simplify(p / (q**2 + 1))
            assert parse_expression(render(e)) == e


class TestTransformation:
    def test_x_shift(self):
        point_map = parse_transformation("t", "x + t^3", "t", "x - t^3", name="shift")
        assert point_map.forward == (t, x0 + t**3)
        assert point_map.multiplier == 1

    def test_depends_on_jet_variables(self):
        with pytest.raises(DependsOnJetVariables):
            parse_transformation("t + x'", "x", "t", "x")

    def test_wrong_inverse(self):
        with pytest.raises(InverseMismatch):
            parse_transformation("t", "x + t^3", "t", "x + t^3")
