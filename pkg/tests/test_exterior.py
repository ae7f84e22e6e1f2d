import pytest
import sympy as sp

from src.errors import DegreeOverflow
from src.expr_core import t, x0, x1, x2
from src.exterior import (
    OMEGA,
    Form,
    alpha_form,
    contraction,
    evaluate_form,
    exterior_derivative,
    from_omega_frame,
    omega_coframe,
    pullback,
    pullback_at,
    to_omega_frame,
    wedge,
)
from src.jet_calculus import Equation, PointMap, coordinate_field, total_derivative_field
from src.schemas import JetPoint

dt, dx0, dx1, dx2 = (Form.basis(i) for i in range(4))


class TestAlgebra:
    def test_wedge_is_antisymmetric(self):
        assert wedge(dt, dx0) == -wedge(dx0, dt)
        assert wedge(dx1, dx1).is_zero

    def test_signed_coefficients(self):
        two = wedge(dt, dx0).scale(x2)
        assert two.coefficient((0, 1)) == x2
        assert two.coefficient((1, 0)) == -x2
        assert two.coefficient((0, 0)) == 0

    def test_degree_overflow(self):
        three = dt ^ dx0 ^ dx1
        with pytest.raises(DegreeOverflow):
            wedge(three, dx2 ^ dt)
        with pytest.raises(DegreeOverflow):
            Form(5)

    def test_d_squared_vanishes(self):
        f = Form.scalar(t * x0 * x1**2 + x2 ** sp.Rational(3, 2))
        assert exterior_derivative(exterior_derivative(f)).is_zero

    def test_leibniz_rule(self):
        a = dx0.scale(x1)
        b = dt.scale(x0 * x2)
        lhs = exterior_derivative(wedge(a, b))
        rhs = wedge(exterior_derivative(a), b) - wedge(a, exterior_derivative(b))
        assert lhs == rhs

    def test_contraction(self):
        assert contraction(wedge(dt, dx0), coordinate_field("t")) == dx0
        assert contraction(wedge(dt, dx0), coordinate_field("x0")) == -dt


class TestCoframe:
    def test_omega_dual_to_total_derivative(self):
        eq = Equation(x2**3 + t)
        X = total_derivative_field(eq)
        pairings = [contraction(w, X).coefficient(()) for w in omega_coframe(eq)]
        assert pairings == [0, 0, 0, 1]

    def test_frame_round_trip(self):
        eq = Equation(x0 * x2**2)
        form = wedge(dx0.scale(x1), dx2) + wedge(dt, dx1)
        omega = to_omega_frame(form, eq)
        assert omega.frame == OMEGA
        assert from_omega_frame(omega, eq) == form

    def test_alpha_form(self):
        alpha = alpha_form(Equation(0), x2)
        assert alpha.coefficient((0,)) == 1 + x1 * x2
        assert alpha.coefficient((1,)) == -x2


class TestPullback:
    shift = PointMap((t, x0 + t**3), (t, x0 - t**3), name="shift")

    def test_symbolic_pullback(self):
        pulled = pullback(self.shift, dx0)
        assert pulled == dx0 + dt.scale(3 * t**2)

    def test_numeric_pullback_matches_symbolic(self):
        form = wedge(dx0, dx2).scale(x1)
        p = JetPoint(t=1, x0="1/2", x1=-1, x2="3/4")
        numeric = pullback_at(self.shift, form, p)
        symbolic = evaluate_form(pullback(self.shift, form), p)
        for key, value in numeric.items():
            assert value == pytest.approx(symbolic.get(key, 0.0), abs=1e-12)

    def test_evaluate_form(self):
        values = evaluate_form(dt.scale(x1) + dx2.scale(2), (0.0, 0.0, 3.0, 0.0))
        assert values == {(0,): pytest.approx(3.0), (3,): pytest.approx(2.0)}


def one_form(coefficients) -> Form:
    return Form(1, {(i,): c for i, c in enumerate(coefficients)})


class TestRandomForms:
    def test_wedge_is_associative(self, random_polynomials):
        a, b, c = (one_form(random_polynomials[k : k + 4]) for k in (0, 4, 8))
        assert wedge(wedge(a, b), c) == wedge(a, wedge(b, c))

    def test_wedge_is_bilinear(self, random_polynomials):
        a, b, c = (one_form(random_polynomials[k : k + 4]) for k in (0, 4, 8))
        f, g = random_polynomials[12], random_polynomials[13]
        assert wedge(a.scale(f) + b.scale(g), c) == wedge(a, c).scale(f) + wedge(b, c).scale(g)
        assert wedge(c, a.scale(f) + b.scale(g)) == wedge(c, a).scale(f) + wedge(c, b).scale(g)

    @pytest.mark.parametrize(
        "forward,inverse",
        [((t, x0 + t**3), (t, x0 - t**3)), ((t + x0, x0), (t - x0, x0))],
    )
    def test_pullback_commutes_with_d_and_wedge(self, random_polynomials, forward, inverse):
        point_map = PointMap(forward, inverse)
        a = one_form(random_polynomials[:4])
        b = one_form(random_polynomials[4:8])
        scalar = Form.scalar(random_polynomials[8])
        assert pullback(point_map, exterior_derivative(a)) == exterior_derivative(
            pullback(point_map, a)
        )
        assert pullback(point_map, exterior_derivative(scalar)) == exterior_derivative(
            pullback(point_map, scalar)
        )
        assert pullback(point_map, wedge(a, b)) == wedge(
            pullback(point_map, a), pullback(point_map, b)
        )
