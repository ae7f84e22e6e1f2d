"""Operators on the 2-jet space J^2(R, R) with coordinates (t, x0, x1, x2).

Covers the total derivative X_F of an equation x''' = F, vector fields and their
Lie brackets, frame decomposition, and the second prolongation of point
transformations (t, x) -> (t~(t, x), x~(t, x)).
"""
import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import sympy as sp

from src.errors import (
    DegenerateFrame,
    DependsOnJetVariables,
    DivisionByZero,
    DomainError,
    EvaluationOverflow,
    InverseMismatch,
)
from src.expr_core import (
    JET_SYMBOLS,
    as_symbol,
    collect_samples,
    compile_expr,
    domain_guards,
    eval_float,
    simplify,
    t,
    x0,
    x1,
    x2,
)
from src.schemas import DomainGuard, JetPoint, SamplePlan

logger = logging.getLogger(__name__)

INVERSE_TOLERANCE = 1e-9


class Equation:
    """The third-order ODE x''' = F(t, x0, x1, x2).

    First partials of F are computed once and cached. Equations compare and hash
    by their simplified right-hand side.
    """

    def __init__(self, rhs):
        rhs = simplify(sp.sympify(rhs))
        stray = rhs.free_symbols - set(JET_SYMBOLS)
        if stray:
            names = ", ".join(sorted(s.name for s in stray))
            raise ValueError(f"F may only depend on t, x0, x1, x2; found {names}")
        self.rhs = rhs

    @cached_property
    def F_x0(self) -> sp.Expr:
        return simplify(sp.diff(self.rhs, x0))

    @cached_property
    def F_x1(self) -> sp.Expr:
        return simplify(sp.diff(self.rhs, x1))

    @cached_property
    def F_x2(self) -> sp.Expr:
        return simplify(sp.diff(self.rhs, x2))

    @cached_property
    def guards(self) -> List[DomainGuard]:
        return domain_guards(self.rhs)

    def partial(self, variable) -> sp.Expr:
        """Cached first partial of F in a jet variable."""
        symbol = as_symbol(variable)
        if symbol == t:
            return simplify(sp.diff(self.rhs, t))
        return getattr(self, f"F_{symbol.name}")

    def __eq__(self, other) -> bool:
        return isinstance(other, Equation) and self.rhs == other.rhs

    def __hash__(self) -> int:
        return hash(("Equation", self.rhs))

    def __repr__(self) -> str:
        return f"Equation(F={self.rhs})"


@dataclass(frozen=True)
class VectorField:
    """A vector field c_t d/dt + c_x0 d/dx0 + c_x1 d/dx1 + c_x2 d/dx2."""

    c_t: sp.Expr = sp.S.Zero
    c_x0: sp.Expr = sp.S.Zero
    c_x1: sp.Expr = sp.S.Zero
    c_x2: sp.Expr = sp.S.Zero

    @classmethod
    def from_coefficients(cls, coefficients: Sequence) -> "VectorField":
        return cls(*(simplify(c) for c in coefficients))

    @property
    def coefficients(self) -> Tuple[sp.Expr, sp.Expr, sp.Expr, sp.Expr]:
        return (self.c_t, self.c_x0, self.c_x1, self.c_x2)

    def apply(self, e: sp.Expr, simplified: bool = True) -> sp.Expr:
        """Directional derivative V(e)."""
        e = sp.sympify(e)
        result = sp.Add(
            *(c * sp.diff(e, s) for c, s in zip(self.coefficients, JET_SYMBOLS) if c != 0)
        )
        return simplify(result) if simplified else result

    def scale(self, factor) -> "VectorField":
        return VectorField.from_coefficients([factor * c for c in self.coefficients])

    def __add__(self, other: "VectorField") -> "VectorField":
        return VectorField.from_coefficients(
            [a + b for a, b in zip(self.coefficients, other.coefficients)]
        )

    def __sub__(self, other: "VectorField") -> "VectorField":
        return VectorField.from_coefficients(
            [a - b for a, b in zip(self.coefficients, other.coefficients)]
        )

    def __neg__(self) -> "VectorField":
        return self.scale(-1)

    @property
    def is_zero(self) -> bool:
        return all(simplify(c) == 0 for c in self.coefficients)

    def at(self, point: JetPoint) -> np.ndarray:
        return np.array([eval_float(c, point) for c in self.coefficients])


def coordinate_field(name) -> VectorField:
    """The coordinate field d/dt, d/dx0, d/dx1 or d/dx2."""
    symbol = as_symbol(name)
    return VectorField(*(sp.S.One if s == symbol else sp.S.Zero for s in JET_SYMBOLS))


def total_derivative_field(eq: Equation) -> VectorField:
    """X_F = d/dt + x1 d/dx0 + x2 d/dx1 + F d/dx2."""
    return VectorField(sp.S.One, x1, x2, eq.rhs)


def total_derivative(eq: Equation, e) -> sp.Expr:
    """X_F(e), simplified."""
    return total_derivative_field(eq).apply(e)


def iterate_total_derivative(eq: Equation, e, n: int) -> sp.Expr:
    """X_F applied n times; n = 0 returns e unchanged."""
    if n < 0:
        raise ValueError("n must be non-negative")
    result = sp.sympify(e)
    for _ in range(n):
        result = total_derivative(eq, result)
    return result


def lie_bracket(X: VectorField, Y: VectorField) -> VectorField:
    """[X, Y]^i = X(Y^i) - Y(X^i)."""
    return VectorField.from_coefficients(
        [
            X.apply(y_i, simplified=False) - Y.apply(x_i, simplified=False)
            for x_i, y_i in zip(X.coefficients, Y.coefficients)
        ]
    )


def adjoint_power(X: VectorField, V: VectorField, n: int) -> VectorField:
    """ad_X^n V = [X, [X, ... [X, V]]]."""
    result = V
    for _ in range(n):
        result = lie_bracket(X, result)
    return result


def frame_basis(eq: Equation) -> List[VectorField]:
    """The frame {d/dx2, ad d/dx2, ad^2 d/dx2, X_F} with ad = ad_{X_F}."""
    X = total_derivative_field(eq)
    d2 = coordinate_field(x2)
    ad1 = lie_bracket(X, d2)
    ad2 = lie_bracket(X, ad1)
    return [d2, ad1, ad2, X]


def decompose_in_frame(V: VectorField, eq: Equation) -> Tuple[sp.Expr, sp.Expr, sp.Expr, sp.Expr]:
    """Coefficients (a, b, c, d) with V = a d/dx2 + b ad d/dx2 + c ad^2 d/dx2 + d X_F.

    Solved by fraction-free elimination; raises DegenerateFrame when the frame
    determinant simplifies to zero.
    """
    basis = frame_basis(eq)
    M = sp.Matrix([[field.coefficients[i] for field in basis] for i in range(4)])
    det = simplify(M.det(method="bareiss"))
    if det == 0:
        raise DegenerateFrame(f"frame is not a basis for F = {eq.rhs}")
    b = sp.Matrix(V.coefficients)
    solution = M.adjugate(method="bareiss") * b
    return tuple(simplify(solution[i] / det) for i in range(4))


def distribution_frames(eq: Equation, psi: Optional[sp.Expr] = None) -> Dict[str, List[VectorField]]:
    """Spanning fields of D1 = <d/dx2>, D2 = <d/dx1, d/dx2>, D3 = <d/dx0, d/dx1, d/dx2>.

    When psi is given, also the rank-3 distribution V = <V_F, d/dx1, d/dx2> with
    V_F = d/dx0 + psi X_F.
    """
    d0, d1, d2 = (coordinate_field(s) for s in (x0, x1, x2))
    frames = {"D1": [d2], "D2": [d1, d2], "D3": [d0, d1, d2]}
    if psi is not None:
        v_f = d0 + total_derivative_field(eq).scale(psi)
        frames["V"] = [v_f, d1, d2]
    return frames


def point_structure_residual(eq: Equation) -> Dict[str, sp.Expr]:
    """Components that must vanish for X_F to respect the point structure.

    ad d/dx2 has to lie in D2 and ad^2 d/dx2 in D3, so their d/dt (and for the
    first, d/dx0) components are returned; every entry simplifies to zero.
    """
    X = total_derivative_field(eq)
    ad1 = adjoint_power(X, coordinate_field(x2), 1)
    ad2 = lie_bracket(X, ad1)
    return {"ad1_t": ad1.c_t, "ad1_x0": ad1.c_x0, "ad2_t": ad2.c_t}


class PointMap:
    """A point transformation (t, x) -> (t~, x~) together with its explicit inverse.

    forward holds (t~, x~) as expressions in (t, x0). inverse holds (t, x) as
    expressions in the new coordinates, written with the same symbols t and x0.
    """

    def __init__(self, forward: Sequence, inverse: Sequence, name: str = "map"):
        self.forward = tuple(simplify(sp.sympify(c)) for c in forward)
        self.inverse_components = tuple(simplify(sp.sympify(c)) for c in inverse)
        self.name = name
        self.validated = False
        for component in self.forward + self.inverse_components:
            if component.free_symbols - {t, x0}:
                raise DependsOnJetVariables(f"{component} depends on jet variables")

    @staticmethod
    def _prolong(components: Tuple[sp.Expr, sp.Expr]) -> Tuple[sp.Expr, sp.Expr, sp.Expr, sp.Expr]:
        new_t, new_x = components
        D = VectorField(sp.S.One, x1, x2, sp.S.Zero)
        g = D.apply(new_t)
        if g == 0:
            raise DivisionByZero(f"multiplier of {components} vanishes identically")
        new_x1 = simplify(D.apply(new_x) / g)
        new_x2 = simplify(D.apply(new_x1) / g)
        return (new_t, new_x, new_x1, new_x2)

    @cached_property
    def A(self) -> sp.Expr:
        return simplify(sp.diff(self.forward[0], t))

    @cached_property
    def B(self) -> sp.Expr:
        return simplify(sp.diff(self.forward[0], x0))

    @cached_property
    def multiplier(self) -> sp.Expr:
        """g = A + B x1, the factor in X_F -> g^{-1} X_F."""
        return simplify(self.A + self.B * x1)

    @cached_property
    def prolongation(self) -> Tuple[sp.Expr, sp.Expr, sp.Expr, sp.Expr]:
        """(t~, x~, x~1, x~2) as expressions in (t, x0, x1, x2)."""
        return self._prolong(self.forward)

    @cached_property
    def inverse_prolongation(self) -> Tuple[sp.Expr, sp.Expr, sp.Expr, sp.Expr]:
        """(t, x0, x1, x2) as expressions in the new jet coordinates."""
        return self._prolong(self.inverse_components)

    def jet_substitution(self) -> Dict[sp.Symbol, sp.Expr]:
        return dict(zip(JET_SYMBOLS, self.prolongation))

    def inverse_jet_substitution(self) -> Dict[sp.Symbol, sp.Expr]:
        return dict(zip(JET_SYMBOLS, self.inverse_prolongation))

    @cached_property
    def jacobian(self) -> sp.Matrix:
        """d(t~, x~, x~1, x~2)/d(t, x0, x1, x2)."""
        return sp.Matrix(
            [[simplify(sp.diff(c, s)) for s in JET_SYMBOLS] for c in self.prolongation]
        )

    @cached_property
    def point_jacobian(self) -> sp.Expr:
        """det d(t~, x~)/d(t, x0)."""
        (a, b), (c, d) = [[sp.diff(f, s) for s in (t, x0)] for f in self.forward]
        return simplify(a * d - b * c)

    def jet_map_at(self, point: JetPoint) -> Tuple[float, float, float, float]:
        """Floating image of a jet point."""
        values = self._call(compile_expr(self.prolongation), point.floats())
        return tuple(float(v) for v in values)

    def inverse_jet_map_at(self, coords: Sequence[float]) -> Tuple[float, float, float, float]:
        values = self._call(compile_expr(self.inverse_prolongation), coords)
        return tuple(float(v) for v in values)

    def jacobian_at(self, point: JetPoint) -> np.ndarray:
        """Floating 4x4 Jacobian of the prolonged map at a point."""
        entries = tuple(self.jacobian)
        values = self._call(compile_expr(entries), point.floats())
        return np.array([float(v) for v in values]).reshape(4, 4)

    @staticmethod
    def _call(function, args):
        try:
            values = function(*args)
        except (ZeroDivisionError, ValueError, TypeError) as exc:
            raise DomainError(str(exc)) from exc
        except OverflowError as exc:
            raise EvaluationOverflow(str(exc)) from exc
        if any(isinstance(v, complex) for v in values):
            raise DomainError("jet map is not real at this point")
        return values

    def sample_guards(self) -> List[DomainGuard]:
        guards = []
        for component in self.prolongation:
            guards.extend(domain_guards(component))
        guards.append(DomainGuard(expr=self.multiplier, kind="nonzero"))
        if not self.point_jacobian.is_number:
            guards.append(DomainGuard(expr=self.point_jacobian, kind="nonzero"))
        return guards

    def validate(self, plan: SamplePlan) -> "PointMap":
        """Check nondegeneracy, g against X_F(t~), and the jet-level round trip."""
        if self.point_jacobian == 0:
            raise InverseMismatch(f"{self.name}: Jacobian of ({self.forward}) vanishes")
        via_total = simplify(VectorField(sp.S.One, x1, x2, sp.S.Zero).apply(self.forward[0]))
        if simplify(via_total - self.multiplier) != 0:
            raise InverseMismatch(f"{self.name}: multiplier disagrees with X_F(t~)")

        def round_trip(point: JetPoint) -> float:
            original = point.floats()
            image = self.jet_map_at(point)
            back = self.inverse_jet_map_at(image)
            return max(abs(a - b) / (1.0 + abs(a)) for a, b in zip(original, back))

        samples = collect_samples(plan.with_guards(self.sample_guards()), round_trip)
        worst_point, worst = max(samples, key=lambda s: s[1])
        if worst > INVERSE_TOLERANCE:
            raise InverseMismatch(
                f"{self.name}: inverse round trip misses by {worst:.3e} at {worst_point.floats()}"
            )
        logger.debug("%s validated, worst round-trip error %.3e", self.name, worst)
        self.validated = True
        return self

    def ensure_valid(self, plan: Optional[SamplePlan] = None) -> "PointMap":
        """Validate on first use; later calls are free."""
        if not self.validated:
            self.validate(plan or SamplePlan.from_settings())
        return self

    def compose(self, other: "PointMap") -> "PointMap":
        """self after other: first apply other, then self."""
        first = {t: other.forward[0], x0: other.forward[1]}
        back = {t: self.inverse_components[0], x0: self.inverse_components[1]}
        forward = [c.xreplace(first) for c in self.forward]
        inverse = [c.xreplace(back) for c in other.inverse_components]
        return PointMap(forward, inverse, name=f"{self.name}*{other.name}")

    def inverse(self) -> "PointMap":
        return PointMap(self.inverse_components, self.forward, name=f"{self.name}^-1")

    def __repr__(self) -> str:
        return f"PointMap({self.name}: t~={self.forward[0]}, x~={self.forward[1]})"


def identity_map() -> PointMap:
    return PointMap((t, x0), (t, x0), name="identity")


def prolong(
    point_map: PointMap, eq: Equation, plan: Optional[SamplePlan] = None
) -> Equation:
    """The transformed equation x~''' = F~(t~, x~0, x~1, x~2).

    F^ = X_F(x~2) / X_F(t~) in old coordinates, then expressed in the new
    coordinates through the prolonged inverse. A map whose inverse has not been
    checked yet is validated first, raising InverseMismatch on a bad inverse.
    """
    point_map.ensure_valid(plan)
    g = point_map.multiplier
    X = total_derivative_field(eq)
    f_hat = simplify(X.apply(point_map.prolongation[3], simplified=False) / g)
    f_new = simplify(f_hat.xreplace(point_map.inverse_jet_substitution()))
    logger.debug("prolonged %s through %s: %s", eq, point_map.name, f_new)
    return Equation(f_new)
