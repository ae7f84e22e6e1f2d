"""Differential forms on the 2-jet space.

Forms are stored sparsely in a frame of one-forms: the coordinate coframe
(dt, dx0, dx1, dx2) or the omega coframe (w0, w1, w2, w3) adapted to an equation,
with w0 = dx0 - x1 dt, w1 = dx1 - x2 dt, w2 = dx2 - F dt, w3 = dt. Exterior
derivative and contraction work in the coordinate coframe.
"""
import logging
from itertools import combinations
from typing import Dict, Iterable, Mapping, Optional, Sequence, Tuple

import numpy as np
import sympy as sp
from sympy.combinatorics import Permutation

from src.errors import DegreeOverflow, DomainError, EvaluationOverflow
from src.expr_core import JET_SYMBOLS, Coordinates, compile_expr, float_coordinates, simplify, x1, x2
from src.jet_calculus import Equation, PointMap, VectorField
from src.schemas import JetPoint

logger = logging.getLogger(__name__)

DIMENSION = 4
COORDINATE = "coordinate"
OMEGA = "omega"

Index = Tuple[int, ...]


def sort_indices(indices: Sequence[int]) -> Tuple[Optional[Index], int]:
    """Sort an index tuple, returning the permutation sign (0 on a repeated index)."""
    indices = tuple(indices)
    if len(set(indices)) != len(indices):
        return None, 0
    if not indices:
        return (), 1
    order = sorted(range(len(indices)), key=lambda k: indices[k])
    return tuple(indices[k] for k in order), Permutation(order).signature()


class Form:
    """A k-form sum_I c_I e^I over strictly increasing index tuples I.

    Attributes:
        degree: k in 0..4
        components: index tuple -> nonzero simplified coefficient
        frame: "coordinate" or "omega"
    """

    def __init__(
        self,
        degree: int,
        components: Optional[Mapping[Sequence[int], sp.Expr]] = None,
        frame: str = COORDINATE,
        simplified: bool = True,
    ):
        if not 0 <= degree <= DIMENSION:
            raise DegreeOverflow(f"degree {degree} outside 0..{DIMENSION}")
        self.degree = degree
        self.frame = frame
        collected: Dict[Index, sp.Expr] = {}
        for indices, coefficient in (components or {}).items():
            if len(indices) != degree:
                raise ValueError(f"index {indices} does not match degree {degree}")
            key, sign = sort_indices(indices)
            if sign == 0:
                continue
            collected[key] = collected.get(key, sp.S.Zero) + sign * sp.sympify(coefficient)
        if simplified:
            collected = {k: simplify(v) for k, v in collected.items()}
        self.components: Dict[Index, sp.Expr] = {
            k: v for k, v in sorted(collected.items()) if v != 0
        }

    @classmethod
    def scalar(cls, value, frame: str = COORDINATE) -> "Form":
        return cls(0, {(): value}, frame)

    @classmethod
    def basis(cls, index: int, frame: str = COORDINATE) -> "Form":
        return cls(1, {(index,): sp.S.One}, frame)

    def coefficient(self, indices: Sequence[int]) -> sp.Expr:
        """Signed coefficient for any ordering of indices."""
        key, sign = sort_indices(indices)
        if sign == 0:
            return sp.S.Zero
        return sign * self.components.get(key, sp.S.Zero)

    @property
    def is_zero(self) -> bool:
        return not self.components

    def _check_frame(self, other: "Form") -> None:
        if self.frame != other.frame:
            raise ValueError(f"cannot combine {self.frame} and {other.frame} frames")

    def __add__(self, other: "Form") -> "Form":
        self._check_frame(other)
        if self.degree != other.degree:
            raise ValueError("cannot add forms of different degree")
        merged = dict(self.components)
        for k, v in other.components.items():
            merged[k] = merged.get(k, sp.S.Zero) + v
        return Form(self.degree, merged, self.frame)

    def __neg__(self) -> "Form":
        return self.scale(-1)

    def __sub__(self, other: "Form") -> "Form":
        return self + (-other)

    def scale(self, factor) -> "Form":
        return Form(self.degree, {k: factor * v for k, v in self.components.items()}, self.frame)

    def __xor__(self, other: "Form") -> "Form":
        return wedge(self, other)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Form)
            and self.degree == other.degree
            and self.frame == other.frame
            and (self - other).is_zero
        )

    def __repr__(self) -> str:
        names = ("dt", "dx0", "dx1", "dx2") if self.frame == COORDINATE else ("w0", "w1", "w2", "w3")
        if not self.components:
            return "0"
        terms = []
        for key, value in self.components.items():
            basis = "^".join(names[i] for i in key)
            terms.append(f"({value})*{basis}" if basis else f"{value}")
        return " + ".join(terms)


def wedge(a: Form, b: Form) -> Form:
    """Graded-antisymmetric product a ^ b."""
    a._check_frame(b)
    if a.degree + b.degree > DIMENSION:
        raise DegreeOverflow(f"{a.degree}-form ^ {b.degree}-form exceeds dimension {DIMENSION}")
    products: Dict[Index, sp.Expr] = {}
    for ka, va in a.components.items():
        for kb, vb in b.components.items():
            key, sign = sort_indices(ka + kb)
            if sign == 0:
                continue
            products[key] = products.get(key, sp.S.Zero) + sign * va * vb
    return Form(a.degree + b.degree, products, a.frame)


def wedge_all(forms: Iterable[Form]) -> Form:
    forms = list(forms)
    result = forms[0]
    for form in forms[1:]:
        result = wedge(result, form)
    return result


def exterior_derivative(a: Form) -> Form:
    """d(c dx_I) = sum_v (dc/dv) dv ^ dx_I."""
    if a.frame != COORDINATE:
        raise ValueError("exterior derivative needs the coordinate frame")
    if a.degree >= DIMENSION:
        return Form(DIMENSION, {}, COORDINATE)
    terms: Dict[Index, sp.Expr] = {}
    for key, value in a.components.items():
        for v, symbol in enumerate(JET_SYMBOLS):
            if v in key:
                continue
            partial = sp.diff(value, symbol)
            if partial == 0:
                continue
            sorted_key, sign = sort_indices((v,) + key)
            terms[sorted_key] = terms.get(sorted_key, sp.S.Zero) + sign * partial
    return Form(a.degree + 1, terms, COORDINATE)


def contraction(a: Form, V: VectorField) -> Form:
    """Interior product i_V a."""
    if a.frame != COORDINATE:
        raise ValueError("contraction needs the coordinate frame")
    if a.degree == 0:
        return Form(0, {}, COORDINATE)
    terms: Dict[Index, sp.Expr] = {}
    for key, value in a.components.items():
        for position, index in enumerate(key):
            component = V.coefficients[index]
            if component == 0:
                continue
            rest = key[:position] + key[position + 1:]
            terms[rest] = terms.get(rest, sp.S.Zero) + (-1) ** position * component * value
    return Form(a.degree - 1, terms, COORDINATE)


def omega_coframe(eq: Equation) -> Tuple[Form, Form, Form, Form]:
    """(w0, w1, w2, w3) in coordinate components."""
    F = eq.rhs
    return (
        Form(1, {(0,): -x1, (1,): 1}),
        Form(1, {(0,): -x2, (2,): 1}),
        Form(1, {(0,): -F, (3,): 1}),
        Form(1, {(0,): 1}),
    )


def _change_frame(a: Form, rows: Sequence[Sequence[sp.Expr]], frame: str) -> Form:
    # rows[i] expresses the i-th old basis one-form in the new basis.
    images = [Form(1, {(j,): c for j, c in enumerate(row)}, frame) for row in rows]
    result = Form(a.degree, {}, frame)
    for key, value in a.components.items():
        if not key:
            result = result + Form(0, {(): value}, frame)
            continue
        term = wedge_all(images[i] for i in key)
        result = result + term.scale(value)
    return result


def to_omega_frame(a: Form, eq: Equation) -> Form:
    """Re-express a coordinate-frame form in the omega coframe."""
    if a.frame == OMEGA:
        return a
    F = eq.rhs
    # dt = w3, dx0 = w0 + x1 w3, dx1 = w1 + x2 w3, dx2 = w2 + F w3
    rows = [
        (0, 0, 0, 1),
        (1, 0, 0, x1),
        (0, 1, 0, x2),
        (0, 0, 1, F),
    ]
    return _change_frame(a, rows, OMEGA)


def from_omega_frame(a: Form, eq: Equation) -> Form:
    """Re-express an omega-frame form in the coordinate coframe."""
    if a.frame == COORDINATE:
        return a
    rows = [[form.coefficient((i,)) for i in range(DIMENSION)] for form in omega_coframe(eq)]
    return _change_frame(a, rows, COORDINATE)


def alpha_form(eq: Equation, psi: sp.Expr) -> Form:
    """alpha_F = w3 - psi w0 = (1 + psi x1) dt - psi dx0."""
    return Form(1, {(0,): 1 + psi * x1, (1,): -psi})


def pullback(point_map: PointMap, a: Form) -> Form:
    """Pull a coordinate-frame form in the new jet coordinates back along the prolonged map."""
    if a.frame != COORDINATE:
        raise ValueError("pullback needs the coordinate frame")
    substitution = point_map.jet_substitution()
    differentials = [
        Form(1, {(v,): point_map.jacobian[i, v] for v in range(DIMENSION)})
        for i in range(DIMENSION)
    ]
    result = Form(a.degree, {})
    for key, value in a.components.items():
        coefficient = value.xreplace(substitution)
        if not key:
            result = result + Form(0, {(): coefficient})
            continue
        result = result + wedge_all(differentials[i] for i in key).scale(coefficient)
    return result


def evaluate_form(a: Form, point: Coordinates) -> Dict[Index, float]:
    """Floating component values at a point."""
    if not a.components:
        return {}
    keys = list(a.components)
    function = compile_expr(tuple(a.components[k] for k in keys))
    try:
        values = function(*float_coordinates(point))
    except (ZeroDivisionError, ValueError, TypeError) as exc:
        raise DomainError(str(exc)) from exc
    except OverflowError as exc:
        raise EvaluationOverflow(str(exc)) from exc
    result = {}
    for key, value in zip(keys, values):
        if isinstance(value, complex):
            raise DomainError(f"form component {key} is not real at {point}")
        result[key] = float(value)
    return result


def pullback_at(point_map: PointMap, a: Form, point: JetPoint) -> Dict[Index, float]:
    """Numeric pullback at a point: components at the image times Jacobian minors."""
    image = point_map.jet_map_at(point)
    values = evaluate_form(a, image)
    jacobian = point_map.jacobian_at(point)
    result: Dict[Index, float] = {}
    for target in combinations(range(DIMENSION), a.degree):
        total = 0.0
        for source, value in values.items():
            if not source:
                total += value
                continue
            minor = jacobian[np.ix_(source, target)]
            total += value * float(np.linalg.det(minor))
        result[target] = total
    return result
