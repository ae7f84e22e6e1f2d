"""Point invariants of x''' = F and the hyper-CR Einstein-Weyl classification.

Every quantity of one equation is computed lazily by an InvariantCalculator and
cached there; the module-level functions delegate to a shared calculator per
equation.
"""
import logging
from functools import cached_property, lru_cache
from typing import Dict, List, Optional, Tuple

import sympy as sp

from src.errors import TrivializableBranch
from src.exterior import Form, alpha_form, contraction, exterior_derivative, omega_coframe, wedge
from src.expr_core import is_zero, simplify, x0, x1, x2
from src.jet_calculus import Equation, distribution_frames, lie_bracket, total_derivative_field
from src.parser import render
from src.schemas import Classification, InvariantReport, SamplePlan, ZeroVerdict, combine_verdicts

logger = logging.getLogger(__name__)

R = sp.Rational

NAMED_INVARIANTS = ("F", "W", "C", "K0", "K1", "d3F", "Psi", "I1", "I2", "J0", "J1", "J2")


class InvariantCalculator:
    """Lazily computed invariants of one equation."""

    def __init__(self, eq: Equation):
        self.eq = eq
        self.X = total_derivative_field(eq)

    def D(self, e, n: int = 1) -> sp.Expr:
        """n-fold total derivative."""
        for _ in range(n):
            e = self.X.apply(e)
        return e

    @cached_property
    def F_x2x2(self) -> sp.Expr:
        return simplify(sp.diff(self.eq.F_x2, x2))

    @cached_property
    def d3F(self) -> sp.Expr:
        return simplify(sp.diff(self.F_x2x2, x2))

    @cached_property
    def X_F_x2(self) -> sp.Expr:
        return self.D(self.eq.F_x2)

    @cached_property
    def XX_F_x2(self) -> sp.Expr:
        return self.D(self.X_F_x2)

    @cached_property
    def W(self) -> sp.Expr:
        F0, F1, F2 = self.eq.F_x0, self.eq.F_x1, self.eq.F_x2
        return simplify(
            F0
            - R(1, 2) * self.D(F1)
            + R(1, 3) * F1 * F2
            + R(1, 6) * self.XX_F_x2
            - R(1, 3) * self.X_F_x2 * F2
            + R(2, 27) * F2**3
        )

    @cached_property
    def K0(self) -> sp.Expr:
        F0, F1, F2 = self.eq.F_x0, self.eq.F_x1, self.eq.F_x2
        return simplify(
            F0
            - self.D(F1)
            + R(1, 3) * F1 * F2
            + R(2, 3) * self.XX_F_x2
            - R(2, 3) * self.X_F_x2 * F2
            + R(2, 27) * F2**3
        )

    @cached_property
    def K1(self) -> sp.Expr:
        return simplify(self.eq.F_x1 - self.X_F_x2 + R(1, 3) * self.eq.F_x2**2)

    @cached_property
    def C(self) -> sp.Expr:
        return simplify(
            self.D(self.F_x2x2, 2)
            - self.D(sp.diff(self.eq.F_x1, x2))
            + sp.diff(self.eq.F_x0, x2)
        )

    @property
    def trivializable(self) -> bool:
        return self.d3F == 0

    @cached_property
    def Psi(self) -> sp.Expr:
        if self.trivializable:
            raise TrivializableBranch(
                f"third x2-derivative of F = {self.eq.rhs} vanishes; "
                "the equation is point equivalent to x''' = 0"
            )
        return simplify(sp.diff(self.K1, x2, 3) / (2 * self.d3F))

    @cached_property
    def I1(self) -> sp.Expr:
        return simplify(sp.diff(self.Psi, x1) - self.Psi**2)

    @cached_property
    def I2(self) -> sp.Expr:
        return simplify(sp.diff(self.Psi, x2))

    @cached_property
    def X_Psi(self) -> sp.Expr:
        return self.D(self.Psi)

    @cached_property
    def XX_Psi(self) -> sp.Expr:
        return self.D(self.X_Psi)

    @cached_property
    def J0(self) -> sp.Expr:
        K1, Psi = self.K1, self.Psi
        return simplify(
            sp.diff(K1, x0)
            + 2 * self.X_Psi * K1
            + Psi * self.D(K1)
            - 2 * self.D(self.XX_Psi)
            - 2 * self.eq.F_x0 * Psi
        )

    @cached_property
    def J1(self) -> sp.Expr:
        K1, Psi = self.K1, self.Psi
        return simplify(
            sp.diff(K1, x1) + 2 * Psi * K1 - 6 * self.XX_Psi - 2 * self.eq.F_x1 * Psi
        )

    @cached_property
    def J2(self) -> sp.Expr:
        return simplify(
            sp.diff(self.K1, x2) - 6 * self.X_Psi - 2 * self.eq.F_x2 * self.Psi
        )

    @cached_property
    def alpha(self) -> Form:
        return alpha_form(self.eq, self.Psi)

    @cached_property
    def i_form(self) -> Form:
        return wedge(exterior_derivative(self.alpha), self.alpha)

    @cached_property
    def i_form_closed(self) -> Form:
        w0, w1, w2, _ = omega_coframe(self.eq)
        return wedge(wedge(w1.scale(-self.I1) + w2.scale(-self.I2), w0), self.alpha)

    @cached_property
    def j_form(self) -> Form:
        w0, w1, w2, _ = omega_coframe(self.eq)
        combination = w0.scale(self.J0) + w1.scale(self.J1) + w2.scale(self.J2)
        return wedge(combination, self.alpha)

    def named(self, name: str) -> sp.Expr:
        if name == "F":
            return self.eq.rhs
        if name not in NAMED_INVARIANTS:
            raise KeyError(f"unknown invariant {name!r}; choose from {', '.join(NAMED_INVARIANTS)}")
        return getattr(self, name)


@lru_cache(maxsize=64)
def calculator(eq: Equation) -> InvariantCalculator:
    """Shared calculator per equation."""
    return InvariantCalculator(eq)


def wunschmann(eq: Equation) -> sp.Expr:
    return calculator(eq).W


def k_invariants(eq: Equation) -> Tuple[sp.Expr, sp.Expr]:
    calc = calculator(eq)
    return calc.K0, calc.K1


def cartan(eq: Equation) -> sp.Expr:
    return calculator(eq).C


def psi(eq: Equation) -> sp.Expr:
    """Psi = d^3_{x2} K1 / (2 d^3_{x2} F); raises TrivializableBranch when the denominator is 0."""
    return calculator(eq).Psi


def i_coefficients(eq: Equation) -> Tuple[sp.Expr, sp.Expr]:
    calc = calculator(eq)
    return calc.I1, calc.I2


def i_form(eq: Equation) -> Form:
    """The 3-form d alpha_F ^ alpha_F."""
    return calculator(eq).i_form


def i_form_closed(eq: Equation) -> Form:
    """-(I1 w1 + I2 w2) ^ w0 ^ alpha_F."""
    return calculator(eq).i_form_closed


def j_coefficients(
    eq: Equation, plan: Optional[SamplePlan] = None
) -> Tuple[sp.Expr, sp.Expr, sp.Expr, bool]:
    """(J0, J1, J2, valid); valid iff W and the I-form vanish."""
    calc = calculator(eq)
    coefficients = (calc.J0, calc.J1, calc.J2)
    plan = (plan or SamplePlan.from_settings()).with_guards(eq.guards)
    valid = is_zero(calc.W, plan).is_zero and combine_verdicts(
        [is_zero(calc.I1, plan), is_zero(calc.I2, plan)]
    ).is_zero
    return coefficients + (valid,)


def j_form(eq: Equation) -> Form:
    """(J0 w0 + J1 w1 + J2 w2) ^ alpha_F."""
    return calculator(eq).j_form


# Consistency identities

def wunschmann_identity_residual(eq: Equation) -> sp.Expr:
    """W - K0 - X_F(K1)/2."""
    calc = calculator(eq)
    return simplify(calc.W - calc.K0 - R(1, 2) * calc.D(calc.K1))


def cartan_identity_residual(eq: Equation) -> sp.Expr:
    """C - (3/2 d_x1 K1 + d_x2 F d_x2 K1 + 3/2 d_x2 K0)."""
    calc = calculator(eq)
    return simplify(
        calc.C
        - R(3, 2) * sp.diff(calc.K1, x1)
        - eq.F_x2 * sp.diff(calc.K1, x2)
        - R(3, 2) * sp.diff(calc.K0, x2)
    )


def closing_identity_residual(eq: Equation) -> sp.Expr:
    """C - (3/2 d_x2 W - 3/4 X_F(J2) + 3/4 J1 + 1/4 d_x2 F J2)."""
    calc = calculator(eq)
    return simplify(
        calc.C
        - R(3, 2) * sp.diff(calc.W, x2)
        + R(3, 4) * calc.D(calc.J2)
        - R(3, 4) * calc.J1
        - R(1, 4) * eq.F_x2 * calc.J2
    )


def i_form_two_path_residual(eq: Equation) -> Form:
    """d alpha ^ alpha minus its closed form; the zero 3-form when both paths agree."""
    return i_form(eq) - i_form_closed(eq)


# Multiplier conditions for a given g

def projective_residual(eq: Equation, g) -> sp.Expr:
    """3 X_F(g)^2 - 2 g X_F^2(g); zero when g^{-1} X_F stays projective."""
    calc = calculator(eq)
    Xg = calc.D(g)
    return simplify(3 * Xg**2 - 2 * g * calc.D(Xg))


def existence_residual(eq: Equation, g) -> sp.Expr:
    """-2 g X_F^2(g) + 3 X_F(g)^2 - g^2 K1; zero when g^{-1} X_F kills K1."""
    calc = calculator(eq)
    return simplify(projective_residual(eq, g) - g**2 * calc.K1)


def multiplier_condition_residual(eq: Equation, g) -> sp.Expr:
    """d_x1 g + Psi g, necessary for the existence equation to have a solution g."""
    return simplify(sp.diff(g, x1) + psi(eq) * g)


def frobenius_defect(eq: Equation) -> Dict[str, sp.Expr]:
    """alpha_F([Y, Z]) for pairs of the spanning fields of V = <V_F, d/dx1, d/dx2>.

    All three vanish iff V is involutive, i.e. iff I1 = I2 = 0.
    """
    calc = calculator(eq)
    V_F, d1, d2 = distribution_frames(eq, calc.Psi)["V"]
    pairs = {"V_F,d1": (V_F, d1), "V_F,d2": (V_F, d2), "d1,d2": (d1, d2)}
    defect = {}
    for label, (Y, Z) in pairs.items():
        value = contraction(calc.alpha, lie_bracket(Y, Z))
        defect[label] = value.coefficient(())
    return defect


# Classification

def decide_classification(
    trivializable: bool,
    w: Optional[ZeroVerdict],
    i: Optional[ZeroVerdict],
    j: Optional[ZeroVerdict],
    c: Optional[ZeroVerdict],
) -> Classification:
    """Decision table of the main classification theorem."""
    if trivializable:
        return Classification.POINT_TRIVIALIZABLE
    if not w.is_zero:
        return Classification.NOT_WUNSCHMANN
    if not i.is_zero or (j is not None and not j.is_zero):
        if c.is_zero:
            return Classification.EINSTEIN_WEYL_NOT_HYPER_CR
        return Classification.WUNSCHMANN_NOT_EINSTEIN_WEYL
    if j is None:
        raise ValueError("J verdict is required once W and I vanish")
    return Classification.HYPER_CR_EINSTEIN_WEYL


def classify(eq: Equation, plan: Optional[SamplePlan] = None) -> InvariantReport:
    """Compute the invariant verdicts of eq and its classification."""
    plan = (plan or SamplePlan.from_settings()).with_guards(eq.guards)
    calc = calculator(eq)
    notes: List[str] = []
    logger.info("classifying F = %s", eq.rhs)

    components: Dict[str, ZeroVerdict] = {"d3F": is_zero(calc.d3F, plan)}
    verdicts: Dict[str, Optional[ZeroVerdict]] = {
        "W": is_zero(calc.W, plan),
        "C": is_zero(calc.C, plan),
        "K0": is_zero(calc.K0, plan),
        "K1": is_zero(calc.K1, plan),
        "I": None,
        "J": None,
    }
    residuals = {
        "wunschmann_identity": is_zero(wunschmann_identity_residual(eq), plan),
        "cartan_identity": is_zero(cartan_identity_residual(eq), plan),
    }
    trivializable = components["d3F"].is_zero
    j_valid = False

    if trivializable and verdicts["W"].is_zero:
        notes.append("third x2-derivative of F vanishes: point equivalent to x''' = 0")
    elif trivializable:
        # W = 0 is point invariant, so a nonzero W rules out x''' = 0.
        logger.warning("d3F vanishes but W does not for F = %s", eq.rhs)
        notes.append(
            "third x2-derivative of F vanishes but W is nonzero: "
            "not point equivalent to x''' = 0"
        )
    else:
        components["I1"] = is_zero(calc.I1, plan)
        components["I2"] = is_zero(calc.I2, plan)
        verdicts["I"] = combine_verdicts([components["I1"], components["I2"]])
        if verdicts["W"].is_zero and verdicts["I"].is_zero:
            j_valid = True
            for name in ("J0", "J1", "J2"):
                components[name] = is_zero(getattr(calc, name), plan)
            verdicts["J"] = combine_verdicts([components[n] for n in ("J0", "J1", "J2")])
            residuals["closing_identity"] = is_zero(closing_identity_residual(eq), plan)

    classification = decide_classification(
        trivializable, verdicts["W"], verdicts["I"], verdicts["J"], verdicts["C"]
    )
    if classification is Classification.HYPER_CR_EINSTEIN_WEYL and not verdicts["C"].is_zero:
        logger.warning("C is nonzero although W, I and J vanish for F = %s", eq.rhs)
        notes.append("inconsistency: C nonzero in the hyper-CR branch")
    if trivializable and not verdicts["C"].is_zero:
        notes.append("C computed directly is nonzero although d3F vanishes")

    logger.info("classification: %s", classification.value)
    return InvariantReport(
        equation=render(eq.rhs),
        classification=classification,
        verdicts=verdicts,
        components=components,
        residuals=residuals,
        trivializable=trivializable,
        j_valid=j_valid,
        plan=plan.summary(),
        notes=notes,
    )
