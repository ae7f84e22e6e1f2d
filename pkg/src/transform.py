"""Point transformations of third-order ODEs and checks of the relative-invariance rules."""
import logging
from typing import Any, Callable, Dict, Iterable, List, Literal, Optional

from src.errors import PreconditionViolated
from src.exterior import evaluate_form, pullback_at
from src.expr_core import collect_samples, domain_guards, eval_float, is_zero, simplify, t
from src.invariants import calculator, classify, projective_residual
from src.jet_calculus import Equation, PointMap, prolong, total_derivative
from src.parser import render
from src.schemas import DomainGuard, InvarianceCheck, JetPoint, SamplePlan, combine_verdicts

logger = logging.getLogger(__name__)

RULE_TOLERANCE = 1e-8


def apply(point_map: PointMap, eq: Equation, plan: Optional[SamplePlan] = None) -> Equation:
    """The equation satisfied by x~(t~) when x(t) solves eq."""
    return prolong(point_map, eq, plan)


def _relative(lhs: float, rhs: float) -> float:
    return abs(lhs - rhs) / (1.0 + abs(rhs))


def _sampled_check(
    rule: str,
    eq: Equation,
    point_map: PointMap,
    plan: SamplePlan,
    residual_at: Callable[[JetPoint], float],
    tolerance: float,
    guards: Iterable[DomainGuard] = (),
    details: Optional[Dict[str, Any]] = None,
) -> InvarianceCheck:
    plan = (
        plan.with_guards(eq.guards)
        .with_guards(point_map.sample_guards())
        .with_guards(guards)
    )
    samples = collect_samples(plan, residual_at)
    worst_point, worst = max(samples, key=lambda sample: sample[1])
    passed = worst <= tolerance
    if passed:
        logger.info("%s holds for %s under %s (worst %.2e)", rule, eq, point_map.name, worst)
    else:
        logger.warning("%s fails for %s under %s: %.3e", rule, eq, point_map.name, worst)
    return InvarianceCheck(
        rule=rule,
        map_name=point_map.name,
        equation=render(eq.rhs),
        residuals=[r for _, r in samples],
        tolerance=tolerance,
        passed=passed,
        worst_point=worst_point,
        worst_residual=worst,
        details=details or {},
    )


def _symbolic_check(
    rule: str,
    eq: Equation,
    point_map: PointMap,
    passed: bool,
    tolerance: float,
    details: Dict[str, Any],
) -> InvarianceCheck:
    return InvarianceCheck(
        rule=rule,
        map_name=point_map.name,
        equation=render(eq.rhs),
        tolerance=tolerance,
        passed=passed,
        details=details,
    )


def check_k1_rule(
    eq: Equation,
    point_map: PointMap,
    plan: Optional[SamplePlan] = None,
    tolerance: float = RULE_TOLERANCE,
) -> InvarianceCheck:
    """K1(F~) at mapped points against g^-2 K1 + 2 g^-3 X_F^2(g) - 3 g^-4 X_F(g)^2."""
    plan = plan or SamplePlan.from_settings()
    calc = calculator(eq)
    g = point_map.multiplier
    Xg = calc.D(g)
    XXg = calc.D(Xg)
    expected = simplify(g**-2 * calc.K1 + 2 * g**-3 * XXg - 3 * g**-4 * Xg**2)
    transformed_k1 = calculator(apply(point_map, eq, plan)).K1

    def residual_at(point: JetPoint) -> float:
        lhs = eval_float(transformed_k1, point_map.jet_map_at(point))
        return _relative(lhs, eval_float(expected, point))

    details: Dict[str, Any] = {}
    if point_map.B == 0 and point_map.A.free_symbols <= {t}:
        # t-only maps: the derivative terms form a Schwarzian that vanishes for Moebius maps.
        details["projective_residual_zero"] = simplify(projective_residual(eq, g)) == 0
    return _sampled_check(
        "K1-rule",
        eq,
        point_map,
        plan,
        residual_at,
        tolerance,
        guards=domain_guards(expected),
        details=details,
    )


def check_form_scaling(
    eq: Equation,
    point_map: PointMap,
    which: Literal["I", "J"],
    plan: Optional[SamplePlan] = None,
    tolerance: float = RULE_TOLERANCE,
) -> InvarianceCheck:
    """Pullback of I(F~) against g^2 I(F), or of J(F~) against g^-1 J(F), componentwise."""
    plan = plan or SamplePlan.from_settings()
    calc = calculator(eq)
    if which == "J":
        guarded = plan.with_guards(eq.guards)
        w = is_zero(calc.W, guarded)
        i = combine_verdicts([is_zero(calc.I1, guarded), is_zero(calc.I2, guarded)])
        if not (w.is_zero and i.is_zero):
            raise PreconditionViolated(
                f"J is only a relative invariant when W and I vanish; F = {render(eq.rhs)}"
            )
        source, weight = calc.j_form, -1
    elif which == "I":
        source, weight = calc.i_form, 2
    else:
        raise ValueError(f"unknown form {which!r}")
    transformed = calculator(apply(point_map, eq, plan))
    target = transformed.j_form if which == "J" else transformed.i_form
    g = point_map.multiplier

    def residual_at(point: JetPoint) -> float:
        pulled = pullback_at(point_map, target, point)
        factor = eval_float(g, point) ** weight
        original = evaluate_form(source, point)
        worst = 0.0
        for key, value in pulled.items():
            worst = max(worst, _relative(value, factor * original.get(key, 0.0)))
        return worst

    guards: List[DomainGuard] = []
    for coefficient in source.components.values():
        guards.extend(domain_guards(coefficient))
    return _sampled_check(
        "I-scaling" if which == "I" else "J-scaling",
        eq,
        point_map,
        plan,
        residual_at,
        tolerance,
        guards=guards,
        details={"weight": weight},
    )


def check_triviality_preservation(
    point_map: PointMap,
    plan: Optional[SamplePlan] = None,
    eq: Optional[Equation] = None,
) -> InvarianceCheck:
    """F~ = apply(map, F) keeps d^3_{x2} F~ and W(F~) zero; F defaults to x''' = 0."""
    plan = plan or SamplePlan.from_settings()
    eq = eq or Equation(0)
    transformed = apply(point_map, eq, plan)
    calc = calculator(transformed)
    guarded = plan.with_guards(transformed.guards)
    d3 = is_zero(calc.d3F, guarded)
    w = is_zero(calc.W, guarded)
    return _symbolic_check(
        "triviality-preservation",
        eq,
        point_map,
        d3.is_zero and w.is_zero,
        plan.tolerance,
        {"transformed": render(transformed.rhs), "d3F": d3.status, "W": w.status},
    )


def check_w_vanishing(
    eq: Equation, point_map: PointMap, plan: Optional[SamplePlan] = None
) -> InvarianceCheck:
    """W(F) = 0 implies W(F~) = 0."""
    plan = plan or SamplePlan.from_settings()
    before = is_zero(calculator(eq).W, plan.with_guards(eq.guards))
    if not before.is_zero:
        raise PreconditionViolated(f"W does not vanish for F = {render(eq.rhs)}")
    transformed = apply(point_map, eq, plan)
    after = is_zero(calculator(transformed).W, plan.with_guards(transformed.guards))
    return _symbolic_check(
        "W-vanishing",
        eq,
        point_map,
        after.is_zero,
        plan.tolerance,
        {"before": before.status, "after": after.status, "max_abs": after.max_abs},
    )


def check_multiplier_consistency(point_map: PointMap, eq: Equation) -> InvarianceCheck:
    """g = A + B x1 agrees symbolically with X_F(t~)."""
    difference = simplify(total_derivative(eq, point_map.forward[0]) - point_map.multiplier)
    return _symbolic_check(
        "multiplier-consistency",
        eq,
        point_map,
        difference == 0,
        0.0,
        {"g": render(point_map.multiplier), "difference": render(difference)},
    )


def check_classification_invariance(
    eq: Equation, point_map: PointMap, plan: Optional[SamplePlan] = None
) -> InvarianceCheck:
    """classify(F) and classify(F~) agree."""
    plan = plan or SamplePlan.from_settings()
    before = classify(eq, plan).classification
    after = classify(apply(point_map, eq, plan), plan).classification
    return _symbolic_check(
        "classification-invariance",
        eq,
        point_map,
        before == after,
        plan.tolerance,
        {"before": before.value, "after": after.value},
    )


def transformed_summary(point_map: PointMap, eq: Equation) -> Dict[str, str]:
    """Rendered F~ and multiplier g, as reported by the transform command."""
    transformed = apply(point_map, eq)
    return {
        "map": point_map.name,
        "equation": render(eq.rhs),
        "transformed": render(transformed.rhs),
        "g": render(point_map.multiplier),
    }
