"""Batch verification suites run by the `verify` and `selftest` commands.

Each suite returns a SuiteResult made of named CheckOutcomes. Random equations
come from a seeded numpy Generator, so a suite is reproducible given its seed.
"""
import logging
import time
from typing import Callable, List, Optional

import numpy as np
import sympy as sp

from src.errors import HyperCRError
from src.exterior import contraction, omega_coframe
from src.expr_core import collect_samples, eval_float, simplify, t, x0, x1, x2
from src.fixtures import FixtureLibrary
from src.invariants import (
    calculator,
    classify,
    closing_identity_residual,
    cartan_identity_residual,
    frobenius_defect,
    i_form_two_path_residual,
    wunschmann_identity_residual,
)
from src.jet_calculus import (
    Equation,
    adjoint_power,
    coordinate_field,
    decompose_in_frame,
    total_derivative_field,
)
from src.schemas import CheckOutcome, JetPoint, SamplePlan, SuiteResult
from src.transform import (
    check_classification_invariance,
    check_form_scaling,
    check_k1_rule,
    check_multiplier_consistency,
    check_triviality_preservation,
    check_w_vanishing,
)

logger = logging.getLogger(__name__)

SUITE_SEED = 0xDA7A
FINITE_DIFFERENCE_STEP = 1e-6


def random_polynomial_equation(
    rng: np.random.Generator,
    terms: int = 4,
    require_cubic: bool = False,
    exclude_x2: bool = False,
) -> Equation:
    """Sparse pseudorandom polynomial F with integer coefficients in [-3, 3].

    Every variable appears with degree at most 3. With require_cubic, a constant
    multiple of x2^3 is added and the other terms stay below cubic in x2, so
    d^3_{x2} F is a nonzero constant. With exclude_x2, F does not depend on x2.
    """
    while True:
        rhs = sp.S.Zero
        for _ in range(terms):
            coefficient = int(rng.integers(1, 4)) * (1 if rng.random() < 0.5 else -1)
            dt, d0, d1 = (int(k) for k in rng.integers(0, 4, size=3))
            d2 = 0 if exclude_x2 else int(rng.integers(0, 3 if require_cubic else 4))
            rhs += coefficient * t**dt * x0**d0 * x1**d1 * x2**d2
        if require_cubic:
            rhs += int(rng.integers(1, 4)) * (1 if rng.random() < 0.5 else -1) * x2**3
        rhs = simplify(rhs)
        if rhs.is_number:
            continue
        return Equation(rhs)


def _outcome(name: str, check: Callable[[], bool], detail: str = "") -> CheckOutcome:
    try:
        passed = bool(check())
    except HyperCRError as exc:
        return CheckOutcome(name=name, passed=False, detail=f"{type(exc).__name__}: {exc}")
    if not passed:
        logger.warning("❌ %s failed %s", name, detail)
    return CheckOutcome(name=name, passed=passed, detail=detail)


def _timed(name: str, build: Callable[[], List[CheckOutcome]]) -> SuiteResult:
    start = time.perf_counter()
    logger.info("🔄 running %s suite", name)
    outcomes = build()
    result = SuiteResult(name=name, outcomes=outcomes, elapsed_seconds=time.perf_counter() - start)
    logger.info("%s %s suite: %d checks", "✅" if result.passed else "❌", name, len(outcomes))
    return result


def identity_suite(count: int = 20, seed: int = SUITE_SEED) -> SuiteResult:
    """W - K0 - X(K1)/2, the Cartan identity and the closing identity vanish symbolically."""

    def build() -> List[CheckOutcome]:
        rng = np.random.default_rng(seed)
        outcomes = []
        for k in range(count):
            eq = random_polynomial_equation(rng, require_cubic=(k % 2 == 0))
            label = f"F{k}"
            outcomes.append(
                _outcome(f"{label} wunschmann", lambda: wunschmann_identity_residual(eq) == 0, str(eq.rhs))
            )
            outcomes.append(
                _outcome(f"{label} cartan", lambda: cartan_identity_residual(eq) == 0, str(eq.rhs))
            )
            if not calculator(eq).trivializable:
                outcomes.append(
                    _outcome(f"{label} closing", lambda: closing_identity_residual(eq) == 0, str(eq.rhs))
                )
        return outcomes

    return _timed("identities", build)


def two_path_suite(count: int = 10, seed: int = SUITE_SEED + 1) -> SuiteResult:
    """d alpha ^ alpha equals -(I1 w1 + I2 w2) ^ w0 ^ alpha; Frobenius defect agrees."""

    def build() -> List[CheckOutcome]:
        rng = np.random.default_rng(seed)
        outcomes = []
        for k in range(count):
            eq = random_polynomial_equation(rng, require_cubic=True)
            outcomes.append(
                _outcome(f"F{k} I two-path", lambda: i_form_two_path_residual(eq).is_zero, str(eq.rhs))
            )

            def frobenius_matches() -> bool:
                calc = calculator(eq)
                involutive = all(simplify(v) == 0 for v in frobenius_defect(eq).values())
                return involutive == (calc.I1 == 0 and calc.I2 == 0)

            outcomes.append(_outcome(f"F{k} frobenius", frobenius_matches, str(eq.rhs)))
        return outcomes

    return _timed("two-path", build)


def bracket_suite(count: int = 5, seed: int = SUITE_SEED + 2) -> SuiteResult:
    """For F without x2, ad^3 d/dx2 = -K0 d/dx2 + K1 ad d/dx2 mod X_F."""

    def build() -> List[CheckOutcome]:
        rng = np.random.default_rng(seed)
        outcomes = []
        for k in range(count):
            eq = random_polynomial_equation(rng, exclude_x2=True)

            def matches() -> bool:
                calc = calculator(eq)
                field = adjoint_power(total_derivative_field(eq), coordinate_field(x2), 3)
                a, b, c, _ = decompose_in_frame(field, eq)
                return (
                    simplify(a + calc.K0) == 0
                    and simplify(b - calc.K1) == 0
                    and simplify(c) == 0
                )

            outcomes.append(_outcome(f"F{k} ad^3", matches, str(eq.rhs)))

            def coframe_dual() -> bool:
                X = total_derivative_field(eq)
                pairings = [contraction(w, X).coefficient(()) for w in omega_coframe(eq)]
                return [simplify(p) for p in pairings] == [0, 0, 0, 1]

            outcomes.append(_outcome(f"F{k} coframe", coframe_dual, str(eq.rhs)))
        return outcomes

    return _timed("brackets", build)


def transformation_suite(
    plan: Optional[SamplePlan] = None, library: Optional[FixtureLibrary] = None
) -> SuiteResult:
    """Relative-invariance checks of every fixture map on the fixture equations.

    Covers the K1 rule, I scaling, triviality and W-vanishing preservation, and
    classification invariance of every fixture equation.
    """
    plan = plan or SamplePlan.from_settings()
    library = library or FixtureLibrary()

    def build() -> List[CheckOutcome]:
        outcomes = []
        cubic, nil, trivial, dkp = (
            library.equation(n) for n in ("cubic", "nil", "trivial", "dkp")
        )
        for point_map in library.point_maps(plan):
            name = point_map.name
            for label, eq in (("cubic", cubic), ("nil", nil)):
                outcomes.append(
                    _outcome(f"{name} K1-rule {label}", lambda: check_k1_rule(eq, point_map, plan).passed)
                )
                outcomes.append(
                    _outcome(
                        f"{name} multiplier {label}",
                        lambda: check_multiplier_consistency(point_map, eq).passed,
                    )
                )
            outcomes.append(
                _outcome(f"{name} I-scaling cubic", lambda: check_form_scaling(cubic, point_map, "I", plan).passed)
            )
            outcomes.append(
                _outcome(f"{name} trivial", lambda: check_triviality_preservation(point_map, plan).passed)
            )
            for label, eq in (("nil", nil), ("trivial", trivial), ("dkp", dkp)):
                outcomes.append(
                    _outcome(f"{name} W-vanishing {label}", lambda: check_w_vanishing(eq, point_map, plan).passed)
                )
            for label in library.equation_names():
                eq = library.equation(label)
                outcomes.append(
                    _outcome(
                        f"{name} classification {label}",
                        lambda: check_classification_invariance(eq, point_map, plan).passed,
                    )
                )
        return outcomes

    return _timed("transformations", build)


def derivative_suite(
    plan: Optional[SamplePlan] = None,
    library: Optional[FixtureLibrary] = None,
    samples: int = 20,
    tolerance: float = 1e-6,
) -> SuiteResult:
    """Symbolic first partials of the dKP-type fixture against central differences."""
    plan = plan or SamplePlan.from_settings()
    library = library or FixtureLibrary()
    eq = library.equation("dkp")

    def build() -> List[CheckOutcome]:
        outcomes = []
        h = FINITE_DIFFERENCE_STEP
        guarded = plan.with_guards(eq.guards)
        for index, symbol in enumerate((t, x0, x1, x2)):
            exact = eq.partial(symbol)

            def relative_error(point: JetPoint) -> float:
                base = list(point.floats())
                forward, backward = list(base), list(base)
                forward[index] += h
                backward[index] -= h
                estimate = (eval_float(eq.rhs, forward) - eval_float(eq.rhs, backward)) / (2 * h)
                value = eval_float(exact, point)
                return abs(estimate - value) / max(1.0, abs(value))

            errors = [e for _, e in collect_samples(guarded, relative_error, wanted=samples)]
            worst = max(errors)
            outcomes.append(
                CheckOutcome(
                    name=f"dF/d{symbol.name}",
                    passed=worst < tolerance,
                    detail=f"worst relative error {worst:.2e} over {len(errors)} samples",
                )
            )
        return outcomes

    return _timed("derivatives", build)


def selftest(plan: Optional[SamplePlan] = None, library: Optional[FixtureLibrary] = None) -> SuiteResult:
    """Classify every fixture equation and compare with its expected classification."""
    plan = plan or SamplePlan.from_settings()
    library = library or FixtureLibrary()

    def build() -> List[CheckOutcome]:
        outcomes = []
        for name in library.equation_names():
            expected = library.expected_classification(name)
            try:
                report = classify(library.equation(name), plan)
            except HyperCRError as exc:
                outcomes.append(CheckOutcome(name=name, passed=False, detail=str(exc)))
                continue
            outcomes.append(
                CheckOutcome(
                    name=name,
                    passed=report.classification == expected,
                    detail=f"{report.classification.value} (expected {expected.value})",
                )
            )
        nil = calculator(library.equation("nil"))
        outcomes.append(CheckOutcome(name="nil K1 symbolic", passed=nil.K1 == 0))
        outcomes.append(CheckOutcome(name="nil W symbolic", passed=nil.W == 0))
        return outcomes

    return _timed("selftest", build)


def run_all(plan: Optional[SamplePlan] = None) -> List[SuiteResult]:
    """Every verification suite, in a fixed order."""
    plan = plan or SamplePlan.from_settings()
    library = FixtureLibrary()
    return [
        identity_suite(),
        two_path_suite(),
        bracket_suite(),
        transformation_suite(plan, library),
        derivative_suite(plan, library),
        selftest(plan, library),
    ]
