"""Symbolic-expression kernel over the 2-jet coordinates (t, x0, x1, x2).

Expressions are sympy expressions in the four jet symbols below. This module adds
the canonicalization policy, a size guard, exact and floating evaluation, domain
guards and the sampling-based zero test the invariant pipeline relies on.
"""
import logging
from fractions import Fraction
from functools import lru_cache
from typing import (
    Callable,
    Dict,
    Iterator,
    List,
    Mapping,
    Optional,
    Sequence,
    Tuple,
    TypeVar,
    Union,
)

import mpmath
import numpy as np
import sympy as sp

from src.config import get_settings
from src.errors import (
    DivisionByZero,
    DomainError,
    EvaluationOverflow,
    ExpressionTooLarge,
    NonRationalOperation,
    SamplingExhausted,
)
from src.schemas import DomainGuard, JetPoint, SamplePlan, ZeroVerdict

logger = logging.getLogger(__name__)

Expr = sp.Expr

t, x0, x1, x2 = sp.symbols("t x0 x1 x2")
JET_SYMBOLS = (t, x0, x1, x2)
SYMBOLS_BY_NAME = {s.name: s for s in JET_SYMBOLS}

# Sample coordinates live on a dyadic grid so every point is an exact rational.
GRID_RESOLUTION = 1 << 16
REFINE_DIGITS = 60
MAX_REFINE_DIGITS = 480
# Two precision levels agree when they differ by at most this, relative to 1 + |value|.
REFINE_AGREEMENT = 1e-15

T = TypeVar("T")


def as_symbol(variable: Union[str, sp.Symbol]) -> sp.Symbol:
    """Resolve a variable name or symbol to one of the four jet symbols."""
    if isinstance(variable, sp.Symbol) and variable in JET_SYMBOLS:
        return variable
    if isinstance(variable, str) and variable in SYMBOLS_BY_NAME:
        return SYMBOLS_BY_NAME[variable]
    raise ValueError(f"unknown jet variable {variable!r}")


def _unique_nodes(e: Expr) -> Iterator[Expr]:
    seen = set()
    stack = [e]
    while stack:
        node = stack.pop()
        if node in seen:
            continue
        seen.add(node)
        yield node
        stack.extend(node.args)


def node_count(e: Expr) -> int:
    """Number of distinct sub-expressions of e."""
    return sum(1 for _ in _unique_nodes(e))


def check_size(e: Expr, limit: Optional[int] = None) -> int:
    """Return the node count of e, raising ExpressionTooLarge above the guard."""
    limit = limit or get_settings().max_nodes
    nodes = node_count(e)
    if nodes > limit:
        raise ExpressionTooLarge(nodes, limit)
    return nodes


def _rational_normal_form(e: Expr) -> Expr:
    numerator, denominator = sp.fraction(sp.together(e))
    numerator = sp.expand(numerator)
    if numerator == 0:
        return sp.S.Zero
    denominator = sp.expand(denominator)
    return numerator / denominator


def _radical_form(e: Expr, nodes: int, limit: int) -> Expr:
    # Expanding products of radicals and negative powers of sums multiplies out
    # terms that later cancel catastrophically in floating point.
    if nodes > limit:
        return e
    expanded = sp.expand(e)
    if node_count(expanded) <= nodes:
        return expanded
    return e


def simplify(e) -> Expr:
    """Return the canonical form of e.

    Polynomials are fully expanded, rational functions are put over a common
    denominator with expanded numerator and denominator. Expressions with
    fractional powers stay in sympy's automatic form (flattened, like terms
    collected, u^a * u^b -> u^(a+b)); a small one is replaced by its expansion
    only when that does not grow it.
    """
    e = sp.sympify(e)
    settings = get_settings()
    nodes = check_size(e, settings.max_nodes)
    if e.is_Atom:
        return e
    if e.is_polynomial(*JET_SYMBOLS):
        out = sp.expand(e)
    elif e.is_rational_function(*JET_SYMBOLS):
        out = _rational_normal_form(e)
    else:
        out = _radical_form(e, nodes, settings.expand_limit)
    check_size(out, settings.max_nodes)
    return out


def diff(e: Expr, variable: Union[str, sp.Symbol], order: int = 1) -> Expr:
    """Exact partial derivative of e with respect to a jet variable."""
    return simplify(sp.diff(e, as_symbol(variable), order))


def substitute(e: Expr, bindings: Mapping) -> Expr:
    """Simultaneously replace jet variables by expressions, then simplify."""
    mapping = {as_symbol(k): sp.sympify(v) for k, v in bindings.items()}
    return simplify(sp.sympify(e).xreplace(mapping))


def eval_exact(e: Expr, point: JetPoint) -> Fraction:
    """Evaluate e at a point in exact rational arithmetic."""
    values = {
        sym: sp.Rational(v.numerator, v.denominator)
        for sym, v in zip(JET_SYMBOLS, point.exact())
    }
    result = sp.sympify(e).xreplace(values)
    if result.has(sp.zoo, sp.nan, sp.oo, -sp.oo):
        raise DivisionByZero(f"{e} has a vanishing denominator at {point.floats()}")
    if not result.is_Rational:
        raise NonRationalOperation(f"{e} is not rational at {point.floats()}: {result}")
    return Fraction(int(result.p), int(result.q))


@lru_cache(maxsize=2048)
def compile_expr(e: Expr, backend: str = "math") -> Callable:
    """Compile e (or a tuple of expressions) into a callable of (t, x0, x1, x2)."""
    target = list(e) if isinstance(e, tuple) else e
    return sp.lambdify(JET_SYMBOLS, target, modules=backend, cse=True)


def _checked(value, what: Expr):
    if isinstance(value, (complex, mpmath.mpc)):
        raise DomainError(f"{what} is not real at this point")
    if isinstance(value, mpmath.mpf):
        if not mpmath.isfinite(value):
            raise DomainError(f"{what} is not finite at this point")
        return value
    value = float(value)
    if value != value:
        raise DomainError(f"{what} evaluates to NaN")
    if value in (float("inf"), float("-inf")):
        raise EvaluationOverflow(f"{what} overflowed")
    return value


def _call(function: Callable, args, what: Expr):
    try:
        return function(*args)
    except ZeroDivisionError as exc:
        raise DomainError(f"division by zero in {what}") from exc
    except OverflowError as exc:
        raise EvaluationOverflow(str(exc)) from exc
    except (ValueError, TypeError) as exc:
        raise DomainError(str(exc)) from exc


Coordinates = Union[JetPoint, Sequence[float]]


def float_coordinates(point: Coordinates) -> Tuple[float, ...]:
    """Floating (t, x0, x1, x2) of a JetPoint or of a plain coordinate sequence."""
    if isinstance(point, JetPoint):
        return point.floats()
    return tuple(float(v) for v in point)


def eval_float(e: Expr, point: Coordinates) -> float:
    """Evaluate e at a point in IEEE double precision."""
    e = sp.sympify(e)
    return _checked(_call(compile_expr(e), float_coordinates(point), e), e)


def _eval_mpmath(e: Expr, point: JetPoint, digits: int):
    function = compile_expr(e, "mpmath")
    with mpmath.workdps(digits):
        args = [mpmath.mpf(v.numerator) / v.denominator for v in point.exact()]
        return _checked(_call(function, args, e), e)


def refine(
    e: Expr,
    point: JetPoint,
    digits: int = REFINE_DIGITS,
    max_digits: int = MAX_REFINE_DIGITS,
) -> Tuple[mpmath.mpf, int]:
    """Evaluate e with mpmath, doubling the precision until two levels agree.

    Returns the value (an mpf) and the precision in digits it was confirmed at.
    Agreement means the two values differ by at most REFINE_AGREEMENT relative
    to 1 + |value|; at max_digits the last value is returned as is.
    """
    e = sp.sympify(e)
    previous = _eval_mpmath(e, point, digits)
    while digits < max_digits:
        digits = min(2 * digits, max_digits)
        current = _eval_mpmath(e, point, digits)
        with mpmath.workdps(digits):
            if abs(current - previous) <= REFINE_AGREEMENT * (1 + abs(current)):
                return current, digits
        previous = current
    logger.debug("refinement of %s at %s stopped at %d digits", e, point.floats(), digits)
    return previous, digits


def eval_refined(e: Expr, point: JetPoint, digits: int = REFINE_DIGITS) -> float:
    """Evaluate e with mpmath at adaptively raised precision, rounded to a double."""
    value, _ = refine(e, point, digits)
    return float(value)


def domain_guards(e: Expr) -> List[DomainGuard]:
    """Guards keeping samples away from branch points and poles of e.

    Every base raised to a fractional power must be positive; every base raised
    to a negative power must be nonzero.
    """
    guards: Dict[Tuple[str, str], DomainGuard] = {}
    for node in _unique_nodes(sp.sympify(e)):
        if not node.is_Pow:
            continue
        base, exponent = node.args
        if base.is_number or not exponent.is_Rational:
            continue
        if not exponent.is_Integer:
            guard = DomainGuard(expr=base, kind="positive")
        elif exponent.is_negative:
            guard = DomainGuard(expr=base, kind="nonzero")
        else:
            continue
        guards.setdefault(guard.key(), guard)
    return [guards[k] for k in sorted(guards)]


def guards_hold(plan: SamplePlan, point: JetPoint) -> bool:
    """Whether every guard of the plan holds at the point with the plan's margin."""
    for guard in plan.guards:
        try:
            value = eval_float(guard.expr, point)
        except (DomainError, EvaluationOverflow):
            return False
        if guard.kind == "positive" and value < plan.margin:
            return False
        if guard.kind == "nonzero" and abs(value) < plan.margin:
            return False
    return True


def candidate_points(plan: SamplePlan) -> Iterator[JetPoint]:
    """Endless deterministic stream of grid points inside the plan's box."""
    rng = np.random.default_rng(plan.seed)
    while True:
        steps = rng.integers(0, GRID_RESOLUTION + 1, size=4)
        coords = []
        for (low, high), k in zip(plan.box, steps):
            low, high = Fraction(low), Fraction(high)
            coords.append(low + (high - low) * Fraction(int(k), GRID_RESOLUTION))
        yield JetPoint.from_sequence(coords)


def collect_samples(
    plan: SamplePlan,
    evaluate: Callable[[JetPoint], T],
    wanted: Optional[int] = None,
) -> List[Tuple[JetPoint, T]]:
    """Rejection-sample points satisfying the plan's guards where evaluate succeeds.

    Args:
        plan: Sampling plan with box, seed and guards
        evaluate: Function of a point; domain errors count as rejections
        wanted: Number of accepted samples (defaults to plan.count)

    Returns:
        List of (point, value) pairs
    """
    wanted = wanted or plan.count
    max_attempts = 1000 * wanted
    accepted: List[Tuple[JetPoint, T]] = []
    attempts = 0
    for point in candidate_points(plan):
        if len(accepted) >= wanted:
            break
        if attempts >= max_attempts:
            raise SamplingExhausted(len(accepted), wanted, attempts)
        attempts += 1
        if not guards_hold(plan, point):
            continue
        try:
            accepted.append((point, evaluate(point)))
        except (DomainError, EvaluationOverflow, DivisionByZero) as exc:
            logger.debug("rejected sample %s: %s", point.floats(), exc)
    logger.debug("accepted %d samples in %d attempts", len(accepted), attempts)
    return accepted


def _magnitude_scale(e: Expr, point: JetPoint, digits: Optional[int] = None):
    """Summed magnitude of the top-level terms of e at a point.

    Computed in double precision unless digits is given or doubles overflow, in
    which case mpmath is used and an mpf is returned.
    """
    terms = tuple(e.args) if e.is_Add else (e,)
    if digits is None:
        try:
            values = _call(compile_expr(terms), point.floats(), e)
            scale = float(sum(abs(complex(v)) for v in values))
            if scale != float("inf"):
                return scale
        except (DomainError, EvaluationOverflow):
            pass
        digits = REFINE_DIGITS
    function = compile_expr(terms, "mpmath")
    try:
        with mpmath.workdps(digits):
            args = [mpmath.mpf(v.numerator) / v.denominator for v in point.exact()]
            values = [_checked(v, e) for v in _call(function, args, e)]
            return mpmath.fsum(abs(v) for v in values)
    except (DomainError, EvaluationOverflow) as exc:
        logger.debug("no magnitude scale for %s at %s: %s", e, point.floats(), exc)
        return 0.0


def is_zero(e: Expr, plan: SamplePlan) -> ZeroVerdict:
    """Decide whether e vanishes identically.

    Symbolic zero after simplify wins; otherwise plan.count guarded samples are
    drawn. A sample counts as zero when |value| <= tol * (1 + scale), scale being
    the summed magnitude of the top-level terms. A sample failing that test in
    double precision is re-evaluated with mpmath at rising precision, and only
    a confirmed value gives a NonZero verdict.
    """
    e = simplify(e)
    if e == 0:
        return ZeroVerdict.symbolic()
    plan = plan.with_guards(domain_guards(e))
    samples = collect_samples(plan, lambda p: eval_float(e, p))
    max_abs = 0.0
    for point, value in samples:
        if abs(value) <= plan.tolerance or abs(value) <= plan.tolerance * (
            1 + _magnitude_scale(e, point)
        ):
            max_abs = max(max_abs, abs(value))
            continue
        refined, digits = refine(e, point)
        with mpmath.workdps(digits):
            bound = plan.tolerance * (1 + _magnitude_scale(e, point, digits))
            if abs(refined) > bound:
                return ZeroVerdict.nonzero(point, float(refined))
        logger.debug(
            "residue %.3g at %s cancelled at %d digits", value, point.floats(), digits
        )
        max_abs = max(max_abs, float(abs(refined)))
    return ZeroVerdict.numeric(max_abs=max_abs, count=len(samples))
