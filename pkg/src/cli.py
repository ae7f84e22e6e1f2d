"""Command-line front end: classify, invariants, transform, verify, selftest.

stdout carries the report (text or JSON), stderr carries log diagnostics.
Exit codes: 0 success, 1 bad input, 2 domain or evaluation error, 3 resource
guard, 4 verification failure.
"""
import argparse
import json
import logging
import sys
from typing import Any, Dict, List, Optional, Sequence, Tuple

from pydantic import ValidationError

from src.config import get_settings
from src.errors import HyperCRError, NonRationalOperation, UsageError, VerificationFailed
from src.expr_core import eval_exact, eval_refined
from src.invariants import NAMED_INVARIANTS, calculator, classify, j_coefficients
from src.parser import parse_equation, parse_transformation, render
from src.schemas import CliConfig, InvariantReport, SamplePlan, SuiteResult
from src.transform import check_k1_rule, transformed_summary
from src import verification

logger = logging.getLogger(__name__)

DEFAULT_NAMES = ("W", "C", "K0", "K1")
J_NAMES = ("J0", "J1", "J2")


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message: str):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(
        prog="hypercr-ode",
        description="Point invariants and hyper-CR Einstein-Weyl classification of x''' = F.",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    def common(sub: argparse.ArgumentParser) -> None:
        sub.add_argument("--samples", type=int, help="Accepted samples per numeric zero test.")
        sub.add_argument("--seed", type=lambda s: int(s, 0), help="PRNG seed (default 0xDA7A).")
        sub.add_argument("--tol", type=float, help="Zero tolerance (default 1e-9).")
        sub.add_argument("--box", help="Sampling interval 'low,high' for every coordinate.")
        sub.add_argument("--format", choices=["text", "json"], default="text")
        sub.add_argument("-v", "--verbose", action="count", default=0, dest="verbosity")

    classify_cmd = subparsers.add_parser("classify", help="Classify an equation.")
    classify_cmd.add_argument("--equation", required=True, help="Right-hand side F.")
    common(classify_cmd)

    invariants_cmd = subparsers.add_parser("invariants", help="Print named invariants.")
    invariants_cmd.add_argument("--equation", required=True, help="Right-hand side F.")
    invariants_cmd.add_argument(
        "--name",
        action="append",
        dest="names",
        default=[],
        help=f"Invariant to print, repeatable; one of {', '.join(NAMED_INVARIANTS)}.",
    )
    invariants_cmd.add_argument("--point", help="Evaluate at 't,x0,x1,x2' (rationals allowed).")
    common(invariants_cmd)

    transform_cmd = subparsers.add_parser("transform", help="Apply a point transformation.")
    transform_cmd.add_argument("--equation", required=True, help="Right-hand side F.")
    transform_cmd.add_argument("--map-t", dest="map_t", help="New independent variable t~(t, x).")
    transform_cmd.add_argument("--map-x", dest="map_x", help="New dependent variable x~(t, x).")
    transform_cmd.add_argument("--inv-t", dest="inv_t", help="Inverse t(t~, x~), written in t, x.")
    transform_cmd.add_argument("--inv-x", dest="inv_x", help="Inverse x(t~, x~), written in t, x.")
    common(transform_cmd)

    for name, text in (
        ("verify", "Run the identity, two-path, bracket, transformation and derivative suites."),
        ("selftest", "Classify the reference equations and compare with expectations."),
    ):
        common(subparsers.add_parser(name, help=text))
    return parser


def parse_config(argv: Optional[Sequence[str]] = None) -> CliConfig:
    """Parse command-line arguments into a validated CliConfig."""
    namespace = build_parser().parse_args(argv)
    return CliConfig(**{k: v for k, v in vars(namespace).items() if v is not None})


def _dump(document: Dict[str, Any]) -> str:
    return json.dumps(document, indent=2, sort_keys=True, ensure_ascii=False)


def _plan_line(plan: SamplePlan) -> str:
    summary = plan.summary()
    low, high = summary["box"][0]
    return (
        f"Plan: seed={summary['seed']:#x} samples={summary['samples']} "
        f"tol={summary['tol']:g} box=[{low:g},{high:g}] margin={summary['margin']:g}"
    )


def _verdict_text(name: str, entry: Dict[str, Any]) -> str:
    status = entry["status"]
    if status == "NotComputed":
        line = f"  ·  {name:<3} not computed"
    elif status == "NonZero":
        witness = entry.get("witness", {})
        at = ", ".join(f"{k}={witness[k]}" for k in ("t", "x0", "x1", "x2") if k in witness)
        line = f"  ≠0 {name:<3} NonZero, value {entry['value']:.6g} at ({at})"
    elif status == "NumericallyZero":
        line = f"  =0 {name:<3} NumericallyZero (max |value| {entry['max_abs']:.2e})"
    else:
        line = f"  =0 {name:<3} SymbolicZero"
    if name == "J" and status != "NotComputed" and not entry.get("valid", False):
        line += " (not a relative invariant here)"
    return line


def format_report(report: InvariantReport, plan: SamplePlan) -> str:
    """Human-readable classification report; carries the same verdicts as the JSON one."""
    document = report.to_json_dict()
    lines = [f"Equation: x''' = {report.equation}"]
    for name, entry in document["verdicts"].items():
        lines.append(_verdict_text(name, entry))
    for name, verdict in sorted(report.residuals.items()):
        marker = "✅" if verdict.is_zero else "❌"
        lines.append(f"  {marker} {name} residual {verdict.status}")
    for note in report.notes:
        lines.append(f"  ⚠️ {note}")
    lines.append(f"Classification: {report.classification.value}")
    lines.append(_plan_line(plan))
    return "\n".join(lines)


def _classify(config: CliConfig, plan: SamplePlan) -> Tuple[int, str]:
    report = classify(parse_equation(config.equation), plan)
    if config.format == "json":
        return 0, _dump(report.to_json_dict())
    return 0, format_report(report, plan)


def _point_value(expr, config: CliConfig) -> str:
    try:
        return str(eval_exact(expr, config.point))
    except NonRationalOperation:
        return repr(eval_refined(expr, config.point))


def _invariants(config: CliConfig, plan: SamplePlan) -> Tuple[int, str]:
    eq = parse_equation(config.equation)
    calc = calculator(eq)
    names = config.names or list(DEFAULT_NAMES)
    unknown = [n for n in names if n not in NAMED_INVARIANTS]
    if unknown:
        raise UsageError(f"unknown invariant {', '.join(unknown)}; choose from {', '.join(NAMED_INVARIANTS)}")
    j_valid: Optional[bool] = None
    if any(name in J_NAMES for name in names):
        j_valid = j_coefficients(eq, plan)[3]
        if not j_valid:
            logger.warning("⚠️ J is not a relative invariant here: W or I does not vanish")
    values: Dict[str, Dict[str, Any]] = {}
    for name in names:
        expr = calc.named(name)
        entry: Dict[str, Any] = {"expression": render(expr)}
        if config.point is not None:
            entry["value"] = _point_value(expr, config)
        if name in J_NAMES:
            entry["valid"] = j_valid
        values[name] = entry
    if config.format == "json":
        document: Dict[str, Any] = {"equation": render(eq.rhs), "invariants": values}
        if config.point is not None:
            document["point"] = config.point.model_dump(mode="json")
        return 0, _dump(document)
    lines = []
    for name, entry in values.items():
        line = f"{name} = {entry['expression']}"
        if "value" in entry:
            line += f"    [{entry['value']} at ({', '.join(str(v) for v in config.point.exact())})]"
        if entry.get("valid") is False:
            line += "    ⚠️ invalid: W or I nonzero"
        lines.append(line)
    if len(names) == 1 and config.point is None and j_valid is not False:
        return 0, values[names[0]]["expression"]
    return 0, "\n".join(lines)


def _transform(config: CliConfig, plan: SamplePlan) -> Tuple[int, str]:
    eq = parse_equation(config.equation)
    point_map = parse_transformation(
        config.map_t, config.map_x, config.inv_t, config.inv_x, plan=plan, name="cli"
    )
    summary = transformed_summary(point_map, eq)
    k1 = check_k1_rule(eq, point_map, plan)
    if config.format == "json":
        document = dict(summary)
        document["plan"] = plan.summary()
        document["k1_rule"] = {"passed": k1.passed, "worst_residual": k1.worst_residual}
        return 0, _dump(document)
    marker = "✅" if k1.passed else "❌"
    return 0, "\n".join(
        [
            f"x''' = {summary['equation']}",
            f"x~''' = {summary['transformed']}",
            f"g = {summary['g']}",
            f"  {marker} K1 rule, worst residual {k1.worst_residual:.2e}",
            _plan_line(plan),
        ]
    )


def _suites(config: CliConfig, plan: SamplePlan, results: List[SuiteResult]) -> Tuple[int, str]:
    failed = [r.name for r in results if not r.passed]
    if config.format == "json":
        output = _dump(
            {"suites": [r.to_json_dict() for r in results], "passed": not failed, "plan": plan.summary()}
        )
    else:
        lines = []
        for result in results:
            marker = "✅" if result.passed else "❌"
            lines.append(
                f"{marker} {result.name}: {sum(o.passed for o in result.outcomes)}/"
                f"{len(result.outcomes)} passed ({result.elapsed_seconds:.1f}s)"
            )
            for outcome in result.outcomes:
                if not outcome.passed:
                    lines.append(f"    ❌ {outcome.name} {outcome.detail}")
        lines.append(_plan_line(plan))
        output = "\n".join(lines)
    if failed:
        logger.error("❌ %s", VerificationFailed(failed))
        return VerificationFailed.exit_code, output
    return 0, output


def run(config: CliConfig) -> Tuple[int, str]:
    """Execute one command; returns the exit code and the report for stdout."""
    try:
        plan = config.plan()
        if config.command == "classify":
            return _classify(config, plan)
        if config.command == "invariants":
            return _invariants(config, plan)
        if config.command == "transform":
            return _transform(config, plan)
        if config.command == "verify":
            return _suites(config, plan, verification.run_all(plan))
        return _suites(config, plan, [verification.selftest(plan)])
    except HyperCRError as exc:
        logger.error("❌ %s: %s", type(exc).__name__, exc)
        return exc.exit_code, _error_output(exc.to_dict(), config.format)


def _error_output(error: Dict[str, Any], output_format: str) -> str:
    if output_format == "json":
        return _dump({"error": error})
    return f"❌ {error['type']}: {error['message']}"


def configure_logging(verbosity: int) -> None:
    if verbosity >= 2:
        level = logging.DEBUG
    elif verbosity == 1:
        level = logging.INFO
    else:
        level = getattr(logging, get_settings().log_level.upper(), logging.WARNING)
    logging.basicConfig(
        stream=sys.stderr,
        level=level,
        format="%(levelname)s %(name)s: %(message)s",
        force=True,
    )


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Entry point of the hypercr-ode script."""
    argv = list(sys.argv[1:] if argv is None else argv)
    wants_json = "--format=json" in argv or ("--format" in argv and "json" in argv)
    try:
        config = parse_config(argv)
    except UsageError as exc:
        print(_error_output(exc.to_dict(), "json" if wants_json else "text"))
        return exc.exit_code
    except ValidationError as exc:
        messages = "; ".join(err["msg"] for err in exc.errors())
        print(_error_output({"type": "ValidationError", "message": messages}, "json" if wants_json else "text"))
        return 1
    configure_logging(config.verbosity)
    code, output = run(config)
    print(output)
    return code


if __name__ == "__main__":
    sys.exit(main())
