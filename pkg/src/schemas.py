"""Pydantic models shared by the symbolic kernel, the invariant pipeline and the CLI."""
import math
from enum import Enum
from fractions import Fraction
from typing import Any, Dict, List, Literal, Optional, Tuple

import sympy as sp
from pydantic import BaseModel, ConfigDict, Field, field_serializer, field_validator, model_validator

from src.config import Settings, get_settings

COORDINATE_NAMES = ("t", "x0", "x1", "x2")


def to_fraction(value: Any) -> Fraction:
    """Convert ints, floats, strings like "3/2" and sympy rationals to an exact Fraction."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise ValueError("booleans are not coordinates")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValueError(f"coordinate must be finite, got {value}")
        return Fraction(value)
    if isinstance(value, sp.Rational):
        return Fraction(int(value.p), int(value.q))
    if isinstance(value, str):
        return Fraction(value.strip())
    raise ValueError(f"cannot interpret {value!r} as a rational")


# Points and sampling

class JetPoint(BaseModel):
    """A point (t, x0, x1, x2) of the 2-jet space with exact rational coordinates."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    t: Fraction
    x0: Fraction
    x1: Fraction
    x2: Fraction

    @field_validator("t", "x0", "x1", "x2", mode="before")
    @classmethod
    def _exact(cls, value):
        return to_fraction(value)

    @field_serializer("t", "x0", "x1", "x2")
    def _as_text(self, value: Fraction) -> str:
        return str(value)

    @classmethod
    def from_sequence(cls, values) -> "JetPoint":
        values = list(values)
        if len(values) != 4:
            raise ValueError(f"a jet point needs 4 coordinates, got {len(values)}")
        return cls(**dict(zip(COORDINATE_NAMES, values)))

    def exact(self) -> Tuple[Fraction, Fraction, Fraction, Fraction]:
        return (self.t, self.x0, self.x1, self.x2)

    def floats(self) -> Tuple[float, float, float, float]:
        """Parallel floating view of the coordinates."""
        return tuple(float(v) for v in self.exact())


class DomainGuard(BaseModel):
    """A condition sampled points must satisfy, with the plan's margin.

    kind "positive" requires expr >= margin; kind "nonzero" requires |expr| >= margin.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    expr: sp.Expr
    kind: Literal["positive", "nonzero"]

    def key(self) -> Tuple[str, str]:
        return (self.kind, sp.srepr(self.expr))


class SamplePlan(BaseModel):
    """How numeric zero tests and invariance checks draw their sample points."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    count: int = Field(12, ge=1, description="Number of accepted samples")
    seed: int = Field(0xDA7A, ge=0, description="PRNG seed")
    box: Tuple[Tuple[float, float], ...] = Field(
        ((-2.0, 2.0),) * 4, description="Per-coordinate sampling interval (t, x0, x1, x2)"
    )
    tolerance: float = Field(1e-9, gt=0, description="Zero tolerance")
    margin: float = Field(0.05, ge=0, description="Guard margin")
    guards: Tuple[DomainGuard, ...] = Field((), description="Domain guards for accepted samples")

    @field_validator("box", mode="before")
    @classmethod
    def _expand_box(cls, value):
        value = tuple(value)
        if len(value) == 2 and not isinstance(value[0], (tuple, list)):
            value = (tuple(value),) * 4
        if len(value) != 4:
            raise ValueError("box needs one interval per coordinate")
        intervals = []
        for low, high in value:
            low, high = float(low), float(high)
            if not (math.isfinite(low) and math.isfinite(high) and low < high):
                raise ValueError(f"empty or infinite interval [{low}, {high}]")
            intervals.append((low, high))
        return tuple(intervals)

    @classmethod
    def from_settings(cls, settings: Optional[Settings] = None, **overrides) -> "SamplePlan":
        """Build a plan from environment settings, applying non-None overrides."""
        settings = settings or get_settings()
        values = {
            "count": settings.samples,
            "seed": settings.seed,
            "box": settings.box,
            "tolerance": settings.tolerance,
            "margin": settings.margin,
        }
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)

    def with_guards(self, guards) -> "SamplePlan":
        """Return a copy with additional guards, duplicates removed, order kept."""
        merged = list(self.guards)
        seen = {g.key() for g in merged}
        for guard in guards:
            if guard.key() not in seen:
                seen.add(guard.key())
                merged.append(guard)
        return self.model_copy(update={"guards": tuple(merged)})

    def with_tolerance(self, tolerance: float) -> "SamplePlan":
        return self.model_copy(update={"tolerance": float(tolerance)})

    def summary(self) -> Dict[str, Any]:
        """The reproducibility block printed in every report."""
        return {
            "seed": self.seed,
            "samples": self.count,
            "tol": self.tolerance,
            "box": [list(interval) for interval in self.box],
            "margin": self.margin,
        }


class ZeroVerdict(BaseModel):
    """Outcome of a zero test: symbolic zero, numerically zero, or nonzero with a witness."""

    status: Literal["SymbolicZero", "NumericallyZero", "NonZero"]
    max_abs: Optional[float] = Field(None, description="Largest |value| observed")
    count: Optional[int] = Field(None, description="Number of samples evaluated")
    witness: Optional[JetPoint] = Field(None, description="Point where the value is nonzero")
    value: Optional[float] = Field(None, description="Value at the witness")

    @property
    def is_zero(self) -> bool:
        return self.status != "NonZero"

    @classmethod
    def symbolic(cls) -> "ZeroVerdict":
        return cls(status="SymbolicZero")

    @classmethod
    def numeric(cls, max_abs: float, count: int) -> "ZeroVerdict":
        return cls(status="NumericallyZero", max_abs=max_abs, count=count)

    @classmethod
    def nonzero(cls, witness: JetPoint, value: float) -> "ZeroVerdict":
        return cls(status="NonZero", witness=witness, value=value, max_abs=abs(value))

    def to_json_dict(self) -> Dict[str, Any]:
        return self.model_dump(mode="json", exclude_none=True)


def combine_verdicts(verdicts: List[ZeroVerdict]) -> ZeroVerdict:
    """Verdict of a tuple of coefficients: zero iff every coefficient is zero."""
    for verdict in verdicts:
        if not verdict.is_zero:
            return verdict
    if all(v.status == "SymbolicZero" for v in verdicts):
        return ZeroVerdict.symbolic()
    numeric = [v for v in verdicts if v.status == "NumericallyZero"]
    return ZeroVerdict.numeric(
        max_abs=max(v.max_abs or 0.0 for v in numeric),
        count=max(v.count or 0 for v in numeric),
    )


# Invariant reports

class Classification(str, Enum):
    """Outcome of the main classification theorem for a third-order ODE."""

    POINT_TRIVIALIZABLE = "PointTrivializable"
    NOT_WUNSCHMANN = "NotWunschmann"
    WUNSCHMANN_NOT_EINSTEIN_WEYL = "WunschmannNotEinsteinWeyl"
    EINSTEIN_WEYL_NOT_HYPER_CR = "EinsteinWeylNotHyperCR"
    HYPER_CR_EINSTEIN_WEYL = "HyperCREinsteinWeyl"


class InvariantReport(BaseModel):
    """All invariant verdicts of one equation plus its classification."""

    equation: str = Field(..., description="Right-hand side F as rendered text")
    classification: Classification
    verdicts: Dict[str, Optional[ZeroVerdict]] = Field(
        ..., description="Verdicts for W, C, K0, K1, I, J (None when not computed)"
    )
    components: Dict[str, ZeroVerdict] = Field(
        default_factory=dict, description="Coefficient verdicts (d3F, I1, I2, J0, J1, J2)"
    )
    residuals: Dict[str, ZeroVerdict] = Field(
        default_factory=dict, description="Consistency-identity residual verdicts"
    )
    trivializable: bool = Field(False, description="Third x2-derivative of F vanishes")
    j_valid: bool = Field(False, description="W and I vanished, so J is well defined")
    plan: Dict[str, Any] = Field(..., description="Sample plan summary")
    notes: List[str] = Field(default_factory=list)

    def to_json_dict(self) -> Dict[str, Any]:
        """Schema-stable JSON document (see docs/json-schema.md)."""
        verdicts: Dict[str, Any] = {}
        for name in ("W", "C", "K0", "K1", "I", "J"):
            verdict = self.verdicts.get(name)
            if verdict is None:
                entry: Dict[str, Any] = {"status": "NotComputed"}
            else:
                entry = verdict.to_json_dict()
            if name == "J":
                entry["valid"] = self.j_valid
            verdicts[name] = entry
        return {
            "equation": self.equation,
            "verdicts": verdicts,
            "classification": self.classification.value,
            "plan": self.plan,
            "residuals": {k: v.to_json_dict() for k, v in sorted(self.residuals.items())},
        }


class InvarianceCheck(BaseModel):
    """Result of checking one transformation rule at sample points."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    rule: Literal[
        "K1-rule",
        "I-scaling",
        "J-scaling",
        "W-vanishing",
        "triviality-preservation",
        "multiplier-consistency",
        "classification-invariance",
    ]
    map_name: str
    equation: str
    residuals: List[float] = Field(default_factory=list)
    tolerance: float
    passed: bool
    worst_point: Optional[JetPoint] = None
    worst_residual: Optional[float] = None
    details: Dict[str, Any] = Field(default_factory=dict)


# Verification suites

class CheckOutcome(BaseModel):
    """One named check inside a verification suite."""

    name: str
    passed: bool
    detail: str = ""


class SuiteResult(BaseModel):
    """Outcome of a verification suite."""

    name: str
    outcomes: List[CheckOutcome] = Field(default_factory=list)
    elapsed_seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return all(o.passed for o in self.outcomes)

    def to_json_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "passed": self.passed,
            "outcomes": [o.model_dump() for o in self.outcomes],
        }


# CLI

class CliConfig(BaseModel):
    """Validated command-line request."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    command: Literal["classify", "invariants", "transform", "verify", "selftest"]
    equation: Optional[str] = None
    map_t: Optional[str] = None
    map_x: Optional[str] = None
    inv_t: Optional[str] = None
    inv_x: Optional[str] = None
    names: List[str] = Field(default_factory=list)
    samples: Optional[int] = Field(None, ge=1)
    seed: Optional[int] = Field(None, ge=0)
    tol: Optional[float] = Field(None, gt=0)
    box: Optional[Tuple[float, float]] = None
    format: Literal["text", "json"] = "text"
    point: Optional[JetPoint] = None
    verbosity: int = 0

    @field_validator("box", mode="before")
    @classmethod
    def _parse_box(cls, value):
        if value is None:
            return None
        if isinstance(value, str):
            parts = [p for p in value.replace(" ", "").split(",") if p]
            if len(parts) != 2:
                raise ValueError("--box expects 'low,high'")
            value = (float(parts[0]), float(parts[1]))
        low, high = value
        if not low < high:
            raise ValueError("--box must be nonempty")
        return (float(low), float(high))

    @field_validator("point", mode="before")
    @classmethod
    def _parse_point(cls, value):
        if value is None or isinstance(value, JetPoint):
            return value
        if isinstance(value, str):
            value = [p for p in value.replace(" ", "").split(",")]
        return JetPoint.from_sequence(value)

    @model_validator(mode="after")
    def _check_inputs(self) -> "CliConfig":
        if self.command in ("classify", "invariants", "transform") and not self.equation:
            raise ValueError(f"{self.command} requires --equation")
        if self.command == "transform":
            missing = [
                flag
                for flag, value in (
                    ("--map-t", self.map_t),
                    ("--map-x", self.map_x),
                    ("--inv-t", self.inv_t),
                    ("--inv-x", self.inv_x),
                )
                if not value
            ]
            if missing:
                raise ValueError("transform requires " + ", ".join(missing))
        return self

    def plan(self) -> SamplePlan:
        return SamplePlan.from_settings(
            count=self.samples, seed=self.seed, tolerance=self.tol, box=self.box
        )
