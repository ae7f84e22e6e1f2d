from fractions import Fraction

import pytest
from pydantic import ValidationError

from src.config import Settings, _from_env
from src.errors import ExpressionSyntaxError, VerificationFailed
from src.schemas import (
    CheckOutcome,
    CliConfig,
    JetPoint,
    SamplePlan,
    SuiteResult,
    ZeroVerdict,
    combine_verdicts,
)


def test_jet_point_is_exact():
    p = JetPoint(t="3/2", x0=1, x1=0.5, x2=Fraction(-1, 3))
    assert p.exact() == (Fraction(3, 2), Fraction(1), Fraction(1, 2), Fraction(-1, 3))
    assert p.model_dump(mode="json")["t"] == "3/2"


def test_jet_point_needs_four_coordinates():
    with pytest.raises(ValueError):
        JetPoint.from_sequence([1, 2, 3])


def test_sample_plan_box_expands():
    assert SamplePlan(box=(0, 1)).box == ((0.0, 1.0),) * 4
    with pytest.raises(ValidationError):
        SamplePlan(box=(1, 0))


def test_plan_summary():
    summary = SamplePlan().summary()
    assert summary["seed"] == 0xDA7A
    assert summary["samples"] == 12
    assert summary["tol"] == 1e-9


def test_combine_verdicts():
    symbolic = ZeroVerdict.symbolic()
    numeric = ZeroVerdict.numeric(max_abs=1e-12, count=12)
    nonzero = ZeroVerdict.nonzero(JetPoint(t=0, x0=0, x1=0, x2=1), 2.0)
    assert combine_verdicts([symbolic, symbolic]).status == "SymbolicZero"
    assert combine_verdicts([symbolic, numeric]).status == "NumericallyZero"
    assert combine_verdicts([numeric, nonzero]) == nonzero


def test_cli_config_requires_equation():
    with pytest.raises(ValidationError):
        CliConfig(command="classify")
    with pytest.raises(ValidationError):
        CliConfig(command="transform", equation="x2", map_t="t")
    assert CliConfig(command="selftest").format == "text"


def test_suite_result():
    result = SuiteResult(name="s", outcomes=[CheckOutcome(name="a", passed=True)])
    assert result.passed
    assert result.to_json_dict()["outcomes"] == [{"name": "a", "passed": True, "detail": ""}]


def test_settings_from_environment(monkeypatch):
    monkeypatch.setenv("HYPERCR_SEED", "0x10")
    monkeypatch.setenv("HYPERCR_BOX", "1,3")
    settings = Settings(**_from_env())
    assert settings.seed == 16
    assert settings.box == (1.0, 3.0)


def test_settings_reject_bad_values():
    with pytest.raises(ValidationError):
        Settings(samples=0)


def test_error_documents():
    error = ExpressionSyntaxError("unexpected token", "x1 +\n)", 5)
    assert error.to_dict()["line"] == 2
    assert VerificationFailed(["brackets"]).exit_code == 4
