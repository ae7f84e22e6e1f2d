import pytest

from src.errors import PreconditionViolated
from src.expr_core import x0
from src.jet_calculus import Equation
from src.schemas import Classification
from src.transform import (
    RULE_TOLERANCE,
    apply,
    check_classification_invariance,
    check_form_scaling,
    check_k1_rule,
    check_multiplier_consistency,
    check_triviality_preservation,
    check_w_vanishing,
    transformed_summary,
)

MAP_NAMES = ["identity", "x_shift", "mobius", "mixing"]


def test_x_shift_of_trivial_equation(fixture_maps, trivial):
    assert apply(fixture_maps["x_shift"], trivial).rhs == 6


def test_identity_leaves_equation_unchanged(fixture_maps, cubic):
    assert apply(fixture_maps["identity"], cubic) == cubic


def test_summary(fixture_maps, trivial):
    summary = transformed_summary(fixture_maps["x_shift"], trivial)
    assert summary == {"map": "x_shift", "equation": "0", "transformed": "6", "g": "1"}


@pytest.mark.parametrize("name", MAP_NAMES)
@pytest.mark.parametrize("which", ["cubic", "nil"])
def test_k1_rule(fixture_maps, plan, request, name, which):
    eq = request.getfixturevalue(which)
    check = check_k1_rule(eq, fixture_maps[name], plan)
    assert check.passed
    assert check.worst_residual <= RULE_TOLERANCE
    assert len(check.residuals) == plan.count


def test_k1_rule_flags_moebius_as_projective(fixture_maps, plan, cubic):
    check = check_k1_rule(cubic, fixture_maps["mobius"], plan)
    assert check.details["projective_residual_zero"] is True


@pytest.mark.parametrize("name", MAP_NAMES)
def test_i_scaling(fixture_maps, plan, cubic, name):
    check = check_form_scaling(cubic, fixture_maps[name], "I", plan)
    assert check.passed
    assert check.details["weight"] == 2


def test_j_scaling_needs_vanishing_w_and_i(fixture_maps, plan, cubic):
    with pytest.raises(PreconditionViolated):
        check_form_scaling(cubic, fixture_maps["x_shift"], "J", plan)


@pytest.mark.parametrize("name", MAP_NAMES)
def test_triviality_preserved(fixture_maps, plan, name):
    assert check_triviality_preservation(fixture_maps[name], plan).passed


@pytest.mark.parametrize("name", MAP_NAMES)
@pytest.mark.parametrize(
    "which", ["trivial", "nil", pytest.param("dkp", marks=pytest.mark.slow)]
)
def test_w_vanishing_preserved(fixture_maps, plan, request, name, which):
    eq = request.getfixturevalue(which)
    assert check_w_vanishing(eq, fixture_maps[name], plan).passed


def test_w_vanishing_needs_vanishing_w(fixture_maps, plan):
    with pytest.raises(PreconditionViolated):
        check_w_vanishing(Equation(x0), fixture_maps["x_shift"], plan)


@pytest.mark.parametrize("name", MAP_NAMES)
def test_multiplier_consistency(fixture_maps, cubic, name):
    assert check_multiplier_consistency(fixture_maps[name], cubic).passed


EXPECTED = {
    "trivial": Classification.POINT_TRIVIALIZABLE,
    "cubic": Classification.WUNSCHMANN_NOT_EINSTEIN_WEYL,
    "nil": Classification.HYPER_CR_EINSTEIN_WEYL,
    "dkp": Classification.EINSTEIN_WEYL_NOT_HYPER_CR,
}


@pytest.mark.parametrize("name", MAP_NAMES)
@pytest.mark.parametrize(
    "which",
    [
        "trivial",
        "cubic",
        pytest.param("nil", marks=pytest.mark.slow),
        pytest.param("dkp", marks=pytest.mark.slow),
    ],
)
def test_classification_invariance(fixture_maps, plan, request, name, which):
    eq = request.getfixturevalue(which)
    check = check_classification_invariance(eq, fixture_maps[name], plan)
    assert check.passed
    assert check.details["after"] == EXPECTED[which].value


@pytest.mark.slow
def test_j_scaling_on_hyper_cr_equation(fixture_maps, plan, nil):
    check = check_form_scaling(nil, fixture_maps["x_shift"], "J", plan)
    assert check.passed
    assert check.details["weight"] == -1

