import json

import pytest
import sympy as sp

from src.errors import TrivializableBranch
from src.expr_core import is_zero, t, x0, x1, x2
from src.invariants import (
    calculator,
    cartan,
    cartan_identity_residual,
    classify,
    closing_identity_residual,
    decide_classification,
    existence_residual,
    frobenius_defect,
    i_coefficients,
    i_form_two_path_residual,
    j_coefficients,
    k_invariants,
    multiplier_condition_residual,
    projective_residual,
    psi,
    wunschmann,
    wunschmann_identity_residual,
)
from src.jet_calculus import Equation
from src.schemas import Classification, JetPoint, ZeroVerdict

ZERO = ZeroVerdict.symbolic()
NONZERO = ZeroVerdict.nonzero(JetPoint(t=0, x0=0, x1=0, x2=1), 1.0)


class TestScalarInvariants:
    def test_wunschmann_of_linear_term(self):
        assert wunschmann(Equation(x0)) == 1

    def test_cartan_of_x0_x2(self):
        assert cartan(Equation(x0 * x2)) == 1

    def test_k1_of_linear_equation(self):
        _, k1 = k_invariants(Equation(3 * x2 + 2 * x1 + x0))
        assert k1 == 2 + sp.Rational(9, 3)

    def test_cubic(self, cubic):
        k0, k1 = k_invariants(cubic)
        assert k1 == -3 * x2**4
        assert wunschmann(cubic) == 0
        assert cartan(cubic) == 18 * x2**5

    def test_psi_and_i_of_cubic(self, cubic):
        assert psi(cubic) == -6 * x2
        assert i_coefficients(cubic) == (-36 * x2**2, -6)

    def test_nil_has_vanishing_k1_and_w(self, nil):
        calc = calculator(nil)
        assert calc.K1 == 0
        assert calc.W == 0
        assert calc.Psi == 0

    def test_psi_undefined_when_trivializable(self, trivial):
        with pytest.raises(TrivializableBranch):
            psi(trivial)

    def test_named(self, cubic):
        assert calculator(cubic).named("F") == x2**3
        with pytest.raises(KeyError):
            calculator(cubic).named("Q")


class TestIdentities:
    @pytest.mark.parametrize(
        "rhs",
        [
            x0 * x1 * x2**2 + t * x2**3,
            x1**3 - 2 * x0**2 * x2 + 3 * t,
            2 * x2**3 - x1 * x2**2 + t**2 * x0,
        ],
    )
    def test_wunschmann_and_cartan(self, rhs):
        eq = Equation(rhs)
        assert wunschmann_identity_residual(eq) == 0
        assert cartan_identity_residual(eq) == 0

    @pytest.mark.parametrize("rhs", [x2**3 + x0 * x1, -x2**3 + t * x1 * x2**2])
    def test_closing_identity(self, rhs):
        assert closing_identity_residual(Equation(rhs)) == 0

    def test_i_form_two_paths_agree(self, cubic):
        assert i_form_two_path_residual(cubic).is_zero
        assert i_form_two_path_residual(Equation(x2**3 + x0 * x2**2)).is_zero

    def test_frobenius_defect(self, cubic, nil):
        assert all(sp.simplify(v) == 0 for v in frobenius_defect(nil).values())
        assert any(sp.simplify(v) != 0 for v in frobenius_defect(cubic).values())


class TestMultiplierConditions:
    def test_moebius_multiplier_is_projective(self):
        assert projective_residual(Equation(x2**3), (t + 1) ** -2) == 0

    def test_existence_with_unit_multiplier(self, cubic):
        assert existence_residual(cubic, 1) == 3 * x2**4

    def test_multiplier_condition(self, cubic):
        assert multiplier_condition_residual(cubic, 1) == -6 * x2


class TestDecision:
    def test_trivial_first(self):
        assert decide_classification(True, NONZERO, None, None, NONZERO) is Classification.POINT_TRIVIALIZABLE

    def test_not_wunschmann(self):
        assert decide_classification(False, NONZERO, ZERO, None, ZERO) is Classification.NOT_WUNSCHMANN

    def test_split_on_c(self):
        assert (
            decide_classification(False, ZERO, NONZERO, None, ZERO)
            is Classification.EINSTEIN_WEYL_NOT_HYPER_CR
        )
        assert (
            decide_classification(False, ZERO, ZERO, NONZERO, NONZERO)
            is Classification.WUNSCHMANN_NOT_EINSTEIN_WEYL
        )

    def test_hyper_cr(self):
        assert decide_classification(False, ZERO, ZERO, ZERO, ZERO) is Classification.HYPER_CR_EINSTEIN_WEYL


class TestClassify:
    def test_trivial(self, trivial, plan):
        report = classify(trivial, plan)
        assert report.classification is Classification.POINT_TRIVIALIZABLE
        assert report.verdicts["I"] is None

    def test_nil_is_hyper_cr(self, nil, plan):
        report = classify(nil, plan)
        assert report.classification is Classification.HYPER_CR_EINSTEIN_WEYL
        assert report.verdicts["K1"].status == "SymbolicZero"
        assert report.verdicts["W"].status == "SymbolicZero"
        assert report.j_valid

    def test_cubic_fails_through_c(self, cubic, plan):
        report = classify(cubic, plan)
        assert report.classification is Classification.WUNSCHMANN_NOT_EINSTEIN_WEYL
        assert report.verdicts["J"] is None
        assert not report.j_valid

    def test_not_wunschmann(self, plan):
        report = classify(Equation(x0 + x2**3), plan)
        assert report.classification is Classification.NOT_WUNSCHMANN

    def test_trivializable_branch_flags_nonzero_w(self, plan):
        report = classify(Equation(x0), plan)
        assert report.classification is Classification.POINT_TRIVIALIZABLE
        assert report.verdicts["W"].status == "NonZero"
        assert any("not point equivalent" in note for note in report.notes)

    def test_trivial_equation_has_no_w_note(self, trivial, plan):
        notes = classify(trivial, plan).notes
        assert notes == ["third x2-derivative of F vanishes: point equivalent to x''' = 0"]

    def test_json_shape(self, nil, plan):
        document = classify(nil, plan).to_json_dict()
        assert set(document) == {"equation", "verdicts", "classification", "plan", "residuals"}
        assert set(document["verdicts"]) == {"W", "C", "K0", "K1", "I", "J"}
        assert document["verdicts"]["J"]["valid"] is True
        assert document["plan"]["seed"] == 0xDA7A
        assert document["equation"] == "x2^(3/2)"

    def test_j_coefficients_of_nil(self, nil, plan):
        j0, j1, j2, valid = j_coefficients(nil, plan)
        assert (j0, j1, j2) == (0, 0, 0)
        assert valid

    def test_dkp_satisfies_wunschmann_and_cartan(self, dkp, plan):
        calc = calculator(dkp)
        assert is_zero(calc.W, plan).is_zero
        assert is_zero(calc.C, plan).is_zero

    def test_dkp_is_einstein_weyl_not_hyper_cr(self, dkp, plan):
        first = classify(dkp, plan)
        assert first.classification is Classification.EINSTEIN_WEYL_NOT_HYPER_CR
        assert first.verdicts["W"].is_zero
        assert first.verdicts["C"].is_zero
        assert first.verdicts["I"].status == "NonZero"
        second = classify(dkp, plan)
        assert json.dumps(first.to_json_dict(), sort_keys=True) == json.dumps(
            second.to_json_dict(), sort_keys=True
        )
