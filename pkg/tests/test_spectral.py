import math
from fractions import Fraction

import pytest

from app.core.constants import ARCH_COMPLETED_CONSTANT, RESIDUAL_COLUMNS
from app.core.errors import ContractError, UnsupportedCaseError
from app.core.exactnum import HalfPowRational, LogNumber
from app.core.padic import PlaceSet
from app.models.orbital import HeckeBall, TestFunctionSpec, tr_xi0_arch
from app.models.spectral import (
    FAMILIES,
    arch_completed_constant,
    coefficient_B,
    coefficient_E_finite,
    cont_main,
    fitted_slope,
    hyp_deg1_main,
    jhat_main,
    jtilde_main,
    ledger_report,
    limit_form_check,
    limit_form_terms,
    ratio_entries,
    residual_main,
    residual_partial_sum,
    residual_table,
    tr_xi0_local,
    verify_constants,
)


@pytest.mark.parametrize("p", [2, 3, 5, 7, 11])
def test_limit_form_is_exactly_zero(p):
    assert limit_form_check(p) == LogNumber()


def test_limit_form_terms_at_two():
    terms = limit_form_terms(2)
    assert terms["two_adic"] == LogNumber.log(2, -2)
    assert terms["wtilde"] == LogNumber.log(2, Fraction(2, 3))
    assert set(terms) == {"two_adic", "trace", "eps_minus", "eps_zero", "log_y1", "wtilde"}


def test_limit_form_detects_corruption():
    assert not limit_form_check(3, corrupt=True).is_zero()


def test_limit_form_rejects_hecke_ball():
    with pytest.raises(ContractError):
        limit_form_check(3, HeckeBall(1))


def test_verify_constants_passes():
    report = verify_constants([2, 3, 5])
    assert report["passed"]
    assert report["primes"] == [2, 3, 5]
    names = {check["name"] for check in report["checks"]}
    assert {"limit_form[2]", "series_factor[5]", "wtr_hat_hecke[3,4]"} <= names


def test_verify_constants_fails_on_corruption():
    report = verify_constants([2], corrupt=True)
    assert not report["passed"]
    failed = [check["name"] for check in report["checks"] if not check["passed"]]
    assert failed == ["limit_form[2]"]


def test_ratio_entries_at_two():
    ratios = ratio_entries(2)
    assert set(ratios) == {"C_ratio", "D_ratio"}
    assert ratios["D_ratio"] == LogNumber.log(2, -2)


def test_tr_xi0_local():
    assert tr_xi0_local(3, HeckeBall()) == 1
    assert tr_xi0_local(3, HeckeBall(2)) == 9
    assert tr_xi0_local(5, HeckeBall(1)) == HalfPowRational.of(2, {5: 1})


def test_coefficient_B_for_S2(spherical_f, S2):
    """B = -(1/2)(1/2)^2 Tr xi_0(f_inf) * 1"""
    assert coefficient_B(S2, spherical_f) == pytest.approx(-tr_xi0_arch(spherical_f.profile) / 8, rel=1e-12)


def test_zero_profile_gives_zero(zero_f, S2):
    assert coefficient_B(S2, zero_f) == 0.0
    assert residual_partial_sum(1000, S2, zero_f) == 0.0


def test_main_terms():
    S = PlaceSet.of(2)
    B = -1.0
    X = 1000.0
    assert hyp_deg1_main(X, B) == 1000.0
    assert residual_main(X, S, B) == pytest.approx(-0.5 * (X * math.log(X) + (2 * 1.2703628455 - 1) * X), rel=1e-9)
    assert residual_main(0, S, B) == 0.0
    assert jhat_main(X, S, B) == pytest.approx(-0.3389119 * X, rel=1e-5)
    assert jtilde_main(X, S, B) - jhat_main(X, S, B) == pytest.approx(0.5 * (X * math.log(X) - X))
    assert cont_main(X, S, B) == pytest.approx(ARCH_COMPLETED_CONSTANT * X, rel=1e-9)


def test_arch_completed_constant():
    assert arch_completed_constant() == pytest.approx(-1.953808582, abs=1e-9)
    assert arch_completed_constant(40) == pytest.approx(arch_completed_constant(), abs=1e-12)


def test_residual_partial_sum_scales_divisor_sum(spherical_f, S2):
    B = coefficient_B(S2, spherical_f)
    # d(1) + d(3) = 1 + 2 over n < 4 coprime to 2
    assert residual_partial_sum(4, S2, spherical_f, B) == pytest.approx(-0.25 * (-8 * B) * 3)


def test_coefficient_E_finite(spherical_f, S2, default_profile):
    E = coefficient_E_finite(S2, spherical_f)
    expected = -0.25 * 0.25 * (4 / 3) * math.log(2) * tr_xi0_arch(default_profile)
    assert E == pytest.approx(expected, rel=1e-9)
    f = TestFunctionSpec.spherical(PlaceSet.of(2, 3), default_profile, {3: 1})
    with pytest.raises(UnsupportedCaseError):
        coefficient_E_finite(PlaceSet.of(2, 3), f)


def test_ledger_report(spherical_f, S2):
    ledger = ledger_report(S2, spherical_f)
    data = ledger.to_json()
    assert ledger.value("F") == 0.0
    assert ledger.value("tr_xi0_2") == "1"
    assert ledger.value("B") == pytest.approx(coefficient_B(S2, spherical_f))
    assert ledger.value("E_finite") is not None
    assert data["D_ratio_2"]["exact"] == {"const": "0", "log": {"2": "-2"}}
    assert {"gamma_S", "arch_completed_const", "prime_quad_const", "arch_limit_terms"} <= set(data)
    assert all("source" in entry for entry in data.values())


def test_ledger_with_hecke_ball(default_profile):
    S = PlaceSet.of(2, 3)
    f = TestFunctionSpec.spherical(S, default_profile, {3: 2})
    ledger = ledger_report(S, f)
    assert ledger.value("E_finite") is None
    assert ledger.value("tr_xi0_3") == "9"
    assert "C_ratio_3" not in ledger.entries


def test_residual_table(spherical_f, S2):
    grid = [1_000, 4_000]
    frame = residual_table(grid, S2, spherical_f, families=FAMILIES, workers=1)
    assert list(frame.columns) == RESIDUAL_COLUMNS
    assert len(frame) == len(grid) * len(FAMILIES)
    assert set(frame["family"]) == set(FAMILIES)
    harmonic = frame[frame["family"] == "harmonic"]
    assert (harmonic["residual_scaled"] <= 10).all()


def test_residual_table_rejects_unknown_family(spherical_f, S2):
    with pytest.raises(ContractError):
        residual_table([1000], S2, spherical_f, families=["divisor", "spectral"])


def test_fitted_slope():
    grid = [1000, 2000, 4000, 8000]
    assert fitted_slope(grid, [3.0 * x + 7.0 for x in grid]) == pytest.approx(3.0)


@pytest.mark.parametrize("p", [0, 1, 4])
def test_non_primes_rejected_before_work(p):
    with pytest.raises(ContractError):
        limit_form_terms(p)
    with pytest.raises(ContractError):
        verify_constants([2, p])


def test_verify_constants_checks_arch_constant():
    report = verify_constants([2])
    check = next(c for c in report["checks"] if c["name"] == "arch_completed_constant")
    assert check["passed"]
    assert check["got"] == pytest.approx(ARCH_COMPLETED_CONSTANT, abs=1e-9)
