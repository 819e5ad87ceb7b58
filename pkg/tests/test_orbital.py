import math
import random
from fractions import Fraction

import numpy as np
import pytest

from app.core.errors import ConfigError, ContractError, NonRegularError, UnsupportedCaseError
from app.core.exactnum import HalfPowRational, LogNumber, ScaledLogNumber
from app.core.padic import PlaceSet, vp
from app.models.orbital import (
    SPHERICAL,
    HeckeBall,
    TestFunctionSpec,
    arch_limit_terms,
    orb_split,
    series_factor,
    theta_hat_inf,
    theta_hat_p,
    theta_hat_reconstruct,
    theta_p,
    tr_xi0_arch,
    tr_xi0_arch_direct,
    unip_modified_local,
    worb,
    worb_hat,
    worb_tilde,
    wtilde_tr_zero,
    wtr_hat_hecke,
    wtr_hat_hecke_oracle,
)
from app.models.profiles import load_profile, plateau, zero_profile


def test_orb_split_on_units():
    assert orb_split(5, 0, 1, 6) == 5
    assert orb_split(5, 0, 1, 2) == 1
    assert orb_split(5, 1, 1, 6).is_zero()
    assert orb_split(3, 2, 9, 1) == 1
    assert orb_split(3, 0, Fraction(1, 3), 3).is_zero()


def test_orb_split_scaled_ball():
    assert orb_split(3, 2, 9, 1, scaled=True) == Fraction(1, 3)
    assert orb_split(3, 1, 3, 1, scaled=True) == HalfPowRational.of(1, {3: -1})


def test_orb_split_non_regular():
    with pytest.raises(NonRegularError):
        orb_split(5, 0, 2, 2)


def test_worb_hat_closed_form():
    """worb_hat = 2 (p^k - 1)/(p - 1) log p on the unscaled unit ball"""
    assert worb_hat(5, 0, 1, 6) == ScaledLogNumber(LogNumber.log(5, 2))
    assert worb_hat(5, 0, 1, 26) == ScaledLogNumber(LogNumber.log(5, 12))
    assert worb_hat(5, 0, 1, 2).is_zero()


def test_worb_values():
    assert worb(2, 0, 1, 5) == ScaledLogNumber(LogNumber.log(2, -10))
    assert worb(3, 0, 1, 2).is_zero()
    assert worb(3, 1, 1, 2).is_zero()
    assert worb_hat(2, 0, 1, 5) == ScaledLogNumber(LogNumber.log(2, 6))
    assert worb_hat(3, 0, 1, 10) == ScaledLogNumber(LogNumber.log(3, 8))
    assert orb_split(5, 1, 5, 1, scaled=True) == HalfPowRational.of(1, {5: -1})


def test_wtr_hat_hecke_values():
    assert wtr_hat_hecke(2, 1).is_zero()
    assert wtr_hat_hecke(2, 2) == LogNumber.log(2, Fraction(5, 3))
    assert wtr_hat_hecke(3, 0) == LogNumber.log(3, Fraction(3, 8))
    with pytest.raises(ContractError):
        wtr_hat_hecke(3, -1)


def test_worb_minus_worb_hat():
    """worb - worb_hat = 2 log|a - b|_p * orb"""
    rng = random.Random(5)
    for _ in range(200):
        p = rng.choice([2, 3, 5, 7])
        a = rng.randint(1, 500)
        b = rng.randint(1, 500)
        if a == b or a % p == 0 or b % p == 0:
            continue
        orb = orb_split(p, 0, a, b)
        k = vp(a - b, p)
        diff = worb(p, 0, a, b) - worb_hat(p, 0, a, b)
        assert diff == ScaledLogNumber(LogNumber.log(p, -2 * k), orb)


def test_worb_tilde_matches_worb_hat_at_m0():
    for a, b in [(1, 6), (2, 7), (1, 126), (3, 4)]:
        assert worb_tilde(5, 0, a, b) == worb_hat(5, 0, a, b)


def test_theta_p_values():
    assert theta_p(3, SPHERICAL, 0, 1) == Fraction(3, 4)
    assert theta_p(3, SPHERICAL, 1, Fraction(-1, 4)) == Fraction(3, 4)
    assert theta_p(3, SPHERICAL, 5, 4) == Fraction(3, 2)
    assert theta_p(3, SPHERICAL, 0, 3).is_zero()
    with pytest.raises(NonRegularError):
        theta_p(3, SPHERICAL, 2, 1)


@pytest.mark.parametrize("p, y", [(3, 2), (3, -1), (3, 3), (3, 4), (5, 2), (5, 3), (5, 6)])
def test_theta_hat_reconstruction(p, y):
    assert theta_hat_reconstruct(p, SPHERICAL, y) == theta_hat_p(p, SPHERICAL, y)


def test_theta_hat_values():
    assert theta_hat_p(3, SPHERICAL, 2).rational() == Fraction(1, 2)
    assert theta_hat_p(3, SPHERICAL, 3).rational() == Fraction(2, 3)
    assert theta_hat_p(3, SPHERICAL, 4).is_zero()
    with pytest.raises(ContractError):
        theta_hat_p(3, SPHERICAL, 1)
    with pytest.raises(UnsupportedCaseError):
        theta_hat_p(3, HeckeBall(1), 2)


@pytest.mark.parametrize("p", [2, 3, 5])
@pytest.mark.parametrize("m", [0, 1, 2, 3, 4])
def test_wtr_hat_hecke_matches_lattice_sum(p, m):
    assert wtr_hat_hecke(p, m) == wtr_hat_hecke_oracle(p, m)


@pytest.mark.parametrize("p", [2, 3, 5, 7])
def test_wtr_hat_hecke_at_zero(p):
    assert wtr_hat_hecke(p, 0) == wtilde_tr_zero(p)
    assert unip_modified_local(p) == LogNumber.log(p, Fraction(-1, p - 1))


def test_wtilde_rejects_hecke_balls():
    assert wtilde_tr_zero(2) == LogNumber.log(2, Fraction(4, 3))
    with pytest.raises(UnsupportedCaseError):
        wtilde_tr_zero(3, HeckeBall(2))


@pytest.mark.parametrize("p", [2, 3, 5])
def test_series_factor_is_two(p):
    resolution = series_factor(p)
    assert resolution.matched_factor == 2
    assert resolution.to_json()["value"] == pytest.approx(2 * math.log(p) / (p * p - 1), rel=1e-9)


def test_test_function_spec():
    S = PlaceSet.of(2, 3)
    f = TestFunctionSpec.spherical(S, zero_profile(), {3: 1})
    assert f.ball(3).m == 1
    assert f.ball(5) == SPHERICAL
    assert not f.is_spherical
    assert f.away_ball(25, 5) == HeckeBall(2, scaled=True)
    with pytest.raises(ContractError):
        TestFunctionSpec(S, zero_profile(), {5: HeckeBall()})
    with pytest.raises(ContractError):
        HeckeBall(-1)


def test_arch_trace_two_ways(default_profile):
    """the cosh/sinh form and the Theta-hat form of the archimedean trace agree"""
    assert tr_xi0_arch(default_profile) == pytest.approx(tr_xi0_arch_direct(default_profile), rel=1e-6)


def test_arch_zero_profile():
    profile = zero_profile()
    assert tr_xi0_arch(profile) == 0.0
    terms = arch_limit_terms(profile)
    assert terms.to_json() == {
        "tr_xi0": 0.0,
        "x1_integral": 0.0,
        "x0_log_integral": 0.0,
        "implied_r_term_minus_half_wtilde": 0.0,
    }


def test_arch_limit_terms_are_finite(default_profile):
    terms = arch_limit_terms(default_profile)
    assert terms.trace > 0
    assert all(math.isfinite(v) for v in terms.to_json().values())


def test_theta_hat_inf_excludes_one(default_profile):
    with pytest.raises(ContractError):
        theta_hat_inf(default_profile, 1)


def test_profiles():
    bump = plateau(2.0, 0.5)
    assert bump(0.0) == 1.0
    assert bump(3.0) == 0.0
    assert 0.0 < bump(1.75) < 1.0
    profile = load_profile("default")
    xs = np.linspace(-5, 5, 41)
    assert np.allclose(profile.plus_array(xs), [profile.plus(x) for x in xs])
    assert load_profile("app.models.profiles:zero_profile").is_zero
    with pytest.raises(ContractError):
        plateau(1.0, 2.0)


@pytest.mark.parametrize("spec", ["nope", "no.such.module:factory", "fractions:Fraction"])
def test_load_profile_errors(spec):
    with pytest.raises(ConfigError):
        load_profile(spec)
