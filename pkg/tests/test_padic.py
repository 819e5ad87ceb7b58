import math
import random
from fractions import Fraction

import pytest

from app.core.errors import ContractError, NonRegularError
from app.core.exactnum import HalfPowRational, LogNumber
from app.core.padic import (
    PlaceSet,
    SplitElement,
    k_of,
    log_abs,
    modified_norm,
    omega,
    omega_inf,
    q_decompose,
    unit_part,
    vp,
)


@pytest.mark.parametrize("x, p, expected", [(12, 2, 2), (Fraction(3, 4), 2, -2), (0, 7, math.inf)])
def test_vp(x, p, expected):
    assert vp(x, p) == expected


def test_vp_rejects_composite():
    with pytest.raises(ContractError):
        vp(12, 4)


@pytest.mark.parametrize(
    "p, y, expected",
    [(3, 3, 1), (2, 3, 4), (2, 5, 1), (2, 6, 4), (3, Fraction(1, 9), 9), (5, 50, Fraction(1, 25))],
)
def test_modified_norm(p, y, expected):
    assert modified_norm(p, y) == HalfPowRational.of(expected)


def test_modified_norm_rejects_zero():
    with pytest.raises(ContractError):
        modified_norm(3, 0)


@pytest.mark.parametrize("p, y, expected", [(3, 1, 1), (3, 3, 0), (2, 5, -1), (3, 2, -1), (2, 17, 1), (2, 3, 0)])
def test_omega(p, y, expected):
    assert omega(p, y) == expected


def test_omega_inf():
    assert omega_inf(5) == 0
    assert omega_inf(Fraction(-1, 3)) == 1
    with pytest.raises(ContractError):
        omega_inf(0)


def test_square_class_invariance():
    """|a^2 y|' = |a|^2 |y|' and omega(a^2 y) = omega(y)"""
    rng = random.Random(7)
    for _ in range(200):
        p = rng.choice([2, 3, 5, 7])
        y = Fraction(rng.randint(1, 500) * rng.choice([1, -1]), rng.randint(1, 50))
        a = Fraction(rng.randint(1, 60), rng.randint(1, 60))
        va = vp(a, p)
        assert modified_norm(p, a * a * y) == modified_norm(p, y) * HalfPowRational.of(1, {p: -4 * va})
        assert omega(p, a * a * y) == omega(p, y)


@pytest.mark.parametrize("p, T, N, expected", [(3, 0, 1, 0), (3, 3, 18, 1), (2, 1, -1, 0)])
def test_k_of(p, T, N, expected):
    assert k_of(p, T, N) == expected


def test_k_of_integral_samples():
    rng = random.Random(11)
    for _ in range(200):
        p = rng.choice([2, 3, 5])
        T, N = rng.randint(-40, 40), rng.randint(-40, 40)
        if T * T == 4 * N:
            continue
        k = k_of(p, T, N)
        assert k >= 0
        assert modified_norm(p, T * T - 4 * N) * HalfPowRational.of(1, {p: 4 * k}) == 1


def test_k_of_non_regular():
    with pytest.raises(NonRegularError):
        k_of(3, 2, 1)


def test_q_decompose():
    assert q_decompose(12, PlaceSet.of(2)) == (4, 3)
    assert q_decompose(Fraction(45, 2), PlaceSet.of(2, 3)) == (Fraction(9, 2), 5)
    assert q_decompose(7, PlaceSet.of(2)) == (1, 7)


def test_log_abs_and_unit_part():
    assert log_abs(3, 18) == LogNumber.log(3, -2)
    assert log_abs(2, Fraction(3, 8)) == LogNumber.log(2, 3)
    assert unit_part(2, Fraction(12, 5)) == Fraction(3, 5)


def test_place_set_requires_two():
    with pytest.raises(ContractError):
        PlaceSet.of(3, 5)
    with pytest.raises(ContractError):
        PlaceSet((3, 2))
    S = PlaceSet.of(5, 2, 3)
    assert S.finite_primes == (2, 3, 5)
    assert S.euler_factor() == Fraction(4, 15)
    assert S.coprime(49) and not S.coprime(10)


def test_split_element():
    g = SplitElement(Fraction(3), Fraction(-2))
    assert g.trace == 1 and g.norm == -6
    assert g.discriminant == 25
    assert g.is_regular
    with pytest.raises(ContractError):
        SplitElement(Fraction(0), Fraction(1))
