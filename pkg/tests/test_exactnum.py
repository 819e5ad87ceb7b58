from fractions import Fraction

import mpmath
import pytest

from app.core.exactnum import (
    HalfPowRational,
    LogNumber,
    QuadraticSurd,
    ScaledLogNumber,
    halfpow_eval,
    lognum_eval,
    lognum_sum,
)


def test_lognumber_equality_is_structural():
    """13/36 stays 13/36 and log terms cancel exactly"""
    x = LogNumber.of("13/36", {2: 1})
    y = LogNumber.of(Fraction(13, 36)) + LogNumber.log(2)
    assert x == y
    assert (x - y).is_zero()
    assert x - LogNumber.log(2) == LogNumber.of(Fraction(13, 36))


def test_lognumber_drops_zero_coefficients():
    x = LogNumber.log(3, 2) + LogNumber.log(3, -2)
    assert x.log_terms == ()
    assert x.is_constant()


def test_lognumber_products():
    assert LogNumber.log(2) * Fraction(4, 3) == LogNumber.log(2, "4/3")
    assert LogNumber.of(2) * LogNumber.log(5) == LogNumber.log(5, 2)
    with pytest.raises(ArithmeticError):
        LogNumber.log(2) * LogNumber.log(3)


def test_lognumber_json():
    x = LogNumber.of(Fraction(-1, 2), {2: Fraction(4, 3), 7: 4})
    data = x.to_json()
    assert data == {"const": "-1/2", "log": {"2": "4/3", "7": "4"}}
    assert LogNumber.from_json(data) == x


def test_lognum_sum():
    values = [LogNumber.log(2, Fraction(1, k)) for k in range(1, 6)]
    assert lognum_sum(values) == LogNumber.log(2, Fraction(137, 60))


def test_lognum_eval_zero():
    interval = lognum_eval(LogNumber(), 10)
    assert interval.lo == 0 and interval.hi == 0


@pytest.mark.parametrize(
    "value, expected",
    [
        (LogNumber.log(2, "4/3"), "0.9241962407"),
        (LogNumber.of("1/3", {2: "1/2"}), "0.6799069236"),
    ],
)
def test_lognum_eval_encloses(value, expected):
    interval = lognum_eval(value, 10)
    assert interval.width < mpmath.mpf(10) ** -10
    assert abs(interval.mid - mpmath.mpf(expected)) < 1e-10


def test_lognum_eval_rejects_bad_precision():
    with pytest.raises(ValueError):
        lognum_eval(LogNumber.log(2), 0)


@pytest.mark.parametrize(
    "coeff, exps, expected",
    [(1, None, 1.0), (1, {5: -1}, 0.4472135955), (3, {2: 2}, 6.0)],
)
def test_halfpow_eval(coeff, exps, expected):
    assert halfpow_eval(HalfPowRational.of(coeff, exps)) == pytest.approx(expected, rel=1e-12)


def test_halfpow_canonical_equality():
    assert HalfPowRational.of(1, {2: 2}) == HalfPowRational.of(2)
    assert HalfPowRational.of(1, {3: 1}) * HalfPowRational.of(1, {3: 1}) == 3
    assert HalfPowRational.of(0, {5: 3}).is_zero()
    assert str(HalfPowRational.of(2, {7: 3})) == "14*7^(1/2)"


def test_scaled_lognumber_folds_rational_scale():
    a = ScaledLogNumber(LogNumber.log(5), HalfPowRational.of(1, {5: 2}))
    assert a.weight == LogNumber.log(5, 5)
    assert a.scale == 1
    b = ScaledLogNumber(LogNumber.log(5), HalfPowRational.of(1, {5: -1}))
    with pytest.raises(ArithmeticError):
        a + b
    assert (b - b).is_zero()
    assert b.divide_by(HalfPowRational.of(2, {5: 1})) == LogNumber.log(5, "1/10")


def test_quadratic_surd_inverse():
    r = QuadraticSurd.half_power(3, -1)
    one = QuadraticSurd(3, Fraction(1))
    assert (r * r.inverse()).is_one()
    assert ((one - r) / (one - r)).is_one()
    assert QuadraticSurd.half_power(2, 4).x == 4
