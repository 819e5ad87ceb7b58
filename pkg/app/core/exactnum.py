"""
Exact arithmetic substrate.

Rationals are `fractions.Fraction`. On top of them this module provides

* `LogNumber`: an element of Q + sum_p Q*log p, compared structurally,
* `HalfPowRational`: c * prod p^(h/2) with the square roots kept symbolic,
* `ScaledLogNumber`: a LogNumber weight times a HalfPowRational scale,
* `QuadraticSurd` / `SurdLogNumber`: x + y*sqrt(p) and its LogNumber analogue,
  used by the shell engine when summing geometric tails with ratio p^(1/2).
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Union

import mpmath

from app.core.constants import GUARD_DIGITS

Rational = Fraction
RationalLike = Union[int, Fraction, str]


def as_fraction(value: RationalLike) -> Fraction:
    """Coerce int, Fraction or "p/q" text to a Fraction"""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("bool is not a rational")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    raise TypeError(f"not an exact rational: {value!r}")


def format_fraction(value: Fraction) -> str:
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def _normalize_terms(terms: Mapping[int, RationalLike]) -> tuple[tuple[int, Fraction], ...]:
    cleaned = {}
    for p, c in terms.items():
        coeff = as_fraction(c)
        if coeff:
            cleaned[int(p)] = coeff
    return tuple(sorted(cleaned.items()))


@dataclass(frozen=True)
class LogNumber:
    """constant + sum_p coeff_p * log p, all coefficients rational"""

    constant: Fraction = Fraction(0)
    log_terms: tuple[tuple[int, Fraction], ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "constant", as_fraction(self.constant))
        object.__setattr__(self, "log_terms", _normalize_terms(dict(self.log_terms)))

    @classmethod
    def of(
        cls, constant: RationalLike = 0, logs: Mapping[int, RationalLike] | None = None
    ) -> LogNumber:
        return cls(as_fraction(constant), _normalize_terms(logs or {}))

    @classmethod
    def log(cls, p: int, coeff: RationalLike = 1) -> LogNumber:
        return cls.of(0, {p: coeff})

    @classmethod
    def zero(cls) -> LogNumber:
        return cls()

    @property
    def logs(self) -> dict[int, Fraction]:
        return dict(self.log_terms)

    def coeff(self, p: int) -> Fraction:
        return self.logs.get(p, Fraction(0))

    def is_zero(self) -> bool:
        return not self.constant and not self.log_terms

    def is_constant(self) -> bool:
        return not self.log_terms

    def _combine(self, other: LogNumber, sign: int) -> LogNumber:
        logs = self.logs
        for p, c in other.log_terms:
            logs[p] = logs.get(p, Fraction(0)) + sign * c
        return LogNumber.of(self.constant + sign * other.constant, logs)

    def __add__(self, other: Any) -> LogNumber:
        if isinstance(other, (int, Fraction)):
            other = LogNumber.of(other)
        if not isinstance(other, LogNumber):
            return NotImplemented
        return self._combine(other, 1)

    def __radd__(self, other: Any) -> LogNumber:
        return self.__add__(other)

    def __sub__(self, other: Any) -> LogNumber:
        if isinstance(other, (int, Fraction)):
            other = LogNumber.of(other)
        if not isinstance(other, LogNumber):
            return NotImplemented
        return self._combine(other, -1)

    def __rsub__(self, other: Any) -> LogNumber:
        return (-self).__add__(other)

    def __neg__(self) -> LogNumber:
        return self.scale(-1)

    def scale(self, factor: RationalLike) -> LogNumber:
        f = as_fraction(factor)
        return LogNumber.of(self.constant * f, {p: c * f for p, c in self.log_terms})

    def __mul__(self, other: Any) -> LogNumber:
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            return self.scale(other)
        if isinstance(other, LogNumber):
            if other.is_constant():
                return self.scale(other.constant)
            if self.is_constant():
                return other.scale(self.constant)
            raise ArithmeticError("product of two LogNumbers with log terms")
        return NotImplemented

    def __rmul__(self, other: Any) -> LogNumber:
        return self.__mul__(other)

    def __truediv__(self, other: Any) -> LogNumber:
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            return self.scale(1 / as_fraction(other))
        return NotImplemented

    def to_float(self) -> float:
        return float(self.constant) + sum(
            float(c) * math.log(p) for p, c in self.log_terms
        )

    def to_json(self) -> dict[str, Any]:
        return {
            "const": format_fraction(self.constant),
            "log": {str(p): format_fraction(c) for p, c in self.log_terms},
        }

    @classmethod
    def from_json(cls, data: Mapping[str, Any]) -> LogNumber:
        logs = {int(p): as_fraction(c) for p, c in data.get("log", {}).items()}
        return cls.of(as_fraction(data.get("const", "0")), logs)

    def __str__(self) -> str:
        parts = []
        if self.constant or not self.log_terms:
            parts.append(format_fraction(self.constant))
        for p, c in self.log_terms:
            if c == 1:
                parts.append(f"log({p})")
            elif c == -1:
                parts.append(f"-log({p})")
            else:
                parts.append(f"{format_fraction(c)}*log({p})")
        return " + ".join(parts).replace("+ -", "- ")


def lognum_sum(values: Iterable[LogNumber]) -> LogNumber:
    """Coefficient-wise sum; exact, so the order does not matter"""
    constant = Fraction(0)
    logs: dict[int, Fraction] = {}
    for v in values:
        constant += v.constant
        for p, c in v.log_terms:
            logs[p] = logs.get(p, Fraction(0)) + c
    return LogNumber.of(constant, logs)


@dataclass(frozen=True)
class Interval:
    lo: mpmath.mpf
    hi: mpmath.mpf

    @property
    def mid(self) -> mpmath.mpf:
        return (self.lo + self.hi) / 2

    @property
    def width(self) -> mpmath.mpf:
        return self.hi - self.lo

    def contains(self, value: Any) -> bool:
        return bool(self.lo <= mpmath.mpf(value) <= self.hi)


def lognum_eval(x: LogNumber, precision: int) -> Interval:
    """
    Enclose the real value of x in an interval of width < 10^-precision.

    log p is evaluated by mpmath at precision + guard digits; the enclosure
    radius 10^-(precision+2) dominates the rounding of the evaluation.
    """
    if precision < 1:
        raise ValueError("precision must be at least 1")
    if x.is_zero():
        zero = mpmath.mpf(0)
        return Interval(zero, zero)
    with mpmath.workdps(precision + GUARD_DIGITS):
        value = mpmath.mpf(x.constant.numerator) / x.constant.denominator
        for p, c in x.log_terms:
            value += mpmath.mpf(c.numerator) / c.denominator * mpmath.log(p)
        radius = mpmath.mpf(10) ** (-(precision + 2))
        return Interval(value - radius, value + radius)


@dataclass(frozen=True, eq=False)
class HalfPowRational:
    """coeff * prod p^(h/2); exponents are stored as given"""

    coeff: Fraction = Fraction(1)
    half_exps: tuple[tuple[int, int], ...] = ()

    def __post_init__(self) -> None:
        coeff = as_fraction(self.coeff)
        exps = {} if coeff == 0 else {int(p): int(h) for p, h in dict(self.half_exps).items() if h}
        object.__setattr__(self, "coeff", coeff)
        object.__setattr__(self, "half_exps", tuple(sorted(exps.items())))

    @classmethod
    def of(cls, coeff: RationalLike = 1, exps: Mapping[int, int] | None = None) -> HalfPowRational:
        return cls(as_fraction(coeff), tuple((exps or {}).items()))

    @classmethod
    def zero(cls) -> HalfPowRational:
        return cls(Fraction(0))

    def is_zero(self) -> bool:
        return self.coeff == 0

    def canonical(self) -> tuple[Fraction, tuple[int, ...]]:
        """(rational part, primes carrying an odd half-exponent)"""
        coeff = self.coeff
        surd = []
        for p, h in self.half_exps:
            whole, odd = divmod(h, 2)
            coeff *= Fraction(p) ** whole
            if odd:
                surd.append(p)
        return coeff, tuple(surd)

    def rational_value(self) -> Fraction | None:
        coeff, surd = self.canonical()
        return None if surd else coeff

    def __eq__(self, other: object) -> bool:
        if isinstance(other, (int, Fraction)):
            other = HalfPowRational.of(other)
        if not isinstance(other, HalfPowRational):
            return NotImplemented
        return self.canonical() == other.canonical()

    def __hash__(self) -> int:
        return hash(self.canonical())

    def __mul__(self, other: Any) -> HalfPowRational:
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            return HalfPowRational(self.coeff * other, self.half_exps)
        if not isinstance(other, HalfPowRational):
            return NotImplemented
        exps = dict(self.half_exps)
        for p, h in other.half_exps:
            exps[p] = exps.get(p, 0) + h
        return HalfPowRational.of(self.coeff * other.coeff, exps)

    def __rmul__(self, other: Any) -> HalfPowRational:
        return self.__mul__(other)

    def __str__(self) -> str:
        coeff, surd = self.canonical()
        if not surd:
            return format_fraction(coeff)
        root = "*".join(f"{p}^(1/2)" for p in surd)
        return root if coeff == 1 else f"{format_fraction(coeff)}*{root}"


def halfpow_eval(x: HalfPowRational) -> float:
    """
    Float value of c * prod p^(h/2).

    The even part is folded into the exact rational before conversion and the
    odd part goes through one correctly rounded sqrt, so each factor adds at
    most a few ulp of relative error.
    """
    coeff, surd = x.canonical()
    if not surd:
        return float(coeff)
    return float(coeff) * math.sqrt(math.prod(surd))


@dataclass(frozen=True)
class ScaledLogNumber:
    """
    weight * scale with the scale reduced to a product of distinct sqrt(p).

    Construction folds the rational part of the scale into the weight so that
    equality is structural.
    """

    weight: LogNumber = field(default_factory=LogNumber)
    scale: HalfPowRational = field(default_factory=HalfPowRational)

    def __post_init__(self) -> None:
        coeff, surd = self.scale.canonical()
        if coeff == 0 or self.weight.is_zero():
            object.__setattr__(self, "weight", LogNumber())
            object.__setattr__(self, "scale", HalfPowRational())
            return
        object.__setattr__(self, "weight", self.weight.scale(coeff))
        object.__setattr__(self, "scale", HalfPowRational.of(1, {p: 1 for p in surd}))

    @classmethod
    def zero(cls) -> ScaledLogNumber:
        return cls()

    def is_zero(self) -> bool:
        return self.weight.is_zero()

    def __add__(self, other: ScaledLogNumber) -> ScaledLogNumber:
        if self.is_zero():
            return other
        if other.is_zero():
            return self
        if self.scale != other.scale:
            raise ArithmeticError(f"cannot add across scales {self.scale} and {other.scale}")
        return ScaledLogNumber(self.weight + other.weight, self.scale)

    def __neg__(self) -> ScaledLogNumber:
        return ScaledLogNumber(-self.weight, self.scale)

    def __sub__(self, other: ScaledLogNumber) -> ScaledLogNumber:
        return self + (-other)

    def divide_by(self, h: HalfPowRational) -> LogNumber:
        """self / h as a LogNumber; the surd parts must agree"""
        if self.is_zero():
            return LogNumber()
        coeff, surd = h.canonical()
        if coeff == 0:
            raise ZeroDivisionError("division by a zero HalfPowRational")
        if HalfPowRational.of(1, {p: 1 for p in surd}) != self.scale:
            raise ArithmeticError("quotient is not in Q + Q log p")
        return self.weight / coeff

    def to_float(self) -> float:
        return self.weight.to_float() * halfpow_eval(self.scale)

    def __str__(self) -> str:
        if self.scale == 1 or self.is_zero():
            return str(self.weight)
        return f"({self.weight})*{self.scale}"


def scaled(h: HalfPowRational, weight: LogNumber | RationalLike = 1) -> ScaledLogNumber:
    if not isinstance(weight, LogNumber):
        weight = LogNumber.of(weight)
    return ScaledLogNumber(weight, h)


@dataclass(frozen=True)
class QuadraticSurd:
    """x + y*sqrt(p) in Q(sqrt p); p is a prime, so sqrt p is irrational"""

    p: int
    x: Fraction = Fraction(0)
    y: Fraction = Fraction(0)

    @classmethod
    def half_power(cls, p: int, h: int) -> QuadraticSurd:
        """p^(h/2)"""
        whole, odd = divmod(h, 2)
        base = Fraction(p) ** whole
        return cls(p, Fraction(0), base) if odd else cls(p, base, Fraction(0))

    def __add__(self, other: QuadraticSurd) -> QuadraticSurd:
        return QuadraticSurd(self.p, self.x + other.x, self.y + other.y)

    def __sub__(self, other: QuadraticSurd) -> QuadraticSurd:
        return QuadraticSurd(self.p, self.x - other.x, self.y - other.y)

    def __mul__(self, other: Any) -> QuadraticSurd:
        if isinstance(other, (int, Fraction)):
            return QuadraticSurd(self.p, self.x * other, self.y * other)
        if not isinstance(other, QuadraticSurd):
            return NotImplemented
        return QuadraticSurd(
            self.p,
            self.x * other.x + self.p * self.y * other.y,
            self.x * other.y + self.y * other.x,
        )

    def norm(self) -> Fraction:
        return self.x * self.x - self.p * self.y * self.y

    def inverse(self) -> QuadraticSurd:
        n = self.norm()
        if n == 0:
            raise ZeroDivisionError("zero in Q(sqrt p)")
        return QuadraticSurd(self.p, self.x / n, -self.y / n)

    def __truediv__(self, other: QuadraticSurd) -> QuadraticSurd:
        return self * other.inverse()

    def is_one(self) -> bool:
        return self.x == 1 and self.y == 0

    def to_float(self) -> float:
        return float(self.x) + float(self.y) * math.sqrt(self.p)


@dataclass(frozen=True)
class SurdLogNumber:
    """rational + surd*sqrt(p), both parts LogNumbers"""

    p: int
    rational: LogNumber = field(default_factory=LogNumber)
    surd: LogNumber = field(default_factory=LogNumber)

    def __add__(self, other: SurdLogNumber) -> SurdLogNumber:
        return SurdLogNumber(self.p, self.rational + other.rational, self.surd + other.surd)

    def times(self, q: QuadraticSurd) -> SurdLogNumber:
        return SurdLogNumber(
            self.p,
            self.rational * q.x + self.surd * (q.y * self.p),
            self.rational * q.y + self.surd * q.x,
        )

    @classmethod
    def from_surd(cls, q: QuadraticSurd, weight: LogNumber) -> SurdLogNumber:
        return cls(q.p, weight * q.x, weight * q.y)

    def to_float(self) -> float:
        return self.rational.to_float() + self.surd.to_float() * math.sqrt(self.p)
