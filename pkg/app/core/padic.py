"""p-adic primitives on rational inputs."""

from __future__ import annotations

import math
from collections.abc import Iterator
from dataclasses import dataclass
from fractions import Fraction

from sympy import isprime, legendre_symbol, multiplicity

from app.core.errors import ContractError, NonRegularError
from app.core.exactnum import HalfPowRational, LogNumber, RationalLike, as_fraction


def require_prime(p: int) -> None:
    if not isprime(p):
        raise ContractError(f"{p} is not prime")


def vp(x: RationalLike, p: int) -> int | float:
    """p-adic valuation; math.inf for 0"""
    require_prime(p)
    q = as_fraction(x)
    if q == 0:
        return math.inf
    return int(multiplicity(p, abs(q.numerator))) - int(multiplicity(p, q.denominator))


def _vp_nonzero(x: Fraction, p: int, what: str = "y") -> int:
    if x == 0:
        raise ContractError(f"{what} must be nonzero")
    v = vp(x, p)
    assert isinstance(v, int)
    return v


def unit_part(p: int, x: RationalLike) -> Fraction:
    """x * p^(-v_p(x))"""
    q = as_fraction(x)
    return q / Fraction(p) ** _vp_nonzero(q, p, "x")


def _unit_residue(u: Fraction, modulus: int) -> int:
    """Residue class of a p-adic unit rational u modulo modulus"""
    return (u.numerator * pow(u.denominator, -1, modulus)) % modulus


def modified_exponent(p: int, y: RationalLike) -> int:
    """The even integer a with |y|'_p = p^a"""
    q = as_fraction(y)
    v = _vp_nonzero(q, p)
    if p != 2:
        return -2 * (v // 2)
    if v % 2:
        return -v + 3
    if _unit_residue(unit_part(2, q), 4) == 1:
        return -v
    return -v + 2


def modified_norm(p: int, y: RationalLike) -> HalfPowRational:
    """|y|'_p as an exact power of p"""
    require_prime(p)
    return HalfPowRational.of(1, {p: 2 * modified_exponent(p, y)})


def omega(p: int, y: RationalLike) -> int:
    """The square-class character: +1, -1 or 0 according as y lies in Y_1, Y_-1, Y_0"""
    require_prime(p)
    q = as_fraction(y)
    v = _vp_nonzero(q, p)
    if v % 2:
        return 0
    u = unit_part(p, q)
    if p == 2:
        residue = _unit_residue(u, 8)
        if residue == 1:
            return 1
        if residue == 5:
            return -1
        return 0
    return int(legendre_symbol(_unit_residue(u, p), p))


def omega_inf(x: RationalLike) -> int:
    q = as_fraction(x)
    if q == 0:
        raise ContractError("x must be nonzero")
    return 0 if q > 0 else 1


def k_of(p: int, T: RationalLike, N: RationalLike) -> int:
    """k with p^k = |T^2 - 4N|'_p^(-1/2)"""
    require_prime(p)
    disc = as_fraction(T) ** 2 - 4 * as_fraction(N)
    if disc == 0:
        raise NonRegularError("T^2 = 4N: element is not regular")
    return -modified_exponent(p, disc) // 2


def log_abs(p: int, x: RationalLike) -> LogNumber:
    """log |x|_p"""
    q = as_fraction(x)
    return LogNumber.log(p, -_vp_nonzero(q, p, "x"))


@dataclass(frozen=True)
class PlaceSet:
    """S = {inf} + finite_primes, with 2 in S"""

    finite_primes: tuple[int, ...] = (2,)

    def __post_init__(self) -> None:
        primes = tuple(int(q) for q in self.finite_primes)
        if list(primes) != sorted(set(primes)):
            raise ContractError("S-primes must be sorted and distinct")
        for q in primes:
            if not isprime(q):
                raise ContractError(f"{q} is not prime")
        if 2 not in primes:
            raise ContractError("S must contain 2")
        object.__setattr__(self, "finite_primes", primes)

    @classmethod
    def of(cls, *primes: int) -> PlaceSet:
        return cls(tuple(sorted(set(primes))))

    @property
    def includes_infinity(self) -> bool:
        return True

    @property
    def product(self) -> int:
        return math.prod(self.finite_primes)

    def __contains__(self, p: object) -> bool:
        return p in self.finite_primes

    def __iter__(self) -> Iterator[int]:
        return iter(self.finite_primes)

    def coprime(self, n: int) -> bool:
        return all(n % q for q in self.finite_primes)

    def euler_factor(self) -> Fraction:
        """prod (1 - 1/q)"""
        out = Fraction(1)
        for q in self.finite_primes:
            out *= 1 - Fraction(1, q)
        return out


def q_decompose(x: RationalLike, S: PlaceSet) -> tuple[Fraction, Fraction]:
    """Split x into its S-part prod q^(v_q(x)) and the part away from S"""
    q_val = as_fraction(x)
    if q_val == 0:
        raise ContractError("x must be nonzero")
    q_part = Fraction(1)
    for q in S.finite_primes:
        v = vp(q_val, q)
        assert isinstance(v, int)
        q_part *= Fraction(q) ** v
    return q_part, q_val / q_part


@dataclass(frozen=True)
class SplitElement:
    """diag(a, b) with a, b nonzero rationals"""

    a: Fraction
    b: Fraction

    def __post_init__(self) -> None:
        a, b = as_fraction(self.a), as_fraction(self.b)
        if a == 0 or b == 0:
            raise ContractError("split element entries must be nonzero")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def trace(self) -> Fraction:
        return self.a + self.b

    @property
    def norm(self) -> Fraction:
        return self.a * self.b

    @property
    def discriminant(self) -> Fraction:
        return (self.a - self.b) ** 2

    @property
    def is_regular(self) -> bool:
        return self.a != self.b
