"""
Multiplicative-function sieves, coprime partial sums, prime sums, Dirichlet
characters and L-values.
"""

from __future__ import annotations

import cmath
import math
import time
from collections.abc import Sequence
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import mpmath
import numpy as np
import psutil
import structlog
from sympy import divisors, factorint, primerange

from app.core.config import settings
from app.core.constants import SIEVE_BYTES_PER_ENTRY
from app.core.errors import ContractError, PoleError, ResourceLimitError
from app.core.exactnum import LogNumber, lognum_sum
from app.core.padic import PlaceSet
from app.core.reduction import tree_sum

logger = structlog.get_logger()


@dataclass(frozen=True, eq=False)
class MultTables:
    """
    Sieved arithmetic functions on 1..limit-1 (index 0 unused).

    Lambda is kept symbolic: lam_prime[n] = p and lam_exp[n] = e when n = p^e,
    both 0 otherwise.
    """

    limit: int
    d: np.ndarray
    phi: np.ndarray
    mu: np.ndarray
    lpf: np.ndarray
    lam_prime: np.ndarray
    lam_exp: np.ndarray

    def von_mangoldt(self, n: int) -> tuple[int, int] | None:
        p = int(self.lam_prime[n])
        return (p, int(self.lam_exp[n])) if p else None

    def von_mangoldt_log(self, n: int) -> LogNumber:
        entry = self.von_mangoldt(n)
        return LogNumber.log(entry[0]) if entry else LogNumber()

    def factor(self, n: int) -> dict[int, int]:
        """Prime factorization through the least-prime-factor table"""
        out: dict[int, int] = {}
        while n > 1:
            p = int(self.lpf[n])
            out[p] = out.get(p, 0) + 1
            n //= p
        return out


def _check_memory(limit: int) -> None:
    if limit > settings.sieve_hard_limit:
        raise ResourceLimitError(
            f"sieve limit {limit} exceeds hard limit {settings.sieve_hard_limit}"
        )
    needed = limit * SIEVE_BYTES_PER_ENTRY * 4  # python lists during construction
    available = psutil.virtual_memory().available * settings.sieve_memory_fraction
    if needed > available:
        raise ResourceLimitError(
            f"sieve up to {limit} needs ~{needed >> 20} MiB, budget {int(available) >> 20} MiB"
        )


@lru_cache(maxsize=4)
def sieve(limit: int) -> MultTables:
    """Linear sieve for d, phi, mu, least prime factor and Lambda below limit"""
    if limit < 2:
        raise ValueError("sieve limit must be at least 2")
    _check_memory(limit)
    start = time.time()

    lp = [0] * limit
    exp = [0] * limit
    rest = [0] * limit  # n / lp(n)^exp(n)
    d = [0] * limit
    phi = [0] * limit
    mu = [0] * limit
    primes: list[int] = []
    if limit > 1:
        d[1] = phi[1] = mu[1] = rest[1] = 1

    for i in range(2, limit):
        if lp[i] == 0:
            lp[i] = i
            exp[i] = 1
            rest[i] = 1
            d[i] = 2
            phi[i] = i - 1
            mu[i] = -1
            primes.append(i)
        lpi = lp[i]
        for p in primes:
            ip = i * p
            if p > lpi or ip >= limit:
                break
            lp[ip] = p
            if p == lpi:
                exp[ip] = exp[i] + 1
                rest[ip] = rest[i]
                d[ip] = d[i] // (exp[i] + 1) * (exp[i] + 2)
                phi[ip] = phi[i] * p
                mu[ip] = 0
            else:
                exp[ip] = 1
                rest[ip] = i
                d[ip] = d[i] * 2
                phi[ip] = phi[i] * (p - 1)
                mu[ip] = -mu[i]

    lpf = np.array(lp, dtype=np.int64)
    rest_arr = np.array(rest, dtype=np.int64)
    exp_arr = np.array(exp, dtype=np.int64)
    is_prime_power = rest_arr == 1
    is_prime_power[:2] = False
    tables = MultTables(
        limit=limit,
        d=np.array(d, dtype=np.int64),
        phi=np.array(phi, dtype=np.int64),
        mu=np.array(mu, dtype=np.int64),
        lpf=lpf,
        lam_prime=np.where(is_prime_power, lpf, 0),
        lam_exp=np.where(is_prime_power, exp_arr, 0),
    )
    logger.info("Sieve built", limit=limit, seconds=round(time.time() - start, 3))
    return tables


def divisors_from_table(n: int, tables: MultTables) -> list[int]:
    """Sorted positive divisors of n < tables.limit"""
    divs = [1]
    for p, e in tables.factor(n).items():
        divs = [dv * p**k for dv in divs for k in range(e + 1)]
    return sorted(divs)


def coprime_mask(limit: int, S: PlaceSet) -> np.ndarray:
    """Boolean mask over 0..limit-1 of integers coprime to every S-prime"""
    mask = np.ones(limit, dtype=bool)
    mask[0] = False
    for q in S.finite_primes:
        mask[::q] = False
    return mask


def gamma_S(S: PlaceSet, precision: int = 15) -> mpmath.mpf:
    """gamma + sum_q log q / (q - 1)"""
    with mpmath.workdps(precision + 5):
        value = +mpmath.euler
        for q in S.finite_primes:
            value += mpmath.log(q) / (q - 1)
        return +value


def sum_inv_coprime(X: int, S: PlaceSet) -> tuple[Fraction, float]:
    """Exact sum_{n < X, (n, S) = 1} 1/n and the main term prod(1-1/q)(log X + gamma_S)"""
    if X < 2:
        raise ContractError("X must be at least 2")
    total = tree_sum(
        (Fraction(1, n) for n in range(1, X) if S.coprime(n)), Fraction(0)
    )
    return total, harmonic_main_term(X, S)


def prime_log_sum(X: int, S: PlaceSet) -> LogNumber:
    """sum_{p < X, p not in S} log p / (p - 1)"""
    if X < 2:
        raise ContractError("X must be at least 2")
    return lognum_sum(
        LogNumber.log(int(p), Fraction(1, int(p) - 1))
        for p in primerange(2, X)
        if int(p) not in S
    )


def prime_quadratic_constant(S: PlaceSet, tol: float = 1e-12) -> float:
    """
    sum_{p not in S} log p / (p^2 - 1).

    Over all primes the sum is -zeta'(2)/zeta(2); the S-terms are removed exactly.
    """
    if tol <= 0:
        raise ContractError("tol must be positive")
    dps = max(20, int(-math.log10(tol)) + 10)
    with mpmath.workdps(dps):
        value = -mpmath.zeta(2, derivative=1) / mpmath.zeta(2)
        for q in S.finite_primes:
            value -= mpmath.log(q) / (q * q - 1)
        return float(value)


def prime_quadratic_partial(P: int, S: PlaceSet) -> tuple[float, float]:
    """Direct sum over primes p < P outside S and a bound for the omitted tail"""
    if P < 3:
        raise ContractError("P must be at least 3")
    primes = np.array(
        [int(p) for p in primerange(2, P) if int(p) not in S], dtype=np.float64
    )
    value = float(np.sum(np.log(primes) / (primes * primes - 1.0)))
    tail = 2.0 * (math.log(P) + 1.0) / (P - 1)
    return value, tail


def lambda_divisor_sum(m: int, S: PlaceSet) -> LogNumber:
    """sum_{d | m} Lambda(d)/d over prime powers d of primes outside S"""
    if m < 1:
        raise ContractError("m must be a positive integer")
    terms = []
    for dv in divisors(m):
        f = factorint(dv)
        if len(f) == 1:
            (p, _e), = f.items()
            if p not in S:
                terms.append(LogNumber.log(int(p), Fraction(1, int(dv))))
    return lognum_sum(terms)


def prime_power_log_sum(m: int, S: PlaceSet) -> LogNumber:
    """sum_{p not in S} sum_{j <= v_p(m)} log p / p^j"""
    if m < 1:
        raise ContractError("m must be a positive integer")
    logs = {}
    for p, e in factorint(m).items():
        if p in S:
            continue
        logs[int(p)] = sum(Fraction(1, int(p) ** j) for j in range(1, e + 1))
    return LogNumber.of(0, logs)


# Dirichlet characters

_EXACT_UNITS = {(1, 0): 1, (-1, 0): -1, (0, 1): 1j, (0, -1): -1j, (0, 0): 0}


@dataclass(frozen=True)
class DirichletCharacter:
    """
    Completely multiplicative character mod `modulus`.

    values[a] is chi(a) for 0 <= a < modulus. `exact` holds (re, im) integer
    pairs when every value is in {0, +-1, +-i}.
    """

    modulus: int
    values: tuple[complex, ...]
    exact: tuple[tuple[int, int], ...] | None = None

    def __post_init__(self) -> None:
        m = self.modulus
        if m < 1 or len(self.values) != m:
            raise ContractError("character table must have one value per residue")
        for a in range(m):
            v = self.values[a]
            if math.gcd(a, m) > 1:
                if v != 0:
                    raise ContractError(f"chi({a}) must vanish mod {m}")
            elif not math.isclose(abs(v), 1.0, abs_tol=1e-12):
                raise ContractError(f"chi({a}) is not a root of unity")
        for a in range(m):
            for b in range(m):
                if abs(self.values[a * b % m] - self.values[a] * self.values[b]) > 1e-9:
                    raise ContractError("character is not multiplicative")
        if m == 1 and self.values[0] != 1:
            raise ContractError("the character mod 1 is identically 1")

    @classmethod
    def from_values(cls, modulus: int, values: Sequence[complex | tuple[int, int]]) -> DirichletCharacter:
        exact: list[tuple[int, int]] | None = []
        numeric: list[complex] = []
        for v in values:
            if isinstance(v, tuple):
                if v not in _EXACT_UNITS:
                    raise ContractError(f"{v} is not an exact fourth root of unity or 0")
                numeric.append(complex(_EXACT_UNITS[v]))
                if exact is not None:
                    exact.append(v)
            else:
                c = complex(v)
                numeric.append(c)
                pair = (round(c.real), round(c.imag))
                if exact is not None and pair in _EXACT_UNITS and abs(c - complex(*pair)) < 1e-12:
                    exact.append(pair)
                else:
                    exact = None
        return cls(modulus, tuple(numeric), tuple(exact) if exact is not None else None)

    @classmethod
    def principal(cls, modulus: int) -> DirichletCharacter:
        return cls.from_values(
            modulus, [(1, 0) if math.gcd(a, modulus) == 1 else (0, 0) for a in range(modulus)]
        )

    @classmethod
    def trivial_on(cls, S: PlaceSet) -> DirichletCharacter:
        """The principal character mod prod(S): 1 on integers coprime to S, else 0"""
        return cls.principal(S.product)

    @classmethod
    def mod4_nontrivial(cls) -> DirichletCharacter:
        return cls.from_values(4, [(0, 0), (1, 0), (0, 0), (-1, 0)])

    def __call__(self, n: int) -> complex:
        return self.values[n % self.modulus]

    @property
    def is_principal(self) -> bool:
        return all(
            v == 1 for a, v in enumerate(self.values) if math.gcd(a, self.modulus) == 1
        )

    @property
    def delta(self) -> int:
        return 1 if self.is_principal else 0

    @property
    def is_real(self) -> bool:
        return all(v.imag == 0 for v in self.values)

    @property
    def conductor(self) -> int:
        m = self.modulus
        for f in (dv for dv in range(1, m + 1) if m % dv == 0):
            if all(
                self.values[a] == self.values[b]
                for a in range(m)
                for b in range(a, m, f)
                if math.gcd(a, m) == 1 and math.gcd(b, m) == 1
            ):
                return f
        return m

    @property
    def support_primes(self) -> tuple[int, ...]:
        return tuple(sorted(int(p) for p in factorint(self.modulus)))

    def vanishes_exactly_off(self, S: PlaceSet) -> bool:
        """chi(n) = 0 iff gcd(n, S) > 1"""
        return set(self.support_primes) == set(S.finite_primes)

    def table(self, limit: int) -> np.ndarray:
        """chi(n) for n in 0..limit-1 as a complex array"""
        base = np.array(self.values, dtype=np.complex128)
        return base[np.arange(limit) % self.modulus]


def _character_places(*chars: DirichletCharacter) -> PlaceSet:
    supports = {c.support_primes for c in chars}
    if len(supports) != 1:
        raise ContractError("characters must vanish off the same set S")
    (primes,) = supports
    try:
        return PlaceSet(primes)
    except ContractError as e:
        raise ContractError(f"character support {primes} is not a valid S") from e


def _check_character(chi: DirichletCharacter, S: PlaceSet) -> None:
    if not chi.vanishes_exactly_off(S):
        raise ContractError(
            f"character mod {chi.modulus} does not vanish exactly off integers prime to {S.finite_primes}"
        )


def divisor_main_term(X: float, S: PlaceSet, delta: int = 1) -> float:
    """delta * prod(1-1/q)^2 (X log X + (2 gamma_S - 1) X)"""
    if X <= 0:
        return 0.0
    c = float(S.euler_factor())
    return delta * c * c * (X * math.log(X) + (2 * float(gamma_S(S)) - 1) * X)


def sum_divisor_coprime(
    X: int, chi: DirichletCharacter, S: PlaceSet | None = None
) -> tuple[int | complex, float]:
    """Exact sum_{n < X} d(n) chi(n) and the hyperbola-method main term"""
    if X < 2:
        raise ContractError("X must be at least 2")
    S = S or _character_places(chi)
    _check_character(chi, S)
    tables = sieve(X)
    if chi.exact is not None and chi.is_real:
        real = np.array([re for re, _ in chi.exact], dtype=np.int64)
        weights = real[np.arange(X) % chi.modulus]
        total: int | complex = int(np.dot(tables.d[1:], weights[1:]))
    else:
        total = complex(np.dot(tables.d[1:].astype(np.complex128), chi.table(X)[1:]))
    return total, divisor_main_term(X, S, chi.delta)


def divisor_partial_sums(grid: Sequence[int], S: PlaceSet) -> list[int]:
    """sum_{n < X, (n,S)=1} d(n) for every X in the grid, from one sieve"""
    top = max(grid)
    tables = sieve(top)
    running = np.cumsum(np.where(coprime_mask(top, S), tables.d, 0))
    return [int(running[x - 1]) for x in grid]


def _dps_for(tol: float) -> int:
    return max(20, int(-math.log10(tol)) + 8)


def l_value(chi: DirichletCharacter, s: complex, tol: float = 1e-12) -> complex:
    """
    L(s, chi) = m^(-s) sum_a chi(a) zeta(s, a/m) through the Hurwitz zeta
    function; at s = 1 with chi non-principal the digamma form is used.
    """
    if tol <= 0:
        raise ContractError("tol must be positive")
    s = complex(s)
    if s.real < 0.5:
        raise ContractError("only Re s >= 1/2 is supported")
    m = chi.modulus
    at_one = s == 1
    if at_one and chi.is_principal:
        raise PoleError("L(s, chi) has a pole at s = 1 for principal chi")
    with mpmath.workdps(_dps_for(tol)):
        if at_one:
            value = -sum(
                mpmath.mpc(chi(a)) * mpmath.digamma(mpmath.mpf(a) / m)
                for a in range(1, m)
                if chi(a) != 0
            ) / m
        else:
            ms = mpmath.mpc(s)
            value = mpmath.power(m, -ms) * sum(
                mpmath.mpc(chi(a)) * mpmath.zeta(ms, mpmath.mpf(a) / m)
                for a in range(1, m + 1)
                if chi(a) != 0
            )
        return complex(value)


def convolution_sum(
    X: int, s: complex, chi1: DirichletCharacter, chi2: DirichletCharacter
) -> complex:
    """sum_{n < X} n^(-s) sum_{d | n} d^(2s) chi1(d) chi2(n/d) = sum_{de < X} chi1(d) chi2(e) d^s e^(-s)"""
    _character_places(chi1, chi2)
    if X < 2:
        return 0j
    s = complex(s)
    n = np.arange(X, dtype=np.float64)
    with np.errstate(divide="ignore"):
        logs = np.log(n)
    logs[0] = 0.0
    inner = chi2.table(X) * np.exp(-s * logs)
    inner[0] = 0
    F2 = np.cumsum(inner)
    d = np.arange(1, X)
    outer = chi1.table(X)[1:] * np.exp(s * logs[1:])
    return complex(np.sum(outer * F2[(X - 1) // d]))


def convolution_main_term(
    X: float,
    s: complex,
    chi1: DirichletCharacter,
    chi2: DirichletCharacter,
    tol: float = 1e-12,
) -> complex:
    """
    prod(1-1/q) [delta(chi1) L(1+2s, chi2) X^(1+s)/(1+s)
                 + delta(chi2) L(1-2s, chi1) X^(1-s)/(1-s)].

    At s = 0 with both characters principal the two poles cancel and the
    limit prod(1-1/q)^2 X (log X + 2 gamma_S - 1) is returned.
    """
    S = _character_places(chi1, chi2)
    s = complex(s)
    c = float(S.euler_factor())
    if X <= 0:
        return 0j
    if s == 0 and chi1.is_principal and chi2.is_principal:
        return complex(divisor_main_term(X, S))
    total = 0j
    if chi1.is_principal:
        total += l_value(chi2, 1 + 2 * s, tol) * cmath.exp((1 + s) * math.log(X)) / (1 + s)
    if chi2.is_principal:
        total += l_value(chi1, 1 - 2 * s, tol) * cmath.exp((1 - s) * math.log(X)) / (1 - s)
    return c * total


def harmonic_partial_sums(grid: Sequence[int], S: PlaceSet) -> list[float]:
    """Floating sum_{n < X, (n,S)=1} 1/n for every X in the grid"""
    top = max(grid)
    n = np.arange(top, dtype=np.float64)
    terms = np.where(coprime_mask(top, S), 1.0 / np.maximum(n, 1.0), 0.0)
    running = np.cumsum(terms)
    return [float(running[x - 1]) for x in grid]


def harmonic_main_term(X: float, S: PlaceSet) -> float:
    """prod(1-1/q) (log X + gamma_S)"""
    return float(S.euler_factor()) * (math.log(X) + float(gamma_S(S)))
