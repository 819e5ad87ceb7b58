"""
Local orbital integrals on the split torus for Hecke-ball test functions,
the normalized profiles theta_p and Theta-hat_p, and the archimedean traces.
"""

from __future__ import annotations

import math
import warnings
from collections.abc import Callable, Mapping
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

import structlog
from scipy.integrate import IntegrationWarning, quad

from app.core.constants import QUADRATURE_LIMIT, QUADRATURE_TOLERANCE, SERIES_MAX_TERMS
from app.core.errors import (
    AccuracyError,
    ContractError,
    NonRegularError,
    UnsupportedCaseError,
)
from app.core.exactnum import (
    HalfPowRational,
    LogNumber,
    RationalLike,
    ScaledLogNumber,
    as_fraction,
    format_fraction,
)
from app.core.padic import PlaceSet, k_of, modified_exponent, omega, vp
from app.core.shells import (
    CellInvariants,
    Monomial,
    ThetaHatProvider,
    one_minus_abs_integral,
    v4,
)
from app.models.profiles import ArchProfile

logger = structlog.get_logger()


@dataclass(frozen=True)
class HeckeBall:
    """weight * 1_{X_p^m}, times p^(-m/2) when scaled"""

    m: int = 0
    scaled: bool = False
    weight: Fraction = Fraction(1)

    def __post_init__(self) -> None:
        if self.m < 0:
            raise ContractError("Hecke-ball index m must be non-negative")
        object.__setattr__(self, "weight", as_fraction(self.weight))

    def scale(self, p: int) -> HalfPowRational:
        return HalfPowRational.of(self.weight, {p: -self.m} if self.scaled else None)


SPHERICAL = HeckeBall()


@dataclass(frozen=True)
class TestFunctionSpec:
    """f = f_inf * prod_{q in S} f_q; places outside S carry f^n_p"""

    __test__ = False

    S: PlaceSet
    profile: ArchProfile
    balls: Mapping[int, HeckeBall] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for q, ball in self.balls.items():
            if q not in self.S:
                raise ContractError(f"Hecke ball given for {q}, which is not in S")
            if ball.scaled:
                raise ContractError("places in S carry unscaled balls")

    @classmethod
    def spherical(
        cls, S: PlaceSet, profile: ArchProfile, hecke_m: Mapping[int, int] | None = None
    ) -> TestFunctionSpec:
        balls = {q: HeckeBall((hecke_m or {}).get(q, 0)) for q in S}
        return cls(S, profile, balls)

    def ball(self, q: int) -> HeckeBall:
        return self.balls.get(q, SPHERICAL)

    def away_ball(self, n: int, p: int) -> HeckeBall:
        """the component of f^n at p outside S"""
        v = vp(n, p)
        assert isinstance(v, int)
        return HeckeBall(v, scaled=True)

    @property
    def is_spherical(self) -> bool:
        return all(b.m == 0 and b.weight == 1 for b in self.balls.values())


def _regular(a: Fraction, b: Fraction) -> None:
    if a == b:
        raise NonRegularError("non-regular element: a = b")


def _in_support(p: int, m: int, a: Fraction, b: Fraction) -> bool:
    if a == 0 or b == 0:
        return False
    va, vb = vp(a, p), vp(b, p)
    return va >= 0 and vb >= 0 and va + vb == m


def orb_split(
    p: int,
    m: int,
    a: RationalLike,
    b: RationalLike,
    scaled: bool = False,
    weight: RationalLike = 1,
) -> HalfPowRational:
    """orb(1_{X_p^m}; diag(a, b)) = 1/|a-b|_p on the support"""
    a_, b_ = as_fraction(a), as_fraction(b)
    _regular(a_, b_)
    if not _in_support(p, m, a_, b_):
        return HalfPowRational.zero()
    k = vp(a_ - b_, p)
    assert isinstance(k, int)
    return HalfPowRational.of(Fraction(p) ** k, None) * HeckeBall(m, scaled, as_fraction(weight)).scale(p)


def _log_tail(p: int, k: int) -> LogNumber:
    """sum_{j=1}^k log p / p^j"""
    return LogNumber.log(p, sum((Fraction(1, p**j) for j in range(1, k + 1)), Fraction(0)))


def worb(
    p: int,
    m: int,
    a: RationalLike,
    b: RationalLike,
    scaled: bool = False,
    weight: RationalLike = 1,
) -> ScaledLogNumber:
    """(2/|a-b|_p)(log|a-b|_p + sum_{j<=k} log p/p^j) on the support"""
    orb = orb_split(p, m, a, b, scaled, weight)
    if orb.is_zero():
        return ScaledLogNumber()
    k = vp(as_fraction(a) - as_fraction(b), p)
    assert isinstance(k, int)
    return ScaledLogNumber((LogNumber.log(p, -k) + _log_tail(p, k)) * 2, orb)


def worb_hat(
    p: int,
    m: int,
    a: RationalLike,
    b: RationalLike,
    scaled: bool = False,
    weight: RationalLike = 1,
) -> ScaledLogNumber:
    """(2/|a-b|_p) sum_{j<=k} log p/p^j; equals 2(p^k-1)/(p-1) log p when unscaled"""
    orb = orb_split(p, m, a, b, scaled, weight)
    if orb.is_zero():
        return ScaledLogNumber()
    k = vp(as_fraction(a) - as_fraction(b), p)
    assert isinstance(k, int)
    return ScaledLogNumber(_log_tail(p, k) * 2, orb)


def worb_tilde(
    p: int,
    m: int,
    a: RationalLike,
    b: RationalLike,
    scaled: bool = False,
    weight: RationalLike = 1,
) -> ScaledLogNumber:
    """worb - 2 log(|a-b|_p / |ab|_p^(1/2)) orb"""
    orb = orb_split(p, m, a, b, scaled, weight)
    if orb.is_zero():
        return ScaledLogNumber()
    a_, b_ = as_fraction(a), as_fraction(b)
    k = vp(a_ - b_, p)
    assert isinstance(k, int)
    correction = (LogNumber.log(p, -k) - LogNumber.log(p, -m) / 2) * 2
    return worb(p, m, a_, b_, scaled, weight) - ScaledLogNumber(correction, orb)


# theta_p and Theta-hat_p


def theta_p(p: int, f: HeckeBall, T: RationalLike, N: RationalLike) -> HalfPowRational:
    """
    theta_p(T, N) = |N|^(-1/2) (1 - chi(p)/p)^-1 p^(-k) orb(f_p; gamma).

    For m = 0 all three square classes are handled through
    orb = 1 + sum_{j=1}^k p^j (1 - chi/p); for m > 0 only split elements.
    """
    T_, N_ = as_fraction(T), as_fraction(N)
    disc = T_ * T_ - 4 * N_
    if disc == 0:
        raise NonRegularError("T^2 = 4N: element is not regular")
    if N_ == 0 or vp(N_, p) != f.m or (T_ != 0 and vp(T_, p) < 0):
        return HalfPowRational.zero()

    chi = omega(p, disc)
    if f.m > 0 and chi != 1:
        raise UnsupportedCaseError(f"theta_p for m={f.m} is implemented for split elements only")

    euler = 1 / (1 - Fraction(chi, p))
    if chi == 1:
        value = 1 / (1 - Fraction(1, p))
    else:
        k = k_of(p, T_, N_)
        orb = 1 + sum((Fraction(p) ** j * (1 - Fraction(chi, p)) for j in range(1, k + 1)), Fraction(0))
        value = euler * Fraction(p) ** (-k) * orb
    return HalfPowRational.of(value, {p: f.m}) * f.scale(p)


@dataclass(frozen=True)
class ThetaHatValue:
    """Finite sum of rational multiples of square roots, keyed by the surd primes"""

    parts: tuple[tuple[tuple[int, ...], Fraction], ...] = ()

    @classmethod
    def of(cls, terms: list[HalfPowRational]) -> ThetaHatValue:
        acc: dict[tuple[int, ...], Fraction] = {}
        for term in terms:
            coeff, surd = term.canonical()
            acc[surd] = acc.get(surd, Fraction(0)) + coeff
        return cls(tuple(sorted((s, c) for s, c in acc.items() if c)))

    def is_zero(self) -> bool:
        return not self.parts

    def rational(self) -> Fraction:
        """Value when no surd part is present"""
        if any(s for s, _ in self.parts):
            raise ArithmeticError("Theta-hat value is irrational")
        return sum((c for _, c in self.parts), Fraction(0))

    def to_float(self) -> float:
        return sum(float(c) * math.sqrt(math.prod(s)) for s, c in self.parts)

    def __str__(self) -> str:
        if not self.parts:
            return "0"
        return " + ".join(
            format_fraction(c) + "".join(f"*{q}^(1/2)" for q in s) for s, c in self.parts
        )


def _four_root(p: int) -> Fraction:
    """|4|_p^(1/2)"""
    return Fraction(1, 2) if p == 2 else Fraction(1)


def _theta_hat_terms(p: int, weight: Fraction, om: int, v1: int) -> tuple[Monomial, ...]:
    """Theta-hat_p as monomials in (|y|'/|1-y|)^(1/2) for m = 0"""
    if v1 > v4(p) or v1 % 2:
        return ()
    if om == 1:
        return (Monomial(weight),)
    coeff = Fraction(2, p + 1) if om == -1 else Fraction(1, p)
    return (Monomial(weight), Monomial(-weight * coeff * _four_root(p), 1))


def _require_spherical(f: HeckeBall) -> None:
    if f.m != 0:
        raise UnsupportedCaseError("Theta-hat_p is implemented for m = 0")


def spherical_theta_hat(p: int, f: HeckeBall = SPHERICAL) -> ThetaHatProvider:
    """Theta-hat_p as a cell-wise monomial provider for the shell engine"""
    _require_spherical(f)

    def provider(inv: CellInvariants) -> tuple[Monomial, ...]:
        if inv.p != p:
            raise ContractError("cell lives over a different prime")
        if f.weight == 0:
            return ()
        if inv.v1 is None:
            if inv.v1_floor > v4(p):
                return ()
            raise UnsupportedCaseError("v_p(1-y) is not resolved on this cell")
        if inv.omega is None:
            raise UnsupportedCaseError("square class is not resolved on this cell")
        return _theta_hat_terms(p, f.weight, inv.omega, inv.v1)

    return provider


def theta_hat_p(p: int, f: HeckeBall, y: RationalLike) -> ThetaHatValue:
    """Theta-hat_p(y) for y not in {0, 1}"""
    _require_spherical(f)
    y_ = as_fraction(y)
    if y_ in (0, 1):
        raise ContractError("y must avoid 0 and 1")
    v1 = vp(1 - y_, p)
    assert isinstance(v1, int)
    a = modified_exponent(p, y_)
    terms = []
    for mono in _theta_hat_terms(p, f.weight, omega(p, y_), v1):
        # (|y|'/|1-y|)^(1/2) = p^((a + v1)/2)
        exps = {p: a + v1} if mono.sqrt_power else None
        terms.append(HalfPowRational.of(mono.coeff, exps))
    return ThetaHatValue.of(terms)


def theta_hat_reconstruct(
    p: int, f: HeckeBall, y: RationalLike, window: tuple[int, int] | None = None
) -> ThetaHatValue:
    """
    int theta_p(z, z^2 (1-y)/4) dz/|z| summed over the shells v_p(z) in window.

    The integrand depends on z only through v_p(z), and each shell has
    multiplicative volume 1 - 1/p.
    """
    _require_spherical(f)
    y_ = as_fraction(y)
    if y_ in (0, 1):
        raise ContractError("y must avoid 0 and 1")
    if window is None:
        v1 = vp(1 - y_, p)
        assert isinstance(v1, int)
        window = (-3, max(3, (v4(p) - v1) // 2 + 3))
    lo, hi = window
    shell = 1 - Fraction(1, p)
    terms = []
    for v in range(lo, hi + 1):
        z = Fraction(p) ** v
        terms.append(theta_p(p, f, z, z * z * (1 - y_) / 4) * shell)
    return ThetaHatValue.of(terms)


# Weighted traces


def wtr_hat_hecke(p: int, m: int) -> LogNumber:
    """
    Weighted trace of Ind(0, triv) at p^(-m/2) 1_{X_p^m}:
    2 sum_{k=0}^m sum_{j=1}^{min(k, m-k)} log p/p^j, plus
    2 p^(1-m/2)/(p^2-1) * log p/(p-1) for even m.
    """
    if m < 0:
        raise ContractError("m must be non-negative")
    total = Fraction(0)
    for k in range(m + 1):
        total += 2 * sum((Fraction(1, p**j) for j in range(1, min(k, m - k) + 1)), Fraction(0))
    if m % 2 == 0:
        total += 2 * Fraction(p) ** (1 - m // 2) / ((p * p - 1) * (p - 1))
    return LogNumber.log(p, total)


def wtr_hat_hecke_oracle(p: int, m: int) -> LogNumber:
    """
    The same weighted trace summed over the torus lattice diag(p^i u1, p^(m-i) u2).

    Off the diagonal i != m-i the weight is constant; on it v_p(a-b) = m/2 +
    v_p(u1-u2) and the unit pair is integrated by the shell engine.
    """
    if m < 0:
        raise ContractError("m must be non-negative")
    total = LogNumber()
    for i in range(m + 1):
        j = m - i
        total = total + _log_tail(p, min(i, j)) * 2
        if i == j:
            # E[sum_{t=i+1}^{i+v(u1-u2)} p^-t] over normalized unit pairs
            inner = one_minus_abs_integral(p) * Fraction(p) ** (-i) / (p - 1)
            total = total + LogNumber.log(p, 2 * inner / (1 - Fraction(1, p)))
    return total


def wtilde_tr_zero(p: int, f: HeckeBall = SPHERICAL) -> LogNumber:
    """2p log p / ((p-1)(p^2-1)) for the spherical unit ball"""
    if f.m != 0:
        raise UnsupportedCaseError("for m > 0 use wtr_hat_hecke; the two weights differ there")
    return LogNumber.log(p, f.weight * 2 * p / ((p - 1) * (p * p - 1)))


def unip_modified_local(p: int) -> LogNumber:
    """int_{Z_p} log|x|_p dx"""
    return LogNumber.log(p, Fraction(-1, p - 1))


@dataclass(frozen=True)
class SeriesResolution:
    p: int
    value: LogNumber
    tail_bound: float
    terms: int
    candidates: dict[str, float]
    matched_factor: int

    def to_json(self) -> dict[str, Any]:
        return {
            "p": self.p,
            "partial_sum": self.value.to_json(),
            "value": self.value.to_float(),
            "tail_bound": self.tail_bound,
            "terms": self.terms,
            "candidates": self.candidates,
            "matched_factor": self.matched_factor,
        }


def series_factor(p: int, tol: float = 1e-12) -> SeriesResolution:
    """
    A(p) = (1-1/p)^2 sum_m wtr_hat_hecke(p, m) p^-m, matched against
    {1, 2} * log p/(p^2-1).

    Each wtr_hat_hecke(p, m) is at most 2(m+2)/(p-1) log p, which bounds the tail.
    """
    euler2 = (1 - Fraction(1, p)) ** 2
    partial = Fraction(0)
    x = Fraction(1, p)
    for M in range(SERIES_MAX_TERMS):
        partial += wtr_hat_hecke(p, M).coeff(p) * x**M
        # sum_{m > M} (m+2) x^m
        tail = x ** (M + 1) * ((M + 3) / (1 - x) + x / (1 - x) ** 2)
        bound = float(euler2 * 2 * tail / (p - 1)) * math.log(p)
        value = float(euler2 * partial) * math.log(p)
        if M > 2 and bound <= tol * abs(value):
            break
    else:
        raise AccuracyError(f"A({p}) did not reach relative tolerance {tol}")

    base = math.log(p) / (p * p - 1)
    candidates = {"1x": base, "2x": 2 * base}
    matched = [f for f, c in ((1, base), (2, 2 * base)) if abs(value - c) <= bound + tol * abs(c)]
    if len(matched) != 1:
        raise AccuracyError(f"A({p}) = {value!r} matches {len(matched)} candidate closed forms")
    logger.info("Series factor resolved", p=p, value=value, factor=matched[0], terms=M + 1)
    return SeriesResolution(p, LogNumber.log(p, euler2 * partial), bound, M + 1, candidates, matched[0])


# Archimedean side


def theta_inf(profile: ArchProfile, a: RationalLike, b: RationalLike) -> float:
    """theta_inf(diag(a, b)) = theta^{sign ab}((a+b) / (2 sqrt|ab|))"""
    a_, b_ = as_fraction(a), as_fraction(b)
    N = a_ * b_
    if N == 0:
        raise ContractError("a and b must be nonzero")
    x = float(a_ + b_) / (2.0 * math.sqrt(abs(float(N))))
    return profile.plus(x) if N > 0 else profile.minus(x)


def theta_hat_inf(profile: ArchProfile, x: float) -> float:
    if x == 1:
        raise ContractError("x = 1 is excluded")
    if x < 1:
        t = 1.0 / math.sqrt(1.0 - x)
        return profile.plus(t) + profile.plus(-t)
    t = 1.0 / math.sqrt(x - 1.0)
    return profile.minus(t) + profile.minus(-t)


def _quad(func: Callable[..., float], lo: float, hi: float, tol: float, **kwargs: Any) -> float:
    if lo >= hi:
        return 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("error", IntegrationWarning)
        try:
            value, err = quad(func, lo, hi, epsabs=tol, epsrel=tol, limit=QUADRATURE_LIMIT, **kwargs)
        except IntegrationWarning as e:
            raise AccuracyError(f"quadrature on [{lo}, {hi}] did not converge") from e
    if err > max(tol, tol * abs(value)) * 10:
        raise AccuracyError(f"quadrature error estimate {err:.3e} exceeds tolerance {tol:.1e}")
    return float(value)


def tr_xi0_arch(profile: ArchProfile, tol: float = QUADRATURE_TOLERANCE) -> float:
    """
    Tr xi_0(f_inf) = 4 int_{|x|>1} theta^+(x)/sqrt(x^2-1) dx + 4 int theta^-(x)/sqrt(x^2+1) dx,
    evaluated in the coordinates x = +-cosh u and x = sinh u.
    """
    R = profile.support_radius
    if profile.is_zero:
        return 0.0
    plus = _quad(
        lambda u: profile.plus(math.cosh(u)) + profile.plus(-math.cosh(u)),
        0.0,
        math.acosh(R) if R > 1 else 0.0,
        tol,
    )
    U = math.asinh(R)
    minus = _quad(lambda u: profile.minus(math.sinh(u)), -U, U, tol)
    return 4.0 * (plus + minus)


def tr_xi0_arch_direct(profile: ArchProfile, tol: float = 1e-9) -> float:
    """2 int_{x>0} Theta-hat_inf(x) / (|1-x| |x|^(1/2)) dx, split at x = 1"""
    R = profile.support_radius
    if profile.is_zero:
        return 0.0
    below = 0.0
    if R > 1:
        below = _quad(
            lambda x: theta_hat_inf(profile, x) / (1.0 - x),
            0.0,
            1.0 - 1.0 / (R * R),
            tol,
            weight="alg",
            wvar=(-0.5, 0.0),
        )
    above = _quad(
        lambda x: theta_hat_inf(profile, x) / ((x - 1.0) * math.sqrt(x)),
        1.0 + 1.0 / (R * R),
        math.inf,
        tol,
    )
    return 2.0 * (below + above)


@dataclass(frozen=True)
class ArchLimitTerms:
    trace: float
    x1_integral: float
    x0_log_integral: float
    implied_value: float

    def to_json(self) -> dict[str, float]:
        return {
            "tr_xi0": self.trace,
            "x1_integral": self.x1_integral,
            "x0_log_integral": self.x0_log_integral,
            "implied_r_term_minus_half_wtilde": self.implied_value,
        }


def arch_limit_terms(profile: ArchProfile, tol: float = QUADRATURE_TOLERANCE) -> ArchLimitTerms:
    """
    The archimedean pieces of the local limit form. The combination
    log 2 Tr + pi int_{X_1} - 2 int_{X_0} log(...) is reported as the implied
    value of the intertwining term; it is not checked against anything.
    """
    trace = tr_xi0_arch(profile, tol)
    if profile.is_zero:
        return ArchLimitTerms(0.0, 0.0, 0.0, 0.0)
    R = profile.support_radius

    x1 = 2.0 * _quad(
        lambda phi: profile.plus(math.sin(phi)) + profile.plus(-math.sin(phi)),
        0.0,
        math.pi / 2,
        tol,
    )

    log_plus = 0.0
    if R > 1:
        log_plus = -4.0 * _quad(
            lambda u: math.log(math.sinh(u)) * (profile.plus(math.cosh(u)) + profile.plus(-math.cosh(u))),
            0.0,
            math.acosh(R),
            tol,
        )
    log_minus = -2.0 * _quad(
        lambda u: (profile.minus(math.sinh(u)) + profile.minus(-math.sinh(u))) * 2.0 * math.log(math.cosh(u)),
        0.0,
        math.asinh(R),
        tol,
    )
    x0_log = log_plus + log_minus
    implied = math.log(2) * trace + math.pi * x1 - 2.0 * x0_log
    logger.info("Archimedean limit terms", profile=profile.name, trace=trace, implied=implied)
    return ArchLimitTerms(trace, x1, x0_log, implied)


