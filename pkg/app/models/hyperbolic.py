"""
Hyperbolic part of the trace formula for f^n: enumeration of the split
support, the degree-one term, and the modified weighted terms J-hat and
J-tilde, exactly per n and vectorized over n < X.
"""

from __future__ import annotations

import itertools
import math
import time
from collections.abc import Iterator
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

import numpy as np
import pandas as pd
import structlog
from sympy import divisors, factorint

from app.core.arith import lambda_divisor_sum, prime_power_log_sum, sieve
from app.core.config import settings
from app.core.constants import HYPERBOLIC_COLUMNS, SWEEP_CHUNK_SIZE
from app.core.errors import ContractError
from app.core.exactnum import HalfPowRational, LogNumber, halfpow_eval, lognum_sum
from app.core.padic import PlaceSet, SplitElement
from app.core.reduction import chunk_ranges, ordered_reduce
from app.models.orbital import (
    TestFunctionSpec,
    orb_split,
    theta_inf,
    theta_p,
    worb_hat,
    worb_tilde,
)

logger = structlog.get_logger()

SupportKey = tuple[Fraction, Fraction, tuple[int, ...]]


@dataclass(frozen=True)
class SupportBox:
    """
    Valuation bounds -alpha_q <= v_q(a), v_q(b) <= beta_q at each S-prime and
    the archimedean bound max(|a/b|, |b/a|) <= ratio_bound.
    """

    S: PlaceSet
    alpha: dict[int, int]
    beta: dict[int, int]
    radius: float

    @classmethod
    def from_spec(cls, f: TestFunctionSpec) -> SupportBox:
        alpha = {q: 0 for q in f.S}
        beta = {q: f.ball(q).m for q in f.S}
        return cls(f.S, alpha, beta, f.profile.support_radius)

    @property
    def ratio_bound(self) -> float:
        R = self.radius
        return (R + math.sqrt(R * R + 1.0)) ** 2

    def admits(self, a: Fraction, b: Fraction) -> bool:
        """(a+b)^2 <= 4 R^2 |ab|, the archimedean support of theta_inf"""
        return float((a + b) ** 2) <= 4.0 * self.radius**2 * abs(float(a * b))


def _check_coprime(n: int, S: PlaceSet) -> None:
    if n < 1 or not S.coprime(n):
        raise ContractError(f"n = {n} must be a positive integer coprime to S")


def _split_vectors(box: SupportBox) -> Iterator[tuple[int, int]]:
    """(S-part of a, S-part of b) over the valuation box"""
    primes = box.S.finite_primes
    ranges = [range(box.beta[q] + 1) for q in primes]
    for exps in itertools.product(*ranges):
        a_part = math.prod(q**e for q, e in zip(primes, exps))
        b_part = math.prod(q ** (box.beta[q] - e) for q, e in zip(primes, exps))
        yield a_part, b_part


def enumerate_support(n: int, S: PlaceSet, f: TestFunctionSpec) -> list[tuple[SplitElement, tuple[int, ...]]]:
    """
    All ordered (a, b) with ab = +-n q^nu, a != b, inside the support box.

    The S-valuations of a and b lie in [0, m_q] with sum m_q, so nu = m.
    """
    _check_coprime(n, S)
    if f.S != S:
        raise ContractError("test function is defined for a different S")
    box = SupportBox.from_spec(f)
    nu = tuple(box.beta[q] for q in S)
    out = []
    for d in divisors(n):
        e = n // d
        for a_part, b_part in _split_vectors(box):
            for sa, sb in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
                a, b = Fraction(sa * d * a_part), Fraction(sb * e * b_part)
                if a != b and box.admits(a, b):
                    out.append((SplitElement(a, b), nu))
    return out


def _theta_weight(f: TestFunctionSpec, g: SplitElement) -> float:
    """prod(1 - 1/q) theta_inf prod_q theta_q"""
    th_inf = theta_inf(f.profile, g.a, g.b)
    if th_inf == 0.0:
        return 0.0
    local = HalfPowRational.of(f.S.euler_factor())
    for q in f.S:
        local = local * theta_p(q, f.ball(q), g.trace, g.norm)
    return th_inf * halfpow_eval(local)


def i_hyp_deg1(n: int, S: PlaceSet, f: TestFunctionSpec) -> float:
    """Degree-one hyperbolic term in theta form"""
    return math.fsum(_theta_weight(f, g) for g, _ in enumerate_support(n, S, f))


def _numerator_primes(x: Fraction, S: PlaceSet) -> list[int]:
    return [int(p) for p in factorint(abs(x.numerator)) if int(p) not in S]


def i_hyp_deg1_adelic(n: int, S: PlaceSet, f: TestFunctionSpec) -> float:
    """
    Degree-one term as sum_gamma prod_v orb(f_v; gamma): the archimedean
    orbital integral theta_inf |ab|^(1/2) / |a-b|, unscaled balls at S and the
    scaled balls of f^n at the primes dividing n(a-b).
    """
    terms = []
    for g, _ in enumerate_support(n, S, f):
        th_inf = theta_inf(f.profile, g.a, g.b)
        if th_inf == 0.0:
            continue
        orb_inf = th_inf * math.sqrt(abs(float(g.norm))) / abs(float(g.a - g.b))
        local = HalfPowRational.of(1)
        for q in S:
            ball = f.ball(q)
            local = local * orb_split(q, ball.m, g.a, g.b, weight=ball.weight)
        away = set(_numerator_primes(g.a - g.b, S)) | {int(p) for p in factorint(n)}
        for p in sorted(away):
            local = local * orb_split(p, f.away_ball(n, p).m, g.a, g.b, scaled=True)
        terms.append(orb_inf * halfpow_eval(local))
    return math.fsum(terms)


@dataclass
class WeightedLogSum:
    """
    sum over support elements of (float weight) * (exact LogNumber).

    The exact parts are kept per element so that two evaluation routes can be
    compared structurally.
    """

    entries: dict[SupportKey, tuple[float, LogNumber]] = field(default_factory=dict)

    def add(self, key: SupportKey, weight: float, value: LogNumber) -> None:
        if key in self.entries:
            w, v = self.entries[key]
            if w != weight:
                raise ContractError("inconsistent weights for one support element")
            value = v + value
        self.entries[key] = (weight, value)

    def to_float(self) -> float:
        return math.fsum(w * v.to_float() for w, v in self.entries.values())

    def exact_parts(self) -> dict[SupportKey, LogNumber]:
        return {k: v for k, (w, v) in self.entries.items() if w != 0.0 and not v.is_zero()}

    def same_exact_parts(self, other: WeightedLogSum) -> bool:
        return self.exact_parts() == other.exact_parts()

    def is_exactly_zero(self) -> bool:
        return not self.exact_parts()

    def combine(self, other: WeightedLogSum, sign: int = 1) -> WeightedLogSum:
        out = WeightedLogSum(dict(self.entries))
        for k, (w, v) in other.entries.items():
            out.add(k, w, v * sign)
        return out

    def __len__(self) -> int:
        return len(self.entries)


def _key(g: SplitElement, nu: tuple[int, ...]) -> SupportKey:
    return (g.a, g.b, nu)


def _weighted_support(n: int, S: PlaceSet, f: TestFunctionSpec) -> Iterator[tuple[SupportKey, SplitElement, float]]:
    for g, nu in enumerate_support(n, S, f):
        weight = _theta_weight(f, g)
        if weight != 0.0:
            yield _key(g, nu), g, weight


def j_hyp_hat_p(n: int, p: int, S: PlaceSet, f: TestFunctionSpec) -> WeightedLogSum:
    """
    -prod(1-1/q) sum theta_inf theta_q sum_{j <= v_p(a-b)} log p/p^j, read off
    the local weighted orbital integral as worb_hat / (2 orb).
    """
    if p in S:
        raise ContractError(f"{p} lies in S")
    out = WeightedLogSum()
    m = f.away_ball(n, p).m
    for key, g, weight in _weighted_support(n, S, f):
        orb = orb_split(p, m, g.a, g.b, scaled=True)
        if orb.is_zero():
            continue
        tail = worb_hat(p, m, g.a, g.b, scaled=True).divide_by(orb * 2)
        out.add(key, weight, -tail)
    return out


def j_hyp_hat_S(n: int, S: PlaceSet, f: TestFunctionSpec, form: str = "lambda") -> WeightedLogSum:
    """
    J-hat_hyp^S(f^n).

    form="lambda": sum_{d | (a-b)^(S)} Lambda(d)/d through the divisor list;
    form="per_prime": the sum of j_hyp_hat_p over the primes outside S that
    divide some a - b, all of which lie below truncation_bound * n.
    """
    out = WeightedLogSum()
    if form == "lambda":
        for key, g, weight in _weighted_support(n, S, f):
            diff = abs((g.a - g.b).numerator)
            out.add(key, weight, -lambda_divisor_sum(diff, S))
        return out
    if form != "per_prime":
        raise ContractError(f"unknown form {form!r}")

    primes: set[int] = set()
    for _, g, _ in _weighted_support(n, S, f):
        primes.update(_numerator_primes(g.a - g.b, S))
    bound = truncation_bound(S, f) * n
    if primes and max(primes) > bound:
        raise ContractError(f"prime {max(primes)} above the truncation bound {bound}")
    for p in sorted(primes):
        out = out.combine(j_hyp_hat_p(n, p, S, f))
    return out


def j_hat_factored(n: int, S: PlaceSet, f: TestFunctionSpec) -> WeightedLogSum:
    """Lambda-sum computed by factorization rather than divisor enumeration"""
    out = WeightedLogSum()
    for key, g, weight in _weighted_support(n, S, f):
        out.add(key, weight, -prime_power_log_sum(abs((g.a - g.b).numerator), S))
    return out


def j_tilde_hyp_S(n: int, S: PlaceSet, f: TestFunctionSpec) -> WeightedLogSum:
    """J-tilde from the worb_tilde weights at every prime outside S dividing n(a-b)"""
    out = WeightedLogSum()
    n_primes = {int(p) for p in factorint(n)}
    for key, g, weight in _weighted_support(n, S, f):
        terms = []
        for p in sorted(set(_numerator_primes(g.a - g.b, S)) | n_primes):
            m = f.away_ball(n, p).m
            orb = orb_split(p, m, g.a, g.b, scaled=True)
            if orb.is_zero():
                continue
            terms.append(worb_tilde(p, m, g.a, g.b, scaled=True).divide_by(orb * 2))
        out.add(key, weight, -lognum_sum(terms))
    return out


def truncation_bound(S: PlaceSet, f: TestFunctionSpec) -> int:
    """
    C with j_hyp_hat_p(n, p) = 0 for p > C n.

    |a - b| <= |a| + |b| <= 2 sqrt(rho |ab|) and |ab| <= n prod q^(alpha+beta).
    """
    box = SupportBox.from_spec(f)
    q_part = math.prod(q ** (box.alpha[q] + box.beta[q]) for q in S)
    return max(1, math.ceil(2.0 * math.sqrt(box.ratio_bound))) * q_part


def log_n(n: int) -> LogNumber:
    return LogNumber.of(0, {int(p): e for p, e in factorint(n).items()})


def j_relation_check(n: int, S: PlaceSet, f: TestFunctionSpec) -> WeightedLogSum:
    """(J-hat - J-tilde) + (1/2) log n I_hyp^deg1, per support element; exactly zero"""
    half_log = log_n(n) / 2
    jhat = j_hyp_hat_S(n, S, f)
    jtilde = j_tilde_hyp_S(n, S, f)
    residual = jhat.combine(jtilde, -1)
    for key, g, weight in _weighted_support(n, S, f):
        residual.add(key, weight, half_log)
    return residual


# Vectorized sweep over n < X


def _away_log_table(limit: int, S: PlaceSet) -> np.ndarray:
    """H[m] = sum_{p not in S, p^j | m} log p / p^j for 0 < m < limit"""
    tables = sieve(max(limit, 3))
    H = np.zeros(limit, dtype=np.float64)
    powers = np.nonzero(tables.lam_prime[:limit])[0]
    for q in powers:
        p = int(tables.lam_prime[q])
        if p in S:
            continue
        H[q::q] += math.log(p) / float(q)
    return H


@dataclass(frozen=True)
class _SweepContext:
    X: int
    f: TestFunctionSpec
    coprime: np.ndarray
    splits: tuple[tuple[int, int], ...]
    local_weight: float
    H: np.ndarray
    log_table: np.ndarray


def _sweep_block(ctx: _SweepContext, lo: int, hi: int) -> np.ndarray:
    """Contributions of the divisor pairs (d, e) with lo <= d < hi, de < X"""
    X = ctx.X
    acc = np.zeros((3, X), dtype=np.float64)
    ds = ctx.coprime[(ctx.coprime >= lo) & (ctx.coprime < hi)]
    if ds.size == 0:
        return acc
    counts = np.searchsorted(ctx.coprime, (X - 1) // ds, side="right")
    d = np.repeat(ds, counts)
    e = np.concatenate([ctx.coprime[:c] for c in counts]) if counts.sum() else np.zeros(0, dtype=np.int64)
    n = d * e
    for a_part, b_part in ctx.splits:
        A = (d * a_part).astype(np.float64)
        B = (e * b_part).astype(np.float64)
        root = 2.0 * np.sqrt(A * B)
        for sa, sb in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
            a, b = sa * A, sb * B
            if sa == sb:
                th = ctx.f.profile.plus_array((a + b) / root)
            else:
                th = ctx.f.profile.minus_array((a + b) / root)
            diff = np.abs(sa * d * a_part - sb * e * b_part)
            regular = diff != 0
            w = np.where(regular, th * ctx.local_weight, 0.0)
            if not w.any():
                continue
            # prime-to-S part of a - b indexes the log table
            core = diff.copy()
            for q in ctx.f.S:
                while True:
                    hit = (core % q == 0) & (core > 0)
                    if not hit.any():
                        break
                    core[hit] //= q
            hval = np.where(regular, ctx.H[np.minimum(core, ctx.H.size - 1)], 0.0)
            acc[0] += np.bincount(n, weights=w, minlength=X)
            acc[1] += np.bincount(n, weights=-w * hval, minlength=X)
            acc[2] += np.bincount(n, weights=-w * (hval - 0.5 * ctx.log_table[n]), minlength=X)
    return acc


def hyperbolic_sweep(
    X: int, S: PlaceSet, f: TestFunctionSpec, workers: int | None = None
) -> pd.DataFrame:
    """
    Per-n values of I_hyp^deg1, J-hat^S and J-tilde^S for n < X coprime to S.

    Work is split into fixed d-ranges; blocks are summed in range order so the
    table does not depend on the worker count.
    """
    if X < 2:
        raise ContractError("X must be at least 2")
    if f.S != S:
        raise ContractError("test function is defined for a different S")
    start = time.time()
    box = SupportBox.from_spec(f)
    splits = tuple(_split_vectors(box))
    q_total = math.prod(q ** box.beta[q] for q in S)
    local_weight = float(
        math.prod(float(f.ball(q).weight) for q in S) * math.sqrt(q_total)
    )
    coprime = np.array([k for k in range(1, X) if S.coprime(k)], dtype=np.int64)
    limit = X * q_total + 2
    ctx = _SweepContext(
        X=X,
        f=f,
        coprime=coprime,
        splits=splits,
        local_weight=local_weight,
        H=_away_log_table(limit, S),
        log_table=np.log(np.maximum(np.arange(X, dtype=np.float64), 1.0)),
    )

    ranges = chunk_ranges(1, X, SWEEP_CHUNK_SIZE)
    total = ordered_reduce(
        lambda lo, hi: _sweep_block(ctx, lo, hi),
        ranges,
        workers or settings.sweep_workers,
        np.zeros((3, X), dtype=np.float64),
    )

    frame = pd.DataFrame(
        {
            HYPERBOLIC_COLUMNS[0]: coprime,
            HYPERBOLIC_COLUMNS[1]: total[0][coprime],
            HYPERBOLIC_COLUMNS[2]: total[1][coprime],
            HYPERBOLIC_COLUMNS[3]: total[2][coprime],
        }
    )
    logger.info(
        "Hyperbolic sweep finished",
        X=X,
        rows=len(frame),
        chunks=len(ranges),
        seconds=round(time.time() - start, 3),
    )
    return frame


def hyperbolic_partial_sums(frame: pd.DataFrame, grid: list[int]) -> dict[str, list[float]]:
    """sum_{n < X} of each column for X in grid"""
    out: dict[str, list[float]] = {}
    n = frame[HYPERBOLIC_COLUMNS[0]].to_numpy()
    for column in HYPERBOLIC_COLUMNS[1:]:
        cumulative = np.concatenate([[0.0], np.cumsum(frame[column].to_numpy())])
        out[column] = [float(cumulative[np.searchsorted(n, X, side="left")]) for X in grid]
    return out


def describe_support(n: int, S: PlaceSet, f: TestFunctionSpec) -> list[dict[str, Any]]:
    return [
        {"a": str(g.a), "b": str(g.b), "nu": list(nu), "weight": _theta_weight(f, g)}
        for g, nu in enumerate_support(n, S, f)
    ]
