"""
Exact integration over Q_p against additive Haar measure, vol(Z_p) = 1.

A region is a disjoint union of cells p^n (c + p^k Z_p) (c a unit, k >= 1;
k = 0 denotes the ball p^n Z_p) and of tails, arithmetic progressions of
valuations n = n0 + j*d (j >= 0) sharing one residue constraint. Kernels are
finite sums of monomials

    coeff * |y|'^alpha * |1-y|^beta * |y|^gamma * (|y|'/|1-y|)^(s/2) * [log form]

which are constant on each cell; tails are summed as geometric series in
Q(sqrt p), so every result is exact.
"""

from __future__ import annotations

from collections import defaultdict
from collections.abc import Callable, Iterable, Iterator
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Union

import structlog

from app.core.errors import (
    ContractError,
    DivergenceError,
    KernelMismatchError,
    UnsupportedCaseError,
)
from app.core.exactnum import (
    LogNumber,
    QuadraticSurd,
    RationalLike,
    SurdLogNumber,
    as_fraction,
    format_fraction,
)
from app.core.padic import _unit_residue, omega, require_prime, unit_part, vp

logger = structlog.get_logger()


def v4(p: int) -> int:
    """v_p(4)"""
    return 2 if p == 2 else 0


@dataclass(frozen=True)
class Cell:
    """p^n (c + p^k Z_p); k = 0 is the ball p^n Z_p"""

    n: int
    c: int = 0
    k: int = 0

    def measure(self, p: int) -> Fraction:
        return Fraction(p) ** (-self.n - self.k)

    def label(self, p: int) -> str:
        if self.k == 0:
            return f"{p}^{self.n} Z_{p}"
        return f"{p}^{self.n}({self.c} + {p}^{self.k} Z_{p})"


@dataclass(frozen=True)
class Tail:
    """Cells p^(n0 + j d)(c + p^k Z_p) for j >= 0"""

    n0: int
    d: int
    c: int
    k: int

    def member(self, j: int) -> Cell:
        return Cell(self.n0 + j * self.d, self.c, self.k)

    def label(self, p: int) -> str:
        return f"{p}^({self.n0}{self.d:+d}j)({self.c} + {p}^{self.k} Z_{p}), j>=0"


Piece = Union[Cell, Tail]


@dataclass(frozen=True)
class CellInvariants:
    """
    Values that are constant on a shell cell.

    valuation     n = v_p(y)
    mod_exp       a with |y|'_p = p^a (None if the residue depth does not fix it)
    omega         square class (None if undetermined)
    v1            v_p(1 - y) (None if only the lower bound v1_floor is known)
    """

    p: int
    valuation: int
    mod_exp: int | None
    omega: int | None
    v1: int | None
    v1_floor: int
    residue: int
    depth: int

    @property
    def abs_exp(self) -> int:
        """g with |y|_p = p^g"""
        return -self.valuation

    @property
    def one_minus_exp(self) -> int | None:
        """b with |1 - y|_p = p^b"""
        return None if self.v1 is None else -self.v1


def cell_invariants(p: int, cell: Cell) -> CellInvariants:
    if cell.k == 0:
        raise KernelMismatchError(f"{cell.label(p)} is a ball, not a shell")
    n, c, k = cell.n, cell.c, cell.k

    if p == 2:
        if n % 2:
            mod_exp: int | None = -n + 3
            om: int | None = 0
        else:
            mod_exp = None if k < 2 else (-n if c % 4 == 1 else -n + 2)
            if k >= 3:
                om = {1: 1, 5: -1}.get(c % 8, 0)
            elif k == 2 and c % 4 == 3:
                om = 0
            else:
                om = None
    else:
        mod_exp = -2 * (n // 2)
        om = 0 if n % 2 else omega(p, c)

    if n > 0:
        v1: int | None = 0
        floor = 0
    elif n < 0:
        v1 = n
        floor = n
    else:
        one_minus = 1 - c
        depth = vp(one_minus, p) if one_minus else k
        if depth < k:
            assert isinstance(depth, int)
            v1, floor = depth, depth
        else:
            v1, floor = None, k
    return CellInvariants(p, n, mod_exp, om, v1, floor, c, k)


@dataclass(frozen=True)
class Monomial:
    """
    coeff * (|y|'/|1-y|)^(sqrt_power/2) * [log p * (ca*a + cb*b + cg*g)]

    with |y|' = p^a, |1-y| = p^b, |y| = p^g; log_form None means no log factor.
    """

    coeff: Fraction
    sqrt_power: int = 0
    log_form: tuple[Fraction, Fraction, Fraction] | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "coeff", as_fraction(self.coeff))
        if self.log_form is not None:
            object.__setattr__(
                self, "log_form", tuple(as_fraction(x) for x in self.log_form)
            )

    def times(self, other: Monomial) -> Monomial:
        if self.log_form is not None and other.log_form is not None:
            raise KernelMismatchError("product of two log factors")
        return Monomial(
            self.coeff * other.coeff,
            self.sqrt_power + other.sqrt_power,
            self.log_form if self.log_form is not None else other.log_form,
        )


LOG_RATIO = (Fraction(-1), Fraction(1), Fraction(0))  # log(|1-y| / |y|')
LOG_ABS = (Fraction(0), Fraction(0), Fraction(1))  # log |y|


@dataclass(frozen=True)
class KernelSpec:
    alpha: Fraction = Fraction(0)
    beta: Fraction = Fraction(0)
    gamma: Fraction = Fraction(0)
    monomials: tuple[Monomial, ...] = (Monomial(Fraction(1)),)
    name: str = "kernel"

    def __post_init__(self) -> None:
        for attr in ("alpha", "beta", "gamma"):
            value = as_fraction(getattr(self, attr))
            if (2 * value).denominator != 1:
                raise ContractError(f"{attr} must be a half-integer")
            object.__setattr__(self, attr, value)


ThetaHatProvider = Callable[[CellInvariants], tuple[Monomial, ...]]


def _needs(kernel: KernelSpec, monos: Iterable[Monomial]) -> tuple[bool, bool]:
    """Whether a and b enter the integrand"""
    need_a = kernel.alpha != 0
    need_b = kernel.beta != 0
    for m in monos:
        if m.sqrt_power:
            need_a = need_b = True
        if m.log_form is not None:
            need_a = need_a or m.log_form[0] != 0
            need_b = need_b or m.log_form[1] != 0
    return need_a, need_b


def _exponents(
    inv: CellInvariants, kernel: KernelSpec, mono: Monomial
) -> tuple[int, Fraction | None]:
    """(2 * total p-exponent including the cell measure, log coefficient)"""
    need_a, need_b = _needs(kernel, (mono,))
    a, b, g = inv.mod_exp, inv.one_minus_exp, inv.abs_exp
    if need_a and a is None:
        raise KernelMismatchError(
            f"|y|' is not constant on the cell at n={inv.valuation}, c={inv.residue} mod {inv.p}^{inv.depth}"
        )
    if need_b and b is None:
        raise KernelMismatchError(
            f"|1-y| is not constant on the cell at n={inv.valuation}, c={inv.residue} mod {inv.p}^{inv.depth}"
        )
    a_ = Fraction(a or 0)
    b_ = Fraction(b or 0)
    total = (
        g
        - inv.depth
        + kernel.alpha * a_
        + kernel.beta * b_
        + kernel.gamma * g
        + Fraction(mono.sqrt_power, 2) * (a_ - b_)
    )
    twice = 2 * total
    if twice.denominator != 1:
        raise KernelMismatchError("exponent is not a half-integer on this cell")
    log_coeff = None
    if mono.log_form is not None:
        ca, cb, cg = mono.log_form
        log_coeff = ca * a_ + cb * b_ + cg * g
    return int(twice), log_coeff


def _cell_monomials(
    inv: CellInvariants, kernel: KernelSpec, provider: ThetaHatProvider | None
) -> tuple[Monomial, ...]:
    if provider is None:
        return kernel.monomials
    theta = provider(inv)
    return tuple(k.times(t) for k in kernel.monomials for t in theta)


@dataclass
class LedgerRow:
    piece: str
    measure: str
    kernel: str
    contribution: LogNumber
    surd: LogNumber = field(default_factory=LogNumber)

    def to_json(self) -> dict[str, Any]:
        row = {
            "cell": self.piece,
            "measure": self.measure,
            "kernel": self.kernel,
            "contribution": self.contribution.to_json(),
            "value": self.contribution.to_float(),
        }
        if not self.surd.is_zero():
            row["sqrt_p_part"] = self.surd.to_json()
        return row


def _describe(monos: tuple[Monomial, ...]) -> str:
    if not monos:
        return "0"
    parts = []
    for m in monos:
        text = format_fraction(m.coeff)
        if m.sqrt_power:
            text += f"*ratio^({m.sqrt_power}/2)"
        if m.log_form is not None:
            text += "*log"
        parts.append(text)
    return " + ".join(parts)


def _geometric(p: int, h1: int) -> tuple[QuadraticSurd, QuadraticSurd]:
    """(1/(1-r), r/(1-r)^2) for r = p^(h1/2)"""
    if h1 >= 0:
        raise DivergenceError(f"geometric tail with ratio {p}^({h1}/2) >= 1")
    r = QuadraticSurd.half_power(p, h1)
    one = QuadraticSurd(p, Fraction(1))
    inv = (one - r).inverse()
    return inv, r * inv * inv


class ShellRegion:
    """Finite or cofinite union of disjoint p-adic cells and tails"""

    def __init__(self, p: int, pieces: Iterable[Piece] = ()) -> None:
        require_prime(p)
        self.p = p
        self.pieces: tuple[Piece, ...] = tuple(self._validate(piece) for piece in pieces)
        self._check_disjoint()

    # construction

    def _validate(self, piece: Piece) -> Piece:
        p = self.p
        if piece.k < 0:
            raise ContractError("residue depth must be non-negative")
        if isinstance(piece, Tail):
            if piece.k == 0:
                raise ContractError("tails are built from shells (k >= 1)")
            if piece.d == 0 or piece.n0 == 0 or (piece.n0 > 0) != (piece.d > 0):
                raise ContractError("tail valuations must keep one sign and avoid 0")
        if piece.k == 0:
            return Cell(piece.n, 0, 0) if isinstance(piece, Cell) else piece
        modulus = p**piece.k
        c = piece.c % modulus
        if c % p == 0:
            raise ContractError(f"residue {piece.c} is not a unit mod {p}")
        if isinstance(piece, Cell):
            return Cell(piece.n, c, piece.k)
        return Tail(piece.n0, piece.d, c, piece.k)

    @staticmethod
    def _valuations_meet(a: Piece, b: Piece) -> bool:
        def progression(x: Piece) -> tuple[int, int]:
            return (x.n0, x.d) if isinstance(x, Tail) else (x.n, 0)

        if isinstance(a, Cell) and a.k == 0:
            n0, d = progression(b)
            return d > 0 or n0 >= a.n
        if isinstance(b, Cell) and b.k == 0:
            return ShellRegion._valuations_meet(b, a)
        (m0, e), (n0, d) = progression(a), progression(b)
        if e == 0 and d == 0:
            return m0 == n0
        if e == 0:
            return (m0 - n0) % d == 0 and (m0 - n0) // d >= 0
        if d == 0:
            return (n0 - m0) % e == 0 and (n0 - m0) // e >= 0
        bound = abs(e * d) + abs(n0 - m0) + 1
        return any(
            (m0 + j * e - n0) % d == 0 and (m0 + j * e - n0) // d >= 0
            for j in range(bound)
        )

    def _residues_meet(self, a: Piece, b: Piece) -> bool:
        if a.k == 0 or b.k == 0:
            return True
        depth = min(a.k, b.k)
        return (a.c - b.c) % self.p**depth == 0

    def _check_disjoint(self) -> None:
        # pieces with k >= 1 can only meet when their residues agree mod p^kmin
        balls = [piece for piece in self.pieces if piece.k == 0]
        shells = [piece for piece in self.pieces if piece.k > 0]
        buckets: dict[int, list[Piece]] = defaultdict(list)
        if shells:
            modulus = self.p ** min(piece.k for piece in shells)
            for piece in shells:
                buckets[piece.c % modulus].append(piece)
        pairs = [(a, b) for i, a in enumerate(balls) for b in balls[i + 1 :] + shells]
        for group in buckets.values():
            pairs.extend((a, b) for i, a in enumerate(group) for b in group[i + 1 :])
        for a, b in pairs:
            if self._valuations_meet(a, b) and self._residues_meet(a, b):
                raise ContractError(f"overlapping pieces {a} and {b}")

    @classmethod
    def ball(cls, p: int, n: int = 0) -> ShellRegion:
        return cls(p, [Cell(n, 0, 0)])

    @classmethod
    def residue_class(cls, p: int, c: int, k: int, n: int = 0) -> ShellRegion:
        return cls(p, [Cell(n, c, k)])

    @classmethod
    def empty(cls, p: int) -> ShellRegion:
        return cls(p, [])

    @classmethod
    def standard(cls, p: int, lower: int | None = None, depth: int | None = None) -> ShellRegion:
        """
        Q_p^x (or p^lower Z_p minus 0) cut into shells with unit residues mod p^depth.

        The default depth v_p(4) + 1 fixes |y|', omega and v_p(1-y) (up to the
        support bound of the spherical kernels) on every piece.
        """
        require_prime(p)
        K = depth if depth is not None else v4(p) + 1
        units = [c for c in range(1, p**K) if c % p]
        start = lower if lower is not None else -2
        top = max(start + 1, 2)
        pieces: list[Piece] = []
        for n in range(start, top + 1):
            pieces.extend(Cell(n, c, K) for c in units)
        for n0 in (top + 1, top + 2):
            pieces.extend(Tail(n0, 2, c, K) for c in units)
        if lower is None:
            for n0 in (start - 1, start - 2):
                pieces.extend(Tail(n0, -2, c, K) for c in units)
        return cls(p, pieces)

    def restrict(self, predicate: Callable[[CellInvariants], bool]) -> ShellRegion:
        """Keep the pieces on which predicate holds; it must be constant along tails"""
        kept: list[Piece] = []
        for piece in self.pieces:
            if isinstance(piece, Cell):
                if predicate(cell_invariants(self.p, piece)):
                    kept.append(piece)
                continue
            verdicts = {predicate(cell_invariants(self.p, piece.member(j))) for j in range(3)}
            if len(verdicts) != 1:
                raise KernelMismatchError(f"predicate varies along {piece.label(self.p)}")
            if verdicts.pop():
                kept.append(piece)
        return ShellRegion(self.p, kept)

    def union(self, other: ShellRegion) -> ShellRegion:
        if other.p != self.p:
            raise ContractError("regions over different primes")
        return ShellRegion(self.p, self.pieces + other.pieces)

    def __iter__(self) -> Iterator[Piece]:
        return iter(self.pieces)

    def __len__(self) -> int:
        return len(self.pieces)

    # queries

    def contains(self, y: RationalLike) -> bool:
        q = as_fraction(y)
        if q == 0:
            return False
        v = vp(q, self.p)
        assert isinstance(v, int)
        u = unit_part(self.p, q)
        for piece in self.pieces:
            if piece.k == 0:
                if isinstance(piece, Cell) and v >= piece.n:
                    return True
                continue
            if isinstance(piece, Cell):
                on_shell = v == piece.n
            else:
                on_shell = (v - piece.n0) % piece.d == 0 and (v - piece.n0) // piece.d >= 0
            if on_shell and _unit_residue(u, self.p**piece.k) == piece.c:
                return True
        return False


def region_measure(region: ShellRegion) -> Fraction:
    p = region.p
    total = Fraction(0)
    for piece in region:
        if isinstance(piece, Cell):
            total += piece.measure(p)
            continue
        if piece.d < 0:
            raise DivergenceError(f"measure of {piece.label(p)} diverges")
        ratio = Fraction(p) ** (-piece.d)
        total += piece.member(0).measure(p) / (1 - ratio)
    return total


def _cell_value(
    p: int, inv: CellInvariants, kernel: KernelSpec, monos: tuple[Monomial, ...]
) -> SurdLogNumber:
    total = SurdLogNumber(p)
    for mono in monos:
        twice, log_coeff = _exponents(inv, kernel, mono)
        weight = LogNumber.of(mono.coeff) if log_coeff is None else LogNumber.log(p, mono.coeff * log_coeff)
        total = total + SurdLogNumber.from_surd(QuadraticSurd.half_power(p, twice), weight)
    return total


def _tail_value(
    p: int,
    tail: Tail,
    kernel: KernelSpec,
    provider: ThetaHatProvider | None,
) -> tuple[SurdLogNumber, tuple[Monomial, ...]]:
    invs = [cell_invariants(p, tail.member(j)) for j in range(3)]
    monos = [_cell_monomials(inv, kernel, provider) for inv in invs]
    if monos[0] != monos[1] or monos[1] != monos[2]:
        raise KernelMismatchError(f"kernel varies along {tail.label(p)}")
    total = SurdLogNumber(p)
    for mono in monos[0]:
        exps = [_exponents(inv, kernel, mono) for inv in invs]
        h = [e[0] for e in exps]
        if h[2] - h[1] != h[1] - h[0]:
            raise KernelMismatchError(f"exponent is not affine along {tail.label(p)}")
        s0, s1 = _geometric(p, h[1] - h[0])
        lead = QuadraticSurd.half_power(p, h[0]) * mono.coeff
        if exps[0][1] is None:
            total = total + SurdLogNumber.from_surd(lead * s0, LogNumber.of(1))
            continue
        L = [e[1] for e in exps]
        assert L[0] is not None and L[1] is not None and L[2] is not None
        if L[2] - L[1] != L[1] - L[0]:
            raise KernelMismatchError(f"log weight is not affine along {tail.label(p)}")
        series = s0 * L[0] + s1 * (L[1] - L[0])
        total = total + SurdLogNumber.from_surd(lead * series, LogNumber.log(p))
    return total, monos[0]


def integrate_with_ledger(
    p: int,
    region: ShellRegion,
    kernel: KernelSpec,
    provider: ThetaHatProvider | None = None,
) -> tuple[SurdLogNumber, list[LedgerRow]]:
    """Integral over the region with one ledger row per cell or tail"""
    if region.p != p:
        raise ContractError("region and kernel live over different primes")
    total = SurdLogNumber(p)
    ledger: list[LedgerRow] = []
    for piece in region:
        if isinstance(piece, Cell) and piece.k == 0:
            monos = kernel.monomials if provider is None else None
            if monos is None or any(m.sqrt_power or m.log_form for m in monos) or (
                kernel.alpha or kernel.beta or kernel.gamma
            ):
                raise KernelMismatchError(f"kernel is not constant on {piece.label(p)}")
            value = SurdLogNumber(p, LogNumber.of(sum(m.coeff for m in monos) * piece.measure(p)))
            ledger.append(LedgerRow(piece.label(p), format_fraction(piece.measure(p)), _describe(monos), value.rational))
            total = total + value
            continue
        if isinstance(piece, Cell):
            inv = cell_invariants(p, piece)
            monos = _cell_monomials(inv, kernel, provider)
            value = _cell_value(p, inv, kernel, monos)
            measure = format_fraction(piece.measure(p))
        else:
            value, monos = _tail_value(p, piece, kernel, provider)
            first = piece.member(0).measure(p)
            measure = f"{format_fraction(first)}*{p}^({-piece.d}j)"
        ledger.append(LedgerRow(piece.label(p), measure, _describe(monos), value.rational, value.surd))
        total = total + value
    logger.debug("Shell integral", p=p, kernel=kernel.name, pieces=len(ledger))
    return total, ledger


def integrate(
    p: int,
    region: ShellRegion,
    kernel: KernelSpec,
    provider: ThetaHatProvider | None = None,
) -> LogNumber:
    """Exact integral; the result must lie in Q + Q log p"""
    total, _ = integrate_with_ledger(p, region, kernel, provider)
    if not total.surd.is_zero():
        raise UnsupportedCaseError(f"integral has a sqrt({p}) component {total.surd}")
    return total.rational


def ledger_json(name: str, value: LogNumber, rows: list[LedgerRow]) -> dict[str, Any]:
    return {
        "constant": name,
        "value": value.to_json(),
        "float": value.to_float(),
        "ledger": [row.to_json() for row in rows],
    }


# Kernels of the local constants

TRACE_KERNEL = KernelSpec(alpha=Fraction(-1, 2), beta=Fraction(-1), name="|1-y|^-1 |y|'^-1/2")
LOG_RATIO_KERNEL = KernelSpec(
    alpha=Fraction(-1, 2),
    beta=Fraction(-1),
    monomials=(Monomial(Fraction(1), 0, LOG_RATIO),),
    name="log(|1-y|/|y|') |1-y|^-1 |y|'^-1/2",
)
ABS_KERNEL = KernelSpec(gamma=Fraction(1), name="|u|")
LOG_ABS_KERNEL = KernelSpec(monomials=(Monomial(Fraction(1), 0, LOG_ABS),), name="log|x|")


def square_class_region(p: int, eps: int) -> ShellRegion:
    """Y_eps cut along the standard decomposition"""
    if eps not in (-1, 0, 1):
        raise ContractError("eps must be -1, 0 or 1")
    return ShellRegion.standard(p).restrict(lambda inv: inv.omega == eps)


def _euler_inverse(p: int) -> Fraction:
    return 1 / (1 - Fraction(1, p))


def tr_xi0_nonarch(p: int, theta_hat: ThetaHatProvider) -> LogNumber:
    """Tr xi_0(f_p) = 2 (1 - 1/p)^-1 int_{Y_1} theta_hat(y) |1-y|^-1 |y|'^-1/2 dy"""
    value = integrate(p, square_class_region(p, 1), TRACE_KERNEL, theta_hat)
    return value * (2 * _euler_inverse(p))


def eps_integral(p: int, theta_hat: ThetaHatProvider, eps: int) -> LogNumber:
    """int_{Y_eps} |1-y|^-1 theta_hat(y) |y|'^-1/2 dy for eps in {0, -1}"""
    if eps not in (0, -1):
        raise ContractError("eps must be 0 or -1")
    return integrate(p, square_class_region(p, eps), TRACE_KERNEL, theta_hat)


def log_integral_Y1(p: int, theta_hat: ThetaHatProvider) -> LogNumber:
    """int_{Y_1} log(|1-y|/|y|') |1-y|^-1 theta_hat(y) |y|'^-1/2 dy"""
    return integrate(p, square_class_region(p, 1), LOG_RATIO_KERNEL, theta_hat)


def units_region(p: int, lower: int = 0) -> ShellRegion:
    """p^lower Z_p minus 0, as shells p^n Z_p^x, n >= lower"""
    units = [c for c in range(1, p) if c % p]
    pieces: list[Piece] = []
    if lower <= 0:
        pieces.extend(Cell(n, c, 1) for n in range(lower, 1) for c in units)
        pieces.extend(Tail(1, 1, c, 1) for c in units)
    else:
        pieces.extend(Tail(lower, 1, c, 1) for c in units)
    return ShellRegion(p, pieces)


def one_minus_abs_integral(p: int) -> Fraction:
    """int_{pZ_p} (1 - |u|) du"""
    region = units_region(p, 1)
    inner = integrate(p, region, ABS_KERNEL)
    if not inner.is_constant():
        raise UnsupportedCaseError("unit integral should be rational")
    return region_measure(region) - inner.constant


def unit_integral_oracle(p: int) -> LogNumber:
    """
    Weighted trace at the identity through the unit-integral substitution:
    2 (1-1/p)^-1 (log p/(p-1)) int_{pZ_p} (1 - |u|) du.
    """
    return LogNumber.log(p, 2 * _euler_inverse(p) * one_minus_abs_integral(p) / (p - 1))


def unip_modified_oracle(p: int) -> LogNumber:
    """int_{Z_p} log|x| dx summed shell by shell"""
    return integrate(p, units_region(p, 0), LOG_ABS_KERNEL)
