import random
from fractions import Fraction

import pytest

from app.core.errors import ContractError, DivergenceError, KernelMismatchError
from app.core.exactnum import LogNumber
from app.core.shells import (
    TRACE_KERNEL,
    Cell,
    KernelSpec,
    ShellRegion,
    Tail,
    eps_integral,
    integrate,
    integrate_with_ledger,
    ledger_json,
    log_integral_Y1,
    one_minus_abs_integral,
    region_measure,
    square_class_region,
    tr_xi0_nonarch,
    unip_modified_oracle,
    unit_integral_oracle,
    units_region,
)
from app.models.orbital import spherical_theta_hat

EXACT_CONSTANTS = [
    # p, Tr xi_0, int_{Y_-1}, int_{Y_0}, log integral over Y_1
    (2, 1, Fraction(13, 36), Fraction(1, 3), Fraction(1, 2)),
    (3, 1, Fraction(19, 48), Fraction(1, 4), Fraction(1, 2)),
    (5, 1, Fraction(77, 180), Fraction(1, 6), Fraction(1, 4)),
    (7, 1, Fraction(199, 448), Fraction(1, 8), Fraction(1, 6)),
]


@pytest.mark.parametrize("p, trace, eps_minus, eps_zero, log_y1", EXACT_CONSTANTS)
def test_local_constants_are_exact(p, trace, eps_minus, eps_zero, log_y1):
    """The spherical local constants come out as exact rationals and rational multiples of log p"""
    theta_hat = spherical_theta_hat(p)
    assert tr_xi0_nonarch(p, theta_hat) == LogNumber.of(trace)
    assert eps_integral(p, theta_hat, -1) == LogNumber.of(eps_minus)
    assert eps_integral(p, theta_hat, 0) == LogNumber.of(eps_zero)
    assert log_integral_Y1(p, theta_hat) == LogNumber.log(p, log_y1)


@pytest.mark.parametrize(
    "p, expected",
    [(2, Fraction(4, 3)), (3, Fraction(3, 8)), (5, Fraction(5, 48)), (7, Fraction(7, 144))],
)
def test_unit_integral_oracle(p, expected):
    assert unit_integral_oracle(p) == LogNumber.log(p, expected)
    assert one_minus_abs_integral(p) == Fraction(1, p + 1)


@pytest.mark.parametrize("p", [2, 3, 5, 7])
def test_unip_oracle(p):
    assert unip_modified_oracle(p) == LogNumber.log(p, Fraction(-1, p - 1))


def test_region_measures():
    assert region_measure(ShellRegion.ball(3)) == 1
    assert region_measure(ShellRegion.ball(3, 2)) == Fraction(1, 9)
    assert region_measure(ShellRegion.residue_class(5, 2, 1)) == Fraction(1, 5)
    assert region_measure(units_region(3, 0)) == 1
    assert region_measure(units_region(3, 1)) == Fraction(1, 3)
    assert region_measure(ShellRegion.empty(7)) == 0
    with pytest.raises(DivergenceError):
        region_measure(ShellRegion.standard(3))


def test_square_classes_partition_units():
    """Y_1, Y_0 and Y_-1 cover Z_p^x with total measure 1 - 1/p"""
    for p in (2, 3, 5):
        units = [square_class_region(p, eps).restrict(lambda inv: inv.valuation == 0) for eps in (1, 0, -1)]
        assert sum(region_measure(r) for r in units) == 1 - Fraction(1, p)


def test_contains():
    region = ShellRegion.residue_class(3, 1, 1)
    assert region.contains(4)
    assert not region.contains(2)
    assert not region.contains(0)
    assert ShellRegion.ball(3, 1).contains(9)
    assert not ShellRegion.ball(3, 1).contains(1)
    assert square_class_region(3, 1).contains(Fraction(4, 9))
    assert square_class_region(3, -1).contains(2)
    assert square_class_region(2, 1).contains(17)
    assert square_class_region(2, -1).contains(5)
    assert square_class_region(2, 0).contains(3)
    tail = ShellRegion(3, [Tail(1, 2, 1, 1)])
    assert tail.contains(3) and tail.contains(27 * 4)
    assert not tail.contains(9)


def test_region_validation():
    with pytest.raises(ContractError):
        ShellRegion(3, [Cell(0, 3, 1)])
    with pytest.raises(ContractError):
        ShellRegion(3, [Cell(0), Cell(1, 1, 1)])
    with pytest.raises(ContractError):
        ShellRegion(3, [Tail(0, 1, 1, 1)])
    with pytest.raises(ContractError):
        ShellRegion.ball(3).union(ShellRegion.ball(5))
    with pytest.raises(ContractError):
        square_class_region(3, 2)
    with pytest.raises(ContractError):
        KernelSpec(alpha=Fraction(1, 3))


def test_kernel_mismatch_on_ball():
    with pytest.raises(KernelMismatchError):
        integrate(3, ShellRegion.ball(3), TRACE_KERNEL)


def test_divergent_tail():
    with pytest.raises(DivergenceError):
        integrate(3, ShellRegion.standard(3), KernelSpec())


def test_plain_measure_through_integrate():
    assert integrate(5, units_region(5, 0), KernelSpec()) == LogNumber.of(1)
    assert integrate(5, ShellRegion.ball(5, 1), KernelSpec()) == LogNumber.of(Fraction(1, 5))


def test_eps_rejects_split_class():
    with pytest.raises(ContractError):
        eps_integral(3, spherical_theta_hat(3), 1)


def test_ledger_rows_sum_to_total():
    p = 3
    region = square_class_region(p, -1)
    total, rows = integrate_with_ledger(p, region, TRACE_KERNEL, spherical_theta_hat(p))
    assert len(rows) == len(region)
    assert sum((row.contribution for row in rows), LogNumber()) == total.rational
    report = ledger_json("eps_minus", total.rational, rows)
    assert report["value"] == {"const": "19/48", "log": {}}
    assert report["float"] == pytest.approx(19 / 48)
    assert {"cell", "measure", "kernel", "contribution", "value"} <= set(report["ledger"][0])


def test_measure_matches_sampling():
    """Uniform samples of Z_p land in Y_-1 with frequency equal to its measure"""
    p = 3
    region = square_class_region(p, -1).restrict(lambda inv: inv.valuation >= 0)
    measure = region_measure(region)
    assert measure == Fraction(p, 2 * (p + 1))
    rng = random.Random(17)
    samples = [rng.randrange(1, p**12) for _ in range(20_000)]
    hits = sum(region.contains(y) for y in samples)
    assert abs(hits / len(samples) - float(measure)) < 0.02


@pytest.mark.parametrize("p", [0, 1, 4, -3])
def test_region_requires_prime(p):
    with pytest.raises(ContractError):
        ShellRegion(p, [])
    with pytest.raises(ContractError):
        ShellRegion.standard(p)


def test_overlap_detected_across_depths():
    ShellRegion(3, [Cell(0, 1, 2), Cell(0, 4, 2), Cell(0, 2, 1)])
    with pytest.raises(ContractError):
        ShellRegion(3, [Cell(0, 1, 1), Cell(0, 4, 2)])
    with pytest.raises(ContractError):
        ShellRegion(3, [Tail(1, 2, 1, 1), Cell(3, 4, 2)])
    ShellRegion(3, [Tail(1, 2, 1, 1), Cell(2, 4, 2)])


def test_standard_region_for_a_larger_prime():
    """Unit residues mod p on every shell: pieces stay pairwise disjoint"""
    p = 101
    region = ShellRegion.standard(p)
    assert len(region) % (p - 1) == 0
    units = region.restrict(lambda inv: inv.valuation == 0)
    assert region_measure(units) == 1 - Fraction(1, p)
