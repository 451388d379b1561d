from fractions import Fraction

import pytest

from lphard.errors import BudgetExceeded, LatticeError
from lphard.lattice import (
    annoying_count,
    count_primitive,
    direct_sum,
    dist_pow,
    enumerate_points,
    gram_determinant,
    iter_points,
    lambda1_pow,
    lift_basis,
    scale,
    sparsify,
    sparsify_survival_stats,
    sparsify_with_congruence,
)
from lphard.models import Basis, OracleBudget
from lphard.oracles import coefficient_box_scan

HALF = Fraction(1, 2)


def test_unit_ball_of_z2():
    points = enumerate_points(Basis.identity(2), 3, 1)
    assert len(points) == 5
    assert {pt.vector for pt in points} == {
        (0, 0), (1, 0), (-1, 0), (0, 1), (0, -1),
    }


@pytest.mark.parametrize("p", [1, 2, 3])
def test_enumeration_agrees_with_box_scan(p):
    b = Basis.from_rows([[2, 1], [0, 3]])
    target = (HALF, Fraction(1, 3))
    found = {pt.vector for pt in iter_points(b, p, 3, target)}
    assert found == set(coefficient_box_scan(b, p, 3, target, box=3))


def test_enumeration_yields_each_point_once():
    b = Basis.from_rows([[1, 1, 0], [0, 1, 1], [1, 0, 2]])
    coeffs = [pt.coefficients for pt in iter_points(b, 2, 6)]
    assert len(coeffs) == len(set(coeffs))


def test_lambda1_and_distance():
    assert lambda1_pow(Basis.from_rows([[1, 0], [0, 2]]), 2) == 1
    assert lambda1_pow(Basis.from_rows([[3, 1], [0, 3]]), 2) == 9
    assert dist_pow(Basis.identity(2), (HALF, HALF), 3) == Fraction(1, 4)


def test_primitive_count_up_to_sign():
    # (+-1, 0), (0, +-1), (+-1, +-1)
    assert count_primitive(Basis.identity(2), 2, 2) == 4


def test_rank_cap_refuses():
    budget = OracleBudget(rank_cap=4, coefficient_box=10)
    with pytest.raises(BudgetExceeded):
        list(iter_points(Basis.identity(5), 2, 1, budget=budget))


def test_dependent_columns_rejected():
    with pytest.raises(LatticeError):
        Basis.from_rows([[1, 2], [2, 4]])


def test_constructions():
    b = Basis.identity(2)
    summed = direct_sum(b, scale(Basis.identity(3), 2))
    assert (summed.d, summed.n) == (5, 5)
    assert gram_determinant(summed) == 64
    lifted = lift_basis(b, (HALF, HALF), HALF)
    assert lifted.columns[-1] == (-HALF, -HALF, HALF)
    with pytest.raises(LatticeError):
        scale(b, 0)


def test_annoying_count_matches_lifted_enumeration():
    b, target = Basis.identity(2), (HALF, HALF)
    s_pow, r_pow = Fraction(1, 4), Fraction(1, 2)
    count = annoying_count(b, target, 2, r_pow, s_pow, 1)
    lifted = lift_basis(b, target, HALF)
    total = len(enumerate_points(lifted, 2, r_pow + s_pow))
    assert count == (total - 1) // 2 == 4


def test_sparsified_lattice_satisfies_its_congruence():
    q = 101
    sp = sparsify_with_congruence(Basis.identity(4), q, seed=11)
    for col in sp.coefficients:
        assert sum(a * z for a, z in zip(col, sp.congruence)) % q == 0
    assert gram_determinant(sp.basis) in (1, q * q)


def test_sparsify_is_seeded():
    b = Basis.identity(3)
    assert sparsify(b, 101, 5) == sparsify(b, 101, 5)


def test_sparsify_rejects_composite_moduli():
    with pytest.raises(LatticeError):
        sparsify(Basis.identity(3), 111, 0)


def test_survival_frequency_within_bounds():
    stats = sparsify_survival_stats(Basis.identity(4), 2, 1, 101, 10_000, seed=7)
    assert stats.n_short == 4
    assert stats.within_bounds(3)


def test_survival_when_q_lambda1_is_short():
    stats = sparsify_survival_stats(Basis.identity(2), 2, 101 ** 2, 101, 10, seed=0)
    assert stats.probability == 1.0
    assert not stats.guarantee_applies
