from fractions import Fraction

import pytest

from lphard.errors import BudgetExceeded
from lphard.lattice import lambda1_pow
from lphard.models import Basis, Decision, SetCoverInstance, ShiftedBallQuery
from lphard.oracles import (
    count_points_exhaustive,
    cvp_decide,
    exact_cover_search,
    is_exact_cover,
    iter_exact_covers,
    satisfying_assignments,
    short_coefficients,
    svp_decide,
)
from lphard.reductions import parse_dimacs

from .conftest import SAT_DIMACS

HALF = Fraction(1, 2)


def test_svp_decisions():
    b = Basis.identity(2)
    assert svp_decide(b, 2, 1) is Decision.yes
    assert svp_decide(b, 2, HALF) is Decision.no


def test_svp_decision_flips_at_the_minimum_distance():
    b = Basis.from_rows([[2, 1], [0, 3]])
    shortest = lambda1_pow(b, 2)
    assert svp_decide(b, 2, shortest) is Decision.yes
    assert svp_decide(b, 2, shortest - Fraction(1, 1000)) is Decision.no


def test_cvp_decisions():
    b = Basis.identity(2)
    assert cvp_decide(b, (HALF, HALF), 2, HALF) is Decision.yes
    assert cvp_decide(b, (HALF, HALF), 2, Fraction(1, 4)) is Decision.no


def test_short_coefficients_exclude_zero():
    rows = short_coefficients(Basis.identity(3), 2, 1)
    assert len(rows) == 6
    assert all(any(row) for row in rows)


def test_exhaustive_count_with_a_box():
    query = ShiftedBallQuery(2, 2, 2)
    assert count_points_exhaustive(query) == 9
    assert count_points_exhaustive(query, box=(0, 1)) == 4


def test_exact_cover_search():
    esc = SetCoverInstance(3, ({1, 2}, {3}, {1}, {2, 3}), 2)
    res = exact_cover_search(esc)
    assert res.exact_size == 2
    assert res.min_cover_size == 2
    assert is_exact_cover(esc, res.witness)
    assert sorted(iter_exact_covers(esc)) == [(0, 1), (2, 3)]


def test_exact_cover_respects_the_size_cap():
    esc = SetCoverInstance(3, ({1, 2}, {3}, {1}, {2, 3}), 2)
    assert exact_cover_search(esc, size_cap=1).witness is None


def test_cover_without_an_exact_partition():
    esc = SetCoverInstance(3, ({1, 2}, {2, 3}, {1, 3}, {1}), 1)
    res = exact_cover_search(esc)
    assert res.min_cover_size == 2
    assert res.exact_size == 2
    assert exact_cover_search(esc, size_cap=1).witness is None


def test_cover_search_budget():
    sets = tuple({i % 25 + 1, (i + 1) % 25 + 1} for i in range(31))
    esc = SetCoverInstance(25, sets, 13)
    with pytest.raises(BudgetExceeded):
        exact_cover_search(esc)


def test_satisfying_assignments():
    f = parse_dimacs(SAT_DIMACS)
    assert satisfying_assignments(f) == [(False, True, True), (True, True, True)]
