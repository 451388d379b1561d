from fractions import Fraction

import pytest

from lphard.models import OracleBudget, ReductionOverrides

# (x1 v x2)(~x1 v x3)(x2 v ~x3)(x1 v x3): satisfied by (F,T,T) and (T,T,T)
SAT_DIMACS = """c small satisfiable instance
p cnf 3 4
1 2 0
-1 3 0
2 -3 0
1 3 0
"""

# (x1)(~x1) padded with unit clauses for x2, x3
UNSAT_DIMACS = """p cnf 3 4
1 0
-1 0
2 0
3 0
"""


# every clause over x1, x2: unsatisfiable, each literal occurs twice
REPEATED_LITERALS_DIMACS = """p cnf 2 4
1 2 0
1 -2 0
-1 2 0
-1 -2 0
"""


@pytest.fixture
def desk_overrides() -> ReductionOverrides:
    return ReductionOverrides(ell=60, q_min=101, threshold_fraction=Fraction(1, 20), allow_small_gap=True)


@pytest.fixture
def wide_budget() -> OracleBudget:
    return OracleBudget(rank_cap=24, coefficient_box=10 ** 6)


@pytest.fixture
def write_file(tmp_path):
    def write(name: str, text: str) -> str:
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return str(path)

    return write
