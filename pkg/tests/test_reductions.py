import json
import math
from fractions import Fraction

import pytest
from sympy import isprime

from lphard.counting import count_exact
from lphard.errors import ParseError, ReductionError
from lphard.formats import transcript_json
from lphard.gadgets import desk_gadget_scaling, integer_gadget_params
from lphard.lattice import annoying_count, enumerate_points, scale
from lphard.models import (
    AgCvpInstance,
    Basis,
    CnfFormula,
    CvpInstance,
    Decision,
    PipelineParams,
    ReductionOverrides,
    SetCoverInstance,
    ShiftedBallQuery,
)
from lphard.oracles import (
    exact_cover_search,
    is_exact_cover,
    satisfying_assignments,
    short_coefficients,
    svp_decide,
)
from lphard.reductions import (
    agcvp_to_svp_instances,
    decide_transcript,
    embed_l2_to_lp,
    formula_to_dimacs,
    gaussian_abs_moment,
    greedy_cover_witness,
    pad_cvp_with_integer_gadget,
    pad_to_width,
    parse_dimacs,
    pipeline_sat_to_svp,
    sat_to_setcover,
    setcover_to_agcvp,
    stage_summary,
)

from .conftest import REPEATED_LITERALS_DIMACS, SAT_DIMACS, UNSAT_DIMACS

HALF = Fraction(1, 2)


# ---------- DIMACS ----------

def test_parse_dimacs():
    f = parse_dimacs(SAT_DIMACS)
    assert f.num_vars == 3
    assert f.clauses == ((1, 2), (-1, 3), (2, -3), (1, 3))
    assert parse_dimacs(formula_to_dimacs(f)) == f


def test_duplicate_literals_are_dropped_and_reported():
    f = parse_dimacs("p cnf 2 1\n1 1 2 0\n")
    assert f.clauses == ((1, 2),)
    assert f.duplicates == ((1, 1),)


def test_final_clause_without_terminator():
    assert parse_dimacs("p cnf 2 1\n1 -2").clauses == ((1, -2),)


@pytest.mark.parametrize("text, line, fragment", [
    ("p cnf 4 1\n1 2 3 4 0\n", 2, "width"),
    ("p cnf 2 1\n1 3 0\n", 2, "undeclared"),
    ("p cnf 2 2\n1 2 0\n", 1, "declares 2 clauses"),
    ("1 2 0\np cnf 2 1\n", 1, "before"),
    ("p cnf 2 1\n1 x 0\n", 2, "bad literal"),
    ("p cnf 2 1\np cnf 2 1\n1 2 0\n", 2, "second"),
    ("p cnf 3 1\n1 2 0\n", 1, "variable 3"),
    ("p cnf 0 1\n", 1, "positive"),
])
def test_parse_errors_name_the_line(text, line, fragment):
    with pytest.raises(ParseError) as exc:
        parse_dimacs(text)
    assert exc.value.line == line
    assert fragment in exc.value.detail


def test_missing_header():
    with pytest.raises(ParseError):
        parse_dimacs("c nothing here\n")


def test_pad_to_width():
    f = pad_to_width(CnfFormula(1, ((1,), (-1,)), 3), 3)
    assert f == parse_dimacs(UNSAT_DIMACS)
    with pytest.raises(ReductionError):
        pad_to_width(f, 2)


# ---------- set cover ----------

def test_setcover_shape():
    f = parse_dimacs(SAT_DIMACS)
    esc = sat_to_setcover(f)
    n = f.num_vars
    cap = f.occurrence_cap
    assert (esc.universe_size, esc.m, esc.size_bound) == (7, 14, 3)
    assert n <= esc.universe_size <= (cap + 1) * n
    assert n <= esc.m <= 2 ** (cap + 1) * n
    assert esc.eta == 1
    assert "x1:1,4" in esc.labels


def test_greedy_witness_for_every_satisfying_assignment():
    f = parse_dimacs(SAT_DIMACS)
    esc = sat_to_setcover(f)
    for assignment in satisfying_assignments(f):
        witness = greedy_cover_witness(f, esc, assignment)
        assert len(witness) == f.num_vars
        assert is_exact_cover(esc, witness)


def test_single_clause_cover():
    f = parse_dimacs("p cnf 3 1\n1 2 3 0\n")
    esc = sat_to_setcover(f)
    assert (esc.universe_size, esc.m, esc.size_bound) == (4, 6, 3)
    assert exact_cover_search(esc, esc.size_bound).witness is not None
    assert is_exact_cover(esc, greedy_cover_witness(f, esc, (True, False, False)))


def test_unsatisfiable_formula_has_no_small_exact_cover():
    esc = sat_to_setcover(parse_dimacs(UNSAT_DIMACS))
    assert esc.m == 7
    assert exact_cover_search(esc, esc.size_bound).witness is None


def test_literal_occurrence_cap():
    f = CnfFormula(1, ((1,),) * 21, 3)
    with pytest.raises(ReductionError) as exc:
        sat_to_setcover(f)
    assert exc.value.stage == "sat_to_setcover"
    assert "literal 1" in exc.value.detail


# ---------- CVP padding ----------

def _half_cvp(n: int) -> CvpInstance:
    return CvpInstance(Basis.identity(n), (HALF,) * n, Fraction(n + 1, 8), 3)


def test_padding_multiplies_close_vectors():
    inst = pad_cvp_with_integer_gadget(_half_cvp(2), 3)
    assert inst.G == 8
    before = len(enumerate_points(Basis.identity(2), 3, Fraction(3, 8), (HALF, HALF)))
    after = len(enumerate_points(inst.basis, 3, inst.radius_pow, inst.target))
    assert (before, after) == (4, 32)


def test_padding_annoying_bound():
    inst = pad_cvp_with_integer_gadget(_half_cvp(4), 8)
    count = count_exact(ShiftedBallQuery(3, 12, Fraction(21, 8))).lo
    assert count == 289
    assert inst.A == math.ceil(math.sqrt(12) * count) == 1002
    assert inst.G == 256


def test_padding_with_no_gadget():
    inst = pad_cvp_with_integer_gadget(_half_cvp(4), 0)
    assert inst.basis == Basis.identity(4)
    assert inst.A == 18


def test_padding_shape_violations():
    bad = CvpInstance(Basis.identity(2), (HALF, Fraction(1, 3)), Fraction(3, 8), 3)
    with pytest.raises(ReductionError) as exc:
        pad_cvp_with_integer_gadget(bad, 2)
    assert "1/2" in exc.value.detail
    assert exc.value.stage == "pad_cvp"


# ---------- set cover -> (A,G)-CVP ----------

@pytest.fixture(scope="module")
def cubic():
    return integer_gadget_params(3)


def test_cover_instance_keeps_the_close_vectors(cubic):
    esc = SetCoverInstance(3, ({1, 2}, {3}, {1}, {2, 3}), 2)
    scaling = desk_gadget_scaling(cubic, d=2, n_dagger=4, m=esc.m)
    inst = setcover_to_agcvp(esc, cubic, scaling)
    assert inst.basis.n == esc.m + 4
    assert inst.G == 16
    close = enumerate_points(inst.basis, 3, inst.radius_pow, inst.target)
    # two exact covers, each with 16 nearest gadget points
    assert len(close) >= 32 >= inst.G


def test_cover_instance_without_covers_stays_below_a(cubic):
    esc = SetCoverInstance(3, ({1, 2}, {2, 3}, {1, 3}, {1}), 1)
    scaling = desk_gadget_scaling(cubic, d=1, n_dagger=4, m=esc.m)
    inst = setcover_to_agcvp(esc, cubic, scaling)
    s_pow = inst.s ** 3
    assert annoying_count(inst.basis, inst.target, 3, inst.radius_pow, s_pow, inst.gamma_pow) <= inst.A


def test_cover_matrix_columns(cubic):
    esc = SetCoverInstance(3, ({1, 2}, {3}, {1}, {2, 3}), 2)
    scaling = desk_gadget_scaling(cubic, d=2, n_dagger=4, m=esc.m)
    inst = setcover_to_agcvp(esc, cubic, scaling)
    r_bar = Fraction(inst.meta["r_bar"])
    assert r_bar ** 3 >= scaling.r_star_pow
    first = inst.basis.columns[0]
    assert first[:3] == (r_bar, r_bar, 0)
    assert first[3:7] == (1, 0, 0, 0)



def test_repeated_literals_leave_a_no_instance_unseparated(cubic, wide_budget):
    f = parse_dimacs(REPEATED_LITERALS_DIMACS)
    esc = sat_to_setcover(f)
    assert (esc.universe_size, esc.m, esc.size_bound) == (6, 14, 2)
    assert not satisfying_assignments(f)
    assert exact_cover_search(esc, esc.size_bound).witness is None
    scaling = desk_gadget_scaling(cubic, esc.size_bound, 4, eta=esc.eta, m=esc.m)
    inst = setcover_to_agcvp(esc, cubic, scaling, wide_budget)
    assert inst.G == 16
    # x1:- - x1:1 - x1:2 + x1:1,2 is a kernel vector of norm^p 4; there are 20 such up to sign
    assert inst.meta["annoying_exact"] >= inst.G
    assert inst.A >= inst.G
    assert not inst.separated


# ---------- (A,G)-CVP -> SVP ----------

def test_small_gap_needs_overrides(cubic):
    esc = SetCoverInstance(3, ({1, 2}, {3}, {1}, {2, 3}), 2)
    inst = setcover_to_agcvp(esc, cubic, desk_gadget_scaling(cubic, d=2, n_dagger=4, m=esc.m))
    with pytest.raises(ReductionError) as exc:
        agcvp_to_svp_instances(inst, seed=1)
    assert exc.value.stage == "agcvp_to_svp"


def test_guaranteed_parameters():
    inst = AgCvpInstance(Basis.identity(2), (HALF, HALF), 3, Fraction(1, 4), Fraction(1), Fraction(1), 1, 1000)
    t = agcvp_to_svp_instances(inst, seed=3)
    big_m = 10 * math.sqrt(1000)
    assert abs(float(t.M) - big_m) < 1e-9
    # ell counts the dimension of the instance before lifting
    assert t.ell == math.ceil(100 * 2 * math.log(big_m))
    assert isprime(t.q)
    assert 10 * big_m * math.log(big_m) <= t.q <= 20 * big_m * math.log(big_m)
    assert t.threshold == math.ceil(float(t.delta) * t.ell)
    assert float(t.delta) >= 1 / (800 * math.log(big_m))
    assert t.guarantee
    assert len(t.trials) == t.ell
    assert t.svp.radius_pow == Fraction(1, 4) + 1


def test_q_min_must_reach_the_sparsification_floor():
    inst = pad_cvp_with_integer_gadget(_half_cvp(2), 2)
    with pytest.raises(ReductionError):
        agcvp_to_svp_instances(inst, seed=0, overrides=ReductionOverrides(ell=5, q_min=50))


def test_transcript_is_seeded():
    inst = pad_cvp_with_integer_gadget(_half_cvp(2), 2)
    overrides = ReductionOverrides(ell=10, q_min=101, threshold_fraction=Fraction(1, 5))
    a = agcvp_to_svp_instances(inst, 42, overrides)
    b = agcvp_to_svp_instances(inst, 42, overrides)
    c = agcvp_to_svp_instances(inst, 43, overrides)
    assert a.trials == b.trials
    assert a.trials != c.trials
    assert not a.guarantee
    assert a.threshold == 2


def test_replayed_instances_agree_with_the_congruence_test():
    inst = pad_cvp_with_integer_gadget(_half_cvp(2), 2)
    overrides = ReductionOverrides(ell=10, q_min=101, threshold_fraction=Fraction(1, 5))
    t = agcvp_to_svp_instances(inst, 7, overrides)
    svp = t.svp
    short = short_coefficients(svp.basis, svp.p, svp.radius_pow)
    assert short
    for i, trial in enumerate(t.trials):
        survives = any(sum(a * z for a, z in zip(row, trial.congruence)) % t.q == 0 for row in short)
        replay = t.svp_instance(i)
        assert (svp_decide(replay.basis, replay.p, replay.radius_pow) is Decision.yes) == survives
    decision, hits = decide_transcript(t)
    assert decision is (Decision.yes if hits > 2 else Decision.no)


# ---------- pipeline ----------

def test_pipeline_rejects_p_up_to_two():
    with pytest.raises(ReductionError) as exc:
        pipeline_sat_to_svp(parse_dimacs(SAT_DIMACS), 2, seed=0)
    assert exc.value.stage == "pipeline"


def test_pipeline_tags_the_failing_stage():
    with pytest.raises(ReductionError) as exc:
        pipeline_sat_to_svp(CnfFormula(1, ((1,),) * 21, 3), 3, seed=0)
    assert exc.value.stage == "sat_to_setcover"


def test_pipeline_rank_cap_refusal(desk_overrides):
    params = PipelineParams(overrides=desk_overrides)
    with pytest.raises(ReductionError) as exc:
        pipeline_sat_to_svp(parse_dimacs(SAT_DIMACS), 3, params, seed=0)
    assert exc.value.stage == "setcover_to_agcvp"


def test_pipeline_no_instance(desk_overrides):
    f = parse_dimacs(UNSAT_DIMACS)
    result = pipeline_sat_to_svp(f, 3, PipelineParams(overrides=desk_overrides), seed=5)
    assert result.decision is Decision.no
    assert result.hits == 0
    assert result.rank == result.setcover.m + 4 + 1
    summary = stage_summary(result)
    assert summary["decision"] == "NO"
    assert summary["threshold"] == 3
    assert summary["separated"] is True
    assert summary["A"] == 1
    assert result.transcript.agcvp.meta["annoying_exact"] == 0
    again = pipeline_sat_to_svp(f, 3, PipelineParams(overrides=desk_overrides), seed=5)
    assert json.dumps(transcript_json(result.transcript), sort_keys=True) == \
        json.dumps(transcript_json(again.transcript), sort_keys=True)


@pytest.mark.slow
def test_pipeline_decides_both_formulas(desk_overrides, wide_budget):
    params = PipelineParams(overrides=desk_overrides, budget=wide_budget)
    sat, unsat = parse_dimacs(SAT_DIMACS), parse_dimacs(UNSAT_DIMACS)
    yes = sum(pipeline_sat_to_svp(sat, 3, params, seed).decision is Decision.yes for seed in range(20))
    no = sum(pipeline_sat_to_svp(unsat, 3, params, seed).decision is Decision.no for seed in range(20))
    assert yes >= 18
    assert no >= 18


@pytest.mark.slow
def test_pipeline_flags_an_unseparated_no_instance(desk_overrides, wide_budget):
    params = PipelineParams(overrides=desk_overrides, budget=wide_budget)
    result = pipeline_sat_to_svp(parse_dimacs(REPEATED_LITERALS_DIMACS), 3, params, seed=0)
    summary = stage_summary(result)
    assert summary["separated"] is False
    assert summary["A"] >= summary["G"]
    assert transcript_json(result.transcript)["parameters"]["separated"] is False


# ---------- l2 -> lp embedding ----------

def test_gaussian_moments():
    assert abs(gaussian_abs_moment(2) - 1) < 1e-12
    assert abs(gaussian_abs_moment(1) - math.sqrt(2 / math.pi)) < 1e-12


@pytest.mark.parametrize("p", [1, 2])
def test_embedding_distortion(p):
    b = Basis.from_rows([[1, 1, 0], [0, 1, 0], [0, 0, 2]])
    res = embed_l2_to_lp(b, p, Fraction(1, 4), seed=2, oversample=4, samples=200)
    assert res.m == 192
    assert res.basis.n == 3
    assert 0.5 <= res.distortion_lo <= res.distortion_hi <= 1.5


def test_embedding_commutes_with_scaling():
    b = Basis.identity(2)
    plain = embed_l2_to_lp(b, 2, Fraction(1, 2), seed=6, samples=10)
    doubled = embed_l2_to_lp(scale(b, 2), 2, Fraction(1, 2), seed=6, samples=10)
    assert doubled.basis.columns == tuple(tuple(2 * x for x in col) for col in plain.basis.columns)


def test_embedding_refusals():
    with pytest.raises(ReductionError) as exc:
        embed_l2_to_lp(Basis.identity(2), 3, Fraction(1, 2), seed=0)
    assert exc.value.stage == "embed"
    with pytest.raises(ReductionError):
        embed_l2_to_lp(Basis.identity(2), 2, 1, seed=0)
