# lphard/reductions.py
"""
The executable reduction chain:

    CNF  ->  exact set cover  ->  (A,G)-CVP with a gadget  ->  sparsified SVP  ->  oracle decision

plus CVP padding with the integer gadget and the randomized l2 -> lp embedding.
"""
import itertools
import logging
import math
from contextlib import contextmanager
from fractions import Fraction
from typing import Any, Dict, Iterator, List, Optional, Sequence, Tuple

import mpmath
import numpy as np
from mpmath import mp, mpf
from sympy import nextprime

from . import config
from .counting import count_bounds, rational_above
from .errors import ParseError, ReductionError, ToolkitError
from .gadgets import (
    desk_gadget_scaling,
    gadget_lattice,
    good_gadget_check,
    integer_gadget_params,
    search_gadget_dimension,
)
from .lattice import MIN_SPARSIFY_PRIME, annoying_count, direct_sum, draw_congruence, iter_points, lift_basis
from .models import (
    AgCvpInstance,
    Basis,
    CnfFormula,
    CvpInstance,
    Decision,
    EmbeddingResult,
    GadgetMode,
    GadgetParams,
    GadgetScaling,
    OracleBudget,
    PipelineParams,
    PipelineResult,
    ReductionOverrides,
    ReductionTranscript,
    SetCoverInstance,
    SparsifiedTrial,
    SvpInstance,
    as_fraction,
    norm_exponent,
    pow_value,
    rle,
    rmul,
    rsum,
    to_mpf,
)
from .oracles import short_coefficients

log = logging.getLogger(__name__)

MAX_LITERAL_OCCURRENCES = 20
GAP_FACTOR = 1000
ROOT_BITS = 20


# ---------- DIMACS ----------

def _finish_clause(literals: List[int], number: int, width: int, lineno: int,
                   dups: List[Tuple[int, int]]) -> Tuple[int, ...]:
    if not literals:
        raise ParseError("empty clause", lineno)
    seen: List[int] = []
    for lit in literals:
        if lit in seen:
            dups.append((number, lit))
        else:
            seen.append(lit)
    if len(seen) > width:
        raise ParseError(f"clause {number} has {len(seen)} literals, width is {width}", lineno)
    return tuple(seen)


def parse_dimacs(text: str, width: int = 3) -> CnfFormula:
    header: Optional[Tuple[int, int]] = None
    header_line = 0
    clauses: List[Tuple[int, ...]] = []
    dups: List[Tuple[int, int]] = []
    current: List[int] = []
    lineno = 0
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line[0] in "c%":
            continue
        if line.startswith("p"):
            parts = line.split()
            if header is not None:
                raise ParseError("second 'p cnf' header", lineno)
            if len(parts) != 4 or parts[1] != "cnf":
                raise ParseError(f"malformed header {line!r}", lineno)
            try:
                header = (int(parts[2]), int(parts[3]))
            except ValueError:
                raise ParseError(f"malformed header {line!r}", lineno)
            if header[0] <= 0 or header[1] <= 0:
                raise ParseError("header needs positive variable and clause counts", lineno)
            header_line = lineno
            continue
        if header is None:
            raise ParseError("clause before the 'p cnf' header", lineno)
        for tok in line.split():
            try:
                lit = int(tok)
            except ValueError:
                raise ParseError(f"bad literal {tok!r}", lineno)
            if lit == 0:
                clauses.append(_finish_clause(current, len(clauses) + 1, width, lineno, dups))
                current = []
            elif abs(lit) > header[0]:
                raise ParseError(f"literal {lit} names an undeclared variable", lineno)
            else:
                current.append(lit)
    if header is None:
        raise ParseError("missing 'p cnf' header")
    if current:
        clauses.append(_finish_clause(current, len(clauses) + 1, width, lineno, dups))
    num_vars, num_clauses = header
    if len(clauses) != num_clauses:
        raise ParseError(f"header declares {num_clauses} clauses, found {len(clauses)}", header_line)
    used = {abs(lit) for clause in clauses for lit in clause}
    for v in range(1, num_vars + 1):
        if v not in used:
            raise ParseError(f"variable {v} occurs in no clause", header_line)
    return CnfFormula(num_vars, tuple(clauses), width, tuple(dups))


def formula_to_dimacs(f: CnfFormula) -> str:
    lines = [f"p cnf {f.num_vars} {len(f.clauses)}"]
    lines += [" ".join(str(lit) for lit in clause) + " 0" for clause in f.clauses]
    return "\n".join(lines) + "\n"


def pad_to_width(f: CnfFormula, num_vars: int) -> CnfFormula:
    """Add fresh variables n+1..num_vars as unit clauses; satisfiability is unchanged."""
    if num_vars < f.num_vars:
        raise ReductionError(f"cannot pad {f.num_vars} variables down to {num_vars}")
    extra = tuple((v,) for v in range(f.num_vars + 1, num_vars + 1))
    return CnfFormula(num_vars, f.clauses + extra, f.width, f.duplicates)


# ---------- SAT -> exact set cover ----------

def sat_to_setcover(f: CnfFormula, eta_prime: Any = Fraction(7, 8)) -> SetCoverInstance:
    """
    Universe = clauses 1..t then variables t+1..t+n. For each literal b of x_i and
    each subset S of the clauses containing b, the set S + {x_i}.
    """
    t, n = len(f.clauses), f.num_vars
    for v in range(1, n + 1):
        for lit in (v, -v):
            r = len(f.occurrences(lit))
            if r > MAX_LITERAL_OCCURRENCES:
                raise ReductionError(
                    f"literal {lit} occurs in {r} clauses (limit {MAX_LITERAL_OCCURRENCES})", stage="sat_to_setcover")
    sets: List[frozenset] = []
    labels: List[str] = []
    seen = set()
    for v in range(1, n + 1):
        for lit in (v, -v):
            occ = f.occurrences(lit)
            for size in range(len(occ) + 1):
                for chosen in itertools.combinations(occ, size):
                    s = frozenset(chosen) | {t + v}
                    if s in seen:
                        continue
                    seen.add(s)
                    sets.append(s)
                    name = f"x{v}" if lit > 0 else f"~x{v}"
                    labels.append(f"{name}:{','.join(map(str, chosen)) or '-'}")
    cap = max(f.occurrence_cap, 1)
    eta_p = as_fraction(eta_prime)
    d = max(n, math.ceil((1 + (1 - eta_p) / (3 * cap)) * n) - 1)
    esc = SetCoverInstance(t + n, tuple(sets), d, Fraction(n, d), tuple(labels))
    log.info("set cover: k=%d m=%d d=%d eta=%s", esc.universe_size, esc.m, d, esc.eta)
    return esc


def greedy_cover_witness(f: CnfFormula, esc: SetCoverInstance, assignment: Sequence[bool]) -> Tuple[int, ...]:
    """Set indices: for x_i, the clauses containing its true literal b_i and none of b_1..b_{i-1}."""
    t = len(f.clauses)
    index = {s: j for j, s in enumerate(esc.sets)}
    covered: set = set()
    chosen = []
    for v in range(1, f.num_vars + 1):
        lit = v if assignment[v - 1] else -v
        fresh = frozenset(c for c in f.occurrences(lit) if c not in covered)
        covered |= fresh
        chosen.append(index[fresh | {t + v}])
    return tuple(chosen)


# ---------- CVP padding ----------

def _pow_matches(value: Any, expected: Any) -> bool:
    exact = as_fraction(value), as_fraction(expected)
    if None not in exact:
        return exact[0] == exact[1]
    a, b = to_mpf(value), to_mpf(expected)
    return abs(a - b) <= abs(b) * mpf(2) ** (16 - mp.prec)


def _ceil_sqrt_times(n: int, count: int) -> int:
    """ceil(sqrt(n) * count), exactly."""
    x = n * count * count
    a = math.isqrt(x)
    return a if a * a == x else a + 1


def pad_cvp_with_integer_gadget(inst: CvpInstance, n_dagger: int) -> AgCvpInstance:
    """Append I_{n'} with 1/2 targets to a CVP instance of the form B = (Phi; I_n), t = (*, 1/2, ..., 1/2)."""
    b, p = inst.basis, inst.p
    n, d = b.n, b.d
    problems = []
    if inst.shape not in (None, "bgs17"):
        problems.append(f"shape tag {inst.shape!r} is not 'bgs17'")
    if d < n:
        problems.append("basis has fewer rows than columns")
    else:
        bottom = b.rows[d - n:]
        if any(bottom[i][j] != (1 if i == j else 0) for i in range(n) for j in range(n)):
            problems.append("bottom n rows of B are not I_n")
        if any(t != Fraction(1, 2) for t in inst.target[d - n:]):
            problems.append("bottom n target entries are not 1/2")
    if not _pow_matches(inst.radius_pow, rmul(n + 1, pow_value(Fraction(1, 2), p))):
        problems.append("r^p is not (n+1)/2^p")
    if n_dagger < 0:
        problems.append("n' must be >= 0")
    if problems:
        raise ReductionError("; ".join(problems), stage="pad_cvp")

    basis = direct_sum(b, Basis.identity(n_dagger)) if n_dagger else b
    target = inst.target + (Fraction(1, 2),) * n_dagger
    total = n + n_dagger
    r_pow = rmul(total + 1, pow_value(Fraction(1, 2), p))
    count = count_bounds(p, total, rsum(r_pow, 1), 0).hi
    big_a = _ceil_sqrt_times(total, count)
    return AgCvpInstance(basis, target, p, r_pow, Fraction(1), Fraction(1), big_a, 2 ** n_dagger,
                         meta={"source": "pad_cvp", "n": n, "n_dagger": n_dagger})


# ---------- exact set cover -> (A,G)-CVP ----------

def _root_above(x_pow: Any, p: Any) -> Fraction:
    """A dyadic r with r^p >= x_pow."""
    step = Fraction(1, 2 ** ROOT_BITS)
    r = rational_above(to_mpf(x_pow) ** (1 / to_mpf(p)), ROOT_BITS)
    while not rle(x_pow, pow_value(r, p)):
        r += step
    return r


def desk_annoying_count(basis: Basis, target: Sequence[Any], scaling: GadgetScaling,
                        budget: Optional[OracleBudget] = None) -> int:
    """
    Exact annoying count of a desk instance with the close vectors taken out.

    With gamma = 1 the z = 1 term is N(L, r, t), which is zero on NO instances,
    so the remainder is the count a NO instance with the same sets would have.
    Kernel vectors of the set matrix land here: every literal that occurs twice
    contributes some.
    """
    p = scaling.p
    s_pow = pow_value(scaling.s, p)
    total = annoying_count(basis, target, p, scaling.r_pow, s_pow, scaling.gamma_pow, budget)
    close = sum(1 for _ in iter_points(basis, p, scaling.r_pow, target, budget))
    return total - close


def setcover_to_agcvp(esc: SetCoverInstance, params: GadgetParams, scaling: GadgetScaling,
                      budget: Optional[OracleBudget] = None) -> AgCvpInstance:
    """
    B = (r* S; I_m) with target (r*, ..., r*, 0, ..., 0), direct-summed with the gadget.
    r* is stored as a dyadic upper bound, which only lengthens vectors that miss or
    double-cover a universe element.

    Lemma mode takes A and G from the certified gadget inequality. Desk mode has no
    such inequality, so A is counted exactly by enumeration (floored at 1) and G is
    the exact count of nearest gadget points.
    """
    p = scaling.p
    d = esc.size_bound
    if not rle(d, scaling.r_pow):
        raise ReductionError(f"r^p = {scaling.r_pow} is below the cover size bound d = {d}", stage="setcover_to_agcvp")
    r_bar = _root_above(scaling.r_star_pow, p)
    k, m = esc.universe_size, esc.m
    zero, one = Fraction(0), Fraction(1)
    cols = []
    for j, s in enumerate(esc.sets):
        universe_part = tuple(r_bar if e in s else zero for e in range(1, k + 1))
        cols.append(universe_part + tuple(one if i == j else zero for i in range(m)))
    cover_basis = Basis(k + m, tuple(cols), checked=False)
    gadget_basis, gadget_target = gadget_lattice(scaling)
    basis = direct_sum(cover_basis, gadget_basis)
    target = (r_bar,) * k + (zero,) * m + gadget_target

    check = good_gadget_check(params, scaling, m=m)
    big_g = int(check.close_count_lo)
    if big_g <= 0:
        raise ReductionError("gadget has no close vectors: G = 0", stage="setcover_to_agcvp")
    if scaling.mode is GadgetMode.desk:
        annoying = desk_annoying_count(basis, target, scaling, budget)
        big_a = max(1, annoying)
    else:
        annoying = None
        big_a = int(mpmath.ceil(check.lhs_hi))
    log.info("(A,G)-CVP: rank %d, A=%d G=%d, r*=%s", basis.n, big_a, big_g, r_bar)
    return AgCvpInstance(basis, target, p, scaling.r_pow, scaling.s, scaling.gamma_pow, big_a, big_g,
                         meta={"source": "setcover", "k": k, "m": m, "d": d, "r_bar": str(r_bar),
                               "gadget_mode": scaling.mode.value, "n_dagger": scaling.n_dagger,
                               "annoying_exact": annoying})


# ---------- (A,G)-CVP -> sparsified SVP ----------

def fresh_seed() -> int:
    return int(np.random.SeedSequence().generate_state(1, np.uint64)[0])


def agcvp_to_svp_instances(inst: AgCvpInstance, seed: int, overrides: ReductionOverrides = ReductionOverrides(),
                           setcover: Optional[SetCoverInstance] = None,
                           prec: Optional[int] = None) -> ReductionTranscript:
    """
    Lift to L' = (B, -t; 0, s) with r'^p = r^p + s^p and draw ell congruences mod q.
    M = 10 sqrt(AG), ell = ceil(100 d log M), q the least prime >= 10 M log M,
    delta = M/(20q) - M^2/(200q^2), threshold = ceil(delta ell).
    """
    if inst.A <= 0 or inst.G <= 0:
        raise ReductionError(f"A and G must be positive, got A={inst.A} G={inst.G}", stage="agcvp_to_svp")
    gap_ok = inst.G >= GAP_FACTOR * inst.A
    if not gap_ok and not overrides.any:
        raise ReductionError(
            f"G = {inst.G} < {GAP_FACTOR} A = {GAP_FACTOR * inst.A}; overrides are needed to run out of guarantee",
            stage="agcvp_to_svp")
    lifted = lift_basis(inst.basis, inst.target, inst.s)
    svp = SvpInstance(lifted, inst.lifted_radius_pow, inst.p)
    with mp.workprec(int(prec or config.PRECISION_BITS)):
        big_m = 10 * mpmath.sqrt(mpf(inst.A) * inst.G)
        log_m = mpmath.log(big_m)
        ell = overrides.ell or int(mpmath.ceil(100 * inst.basis.d * log_m))
        if overrides.q_min is not None:
            if overrides.q_min < MIN_SPARSIFY_PRIME:
                raise ReductionError(f"q_min must be >= {MIN_SPARSIFY_PRIME}", stage="agcvp_to_svp")
            q = int(nextprime(overrides.q_min - 1))
        else:
            q = int(nextprime(int(mpmath.ceil(10 * big_m * log_m)) - 1))
            if q > 20 * big_m * log_m:
                raise ReductionError(f"no prime in [10 M log M, 20 M log M] for M = {big_m}", stage="agcvp_to_svp")
        if overrides.threshold_fraction is not None:
            delta: Any = Fraction(overrides.threshold_fraction)
        else:
            delta = big_m / (20 * q) - big_m ** 2 / (200 * mpf(q) ** 2)
        threshold = int(mpmath.ceil(to_mpf(rmul(delta, ell))))
    guarantee = gap_ok and not overrides.any
    if not guarantee:
        log.warning("reduction runs out of guarantee: %s", overrides.as_dict())
    if not inst.separated:
        log.warning("G = %d <= A = %d: the decision does not separate YES from NO", inst.G, inst.A)
    children = np.random.SeedSequence(seed).spawn(ell)
    trials = tuple(SparsifiedTrial(i, draw_congruence(lifted.n, q, child)) for i, child in enumerate(children))
    log.info("sparsification: rank %d, q=%d, ell=%d, threshold=%d", lifted.n, q, ell, threshold)
    return ReductionTranscript(inst, svp, trials, q, ell, delta, big_m, threshold, guarantee, seed,
                               overrides, setcover)


def decide_transcript(transcript: ReductionTranscript,
                      budget: Optional[OracleBudget] = None) -> Tuple[Decision, int]:
    """YES iff more than delta * ell sparsified lattices keep a vector of length <= r'."""
    svp = transcript.svp
    short = short_coefficients(svp.basis, svp.p, svp.radius_pow, budget)
    q = transcript.q
    hits = 0
    for trial in transcript.trials:
        z = trial.congruence
        if any(sum(a * zi for a, zi in zip(row, z)) % q == 0 for row in short):
            hits += 1
    decision = Decision.no if rle(hits, rmul(transcript.delta, transcript.ell)) else Decision.yes
    log.info("decision %s: %d/%d sparsifications keep a short vector", decision.value, hits, transcript.ell)
    return decision, hits


# ---------- l2 -> lp embedding ----------

def gaussian_abs_moment(p: Any) -> float:
    """E|g|^p for standard normal g."""
    p = float(p)
    return 2 ** (p / 2) * math.gamma((p + 1) / 2) / math.sqrt(math.pi)


def embed_l2_to_lp(b: Basis, p: Any, eps: Any, seed: int, oversample: Any = 1, samples: int = 1000,
                   coefficient_range: int = 5) -> EmbeddingResult:
    """Gaussian map into m = ceil(oversample n / eps^2) coordinates scaled by (m E|g|^p)^{-1/p}."""
    p = norm_exponent(p)
    if to_mpf(p) > 2:
        raise ReductionError(f"l2 -> lp embedding is only available for 1 <= p <= 2, got p = {p}", stage="embed")
    eps_f = float(eps)
    if not 0 < eps_f < 1:
        raise ReductionError(f"eps must lie in (0, 1), got {eps}", stage="embed")
    n, d = b.n, b.d
    m = math.ceil(float(oversample) * n / eps_f ** 2)
    rng = np.random.default_rng(seed)
    normalizer = (m * gaussian_abs_moment(p)) ** (-1 / float(p))
    fmap = rng.standard_normal((m, d)) * normalizer
    exact_map = [[Fraction(float(x)) for x in row] for row in fmap]
    cols = tuple(tuple(sum((a * c for a, c in zip(row, col)), Fraction(0)) for row in exact_map) for col in b.columns)
    image = Basis(m, cols)

    basis_f = np.array([[float(x) for x in col] for col in b.columns]).T
    lo, hi = math.inf, 0.0
    drawn = 0
    while drawn < samples:
        coeffs = rng.integers(-coefficient_range, coefficient_range + 1, size=n)
        if not coeffs.any():
            continue
        x = basis_f @ coeffs
        ratio = np.linalg.norm(fmap @ x, ord=float(p)) / np.linalg.norm(x)
        lo, hi = min(lo, ratio), max(hi, ratio)
        drawn += 1
    log.info("embedding into l%s^%d: distortion in [%.4f, %.4f]", p, m, lo, hi)
    return EmbeddingResult(image, m, normalizer, float(lo), float(hi), samples)


# ---------- pipeline ----------

@contextmanager
def _stage(name: str) -> Iterator[None]:
    try:
        yield
    except ReductionError as exc:
        if exc.stage:
            raise
        raise ReductionError(exc.detail, stage=name) from exc
    except ToolkitError as exc:
        raise ReductionError(f"{type(exc).__name__}: {exc.detail}", stage=name) from exc


def pipeline_sat_to_svp(f: CnfFormula, p: Any, params: PipelineParams = PipelineParams(),
                        seed: Optional[int] = None) -> PipelineResult:
    p = norm_exponent(p)
    if to_mpf(p) <= 2:
        raise ReductionError(f"the integer-gadget path needs p > 2, got p = {p}", stage="pipeline")
    seed = fresh_seed() if seed is None else seed
    with _stage("sat_to_setcover"):
        esc = sat_to_setcover(f, params.eta_prime)
    with _stage("gadget"):
        gadget = integer_gadget_params(p, params.delta_target)
        if params.gadget_mode is GadgetMode.desk:
            scaling = desk_gadget_scaling(gadget, esc.size_bound, params.n_dagger, params.s, eta=esc.eta, m=esc.m)
        else:
            scaling, _ = search_gadget_dimension(gadget, esc.m, esc.size_bound, esc.eta, params.max_doublings)
    with _stage("setcover_to_agcvp"):
        inst = setcover_to_agcvp(esc, gadget, scaling, params.budget)
    with _stage("agcvp_to_svp"):
        transcript = agcvp_to_svp_instances(inst, seed, params.overrides, setcover=esc)
    with _stage("decide"):
        decision, hits = decide_transcript(transcript, params.budget)
    return PipelineResult(f, esc, scaling, transcript, decision, hits)


def stage_summary(result: PipelineResult) -> Dict[str, Any]:
    t = result.transcript
    return {
        "clauses": len(result.formula.clauses),
        "variables": result.formula.num_vars,
        "sets": result.setcover.m,
        "universe": result.setcover.universe_size,
        "n_dagger": result.scaling.n_dagger,
        "rank": result.rank,
        "q": t.q,
        "ell": t.ell,
        "threshold": t.threshold,
        "hits": result.hits,
        "decision": result.decision.value,
        "guarantee": t.guarantee,
        "separated": t.separated,
        "A": t.agcvp.A,
        "G": t.agcvp.G,
    }
