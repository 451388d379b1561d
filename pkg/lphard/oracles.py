# lphard/oracles.py
"""Brute-force ground truth. Oracles answer exactly or refuse with BudgetExceeded."""
import itertools
import logging
from fractions import Fraction
from functools import lru_cache
from typing import Any, Dict, Iterator, List, Optional, Sequence, Tuple

from mpmath import mpf

from .errors import BudgetExceeded
from .lattice import iter_points, norm_pow
from .models import (
    Basis,
    CnfFormula,
    CoverSearchResult,
    Decision,
    OracleBudget,
    SetCoverInstance,
    ShiftedBallQuery,
    as_fraction,
    fractions_of,
    norm_exponent,
    rle,
    to_mpf,
)

log = logging.getLogger(__name__)

COVER_MAX_SETS = 30
COVER_MAX_UNIVERSE = 24


# ---------- SVP / CVP ----------

def svp_decide(b: Basis, p: Any, radius_pow: Any, budget: Optional[OracleBudget] = None) -> Decision:
    """YES iff lambda_1(L) <= r."""
    for pt in iter_points(b, p, radius_pow, None, budget):
        if any(pt.coefficients):
            return Decision.yes
    return Decision.no


def cvp_decide(b: Basis, target: Sequence[Any], p: Any, radius_pow: Any,
               budget: Optional[OracleBudget] = None) -> Decision:
    """YES iff dist_p(target, L) <= r."""
    for _ in iter_points(b, p, radius_pow, target, budget):
        return Decision.yes
    return Decision.no


@lru_cache(maxsize=64)
def short_coefficients(b: Basis, p: Any, radius_pow: Any,
                       budget: Optional[OracleBudget] = None) -> Tuple[Tuple[int, ...], ...]:
    """Coefficient vectors of the nonzero lattice vectors with ||v||_p^p <= radius_pow."""
    return tuple(pt.coefficients for pt in iter_points(b, p, radius_pow, None, budget) if any(pt.coefficients))


def coefficient_box_scan(b: Basis, p: Any, radius_pow: Any, target: Optional[Sequence[Any]] = None,
                         box: int = 3) -> List[Tuple[Fraction, ...]]:
    """Independent enumeration oracle: every coefficient vector in [-box, box]^n, checked directly."""
    p = norm_exponent(p)
    tgt = fractions_of(target) if target is not None else (Fraction(0),) * b.d
    out = []
    for coeffs in itertools.product(range(-box, box + 1), repeat=b.n):
        vec = b.combine(coeffs)
        if rle(norm_pow([v - t for v, t in zip(vec, tgt)], p), radius_pow):
            out.append(vec)
    return out


# ---------- exhaustive point counting ----------

def count_points_exhaustive(query: ShiftedBallQuery, box: Optional[Tuple[int, int]] = None) -> int:
    """Depth-first scan of Z^n (or box^n) with partial-cost pruning."""
    p = query.p
    shifts = query.shifts
    budget = query.radius_pow
    exact = isinstance(p, int) and as_fraction(budget) is not None and all(
        isinstance(t, Fraction) for t in shifts)
    if not exact:
        budget = to_mpf(budget)

    def cost(z: int, t: Any):
        return abs(z - t) ** p if exact else abs(mpf(z) - to_mpf(t)) ** to_mpf(p)

    def candidates(t: Any, rem: Any) -> Iterator[Tuple[int, Any]]:
        if box is not None:
            for z in range(box[0], box[1] + 1):
                c = cost(z, t)
                if c <= rem:
                    yield z, c
            return
        z = 0
        while cost(z, t) <= rem:
            yield z, cost(z, t)
            z += 1
        z = -1
        while cost(z, t) <= rem:
            yield z, cost(z, t)
            z -= 1

    def rec(i: int, rem: Any) -> int:
        if i == len(shifts):
            return 1
        return sum(rec(i + 1, rem - c) for _, c in candidates(shifts[i], rem))

    return rec(0, budget)


# ---------- exact set cover ----------

def _masks(esc: SetCoverInstance) -> List[int]:
    return [sum(1 << (e - 1) for e in s) for s in esc.sets]


def _check_cover_budget(esc: SetCoverInstance) -> None:
    if esc.m > COVER_MAX_SETS and esc.universe_size > COVER_MAX_UNIVERSE:
        raise BudgetExceeded(
            f"cover search needs m <= {COVER_MAX_SETS} or k <= {COVER_MAX_UNIVERSE} "
            f"(got m={esc.m}, k={esc.universe_size})"
        )


def exact_cover_search(esc: SetCoverInstance, size_cap: Optional[int] = None) -> CoverSearchResult:
    """Minimal exact disjoint cover (within size_cap) and the minimal size of any cover."""
    _check_cover_budget(esc)
    masks = _masks(esc)
    full = (1 << esc.universe_size) - 1
    by_low: Dict[int, List[int]] = {}
    for idx, mask in enumerate(masks):
        for e in range(esc.universe_size):
            if mask >> e & 1:
                by_low.setdefault(e, []).append(idx)

    inf = esc.m + 1

    @lru_cache(maxsize=None)
    def exact(rem: int) -> int:
        if not rem:
            return 0
        low = (rem & -rem).bit_length() - 1
        best = inf
        for idx in by_low.get(low, ()):
            if masks[idx] & ~rem == 0:
                best = min(best, 1 + exact(rem & ~masks[idx]))
        return best

    @lru_cache(maxsize=None)
    def cover(rem: int) -> int:
        if not rem:
            return 0
        low = (rem & -rem).bit_length() - 1
        best = inf
        for idx in by_low.get(low, ()):
            best = min(best, 1 + cover(rem & ~masks[idx]))
        return best

    size = exact(full)
    min_cover = cover(full)
    witness = None
    if size < inf and (size_cap is None or size <= size_cap):
        chosen, rem = [], full
        while rem:
            low = (rem & -rem).bit_length() - 1
            for idx in by_low[low]:
                if masks[idx] & ~rem == 0 and 1 + exact(rem & ~masks[idx]) == exact(rem):
                    chosen.append(idx)
                    rem &= ~masks[idx]
                    break
        witness = tuple(sorted(chosen))
    log.debug("cover search m=%d k=%d: exact=%s any=%s", esc.m, esc.universe_size, size, min_cover)
    return CoverSearchResult(
        witness,
        size if size < inf else None,
        min_cover if min_cover < inf else None,
    )


def iter_exact_covers(esc: SetCoverInstance) -> Iterator[Tuple[int, ...]]:
    """Every exact disjoint cover, as sorted tuples of set indices."""
    _check_cover_budget(esc)
    masks = _masks(esc)
    full = (1 << esc.universe_size) - 1

    def rec(rem: int, chosen: Tuple[int, ...]) -> Iterator[Tuple[int, ...]]:
        if not rem:
            yield tuple(sorted(chosen))
            return
        low = (rem & -rem)
        for idx, mask in enumerate(masks):
            if mask & low and mask & ~rem == 0:
                yield from rec(rem & ~mask, chosen + (idx,))

    yield from rec(full, ())


def is_exact_cover(esc: SetCoverInstance, indices: Sequence[int]) -> bool:
    seen = set()
    for idx in indices:
        s = esc.sets[idx]
        if seen & s:
            return False
        seen |= s
    return seen == set(range(1, esc.universe_size + 1))


# ---------- SAT ----------

def satisfying_assignments(f: CnfFormula) -> List[Tuple[bool, ...]]:
    return [a for a in itertools.product((False, True), repeat=f.num_vars) if f.satisfied_by(a)]
