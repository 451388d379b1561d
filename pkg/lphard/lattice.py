# lphard/lattice.py
"""
Small-rank lattice primitives: enumeration, lambda_1, dist, primitive and
annoying-vector counts, direct sums, scaling and random sparsification.

Radii are passed as p-th powers (radius_pow). Membership in a ball is always
decided exactly on integer data; floating point only steers the search tree.
"""
import logging
import math
import time
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache, reduce
from typing import Any, Iterator, List, Optional, Sequence, Tuple

import mpmath
import numpy as np
from mpmath import mp, mpf
from sympy import Matrix, Rational, isprime

from . import config
from .errors import BudgetExceeded, LatticeError
from .models import (
    Basis,
    LatticePoint,
    OracleBudget,
    Sparsification,
    SurvivalStats,
    as_fraction,
    fractions_of,
    norm_exponent,
    pow_value,
    rle,
    rmul,
    rsum,
    to_mpf,
)

log = logging.getLogger(__name__)

MIN_SPARSIFY_PRIME = 101
_NODE_CHECK = 4096


def norm_pow(vec: Sequence[Any], p: Any):
    """||vec||_p^p, exact for rational entries and integer p."""
    return rsum(*[pow_value(x, p) for x in vec]) if vec else Fraction(0)


def _root(x: Any, p: Any) -> mpf:
    if isinstance(p, int):
        return mpmath.root(to_mpf(x), p)
    return to_mpf(x) ** (1 / to_mpf(p))


# ---------- exact Gram-Schmidt data ----------

def _lcm(values) -> int:
    return reduce(lambda a, b: a * b // math.gcd(a, b), values, 1)


@dataclass(frozen=True)
class _Scaled:
    """Basis scaled by D to integers, with exact Gram-Schmidt data turned into floats."""

    scale: int
    cols: Tuple[Tuple[int, ...], ...]
    bstar: Tuple[Tuple[Fraction, ...], ...]
    norms: Tuple[Fraction, ...]
    mu: Tuple[Tuple[float, ...], ...]  # mu[j][i] for i < j
    norms_f: Tuple[float, ...]


def _dot(u: Sequence[Any], v: Sequence[Any]):
    return sum((a * b for a, b in zip(u, v)), Fraction(0))


@lru_cache(maxsize=256)
def _scaled(b: Basis, extra_den: int = 1) -> _Scaled:
    dens = [x.denominator for col in b.columns for x in col]
    scale = _lcm(dens + [extra_den])
    cols = tuple(tuple(int(x * scale) for x in col) for col in b.columns)
    bstar: List[Tuple[Fraction, ...]] = []
    norms: List[Fraction] = []
    mu = []
    for j, col in enumerate(cols):
        v = [Fraction(x) for x in col]
        row = []
        for i in range(j):
            m = _dot(col, bstar[i]) / norms[i]
            row.append(float(m))
            if m:
                v = [a - m * c for a, c in zip(v, bstar[i])]
        bstar.append(tuple(v))
        norms.append(_dot(v, v))
        mu.append(tuple(row))
    return _Scaled(scale, cols, tuple(bstar), tuple(norms), tuple(mu), tuple(float(x) for x in norms))


# ---------- enumeration ----------

def _budget(budget: Optional[OracleBudget]) -> OracleBudget:
    return budget or OracleBudget.from_settings()


def _within(total: Any, bound_num: Any, p: Any, exact_bound: Optional[Fraction], scale_pow: Any) -> bool:
    if exact_bound is not None and isinstance(p, int):
        return total * exact_bound.denominator <= scale_pow * exact_bound.numerator
    return to_mpf(total) <= to_mpf(scale_pow) * to_mpf(bound_num)


def iter_points(b: Basis, p: Any, radius_pow: Any, target: Optional[Sequence[Any]] = None,
                budget: Optional[OracleBudget] = None) -> Iterator[LatticePoint]:
    """Lazily yield every lattice point y with ||y - target||_p^p <= radius_pow, each once."""
    p = norm_exponent(p)
    budget = _budget(budget)
    n, d = b.n, b.d
    if n > budget.rank_cap:
        raise BudgetExceeded(f"rank {n} above the enumeration cap {budget.rank_cap}")
    tgt = fractions_of(target) if target is not None else (Fraction(0),) * d
    if len(tgt) != d:
        raise LatticeError(f"target has {len(tgt)} entries, basis dimension is {d}")
    if to_mpf(radius_pow) < 0:
        return
    sc = _scaled(b, _lcm(x.denominator for x in tgt))
    scale = sc.scale
    t_int = tuple(int(x * scale) for x in tgt)
    exact_bound = as_fraction(radius_pow)
    if isinstance(p, int):
        scale_pow = scale ** p
    else:
        scale_pow = to_mpf(scale) ** to_mpf(p)

    # l2 search radius from ||x||_2 <= d^{max(0, 1/2 - 1/p)} ||x||_p
    pf = float(p)
    rho2 = float(scale) ** 2 * float(to_mpf(radius_pow)) ** (2.0 / pf) * d ** max(0.0, 1.0 - 2.0 / pf)
    rho2 = rho2 * (1 + 1e-9) + 1e-9
    centers = [float(_dot(t_int, bs) / nm) for bs, nm in zip(sc.bstar, sc.norms)]
    perp = _dot(t_int, t_int) - sum((_dot(t_int, bs) ** 2 / nm for bs, nm in zip(sc.bstar, sc.norms)), Fraction(0))
    rem0 = rho2 - float(perp)
    tol = 1e-9 * rho2 + 1e-9
    if rem0 < -tol:
        return

    deadline = time.monotonic() + budget.seconds if budget.seconds else None
    coeffs = [0] * n
    nodes = [0]

    def leaf() -> Optional[LatticePoint]:
        vec = list(-x for x in t_int)
        for a, col in zip(coeffs, sc.cols):
            if a:
                for k, x in enumerate(col):
                    if x:
                        vec[k] += a * x
        if isinstance(p, int):
            inside = _within(sum(abs(x) ** p for x in vec), radius_pow, p, exact_bound, scale_pow)
        else:
            with mp.workprec(config.PRECISION_BITS):
                total = mpmath.fsum(abs(mpf(x)) ** p for x in vec)
                inside = _within(total, radius_pow, p, exact_bound, scale_pow)
        if not inside:
            return None
        vector = tuple(Fraction(x + t, scale) for x, t in zip(vec, t_int))
        return LatticePoint(tuple(coeffs), vector)

    def rec(i: int, rem: float) -> Iterator[LatticePoint]:
        nodes[0] += 1
        if nodes[0] % _NODE_CHECK == 0 and deadline is not None and time.monotonic() > deadline:
            raise BudgetExceeded(f"enumeration exceeded the {budget.seconds}s time cap")
        if i < 0:
            pt = leaf()
            if pt is not None:
                yield pt
            return
        ctr = centers[i] - sum(coeffs[j] * sc.mu[j][i] for j in range(i + 1, n))
        width = math.sqrt(max(rem, 0.0) / sc.norms_f[i])
        pad = 1e-6 * (1 + abs(ctr) + width)
        lo = math.ceil(ctr - width - pad)
        hi = math.floor(ctr + width + pad)
        if hi - lo > budget.coefficient_box:
            raise BudgetExceeded(f"coefficient interval of width {hi - lo} above the box {budget.coefficient_box}")
        for a in range(lo, hi + 1):
            diff = a - ctr
            new_rem = rem - diff * diff * sc.norms_f[i]
            if new_rem < -tol:
                continue
            coeffs[i] = a
            yield from rec(i - 1, new_rem)
        coeffs[i] = 0

    yield from rec(n - 1, rem0)
    log.debug("enumeration rank=%d dim=%d visited %d nodes", n, d, nodes[0])


def enumerate_points(b: Basis, p: Any, radius_pow: Any, target: Optional[Sequence[Any]] = None,
                     budget: Optional[OracleBudget] = None) -> List[LatticePoint]:
    return list(iter_points(b, p, radius_pow, target, budget))


# ---------- minima ----------

def lambda1_pow(b: Basis, p: Any, budget: Optional[OracleBudget] = None):
    """lambda_1^p, exact; the search radius starts at the shortest basis column."""
    p = norm_exponent(p)
    upper = min((norm_pow(col, p) for col in b.columns), key=to_mpf)
    best = upper
    for pt in iter_points(b, p, upper, None, budget):
        if any(pt.coefficients):
            length = norm_pow(pt.vector, p)
            if not rle(best, length):
                best = length
    return best


def lambda1(b: Basis, p: Any, budget: Optional[OracleBudget] = None) -> mpf:
    return _root(lambda1_pow(b, p, budget), norm_exponent(p))


def _babai(b: Basis, target: Sequence[Fraction]) -> Tuple[Fraction, ...]:
    """Nearest-plane rounding; returns the lattice vector."""
    sc = _scaled(b, _lcm(x.denominator for x in target))
    scale = sc.scale
    residual = [x * scale for x in target]
    for i in reversed(range(b.n)):
        k = round(_dot(residual, sc.bstar[i]) / sc.norms[i])
        if k:
            residual = [r - k * c for r, c in zip(residual, sc.cols[i])]
    return tuple(t - r / scale for t, r in zip(target, residual))


def dist_pow(b: Basis, target: Sequence[Any], p: Any, budget: Optional[OracleBudget] = None):
    """dist_p(target, L)^p, exact; the search radius starts at the nearest-plane distance."""
    p = norm_exponent(p)
    tgt = fractions_of(target)
    if len(tgt) != b.d:
        raise LatticeError("target dimension does not match the basis")
    y = _babai(b, tgt)
    best = norm_pow([a - t for a, t in zip(y, tgt)], p)
    for pt in iter_points(b, p, best, tgt, budget):
        length = norm_pow([a - t for a, t in zip(pt.vector, tgt)], p)
        if not rle(best, length):
            best = length
    return best


def dist(b: Basis, target: Sequence[Any], p: Any, budget: Optional[OracleBudget] = None) -> mpf:
    return _root(dist_pow(b, target, p, budget), norm_exponent(p))


def _primitive(coeffs: Sequence[int]) -> bool:
    return any(coeffs) and math.gcd(*coeffs) == 1


def count_primitive(b: Basis, p: Any, radius_pow: Any, budget: Optional[OracleBudget] = None) -> int:
    """xi_p(L, r): primitive vectors of length <= r, counted up to sign."""
    return sum(1 for pt in iter_points(b, p, radius_pow, None, budget) if _primitive(pt.coefficients)) // 2


def annoying_count(b: Basis, target: Sequence[Any], p: Any, r_pow: Any, s_pow: Any, gamma_pow: Any,
                   budget: Optional[OracleBudget] = None) -> int:
    """sum_{z >= 0, z^p s^p <= gamma^p (r^p + s^p)} N_p(L, gamma^p r^p - (z^p - gamma^p) s^p, z t) - 1."""
    p = norm_exponent(p)
    tgt = fractions_of(target)
    limit = rmul(gamma_pow, rsum(r_pow, s_pow))
    base = rmul(gamma_pow, r_pow)
    total = 0
    z = 0
    while rle(rmul(pow_value(z, p), s_pow), limit):
        radicand = rsum(base, -rmul(rsum(pow_value(z, p), -to_exact(gamma_pow)), s_pow))
        if rle(0, radicand):
            total += sum(1 for _ in iter_points(b, p, radicand, [z * t for t in tgt], budget))
        z += 1
    return total - 1


def to_exact(x: Any):
    frac = as_fraction(x)
    return frac if frac is not None else to_mpf(x)


# ---------- constructions ----------

def direct_sum(b1: Basis, b2: Basis) -> Basis:
    """Block-diagonal (B1 0; 0 B2)."""
    zeros1, zeros2 = (Fraction(0),) * b1.d, (Fraction(0),) * b2.d
    cols = [col + zeros2 for col in b1.columns] + [zeros1 + col for col in b2.columns]
    return Basis(b1.d + b2.d, tuple(cols), checked=False)


def scale(b: Basis, alpha: Any) -> Basis:
    a = as_fraction(alpha)
    if a is None:
        raise LatticeError("scaling factor must be rational")
    if a == 0:
        raise LatticeError("scaling by zero does not give a lattice")
    return Basis(b.d, tuple(tuple(a * x for x in col) for col in b.columns), checked=False)


def lift_basis(b: Basis, target: Sequence[Any], s: Any) -> Basis:
    """(B, -t; 0, s)."""
    tgt = fractions_of(target)
    sf = as_fraction(s)
    if sf is None or sf == 0:
        raise LatticeError("lift height s must be a nonzero rational")
    cols = [col + (Fraction(0),) for col in b.columns]
    cols.append(tuple(-t for t in tgt) + (sf,))
    return Basis(b.d + 1, tuple(cols), checked=False)


def gram_determinant(b: Basis) -> Fraction:
    gram = Matrix([[Rational(*_pair(_dot(u, v))) for v in b.columns] for u in b.columns])
    det = gram.det()
    return Fraction(int(det.p), int(det.q))


def _pair(x: Fraction) -> Tuple[int, int]:
    return x.numerator, x.denominator


# ---------- sparsification ----------

def _check_prime(q: int) -> None:
    if q < MIN_SPARSIFY_PRIME:
        raise LatticeError(f"sparsification prime must be >= {MIN_SPARSIFY_PRIME}, got {q}")
    if not isprime(q):
        raise LatticeError(f"sparsification modulus {q} is not prime")


def _uniform_mod(rng: np.random.Generator, q: int, size: int) -> Tuple[int, ...]:
    if q <= 2 ** 62:
        return tuple(int(x) for x in rng.integers(0, q, size=size))
    nbytes = (q.bit_length() + 7) // 8
    mask = (1 << q.bit_length()) - 1
    out = []
    while len(out) < size:
        x = int.from_bytes(rng.bytes(nbytes), "little") & mask
        if x < q:
            out.append(x)
    return tuple(out)


def draw_congruence(n: int, q: int, seed: Any) -> Tuple[int, ...]:
    """Uniform z in Z_q^n from numpy's default_rng(seed); seed may be an int or a SeedSequence."""
    return _uniform_mod(np.random.default_rng(seed), q, n)


def sublattice_coefficients(z: Sequence[int], q: int) -> Tuple[Tuple[int, ...], ...]:
    """Columns of U spanning {a in Z^n : <z, a> = 0 mod q}."""
    n = len(z)
    zr = [x % q for x in z]
    nonzero = [i for i, x in enumerate(zr) if x]
    if not nonzero:
        return tuple(tuple(int(i == j) for i in range(n)) for j in range(n))
    i0 = nonzero[0]
    inv = pow(zr[i0], -1, q)
    cols = []
    for j in range(n):
        col = [0] * n
        if j == i0:
            col[i0] = q
        else:
            col[j] = 1
            col[i0] = -((zr[j] * inv) % q)
        cols.append(tuple(col))
    return tuple(cols)


def sublattice_from_congruence(b: Basis, z: Sequence[int], q: int) -> Sparsification:
    u = sublattice_coefficients(z, q)
    basis = Basis(b.d, tuple(b.combine(col) for col in u), checked=False)
    return Sparsification(basis, tuple(int(x) for x in z), q, u)


def sparsify_with_congruence(b: Basis, q: int, seed: Any) -> Sparsification:
    _check_prime(q)
    z = draw_congruence(b.n, q, seed)
    return sublattice_from_congruence(b, z, q)


def sparsify(b: Basis, q: int, seed: Any) -> Basis:
    """Basis of {v in L : <z, coeffs(v)> = 0 mod q} for a seeded uniform z."""
    return sparsify_with_congruence(b, q, seed).basis


def _survives(short: np.ndarray, z: Sequence[int], q: int) -> bool:
    if not len(short):
        return False
    if q < 2 ** 31 and short.dtype != object:
        return bool(np.any((short @ np.asarray(z, dtype=np.int64)) % q == 0))
    return any(sum(int(a) * zi for a, zi in zip(row, z)) % q == 0 for row in short)


def sparsify_survival_stats(b: Basis, p: Any, radius_pow: Any, q: int, trials: int, seed: int,
                            budget: Optional[OracleBudget] = None) -> SurvivalStats:
    """Empirical Pr[lambda_1(L') <= r] over seeded sparsifications, next to N/q - N^2/q^2 and N/q."""
    _check_prime(q)
    p = norm_exponent(p)
    violations = []
    lam = lambda1_pow(b, p, budget)
    if rle(rmul(pow_value(q, p), lam), radius_pow):
        # q v survives every congruence
        violations.append("r >= q lambda_1: the sparsified lattice always keeps a short vector")
        return SurvivalStats(trials, trials, 1.0, 0, 1.0, 1.0, 0.0, False, tuple(violations))

    short = []
    seen = set()
    for pt in iter_points(b, p, radius_pow, None, budget):
        if _primitive(pt.coefficients):
            key = max(pt.coefficients, tuple(-a for a in pt.coefficients))
            if key not in seen:
                seen.add(key)
                short.append(key)
    n_short = len(short)
    if n_short > q / (20 * math.log(q)):
        violations.append(f"N = {n_short} exceeds q/(20 ln q) = {q / (20 * math.log(q)):.3f}")
    big = max((abs(a) for row in short for a in row), default=0) * b.n * q >= 2 ** 62
    matrix = np.array(short, dtype=object if big else np.int64).reshape(n_short, b.n)

    hits = 0
    for child in np.random.SeedSequence(seed).spawn(trials):
        if _survives(matrix, draw_congruence(b.n, q, child), q):
            hits += 1
    upper = n_short / q
    lower = n_short / q - n_short ** 2 / q ** 2
    sigma = math.sqrt(upper * (1 - upper) / trials) if trials else 0.0
    prob = hits / trials if trials else 0.0
    log.info("sparsification survival: %d/%d (N=%d, q=%d)", hits, trials, n_short, q)
    return SurvivalStats(hits, trials, prob, n_short, lower, upper, sigma, not violations, tuple(violations))
