# lphard/counting.py
"""
Counting integer points in shifted l_p balls, N_p(Z^n, r, t).

Costs |z - t|^p live on an integer axis (after scaling) and the count is a
truncated product of per-coordinate cost polynomials. Everything is Python
big integers; interval counting rounds costs outward on a grid.
"""
import logging
import math
from collections import Counter, defaultdict
from fractions import Fraction
from functools import reduce
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import mpmath
from mpmath import mp, mpf

from . import config
from .errors import CountingError, DomainError, InternalError
from .models import (
    CountBounds,
    RealApprox,
    SandwichReport,
    ShiftedBallQuery,
    as_fraction,
    norm_exponent,
    to_mpf,
)
from .theta import (
    _shift_list,
    count_lower_bound_theta,
    mu_vec,
    theta,
    theta_vec,
)

log = logging.getLogger(__name__)

Poly = Dict[int, int]

# groups of identical coordinates at least this large are raised with the power-series recurrence
POWER_RECURRENCE_MIN = 16


# ---------- polynomial helpers ----------

def _convolve(a: Poly, b: Poly, budget: int) -> Poly:
    out: Dict[int, int] = defaultdict(int)
    b_items = sorted(b.items())
    for ea, va in a.items():
        for eb, vb in b_items:
            e = ea + eb
            if e > budget:
                break
            out[e] += va * vb
    return dict(out)


def _power_recurrence(poly: Poly, c: int, budget: int) -> Poly:
    """P(x)^c truncated at x^budget via k a_0 R_k = sum_j ((c+1) j - k) a_j R_{k-j}."""
    e0 = min(poly)
    shift = e0 * c
    if shift > budget:
        return {}
    lim = budget - shift
    a = {e - e0: v for e, v in poly.items() if e - e0 <= lim}
    a0 = a[0]
    terms = sorted((j, aj) for j, aj in a.items() if j > 0)
    out = [0] * (lim + 1)
    out[0] = a0 ** c
    for k in range(1, lim + 1):
        acc = 0
        for j, aj in terms:
            if j > k:
                break
            prev = out[k - j]
            if prev:
                acc += ((c + 1) * j - k) * aj * prev
        if acc:
            q, rem = divmod(acc, k * a0)
            if rem:
                raise InternalError("power recurrence produced a non-integer coefficient")
            out[k] = q
    return {k + shift: v for k, v in enumerate(out) if v}


def _poly_power(poly: Poly, c: int, budget: int) -> Poly:
    if not poly or c == 0:
        return {0: 1} if c == 0 else {}
    if c >= POWER_RECURRENCE_MIN:
        return _power_recurrence(poly, c, budget)
    out: Poly = {0: 1}
    for _ in range(c):
        out = _convolve(out, poly, budget)
        if not out:
            break
    return out


def _count_groups(polys: Iterable[Tuple[Poly, int]], budget: int) -> int:
    """Sum of coefficients up to budget of prod poly^c."""
    if budget < 0:
        return 0
    total: Poly = {0: 1}
    for poly, c in polys:
        total = _convolve(total, _poly_power(poly, c, budget), budget)
        if not total:
            return 0
    return sum(total.values())


def _check_cells(budget: int) -> None:
    if budget > config.MAX_CELLS:
        raise CountingError(
            f"cost axis needs {budget} cells, above the configured limit {config.MAX_CELLS}"
        )


# ---------- exact counting ----------

def _exact_costs(p: int, t: Fraction, scale_l: int, budget: int) -> Poly:
    """Scaled costs |z L - t L|^p <= budget of one coordinate."""
    u0 = int(t * scale_l)
    poly: Dict[int, int] = defaultdict(int)
    z = 0
    while True:
        cost = abs(z * scale_l - u0) ** p
        if cost > budget:
            break
        poly[cost] += 1
        z += 1
    z = 1
    while True:
        cost = (z * scale_l + u0) ** p
        if cost > budget:
            break
        poly[cost] += 1
        z += 1
    return dict(poly)


def count_exact(query: ShiftedBallQuery) -> CountBounds:
    """Exact N_p(Z^n, r, t) for integer p, rational shifts and rational r^p."""
    p = query.p
    if not isinstance(p, int):
        raise CountingError(f"count_exact needs an integer p (got {p}); use count_interval")
    radius_pow = as_fraction(query.radius_pow)
    if radius_pow is None:
        raise CountingError("count_exact needs a rational r^p; use count_interval")
    shifts = query.shifts
    for t in shifts:
        if not isinstance(t, Fraction):
            raise CountingError(f"count_exact needs rational shifts (got {t}); use count_interval")
        if t.denominator > config.MAX_SHIFT_DENOMINATOR:
            raise CountingError(
                f"shift denominator {t.denominator} above {config.MAX_SHIFT_DENOMINATOR}; use count_interval"
            )
    scale_l = reduce(lambda a, b: a * b // math.gcd(a, b), (t.denominator for t in shifts), 1)
    budget = math.floor(radius_pow * scale_l ** p)
    _check_cells(budget)
    groups = Counter(shifts)
    count = _count_groups(((_exact_costs(p, t, scale_l, budget), c) for t, c in groups.items()), budget)
    log.debug("count_exact p=%d n=%d budget=%d -> %d", p, query.n, budget, count)
    return CountBounds(count, count)


# ---------- interval counting ----------

def _interval_costs(p: Any, t: Any, res: mpf, eps: mpf, budget_lo: int, budget_hi: int
                    ) -> Tuple[Poly, Poly]:
    pm, tm = to_mpf(p), to_mpf(t)
    lo_poly: Dict[int, int] = defaultdict(int)
    hi_poly: Dict[int, int] = defaultdict(int)

    def visit(dist: mpf) -> bool:
        c = dist ** pm
        slack = eps * (1 + c)
        hi_cost = max(0, int(mpmath.floor((c - slack) / res)))
        if hi_cost > budget_hi:
            return False
        hi_poly[hi_cost] += 1
        lo_cost = int(mpmath.ceil((c + slack) / res))
        if lo_cost <= budget_lo:
            lo_poly[lo_cost] += 1
        return True

    z = 0
    while visit(abs(z - tm)):
        z += 1
    z = 1
    while visit(z + tm):
        z += 1
    return dict(lo_poly), dict(hi_poly)


def count_interval(query: ShiftedBallQuery, resolution: Any, prec: Optional[int] = None) -> CountBounds:
    """Certified [lo, hi] with costs rounded outward on a grid of the given resolution."""
    prec = int(prec or config.PRECISION_BITS)
    with mp.workprec(prec):
        res = to_mpf(resolution)
        if res <= 0:
            raise DomainError("resolution must be positive")
        big_r = to_mpf(query.radius_pow)
        eps = mpf(2) ** (-(prec - 16))
        slack = eps * (1 + big_r)
        budget_lo = int(mpmath.floor((big_r - slack) / res))
        budget_hi = int(mpmath.floor((big_r + slack) / res))
        _check_cells(budget_hi)
        lo_groups, hi_groups = [], []
        for t, c in Counter(query.shifts).items():
            lo_poly, hi_poly = _interval_costs(query.p, t, res, eps, budget_lo, budget_hi)
            lo_groups.append((lo_poly, c))
            hi_groups.append((hi_poly, c))
        lo = _count_groups(lo_groups, budget_lo) if all(pl for pl, _ in lo_groups) else 0
        hi = _count_groups(hi_groups, budget_hi)
        return CountBounds(lo, hi)


# ---------- directed rationals ----------

def rational_below(x: Any, bits: int = 64) -> Fraction:
    frac = as_fraction(x) if not isinstance(x, RealApprox) else None
    if frac is not None:
        return frac
    v = x.lo if isinstance(x, RealApprox) else to_mpf(x)
    return Fraction(int(mpmath.floor(v * mpf(2) ** bits)), 2 ** bits)


def rational_above(x: Any, bits: int = 64) -> Fraction:
    frac = as_fraction(x) if not isinstance(x, RealApprox) else None
    if frac is not None:
        return frac
    v = x.hi if isinstance(x, RealApprox) else to_mpf(x)
    return Fraction(int(mpmath.ceil(v * mpf(2) ** bits)), 2 ** bits)


def _exact_capable(p: Any, shifts: Sequence[Any]) -> bool:
    return isinstance(p, int) and all(
        isinstance(t, Fraction) and t.denominator <= config.MAX_SHIFT_DENOMINATOR for t in shifts
    )


def count_bounds(p: Any, n: int, radius_pow: Any, shift: Any = 0, resolution: Any = None) -> CountBounds:
    """Certified bounds for any radius kind (rational, mpf or RealApprox); exact whenever possible."""
    p = norm_exponent(p)
    shifts = tuple(_shift_list(n, shift))
    lo_r, hi_r = rational_below(radius_pow), rational_above(radius_pow)
    if lo_r < 0:
        lo_r = Fraction(0)
    if hi_r < 0:
        return CountBounds(0, 0)
    if _exact_capable(p, shifts):
        lo = count_exact(ShiftedBallQuery(p, n, lo_r, shifts)).lo
        hi = lo if hi_r == lo_r else count_exact(ShiftedBallQuery(p, n, hi_r, shifts)).hi
        return CountBounds(lo, hi)
    if resolution is None:
        resolution = Fraction(max(1, math.ceil(hi_r)), 1 << 20)
    lo = count_interval(ShiftedBallQuery(p, n, lo_r, shifts), resolution).lo
    hi = count_interval(ShiftedBallQuery(p, n, hi_r, shifts), resolution).hi
    return CountBounds(lo, hi)


# ---------- growth constant & density ----------

def growth_constant(p: Any, n: int, c: Any) -> mpf:
    """count_exact(Z^n, c n^{1/p}, 0)^{1/n}."""
    p = norm_exponent(p)
    cf = as_fraction(c)
    if cf is None:
        cf = rational_below(c)
    if cf <= 0:
        raise DomainError("c must be positive")
    if not isinstance(p, int):
        raise CountingError("growth_constant uses the exact counter and needs an integer p")
    count = count_exact(ShiftedBallQuery(p, n, cf ** p * n, 0)).lo
    return mpf(count) ** (mpf(1) / n)


_GOLDEN = (mpmath.sqrt(5) - 1) / 2


def _golden_min(f: Callable[[mpf], mpf], a: mpf, b: mpf, tol: mpf) -> mpf:
    """Golden-section search for the minimizer of a unimodal f on [a, b]."""
    g = mpf(_GOLDEN)
    c = b - g * (b - a)
    d = a + g * (b - a)
    fc, fd = f(c), f(d)
    while abs(b - a) > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - g * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + g * (b - a)
            fd = f(d)
    return (a + b) / 2


def _bracket_min(f: Callable[[mpf], mpf], x0: mpf, step: mpf, limit: int = 80) -> Tuple[mpf, mpf]:
    a, fa = x0, f(x0)
    b, fb = x0 + step, f(x0 + step)
    if fb > fa:
        c, fc = x0 - step, f(x0 - step)
        if fc >= fa:
            return c, b
        step = -step
        b, fb = c, fc
    for _ in range(limit):
        step *= 2
        c, fc = b + step, f(b + step)
        if fc >= fb:
            return min(a, c), max(a, c)
        a, fa, b, fb = b, fb, c, fc
    raise InternalError("could not bracket the minimum")


def _max_theta_over_shift(p: Any, tau: mpf, grid: int, prec: int) -> Tuple[Any, RealApprox]:
    """Grid scan of Theta_p(tau; t) over t in [0, 1/2] plus golden refinement around the best cell."""
    values = [(Fraction(i, 2 * grid), theta(p, tau, Fraction(i, 2 * grid), prec)) for i in range(grid + 1)]
    i_best = max(range(len(values)), key=lambda i: values[i][1].value)
    best_t, best = values[i_best]
    if 0 < i_best < grid:
        a, b = to_mpf(values[i_best - 1][0]), to_mpf(values[i_best + 1][0])
        t_ref = _golden_min(lambda t: -theta(p, tau, t, prec).value, a, b, mpf(2) ** (-30))
        refined = theta(p, tau, t_ref, prec)
        if refined.value > best.value:
            best_t, best = t_ref, refined
    return best_t, best


def density_upper_bound(p: Any, n: int, r: Any = None, radius_pow: Any = None,
                        grid: int = 32, prec: Optional[int] = None) -> RealApprox:
    """min_tau exp(tau r^p) (max_t Theta_p(tau; t))^n, an upper bound for D_p(Z^n, r)."""
    p = norm_exponent(p)
    prec = int(prec or config.PRECISION_BITS)
    if radius_pow is None:
        if r is None or to_mpf(r) <= 0:
            raise DomainError("radius must be positive")
        radius_pow = to_mpf(r) ** to_mpf(p)
    with mp.workprec(prec):
        big_r = to_mpf(radius_pow)
        if big_r <= 0:
            raise DomainError("radius must be positive")

        def objective(x: mpf) -> mpf:
            tau = mpmath.exp(x)
            return tau * big_r + n * mpmath.log(_max_theta_over_shift(p, tau, grid, prec)[1].value)

        a, b = _bracket_min(objective, mpf(0), mpf(1))
        x = _golden_min(objective, a, b, mpf(2) ** (-30))
        tau = mpmath.exp(x)
        _, best = _max_theta_over_shift(p, tau, grid, prec)
        return RealApprox(tau * big_r).exp() * best ** n


# ---------- theta sandwich ----------

DEFAULT_DELTA_FACTORS = (Fraction(1, 16), Fraction(1, 8), Fraction(1, 4), Fraction(1, 2), Fraction(1), Fraction(2))


def theta_sandwich(p: Any, tau: Any, n: int, shift: Any = 0,
                   delta_factors: Sequence[Any] = DEFAULT_DELTA_FACTORS,
                   prec: Optional[int] = None) -> SandwichReport:
    """Exact count at r^p = mu(tau; t) against the H lower bound (best over delta = c/sqrt n) and exp(tau mu) Theta^n."""
    p = norm_exponent(p)
    prec = int(prec or config.PRECISION_BITS)
    shifts = tuple(_shift_list(n, shift))
    if not _exact_capable(p, shifts):
        raise CountingError("theta_sandwich needs an integer p and rational shifts")
    with mp.workprec(prec):
        tau_m = to_mpf(tau)
        m = mu_vec(p, tau_m, shifts, prec)
        scale_l = reduce(lambda a, b: a * b // math.gcd(a, b), (t.denominator for t in shifts), 1)
        scale = scale_l ** p
        cell_lo = int(mpmath.floor(m.lo * scale))
        cell_hi = int(mpmath.floor(m.hi * scale))
        if cell_lo != cell_hi:
            raise CountingError("mu lies on a cost level within its error; raise the precision")
        radius_pow = Fraction(cell_lo, scale)
        exact = count_exact(ShiftedBallQuery(p, n, radius_pow, shifts)).lo
        upper = (m * tau_m).exp() * theta_vec(p, tau_m, shifts, prec)
        best, best_delta = None, None
        for c in delta_factors:
            delta = to_mpf(c) / mpmath.sqrt(n)
            lower = count_lower_bound_theta(p, n, tau_m, delta, list(shifts), prec)
            if best is None or lower.value > best.value:
                best, best_delta = lower, delta
        log_gap = mpmath.log(upper.value / exact)
        return SandwichReport(p, tau_m, n, radius_pow, exact, best, upper, best_delta, log_gap)


def fit_gap_constant(reports: Iterable[SandwichReport]) -> mpf:
    """Smallest c with log(upper/exact) <= c sqrt(n) over the reports."""
    return max(r.log_gap / mpmath.sqrt(r.n) for r in reports)
