# lphard/theta.py
"""
Shifted theta function Theta_p(tau; t) = sum_z exp(-tau |z - t|^p), its moments,
the H functional and the hardness constants W_p, C_p, p_0.

All evaluations run at a working precision in bits (default from config) and
return RealApprox values whose err covers series truncation and rounding.
"""
import logging
from collections import Counter
from fractions import Fraction
from functools import lru_cache
from multiprocessing import Pool
from typing import Any, Callable, List, Optional, Sequence, Tuple

import mpmath
from mpmath import mp, mpf

from . import config
from .errors import DomainError, InternalError
from .models import (
    HardnessConstants,
    RealApprox,
    ThetaBound,
    ThetaPoint,
    as_fraction,
    canonical_shift,
    norm_exponent,
    pow_value,
    rsum,
    to_mpf,
)

log = logging.getLogger(__name__)

STATIONARY_TOL_BITS = 60
P0_BRACKET = (Fraction(2), Fraction(5, 2))
_MAX_TERMS = 10 ** 6


def _prec(prec: Optional[int]) -> int:
    return int(prec or config.PRECISION_BITS)


def _positive_tau(tau: Any) -> mpf:
    value = to_mpf(tau)
    if value <= 0:
        raise DomainError(f"tau must be positive, got {tau}")
    return value


def _shift_list(n: Optional[int], shift_vec: Any) -> List[Any]:
    if isinstance(shift_vec, (list, tuple)):
        if n is not None and len(shift_vec) != n:
            raise DomainError(f"shift vector has {len(shift_vec)} entries, expected {n}")
        return [canonical_shift(t) for t in shift_vec]
    if n is None:
        raise DomainError("dimension required for a scalar shift")
    return [canonical_shift(shift_vec)] * n


# ---------- series ----------

def _tail_bound(p: mpf, tau: mpf, a: mpf, power: mpf) -> Optional[mpf]:
    """Bound for sum_{i>=0} f(a+i), f(x) = x^power exp(-tau x^p); None while the ratio bound is >= 1."""
    rho = mpmath.exp(-tau * p * a ** (p - 1)) * (1 + 1 / a) ** power
    if rho >= 1:
        return None
    return a ** power * mpmath.exp(-tau * a ** p) / (1 - rho)


@lru_cache(maxsize=8192)
def _moment_sums(p: Any, tau: mpf, t: Any, kmax: int, prec: int) -> Tuple[RealApprox, ...]:
    """S_k = sum_z |z-t|^{kp} exp(-tau |z-t|^p) for k = 0..kmax, t in [0, 1/2]."""
    with mp.workprec(prec):
        pm, tm = to_mpf(p), to_mpf(t)
        sums = [mpf(0)] * (kmax + 1)

        def add(dist: mpf) -> None:
            dp = dist ** pm
            w = mpmath.exp(-tau * dp)
            term = w
            for k in range(kmax + 1):
                sums[k] += term
                term *= dp

        add(tm)
        threshold = mpf(2) ** (-(prec + 8))
        j = 1
        while True:
            add(j - tm)
            add(j + tm)
            a = j + 1 - tm
            tails = [_tail_bound(pm, tau, a, k * pm) for k in range(kmax + 1)]
            if all(tl is not None and tl <= threshold * sums[k] for k, tl in enumerate(tails)):
                break
            j += 1
            if j > _MAX_TERMS:
                raise InternalError(f"theta series did not converge (p={p}, tau={tau})")
        log.debug("theta series p=%s tau=%s t=%s truncated after %d terms", p, mpmath.nstr(tau, 8), t, 2 * j + 1)
        out = []
        for k in range(kmax + 1):
            rounding = sums[k] * mp.eps * (4 * j + 8)
            out.append(RealApprox(sums[k], 2 * tails[k] + rounding))
        return tuple(out)


def theta_moments(p: Any, tau: Any, shift: Any = 0, prec: Optional[int] = None
                  ) -> Tuple[RealApprox, RealApprox, RealApprox]:
    """(Theta, mu, V) at one shift."""
    p = norm_exponent(p)
    prec = _prec(prec)
    with mp.workprec(prec):
        pt = ThetaPoint(tau, shift)
        s0, s1, s2 = _moment_sums(p, to_mpf(pt.tau), pt.shift, 2, prec)
        m = s1 / s0
        v = s2 / s0 - m * m
        return s0, m, v


def theta(p: Any, tau: Any, shift: Any = 0, prec: Optional[int] = None) -> RealApprox:
    p = norm_exponent(p)
    prec = _prec(prec)
    with mp.workprec(prec):
        pt = ThetaPoint(tau, shift)
        return _moment_sums(p, to_mpf(pt.tau), pt.shift, 0, prec)[0]


def mu(p: Any, tau: Any, shift: Any = 0, prec: Optional[int] = None) -> RealApprox:
    """E|X|^p under D_p(tau; t); equals -d/dtau log Theta."""
    p = norm_exponent(p)
    prec = _prec(prec)
    with mp.workprec(prec):
        pt = ThetaPoint(tau, shift)
        s0, s1 = _moment_sums(p, to_mpf(pt.tau), pt.shift, 1, prec)
        return s1 / s0


def variance_v(p: Any, tau: Any, shift: Any = 0, prec: Optional[int] = None) -> RealApprox:
    """E|X|^{2p} - mu^2; equals d^2/dtau^2 log Theta."""
    return theta_moments(p, tau, shift, prec)[2]


def theta_vec(p: Any, tau: Any, shift_vec: Sequence[Any], prec: Optional[int] = None) -> RealApprox:
    p = norm_exponent(p)
    prec = _prec(prec)
    with mp.workprec(prec):
        tau_m = _positive_tau(tau)
        out = RealApprox.exact(1)
        for t, k in Counter(_shift_list(None, list(shift_vec))).items():
            out = out * _moment_sums(p, tau_m, t, 0, prec)[0] ** k
        return out


def mu_vec(p: Any, tau: Any, shift_vec: Sequence[Any], prec: Optional[int] = None) -> RealApprox:
    p = norm_exponent(p)
    prec = _prec(prec)
    with mp.workprec(prec):
        tau_m = _positive_tau(tau)
        out = RealApprox.exact(0)
        for t, k in Counter(_shift_list(None, list(shift_vec))).items():
            s0, s1 = _moment_sums(p, tau_m, t, 1, prec)
            out = out + (s1 / s0) * k
        return out


def h_func(p: Any, tau: Any, delta: Any, shift_vec: Sequence[Any], prec: Optional[int] = None) -> RealApprox:
    """Theta(tau+d) - exp(-d mu(tau)) Theta(tau) - exp(d mu(tau+2d)) Theta(tau+2d)."""
    prec = _prec(prec)
    with mp.workprec(prec):
        tau_m = _positive_tau(tau)
        d = to_mpf(delta)
        if d <= 0:
            raise DomainError(f"delta must be positive, got {delta}")
        th0 = theta_vec(p, tau_m, shift_vec, prec)
        th1 = theta_vec(p, tau_m + d, shift_vec, prec)
        th2 = theta_vec(p, tau_m + 2 * d, shift_vec, prec)
        m0 = mu_vec(p, tau_m, shift_vec, prec)
        m2 = mu_vec(p, tau_m + 2 * d, shift_vec, prec)
        return th1 - (-(m0 * d)).exp() * th0 - (m2 * d).exp() * th2


def theta_shift_derivative(p: Any, tau: Any, shift: Any, prec: Optional[int] = None) -> RealApprox:
    """d/dt Theta_p(tau; t) for t in [0, 1/2]."""
    p = norm_exponent(p)
    prec = _prec(prec)
    with mp.workprec(prec):
        tau_m = _positive_tau(tau)
        tm = to_mpf(shift)
        if not 0 <= tm <= mpf(1) / 2:
            raise DomainError(f"shift must lie in [0, 1/2], got {shift}")
        pm = to_mpf(p)
        scale = tau_m * pm

        def term(dist: mpf) -> mpf:
            return scale * dist ** (pm - 1) * mpmath.exp(-tau_m * dist ** pm)

        total = -term(tm) if tm > 0 else mpf(0)
        threshold = mpf(2) ** (-(prec + 8)) * theta(p, tau_m, shift, prec).value
        j = 1
        while True:
            total += term(j - tm) - term(j + tm)
            tail = _tail_bound(pm, tau_m, j + 1 - tm, pm - 1)
            if tail is not None and scale * tail <= threshold:
                break
            j += 1
            if j > _MAX_TERMS:
                raise InternalError("shift derivative series did not converge")
        return RealApprox(total, 2 * scale * tail + abs(total) * mp.eps * (4 * j + 8))


# ---------- one-dimensional stationarity solver ----------

def _solve_stationary(moments: Callable[[mpf], Tuple[mpf, mpf]], target: mpf,
                      tol: mpf) -> Tuple[mpf, mpf]:
    """
    Solve mu(tau) = target for a strictly decreasing mu with mu' = -V.
    Bisection keeps a bracket; Newton steps are taken when they land inside it.
    Returns (tau, last step size).
    """
    lo = hi = mpf(1)
    m, _ = moments(lo)
    if m > target:
        for _ in range(2048):
            hi *= 2
            if moments(hi)[0] <= target:
                break
        else:
            raise InternalError("could not bracket the stationary point from above")
    else:
        for _ in range(2048):
            lo /= 2
            if moments(lo)[0] > target:
                break
        else:
            raise InternalError("could not bracket the stationary point from below")

    tau = (lo + hi) / 2
    step = hi - lo
    for _ in range(1000):
        m, v = moments(tau)
        if m > target:
            lo = tau
        else:
            hi = tau
        cand = tau + (m - target) / v if v > 0 else None
        new = cand if cand is not None and lo < cand < hi else (lo + hi) / 2
        step = abs(new - tau)
        tau = new
        if step < tol or hi - lo < tol:
            break
    else:
        raise InternalError("stationary point iteration did not converge")
    log.debug("stationary point tau=%s (last step %s)", mpmath.nstr(tau, 12), mpmath.nstr(step, 3))
    return tau, step


def _vector_moments(p: Any, shifts: Sequence[Any], prec: int) -> Callable[[mpf], Tuple[mpf, mpf]]:
    groups = Counter(shifts)

    def moments(tau: mpf) -> Tuple[mpf, mpf]:
        m_total, v_total = mpf(0), mpf(0)
        for t, k in groups.items():
            s0, s1, s2 = _moment_sums(p, tau, t, 2, prec)
            m = s1.value / s0.value
            m_total += k * m
            v_total += k * (s2.value / s0.value - m * m)
        return m_total, v_total

    return moments


# ---------- hardness constants ----------

def w_p(p: Any, prec: Optional[int] = None) -> HardnessConstants:
    """W_p = min_tau exp(tau/2^p) Theta_p(tau; 0) and C_p = 1/(1 - log2 W_p) when W_p < 2."""
    p = norm_exponent(p)
    prec = _prec(prec)
    with mp.workprec(prec):
        target = mpf(2) ** (-to_mpf(p))
        tol = mpf(2) ** (-STATIONARY_TOL_BITS)
        tau, step = _solve_stationary(_vector_moments(p, [Fraction(0)], prec), target, tol)
        th, _, v = theta_moments(p, tau, 0, prec)
        w = (RealApprox(tau * target)).exp() * th
        # value at tau overestimates the minimum by at most ~ W V step^2 / 2
        w = RealApprox(w.value, w.err + w.value * v.value * step * step)
        c_p = None
        if w.hi < 2:
            c_p = 1 / (1 - w.log2())
        else:
            log.info("W_p >= 2 at p=%s: C_p undefined", p)
        return HardnessConstants(p, w, RealApprox(tau, max(step, tol)), c_p)


def find_p0(prec: Optional[int] = None, tol_bits: int = 44) -> RealApprox:
    """Unique p in [2, 5/2] with W_p = 2."""
    prec = _prec(prec)
    with mp.workprec(prec):
        lo, hi = (to_mpf(x) for x in P0_BRACKET)
        g_lo = w_p(lo, prec).w_p.value - 2
        g_hi = w_p(hi, prec).w_p.value - 2
        if not (g_lo > 0 > g_hi):
            raise InternalError(f"no sign change of W_p - 2 on [{lo}, {hi}]")
        tol = mpf(2) ** (-tol_bits)
        while hi - lo > tol:
            mid = (lo + hi) / 2
            if w_p(mid, prec).w_p.value - 2 > 0:
                lo = mid
            else:
                hi = mid
        return RealApprox((lo + hi) / 2, (hi - lo) / 2)


def cp_simple_bound(p: Any) -> mpf:
    """1/(1 - 2^-p (p + log2(3e))), an upper bound for C_p valid for p >= 3."""
    pm = to_mpf(norm_exponent(p))
    if pm < 3:
        raise DomainError(f"the simple C_p bound needs p >= 3, got {p}")
    return 1 / (1 - mpf(2) ** (-pm) * (pm + mpmath.log(3 * mpmath.e, 2)))


def _init_worker(prec: int) -> None:
    mp.prec = prec


def _sweep_one(args: Tuple[Any, int]) -> HardnessConstants:
    p, prec = args
    return w_p(p, prec)


def sweep_constants(ps: Sequence[Any], workers: int = 1, prec: Optional[int] = None) -> List[HardnessConstants]:
    """W_p/C_p over a grid of p. Output order follows ps."""
    prec = _prec(prec)
    jobs = [(p, prec) for p in ps]
    if workers <= 1 or len(jobs) < 2:
        return [_sweep_one(job) for job in jobs]
    with Pool(processes=workers, initializer=_init_worker, initargs=(prec,)) as pool:
        return pool.map(_sweep_one, jobs)


# ---------- point-count bounds ----------

def _limit_multiplicity(shifts: Sequence[Any]) -> int:
    half = mpf(1) / 2
    out = 1
    for t in shifts:
        if to_mpf(t) == half:
            out *= 2
    return out


def count_upper_bound_theta(p: Any, n: int, r: Any = None, shift_vec: Any = 0,
                            radius_pow: Any = None, prec: Optional[int] = None) -> ThetaBound:
    """N_p(Z^n, r, t) <= min_tau exp(tau r^p) Theta_p(tau; t)."""
    p = norm_exponent(p)
    prec = _prec(prec)
    shifts = _shift_list(n, shift_vec)
    if radius_pow is None:
        if r is None or to_mpf(r) <= 0:
            raise DomainError("radius must be positive")
        radius_pow = pow_value(r, p)
    with mp.workprec(prec):
        inf_mu = rsum(*[pow_value(t, p) for t in shifts])
        exact_r, exact_inf = as_fraction(radius_pow), as_fraction(inf_mu)
        if exact_r is not None and exact_inf is not None:
            cmp = (exact_r > exact_inf) - (exact_r < exact_inf)
        else:
            gap = to_mpf(radius_pow) - to_mpf(inf_mu)
            slack = mpf(2) ** (-(prec - 16)) * max(1, abs(to_mpf(radius_pow)))
            cmp = 0 if abs(gap) <= slack else (1 if gap > 0 else -1)
        if cmp < 0:
            log.warning("r^p below inf mu: no lattice point in the ball, returning the limiting bound 0")
            return ThetaBound(RealApprox.exact(0), None, True)
        if cmp == 0:
            mult = _limit_multiplicity(shifts)
            log.warning("r^p equals inf mu: returning the limiting bound %d", mult)
            return ThetaBound(RealApprox.exact(mult), None, True)
        big_r = to_mpf(radius_pow)
        tol = mpf(2) ** (-STATIONARY_TOL_BITS)
        tau, _ = _solve_stationary(_vector_moments(p, shifts, prec), big_r, tol)
        bound = RealApprox(tau * big_r).exp() * theta_vec(p, tau, shifts, prec)
        return ThetaBound(bound, tau, False)


def count_lower_bound_theta(p: Any, n: int, tau: Any, delta: Any, shift_vec: Any = 0,
                            prec: Optional[int] = None) -> RealApprox:
    """exp(tau mu(tau+2 delta)) H(tau, delta); lower-bounds N_p(Z^n, mu(tau)^{1/p}, t). May be <= 0."""
    prec = _prec(prec)
    shifts = _shift_list(n, shift_vec)
    with mp.workprec(prec):
        tau_m = _positive_tau(tau)
        h = h_func(p, tau_m, delta, shifts, prec)
        m2 = mu_vec(p, tau_m + 2 * to_mpf(delta), shifts, prec)
        return (m2 * tau_m).exp() * h


# ---------- local-minimum evidence ----------

def find_theta_gain(p: Any, tau: Any = 1, grid: int = 1024,
                    prec: Optional[int] = None) -> Optional[Tuple[Fraction, RealApprox]]:
    """Grid shift t in (0, 1/2] maximizing Theta_p(tau; t)/Theta_p(tau; 0), if it certifiably exceeds 1."""
    prec = _prec(prec)
    with mp.workprec(prec):
        base = theta(p, tau, 0, prec)
        best = None
        for i in range(1, grid + 1):
            t = Fraction(i, 2 * grid)
            diff = theta(p, tau, t, prec) - base
            if diff.lo > 0 and (best is None or diff.value > best[1].value):
                best = (t, diff)
        if best is None:
            return None
        t, diff = best
        return t, (diff + base) / base
