# lphard/gadgets.py
"""
Gadget construction and analysis.

Integer-lattice gadget for p > 2 (scaled Z^{n'} with a shifted target) and
the sphere-geometry helpers behind the kissing-number route: angle
integrals, random close-vector probabilities, local-density shift search and
pigeonhole radius chains.
"""
import logging
import math
from fractions import Fraction
from functools import lru_cache
from typing import Any, Callable, List, Optional, Sequence, Tuple

import mpmath
import numpy as np
from mpmath import mp, mpf

from . import config
from .counting import count_bounds, density_upper_bound, rational_above, rational_below
from .errors import GadgetError
from .lattice import enumerate_points, to_exact
from .models import (
    Basis,
    ChainResult,
    CloseProbability,
    GadgetInequality,
    GadgetMode,
    GadgetParams,
    GadgetScaling,
    LocalDensityResult,
    OracleBudget,
    RealApprox,
    as_fraction,
    fractions_of,
    norm_exponent,
    pow_value,
    rdiv,
    rle,
    rmul,
    rsum,
    to_mpf,
)
from .theta import count_upper_bound_theta, mu, theta, theta_shift_derivative

log = logging.getLogger(__name__)

DESK_ALPHA_STEP = Fraction(1, 16)
MC_CHUNK = 20000


# ---------- integer-lattice gadget ----------

@lru_cache(maxsize=32)
def integer_gadget_params(p: Any, delta_target: Any = Fraction(1, 2), grid: int = 1024,
                          prec: Optional[int] = None) -> GadgetParams:
    """t* maximizing Theta_p(1; .), the ratio Theta(1;t*)/Theta(1;0) > 1 and the constants eps, C_r, beta."""
    p = norm_exponent(p)
    if to_mpf(p) <= 2:
        raise GadgetError(f"no integer gadget for p = {p}: Theta_p(1; t) has no shift beating t = 0 when p <= 2")
    prec = int(prec or config.PRECISION_BITS)
    with mp.workprec(prec):
        delta = to_mpf(delta_target)
        if not 0 < delta < 1:
            raise GadgetError(f"delta must lie in (0, 1), got {delta_target}")
        values = [theta(p, 1, Fraction(i, 2 * grid), prec) for i in range(grid + 1)]
        i_best = max(range(grid + 1), key=lambda i: values[i].value)
        if i_best == 0:
            raise GadgetError(f"Theta_{p}(1; t) is maximized at t = 0: no local-minimum gain")
        if i_best == grid:
            t_star: Any = Fraction(1, 2)
        else:
            a, b = mpf(i_best - 1) / (2 * grid), mpf(i_best + 1) / (2 * grid)
            for _ in range(80):
                mid = (a + b) / 2
                if theta_shift_derivative(p, 1, mid, prec).value > 0:
                    a = mid
                else:
                    b = mid
            t_star = (a + b) / 2
        ratio = theta(p, 1, t_star, prec) / theta(p, 1, 0, prec)
        if ratio.lo <= 1:
            raise GadgetError(f"theta ratio {ratio} is not certifiably above 1")
        m = mu(p, 1, t_star, prec)
        gain = ratio.log()
        # root of log(ratio) = eps * mu / (1 - eps)
        eps_boundary = gain.value / (m.value + gain.value)
        eps = min(eps_boundary, delta) / 2
        c_r_pow = m.value / (1 - eps)
        beta_close = ratio * RealApprox(-eps * c_r_pow).exp()
        beta_far = RealApprox(eps * c_r_pow * (1 / delta - 1)).exp()
        beta = beta_close if beta_close.value < beta_far.value else beta_far
        if beta.lo <= 1:
            raise GadgetError(f"beta = {beta} is not certifiably above 1")
        log.info("integer gadget p=%s: t*=%s ratio=%s eps=%s beta=%s", p, t_star,
                 mpmath.nstr(ratio.value, 10), mpmath.nstr(eps, 6), mpmath.nstr(beta.value, 10))
        return GadgetParams(p, t_star, eps, delta, c_r_pow, beta, ratio, m)


def _hypothesis_violations(params: GadgetParams, d: int, eta: Fraction) -> List[str]:
    out = []
    if not 2 * params.eps ** 2 < to_mpf(eta) < 1:
        out.append(f"eta = {eta} outside (2 eps^2, 1)")
    if eta * d < 10:
        out.append(f"eta d = {eta * d} < 10")
    return out


def scale_gadget(params: GadgetParams, m: int, d: int, eta: Any, n_dagger: Optional[int] = None,
                 strict: bool = True, s: Any = 1, prec: Optional[int] = None) -> GadgetScaling:
    """Closed-form alpha, r, gamma and n' = ceil(C' m) for the integer gadget."""
    eta = as_fraction(eta)
    violations = _hypothesis_violations(params, d, eta)
    if violations and strict:
        raise GadgetError("gadget hypotheses fail: " + "; ".join(violations))
    for v in violations:
        log.warning("gadget scaling outside its hypotheses: %s", v)
    p, eps = params.p, params.eps
    s = as_fraction(s)
    prec = int(prec or config.PRECISION_BITS)
    with mp.workprec(prec):
        eta_m = to_mpf(eta)
        gamma_pow = 1 + min(mpf(1) / 100, (1 / mpmath.sqrt(eta_m) - 1) ** 2 / 2) * eps
        r_pow = 2 * (1 - eps / 2) * eta_m * d / eps
        r_star_pow = gamma_pow * (r_pow + to_mpf(pow_value(s, p)))
        r_star = r_star_pow ** (1 / to_mpf(p))
        if n_dagger is None:
            center = count_upper_bound_theta(p, m, radius_pow=r_star_pow, shift_vec=0, prec=prec).bound
            need = mpmath.log(center.hi * mpf(2) ** m * (1 + r_star / to_mpf(s))) / mpmath.log(params.beta.lo)
            n_dagger = max(1, int(mpmath.floor(need)) + 1)
        alpha = rational_above((2 * eta_m * d / (eps * params.c_r_pow * n_dagger)) ** (1 / to_mpf(p)), 32)
        # the check and the emitted lattice share these exact values
        alpha_pow = pow_value(alpha, p)
        t_star = params.t_star if isinstance(params.t_star, Fraction) else rational_below(params.t_star, 32)
        return GadgetScaling(
            mode=GadgetMode.lemma, p=p, alpha=alpha, alpha_pow=alpha_pow, r_pow=r_pow, s=s,
            gamma_pow=gamma_pow, n_dagger=n_dagger, c_dagger=mpf(n_dagger) / m, eta=eta, d=d, m=m,
            t_star=t_star, violations=tuple(violations),
        )


def desk_gadget_scaling(params: GadgetParams, d: int, n_dagger: int, s: Any = Fraction(1, 2),
                        eta: Any = 1, m: Optional[int] = None) -> GadgetScaling:
    """
    Runnable small-dimension scaling: alpha is the least multiple of 1/16 with
    alpha^p (1 - n' t^p) > d + s^p, r^p = d + alpha^p n' t^p and gamma = 1.
    Exact covers of size <= d plus a nearest gadget point stay within r' and no
    vector of the gadget alone does. Nothing here bounds the cover-side kernel
    vectors; setcover_to_agcvp counts those exactly.
    """
    p = params.p
    s = as_fraction(s)
    t = params.t_star if isinstance(params.t_star, Fraction) else rational_below(params.t_star, 32).limit_denominator(64)
    spread = rmul(n_dagger, pow_value(t, p))
    if not rle(spread, Fraction(1)) or spread == 1:
        raise GadgetError(f"desk gadget needs n' t^p < 1, got {n_dagger} * {t}^{p}")
    need = rdiv(rsum(d, pow_value(s, p)), rsum(1, -to_exact(spread)))
    k = max(1, int(mpmath.floor(16 * to_mpf(need) ** (1 / to_mpf(p)))))
    while rle(pow_value(k * DESK_ALPHA_STEP, p), need):
        k += 1
    alpha = k * DESK_ALPHA_STEP
    alpha_pow = pow_value(alpha, p)
    r_pow = rsum(d, rmul(alpha_pow, spread))
    return GadgetScaling(
        mode=GadgetMode.desk, p=p, alpha=alpha, alpha_pow=alpha_pow, r_pow=r_pow, s=s,
        gamma_pow=Fraction(1), n_dagger=n_dagger, c_dagger=None, eta=as_fraction(eta), d=d, m=m,
        t_star=t, violations=("desk scaling is outside the lemma's parameter regime",),
    )


def gadget_lattice(scaling: GadgetScaling) -> Tuple[Basis, Tuple[Fraction, ...]]:
    """(alpha I_{n'}, alpha t* (1, ..., 1))."""
    t = scaling.t_star
    n = scaling.n_dagger
    basis = Basis(n, tuple(tuple(scaling.alpha if i == j else Fraction(0) for i in range(n)) for j in range(n)),
                  checked=False)
    return basis, (scaling.alpha * t,) * n


def good_gadget_check(params: GadgetParams, scaling: GadgetScaling, m: Optional[int] = None,
                      prec: Optional[int] = None) -> GadgetInequality:
    """
    Certified check of
      N(Z^m, r*, 0) (N(L', r*, 0) + (r*/s) D(L', (r*^p - d)^{1/p})) < 2^-m N(L', (r^p - eta d)^{1/p}, t')
    with L' = alpha Z^{n'}: upper bounds on the left, lower bounds on the right.
    The left side, rounded up, is the annoying-vector bound A; the right-hand count is G.
    """
    m = m if m is not None else scaling.m
    if m is None:
        raise GadgetError("gadget check needs the set-system size m")
    p, n, d = params.p, scaling.n_dagger, scaling.d
    prec = int(prec or config.PRECISION_BITS)
    with mp.workprec(prec):
        r_star_pow = scaling.r_star_pow
        alpha_pow = scaling.alpha_pow
        center_hi = count_bounds(p, m, rational_above(r_star_pow), 0).hi
        gadget_center_hi = count_bounds(p, n, rational_above(rdiv(r_star_pow, alpha_pow)), 0).hi
        dens_pow = rdiv(rsum(r_star_pow, -d), alpha_pow)
        if to_mpf(dens_pow) > 0:
            dens_hi = density_upper_bound(p, n, radius_pow=dens_pow, prec=prec).hi
        else:
            dens_hi = mpf(1)
        r_star = to_mpf(r_star_pow) ** (1 / to_mpf(p))
        lhs_hi = center_hi * (gadget_center_hi + r_star / to_mpf(scaling.s) * dens_hi)
        close_pow = rdiv(rsum(scaling.r_pow, -rmul(scaling.eta, d)), alpha_pow)
        close_lo = count_bounds(p, n, rational_below(close_pow), scaling.t_star).lo if to_mpf(close_pow) >= 0 else 0
        rhs_lo = mpf(close_lo) / mpf(2) ** m
        holds = bool(lhs_hi < rhs_lo)
        log.info("gadget check n'=%d: lhs<=%s rhs>=%s holds=%s", n, mpmath.nstr(lhs_hi, 8),
                 mpmath.nstr(rhs_lo, 8), holds)
        return GadgetInequality(n, lhs_hi, rhs_lo, holds, center_hi, close_lo)


def search_gadget_dimension(params: GadgetParams, m: int, d: int, eta: Any, max_doublings: int = 8,
                            s: Any = 1) -> Tuple[GadgetScaling, GadgetInequality]:
    """Start at n' = ceil(C' m) and double n' until the certified gadget inequality holds."""
    scaling = scale_gadget(params, m, d, eta, strict=False, s=s)
    for _ in range(max_doublings + 1):
        check = good_gadget_check(params, scaling)
        if check.holds:
            return scaling, check
        scaling = scale_gadget(params, m, d, eta, n_dagger=2 * scaling.n_dagger, strict=False, s=s)
    raise GadgetError(f"gadget inequality still fails at n' = {scaling.n_dagger}")


# ---------- sphere geometry ----------

def angle_integral(n: int, theta1: Any, theta2: Any) -> mpf:
    """int_{theta1}^{theta2} sin^{n-2}(x) dx."""
    if n < 3:
        raise GadgetError(f"angle integral needs n >= 3, got {n}")
    a, b = to_mpf(theta1), to_mpf(theta2)
    if not 0 <= a < b <= mp.pi:
        raise GadgetError(f"need 0 <= theta1 < theta2 <= pi, got [{theta1}, {theta2}]")
    return mpmath.quad(lambda x: mpmath.sin(x) ** (n - 2), [a, b])


def _unit_rows(rng: np.random.Generator, size: int, n: int) -> np.ndarray:
    g = rng.standard_normal((size, n))
    return g / np.linalg.norm(g, axis=1)[:, None]


def _chunks(trials: int, seed: int):
    sizes = [MC_CHUNK] * (trials // MC_CHUNK) + ([trials % MC_CHUNK] if trials % MC_CHUNK else [])
    return zip(np.random.SeedSequence(seed).spawn(len(sizes)), sizes)


def angle_frequency_mc(n: int, theta1: float, theta2: float, trials: int, seed: int) -> Tuple[float, float, float]:
    """(frequency, exact probability, sigma) of the angle to a fixed axis falling in [theta1, theta2]."""
    hits = 0
    for child, size in _chunks(trials, seed):
        x = _unit_rows(np.random.default_rng(child), size, n)
        angles = np.arccos(np.clip(x[:, 0], -1.0, 1.0))
        hits += int(np.count_nonzero((angles >= theta1) & (angles <= theta2)))
    prob = float(angle_integral(n, theta1, theta2) / angle_integral(n, 0, mp.pi))
    return hits / trials, prob, math.sqrt(prob * (1 - prob) / trials)


def close_prob_bound(n: int, delta: Any, eps: Any) -> mpf:
    """(eps / (2 sqrt(delta (1 + delta)))) ((1 - 2 eps - eps^2/delta) / (1 + delta))^{n/2}."""
    dl, ep = to_mpf(delta), to_mpf(eps)
    return ep / (2 * mpmath.sqrt(dl * (1 + dl))) * ((1 - 2 * ep - ep ** 2 / dl) / (1 + dl)) ** (mpf(n) / 2)


def _close_violations(n: int, norm2: float, delta: float, eps: float) -> List[str]:
    out = []
    if n < 100:
        out.append(f"n = {n} < 100")
    if not 0 < eps < 0.01:
        out.append(f"eps = {eps} outside (0, 1/100)")
    if not 0 < delta < 0.01:
        out.append(f"delta = {delta} outside (0, 1/100)")
    if eps > math.sqrt(delta) / 10:
        out.append("eps > sqrt(delta)/10")
    if not 1 <= norm2 <= 1 + delta:
        out.append(f"||v||^2 = {norm2} outside [1, 1 + delta]")
    return out


def close_prob_mc(v: Sequence[float], delta: float, eps: float, trials: int, seed: int,
                  report_only: bool = False) -> CloseProbability:
    """Frequency of ||v - t||^2 <= 1 - eps for t uniform on the sphere of radius sqrt(delta)."""
    vec = np.asarray(v, dtype=float)
    n = vec.shape[0]
    norm2 = float(vec @ vec)
    violations = _close_violations(n, norm2, delta, eps)
    if violations and not report_only:
        raise GadgetError("close-vector hypotheses fail: " + "; ".join(violations))
    radius = math.sqrt(delta)
    hits = 0
    for child, size in _chunks(trials, seed):
        t = radius * _unit_rows(np.random.default_rng(child), size, n)
        d2 = np.sum((vec - t) ** 2, axis=1)
        hits += int(np.count_nonzero(d2 <= 1 - eps))
    bound = close_prob_bound(n, delta, eps)
    b = float(bound)
    sigma = math.sqrt(max(b * (1 - b), 0.0) / trials)
    return CloseProbability(hits / trials, hits, trials, bound, sigma, tuple(violations))


def local_density_shift_search(b: Basis, radius_pow: Any, eps: Any, delta: Any, trials: int, seed: int,
                               target: Optional[Sequence[Any]] = None, p: int = 2,
                               budget: Optional[OracleBudget] = None) -> LocalDensityResult:
    """Best shift t' at l2 distance sqrt(delta) r from the target, by N(L, sqrt(1 - eps) r, t')."""
    if p != 2:
        raise GadgetError("local density search is stated for the l2 norm")
    eps_f, delta_f, big_r = as_fraction(eps), as_fraction(delta), as_fraction(radius_pow)
    tgt = fractions_of(target) if target is not None else (Fraction(0),) * b.d
    report_only = b.n < 100
    reference = len(enumerate_points(b, 2, (1 + delta_f) * big_r, tgt, budget))
    step = math.sqrt(float(delta_f) * float(big_r))
    rng = np.random.default_rng(seed)
    best_shift, best_count = tgt, -1
    inner = (1 - eps_f) * big_r
    for _ in range(trials):
        u = rng.standard_normal(b.d)
        u /= np.linalg.norm(u)
        shift = tuple(t + Fraction(float(step * x)).limit_denominator(1 << 20) for t, x in zip(tgt, u))
        count = len(enumerate_points(b, 2, inner, shift, budget))
        if count > best_count:
            best_shift, best_count = shift, count
    return LocalDensityResult(best_shift, best_count, reference,
                              close_prob_bound(b.n, delta_f, eps_f), trials, report_only)


# ---------- radius chains ----------

def kissing_chain_steps(r: Any, r_prime: Any) -> int:
    ratio = to_mpf(r_prime) / to_mpf(r)
    if ratio <= 1:
        raise GadgetError("radius chain needs r' > r")
    return int(mpmath.ceil(2000 * mpmath.log(ratio)))


def pigeonhole_radius_search(count: Callable[[mpf], int], r: Any, r_prime: Any, beta: Any, n: int,
                             steps: Optional[int] = None) -> ChainResult:
    """
    Radii s_i = r (r'/r)^{i/steps}. If count(s_steps)/count(s_0) >= beta^n, return the first i
    with count(s_{i+1})/count(s_i) >= beta^{n/steps}; otherwise a certificate that the endpoint ratio fails.
    """
    steps = steps or kissing_chain_steps(r, r_prime)
    r_m, rp_m, beta_m = to_mpf(r), to_mpf(r_prime), to_mpf(beta)
    radii = tuple(r_m * (rp_m / r_m) ** (mpf(i) / steps) for i in range(steps + 1))
    counts = tuple(int(count(s)) for s in radii)
    step_threshold = beta_m ** (mpf(n) / steps)
    if counts[0] == 0 or mpf(counts[-1]) < beta_m ** n * counts[0]:
        cert = f"endpoint ratio {counts[-1]}/{counts[0]} is below beta^n = {mpmath.nstr(beta_m ** n, 10)}"
        return ChainResult(None, radii, counts, step_threshold, cert)
    for i in range(steps):
        if mpf(counts[i + 1]) >= step_threshold * counts[i]:
            return ChainResult(i, radii, counts, step_threshold)
    raise GadgetError("pigeonhole chain found no step despite the endpoint ratio")
