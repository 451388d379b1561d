import math
from fractions import Fraction

import mpmath
import pytest
from mpmath import mpf

from lphard.counting import count_bounds, rational_below
from lphard.errors import GadgetError
from lphard.gadgets import (
    angle_frequency_mc,
    angle_integral,
    close_prob_mc,
    desk_gadget_scaling,
    gadget_lattice,
    good_gadget_check,
    integer_gadget_params,
    kissing_chain_steps,
    local_density_shift_search,
    pigeonhole_radius_search,
    scale_gadget,
    search_gadget_dimension,
)
from lphard.lattice import enumerate_points
from lphard.models import Basis, GadgetMode, to_mpf

HALF = Fraction(1, 2)


@pytest.fixture(scope="module")
def cubic():
    return integer_gadget_params(3)


def test_cubic_gadget_constants(cubic):
    assert cubic.t_star == HALF
    assert abs(cubic.theta_ratio.value - mpf("1.055862")) < mpf("1e-5")
    assert abs(cubic.eps - mpf("0.0904")) < mpf("1e-3")
    assert cubic.eps <= cubic.delta / 2
    assert cubic.beta.lo > 1


def test_interior_maximizer_above_two():
    params = integer_gadget_params(Fraction(5, 2))
    assert 0 < float(params.t_star) < 0.5
    assert params.theta_ratio.lo > 1


def test_beta_is_stable_under_more_precision(cubic):
    finer = integer_gadget_params(3, prec=256)
    assert abs(finer.beta.value - cubic.beta.value) < mpf("1e-9")


def test_interior_shift_is_rounded_once_for_check_and_lattice():
    params = integer_gadget_params(Fraction(5, 2))
    scaling = scale_gadget(params, m=6, d=40, eta=HALF, n_dagger=100)
    assert isinstance(scaling.t_star, Fraction)
    assert to_mpf(scaling.t_star) <= params.t_star
    _, target = gadget_lattice(scaling)
    assert set(target) == {scaling.alpha * scaling.t_star}


def test_gadget_params_refusals():
    with pytest.raises(GadgetError):
        integer_gadget_params(2)
    with pytest.raises(GadgetError):
        integer_gadget_params(3, Fraction(3, 2))


def test_lemma_scaling_formulas(cubic):
    scaling = scale_gadget(cubic, m=6, d=40, eta=HALF, n_dagger=100)
    eps = cubic.eps
    assert scaling.mode is GadgetMode.lemma
    assert not scaling.violations
    assert abs(scaling.r_pow / (2 * (1 - eps / 2) * 20 / eps) - 1) < mpf("1e-12")
    assert abs(to_mpf(scaling.alpha_pow) * eps * cubic.c_r_pow * 100 / 40 - 1) < mpf("1e-8")
    assert abs(scaling.gamma_pow - 1 - eps / 100) < mpf("1e-12")
    assert scaling.alpha_pow == scaling.alpha ** 3
    assert isinstance(scaling.t_star, Fraction)
    _, target = gadget_lattice(scaling)
    assert target == (scaling.alpha * scaling.t_star,) * 100


def test_lemma_scaling_hypotheses(cubic):
    with pytest.raises(GadgetError):
        scale_gadget(cubic, m=6, d=4, eta=HALF, n_dagger=10)
    relaxed = scale_gadget(cubic, m=6, d=4, eta=HALF, n_dagger=10, strict=False)
    assert any("eta d" in v for v in relaxed.violations)


def test_desk_scaling(cubic):
    scaling = desk_gadget_scaling(cubic, d=3, n_dagger=4)
    assert scaling.alpha == Fraction(15, 8)
    assert scaling.r_pow == 3 + Fraction(3375, 1024)
    # the gadget alone never reaches the lifted radius
    assert scaling.alpha_pow > scaling.r_star_pow
    basis, target = gadget_lattice(scaling)
    assert basis.columns[0] == (Fraction(15, 8), 0, 0, 0)
    assert target == (Fraction(15, 16),) * 4


def test_desk_scaling_needs_a_short_spread(cubic):
    with pytest.raises(GadgetError):
        desk_gadget_scaling(cubic, d=3, n_dagger=8)


def test_desk_gadget_counts(cubic):
    scaling = desk_gadget_scaling(cubic, d=3, n_dagger=4)
    check = good_gadget_check(cubic, scaling, m=14)
    assert check.close_count_lo == 16
    # +-1 entries only, at most six of them
    assert check.center_count_hi == sum(math.comb(14, j) * 2 ** j for j in range(7))


@pytest.mark.slow
def test_gadget_dimension_search_toy(cubic):
    scaling, check = search_gadget_dimension(cubic, m=6, d=4, eta=HALF)
    assert check.holds
    assert check.lhs_hi < check.rhs_lo
    assert scaling.violations


def test_angle_integral():
    for n in (100, 200):
        assert angle_integral(n, 0, mpmath.pi) <= 1
    assert abs(angle_integral(3, 0, mpmath.pi) - 2) < mpf("1e-12")
    with pytest.raises(GadgetError):
        angle_integral(2, 0, 1)
    with pytest.raises(GadgetError):
        angle_integral(10, 1, 1)


def test_angle_frequency_matches_the_integral():
    freq, prob, sigma = angle_frequency_mc(10, 1.0, 1.5, 20_000, seed=3)
    assert abs(freq - prob) <= 4 * sigma


def test_close_frequency_decreases_with_eps():
    v = [1.0] + [0.0] * 99
    loose = close_prob_mc(v, 0.005, 0.002, 50_000, seed=4)
    tight = close_prob_mc(v, 0.005, 0.007, 50_000, seed=4)
    assert loose.frequency >= tight.frequency


def test_close_probability_hypotheses():
    v = [1.0] + [0.0] * 49
    with pytest.raises(GadgetError):
        close_prob_mc(v, 0.005, 0.002, 100, seed=0)
    report = close_prob_mc(v, 0.005, 0.002, 100, seed=0, report_only=True)
    assert any("n = 50" in s for s in report.violations)


@pytest.mark.slow
def test_close_frequency_beats_the_bound():
    delta = 1 / 200
    eps = math.sqrt(delta) / 20
    res = close_prob_mc([1.0] + [0.0] * 99, delta, eps, 1_000_000, seed=9)
    assert not res.violations
    assert res.frequency >= float(res.bound) - 3 * res.sigma


def test_local_density_search_on_z2():
    b = Basis.identity(2)
    eps, delta = Fraction(1, 250), Fraction(1, 200)
    res = local_density_shift_search(b, 4, eps, delta, trials=20, seed=1)
    assert res.report_only
    assert res.count == len(enumerate_points(b, 2, (1 - eps) * 4, res.shift))
    assert res.count >= res.bound * res.reference_count
    fewer = local_density_shift_search(b, 4, eps, delta, trials=10, seed=1)
    assert fewer.count <= res.count


def test_kissing_chain_steps():
    assert kissing_chain_steps(1, 2) == 1387
    with pytest.raises(GadgetError):
        kissing_chain_steps(2, 1)


def test_pigeonhole_finds_a_jump():
    jump = mpf(2) ** mpf("0.45")
    res = pigeonhole_radius_search(lambda s: 1 if s < jump else 10 ** 6, 1, 2, 2, 4, steps=10)
    assert res.index == 4
    assert res.certificate is None


def test_pigeonhole_certificate_on_flat_counts():
    res = pigeonhole_radius_search(lambda s: 7, 1, 2, 2, 4, steps=10)
    assert res.index is None
    assert "beta^n" in res.certificate


def test_pigeonhole_on_exact_counts():
    def count(s):
        return count_bounds(3, 8, rational_below(s ** 3)).lo

    res = pigeonhole_radius_search(count, 1, 2, Fraction(11, 10), 8, steps=8)
    assert res.index is not None
    i = res.index
    assert res.counts[i + 1] >= res.ratio_threshold * res.counts[i]
