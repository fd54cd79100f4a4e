import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from robust_levy import DomainError, GridFunction, Axis
from robust_levy.example_dist import stable_scale_power
from robust_levy.stable_measure import (MeasureClass, QuadratureConfig, StableLevyMeasure,
                                        apply_generator, band_rule, generator_lipschitz_probe,
                                        interval_mass, kappa, scaling_pushforward_check,
                                        small_second_moment, tail_first_moment)
from robust_levy.testfuncs import affine, bump, constant, cosine, product_2d, sine

mp.mp.dps = 30

# σ^α for α=1.5, k=1: 2∫_0^∞(1−cos r)r^{-2.5}dr, frozen from an mpmath run
SIGMA_POW_15 = 3.342171032841334

right = lambda al, k=1.0: StableLevyMeasure.one_dim(al, 0.0, k)
sym = lambda al, k=1.0: StableLevyMeasure.one_dim(al, k, k)


# -- closed forms against hand values ---------------------------------------

def test_interval_mass_examples():
    assert interval_mass(right(1.5), 1.0, math.inf) == pytest.approx(2 / 3, rel=1e-15)
    assert interval_mass(StableLevyMeasure.one_dim(1.5, 0.0, 0.0), 0.3, 7.0) == 0.0
    assert interval_mass(right(1.5), 1.0, 2.0) == pytest.approx((1 - 2**-1.5) / 1.5, rel=1e-15)


def test_second_moment_examples():
    assert small_second_moment(right(1.5), 1.0) == pytest.approx(2.0, rel=1e-15)
    assert small_second_moment(sym(1.5), 1.0) == pytest.approx(4.0, rel=1e-15)
    vals = [small_second_moment(sym(1.5), e) for e in (1e-1, 1e-2, 1e-3, 1e-4)]
    assert all(b < a for a, b in zip(vals, vals[1:]))
    assert vals[-1] == pytest.approx(4 * 1e-2, rel=1e-12)


def test_tail_moment_and_kappa_examples():
    assert tail_first_moment(right(1.5), 1.0) == pytest.approx(2.0, rel=1e-15)
    assert tail_first_moment(right(1.5, 0.0), 1.0) == 0.0
    assert tail_first_moment(right(1.5), 4.0) == pytest.approx(1.0, rel=1e-15)
    assert kappa(right(1.5)) == pytest.approx(4.0, rel=1e-15)
    assert kappa(StableLevyMeasure.one_dim(1.5, 0.0, 0.0)) == 0.0
    cls = MeasureClass.one_dim(1.5, (1, 2), (1, 2))
    assert kappa(cls) == pytest.approx(16.0, rel=1e-15)


def test_bad_radii_raise():
    with pytest.raises(DomainError):
        interval_mass(sym(1.5), 0.0, 1.0)
    with pytest.raises(DomainError):
        interval_mass(sym(1.5), 2.0, 1.0)
    with pytest.raises(DomainError):
        StableLevyMeasure.one_dim(2.0, 1, 1)


def _head_quad(g, a):
    # ∫_0^a g via r = a·e^{-s}, which tames the r^{1-α} endpoint singularity
    return mp.quad(lambda s: g(a * mp.exp(-s)) * a * mp.exp(-s), [0, mp.inf])


def _tail_quad(g, b):
    # ∫_b^∞ g via r = b·e^s, turning the slow algebraic decay into an exponential one
    return mp.quad(lambda s: g(b * mp.exp(s)) * b * mp.exp(s), [0, mp.inf])


def _one_minus_cos(r):
    return 2 * mp.sin(r / 2) ** 2


def _r_minus_sin(r):
    # series below r=0.1 to avoid cancellation
    if r < 0.1:
        return sum((-1) ** (k + 1) * r ** (2 * k + 1) / mp.factorial(2 * k + 1)
                   for k in range(1, 12))
    return r - mp.sin(r)


def _side_integral(even: bool, al):
    """∫_0^∞ g(r) r^{-1-α} dr for g = 1 − cos (even) or r − sin (odd).

    On [1, ∞) the algebraic part integrates in closed form and only the
    trigonometric part goes through the oscillatory rule.
    """
    g, trig, alg = ((_one_minus_cos, mp.cos, 1 / mp.mpf(al)) if even
                    else (_r_minus_sin, mp.sin, 1 / (mp.mpf(al) - 1)))
    near = mp.quad(lambda r: g(r) * r ** (-1 - al), [0, 0.1, 1])
    far = alg - mp.quadosc(lambda r: trig(r) * r ** (-1 - al), [1, mp.inf], period=2 * mp.pi)
    return near + far


def test_closed_forms_match_mpmath_quadrature():
    rng = np.random.default_rng(7)
    for _ in range(50):
        al = float(rng.uniform(1.05, 1.95))
        km, kp = rng.uniform(0, 3, 2)
        a = float(rng.uniform(0.01, 2.0))
        b = a + float(rng.uniform(0.01, 10.0))
        m = StableLevyMeasure.one_dim(al, km, kp)
        mass = km + kp
        dens = lambda r, p: r**p * r ** (-1 - al)
        ref_band = mass * mp.quad(lambda r: dens(r, 0), [a, b])
        ref_small = mass * _head_quad(lambda r: dens(r, 2), a)
        ref_tail = mass * _tail_quad(lambda r: dens(r, 1), b)
        ref_kappa = mass * (_head_quad(lambda r: dens(r, 2), 1)
                            + _tail_quad(lambda r: dens(r, 1), 1))
        for got, ref in ((interval_mass(m, a, b), ref_band),
                         (small_second_moment(m, a), ref_small),
                         (tail_first_moment(m, b), ref_tail), (kappa(m), ref_kappa)):
            assert got == pytest.approx(float(ref), rel=1e-8)


def test_scaling_pushforward_examples():
    m = right(1.5)
    lhs, rhs = scaling_pushforward_check(m, 1.0, 0.5, 3.0)
    assert lhs == rhs
    lhs, rhs = scaling_pushforward_check(m, 2.0, 1.0, 2.0)
    assert lhs == pytest.approx((1 - 2**-1.5) / 1.5, rel=1e-15)
    assert rhs == pytest.approx(lhs, rel=1e-12)
    assert scaling_pushforward_check(m, 3.0, 1.5, 1.5) == (0.0, 0.0)


# -- generator -------------------------------------------------------------

def test_stable_scale_power_matches_mpmath():
    ref = 2 * _side_integral(True, 1.5)
    assert float(ref) == pytest.approx(SIGMA_POW_15, rel=1e-14)
    assert stable_scale_power(1.5, 1.0) == pytest.approx(float(ref), rel=1e-12)
    assert stable_scale_power(1.5, 0.5) == pytest.approx(0.5 * float(ref), rel=1e-12)


def test_generator_of_affine_and_constant_is_zero():
    m = StableLevyMeasure.one_dim(1.5, 0.7, 1.3)
    z = np.linspace(-3, 3, 7)
    assert np.max(np.abs(apply_generator(m, affine(2.5, -1.0), z).value)) < 1e-9
    assert np.max(np.abs(apply_generator(m, constant(4.0), z).value)) == 0.0


def test_generator_of_cos_symmetric():
    m = sym(1.5)
    z = np.array([0.0, 0.3, 1.0, 2.5])
    got = apply_generator(m, cosine(), z).value
    np.testing.assert_allclose(got, -SIGMA_POW_15 * np.cos(z), rtol=1e-6)


def test_generator_of_cos_asymmetric_against_mpmath():
    km, kp, z = 0.4, 1.1, 0.7
    al = 1.5

    # δ_{±r}cos(z) = −cos z·(1 − cos r) ± sin z·(r − sin r)
    even = _side_integral(True, al)
    odd = _side_integral(False, al)
    ref = float(-(km + kp) * mp.cos(z) * even + (kp - km) * mp.sin(z) * odd)
    got = apply_generator(StableLevyMeasure.one_dim(al, km, kp), cosine(), z).value
    assert got == pytest.approx(ref, rel=1e-6)


def test_generator_bounds_reported():
    g = apply_generator(sym(1.5), cosine(), 0.0)
    assert g.tail_bound <= 1e-6 * 1.01 and g.inner_bound > 0
    assert g.outer_cut > 1


def test_generator_2d_separable_decomposition():
    al = 1.5
    m2 = StableLevyMeasure.axis_2d(al, 1.0, 0.5, 0.7, 1.0)
    f = product_2d(cosine(), sine())
    z1, z2 = 0.3, 0.4
    got = apply_generator(m2, f, [z1, z2]).value
    g1 = apply_generator(StableLevyMeasure.one_dim(al, 1.0, 0.5), cosine(), z1).value
    g2 = apply_generator(StableLevyMeasure.one_dim(al, 0.7, 1.0), sine(), z2).value
    assert got == pytest.approx(g1 * math.sin(z2) + math.cos(z1) * g2, rel=1e-6)


def test_generator_on_grid_function_1d():
    g = GridFunction.sample(lambda p: np.cos(p[:, 0]), [Axis.centered(60, 0.05)])
    got = apply_generator(sym(1.5), g, 0.3).value
    assert got == pytest.approx(-SIGMA_POW_15 * math.cos(0.3), rel=2e-3)


def test_generator_on_grid_function_2d():
    ax = Axis.centered(20, 0.1)
    g = GridFunction.sample(lambda p: np.cos(p[:, 0]) * np.sin(p[:, 1]), [ax, ax])
    m2 = StableLevyMeasure.axis_2d(1.5, 1.0, 0.5, 0.7, 1.0)
    ref = apply_generator(m2, product_2d(cosine(), sine()), [0.3, 0.4]).value
    assert apply_generator(m2, g, [0.3, 0.4]).value == pytest.approx(ref, rel=5e-3)


def test_dimension_mismatch_raises():
    with pytest.raises(DomainError):
        apply_generator(StableLevyMeasure.axis_2d(1.5, 1, 1, 1, 1), cosine(), [0.0, 0.0])


# -- Lipschitz probe ---------------------------------------------------------

def test_lipschitz_probe_examples():
    cls = MeasureClass.one_dim(1.5, (1, 2), (1, 2))
    assert generator_lipschitz_probe(cls, cosine(), 0.4, 0.4) == (0.0, 0.0)
    obs, bound = generator_lipschitz_probe(cls, affine(3.0), 0.0, 0.5)
    assert obs < 1e-9 and bound >= 0
    obs, bound = generator_lipschitz_probe(cls, cosine(), 0.0, 0.1)
    assert 0 < obs <= bound
    obs, bound = generator_lipschitz_probe(cls, bump(), -1.0, 0.5)
    assert 0 < obs <= bound


# -- properties --------------------------------------------------------------

alphas = st.floats(1.05, 1.95)
weights = st.floats(0.0, 3.0)


@settings(max_examples=40, deadline=None)
@given(alphas, weights, weights, weights, weights, st.floats(-3, 3))
def test_generator_linear_in_weights(al, a1, b1, a2, b2, z):
    f = cosine()
    cfg = QuadratureConfig(outer_cut=64.0)
    v1 = apply_generator(StableLevyMeasure.one_dim(al, a1, b1), f, z, cfg).value
    v2 = apply_generator(StableLevyMeasure.one_dim(al, a2, b2), f, z, cfg).value
    v12 = apply_generator(StableLevyMeasure.one_dim(al, a1 + a2, b1 + b2), f, z, cfg).value
    assert v12 == pytest.approx(v1 + v2, rel=1e-10, abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(alphas, st.floats(0.01, 2.0), st.floats(1.01, 50.0), st.floats(0.1, 10.0))
def test_interval_mass_additive_and_scaling(al, a, f, beta):
    m = StableLevyMeasure.one_dim(al, 0.3, 1.2)
    b, c = a * f, a * f * 2
    assert interval_mass(m, a, c) == pytest.approx(
        interval_mass(m, a, b) + interval_mass(m, b, c), rel=1e-12)
    lhs, rhs = scaling_pushforward_check(m, beta, a, b)
    assert rhs == pytest.approx(lhs, rel=1e-10)


@settings(max_examples=40, deadline=None)
@given(alphas, st.floats(1e-4, 0.5), st.floats(1.5, 1e3))
def test_band_rule_integrates_density(al, a, f):
    b = a * f
    r, w = band_rule(al, a, b)
    assert np.all((r > a) & (r < b)) and np.all(w > 0)
    assert w.sum() == pytest.approx((a**-al - b**-al) / al, rel=1e-10)
    assert (w * r).sum() == pytest.approx((a ** (1 - al) - b ** (1 - al)) / (al - 1), rel=1e-10)
