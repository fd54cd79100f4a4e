import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from scipy import integrate

from robust_levy import DomainError, InfeasibleCore
from robust_levy.example_dist import (build_law, certify_attraction, classical_stable_oracle,
                                      condition_iii, condition_iv, consistency_gap, discretize,
                                      increment_minus_generator, point_mass_law,
                                      stable_scale_power)
from robust_levy.testfuncs import affine, constant, cosine, sine

# E|Z| for (α=1.5, k₁=k₂=1, x₀=2), frozen from adaptive quadrature of |x|·pdf
ABS_MEAN_DEFAULT = 3.4016504294495533


def _quad_moment(law, g):
    # independent route: adaptive quadrature of g·pdf piece by piece
    x0, a = law.x0, law.alpha
    core = integrate.quad(lambda x: g(x) * float(law.pdf(x)), -x0, x0, limit=200,
                          epsabs=1e-14, epsrel=1e-13)[0]
    tails = 0.0
    for sign, k in ((-1, law.k1), (1, law.k2)):
        tails += integrate.quad(lambda r: g(sign * r) * k * r ** (-1 - a), x0, math.inf,
                                limit=400, epsabs=1e-14, epsrel=1e-13)[0]
    return core + tails


def test_default_law_contract():
    law = build_law()
    assert law.mean() == 0.0
    assert _quad_moment(law, lambda x: x) == pytest.approx(0.0, abs=1e-10)
    assert _quad_moment(law, lambda x: 1.0) == pytest.approx(1.0, abs=1e-12)
    assert law.abs_mean() == pytest.approx(ABS_MEAN_DEFAULT, rel=1e-12)
    assert _quad_moment(law, abs) == pytest.approx(ABS_MEAN_DEFAULT, rel=1e-9)


def test_cdf_joins_tails_smoothly():
    law = build_law(1.5, 0.8, 1.2, 3.0)
    eps = 1e-7
    for x in (-law.x0, law.x0):
        assert float(law.cdf(x - eps)) == pytest.approx(float(law.cdf(x + eps)), abs=1e-6)
        assert float(law.pdf(x - 1e-9)) == pytest.approx(float(law.pdf(x + 1e-9)), rel=1e-6)
    xs = np.linspace(-10, 10, 4001)
    assert np.all(np.diff(law.cdf(xs)) >= 0)


def test_symmetric_law_has_zero_shift_and_symmetric_nodes():
    law = build_law(1.5, 1.0, 1.0, 2.0)
    assert abs(law.shift) < 1e-14
    d = discretize(law, 256)
    nodes = np.sort(d.nodes[:, 0])
    np.testing.assert_allclose(nodes, -nodes[::-1], atol=1e-12)
    assert abs(float(d.mean()[0])) < 1e-15


def test_point_mass_law():
    law = point_mass_law()
    d = discretize(law)
    assert d.nodes.shape == (1, 1) and d.nodes[0, 0] == 0.0
    assert condition_iii(law, 8) == (0.0,) * 6
    assert condition_iv(law) == (0.0, 0.0)
    assert consistency_gap([law], cosine(), 0.1, [0.0, 1.0]) == 0.0


def test_discretization_abs_mean_matches_oracle():
    law = build_law()
    for N in (256, 4096):
        d = discretize(law, N)
        assert math.fsum(d.weights * np.abs(d.nodes[:, 0])) == pytest.approx(
            ABS_MEAN_DEFAULT, rel=1e-4)
        assert abs(math.fsum(d.weights * d.nodes[:, 0])) < 1e-14


def test_bad_inputs():
    with pytest.raises(InfeasibleCore):
        build_law(1.5, 1, 1, 0.5)
    with pytest.raises(DomainError):
        build_law(2.5)
    with pytest.raises(DomainError):
        discretize(build_law(), 16)
    with pytest.raises(DomainError):
        build_law().beta1(1.0)


def test_beta_vanishes_beyond_core():
    law = build_law(1.5, 0.8, 1.2, 3.0)
    xs = np.linspace(3.0, 50.0, 200)
    assert np.all(law.beta1(-xs) == 0.0) and np.all(law.beta2(xs) == 0.0)
    assert abs(float(law.beta2(1.0))) > 0


def test_condition_iii_pointwise_and_far_terms_vanish_past_threshold():
    law = build_law()
    n_star = math.ceil(law.x0**law.alpha)
    for n in (n_star, 2 * n_star, 64):
        q = dict(zip(("b1", "b1far", "b1near", "b2", "b2far", "b2near"), condition_iii(law, n)))
        assert q["b1"] == q["b2"] == q["b1far"] == q["b2far"] == 0.0
        # the ∫₀¹ terms sample β inside the core, where β → −k/α at 0
        assert q["b1near"] > 0 and q["b2near"] > 0
    near = [condition_iii(law, 2**j)[2] for j in range(2, 9)]
    assert all(b < a for a, b in zip(near, near[1:]))


def test_condition_iv_finite():
    a, b = condition_iv(build_law())
    assert math.isfinite(a) and math.isfinite(b)


def test_affine_consistency_is_zero():
    law = build_law(1.5, 0.8, 1.0, 2.0)
    z = np.linspace(-2, 2, 9)
    # δ of an affine map is rounding only, divided by r² on the Jacobi nodes
    np.testing.assert_allclose(increment_minus_generator(law, affine(1.7, 0.3), z, 0.1), 0,
                               atol=1e-9)
    assert consistency_gap([law], affine(1.7, 0.3), 0.1, z) < 1e-8


def test_consistency_gap_shrinks_with_s():
    law = build_law()
    z = np.linspace(-math.pi, math.pi, 17)
    gaps = [consistency_gap([law], cosine(), s, z) for s in (0.2, 0.1, 0.05, 0.025)]
    assert all(b < a for a, b in zip(gaps, gaps[1:]))


def test_certificate_tables():
    cert = certify_attraction(build_law(), [1, 2, 4, 8], [0.1, 0.05], phis=[cosine()])
    assert cert.exact_zero_from() == math.ceil(2**1.5)
    assert len(cert.rows_iii()) == 4 and len(cert.rows_gap()) == 2
    assert set(cert.f_of_n()) == {1, 2, 4, 8}


def test_stable_oracle_examples():
    assert classical_stable_oracle(1.5, 1.0, 1000, lambda x: np.full_like(x, 2.0)) == (2.0, 0.0)
    m, se = classical_stable_oracle(1.5, 1.0, 200_000, np.sin, seed=1)
    assert abs(m) <= 3 * se
    m, se = classical_stable_oracle(1.5, 1.0, 200_000, np.cos, seed=2)
    assert abs(m - math.exp(-stable_scale_power(1.5, 1.0))) <= 3 * se


def test_stable_oracle_chunking_is_deterministic():
    a = classical_stable_oracle(1.5, 1.0, 150_000, np.cos, seed=5)
    b = classical_stable_oracle(1.5, 1.0, 150_000, np.cos, seed=5)
    assert a == b


@settings(max_examples=25, deadline=None)
@given(st.floats(1.1, 1.9), st.floats(0.0, 2.0), st.floats(0.0, 2.0), st.floats(1.5, 4.0))
def test_law_properties(al, k1, k2, x0):
    assume(k1 + k2 > 0.05)
    try:
        law = build_law(al, k1, k2, x0)
    except InfeasibleCore:
        return
    assert abs(law.mean()) < 1e-12
    xs = np.linspace(-3 * x0, 3 * x0, 601)
    assert np.all(np.diff(law.cdf(xs)) >= -1e-15)
    far = np.linspace(x0, 10 * x0, 50)
    assert np.all(law.beta1(-far) == 0.0) and np.all(law.beta2(far) == 0.0)
    d = discretize(law, 128)
    assert abs(math.fsum(d.weights * d.nodes[:, 0])) < 1e-12


def test_constant_and_sine_generators_cancel():
    law = build_law()
    z = np.array([0.0, 0.4])
    np.testing.assert_allclose(increment_minus_generator(law, constant(3.0), z, 0.05), 0.0,
                               atol=1e-15)
    # symmetric law and odd φ at z=0: both sides vanish
    assert abs(float(increment_minus_generator(law, sine(), 0.0, 0.05)[0])) < 1e-12
