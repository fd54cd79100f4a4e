import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from robust_levy import DomainError, UncertaintySetBox, g_function, hamiltonian
from robust_levy.uncertainty import LevyTriplet, argmax_triplet, drift_sup_upwind, jump_sup


def test_g_function_examples():
    box = UncertaintySetBox.one_dim(q=(-1, 1), Q=(1, 2))
    assert g_function(3.0, 0.0, box) == 3.0
    assert g_function(0.0, 0.0, box) == 0.0
    assert g_function(0.0, -2.0, UncertaintySetBox.one_dim(Q=(1, 2))) == -1.0


def test_hamiltonian_examples():
    box = UncertaintySetBox.one_dim(1.5, k_minus=(1, 2), k_plus=(1, 2))
    assert hamiltonian(box, [-1.0, 1.0], 0.0, 0.0) == 1.0
    assert hamiltonian(box, [1.0, -1.0], 0.0, 0.0) == 1.0
    box = UncertaintySetBox.one_dim(q=(-1, 1))
    assert hamiltonian(box, [], 1.0, 0.0) == 1.0


def test_singleton_box_is_linear_combination():
    box = UncertaintySetBox.one_dim(1.5, (0.3, 0.3), (0.8, 0.8), (0.5, 0.5), (1.5, 1.5))
    J = np.array([2.0, -1.0])
    assert hamiltonian(box, J, 1.2, -0.4) == pytest.approx(
        0.3 * 2 - 0.8 + 0.5 * 1.2 + 0.5 * 1.5 * -0.4, rel=1e-15)


def test_argmax_triplet_rules():
    box = UncertaintySetBox.one_dim(1.5, (1, 2), (1, 3), (-1, 1), (0.5, 2))
    t = argmax_triplet(box, [-1.0, 0.5], 0.0, -1.0)
    assert t.measure.weights == (1.0, 3.0)
    assert t.q == 1.0 and t.Q == 0.5
    single = box.singleton(t)
    assert single.vertices() == [t]


def test_invalid_boxes_raise():
    with pytest.raises(DomainError):
        UncertaintySetBox.one_dim(q=(1, -1))
    with pytest.raises(DomainError):
        UncertaintySetBox.one_dim(Q=(-1, 1))
    with pytest.raises(DomainError):
        UncertaintySetBox.one_dim(1.5, (-1, 1), (0, 1))
    with pytest.raises(DomainError):
        UncertaintySetBox.one_dim(q=(0, np.inf))
    with pytest.raises(DomainError):
        LevyTriplet(None, 0.0, -1.0)
    box = UncertaintySetBox.one_dim(1.5, (0, 1), (0, 1))
    with pytest.raises(DomainError):
        jump_sup(box, [1.0, 2.0, 3.0])


def test_dict_round_trip():
    box = UncertaintySetBox.one_dim(1.5, (0.75, 1), (0.5, 1), (-0.5, 0.5), (0.25, 1))
    assert UncertaintySetBox.from_dict(box.to_dict(), alpha=1.5) == box


def test_upwind_drift_picks_monotone_side():
    box = UncertaintySetBox.one_dim(q=(-1, 2))
    fw, bw = np.array([1.0, -1.0, 3.0]), np.array([-2.0, 0.5, -1.0])
    np.testing.assert_array_equal(drift_sup_upwind(box, fw, bw), [2.0, 0.0, 6.0])


iv = st.tuples(st.floats(-3, 3), st.floats(0, 3)).map(lambda t: (t[0], t[0] + t[1]))
pos_iv = st.tuples(st.floats(0, 3), st.floats(0, 3)).map(lambda t: (t[0], t[0] + t[1]))
coef = st.floats(-5, 5)


@settings(max_examples=100, deadline=None)
@given(pos_iv, pos_iv, iv, pos_iv, coef, coef, coef, coef)
def test_hamiltonian_equals_vertex_enumeration(km, kp, q, Q, j1, j2, p, A):
    box = UncertaintySetBox.one_dim(1.5, km, kp, q, Q)
    brute = max(w1 * j1 + w2 * j2 + p * qq + 0.5 * A * QQ
                for w1, w2, qq, QQ in itertools.product(km, kp, q, Q))
    got = hamiltonian(box, [j1, j2], p, A)
    assert got == pytest.approx(brute, rel=1e-12, abs=1e-12)
    t = argmax_triplet(box, [j1, j2], p, A)
    w1, w2 = t.measure.weights
    assert w1 * j1 + w2 * j2 + p * t.q + 0.5 * A * t.Q == pytest.approx(got, rel=1e-12, abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(iv, pos_iv, coef, coef, coef, coef, st.floats(0, 4))
def test_g_is_sublinear(q, Q, p1, A1, p2, A2, lam):
    box = UncertaintySetBox.one_dim(q=q, Q=Q)
    g12 = g_function(p1 + p2, A1 + A2, box)
    assert g12 <= g_function(p1, A1, box) + g_function(p2, A2, box) + 1e-12
    assert g_function(lam * p1, lam * A1, box) == pytest.approx(
        lam * g_function(p1, A1, box), rel=1e-12, abs=1e-12)
    # monotone in A
    assert g_function(p1, A1 + abs(A2), box) >= g_function(p1, A1, box) - 1e-12
