import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hpsig.loops import MATRIX, AlgebraElement, sample_grid
from hpsig.winding import (
    LoopTooWildError,
    UnitaryLoop,
    k1_class,
    k1_equal,
    morita_transport,
    stabilize,
    unitary_loop_from_element,
    winding_number,
    winding_with_residual,
)


def z_power(k: int, dim: int = 1) -> UnitaryLoop:
    e = AlgebraElement.from_terms({k: np.eye(dim)})
    return unitary_loop_from_element(e, 256)


def diag_loop(powers, n=256) -> UnitaryLoop:
    th = sample_grid(n)
    mats = np.zeros((n, len(powers), len(powers)), complex)
    for i, p in enumerate(powers):
        mats[:, i, i] = np.exp(1j * p * th)
    return UnitaryLoop(th, mats)


def random_unitary(rng, d):
    q, r = np.linalg.qr(rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d)))
    return q * (np.diag(r) / np.abs(np.diag(r)))


def test_z_winds_once():
    assert winding_number(z_power(1)) == 1
    assert winding_number(z_power(-2)) == -2


def test_diag_z_one():
    assert winding_number(diag_loop([1, 0])) == 1


def test_constant_loop():
    assert winding_number(diag_loop([0, 0, 0])) == 0


def test_matrix_algebra_has_zero_k1():
    u = unitary_loop_from_element(AlgebraElement.constant([[0, 1], [1, 0]], MATRIX))
    assert winding_number(u) == 0
    assert k1_class(u).value == 0
    cmp = k1_equal(u, u)
    assert cmp and "vanishes" in cmp.notice


def test_non_unitary_is_refused():
    th = sample_grid(8)
    with pytest.raises(ValueError, match="not unitary"):
        winding_number(UnitaryLoop(th, 2 * np.ones((8, 1, 1))))


def test_frozen_coarse_loop_too_wild():
    th = sample_grid(8)
    mats = np.exp(1j * 5 * th)[:, None, None]
    with pytest.raises(LoopTooWildError):
        winding_number(UnitaryLoop(th, mats))


def test_refinement_follows_sampler():
    e = AlgebraElement.from_terms({20: [[1.0]]})
    u = unitary_loop_from_element(e, 16)
    w, res, used = winding_with_residual(u)
    assert w == 20 and used > 16 and res < 1e-9


def test_json_round_trip():
    u = diag_loop([2, -1], 32)
    v = UnitaryLoop.from_json(u.to_json())
    assert np.allclose(v.mats, u.mats)
    assert winding_number(v) == 1


def test_stabilize_keeps_winding():
    u = z_power(3)
    s = stabilize(u, 4)
    assert s.dim == 4 and winding_number(s) == 3
    with pytest.raises(ValueError):
        stabilize(s, 2)


def test_morita_transport_layouts():
    u = diag_loop([1, 0, 2, -1])
    assert winding_number(morita_transport(u, 2)) == 2
    v = morita_transport(u, 2, "interleaved")
    assert np.allclose(np.diag(v.mats[5]), np.diag(u.mats[5])[[0, 2, 1, 3]])
    assert winding_number(v) == 2
    with pytest.raises(ValueError):
        morita_transport(u, 3)


@given(st.lists(st.integers(-4, 4), min_size=1, max_size=3), st.lists(st.integers(-4, 4), min_size=1, max_size=3))
def test_direct_sum_is_additive(a, b):
    ua, ub = diag_loop(a), diag_loop(b)
    assert winding_number(ua.direct_sum(ub)) == winding_number(ua) + winding_number(ub)
    assert k1_class(ua) + k1_class(ub) == k1_class(ua.direct_sum(ub))


@given(st.lists(st.integers(-4, 4), min_size=1, max_size=3), st.integers(0, 2**31))
def test_adjoint_negates_and_conjugation_invariant(powers, seed):
    u = diag_loop(powers)
    V = random_unitary(np.random.default_rng(seed), len(powers))
    conj = UnitaryLoop(u.thetas, V @ u.mats @ V.conj().T)
    assert winding_number(u.adjoint()) == -winding_number(u) == -sum(powers)
    assert winding_number(conj) == sum(powers)


@given(st.integers(-6, 6))
def test_grid_doubling_invariance(k):
    e = AlgebraElement.from_terms({k: [[1.0]]})
    assert winding_number(unitary_loop_from_element(e, 64)) == winding_number(unitary_loop_from_element(e, 128)) == k
