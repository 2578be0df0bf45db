import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hpsig.complexes import HPComplexData
from hpsig.homotopy import ChainMap
from hpsig.loops import MATRIX, AlgebraElement
from hpsig.models import coarsening_map, prism_homotopy, random_hp_complex, subdivision_equivalence, suspension_model
from hpsig.modules import ModuleMap
from hpsig.smoothing import (
    STANDARD_PHIS,
    PullbackData,
    SmoothingPolynomial,
    apply_phi,
    chain_homotopy_identity,
    duality_compat_check,
    duality_sign,
    functoriality_check,
    laplacian_blocks,
    phi_blocks,
    phi_commutation_check,
    phi_cohomology_check,
    phi_independence_check,
    poincare_identity_check,
    psi_relation_check,
    pullback,
    pullback_check,
)

ONE_MINUS_X = SmoothingPolynomial((1.0, -1.0))


@pytest.fixture(scope="module")
def chain():
    m1 = suspension_model("(1 2)", 1)
    m2 = suspension_model("(1 2)", 2)
    A12 = subdivision_equivalence(m1, 2)
    A24 = subdivision_equivalence(m2, 2)
    return m1, m2, A12, A24


def test_parse():
    assert SmoothingPolynomial.parse("1-x").coeffs == (1.0, -1.0)
    assert SmoothingPolynomial.parse("1 - 2x + x^2").coeffs == (1.0, -2.0, 1.0)
    assert SmoothingPolynomial.parse("1-x/8").coeffs == (1.0, -0.125)
    assert SmoothingPolynomial.parse("1 - 1/4 x^3").coeffs == (1.0, 0.0, 0.0, -0.25)
    with pytest.raises(ValueError):
        SmoothingPolynomial.parse("2-x")
    with pytest.raises(ValueError):
        SmoothingPolynomial.parse("1-y")


def test_label_round_trip():
    for phi in STANDARD_PHIS:
        assert SmoothingPolynomial.parse(phi.label()) == phi


def test_circle_laplacian(circle):
    expected = AlgebraElement.from_terms({-1: [[-1.0]], 0: [[2.0]], 1: [[-1.0]]})
    for blk in laplacian_blocks(circle):
        assert blk.matrix.distance(expected) == 0.0


def test_one_minus_laplacian_on_circle(circle):
    out = phi_blocks(ONE_MINUS_X, circle)[0].matrix
    assert out.distance(AlgebraElement.from_terms({-1: [[1.0]], 0: [[-1.0]], 1: [[1.0]]})) == 0.0


def test_phi_kills_unit_laplacian():
    c = HPComplexData.from_matrices([[[1.0]]], None, MATRIX)
    assert apply_phi(ONE_MINUS_X, c).max_abs() == 0.0


@pytest.mark.parametrize("phi", STANDARD_PHIS, ids=lambda p: p.label())
def test_smoothing_identities_on_models(phi, circle):
    for c in (circle, suspension_model("(1 2)(3)", 2).complex):
        assert phi_commutation_check(phi, c).max_violation <= 1e-12
        assert psi_relation_check(phi, c).passed
        assert chain_homotopy_identity(phi, c).max_violation <= 1e-10
        assert phi_cohomology_check(phi, c, 64).max_violation <= 1e-8


@given(st.integers(0, 2**31), st.sampled_from([(1, 1), (2, 2), (1, 2, 2, 1), (1, 2, 1)]),
       st.sampled_from(STANDARD_PHIS))
def test_smoothing_identities_random(seed, ranks, phi):
    try:
        c = random_hp_complex(seed, ranks)
    except ValueError:
        return
    assert phi_commutation_check(phi, c).passed
    assert chain_homotopy_identity(phi, c).passed
    assert phi_cohomology_check(phi, c).passed


def test_identity_pullback_is_smoothing(circle):
    data = PullbackData.from_chain_map(ChainMap.identity(circle))
    for p, m in enumerate(pullback(data, ONE_MINUS_X)):
        assert m.distance(phi_blocks(ONE_MINUS_X, circle)[p]) == 0.0
    assert poincare_identity_check(data, ONE_MINUS_X, None, 64).passed


def test_pullback_refuses_non_chain_map(circle):
    one = AlgebraElement.identity(1)
    data = PullbackData(circle, circle, [ModuleMap.from_matrix(one), ModuleMap.from_matrix(one * 2.0)])
    with pytest.raises(ValueError, match="not a chain map"):
        pullback(data, ONE_MINUS_X)


def test_subdivision_pullback(chain):
    _, _, A12, _ = chain
    assert pullback_check(PullbackData.from_chain_map(A12), STANDARD_PHIS[1], 64).passed


def test_phi_independence(chain):
    _, _, A12, A24 = chain
    for A in (A12, A24):
        data = PullbackData.from_chain_map(A)
        res = phi_independence_check(data, STANDARD_PHIS[0], STANDARD_PHIS[2], 64)
        assert res.max_violation <= 1e-8


def test_functoriality(chain):
    _, _, A12, A24 = chain
    f, g, gf = (PullbackData.from_chain_map(A) for A in (A24, A12, A12.then(A24)))
    for phi in STANDARD_PHIS:
        assert functoriality_check(f, g, gf, phi, 64).max_violation <= 1e-8
    with pytest.raises(ValueError):
        functoriality_check(g, g, g, ONE_MINUS_X)


def test_round_trips(chain):
    m1, m2, A12, _ = chain
    R = coarsening_map(m1, 2)
    a, r = A12.A, R.A
    coarse = PullbackData(m1.complex, m1.complex, [r[p] @ a[p] for p in range(2)])
    fine = PullbackData(m2.complex, m2.complex, [a[p] @ r[p] for p in range(2)])
    for phi in STANDARD_PHIS:
        assert poincare_identity_check(coarse, phi, None, 64).get("poincare-identity").max_violation <= 1e-10
        rep = poincare_identity_check(fine, phi, [prism_homotopy(m1, 2)], 64)
        assert rep.passed and rep.get("poincare-identity").max_violation <= 1e-10
        assert not poincare_identity_check(fine, phi, None, 64).get("poincare-identity").passed


def test_duality_compatibility_and_sign_control(chain):
    m1, _, A12, _ = chain
    fd = PullbackData.from_chain_map(A12)
    gd = PullbackData.from_chain_map(coarsening_map(m1, 2))
    for phi in STANDARD_PHIS:
        rep = duality_compat_check(fd, phi, gd, 64)
        assert rep.passed and rep.max_violation <= 1e-8
        neg = duality_compat_check(fd, phi, gd, 64, negate_sign=True)
        assert not neg.get("gamma-sign-rule-negated").passed


def test_duality_sign():
    assert [duality_sign(k, 1) for k in range(2)] == [1, 1]
    assert [duality_sign(k, 3) for k in range(4)] == [1, 1, 1, 1]
    assert [duality_sign(k, 2) for k in range(3)] == [1, -1, 1]
