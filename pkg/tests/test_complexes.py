import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hpsig.complexes import (
    HPComplexData,
    SingularFiberError,
    bounded_transform,
    build_B,
    build_S,
    check_acyclic_iff_B_invertible,
    check_S_identities,
    direct_sum,
    lemma_Q_identities,
    signature_cone,
    signature_data,
    signature_operator,
    signature_unitary,
    validate,
    validate_complex,
    validate_duality,
)
from hpsig.loops import MATRIX, AlgebraElement, sample_grid
from hpsig.models import acyclic_padding, cycle_graph_complex, random_hp_complex, suspension_model
from hpsig.modules import ModuleMap
from hpsig.winding import winding_number

RANK_PATTERNS = [(1, 1), (2, 2), (1, 2, 1), (2, 2, 2), (1, 2, 2, 1), (2, 3, 3, 2), (1, 1, 1, 1)]


def random_complex(seed, ranks, acyclic):
    try:
        return random_hp_complex(seed, ranks, acyclic=acyclic)
    except ValueError:
        return None


def test_circle_passes_all_conditions(circle):
    rep = validate(circle)
    assert rep.passed
    assert rep.get("duality-symmetry").max_violation == 0.0
    assert rep.get("duality-anticommutation").max_violation == 0.0


def test_circle_anticommutation_is_polynomial_identity(circle):
    b, T0, T1 = circle.b[0].matrix, circle.T[0].matrix, circle.T[1].matrix
    # T_0 b^* + b T_1 on E_1: (1+z)/2 (z^-1 - 1) + (z - 1)(1 + z^-1)/2
    assert (T0 @ b.adjoint() + b @ T1).trimmed().max_abs() == 0.0


def test_circle_fiber_at_one_is_full_cohomology(circle):
    fc = circle.cohomology(np.zeros(1))
    assert fc.betti(0) == (1, 1)
    assert np.allclose(circle.T[0].matrix.evaluate(0.0), 1.0)


def test_corrupted_differential_is_caught():
    b1 = AlgebraElement.constant([[1.0]], MATRIX)
    c = HPComplexData.from_matrices([b1, b1], None, MATRIX)
    res = validate_complex(c)
    assert not res.passed and res.max_violation == 1.0


def test_s_factors():
    c = cycle_graph_complex(3)
    S = build_S(c)
    assert S.distance(c.T_total()) == 0.0   # n=1: i^0 on both degrees
    n3 = random_hp_complex(4, [1, 1, 1, 1])
    S3 = build_S(n3).matrix.coefficient(0)
    off = n3.offsets
    # p=2, l=1: factor i^(2+1) = -i
    blk = S3[off[1]:off[2], off[2]:off[3]]
    assert np.allclose(blk, -1j * n3.T[2].matrix.coefficient(0))


def test_even_length_has_no_signature():
    c = random_hp_complex(1, [1, 2, 1])
    with pytest.raises(ValueError, match="odd dimension"):
        signature_unitary(c)


def test_circle_signature_closed_form(circle):
    U = signature_unitary(circle)
    z = np.exp(1j * U.thetas)
    zb = np.conj(z)
    assert np.max(np.abs(U.mats[:, 0, 0] - (3 * zb - 1) / (zb - 3))) < 1e-12
    assert np.max(np.abs(U.mats[:, 1, 1] - (3 * z - 1) / (z - 3))) < 1e-12
    assert np.max(np.abs(np.linalg.det(U.mats) - 1)) < 1e-9
    assert winding_number(U) == 0


def test_circle_B_minus_S_invertible_everywhere(circle):
    vals = (build_B(circle) - build_S(circle)).matrix.evaluate(sample_grid(256))
    assert np.min(np.linalg.svd(vals, compute_uv=False)[:, -1]) > 0.1


def test_acyclic_toy_complex():
    b = [[1.0]]
    bad = HPComplexData.from_matrices([b], [[[1.0]], [[1.0]]], MATRIX)
    assert not validate_duality(bad).get("duality-anticommutation").passed
    good = HPComplexData.from_matrices([b], [[[1j]], [[-1j]]], MATRIX)
    assert validate(good).passed
    B, S = build_B(good).matrix.coefficient(0), build_S(good).matrix.coefficient(0)
    assert min(np.linalg.svd(B + S, compute_uv=False)) > 0.5
    assert min(np.linalg.svd(B - S, compute_uv=False)) > 0.5


def test_singular_fiber_is_named():
    half = AlgebraElement.from_terms({0: [[0.5]], 1: [[0.5]]})
    zero = ModuleMap.from_matrix(AlgebraElement.zeros(1, 1))
    c = HPComplexData(1, [1, 1], [zero], [ModuleMap.from_matrix(half), ModuleMap.from_matrix(half.adjoint())])
    with pytest.raises(SingularFiberError) as err:
        signature_data(c)
    assert err.value.fiber == 128


def test_circle_fiber_at_one_is_not_acyclic(circle):
    fc = circle.cohomology(np.zeros(1))
    assert not fc.acyclic(0)
    assert np.allclose(build_B(circle).matrix.evaluate(0.0), 0.0)
    assert check_acyclic_iff_B_invertible(circle).passed


def test_bounded_transform_of_B_at_minus_one(circle):
    B = build_B(circle).matrix.evaluate(np.pi)
    assert np.allclose(B, [[0, -2], [-2, 0]])
    assert np.allclose(bounded_transform(B)[0], B / np.sqrt(5))


def test_bounded_transform_of_unit_differential():
    c = HPComplexData.from_matrices([[[1.0]]], None, MATRIX)
    b = c.b_total().matrix.coefficient(0)
    assert np.allclose(bounded_transform(b)[0], b / np.sqrt(2))
    B = b + b.conj().T
    assert np.allclose(bounded_transform(B)[0], bounded_transform(b)[0] + bounded_transform(b.conj().T)[0])
    assert lemma_Q_identities(c).passed


def test_cayley_comparison(circle):
    _, rep = signature_operator(circle)
    assert rep.passed and any("skipped" in n for n in rep.notes)
    _, rep = signature_operator(cycle_graph_complex(5))
    assert rep.get("cayley-matches-signature").passed


def test_signature_cone_checks(circle):
    rep = signature_cone(circle).check(sample_grid(64))
    assert rep.passed


def test_padding_keeps_winding(circle):
    padded = acyclic_padding(circle, [1, 1], seed=3)
    assert validate(padded).passed
    assert winding_number(signature_unitary(padded)) == winding_number(signature_unitary(circle))


@pytest.mark.parametrize("sigma", [(0,), (1, 0), (1, 2, 0), (1, 0, 2)])
@pytest.mark.parametrize("k", [1, 2, 3])
def test_suspension_models_validate(sigma, k):
    c = suspension_model(sigma, k).complex
    rep = validate(c)
    assert rep.passed
    assert rep.get("duality-symmetry").max_violation <= 1e-12
    assert rep.get("duality-anticommutation").max_violation <= 1e-12
    assert check_S_identities(c).passed


@given(st.integers(0, 2**31), st.sampled_from(RANK_PATTERNS), st.booleans())
def test_random_complexes_validate(seed, ranks, acyclic):
    c = random_complex(seed, ranks, acyclic)
    if c is None:
        return
    rep = validate(c)
    assert rep.passed
    assert rep.get("duality-symmetry").max_violation <= 1e-12
    assert rep.get("duality-anticommutation").max_violation <= 1e-12
    assert check_acyclic_iff_B_invertible(c).passed
    assert lemma_Q_identities(c).passed
    fc = c.cohomology(c.grid())
    assert fc.acyclic(0) == acyclic


@given(st.integers(0, 2**31), st.sampled_from([(1, 1), (2, 2), (1, 2, 2, 1), (2, 3, 3, 2)]))
def test_signature_unitary_properties(seed, ranks):
    c = random_complex(seed, ranks, False)
    if c is None:
        return
    data = signature_data(c)
    U = data.U.mats[0]
    assert data.U.unitarity_defect() <= 1e-9
    B, S = data.B.matrix.coefficient(0), data.S.matrix.coefficient(0)
    assert np.max(np.abs(U.conj().T - (B - S) @ np.linalg.inv(B + S))) <= 1e-8


@given(st.integers(0, 2**31))
def test_direct_sum_determinant_multiplies(seed):
    rng = np.random.default_rng(seed)
    sig = [(0,), (1, 0), (1, 2, 0)]
    a = suspension_model(sig[rng.integers(3)], int(rng.integers(1, 3))).complex
    b = suspension_model(sig[rng.integers(3)], int(rng.integers(1, 3))).complex
    Ua, Ub, Us = (signature_unitary(x, 64) for x in (a, b, direct_sum(a, b)))
    assert np.max(np.abs(np.linalg.det(Us.mats) - np.linalg.det(Ua.mats) * np.linalg.det(Ub.mats))) < 1e-9
    assert winding_number(Us) == winding_number(Ua) + winding_number(Ub)
