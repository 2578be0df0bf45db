import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hpsig.complexes import validate
from hpsig.homotopy import ChainMap
from hpsig.loops import AlgebraElement
from hpsig.models import (
    acyclic_padding,
    coarsening_map,
    compose_permutations,
    conjugate_permutation,
    conjugation_isomorphism,
    cycle_graph_complex,
    format_permutation,
    parse_permutation,
    permutation_cycles,
    prism_homotopy,
    random_hp_complex,
    subdivision_equivalence,
    suspension_model,
)

SIGMAS = ["id", "(1 2)", "(1 2 3)", "(1 2)(3)"]


def loop(terms):
    return AlgebraElement.from_terms(terms)


def test_parse_and_format():
    assert parse_permutation("(1 2)(3)") == (1, 0, 2)
    assert parse_permutation("(1,3,2)") == (2, 0, 1)
    assert parse_permutation("id", 3) == (0, 1, 2)
    assert format_permutation((1, 2, 0)) == "(1 2 3)"
    with pytest.raises(ValueError):
        parse_permutation("(1 1)")


def test_cycles_and_conjugation():
    assert permutation_cycles((1, 0, 2)) == [[0, 1], [2]]
    tau = (2, 1, 0)
    sigma = (1, 2, 0)
    conj = conjugate_permutation(sigma, tau)
    inv = tuple(int(i) for i in np.argsort(tau))
    assert conj == compose_permutations(tau, compose_permutations(sigma, inv))
    assert conj == (2, 0, 1)


def test_circle_model_matches_closed_form(circle_model):
    c = circle_model.complex
    assert c.b[0].matrix.distance(loop({1: [[1.0]], 0: [[-1.0]]})) == 0.0
    assert c.T[0].matrix.distance(loop({0: [[0.5]], 1: [[0.5]]})) == 0.0
    assert c.T[1].matrix.distance(loop({0: [[0.5]], -1: [[0.5]]})) == 0.0


def test_two_vertex_leaf_pattern():
    b = suspension_model("id", 2).complex.b[0].matrix
    assert b.distance(loop({0: [[-1.0, 1.0], [0.0, -1.0]], 1: [[0.0, 0.0], [1.0, 0.0]]})) == 0.0


def test_transposition_gauge():
    # one leaf through both points, z on the edge closing the cycle
    a = suspension_model("(1 2)").complex.b[0].matrix
    b = suspension_model("id", 2).complex.b[0].matrix
    assert a.distance(b) == 0.0


@pytest.mark.parametrize("sigma,k,sizes", [("id", 1, [1]), ("(1 2)", 1, [2]), ("(1 2 3)", 2, [6]),
                                           ("(1 2)(3)", 3, [6, 3])])
def test_block_structure(sigma, k, sizes):
    m = suspension_model(sigma, k)
    assert m.block_sizes == sizes
    assert m.complex.ranks == [sum(sizes)] * 2


@pytest.mark.parametrize("sigma", SIGMAS)
@pytest.mark.parametrize("k,f", [(1, 2), (2, 2), (1, 3)])
def test_subdivision_and_coarsening(sigma, k, f):
    m = suspension_model(sigma, k)
    A = subdivision_equivalence(m, f)
    R = coarsening_map(m, f)
    assert A.check().passed and R.check().passed
    RA = A.then(R)
    assert all(x.distance(ChainMap.identity(m.complex).A[p]) == 0.0 for p, x in enumerate(RA.A))
    K = prism_homotopy(m, f)
    fine = A.target
    b = fine.b[0]
    AR = R.then(A)
    eye = ChainMap.identity(fine).A
    assert (AR.A[0] - eye[0]).distance(K @ b) < 1e-14
    assert (AR.A[1] - eye[1]).distance(b @ K) < 1e-14


def test_subdivision_factor_one_is_identity(circle_model):
    assert subdivision_equivalence(circle_model, 1).is_identity()


@pytest.mark.parametrize("sigma,tau", [((1, 2, 0), (0, 2, 1)), ((1, 0, 2), (2, 1, 0)), ((1, 2, 0), (1, 2, 0))])
def test_conjugation_is_unitary_chain_iso(sigma, tau):
    A = conjugation_isomorphism(sigma, tau)
    assert A.check().passed
    for a in A.A:
        eye = AlgebraElement.identity(a.matrix.shape[1])
        assert (a.matrix.adjoint() @ a.matrix).distance(eye) < 1e-14
    assert validate(A.target).passed


def test_conjugation_picks_up_gauge():
    A = conjugation_isomorphism((1, 2, 0), (1, 2, 0))
    assert A.A[0].matrix.band == 1


def test_cycle_graph():
    c = cycle_graph_complex(5)
    assert validate(c).passed
    with pytest.raises(ValueError):
        cycle_graph_complex(4)


def test_empty_random_complex():
    c = random_hp_complex(0, [0, 0])
    assert c.total_rank == 0


def test_impossible_ranks():
    with pytest.raises(ValueError):
        random_hp_complex(0, [1, 2])
    with pytest.raises(ValueError):
        random_hp_complex(0, [1, 1, 1], acyclic=True)


def test_padding(circle_model):
    padded = acyclic_padding(circle_model.complex, [2, 2], seed=1)
    assert padded.ranks == [3, 3] and validate(padded).passed


@given(st.integers(0, 2**31))
def test_random_complexes_are_reproducible(seed):
    a = random_hp_complex(seed, [2, 2])
    b = random_hp_complex(seed, [2, 2])
    assert a.b[0].distance(b.b[0]) == 0.0 and a.T[0].distance(b.T[0]) == 0.0
