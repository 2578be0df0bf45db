import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hpsig.groupoid_checks import algebra_checks, gamma_checks, identity_suite, morphism_checks, pair_checks
from hpsig.groupoids import (
    FINITE,
    Z_GRADED,
    ConvElement,
    DiscreteGroupoid,
    GroupoidMorphism,
    convolve,
    fully_faithful,
    homotopy_stage,
    module_inner_product,
    morita_lambda,
    theta_h_s,
)


def pair(m, **kw):
    return DiscreteGroupoid(m, FINITE, **kw)


def zgraded(sigma=(0,)):
    return DiscreteGroupoid(len(sigma), Z_GRADED, sigma=sigma)


def test_matrix_units_multiply():
    g = pair(2)
    prod = convolve(ConvElement.delta(g, (0, 1)), ConvElement.delta(g, (1, 0)))
    assert prod.distance(ConvElement.delta(g, (0, 0))) == 0.0
    assert convolve(ConvElement.delta(g, (0, 1)), ConvElement.delta(g, (0, 1))).is_zero()


def test_shift_arrows_add_degrees():
    g = zgraded()
    prod = convolve(ConvElement.delta(g, (1, 0)), ConvElement.delta(g, (2, 0)))
    assert prod.distance(ConvElement.delta(g, (3, 0))) == 0.0
    assert np.allclose(prod.realize(0.3), np.exp(3j * 0.3))


def test_inner_product_of_delta():
    g = pair(2, weights=[2.0, 1.0])
    d = ConvElement.delta(g, (0, 1))
    assert module_inner_product(d, d).distance(ConvElement.delta(g, (1, 1), 2.0)) == 0.0


def test_inner_product_not_on_other_class():
    g = pair(3, classes=[0, 0, 1])
    assert module_inner_product(ConvElement.delta(g, (0, 1)), ConvElement.delta(g, (2, 2))).is_zero()


@pytest.mark.parametrize("m", [1, 2, 3, 4])
def test_star_isomorphism_with_matrices(m):
    g = pair(m)
    rng = np.random.default_rng(m)
    for _ in range(10):
        a, b = g.random_element(rng, 6), g.random_element(rng, 6)
        assert np.array_equal(convolve(a, b).realize(), a.realize() @ b.realize())
        assert np.array_equal(a.adjoint().realize(), a.realize().conj().T)


def test_non_functorial_map_rejected():
    g = pair(3, classes=[0, 0, 1])
    with pytest.raises(ValueError):
        GroupoidMorphism(g, g, (0, 2, 2))


def test_fully_faithful():
    g = pair(3)
    assert fully_faithful(GroupoidMorphism(g, g, (1, 2, 0)))
    z = zgraded()
    assert not fully_faithful(GroupoidMorphism(z, z, (0,), -2))
    assert fully_faithful(GroupoidMorphism(z, z, (0,), -1))


@pytest.mark.parametrize("m", [2, 3])
def test_pair_groupoid_suite(m):
    g = pair(m)
    morphs = [("id", GroupoidMorphism.identity(g), None),
              ("rot", GroupoidMorphism(g, g, tuple((i + 1) % m for i in range(m))), None)]
    rep = identity_suite(g, morphs, np.random.default_rng(0), trials=20, band=3)
    assert rep.passed
    assert rep.max_violation <= 1e-12


def test_collapse_skips_theta_identity():
    g = pair(3, classes=[0, 0, 1])
    f = GroupoidMorphism(g, g, (0, 0, 0))
    assert not fully_faithful(f)
    rep = morphism_checks(f, np.random.default_rng(1), trials=5, name="collapse")
    assert rep.passed and any("not expected" in n for n in rep.notes)


def test_z_graded_suite():
    g = zgraded()
    morphs = [("id", GroupoidMorphism.identity(g), {0: (0, 0)})]
    for s in (1, 2, 3):
        h, gamma = homotopy_stage(g, s)
        morphs.append((f"shift{s}", h, gamma))
    morphs.append(("reverse", GroupoidMorphism(g, g, (0,), -1), None))
    rep = identity_suite(g, morphs, np.random.default_rng(0), trials=20, band=3)
    assert rep.passed and rep.max_violation <= 1e-12


def test_shift_lambda_on_delta():
    g = zgraded((1, 2, 0))
    h, gamma = homotopy_stage(g, 1)
    xi = theta_h_s(ConvElement.delta(g, (2, 0)), h, gamma)
    assert xi.values == {(2, (3, 0)): 1.0}
    assert morita_lambda(xi, gamma).distance(ConvElement.delta(g, (2, 0))) == 0.0


def test_inconsistent_gamma_is_reported():
    g = pair(3)
    f = GroupoidMorphism(g, g, (1, 2, 0))
    rep = gamma_checks(f, {x: (x, x) for x in range(3)}, np.random.default_rng(0), trials=2)
    assert not rep.passed
    assert not rep.get("h:gamma-data-consistent").passed


def test_weighted_groupoid_notes_skips():
    g = pair(2, weights=[1.0, 3.0])
    f = GroupoidMorphism.identity(g)
    rng = np.random.default_rng(5)
    assert algebra_checks(g, rng, trials=5).passed
    rep = morphism_checks(f, rng, trials=5, name="id")
    assert rep.passed and any("unit weights" in n for n in rep.notes)
    rep = pair_checks(f, f, rng, trials=5, name="id,id")
    assert rep.passed and any("unit weights" in n for n in rep.notes)


@given(st.integers(0, 2**31), st.integers(1, 3), st.integers(1, 3))
def test_algebra_identities_random(seed, m, band):
    for g in (pair(m), zgraded(tuple((i + 1) % m for i in range(m)))):
        rep = algebra_checks(g, np.random.default_rng(seed), trials=3, band=band)
        assert rep.passed and rep.max_violation <= 1e-12
