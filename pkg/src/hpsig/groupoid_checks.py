"""Randomized exact checks of the groupoid algebra, module and bimodule identities."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .groupoids import (
    Z_GRADED,
    BimoduleElement,
    ConvElement,
    DiscreteGroupoid,
    GroupoidMorphism,
    bimodule_inner_product,
    bimodule_right_action,
    convolve,
    fully_faithful,
    module_inner_product,
    module_right_action,
    morita_lambda,
    pi_f,
    star_theta_identity,
    theta_h_s,
    theta_h_s_adjoint,
    xi_composition,
)
from .reports import CheckResult, Report

__all__ = ["EXACT", "algebra_checks", "morphism_checks", "pair_checks", "gamma_checks", "is_natural",
           "identity_suite"]

EXACT = 1e-12
POSITIVITY_TOL = 1e-12


def _angles(g: DiscreteGroupoid) -> np.ndarray:
    return np.linspace(0.0, 2 * np.pi, 7, endpoint=False) + 0.1 if g.kind == Z_GRADED else np.zeros(1)


def _result(name: str, vals: list[float], tol: float = EXACT, **details) -> CheckResult:
    worst = max(vals, default=0.0)
    return CheckResult(name, worst, worst <= tol, details={"trials": len(vals), **details})


def algebra_checks(g: DiscreteGroupoid, rng: np.random.Generator, trials: int = 20, band: int = 3) -> Report:
    """Convolution, right action and the module inner product on random elements."""
    rep = Report("groupoid-algebra")
    real, assoc, unit, rt_assoc, ip_rt, ip_sym, ip_real, pos = [], [], [], [], [], [], [], []
    one = ConvElement.unit(g)
    W = np.diag(g.weights)
    for _ in range(trials):
        phi, psi, chi = (g.random_element(rng, 5, band) for _ in range(3))
        xi, eta = (g.random_element(rng, 5, band, on="module") for _ in range(2))
        prod = convolve(phi, psi)
        real.append(max(float(np.max(np.abs(prod.realize(t) - phi.realize(t) @ psi.realize(t))))
                        for t in _angles(g)))
        assoc.append(convolve(prod, chi).distance(convolve(phi, convolve(psi, chi))))
        unit.append(max(convolve(one, phi).distance(phi), convolve(phi, one).distance(phi)))
        rt_assoc.append(module_right_action(module_right_action(xi, phi), psi)
                        .distance(module_right_action(xi, prod)))
        ip_rt.append(module_inner_product(xi, module_right_action(eta, phi))
                     .distance(convolve(module_inner_product(xi, eta), phi)))
        ip_sym.append(module_inner_product(xi, eta).adjoint().distance(module_inner_product(eta, xi)))
        ip = module_inner_product(xi, xi)
        worst = 0.0
        for t in _angles(g):
            m = ip.realize(t)
            rx = xi.realize(t)
            worst = max(worst, float(np.max(np.abs(m - np.conj(rx.T) @ W @ rx))))
            pos.append(-float(np.min(np.linalg.eigvalsh(0.5 * (m + np.conj(m.T))))))
        ip_real.append(worst)
    rep.add(_result("convolution-realization", real))
    rep.add(_result("convolution-associative", assoc))
    rep.add(_result("convolution-unit", unit))
    rep.add(_result("right-action-associative", rt_assoc))
    rep.add(_result("innprod-rtact-compatible", ip_rt))
    rep.add(_result("innprod-conjugate-symmetric", ip_sym))
    rep.add(_result("innprod-realization", ip_real))
    rep.add(CheckResult("innprod-positive", max(pos + [0.0]), max(pos + [0.0]) <= POSITIVITY_TOL,
                        details={"trials": trials, "min_eigenvalue": -max(pos + [0.0])}))
    return rep


def morphism_checks(f: GroupoidMorphism, rng: np.random.Generator, trials: int = 20, band: int = 3,
                    name: str = "f") -> Report:
    """``pi_f`` is a *-representation and, when expected, the theta identity."""
    G = f.source
    rep = Report(f"morphism-{name}")
    hom, adj, theta, ident = [], [], [], []
    ff = fully_faithful(f)
    for _ in range(trials):
        phi, psi = G.random_element(rng, 5, band), G.random_element(rng, 5, band)
        xi, eta, zeta = (G.random_bimodule_element(f, rng, 5, band) for _ in range(3))
        hom.append(pi_f(convolve(phi, psi), xi).distance(pi_f(phi, pi_f(psi, xi))))
        adj.append(bimodule_inner_product(pi_f(phi, xi), eta)
                   .distance(bimodule_inner_product(xi, pi_f(phi.adjoint(), eta))))
        if ff:
            theta.append(star_theta_identity(xi, eta, zeta).max_violation)
        if f.source is f.target and f.object_map == tuple(range(G.m)) and f.degree == 1:
            # identity morphism: bimodule = module under (r(g), g) <-> g
            a = G.random_element(rng, 5, band)
            b = G.random_element(rng, 5, band)
            ba = BimoduleElement(f, {(G.r(k), k): v for k, v in a.values.items() if G.r(k) in G.transversal})
            bb = BimoduleElement(f, {(G.r(k), k): v for k, v in b.values.items() if G.r(k) in G.transversal})
            ident.append(bimodule_inner_product(ba, bb).distance(module_inner_product(a, b)))
    rep.add(_result(f"{name}:pi-homomorphism", hom))
    if np.all(G.weights == 1.0):
        rep.add(_result(f"{name}:pi-adjoint", adj))
    else:
        rep.notes.append(f"{name}: adjointness of pi needs unit weights on the source groupoid; skipped")
    if ff:
        rep.add(_result(f"{name}:theta-identity", theta))
    else:
        rep.notes.append(f"{name}: θ-identity not expected (morphism not bijective on arrows between transversal objects)")
    if ident:
        rep.add(_result(f"{name}:identity-bimodule-is-module", ident))
    return rep


def pair_checks(f: GroupoidMorphism, g: GroupoidMorphism, rng: np.random.Generator, trials: int = 20,
                band: int = 3, name: str = "f,g") -> Report:
    """Balance of the composition product over the middle algebra and the inner-product law."""
    rep = Report(f"composition-{name}")
    mid = f.target
    balance, iso = [], []
    for _ in range(trials):
        xi = f.source.random_bimodule_element(f, rng, 4, band)
        eta = mid.random_bimodule_element(g, rng, 4, band)
        phi = mid.random_element(rng, 4, band)
        lhs = xi_composition(bimodule_right_action(xi, phi), eta)
        rhs = xi_composition(xi, pi_f(phi, eta))
        balance.append(lhs.distance(rhs))
        c = xi_composition(xi, eta)
        iso.append(bimodule_inner_product(c, c).distance(
            bimodule_inner_product(eta, pi_f(bimodule_inner_product(xi, xi), eta))))
    rep.add(_result(f"{name}:composition-balance", balance))
    if np.all(mid.weights == 1.0):
        rep.add(_result(f"{name}:iso-inner-product-law", iso))
    else:
        rep.notes.append(f"{name}: inner-product law needs unit weights on the middle groupoid; skipped")
    return rep


def is_natural(h: GroupoidMorphism, gamma: dict, window: int = 3) -> bool:
    """Whether ``h(a) gamma_{s(a)} = gamma_{r(a)} a`` on arrows between transversal objects."""
    G = h.source
    X = sorted(G.transversal)
    for x in X:
        for y in X:
            arrows = G.arrows_between(x, y) if G.kind != Z_GRADED else G.arrows_between(x, y, window)
            for a in arrows:
                lhs = G.compose(h(a), tuple(gamma[y]))
                rhs = G.compose(tuple(gamma[x]), a)
                if lhs != rhs:
                    return False
    return True


def gamma_checks(h: GroupoidMorphism, gamma: dict, rng: np.random.Generator, trials: int = 20, band: int = 3,
                 name: str = "h") -> Report:
    """Lambda isometry, theta round trips and equivariance for an endomorphism with arrows ``gamma_x : x -> h(x)``."""
    G = h.source
    rep = Report(f"gamma-{name}")
    try:
        theta_h_s(ConvElement(G, {}), h, gamma)
    except ValueError as exc:
        rep.add(CheckResult(f"{name}:gamma-data-consistent", 1.0, False, notes=[str(exc)]))
        return rep
    rep.add(CheckResult(f"{name}:gamma-data-consistent", 0.0, True))
    iso, rt1, rt2, eq = [], [], [], []
    natural = is_natural(h, gamma)
    for _ in range(trials):
        xi, eta = G.random_bimodule_element(h, rng, 5, band), G.random_bimodule_element(h, rng, 5, band)
        lx, le = morita_lambda(xi, gamma), morita_lambda(eta, gamma)
        iso.append(module_inner_product(lx, le).distance(bimodule_inner_product(xi, eta)))
        phi, psi = G.random_element(rng, 5, band), G.random_element(rng, 5, band)
        rt1.append(theta_h_s_adjoint(theta_h_s(phi, h, gamma), gamma).distance(phi))
        rt2.append(theta_h_s(theta_h_s_adjoint(xi, gamma), h, gamma).distance(xi))
        if natural:
            eq.append(pi_f(psi, theta_h_s(phi, h, gamma)).distance(theta_h_s(convolve(psi, phi), h, gamma)))
    rep.add(_result(f"{name}:lambda-isometry", iso))
    rep.add(_result(f"{name}:theta-round-trip", rt1 + rt2))
    if natural:
        rep.add(_result(f"{name}:theta-equivariance", eq))
    else:
        rep.notes.append(f"{name}: gamma is not natural; equivariance not expected")
    return rep


def identity_suite(g: DiscreteGroupoid, morphisms: Sequence[tuple[str, GroupoidMorphism, dict | None]],
                   rng: np.random.Generator, trials: int = 20, band: int = 3) -> Report:
    """All checks for one groupoid and a list of named endomorphisms (with optional gamma data)."""
    rep = Report(f"groupoid-identities ({g.kind}, {g.m} objects)")
    rep.add(algebra_checks(g, rng, trials, band))
    for name, f, gamma in morphisms:
        rep.add(morphism_checks(f, rng, trials, band, name))
        if gamma is not None:
            rep.add(gamma_checks(f, gamma, rng, trials, band, name))
    for n1, f1, _ in morphisms:
        for n2, f2, _ in morphisms:
            rep.add(pair_checks(f1, f2, rng, trials, band, f"{n1},{n2}"))
    return rep
