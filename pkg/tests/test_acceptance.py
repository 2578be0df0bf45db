"""
End-to-end acceptance run.  Each test prints one PASS/FAIL line with the
worst violation seen against its threshold.
"""

import subprocess
import sys
import time

import numpy as np
import pytest

from hpsig.complexes import build_B, build_S, check_acyclic_iff_B_invertible, lemma_Q_identities, signature_data, validate
from hpsig.groupoid_checks import identity_suite
from hpsig.groupoids import Z_GRADED, DiscreteGroupoid, GroupoidMorphism, homotopy_stage
from hpsig.homotopy import resolvent_continuity_check, signature_invariance
from hpsig.models import (
    coarsening_map,
    conjugation_isomorphism,
    parse_permutation,
    prism_homotopy,
    subdivision_equivalence,
    suspension_model,
)
from hpsig.smoothing import (
    STANDARD_PHIS,
    PullbackData,
    chain_homotopy_identity,
    duality_compat_check,
    functoriality_check,
    phi_cohomology_check,
    phi_commutation_check,
    phi_independence_check,
    poincare_identity_check,
    psi_relation_check,
)
from hpsig.suite import random_family, suspension_family
from hpsig.winding import UnitaryLoop, winding_number

N = 256


@pytest.fixture
def verdict(capsys):
    def emit(number: int, title: str, ok: bool, detail: str) -> None:
        with capsys.disabled():
            print(f"\n[criterion {number:2d}] {'PASS' if ok else 'FAIL'}  {title}: {detail}")
        assert ok, detail

    return emit


def _worst(rep, *names):
    return max(rep.get(n).max_violation for n in names)


def test_01_duality_axioms(verdict):
    t0 = time.perf_counter()
    models = [m.complex for m in suspension_family()] + random_family(0, 20)
    coeff, coh_ok = 0.0, True
    for c in models:
        rep = validate(c, N)
        coeff = max(coeff, _worst(rep, "b-squared-zero", "duality-symmetry", "duality-anticommutation"))
        coh_ok &= rep.get("duality-cohomology-iso").passed
    dt = time.perf_counter() - t0
    ok = len(models) == 32 and coeff <= 1e-12 and coh_ok and dt < 10
    verdict(1, "duality axioms", ok, f"{len(models)} models, coefficient violation {coeff:.2e} <= 1e-12, "
            f"cohomology iso {'ok' if coh_ok else 'broken'}, {dt:.1f}s < 10s")


def test_02_bounded_transform(verdict):
    models = [m.complex for m in suspension_family()] + random_family(0, 20)
    models += random_family(0, 10, True) + random_family(0, 10, False)
    worst = max(lemma_Q_identities(c, N).max_violation for c in models)
    verdict(2, "bounded transform identities", worst <= 1e-8, f"worst {worst:.2e} <= 1e-8 on {len(models)} models")


def test_03_acyclicity(verdict):
    agree, matches = True, True
    for flag in (True, False):
        for c in random_family(0, 10, flag):
            res = check_acyclic_iff_B_invertible(c, N)
            agree &= res.passed and res.details["disagreeing_fibers"] == []
            matches &= res.details["acyclic_fibers"] == (res.details["fibers"] if flag else 0)
    verdict(3, "acyclic iff B invertible", agree and matches,
            f"biconditional {'exact' if agree else 'broken'} on 20 complexes, generated kinds "
            f"{'match' if matches else 'mismatch'}")


def test_04_circle_closed_form(verdict):
    U = signature_data(suspension_model("id", 1).complex, N).U
    z = np.exp(1j * U.thetas)
    zb = np.conj(z)
    entries = max(np.max(np.abs(U.mats[:, 0, 0] - (3 * zb - 1) / (zb - 3))),
                  np.max(np.abs(U.mats[:, 1, 1] - (3 * z - 1) / (z - 3))),
                  np.max(np.abs(U.mats[:, 0, 1])), np.max(np.abs(U.mats[:, 1, 0])))
    det = float(np.max(np.abs(np.linalg.det(U.mats) - 1)))
    w = winding_number(U)
    w00 = winding_number(UnitaryLoop(U.thetas, U.mats[:, :1, :1]))
    w11 = winding_number(UnitaryLoop(U.thetas, U.mats[:, 1:, 1:]))
    ok = det <= 1e-9 and entries <= 1e-9 and w == 0 and {w00, w11} == {1, -1}
    verdict(4, "circle model closed form", ok, f"|det-1| {det:.2e} <= 1e-9, entries off by {entries:.2e}, "
            f"winding {w}, diagonal windings {w00} and {w11}")


def test_05_homotopy_invariance(verdict):
    t0 = time.perf_counter()
    sig = parse_permutation("(1 2)(3)")
    cases = [subdivision_equivalence(suspension_model(sig, 1), 2),
             subdivision_equivalence(suspension_model(sig, 2), 2),
             conjugation_isomorphism(parse_permutation("(1 2 3)"), parse_permutation("(1 3)", 3), 1)]
    path, ends, ok = 0.0, 0.0, True
    for A in cases:
        rep = signature_invariance(A, 33, N)
        path = max(path, max(r.max_violation for r in rep.checks if r.check.endswith(("-symmetry", "-anticommutation"))))
        ends = max(ends, rep.get("path-endpoints").max_violation)
        ok &= rep.passed and rep.get("direct-sum-winding-zero").passed and rep.get("endpoint-windings-equal").passed
    dt = time.perf_counter() - t0
    ok &= path <= 1e-10 and ends <= 1e-12 and dt < 30
    verdict(5, "signature invariance", ok, f"path violation {path:.2e} <= 1e-10, endpoints {ends:.2e} <= 1e-12, "
            f"{dt:.1f}s < 30s")


def test_06_resolvent(verdict):
    c = suspension_model("id", 1).complex
    B, S = build_B(c), build_S(c)
    rng = np.random.default_rng(6)
    thetas = c.grid(N)
    worst = 0.0
    for _ in range(20):
        s1, s2 = (float(v) for v in rng.uniform(0.0, 1.0, 2))
        mu = float(rng.uniform(0.25, 2.0))
        worst = max(worst, resolvent_continuity_check(B, lambda s: S * s, mu, s1, s2, thetas).max_violation)
    verdict(6, "resolvent estimate", worst <= 1e-8, f"worst {worst:.2e} <= 1e-8 over 20 draws")


REQUIRED = ("innprod-rtact-compatible", "composition-balance", "theta-identity", "iso-inner-product-law",
            "lambda-isometry", "theta-round-trip")


def test_07_groupoid_identities(verdict):
    def along(f):
        return {x: (f.object_map[x], x) for x in range(f.source.m)}

    cases = []
    for m in (2, 3):
        P = DiscreteGroupoid(m)
        rot = GroupoidMorphism(P, P, tuple((i + 1) % m for i in range(m)))
        ident = GroupoidMorphism.identity(P)
        cases.append((P, [("id", ident, along(ident)), ("rot", rot, along(rot))]))
    Z = DiscreteGroupoid(1, Z_GRADED, sigma=(0,))
    cases.append((Z, [(f"shift{s}", *homotopy_stage(Z, s)) for s in (0, 1, 3)]))
    worst, seen, ok = 0.0, set(), True
    rng = np.random.default_rng(7)
    for g, items in cases:
        rep = identity_suite(g, items, rng, trials=20, band=3)
        ok &= rep.passed
        for r in rep.checks:
            key = r.check.split(":")[-1]
            if key in REQUIRED:
                seen.add((g.kind, g.m, key))
                ok &= r.details["trials"] >= 20
                worst = max(worst, r.max_violation)
    missing = [(g.kind, g.m, k) for g, _ in cases for k in REQUIRED if (g.kind, g.m, k) not in seen]
    ok &= not missing and worst <= 1e-12
    verdict(7, "groupoid identities", ok, f"worst {worst:.2e} <= 1e-12, missing {missing or 'none'}")


def test_08_smoothing(verdict):
    models = [m.complex for m in suspension_family()] + random_family(0, 5)
    comm = coh = hom = 0.0
    for c in models:
        for phi in STANDARD_PHIS:
            comm = max(comm, phi_commutation_check(phi, c).max_violation, psi_relation_check(phi, c).max_violation)
            hom = max(hom, chain_homotopy_identity(phi, c).max_violation)
            coh = max(coh, phi_cohomology_check(phi, c, N).max_violation)
    ok = comm <= 1e-12 and coh <= 1e-8 and hom <= 1e-10
    verdict(8, "Laplacian smoothing", ok, f"commutation {comm:.2e} <= 1e-12, cohomology {coh:.2e} <= 1e-8, "
            f"homotopy {hom:.2e} <= 1e-10")


def _chain():
    sig = parse_permutation("(1 2)(3)")
    m1, m2 = suspension_model(sig, 1), suspension_model(sig, 2)
    return m1, m2, subdivision_equivalence(m1, 2), subdivision_equivalence(m2, 2)


def test_09_pullback_functoriality(verdict):
    _, _, A12, A24 = _chain()
    A14 = A12.then(A24)
    indep = 0.0
    for A in (A12, A24, A14):
        data = PullbackData.from_chain_map(A)
        indep = max(indep, phi_independence_check(data, STANDARD_PHIS[0], STANDARD_PHIS[2], N).max_violation,
                    phi_independence_check(data, STANDARD_PHIS[0], STANDARD_PHIS[1], N).max_violation)
    f, g, gf = (PullbackData.from_chain_map(A) for A in (A24, A12, A14))
    func = max(functoriality_check(f, g, gf, phi, N).max_violation for phi in STANDARD_PHIS)
    ok = indep <= 1e-8 and func <= 1e-8
    verdict(9, "pull-back independence and functoriality", ok,
            f"phi independence {indep:.2e} <= 1e-8, routes differ by {func:.2e} <= 1e-8")


def test_10_poincare_and_duality(verdict):
    m1, m2, A12, _ = _chain()
    R = coarsening_map(m1, 2)
    a, r = A12.A, R.A
    coarse = PullbackData(m1.complex, m1.complex, [r[p] @ a[p] for p in range(2)])
    fine = PullbackData(m2.complex, m2.complex, [a[p] @ r[p] for p in range(2)])
    K = [prism_homotopy(m1, 2)]
    fd, gd = PullbackData.from_chain_map(A12), PullbackData.from_chain_map(R)
    ident = duality = 0.0
    control_fails = True
    for phi in STANDARD_PHIS:
        ident = max(ident, poincare_identity_check(coarse, phi, None, N).max_violation,
                    poincare_identity_check(fine, phi, K, N).max_violation)
        duality = max(duality, duality_compat_check(fd, phi, gd, N).max_violation)
        control_fails &= not duality_compat_check(fd, phi, gd, N, negate_sign=True).passed
    ok = ident <= 1e-10 and duality <= 1e-8 and control_fails
    verdict(10, "round-trip identity and duality compatibility", ok,
            f"identity {ident:.2e} <= 1e-10, duality {duality:.2e} <= 1e-8, "
            f"negated sign {'rejected' if control_fails else 'accepted'}")


def test_11_determinism(verdict, tmp_path):
    outs, times = [], []
    for i in range(2):
        t0 = time.perf_counter()
        proc = subprocess.run([sys.executable, "-m", "hpsig.cli", "suite", "--seed", "0"],
                              capture_output=True, cwd=tmp_path)
        times.append(time.perf_counter() - t0)
        outs.append(proc.stdout)
        assert proc.returncode == 0, proc.stderr.decode()
    same = outs[0] == outs[1] and len(outs[0]) > 0
    ok = same and max(times) < 60
    verdict(11, "end-to-end determinism", ok, f"reports {'byte-identical' if same else 'differ'}, "
            f"runs took {times[0]:.1f}s and {times[1]:.1f}s < 60s")
