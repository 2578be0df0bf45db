"""
The full verification run: every family of checks on the standard models,
collected into one deterministic JSON report.

Each numbered section is self-contained and returns a ``Section`` with
compact check records (name, worst violation, pass flag).  Per-fiber
arrays are left out so the report stays small; the subcommands that run a
single check emit them.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .complexes import (
    HPComplexData,
    build_S,
    build_B,
    check_acyclic_iff_B_invertible,
    lemma_Q_identities,
    signature_data,
    validate,
)
from .groupoid_checks import identity_suite
from .groupoids import FINITE, Z_GRADED, DiscreteGroupoid, GroupoidMorphism, homotopy_stage
from .homotopy import resolvent_continuity_check, signature_invariance
from .loops import DEFAULT_SAMPLES
from .models import (
    _image_ranks,
    coarsening_map,
    conjugation_isomorphism,
    parse_permutation,
    prism_homotopy,
    random_hp_complex,
    subdivision_equivalence,
    suspension_model,
)
from .modules import ModuleMap
from .reports import CheckResult, Report, clean
from .smoothing import (
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
from .winding import UnitaryLoop, winding_number

__all__ = ["Section", "SUITE_SECTIONS", "run_suite", "suspension_family", "random_family"]

SUSPENSION_SIGMAS = ("id", "(1 2)", "(1 2 3)", "(1 2)(3)")
SUSPENSION_KS = (1, 2, 3)


@dataclass
class Section:
    number: int
    title: str
    checks: list[dict] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return all(c["pass"] for c in self.checks) and bool(self.checks)

    def add(self, item: CheckResult | Report, context: str = "") -> None:
        checks = item.checks if isinstance(item, Report) else [item]
        for c in checks:
            name = f"{context}: {c.check}" if context else c.check
            self.checks.append({"check": name, "max_violation": clean(c.max_violation), "pass": bool(c.passed)})
        self.notes.extend(f"{context}: {n}" if context else n for n in item.notes)

    def record(self, name: str, value: float, passed: bool) -> None:
        self.checks.append({"check": name, "max_violation": clean(float(value)), "pass": bool(passed)})

    def to_json(self, timings: bool = False) -> dict:
        worst = max((c["max_violation"] for c in self.checks if isinstance(c["max_violation"], float)),
                    default=0.0)
        out = {"section": self.number, "title": self.title, "pass": self.passed,
               "max_violation": worst, "checks": self.checks}
        if self.notes:
            out["notes"] = self.notes
        if timings:
            out["seconds"] = round(self.seconds, 3)
        return out


# ----------------------------------------------------------------------
# model families


def suspension_family() -> list:
    return [suspension_model(parse_permutation(s), k) for s in SUSPENSION_SIGMAS for k in SUSPENSION_KS]


def _draw_complex(rng: np.random.Generator, acyclic: bool | None) -> HPComplexData:
    """A random complex of length 1 to 3 with ranks up to 3; ``acyclic=None`` lets the generator choose."""
    while True:
        n = int(rng.integers(1, 4))
        ranks = [int(r) for r in rng.integers(1, 4, size=n + 1)]
        want = bool(rng.integers(2)) if acyclic is None else acyclic
        if not _image_ranks(ranks, want):
            continue
        try:
            return random_hp_complex(int(rng.integers(2**31)), ranks, acyclic=want)
        except ValueError:
            continue


def random_family(seed: int, count: int = 20, acyclic: bool | None = None) -> list[HPComplexData]:
    rng = np.random.default_rng([seed, count, {None: 0, True: 1, False: 2}[acyclic]])
    return [_draw_complex(rng, acyclic) for _ in range(count)]


def circle_model() -> HPComplexData:
    return suspension_model((0,), 1).complex


# ----------------------------------------------------------------------
# sections


def section_axioms(seed: int, n_samples: int) -> Section:
    sec = Section(1, "duality axioms on suspension models and random complexes")
    for m in suspension_family():
        sec.add(validate(m.complex, n_samples), m.complex.label)
    for c in random_family(seed):
        sec.add(validate(c, n_samples), c.label)
    return sec


def section_q_lemma(seed: int, n_samples: int) -> Section:
    sec = Section(2, "bounded transform identities")
    models = [m.complex for m in suspension_family()] + random_family(seed)
    models += random_family(seed, 10, True) + random_family(seed, 10, False)
    for c in models:
        sec.add(lemma_Q_identities(c, n_samples), c.label)
    return sec


def section_acyclicity(seed: int, n_samples: int) -> Section:
    sec = Section(3, "acyclicity versus invertibility of B")
    for flag in (True, False):
        for c in random_family(seed, 10, flag):
            res = check_acyclic_iff_B_invertible(c, n_samples)
            sec.add(res, c.label)
            n_acyc = res.details["acyclic_fibers"]
            expected = res.details["fibers"] if flag else 0
            sec.record(f"{c.label}: generated {'acyclic' if flag else 'non-acyclic'}", abs(n_acyc - expected),
                       n_acyc == expected)
    return sec


def _scalar_loop(thetas: np.ndarray, values: np.ndarray) -> UnitaryLoop:
    return UnitaryLoop(thetas, values.reshape(-1, 1, 1))


def section_circle(seed: int, n_samples: int) -> Section:
    sec = Section(4, "closed form on the circle model")
    c = circle_model()
    data = signature_data(c, n_samples)
    U = data.U
    th = U.thetas
    z = np.exp(1j * th)
    zb = np.conj(z)
    expect00 = (3 * zb - 1) / (zb - 3)
    expect11 = (3 * z - 1) / (z - 3)
    v = max(float(np.max(np.abs(U.mats[:, 0, 0] - expect00))), float(np.max(np.abs(U.mats[:, 1, 1] - expect11))),
            float(np.max(np.abs(U.mats[:, 0, 1]))), float(np.max(np.abs(U.mats[:, 1, 0]))))
    sec.record("entries match closed form", v, v <= 1e-9)
    det = float(np.max(np.abs(np.linalg.det(U.mats) - 1.0)))
    sec.record("det identically 1", det, det <= 1e-9)
    w = winding_number(U)
    sec.record("signature winding 0", abs(w), w == 0)
    w00 = winding_number(_scalar_loop(th, U.mats[:, 0, 0]))
    w11 = winding_number(_scalar_loop(th, U.mats[:, 1, 1]))
    sec.record("entry 00 winds -1", abs(w00 + 1), w00 == -1)
    sec.record("entry 11 winds +1", abs(w11 - 1), w11 == 1)
    sec.record("unitarity", U.unitarity_defect(), U.unitarity_defect() <= 1e-9)
    if data.polar_corrected:
        sec.notes.append("polar correction applied")
    return sec


def _equivalences():
    m1 = suspension_model(parse_permutation("(1 2)(3)"), 1)
    m2 = suspension_model(parse_permutation("(1 2)(3)"), 2)
    yield "subdivide k=1 to k=2", subdivision_equivalence(m1, 2)
    yield "subdivide k=2 to k=4", subdivision_equivalence(m2, 2)
    yield "relabel (1 2 3) by (1 3)", conjugation_isomorphism(parse_permutation("(1 2 3)"),
                                                             parse_permutation("(1 3)", 3), 1)


def section_invariance(seed: int, n_samples: int) -> Section:
    sec = Section(5, "signature invariance along duality paths")
    for name, A in _equivalences():
        sec.add(signature_invariance(A, n_samples=n_samples), name)
    return sec


def section_resolvent(seed: int, n_samples: int) -> Section:
    sec = Section(6, "resolvent estimate on the circle model")
    c = circle_model()
    B, S = build_B(c), build_S(c)
    rng = np.random.default_rng([seed, 6])
    thetas = c.grid(n_samples)
    for i in range(20):
        s1, s2 = (float(v) for v in rng.uniform(0.0, 1.0, size=2))
        mu = (1.0, 0.5)[int(rng.integers(2))]
        res = resolvent_continuity_check(B, lambda s: S * s, mu, s1, s2, thetas)
        sec.add(res, f"trial {i} (s1={s1:.4f}, s2={s2:.4f}, mu={mu})")
    return sec


def _groupoid_cases():
    P2, P3 = DiscreteGroupoid(2), DiscreteGroupoid(3)
    swap = GroupoidMorphism(P2, P2, (1, 0))
    rot = GroupoidMorphism(P3, P3, (1, 2, 0))
    collapse = GroupoidMorphism(P3, P3, (0, 0, 1))

    def along(f):
        return {x: (f.object_map[x], x) for x in range(f.source.m)}

    yield "pair groupoid m=2", P2, [
        ("id", GroupoidMorphism.identity(P2), along(GroupoidMorphism.identity(P2))),
        ("swap", swap, along(swap)),
    ]
    yield "pair groupoid m=3", P3, [
        ("id", GroupoidMorphism.identity(P3), along(GroupoidMorphism.identity(P3))),
        ("rotate", rot, along(rot)),
        ("collapse", collapse, along(collapse)),
    ]
    Z = DiscreteGroupoid(1, Z_GRADED, sigma=(0,))
    items = [("id", GroupoidMorphism.identity(Z), {0: (0, 0)})]
    for s in (1, 2, 3):
        h, gamma = homotopy_stage(Z, s)
        items.append((f"shift {s}", h, gamma))
    items.append(("reverse", GroupoidMorphism(Z, Z, (0,), -1), None))
    yield "z-graded one object", Z, items


def section_groupoids(seed: int, n_samples: int) -> Section:
    sec = Section(7, "groupoid algebra, module and bimodule identities")
    rng = np.random.default_rng([seed, 7])
    for name, g, items in _groupoid_cases():
        sec.add(identity_suite(g, items, rng, trials=20, band=3), name)
    return sec


def section_smoothing(seed: int, n_samples: int) -> Section:
    sec = Section(8, "smoothing by functions of the Laplacian")
    models = [m.complex for m in suspension_family()] + random_family(seed, 5)
    for c in models:
        for phi in STANDARD_PHIS:
            ctx = f"{c.label} phi={phi.label()}"
            sec.add(phi_commutation_check(phi, c), ctx)
            sec.add(psi_relation_check(phi, c), ctx)
            sec.add(chain_homotopy_identity(phi, c), ctx)
            sec.add(phi_cohomology_check(phi, c, n_samples), ctx)
    return sec


def _subdivision_chain():
    m1 = suspension_model(parse_permutation("(1 2)(3)"), 1)
    m2 = suspension_model(parse_permutation("(1 2)(3)"), 2)
    return m1, m2, subdivision_equivalence(m1, 2), subdivision_equivalence(m2, 2)


def section_pullback(seed: int, n_samples: int) -> Section:
    sec = Section(9, "pull-back independence and functoriality")
    m1, m2, A12, A24 = _subdivision_chain()
    A14 = A12.then(A24)
    phis = STANDARD_PHIS
    for A in (A12, A24, A14):
        data = PullbackData.from_chain_map(A)
        for i in range(len(phis)):
            for j in range(i + 1, len(phis)):
                sec.add(phi_independence_check(data, phis[i], phis[j], n_samples), A.label)
    f, g, gf = (PullbackData.from_chain_map(A) for A in (A24, A12, A14))
    for phi in phis:
        sec.add(functoriality_check(f, g, gf, phi, n_samples), f"k=1 to 2 to 4 phi={phi.label()}")
    return sec


def section_poincare(seed: int, n_samples: int) -> Section:
    sec = Section(10, "round-trip identity and duality compatibility")
    m1, m2, A12, _ = _subdivision_chain()
    R = coarsening_map(m1, 2)
    K = prism_homotopy(m1, 2)
    a, r = A12.A, R.A
    trip_121 = PullbackData(m1.complex, m1.complex, [r[p] @ a[p] for p in range(2)], label="k=1 to 2 to 1")
    trip_212 = PullbackData(m2.complex, m2.complex, [a[p] @ r[p] for p in range(2)], label="k=2 to 1 to 2")
    fd = PullbackData.from_chain_map(A12)
    gd = PullbackData.from_chain_map(R)
    for phi in STANDARD_PHIS:
        sec.add(poincare_identity_check(trip_121, phi, None, n_samples), f"{trip_121.label} phi={phi.label()}")
        sec.add(poincare_identity_check(trip_212, phi, [K], n_samples), f"{trip_212.label} phi={phi.label()}")
        sec.add(duality_compat_check(fd, phi, gd, n_samples), f"duality phi={phi.label()}")
        control = duality_compat_check(fd, phi, gd, n_samples, negate_sign=True).get("gamma-sign-rule-negated")
        sec.record(f"duality phi={phi.label()}: negated sign is rejected", control.max_violation,
                   not control.passed)
    return sec


SUITE_SECTIONS = (
    section_axioms,
    section_q_lemma,
    section_acyclicity,
    section_circle,
    section_invariance,
    section_resolvent,
    section_groupoids,
    section_smoothing,
    section_pullback,
    section_poincare,
)


def run_suite(seed: int = 0, n_samples: int = DEFAULT_SAMPLES, only: list[int] | None = None) -> list[Section]:
    out = []
    for number, fn in enumerate(SUITE_SECTIONS, start=1):
        if only is not None and number not in only:
            continue
        t0 = time.perf_counter()
        sec = fn(seed, n_samples)
        sec.seconds = time.perf_counter() - t0
        out.append(sec)
    return out
