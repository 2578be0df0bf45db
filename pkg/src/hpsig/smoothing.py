"""
Polynomial smoothing of the Laplacian and pull-back maps between models.

``phi`` is a polynomial with ``phi(0) = 1`` and ``psi(x) = (phi(x) - 1)/x``.
Then ``phi(Delta) - I = b (psi(Delta) b^*) + (psi(Delta) b^*) b`` so
``phi(Delta)`` is a chain map inducing the identity on cohomology.
Pull-backs are ``eps o Psi o phi(Delta')`` for a chain-level map ``Psi``
from the target model's cochains to the source model's.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .complexes import HPComplexData
from .fibers import SVD_TOL, FiberCohomology, min_singular
from .loops import DEFAULT_SAMPLES, LOOP, MATRIX, AlgebraElement
from .modules import ModuleMap
from .reports import CheckResult, Report

__all__ = [
    "SmoothingPolynomial",
    "PullbackData",
    "laplacian",
    "laplacian_blocks",
    "apply_phi",
    "phi_blocks",
    "phi_commutation_check",
    "psi_relation_check",
    "phi_cohomology_check",
    "chain_homotopy_identity",
    "pullback",
    "pullback_check",
    "phi_independence_check",
    "functoriality_check",
    "poincare_identity_check",
    "duality_compat_check",
    "STANDARD_PHIS",
]

COEFF_TOL = 1e-12
HOMOTOPY_TOL = 1e-10
COHOMOLOGY_TOL = 1e-8


@dataclass(frozen=True)
class SmoothingPolynomial:
    """``phi(x) = sum_i coeffs[i] x^i`` with ``coeffs[0] == 1``."""

    coeffs: tuple

    def __post_init__(self):
        c = tuple(complex(v) if isinstance(v, complex) else float(v) for v in self.coeffs)
        if not c or c[0] != 1:
            raise ValueError("phi(0) must equal 1")
        while len(c) > 1 and c[-1] == 0:
            c = c[:-1]
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def parse(cls, text: str) -> "SmoothingPolynomial":
        """
        Parse expressions such as ``"1-x"``, ``"1 - 2x + x^2"`` or
        ``"1-x/8"``; coefficients may be integers, decimals or fractions.
        """
        s = text.replace(" ", "").replace("**", "^").replace("*", "")
        if not s:
            raise ValueError("empty polynomial")
        if s[0] not in "+-":
            s = "+" + s
        terms = re.findall(r"[+-][^+-]+", s)
        if "".join(terms) != s:
            raise ValueError(f"cannot parse polynomial {text!r}")
        out: dict[int, Fraction] = {}
        pat = re.compile(r"([+-])(\d+(?:\.\d+)?(?:/\d+)?)?(x(?:\^(\d+))?)?(?:/(\d+(?:\.\d+)?))?")
        for t in terms:
            m = pat.fullmatch(t)
            if not m or (m.group(2) is None and m.group(3) is None):
                raise ValueError(f"cannot parse term {t!r} in {text!r}")
            coef = Fraction(m.group(2)) if m.group(2) else Fraction(1)
            if m.group(5):
                coef /= Fraction(m.group(5))
            if m.group(1) == "-":
                coef = -coef
            power = 0 if m.group(3) is None else int(m.group(4) or 1)
            out[power] = out.get(power, Fraction(0)) + coef
        deg = max(out)
        return cls(tuple(float(out.get(i, 0)) for i in range(deg + 1)))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def psi(self) -> tuple:
        """Coefficients of ``(phi(x) - 1)/x``."""
        return self.coeffs[1:] or (0.0,)

    def __call__(self, x):
        acc = 0 * x + self.coeffs[-1]
        for c in reversed(self.coeffs[:-1]):
            acc = acc * x + c
        return acc

    def label(self) -> str:
        parts = []
        for i, c in enumerate(self.coeffs):
            if c == 0:
                continue
            mono = "" if i == 0 else ("x" if i == 1 else f"x^{i}")
            cs = f"{c:g}"
            if mono and cs in ("1", "-1"):
                cs = cs[:-1]
            parts.append(f"{cs}{mono}")
        return "+".join(parts).replace("+-", "-")


STANDARD_PHIS = (
    SmoothingPolynomial((1.0, -1.0)),
    SmoothingPolynomial((1.0, -2.0, 1.0)),
    SmoothingPolynomial((1.0, -0.125)),
)


def _horner(coeffs: Sequence, X: ModuleMap) -> ModuleMap:
    eye = ModuleMap.identity(X.domain)
    acc = eye * coeffs[-1]
    for c in reversed(coeffs[:-1]):
        acc = acc @ X + eye * c
    return acc


def laplacian_blocks(c: HPComplexData) -> list[ModuleMap]:
    """``Delta_p = b_p^* b_p + b_{p-1} b_{p-1}^*`` on each ``E_p``."""
    out = []
    for p in range(c.n + 1):
        d = ModuleMap.zero(c.module(p), c.module(p))
        if p < c.n:
            d = d + c.b[p].adjoint() @ c.b[p]
        if p > 0:
            d = d + c.b[p - 1] @ c.b[p - 1].adjoint()
        out.append(d)
    return out


def laplacian(c: HPComplexData) -> ModuleMap:
    """``(b + b^*)^2`` on the total module."""
    B = c.b_total() + c.b_total().adjoint()
    return B @ B


def phi_blocks(phi: SmoothingPolynomial, c: HPComplexData) -> list[ModuleMap]:
    return [_horner(phi.coeffs, d) for d in laplacian_blocks(c)]


def apply_phi(phi: SmoothingPolynomial, c: HPComplexData) -> ModuleMap:
    return _horner(phi.coeffs, laplacian(c))


def phi_commutation_check(phi: SmoothingPolynomial, c: HPComplexData, tol: float = COEFF_TOL) -> CheckResult:
    P = apply_phi(phi, c)
    b = c.b_total()
    v = max((P @ b - b @ P).max_abs(), (P @ b.adjoint() - b.adjoint() @ P).max_abs())
    return CheckResult("phi-commutes-with-b", v, v <= tol, details={"phi": phi.label()})


def psi_relation_check(phi: SmoothingPolynomial, c: HPComplexData, tol: float = COEFF_TOL) -> CheckResult:
    D = laplacian(c)
    eye = ModuleMap.identity(D.domain)
    v = (apply_phi(phi, c) - eye - D @ _horner(phi.psi, D)).max_abs()
    return CheckResult("psi-relation", v, v <= tol, details={"phi": phi.label()})


def chain_homotopy_identity(phi: SmoothingPolynomial, c: HPComplexData, tol: float = HOMOTOPY_TOL) -> CheckResult:
    """``phi(Delta) - I = b h + h b`` with ``h = psi(Delta) b^*``."""
    D = laplacian(c)
    b = c.b_total()
    h = _horner(phi.psi, D) @ b.adjoint()
    eye = ModuleMap.identity(D.domain)
    v = (apply_phi(phi, c) - eye - (b @ h + h @ b)).max_abs()
    return CheckResult("chain-homotopy-identity", v, v <= tol, details={"phi": phi.label()})


def _harmonic_compare(fc_src: FiberCohomology, fc_dst: FiberCohomology, deg_src: int, deg_dst: int,
                      x: np.ndarray, y: np.ndarray | None) -> list[float]:
    """Per fiber, the largest entry of ``H_dst^* (x - y) H_src`` (``y=None`` compares with the identity)."""
    per = []
    for j in range(fc_src.n_fibers):
        hs, hd = fc_src.harmonic(deg_src, j), fc_dst.harmonic(deg_dst, j)
        m = np.conj(hd.T) @ x[j] @ hs
        if y is None:
            target = np.eye(*m.shape)
        else:
            target = np.conj(hd.T) @ y[j] @ hs
        per.append(float(np.max(np.abs(m - target))) if m.size else 0.0)
    return per


def phi_cohomology_check(phi: SmoothingPolynomial, c: HPComplexData, n_samples: int = DEFAULT_SAMPLES,
                         tol: float = COHOMOLOGY_TOL, svd_tol: float = SVD_TOL) -> CheckResult:
    thetas = c.grid(n_samples)
    fc = c.cohomology(thetas, svd_tol)
    per = np.zeros(len(thetas))
    for p, blk in enumerate(phi_blocks(phi, c)):
        per = np.maximum(per, _harmonic_compare(fc, fc, p, p, blk.matrix.evaluate(thetas), None))
    worst = float(np.max(per)) if per.size else 0.0
    return CheckResult("phi-identity-on-cohomology", worst, worst <= tol, per_fiber=per.tolist(),
                       details={"phi": phi.label()})


# ----------------------------------------------------------------------
# pull-backs


@dataclass
class PullbackData:
    """
    Chain-level data of a pull-back along ``f : X -> X'``.

    ``psi[p] : E'_p -> E_p`` maps cochains of the target model to cochains
    of the source model; ``epsilon[p] : E_p -> E_p`` is the identification
    applied afterwards (identity when omitted).
    """

    source: HPComplexData
    target: HPComplexData
    psi: list[ModuleMap]
    epsilon: list[ModuleMap] | None = None
    label: str = ""

    def __post_init__(self):
        if self.source.n != self.target.n or len(self.psi) != self.source.n + 1:
            raise ValueError("pull-back data has the wrong length")
        for p, m in enumerate(self.psi):
            if m.matrix.shape != (self.source.ranks[p], self.target.ranks[p]):
                raise ValueError(f"psi[{p}] has shape {m.matrix.shape}")
        if self.epsilon is None:
            self.epsilon = [ModuleMap.identity(self.source.module(p)) for p in range(self.source.n + 1)]

    @classmethod
    def from_chain_map(cls, A, label: str | None = None) -> "PullbackData":
        """Read a chain map ``E' -> E`` as the pull-back of a map ``X -> X'``."""
        return cls(A.target, A.source, list(A.A), label=A.label if label is None else label)

    def chain_defect(self) -> float:
        worst = 0.0
        for p in range(self.source.n):
            lhs = self.psi[p + 1] @ self.target.b[p]
            rhs = self.source.b[p] @ self.psi[p]
            worst = max(worst, lhs.distance(rhs))
        return worst

    def then(self, other: "PullbackData") -> "PullbackData":
        """Data for ``other o f`` where ``other`` starts at this target: ``Psi_f o Psi_other``."""
        psi = [a @ b for a, b in zip(self.psi, other.psi)]
        return PullbackData(self.source, other.target, psi, label=f"{self.label};{other.label}")


def pullback(data: PullbackData, phi: SmoothingPolynomial, tol: float = COEFF_TOL) -> list[ModuleMap]:
    """``f^*_phi = eps o Psi o phi(Delta')`` per degree."""
    defect = data.chain_defect()
    if defect > tol:
        raise ValueError(f"Psi is not a chain map (defect {defect:.3g})")
    smooth = phi_blocks(phi, data.target)
    return [e @ s @ d for e, s, d in zip(data.epsilon, data.psi, smooth)]


def _grid_for(*complexes: HPComplexData, n_samples: int) -> np.ndarray:
    kind = LOOP if any(c.kind == LOOP for c in complexes) else MATRIX
    return complexes[0].grid(n_samples) if kind == complexes[0].kind else complexes[-1].grid(n_samples)


def _eval(maps: list[ModuleMap], thetas: np.ndarray) -> list[np.ndarray]:
    out = []
    for m in maps:
        v = m.matrix.evaluate(thetas)
        out.append(np.broadcast_to(v, (len(thetas),) + v.shape[1:]) if v.shape[0] != len(thetas) else v)
    return out


def pullback_check(data: PullbackData, phi: SmoothingPolynomial, n_samples: int = DEFAULT_SAMPLES,
                   svd_tol: float = SVD_TOL) -> Report:
    """Chain-map property and fiberwise cohomology isomorphism of ``f^*_phi``."""
    rep = Report("pullback")
    fstar = pullback(data, phi)
    worst = 0.0
    for p in range(data.source.n):
        worst = max(worst, (fstar[p + 1] @ data.target.b[p]).distance(data.source.b[p] @ fstar[p]))
    rep.add(CheckResult("pullback-chain-map", worst, worst <= HOMOTOPY_TOL, details={"phi": phi.label()}))
    thetas = _grid_for(data.source, data.target, n_samples=n_samples)
    fs, ft = data.source.cohomology(thetas, svd_tol), data.target.cohomology(thetas, svd_tol)
    vals = _eval(fstar, thetas)
    fails, margins = [], []
    for j in range(len(thetas)):
        margin = np.inf
        for p in range(data.source.n + 1):
            hs, ht = fs.harmonic(p, j), ft.harmonic(p, j)
            if hs.shape[1] == 0 and ht.shape[1] == 0:
                continue
            margin = min(margin, min_singular(np.conj(hs.T) @ vals[p][j] @ ht))
        margins.append(None if margin == np.inf else margin)
        if margin != np.inf and margin <= svd_tol:
            fails.append(j)
    rep.add(CheckResult("pullback-cohomology-iso", float(len(fails)), not fails, per_fiber=margins,
                        details={"failing_fibers": fails}))
    return rep


def phi_independence_check(data: PullbackData, phi1: SmoothingPolynomial, phi2: SmoothingPolynomial,
                           n_samples: int = DEFAULT_SAMPLES, tol: float = COHOMOLOGY_TOL,
                           svd_tol: float = SVD_TOL) -> CheckResult:
    thetas = _grid_for(data.source, data.target, n_samples=n_samples)
    fs, ft = data.source.cohomology(thetas, svd_tol), data.target.cohomology(thetas, svd_tol)
    a, b = _eval(pullback(data, phi1), thetas), _eval(pullback(data, phi2), thetas)
    per = np.zeros(len(thetas))
    for p in range(data.source.n + 1):
        per = np.maximum(per, _harmonic_compare(ft, fs, p, p, a[p], b[p]))
    worst = float(np.max(per))
    return CheckResult("pullback-phi-independence", worst, worst <= tol, per_fiber=per.tolist(),
                       details={"phi": [phi1.label(), phi2.label()]})


def functoriality_check(f_data: PullbackData, g_data: PullbackData, gf_data: PullbackData,
                        phi: SmoothingPolynomial, n_samples: int = DEFAULT_SAMPLES, tol: float = COHOMOLOGY_TOL,
                        svd_tol: float = SVD_TOL) -> CheckResult:
    """
    For ``f : X -> X'`` and ``g : X' -> X''`` compare ``(g o f)^*_phi`` with
    ``f^*_phi o g^*_phi`` on fiber cohomology.
    """
    if f_data.target.ranks != g_data.source.ranks or gf_data.source.ranks != f_data.source.ranks \
            or gf_data.target.ranks != g_data.target.ranks:
        raise ValueError("pull-back data are not composable")
    thetas = _grid_for(f_data.source, g_data.target, n_samples=n_samples)
    fx, fxx = f_data.source.cohomology(thetas, svd_tol), g_data.target.cohomology(thetas, svd_tol)
    direct = _eval(pullback(gf_data, phi), thetas)
    f_star, g_star = pullback(f_data, phi), pullback(g_data, phi)
    composite = _eval([a @ b for a, b in zip(f_star, g_star)], thetas)
    per = np.zeros(len(thetas))
    for p in range(f_data.source.n + 1):
        per = np.maximum(per, _harmonic_compare(fxx, fx, p, p, direct[p], composite[p]))
    worst = float(np.max(per))
    return CheckResult("functoriality", worst, worst <= tol, per_fiber=per.tolist(),
                       details={"phi": phi.label(), "fibers": len(thetas)})


def _assemble_down(c: HPComplexData, K: Sequence[ModuleMap]) -> ModuleMap:
    return c.assemble({(p, p + 1): K[p].matrix for p in range(c.n)})


def poincare_identity_check(gf_data: PullbackData, phi: SmoothingPolynomial, K: Sequence[ModuleMap] | None,
                            n_samples: int = DEFAULT_SAMPLES, tol: float = HOMOTOPY_TOL,
                            svd_tol: float = SVD_TOL) -> Report:
    """
    ``(g o f)^#_phi - phi(Delta) = K_phi b + b K_phi`` with ``K_phi = K phi(Delta)``,
    and the induced map of ``(g o f)^#_phi`` on cohomology is the identity.
    ``K[p] : E_{p+1} -> E_p``; ``None`` means zero.
    """
    c = gf_data.source
    if gf_data.target.ranks != c.ranks:
        raise ValueError("a round trip must start and end at the same model")
    rep = Report("poincare-identity")
    if K is None:
        K = [ModuleMap.zero(c.module(p + 1), c.module(p)) for p in range(c.n)]
    P = apply_phi(phi, c)
    round_trip = c.assemble({(p, p): m.matrix for p, m in enumerate(pullback(gf_data, phi))})
    Kphi = _assemble_down(c, K) @ P
    b = c.b_total()
    v = (round_trip - P - (Kphi @ b + b @ Kphi)).max_abs()
    rep.add(CheckResult("poincare-identity", v, v <= tol, details={"phi": phi.label()}))
    thetas = c.grid(n_samples)
    fc = c.cohomology(thetas, svd_tol)
    vals = _eval(pullback(gf_data, phi), thetas)
    per = np.zeros(len(thetas))
    for p in range(c.n + 1):
        per = np.maximum(per, _harmonic_compare(fc, fc, p, p, vals[p], None))
    worst = float(np.max(per))
    rep.add(CheckResult("round-trip-identity-on-cohomology", worst, worst <= COHOMOLOGY_TOL, per_fiber=per.tolist()))
    return rep


def duality_sign(k: int, p: int) -> int:
    return -1 if (k * (p - k)) % 2 else 1


def duality_compat_check(f_data: PullbackData, phi: SmoothingPolynomial, g_data: PullbackData | None = None,
                         n_samples: int = DEFAULT_SAMPLES, tol: float = COHOMOLOGY_TOL,
                         svd_tol: float = SVD_TOL, negate_sign: bool = False) -> Report:
    """
    ``f^*_phi T' (f^*_phi)^*`` against ``T`` on the cohomology of the source.

    With a homotopy inverse ``g_data`` also compares
    ``Gamma = T' o g^*_phi o T`` with ``(-1)^{k(n-k)} (f^*_phi)^*`` in each
    degree ``k``.  ``negate_sign`` flips that sign, as a control that the
    comparison is sensitive to it.
    """
    src, tgt = f_data.source, f_data.target
    n = src.n
    rep = Report("duality-compat")
    thetas = _grid_for(src, tgt, n_samples=n_samples)
    fs, ft = src.cohomology(thetas, svd_tol), tgt.cohomology(thetas, svd_tol)
    fstar = pullback(f_data, phi)
    transported = [fstar[n - p] @ tgt.T[p] @ fstar[p].adjoint() for p in range(n + 1)]
    a, b = _eval(transported, thetas), _eval(src.T, thetas)
    per = np.zeros(len(thetas))
    for p in range(n + 1):
        per = np.maximum(per, _harmonic_compare(fs, fs, p, n - p, a[p], b[p]))
    worst = float(np.max(per))
    rep.add(CheckResult("duality-transport-on-cohomology", worst, worst <= tol, per_fiber=per.tolist()))
    if g_data is not None:
        gstar = pullback(g_data, phi)
        gamma = [tgt.T[n - k] @ gstar[n - k] @ src.T[k] for k in range(n + 1)]
        signs = [duality_sign(k, n) * (-1 if negate_sign else 1) for k in range(n + 1)]
        expected = [fstar[k].adjoint() * signs[k] for k in range(n + 1)]
        a, b = _eval(gamma, thetas), _eval(expected, thetas)
        per = np.zeros(len(thetas))
        for k in range(n + 1):
            per = np.maximum(per, _harmonic_compare(fs, ft, k, k, a[k], b[k]))
        worst = float(np.max(per))
        name = "gamma-sign-rule" + ("-negated" if negate_sign else "")
        rep.add(CheckResult(name, worst, worst <= tol, per_fiber=per.tolist(), details={"signs": signs}))
    return rep
