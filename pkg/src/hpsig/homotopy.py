"""
Homotopy equivalences of HP complexes and the duality paths that connect
``T (+) -T'`` to its negative on ``E (+) E'``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .complexes import (
    EXACT_TOL,
    HPComplexData,
    _condition1,
    _condition2,
    _condition3,
    direct_sum,
    signature_data,
)
from .fibers import SVD_TOL, FiberCohomology, min_singular
from .loops import DEFAULT_SAMPLES, LOOP, MATRIX, block_matrix, sup_norm_estimate
from .modules import FreeModule, ModuleMap
from .reports import CheckResult, Report
from .winding import k1_equal, winding_number

__all__ = [
    "ChainMap",
    "DualityPath",
    "verify_homotopy_equivalence",
    "path_stage1",
    "path_stage2",
    "path_stage3",
    "check_path_endpoints",
    "validate_path",
    "resolvent_continuity_check",
    "signature_invariance",
    "direct_sum",
    "PATH_SAMPLES",
]

PATH_SAMPLES = 33
PATH_TOL = 1e-10
COHOMOLOGY_TOL = 1e-8


def _ct(a):
    return np.conj(np.swapaxes(a, -1, -2))


@dataclass
class ChainMap:
    source: HPComplexData
    target: HPComplexData
    A: list[ModuleMap]
    label: str = ""

    def __post_init__(self):
        if self.source.n != self.target.n:
            raise ValueError("chain maps need complexes of equal length")
        if len(self.A) != self.source.n + 1:
            raise ValueError("one component per degree required")
        for p, a in enumerate(self.A):
            if a.matrix.shape != (self.target.ranks[p], self.source.ranks[p]):
                raise ValueError(f"A[{p}] has shape {a.matrix.shape}")

    @classmethod
    def identity(cls, c: HPComplexData) -> "ChainMap":
        return cls(c, c, [ModuleMap.identity(c.module(p)) for p in range(c.n + 1)], "identity")

    def chain_defect(self) -> float:
        n = self.source.n
        worst = 0.0
        for p in range(n):
            lhs = self.A[p + 1] @ self.source.b[p]
            rhs = self.target.b[p] @ self.A[p]
            worst = max(worst, lhs.distance(rhs))
        return worst

    def check(self, tol: float = EXACT_TOL) -> CheckResult:
        v = self.chain_defect()
        res = CheckResult("chain-map", v, v <= tol)
        if not res.passed:
            res.notes.append("not a chain map")
        return res

    def then(self, other: "ChainMap") -> "ChainMap":
        """``other o self``."""
        return ChainMap(self.source, other.target, [o @ a for a, o in zip(self.A, other.A)],
                        f"{other.label} o {self.label}")

    def is_identity(self) -> bool:
        if self.source is not self.target:
            return False
        return all(a.distance(ModuleMap.identity(a.domain)) == 0.0 for a in self.A)

    def transfer_duality(self) -> list[ModuleMap]:
        """The blocks of ``A T A^*`` on the target."""
        n = self.source.n
        T = self.source.T
        return [self.A[n - p] @ T[p] @ self.A[p].adjoint() for p in range(n + 1)]

    def total(self) -> ModuleMap:
        mat = block_matrix([[self.A[i].matrix if i == j else None for j in range(self.source.n + 1)]
                            for i in range(self.source.n + 1)], self.target.ranks, self.source.ranks)
        return ModuleMap(FreeModule(mat.kind, self.source.total_rank), FreeModule(mat.kind, self.target.total_rank), mat)


def verify_homotopy_equivalence(A: ChainMap, n_samples: int = DEFAULT_SAMPLES, svd_tol: float = SVD_TOL,
                                tol: float = COHOMOLOGY_TOL) -> Report:
    """
    Fiberwise check that ``A`` is an isomorphism on cohomology and that
    ``A T A^*`` and ``T'`` induce the same maps on cohomology.
    """
    rep = Report("homotopy-equivalence")
    rep.add(A.check())
    src, tgt = A.source, A.target
    kind = LOOP if LOOP in (src.kind, tgt.kind) else MATRIX
    thetas = src.grid(n_samples) if kind == src.kind else tgt.grid(n_samples)
    fs = src.cohomology(thetas, svd_tol)
    ft = tgt.cohomology(thetas, svd_tol)
    n = src.n
    A_f = [a.matrix.evaluate(thetas) for a in A.A]
    iso_margin, iso_fail = [], []
    for j in range(len(thetas)):
        margin = np.inf
        for k in range(n + 1):
            hs, ht = fs.harmonic(k, j), ft.harmonic(k, j)
            if hs.shape[1] == 0 and ht.shape[1] == 0:
                continue
            margin = min(margin, min_singular(np.conj(ht.T) @ A_f[k][j] @ hs))
        iso_margin.append(None if margin == np.inf else margin)
        if margin != np.inf and margin <= svd_tol:
            iso_fail.append(j)
    rep.add(CheckResult("A-iso-on-cohomology", float(len(iso_fail)), not iso_fail, per_fiber=iso_margin,
                        details={"failing_fibers": iso_fail}))
    transferred = [t.matrix.evaluate(thetas) for t in A.transfer_duality()]
    t_prime = [t.matrix.evaluate(thetas) for t in tgt.T]
    per, worst = [], 0.0
    for j in range(len(thetas)):
        v = 0.0
        for k in range(n + 1):
            hs, hd = ft.harmonic(k, j), ft.harmonic(n - k, j)
            diff = np.conj(hd.T) @ (transferred[k][j] - t_prime[k][j]) @ hs
            if diff.size:
                v = max(v, float(np.max(np.abs(diff))))
        per.append(v)
        worst = max(worst, v)
    rep.add(CheckResult("ATA*-matches-T'-on-cohomology", worst, worst <= tol, per_fiber=per))
    return rep


# ----------------------------------------------------------------------
# duality paths


@dataclass
class DualityPath:
    stage: int
    s_range: tuple[float, float]
    family: Callable[[float], list[ModuleMap]] = field(repr=False)
    base: HPComplexData = field(repr=False)

    def at(self, s: float) -> HPComplexData:
        return self.base.with_T(self.family(s), label=f"stage{self.stage}(s={s:.6g})")

    def parameters(self, n_s: int = PATH_SAMPLES) -> np.ndarray:
        return np.linspace(self.s_range[0], self.s_range[1], n_s)


def _bare(c: HPComplexData) -> HPComplexData:
    return HPComplexData(c.n, list(c.ranks), list(c.b), None, c.kind, c.label)


def _pieces(A: ChainMap):
    n = A.source.n
    T, Tp = A.source.T, A.target.T
    TAs = [T[p] @ A.A[p].adjoint() for p in range(n + 1)]       # E'_p -> E_{n-p}
    AT = [A.A[n - p] @ T[p] for p in range(n + 1)]              # E_p -> E'_{n-p}
    ATAs = A.transfer_duality()                                 # E'_p -> E'_{n-p}
    return T, Tp, TAs, AT, ATAs


class _SumLayout:
    """Block layout of ``E (+) E'`` shared by the three stages."""

    def __init__(self, A: ChainMap):
        self.base = direct_sum(_bare(A.source), _bare(A.target))
        self.src = A.source.ranks
        self.tgt = A.target.ranks

    def block(self, p: int, tl, tr, bl, br) -> ModuleMap:
        n = self.base.n
        rows = [self.src[n - p], self.tgt[n - p]]
        cols = [self.src[p], self.tgt[p]]
        mat = block_matrix([[tl, tr], [bl, br]], rows, cols, self.base.kind)
        return ModuleMap.from_matrix(mat, self.base.kind)


def path_stage1(A: ChainMap) -> DualityPath:
    """``diag(T, (s-1) T' - s A T A^*)`` for ``0 <= s <= 1``."""
    lay = _SumLayout(A)
    T, Tp, _, _, ATAs = _pieces(A)

    def family(s: float) -> list[ModuleMap]:
        return [lay.block(p, T[p].matrix, None, None, (Tp[p] * (s - 1) - ATAs[p] * s).matrix)
                for p in range(lay.base.n + 1)]

    return DualityPath(1, (0.0, 1.0), family, lay.base)


def path_stage2(A: ChainMap) -> DualityPath:
    """``[[cos s T, sin s T A^*], [sin s A T, -cos s A T A^*]]`` for ``0 <= s <= pi/2``."""
    lay = _SumLayout(A)
    T, _, TAs, AT, ATAs = _pieces(A)

    def family(s: float) -> list[ModuleMap]:
        c, sn = np.cos(s), np.sin(s)
        return [lay.block(p, (T[p] * c).matrix, (TAs[p] * sn).matrix, (AT[p] * sn).matrix,
                          (ATAs[p] * (-c)).matrix) for p in range(lay.base.n + 1)]

    return DualityPath(2, (0.0, np.pi / 2), family, lay.base)


def path_stage3(A: ChainMap) -> DualityPath:
    """``[[0, e^{is} T A^*], [e^{-is} A T, 0]]`` for ``0 <= s <= pi``."""
    lay = _SumLayout(A)
    _, _, TAs, AT, _ = _pieces(A)

    def family(s: float) -> list[ModuleMap]:
        e = np.exp(1j * s)
        return [lay.block(p, None, (TAs[p] * e).matrix, (AT[p] * np.conj(e)).matrix, None)
                for p in range(lay.base.n + 1)]

    return DualityPath(3, (0.0, np.pi), family, lay.base)


def _T_distance(t1: list[ModuleMap], t2: list[ModuleMap]) -> float:
    return max((a.distance(b) for a, b in zip(t1, t2)), default=0.0)


def check_path_endpoints(A: ChainMap, tol: float = EXACT_TOL) -> CheckResult:
    p1, p2, p3 = path_stage1(A), path_stage2(A), path_stage3(A)
    gaps = {
        "stage1(1)=stage2(0)": _T_distance(p1.family(1.0), p2.family(0.0)),
        "stage2(pi/2)=stage3(0)": _T_distance(p2.family(np.pi / 2), p3.family(0.0)),
        "stage3(pi)=-stage3(0)": _T_distance(p3.family(np.pi), [-t for t in p3.family(0.0)]),
    }
    lay = _SumLayout(A)
    start = [lay.block(p, A.source.T[p].matrix, None, None, (-A.target.T[p]).matrix)
             for p in range(A.source.n + 1)]
    gaps["stage1(0)=T+(-T')"] = _T_distance(p1.family(0.0), start)
    worst = max(gaps.values())
    return CheckResult("path-endpoints", worst, worst <= tol, details=gaps)


def validate_path(P: DualityPath, n_s: int = PATH_SAMPLES, n_samples: int = DEFAULT_SAMPLES,
                  tol: float = PATH_TOL, svd_tol: float = SVD_TOL, windings: bool = True,
                  fc: FiberCohomology | None = None) -> Report:
    """Run the duality validator at ``n_s`` parameter values along the path."""
    base = P.base
    thetas = base.grid(n_samples)
    if fc is None:
        fc = base.cohomology(thetas, svd_tol)
    ss = P.parameters(n_s)
    sym, anti, coh_fail, coh_worst = [], [], [], 0.0
    wind: list[int] = []
    prev = None
    cont = 0.0
    for i, s in enumerate(ss):
        c = P.at(float(s))
        sym.append(_condition1(c)[0])
        anti.append(_condition2(c)[0])
        T_f = [t.matrix.evaluate(thetas) for t in c.T]
        r3 = _condition3(c, thetas, fc, T_f, svd_tol)
        coh_worst = max(coh_worst, r3.max_violation)
        if not r3.passed:
            coh_fail.append(i)
        if prev is not None:
            diff = c.T_total().matrix - prev.T_total().matrix
            cont = max(cont, sup_norm_estimate(diff, max(n_samples, 2 * diff.band + 1)) / (ss[i] - ss[i - 1]))
        prev = c
        if windings and c.kind == LOOP and not coh_fail:
            wind.append(winding_number(signature_data(c, n_samples).U))
    tag = f"stage{P.stage}"
    rep = Report(f"path-{tag}")
    rep.add(CheckResult(f"{tag}-symmetry", max(sym), max(sym) <= tol, per_fiber=sym))
    rep.add(CheckResult(f"{tag}-anticommutation", max(anti), max(anti) <= tol, per_fiber=anti))
    rep.add(CheckResult(f"{tag}-cohomology-iso", coh_worst, not coh_fail,
                        details={"failing_parameters": [float(ss[i]) for i in coh_fail]}))
    finite = bool(np.isfinite(cont))
    rep.add(CheckResult(f"{tag}-continuity", 0.0 if finite else float("inf"), finite,
                        details={"lipschitz_constant": cont},
                        notes=[f"||T_s - T_s'|| <= C |s - s'| with C = {cont:.4g} on the sample grid"]))
    if wind:
        rep.add(CheckResult(f"{tag}-winding-constant", float(max(wind) - min(wind)), len(set(wind)) == 1,
                            details={"windings": sorted(set(wind))}))
    return rep


def resolvent_continuity_check(B: ModuleMap, S_path: Callable[[float], ModuleMap], mu: float,
                               s1: float, s2: float, thetas: np.ndarray, tol: float = 1e-8) -> CheckResult:
    """Resolvent identity and its norm bound for ``R(s) = (B + S_s + i mu)^{-1}`` at each fiber."""
    Bv = B.matrix.evaluate(thetas)
    S1 = S_path(s1).matrix.evaluate(thetas)
    S2 = S_path(s2).matrix.evaluate(thetas)
    N = Bv.shape[1]
    if N == 0:
        return CheckResult("resolvent-identity", 0.0, True)
    eye = np.eye(N)
    M1, M2 = Bv + S1 + 1j * mu * eye, Bv + S2 + 1j * mu * eye
    for M in (M1, M2):
        smin = np.linalg.svd(M, compute_uv=False)[:, -1]
        if np.min(smin) <= 1e-12:
            j = int(np.argmin(smin))
            raise np.linalg.LinAlgError(f"resolvent singular at fiber {j}")
    R1, R2 = np.linalg.inv(M1), np.linalg.inv(M2)
    ident = np.max(np.abs((R1 - R2) - R1 @ (S2 - S1) @ R2), axis=(1, 2))

    def opnorm(x):
        return np.linalg.svd(x, compute_uv=False)[:, 0]

    slack = opnorm(R1 - R2) - opnorm(S2 - S1) * opnorm(R1) * opnorm(R2)
    per = np.maximum(ident, slack)
    worst = float(max(np.max(ident), np.max(slack), 0.0))
    return CheckResult("resolvent-identity", worst, worst <= tol, per_fiber=per.tolist(),
                       details={"mu": mu, "s1": s1, "s2": s2, "identity_residual": float(np.max(ident)),
                                "inequality_slack": float(np.max(slack))})


def signature_invariance(A: ChainMap, n_s: int = PATH_SAMPLES, n_samples: int = DEFAULT_SAMPLES) -> Report:
    """
    Compare the signatures of the two ends of a homotopy equivalence.

    The direct sum with ``T (+) -T'`` must have winding zero, the windings
    of the two ends must agree, and the three duality paths must validate.
    """
    rep = Report("signature-invariance")
    src, tgt = A.source, A.target
    both = direct_sum(src, tgt, sign_flip=True)
    if both.kind == LOOP:
        w_sum = winding_number(signature_data(both, n_samples).U)
        rep.add(CheckResult("direct-sum-winding-zero", float(abs(w_sum)), w_sum == 0, details={"winding": w_sum}))
        cmp = k1_equal(signature_data(src, n_samples).U, signature_data(tgt, n_samples).U)
        rep.add(CheckResult("endpoint-windings-equal", float(abs(cmp.windings[0] - cmp.windings[1])), cmp.equal,
                            details={"windings": list(cmp.windings)}))
    else:
        rep.notes.append("K1 of a complex matrix algebra vanishes; winding comparisons are trivial")
    rep.add(check_path_endpoints(A))
    fc = None
    for P in (path_stage1(A), path_stage2(A), path_stage3(A)):
        if fc is None:
            fc = P.base.cohomology(P.base.grid(n_samples))
        rep.add(validate_path(P, n_s, n_samples, fc=fc))
    return rep
