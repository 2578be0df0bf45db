"""
Hilbert-Poincare complexes over the coefficient algebras.

An :class:`HPComplexData` holds graded free modules ``E_0 .. E_n``, the
differentials ``b_i : E_i -> E_{i+1}`` and the duality blocks
``T_p : E_p -> E_{n-p}``.  The validators check the duality axioms
coefficientwise where they are polynomial identities and fiber by fiber
where they concern cohomology.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .fibers import SVD_TOL, FiberCohomology, min_singular, orth_complement_residual
from .loops import DEFAULT_SAMPLES, LOOP, MATRIX, AlgebraElement, block_diag, block_matrix, sample_grid
from .modules import FreeModule, ModuleMap
from .reports import CheckResult, Report
from .winding import UnitaryLoop

__all__ = [
    "HPComplexData",
    "SignatureData",
    "MappingCone",
    "SingularFiberError",
    "validate_complex",
    "validate_duality",
    "validate",
    "build_S",
    "build_B",
    "check_S_identities",
    "signature_data",
    "signature_unitary",
    "mapping_cone",
    "signature_cone",
    "check_acyclic_iff_B_invertible",
    "bounded_transform",
    "lemma_Q_identities",
    "signature_operator",
    "direct_sum",
    "fiber_grid",
    "EXACT_TOL",
]

EXACT_TOL = 1e-12
UNITARY_TOL = 1e-9


class SingularFiberError(RuntimeError):
    def __init__(self, fiber: int, theta: float, sigma_min: float):
        super().__init__(f"B-S is singular at fiber {fiber} (theta={theta:.6f}, sigma_min={sigma_min:.3g})")
        self.fiber = fiber
        self.theta = theta


def _ct(a: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(a, -1, -2))


def fiber_grid(kind: str, n_samples: int = DEFAULT_SAMPLES) -> np.ndarray:
    """Sample angles for a complex; a complex-matrix complex has a single fiber."""
    return sample_grid(n_samples) if kind == LOOP else np.zeros(1)


@dataclass
class HPComplexData:
    n: int
    ranks: list[int]
    b: list[ModuleMap]
    T: list[ModuleMap] | None = None
    kind: str = LOOP
    label: str = ""
    blocks: list[tuple[int, int]] = field(default_factory=list)

    def __post_init__(self):
        self.ranks = [int(r) for r in self.ranks]
        if len(self.ranks) != self.n + 1:
            raise ValueError(f"expected {self.n + 1} ranks, got {len(self.ranks)}")
        if len(self.b) != self.n:
            raise ValueError(f"expected {self.n} differentials, got {len(self.b)}")
        for i, bi in enumerate(self.b):
            if bi.matrix.shape != (self.ranks[i + 1], self.ranks[i]):
                raise ValueError(f"b[{i}] has shape {bi.matrix.shape}, expected {(self.ranks[i + 1], self.ranks[i])}")
        if self.T is not None:
            if len(self.T) != self.n + 1:
                raise ValueError(f"expected {self.n + 1} duality blocks, got {len(self.T)}")
            for p, tp in enumerate(self.T):
                if tp.matrix.shape != (self.ranks[self.n - p], self.ranks[p]):
                    raise ValueError(f"T[{p}] has shape {tp.matrix.shape}")

    # construction helpers ----------------------------------------------
    @classmethod
    def from_matrices(cls, b: Sequence, T: Sequence | None, kind: str = LOOP, label: str = "") -> "HPComplexData":
        """Build from AlgebraElements (or plain arrays for complex-matrix kind)."""
        def wrap(m):
            el = m if isinstance(m, AlgebraElement) else AlgebraElement.constant(np.atleast_2d(m), kind)
            if kind == MATRIX and el.kind == LOOP:
                if el.band:
                    raise ValueError("loop data in a complex-matrix complex")
                el = AlgebraElement(el.coeffs, MATRIX)
            return ModuleMap.from_matrix(el, kind)

        bm = [wrap(x) for x in b]
        Tm = [wrap(x) for x in T] if T is not None else None
        if bm:
            ranks = [bm[0].domain.rank] + [x.codomain.rank for x in bm]
        elif Tm:
            ranks = [Tm[0].domain.rank]
        else:
            raise ValueError("cannot infer ranks of an empty complex")
        return cls(len(ranks) - 1, ranks, bm, Tm, kind, label)

    def module(self, p: int) -> FreeModule:
        return FreeModule(self.kind, self.ranks[p])

    @property
    def total_rank(self) -> int:
        return int(sum(self.ranks))

    @property
    def offsets(self) -> list[int]:
        return [int(x) for x in np.concatenate([[0], np.cumsum(self.ranks)])]

    @property
    def l(self) -> int:
        if self.n % 2 == 0:
            raise ValueError("odd dimension required")
        return (self.n - 1) // 2

    def grid(self, n_samples: int = DEFAULT_SAMPLES) -> np.ndarray:
        return fiber_grid(self.kind, n_samples)

    def assemble(self, blocks: dict[tuple[int, int], AlgebraElement]) -> ModuleMap:
        """Total operator on ``E_0 + ... + E_n`` from ``{(row_degree, col_degree): block}``."""
        grid = [[blocks.get((i, j)) for j in range(self.n + 1)] for i in range(self.n + 1)]
        kind = LOOP if any(b.kind == LOOP for b in blocks.values()) else self.kind
        mat = block_matrix(grid, self.ranks, self.ranks, kind)
        total = FreeModule(mat.kind, self.total_rank)
        return ModuleMap(total, total, mat)

    def b_total(self) -> ModuleMap:
        return self.assemble({(i + 1, i): self.b[i].matrix for i in range(self.n)})

    def T_total(self) -> ModuleMap:
        self._need_T()
        return self.assemble({(self.n - p, p): self.T[p].matrix for p in range(self.n + 1)})

    def _need_T(self):
        if self.T is None:
            raise ValueError("complex carries no duality operator")

    def b_fibers(self, thetas: np.ndarray) -> list[np.ndarray]:
        return [bi.matrix.evaluate(thetas) for bi in self.b]

    def cohomology(self, thetas: np.ndarray, svd_tol: float = SVD_TOL) -> FiberCohomology:
        return FiberCohomology(self.ranks, self.b_fibers(thetas), svd_tol, n_fibers=len(thetas))

    def with_T(self, T: list[ModuleMap], label: str | None = None) -> "HPComplexData":
        return HPComplexData(self.n, list(self.ranks), list(self.b), list(T), self.kind,
                             self.label if label is None else label, list(self.blocks))

    def negated(self) -> "HPComplexData":
        self._need_T()
        return self.with_T([-t for t in self.T])

    def as_kind(self, kind: str) -> "HPComplexData":
        """Reinterpret a complex-matrix complex as constant loops (or back, when band 0)."""
        def conv(m: ModuleMap) -> ModuleMap:
            if kind == MATRIX and m.matrix.trimmed().band:
                raise ValueError("cannot drop Fourier modes")
            el = AlgebraElement(m.matrix.trimmed().coeffs, kind)
            return ModuleMap.from_matrix(el, kind)
        return HPComplexData(self.n, list(self.ranks), [conv(x) for x in self.b],
                             [conv(x) for x in self.T] if self.T is not None else None, kind, self.label, list(self.blocks))


# ----------------------------------------------------------------------
# axioms


def validate_complex(c: HPComplexData, tol: float = EXACT_TOL) -> CheckResult:
    """Coefficientwise check that consecutive differentials compose to zero."""
    worst = 0.0
    per = []
    for i in range(c.n - 1):
        v = (c.b[i + 1] @ c.b[i]).max_abs()
        per.append(v)
        worst = max(worst, v)
    return CheckResult("b-squared-zero", worst, worst <= tol, per_fiber=None, details={"per_degree": per})


def _duality_sign(n: int, q: int) -> int:
    return -1 if ((n - q) * q) % 2 else 1


def _condition1(c: HPComplexData) -> tuple[float, list[float]]:
    per = []
    for q in range(c.n + 1):
        lhs = c.T[c.n - q].adjoint()
        per.append(lhs.distance(_duality_sign(c.n, q) * c.T[q]))
    return max(per, default=0.0), per


def _condition2(c: HPComplexData) -> tuple[float, list[float]]:
    per = []
    for p in range(1, c.n + 1):
        first = c.T[p - 1] @ c.b[p - 1].adjoint()
        second = c.b[c.n - p] @ c.T[p]
        sign = 1 if (p + 1) % 2 == 0 else -1
        per.append((first + sign * second).max_abs())
    return max(per, default=0.0), per


def _condition3(c: HPComplexData, thetas: np.ndarray, fc: FiberCohomology, T_fibers: list[np.ndarray],
                svd_tol: float) -> CheckResult:
    n = c.n
    per_margin: list = []
    worst_contain = 0.0
    failures = []
    for j in range(len(thetas)):
        margin = np.inf
        for k in range(n + 1):
            t = T_fibers[k][j] if T_fibers[k].shape[0] > 1 else T_fibers[k][0]
            ker = fc.kernel(k, j)
            worst_contain = max(worst_contain, orth_complement_residual(t @ ker, fc.dual_kernel(n - k, j)))
            img = fc.image(k, j)
            worst_contain = max(worst_contain, orth_complement_residual(t @ img, fc.coimage(n - k, j)))
            h_src, h_dst = fc.harmonic(k, j), fc.harmonic(n - k, j)
            if h_src.shape[1] == 0 and h_dst.shape[1] == 0:
                continue
            m = np.conj(h_dst.T) @ t @ h_src
            margin = min(margin, min_singular(m))
        per_margin.append(None if margin == np.inf else margin)
        if margin != np.inf and margin <= svd_tol:
            failures.append(j)
    passed = not failures and worst_contain <= svd_tol
    notes = ["fiber cohomology computed with singular-value threshold %.0e" % svd_tol]
    jumps = fc.rank_jump_fibers()
    if jumps:
        notes.append(f"cohomology ranks jump at {len(jumps)} fiber(s)")
    return CheckResult(
        "duality-cohomology-iso", worst_contain, passed, per_fiber=per_margin, notes=notes,
        details={"failing_fibers": failures, "rank_jump_fibers": jumps,
                 "generic_betti": list(fc.betti(next(j for j in range(len(thetas)) if j not in jumps)))},
    )


def validate_duality(c: HPComplexData, n_samples: int = DEFAULT_SAMPLES, tol: float = EXACT_TOL,
                     svd_tol: float = SVD_TOL, thetas: np.ndarray | None = None,
                     fc: FiberCohomology | None = None) -> Report:
    """
    Check the duality conditions.

    (1) ``T^* = (-1)^{(n-p)p} T`` on ``E_p`` and (2) ``T b^* + (-1)^{p+1} b T = 0``
    on ``E_p`` are polynomial identities, checked coefficientwise.  (3), that
    ``T`` induces an isomorphism ``H^k(E, b) -> H^{n-k}(E, b^*)``, is checked
    at each fiber on harmonic representatives.  (4) holds at finite rank.
    """
    c._need_T()
    rep = Report("validate-duality")
    v1, per1 = _condition1(c)
    rep.add(CheckResult("duality-symmetry", v1, v1 <= tol, details={"per_degree": per1}))
    v2, per2 = _condition2(c)
    rep.add(CheckResult("duality-anticommutation", v2, v2 <= tol, details={"per_degree": per2}))
    if thetas is None:
        thetas = c.grid(n_samples)
    if fc is None:
        fc = c.cohomology(thetas, svd_tol)
    T_fibers = [t.matrix.evaluate(thetas) for t in c.T]
    rep.add(_condition3(c, thetas, fc, T_fibers, svd_tol))
    rep.add(CheckResult("duality-compactness", 0.0, True, notes=["trivially satisfied (finite rank)"]))
    return rep


def validate(c: HPComplexData, n_samples: int = DEFAULT_SAMPLES, tol: float = EXACT_TOL) -> Report:
    rep = Report("validate")
    rep.add(validate_complex(c, tol))
    if c.T is not None:
        rep.add(validate_duality(c, n_samples, tol))
    return rep


# ----------------------------------------------------------------------
# S, B and the signature


def _s_factor(p: int, l: int) -> complex:
    return 1j ** ((p * (p - 1) + l) % 4)


def build_S(c: HPComplexData) -> ModuleMap:
    """``S = i^{p(p-1)+l} T`` on ``E_p``, as a total operator."""
    c._need_T()
    l = c.l
    return c.assemble({(c.n - p, p): c.T[p].matrix * _s_factor(p, l) for p in range(c.n + 1)})


def build_B(c: HPComplexData) -> ModuleMap:
    b = c.b_total()
    return b + b.adjoint()


def check_S_identities(c: HPComplexData, tol: float = EXACT_TOL) -> Report:
    S = build_S(c)
    b = c.b_total()
    rep = Report("S-identities")
    v = S.adjoint().distance(S)
    rep.add(CheckResult("S-self-adjoint", v, v <= tol))
    v = (b @ S + S @ b.adjoint()).max_abs()
    rep.add(CheckResult("bS+Sb*=0", v, v <= tol))
    return rep


@dataclass
class SignatureData:
    S: ModuleMap
    B: ModuleMap
    U: UnitaryLoop
    l: int
    raw_unitarity_defect: float
    polar_corrected: bool
    anticommutator: float


def _polar(w: np.ndarray) -> np.ndarray:
    u, _, vh = np.linalg.svd(w)
    return u @ vh


def _cayley_sampler(B: ModuleMap, S: ModuleMap, stats: dict):
    plus, minus = B + S, B - S

    def sample(thetas: np.ndarray) -> np.ndarray:
        thetas = np.asarray(thetas, dtype=float)
        bp = plus.matrix.evaluate(thetas)
        bm = minus.matrix.evaluate(thetas)
        if bm.shape[1] == 0:
            return bm
        smin = np.linalg.svd(bm, compute_uv=False)[:, -1]
        bad = np.flatnonzero(smin <= 1e-10)
        if bad.size:
            j = int(bad[0])
            raise SingularFiberError(j, float(thetas[j]), float(smin[j]))
        # W (B-S) = B+S, solved as (B-S)^T W^T = (B+S)^T
        w = np.swapaxes(np.linalg.solve(np.swapaxes(bm, 1, 2), np.swapaxes(bp, 1, 2)), 1, 2)
        eye = np.eye(w.shape[1])
        defect = float(np.max(np.abs(_ct(w) @ w - eye)))
        stats["raw_defect"] = max(stats.get("raw_defect", 0.0), defect)
        if defect > UNITARY_TOL:
            stats["polar"] = True
            w = _polar(w)
        return w

    return sample


def signature_data(c: HPComplexData, n_samples: int = DEFAULT_SAMPLES) -> SignatureData:
    """
    Signature element ``(B+S)(B-S)^{-1}`` sampled on the fiber grid.

    When ``B`` and ``S`` anticommute this is unitary.  Otherwise it is only
    invertible; its unitary polar part represents the same K1 class and is
    what gets stored.
    """
    S = build_S(c)
    B = build_B(c)
    stats: dict = {}
    sampler = _cayley_sampler(B, S, stats)
    thetas = c.grid(n_samples)
    mats = sampler(thetas)
    anti = (B @ S + S @ B).max_abs()
    U = UnitaryLoop(thetas, mats, c.kind, sampler if c.kind == LOOP else None)
    return SignatureData(S, B, U, c.l, stats.get("raw_defect", 0.0), bool(stats.get("polar")), anti)


def signature_unitary(c: HPComplexData, n_samples: int = DEFAULT_SAMPLES) -> UnitaryLoop:
    return signature_data(c, n_samples).U


# ----------------------------------------------------------------------
# mapping cones and acyclicity


@dataclass
class MappingCone:
    d: ModuleMap
    split: int

    def B(self) -> ModuleMap:
        return self.d + self.d.adjoint()

    def check(self, thetas: np.ndarray, svd_tol: float = SVD_TOL, tol: float = EXACT_TOL) -> Report:
        """``d^2 = 0`` and, fiber by fiber, acyclicity of the cone versus invertibility of ``d + d^*``."""
        rep = Report("mapping-cone")
        sq = (self.d @ self.d).max_abs()
        rep.add(CheckResult("cone-d-squared-zero", sq, sq <= tol))
        dv = self.d.matrix.evaluate(thetas)
        bv = self.B().matrix.evaluate(thetas)
        N = dv.shape[1]
        per, disagree = [], []
        if N:
            sd = np.linalg.svd(dv, compute_uv=False)
            sb = np.linalg.svd(bv, compute_uv=False)[:, -1]
        for j in range(len(thetas)):
            if N == 0:
                per.append(None)
                continue
            rank = int(np.sum(sd[j] > svd_tol))
            acyclic = N - 2 * rank == 0
            invertible = sb[j] > svd_tol
            per.append(float(sb[j]))
            if acyclic != invertible:
                disagree.append(j)
        rep.add(CheckResult("cone-acyclic-iff-B_S-invertible", float(len(disagree)), not disagree,
                            per_fiber=per, details={"disagreeing_fibers": disagree}))
        return rep

    def acyclic_fibers(self, thetas: np.ndarray, svd_tol: float = SVD_TOL) -> np.ndarray:
        dv = self.d.matrix.evaluate(thetas)
        if dv.shape[1] == 0:
            return np.ones(len(thetas), dtype=bool)
        sd = np.linalg.svd(dv, compute_uv=False)
        return dv.shape[1] - 2 * np.sum(sd > svd_tol, axis=1) == 0


def mapping_cone(c: HPComplexData, c_prime: HPComplexData, s_map: ModuleMap, dual: bool = True) -> MappingCone:
    """
    Mapping cone of a chain map ``s_map`` from ``(E, b)``.

    With ``dual=True`` the target is ``(E', -b'^*)`` and the cone differential
    is ``[[b, 0], [S, b'^*]]``; otherwise the target is ``(E', b')`` and the
    differential is ``[[b, 0], [S, -b']]``.
    """
    b = c.b_total()
    bp = c_prime.b_total()
    lower_right = bp.adjoint() if dual else -bp
    n1, n2 = c.total_rank, c_prime.total_rank
    if s_map.matrix.shape != (n2, n1):
        raise ValueError("chain map has the wrong shape")
    mat = block_matrix([[b.matrix, None], [s_map.matrix, lower_right.matrix]], [n1, n2], [n1, n2])
    mod = FreeModule(mat.kind, n1 + n2)
    return MappingCone(ModuleMap(mod, mod, mat), n1)


def signature_cone(c: HPComplexData) -> MappingCone:
    return mapping_cone(c, c, build_S(c), dual=True)


def check_acyclic_iff_B_invertible(c: HPComplexData, n_samples: int = DEFAULT_SAMPLES,
                                   svd_tol: float = SVD_TOL) -> CheckResult:
    thetas = c.grid(n_samples)
    fc = c.cohomology(thetas, svd_tol)
    N = c.total_rank
    per, disagree = [], []
    if N:
        smin = np.linalg.svd(build_B(c).matrix.evaluate(thetas), compute_uv=False)[:, -1]
    for j in range(len(thetas)):
        acyclic = fc.acyclic(j)
        invertible = True if N == 0 else bool(smin[j] > svd_tol)
        per.append(None if N == 0 else float(smin[j]))
        if acyclic != invertible:
            disagree.append(j)
    n_acyclic = sum(fc.acyclic(j) for j in range(len(thetas)))
    return CheckResult("acyclic-iff-B-invertible", float(len(disagree)), not disagree, per_fiber=per,
                       details={"disagreeing_fibers": disagree, "acyclic_fibers": n_acyclic,
                                "fibers": len(thetas)})


# ----------------------------------------------------------------------
# bounded transform


def bounded_transform(t, thetas: np.ndarray | None = None) -> np.ndarray:
    """Fiberwise ``Q(t) = t (1 + t^* t)^{-1/2}`` via an eigendecomposition of ``t^* t``."""
    if isinstance(t, ModuleMap):
        t = t.matrix
    if isinstance(t, AlgebraElement):
        if thetas is None:
            thetas = fiber_grid(t.kind)
        vals = t.evaluate(np.asarray(thetas))
    else:
        vals = np.asarray(t, dtype=complex)
        if vals.ndim == 2:
            vals = vals[None]
    if vals.shape[2] == 0:
        return vals.copy()
    gram = _ct(vals) @ vals
    gram = 0.5 * (gram + _ct(gram))
    w, v = np.linalg.eigh(gram)
    scale = 1.0 / np.sqrt(1.0 + np.clip(w, 0.0, None))
    return vals @ (v * scale[:, None, :]) @ _ct(v)


def lemma_Q_identities(c: HPComplexData, n_samples: int = DEFAULT_SAMPLES, tol: float = 1e-8) -> CheckResult:
    """``Q(b)^2 = Q(b^*)^2 = 0`` and ``Q(b + b^*) = Q(b) + Q(b^*)`` at every fiber."""
    thetas = c.grid(n_samples)
    b = c.b_total().matrix.evaluate(thetas)
    bs = _ct(b)
    qb, qbs, qB = bounded_transform(b), bounded_transform(bs), bounded_transform(b + bs)
    if b.shape[1] == 0:
        return CheckResult("Q-lemma", 0.0, True, per_fiber=[0.0] * len(thetas))
    def norm(x):
        return np.max(np.abs(x), axis=(1, 2))
    per = np.maximum.reduce([norm(qb @ qb), norm(qbs @ qbs), norm(qB - qb - qbs)])
    worst = float(np.max(per))
    return CheckResult("Q-lemma", worst, worst <= tol, per_fiber=per.tolist())


def signature_operator(c: HPComplexData, n_samples: int = DEFAULT_SAMPLES) -> tuple[np.ndarray, Report]:
    """
    Sampled ``D = i B S`` with checks.

    The Cayley comparison ``(D+i)(D-i)^{-1} = (B+S)(B-S)^{-1}`` is only
    asserted when ``S^2 = 1``; otherwise it is skipped with a note.
    """
    thetas = c.grid(n_samples)
    S, B = build_S(c), build_B(c)
    Sv, Bv = S.matrix.evaluate(thetas), B.matrix.evaluate(thetas)
    D = 1j * Bv @ Sv
    rep = Report("signature-operator")
    sa = float(np.max(np.abs(D - _ct(D)))) if D.size else 0.0
    rep.add(CheckResult("D-self-adjoint", sa, sa <= 1e-10))
    s_sq = (S @ S).distance(ModuleMap.identity(S.domain))
    if s_sq <= 1e-10:
        eye = np.eye(D.shape[1])
        cay = np.swapaxes(np.linalg.solve(np.swapaxes(D - 1j * eye, 1, 2), np.swapaxes(D + 1j * eye, 1, 2)), 1, 2)
        U = signature_unitary(c, n_samples)
        v = float(np.max(np.abs(cay - U.mats))) if D.size else 0.0
        rep.add(CheckResult("cayley-matches-signature", v, v <= 1e-8))
    else:
        rep.notes.append(f"S^2 != 1 (deviation {s_sq:.3g}); Cayley comparison skipped")
    return D, rep


# ----------------------------------------------------------------------
# direct sums


def direct_sum(c: HPComplexData, c2: HPComplexData, sign_flip: bool = False) -> HPComplexData:
    """Degreewise direct sum; with ``sign_flip`` the second duality is negated."""
    if c.n != c2.n:
        raise ValueError(f"complex lengths differ: {c.n} vs {c2.n}")
    kind = LOOP if LOOP in (c.kind, c2.kind) else MATRIX
    ranks = [a + b for a, b in zip(c.ranks, c2.ranks)]

    def dsum(m1: ModuleMap, m2: ModuleMap, sign: float = 1.0) -> ModuleMap:
        mat = block_diag([m1.matrix, m2.matrix * sign], kind)
        return ModuleMap.from_matrix(mat, kind)

    b = [dsum(x, y) for x, y in zip(c.b, c2.b)]
    T = None
    if c.T is not None and c2.T is not None:
        T = [dsum(x, y, -1.0 if sign_flip else 1.0) for x, y in zip(c.T, c2.T)]
    label = f"({c.label}) + {'-' if sign_flip else ''}({c2.label})"
    return HPComplexData(c.n, ranks, b, T, kind, label)
