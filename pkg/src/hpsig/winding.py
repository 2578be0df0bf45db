"""
Sampled unitary loops and their K1 invariant, the winding number of the
determinant.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .loops import LOOP, MATRIX, AlgebraElement, sample_grid

__all__ = [
    "UnitaryLoop",
    "K1Class",
    "K1Comparison",
    "LoopTooWildError",
    "winding_number",
    "winding_with_residual",
    "k1_class",
    "k1_equal",
    "morita_transport",
    "stabilize",
    "unitary_loop_from_element",
]

UNITARY_TOL = 1e-9
MAX_SAMPLES = 4096


class LoopTooWildError(RuntimeError):
    pass


@dataclass
class UnitaryLoop:
    """
    A unitary-valued loop known through samples.

    ``sampler``, when present, evaluates the loop at arbitrary angles and is
    used to refine the grid.  Loops built from JSON carry no sampler and
    cannot be refined.
    """

    thetas: np.ndarray
    mats: np.ndarray
    kind: str = LOOP
    sampler: Optional[Callable[[np.ndarray], np.ndarray]] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.thetas = np.asarray(self.thetas, dtype=float)
        self.mats = np.asarray(self.mats, dtype=complex)
        if self.mats.ndim != 3 or self.mats.shape[1] != self.mats.shape[2]:
            raise ValueError("samples must be square matrices")
        if self.thetas.shape != (self.mats.shape[0],):
            raise ValueError("one angle per sample required")
        order = np.argsort(self.thetas, kind="stable")
        self.thetas = self.thetas[order]
        self.mats = self.mats[order]

    @property
    def dim(self) -> int:
        return self.mats.shape[1]

    @property
    def samples(self) -> list[tuple[float, np.ndarray]]:
        return list(zip(self.thetas.tolist(), self.mats))

    def unitarity_defect(self) -> float:
        if self.dim == 0:
            return 0.0
        eye = np.eye(self.dim)
        gram = np.conj(np.swapaxes(self.mats, 1, 2)) @ self.mats
        return float(np.max(np.abs(gram - eye)))

    def max_step(self) -> float:
        """Largest spectral-norm jump between consecutive samples (wrapping around)."""
        if self.mats.shape[0] < 2 or self.dim == 0:
            return 0.0
        diff = np.roll(self.mats, -1, axis=0) - self.mats
        return float(np.max(np.linalg.svd(diff, compute_uv=False)[:, 0]))

    def refined(self, n_samples: int) -> "UnitaryLoop":
        if self.sampler is None:
            raise LoopTooWildError("loop has no sampler and cannot be refined")
        th = sample_grid(n_samples)
        return UnitaryLoop(th, self.sampler(th), self.kind, self.sampler)

    def adjoint(self) -> "UnitaryLoop":
        smp = None
        if self.sampler is not None:
            base = self.sampler
            smp = lambda th: np.conj(np.swapaxes(base(th), 1, 2))
        return UnitaryLoop(self.thetas, np.conj(np.swapaxes(self.mats, 1, 2)), self.kind, smp)

    def direct_sum(self, other: "UnitaryLoop") -> "UnitaryLoop":
        if not np.allclose(self.thetas, other.thetas):
            raise ValueError("direct sum needs a common sample grid")
        smp = None
        if self.sampler is not None and other.sampler is not None:
            a, b = self.sampler, other.sampler
            smp = lambda th: _stack_diag(a(th), b(th))
        kind = LOOP if LOOP in (self.kind, other.kind) else MATRIX
        return UnitaryLoop(self.thetas, _stack_diag(self.mats, other.mats), kind, smp)

    def to_json(self) -> dict:
        return {
            "kind": "unitary-loop",
            "algebra": self.kind,
            "dim": self.dim,
            "samples": [
                {"theta": float(t), "matrix": [[[float(v.real), float(v.imag)] for v in row] for row in m]}
                for t, m in zip(self.thetas, self.mats)
            ],
        }

    @classmethod
    def from_json(cls, data: dict) -> "UnitaryLoop":
        if data.get("kind") != "unitary-loop":
            raise ValueError("not a unitary-loop document")
        dim = int(data["dim"])
        thetas, mats = [], []
        for s in data["samples"]:
            m = np.array([[complex(re, im) for re, im in row] for row in s["matrix"]], dtype=complex)
            if m.shape != (dim, dim):
                raise ValueError("sample matrix does not match dim")
            thetas.append(float(s["theta"]))
            mats.append(m)
        return cls(np.array(thetas), np.array(mats).reshape(len(mats), dim, dim), data.get("algebra", LOOP))


def _stack_diag(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    n, da, db = a.shape[0], a.shape[1], b.shape[1]
    out = np.zeros((n, da + db, da + db), dtype=complex)
    out[:, :da, :da] = a
    out[:, da:, da:] = b
    return out


def unitary_loop_from_element(u: AlgebraElement, n_samples: int = 256) -> UnitaryLoop:
    """Sample a banded loop matrix (e.g. ``[z]``) as a unitary loop."""
    if u.kind == MATRIX:
        return UnitaryLoop(np.zeros(1), u.evaluate(np.zeros(1)), MATRIX)
    th = sample_grid(max(n_samples, 2 * u.band + 1))
    return UnitaryLoop(th, u.evaluate(th), LOOP, u.evaluate)


def winding_with_residual(u: UnitaryLoop, max_samples: int = MAX_SAMPLES) -> tuple[int, float, int]:
    """Winding number of ``det u``, the rounding residual, and the grid size used."""
    if u.kind == MATRIX:
        return 0, 0.0, u.mats.shape[0]
    defect = u.unitarity_defect()
    if defect > UNITARY_TOL:
        raise ValueError(f"loop is not unitary (defect {defect:.3g})")
    if u.dim == 0:
        return 0, 0.0, u.mats.shape[0]
    cur = u
    while True:
        dets = np.linalg.det(cur.mats)
        steps = np.angle(np.roll(dets, -1) / dets)
        if cur.mats.shape[0] > 1 and np.max(np.abs(steps)) < np.pi / 2:
            break
        n_next = 2 * cur.mats.shape[0]
        if cur.sampler is None or n_next > max_samples:
            raise LoopTooWildError(
                f"determinant phase jumps by {np.max(np.abs(steps)):.3f} rad on a "
                f"{cur.mats.shape[0]}-point grid; loop too wild"
            )
        cur = cur.refined(n_next)
    total = float(np.sum(steps)) / (2 * np.pi)
    w = int(round(total))
    residual = abs(total - w)
    if residual >= 0.1:
        raise LoopTooWildError(f"winding residual {residual:.3f} too large")
    return w, residual, cur.mats.shape[0]


def winding_number(u: UnitaryLoop, max_samples: int = MAX_SAMPLES) -> int:
    return winding_with_residual(u, max_samples)[0]


@dataclass(frozen=True)
class K1Class:
    algebra_kind: str
    value: int

    def __add__(self, other: "K1Class") -> "K1Class":
        kind = LOOP if LOOP in (self.algebra_kind, other.algebra_kind) else MATRIX
        return K1Class(kind, self.value + other.value)


def k1_class(u: UnitaryLoop) -> K1Class:
    if u.kind == MATRIX:
        return K1Class(MATRIX, 0)
    return K1Class(LOOP, winding_number(u))


@dataclass(frozen=True)
class K1Comparison:
    equal: bool
    windings: tuple[int, int]
    notice: str | None = None

    def __bool__(self) -> bool:
        return self.equal


def stabilize(u: UnitaryLoop, dim: int) -> UnitaryLoop:
    """Pad with an identity block up to ``dim``."""
    if dim < u.dim:
        raise ValueError("cannot stabilize to a smaller size")
    pad = dim - u.dim
    if pad == 0:
        return u
    eye = np.broadcast_to(np.eye(pad, dtype=complex), (u.mats.shape[0], pad, pad))
    smp = None
    if u.sampler is not None:
        base = u.sampler
        smp = lambda th: _stack_diag(base(th), np.broadcast_to(np.eye(pad, dtype=complex), (len(th), pad, pad)))
    return UnitaryLoop(u.thetas, _stack_diag(u.mats, eye), u.kind, smp)


def k1_equal(u1: UnitaryLoop, u2: UnitaryLoop) -> K1Comparison:
    if u1.kind == MATRIX or u2.kind == MATRIX:
        return K1Comparison(True, (0, 0), "K1 of a complex matrix algebra vanishes; classes agree trivially")
    dim = max(u1.dim, u2.dim)
    w1 = winding_number(stabilize(u1, dim))
    w2 = winding_number(stabilize(u2, dim))
    return K1Comparison(w1 == w2, (w1, w2))


def morita_transport(u: UnitaryLoop, block_size: int, layout: str = "block") -> UnitaryLoop:
    """
    Transport a unitary over ``M_m(C(S^1))`` to one over ``C(S^1)``.

    A ``k x k`` matrix with entries in ``M_m`` becomes a ``km x km`` loop
    matrix acting on ``A^k (x)_A C(S^1)^m``.  ``layout="block"`` means the
    input is already indexed ``(i, a) -> i*m + a``; ``layout="interleaved"``
    means it is indexed ``a*k + i`` and is reordered first.
    """
    m = int(block_size)
    if m < 1 or u.dim % m:
        raise ValueError(f"dimension {u.dim} is not a multiple of block size {m}")
    k = u.dim // m
    if layout == "block":
        perm = np.arange(u.dim)
    elif layout == "interleaved":
        perm = np.array([a * k + i for i in range(k) for a in range(m)], dtype=int)
    else:
        raise ValueError(f"unknown layout {layout!r}")
    mats = u.mats[:, perm][:, :, perm]
    smp = None
    if u.sampler is not None:
        base = u.sampler
        smp = lambda th: base(th)[:, perm][:, :, perm]
    return UnitaryLoop(u.thetas, mats, u.kind, smp)
