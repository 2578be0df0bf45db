"""
Coefficient algebras: complex matrices and matrices of trigonometric
polynomials on the unit circle.

Loop data is stored as banded Fourier coefficients.  A matrix-valued loop
with band ``K`` is an array of shape ``(2K+1, rows, cols)`` whose slice ``j``
holds the coefficient of ``z**(j - K)``.  Arithmetic on these arrays is exact
polynomial arithmetic (up to floating point); only evaluation at sample
points ``z = exp(i*theta)`` leaves the banded world.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "LOOP",
    "MATRIX",
    "DEFAULT_SAMPLES",
    "LoopScalar",
    "AlgebraElement",
    "loop_mul",
    "adjoint",
    "evaluate",
    "sup_norm_estimate",
    "sample_grid",
    "block_matrix",
    "block_diag",
]

LOOP = "loop"
MATRIX = "matrix"
DEFAULT_SAMPLES = 256


def sample_grid(n_samples: int) -> np.ndarray:
    """Equispaced angles ``2*pi*j/n`` for ``j = 0..n-1``."""
    if n_samples < 1:
        raise ValueError("need at least one sample")
    return 2.0 * np.pi * np.arange(n_samples) / n_samples


def _phases(thetas: np.ndarray, band: int) -> np.ndarray:
    ks = np.arange(-band, band + 1)
    return np.exp(1j * np.outer(np.atleast_1d(thetas), ks))


@dataclass(frozen=True)
class LoopScalar:
    """A trigonometric polynomial ``sum_k c_k z**k`` with ``|k| <= band``."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex).ravel()
        if c.size % 2 != 1:
            raise ValueError("coefficient vector must have odd length 2K+1")
        object.__setattr__(self, "coeffs", c)

    @property
    def band(self) -> int:
        return (self.coeffs.size - 1) // 2

    @classmethod
    def from_dict(cls, terms: dict[int, complex]) -> "LoopScalar":
        band = max((abs(k) for k in terms), default=0)
        c = np.zeros(2 * band + 1, dtype=complex)
        for k, v in terms.items():
            c[k + band] += v
        return cls(c)

    @classmethod
    def constant(cls, value: complex) -> "LoopScalar":
        return cls(np.array([value], dtype=complex))

    def coefficient(self, k: int) -> complex:
        if abs(k) > self.band:
            return 0j
        return complex(self.coeffs[k + self.band])

    def adjoint(self) -> "LoopScalar":
        return LoopScalar(np.conj(self.coeffs[::-1]))

    def evaluate(self, theta):
        vals = _phases(np.asarray(theta, dtype=float), self.band) @ self.coeffs
        return vals if np.ndim(theta) else complex(vals[0])

    def __mul__(self, other):
        if isinstance(other, LoopScalar):
            return loop_mul(self, other)
        return LoopScalar(self.coeffs * other)

    __rmul__ = __mul__

    def __add__(self, other: "LoopScalar") -> "LoopScalar":
        band = max(self.band, other.band)
        out = np.zeros(2 * band + 1, dtype=complex)
        out[band - self.band : band + self.band + 1] += self.coeffs
        out[band - other.band : band + other.band + 1] += other.coeffs
        return LoopScalar(out)

    def __neg__(self):
        return LoopScalar(-self.coeffs)

    def __sub__(self, other):
        return self + (-other)


def loop_mul(a: LoopScalar, b: LoopScalar) -> LoopScalar:
    """Cauchy product of Fourier coefficients; the band of the result is the sum of bands."""
    return LoopScalar(np.convolve(a.coeffs, b.coeffs))


class AlgebraElement:
    """
    A (possibly rectangular) matrix over the coefficient algebra.

    Parameters
    ----------
    coeffs : array_like, shape (2K+1, rows, cols)
        Fourier coefficients ordered ``k = -K .. K``.  A 2-D array is taken
        as a constant (band 0) matrix.
    kind : {"loop", "matrix"}
        ``"matrix"`` elements are plain complex matrices and always have band 0.
    """

    __slots__ = ("coeffs", "kind")

    def __init__(self, coeffs, kind: str = LOOP):
        c = np.asarray(coeffs, dtype=complex)
        if c.ndim == 2:
            c = c[None]
        if c.ndim != 3 or c.shape[0] % 2 != 1:
            raise ValueError("coefficients must have shape (2K+1, rows, cols)")
        if kind not in (LOOP, MATRIX):
            raise ValueError(f"unknown algebra kind {kind!r}")
        if kind == MATRIX and c.shape[0] != 1:
            raise ValueError("complex-matrix elements carry no Fourier band")
        self.coeffs = c
        self.kind = kind

    # construction -------------------------------------------------------
    @classmethod
    def zeros(cls, rows: int, cols: int, kind: str = LOOP) -> "AlgebraElement":
        return cls(np.zeros((1, rows, cols), dtype=complex), kind)

    @classmethod
    def identity(cls, dim: int, kind: str = LOOP) -> "AlgebraElement":
        return cls(np.eye(dim, dtype=complex)[None], kind)

    @classmethod
    def constant(cls, matrix, kind: str = LOOP) -> "AlgebraElement":
        m = np.atleast_2d(np.asarray(matrix, dtype=complex))
        return cls(m[None], kind)

    @classmethod
    def from_terms(cls, terms: dict[int, object], shape: tuple[int, int] | None = None) -> "AlgebraElement":
        """Build a loop matrix from ``{power: coefficient matrix}``."""
        mats = {k: np.atleast_2d(np.asarray(v, dtype=complex)) for k, v in terms.items()}
        if shape is None:
            shape = next(iter(mats.values())).shape
        band = max((abs(k) for k in mats), default=0)
        c = np.zeros((2 * band + 1,) + tuple(shape), dtype=complex)
        for k, v in mats.items():
            c[k + band] += v
        return cls(c, LOOP)

    @classmethod
    def from_scalars(cls, entries: Sequence[Sequence[LoopScalar]]) -> "AlgebraElement":
        rows, cols = len(entries), len(entries[0]) if entries else 0
        band = max((e.band for row in entries for e in row), default=0)
        c = np.zeros((2 * band + 1, rows, cols), dtype=complex)
        for i, row in enumerate(entries):
            for j, e in enumerate(row):
                c[band - e.band : band + e.band + 1, i, j] = e.coeffs
        return cls(c, LOOP)

    # shape --------------------------------------------------------------
    @property
    def band(self) -> int:
        return (self.coeffs.shape[0] - 1) // 2

    @property
    def shape(self) -> tuple[int, int]:
        return self.coeffs.shape[1], self.coeffs.shape[2]

    @property
    def dim(self) -> int:
        r, c = self.shape
        if r != c:
            raise ValueError("dim is only defined for square elements")
        return r

    def entry(self, i: int, j: int) -> LoopScalar:
        return LoopScalar(self.coeffs[:, i, j])

    def coefficient(self, k: int) -> np.ndarray:
        if abs(k) > self.band:
            return np.zeros(self.shape, dtype=complex)
        return self.coeffs[k + self.band]

    def padded(self, band: int) -> np.ndarray:
        if band < self.band:
            raise ValueError("cannot pad to a smaller band")
        out = np.zeros((2 * band + 1,) + self.shape, dtype=complex)
        out[band - self.band : band + self.band + 1] = self.coeffs
        return out

    def trimmed(self, tol: float = 0.0) -> "AlgebraElement":
        """Drop outer bands whose coefficients are all below ``tol`` in modulus."""
        c = self.coeffs
        band = self.band
        while band > 0:
            outer = np.concatenate([c[0].ravel(), c[-1].ravel()])
            if outer.size and np.max(np.abs(outer)) > tol:
                break
            c = c[1:-1]
            band -= 1
        return AlgebraElement(c, self.kind)

    # arithmetic ---------------------------------------------------------
    def _kind_with(self, other: "AlgebraElement") -> str:
        return LOOP if LOOP in (self.kind, other.kind) else MATRIX

    def __add__(self, other: "AlgebraElement") -> "AlgebraElement":
        if self.shape != other.shape:
            raise ValueError(f"shape mismatch {self.shape} vs {other.shape}")
        band = max(self.band, other.band)
        return AlgebraElement(self.padded(band) + other.padded(band), self._kind_with(other))

    def __neg__(self) -> "AlgebraElement":
        return AlgebraElement(-self.coeffs, self.kind)

    def __sub__(self, other: "AlgebraElement") -> "AlgebraElement":
        return self + (-other)

    def __mul__(self, scalar) -> "AlgebraElement":
        if isinstance(scalar, AlgebraElement):
            return self @ scalar
        return AlgebraElement(self.coeffs * complex(scalar), self.kind)

    __rmul__ = __mul__

    def __matmul__(self, other: "AlgebraElement") -> "AlgebraElement":
        if self.shape[1] != other.shape[0]:
            raise ValueError(f"cannot compose {self.shape} with {other.shape}")
        a, b = self.coeffs, other.coeffs
        out = np.zeros((a.shape[0] + b.shape[0] - 1, self.shape[0], other.shape[1]), dtype=complex)
        # Cauchy product over the shorter coefficient stack
        if a.shape[0] <= b.shape[0]:
            for i in range(a.shape[0]):
                out[i : i + b.shape[0]] += np.matmul(a[i], b)
        else:
            for j in range(b.shape[0]):
                out[j : j + a.shape[0]] += np.matmul(a, b[j])
        return AlgebraElement(out, self._kind_with(other))

    def adjoint(self) -> "AlgebraElement":
        return AlgebraElement(np.conj(self.coeffs[::-1]).transpose(0, 2, 1), self.kind)

    @property
    def H(self) -> "AlgebraElement":
        return self.adjoint()

    # fibers -------------------------------------------------------------
    def evaluate(self, theta) -> np.ndarray:
        """Value at ``z = exp(i*theta)``; a stack of matrices if ``theta`` is an array."""
        th = np.asarray(theta, dtype=float)
        vals = np.einsum("nk,krc->nrc", _phases(th, self.band), self.coeffs)
        return vals if th.ndim else vals[0]

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.coeffs))) if self.coeffs.size else 0.0

    def is_zero(self, tol: float = 0.0) -> bool:
        return self.max_abs() <= tol

    def distance(self, other: "AlgebraElement") -> float:
        """Largest coefficientwise difference."""
        return (self - other).max_abs()

    def __repr__(self) -> str:
        return f"AlgebraElement(kind={self.kind!r}, shape={self.shape}, band={self.band})"

    # serialization ------------------------------------------------------
    def to_json(self) -> dict:
        rows, cols = self.shape
        entries = []
        for i in range(rows):
            row = []
            for j in range(cols):
                e = self.entry(i, j)
                row.append({"band": e.band, "coeffs": [[float(v.real), float(v.imag)] for v in e.coeffs]})
            entries.append(row)
        out = {"kind": self.kind, "entries": entries}
        if rows == cols:
            out["dim"] = rows
        else:
            out["rows"], out["cols"] = rows, cols
        return out

    @classmethod
    def from_json(cls, data: dict) -> "AlgebraElement":
        kind = data.get("kind", LOOP)
        if kind not in (LOOP, MATRIX):
            raise ValueError(f"unknown algebra kind {kind!r}")
        entries = data["entries"]
        rows = data.get("rows", data.get("dim", len(entries)))
        cols = data.get("cols", data.get("dim", len(entries[0]) if entries else 0))
        if len(entries) != rows or any(len(r) != cols for r in entries):
            raise ValueError("entries do not match the declared shape")
        scalars = []
        for row in entries:
            srow = []
            for e in row:
                if isinstance(e, dict):
                    band = int(e["band"])
                    coeffs = [complex(re, im) for re, im in e["coeffs"]]
                    if len(coeffs) != 2 * band + 1:
                        raise ValueError("coefficient list does not match band")
                    srow.append(LoopScalar(np.array(coeffs)))
                else:
                    re, im = e
                    srow.append(LoopScalar.constant(complex(re, im)))
            scalars.append(srow)
        if rows == 0 or cols == 0:
            return cls.zeros(rows, cols, kind)
        el = cls.from_scalars(scalars)
        if kind == MATRIX:
            if el.band > 0 and np.max(np.abs(el.coeffs[np.arange(el.coeffs.shape[0]) != el.band])) > 0:
                raise ValueError("matrix-kind element has nonzero Fourier modes")
            return cls(el.coeffs[el.band : el.band + 1], MATRIX)
        return el


def adjoint(a: AlgebraElement) -> AlgebraElement:
    return a.adjoint()


def evaluate(a: AlgebraElement, theta) -> np.ndarray:
    return a.evaluate(theta)


def sup_norm_estimate(a: AlgebraElement, n_samples: int = DEFAULT_SAMPLES) -> float:
    """Maximum spectral norm of ``a`` over an equispaced grid.

    Refuses grids coarser than ``2*band + 1`` points, where the sampled
    maximum can miss the true one entirely.
    """
    if n_samples < 2 * a.band + 1:
        raise ValueError(f"{n_samples} samples cannot resolve band {a.band}")
    if 0 in a.shape:
        return 0.0
    vals = a.evaluate(sample_grid(n_samples))
    return float(np.max(np.linalg.svd(vals, compute_uv=False)[:, 0]))


def block_matrix(blocks: Sequence[Sequence[AlgebraElement | None]], row_sizes: Sequence[int],
                 col_sizes: Sequence[int], kind: str | None = None) -> AlgebraElement:
    """Assemble a block matrix; ``None`` entries are zero blocks."""
    present = [b for row in blocks for b in row if b is not None]
    band = max((b.band for b in present), default=0)
    if kind is None:
        kind = LOOP if any(b.kind == LOOP for b in present) else MATRIX
    ro = np.concatenate([[0], np.cumsum(row_sizes)]).astype(int)
    co = np.concatenate([[0], np.cumsum(col_sizes)]).astype(int)
    out = np.zeros((2 * band + 1, ro[-1], co[-1]), dtype=complex)
    for i, row in enumerate(blocks):
        for j, b in enumerate(row):
            if b is None:
                continue
            if b.shape != (row_sizes[i], col_sizes[j]):
                raise ValueError(f"block ({i},{j}) has shape {b.shape}, expected {(row_sizes[i], col_sizes[j])}")
            out[:, ro[i] : ro[i + 1], co[j] : co[j + 1]] = b.padded(band)
    return AlgebraElement(out, kind)


def block_diag(items: Iterable[AlgebraElement], kind: str | None = None) -> AlgebraElement:
    items = list(items)
    rows = [b.shape[0] for b in items]
    cols = [b.shape[1] for b in items]
    grid = [[items[i] if i == j else None for j in range(len(items))] for i in range(len(items))]
    return block_matrix(grid, rows, cols, kind)
