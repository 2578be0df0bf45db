"""Free Hilbert modules over the coefficient algebras and adjointable maps between them."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .loops import LOOP, MATRIX, AlgebraElement, sample_grid

__all__ = [
    "FreeModule",
    "ModuleVector",
    "ModuleMap",
    "inner_product",
    "map_adjoint",
    "rank_one",
    "is_positive",
]


@dataclass(frozen=True)
class FreeModule:
    algebra_kind: str
    rank: int

    def __post_init__(self):
        if self.algebra_kind not in (LOOP, MATRIX):
            raise ValueError(f"unknown algebra kind {self.algebra_kind!r}")
        if self.rank < 0:
            raise ValueError("rank must be nonnegative")

    def basis_vector(self, i: int) -> "ModuleVector":
        col = np.zeros((self.rank, 1), dtype=complex)
        col[i, 0] = 1.0
        return ModuleVector(self, AlgebraElement.constant(col, self.algebra_kind))

    def zero(self) -> "ModuleVector":
        return ModuleVector(self, AlgebraElement.zeros(self.rank, 1, self.algebra_kind))


@dataclass(frozen=True)
class ModuleVector:
    module: FreeModule
    components: AlgebraElement

    def __post_init__(self):
        if self.components.shape != (self.module.rank, 1):
            raise ValueError("components must form a rank x 1 column")

    def __add__(self, other: "ModuleVector") -> "ModuleVector":
        _same_module(self.module, other.module)
        return ModuleVector(self.module, self.components + other.components)

    def times(self, a: AlgebraElement) -> "ModuleVector":
        """Right action of a 1x1 algebra element."""
        return ModuleVector(self.module, self.components @ a)


def _same_module(m1: FreeModule, m2: FreeModule) -> None:
    if m1.rank != m2.rank:
        raise ValueError(f"rank mismatch: {m1.rank} vs {m2.rank}")


@dataclass(frozen=True)
class ModuleMap:
    domain: FreeModule
    codomain: FreeModule
    matrix: AlgebraElement

    def __post_init__(self):
        if self.matrix.shape != (self.codomain.rank, self.domain.rank):
            raise ValueError(
                f"matrix shape {self.matrix.shape} does not match "
                f"{self.codomain.rank} x {self.domain.rank}"
            )

    @classmethod
    def from_matrix(cls, matrix: AlgebraElement, kind: str | None = None) -> "ModuleMap":
        kind = kind or matrix.kind
        rows, cols = matrix.shape
        return cls(FreeModule(kind, cols), FreeModule(kind, rows), matrix)

    @classmethod
    def zero(cls, domain: FreeModule, codomain: FreeModule) -> "ModuleMap":
        return cls(domain, codomain, AlgebraElement.zeros(codomain.rank, domain.rank, domain.algebra_kind))

    @classmethod
    def identity(cls, module: FreeModule) -> "ModuleMap":
        return cls(module, module, AlgebraElement.identity(module.rank, module.algebra_kind))

    @property
    def kind(self) -> str:
        return self.matrix.kind

    def __call__(self, v: ModuleVector) -> ModuleVector:
        _same_module(self.domain, v.module)
        return ModuleVector(self.codomain, self.matrix @ v.components)

    def __matmul__(self, other: "ModuleMap") -> "ModuleMap":
        _same_module(self.domain, other.codomain)
        return ModuleMap(other.domain, self.codomain, self.matrix @ other.matrix)

    def __add__(self, other: "ModuleMap") -> "ModuleMap":
        _same_module(self.domain, other.domain)
        _same_module(self.codomain, other.codomain)
        return ModuleMap(self.domain, self.codomain, self.matrix + other.matrix)

    def __sub__(self, other: "ModuleMap") -> "ModuleMap":
        return self + (-1.0) * other

    def __neg__(self) -> "ModuleMap":
        return (-1.0) * self

    def __mul__(self, scalar) -> "ModuleMap":
        return ModuleMap(self.domain, self.codomain, self.matrix * scalar)

    __rmul__ = __mul__

    def adjoint(self) -> "ModuleMap":
        return map_adjoint(self)

    @property
    def H(self) -> "ModuleMap":
        return map_adjoint(self)

    def evaluate(self, theta) -> np.ndarray:
        return self.matrix.evaluate(theta)

    def max_abs(self) -> float:
        return self.matrix.max_abs()

    def distance(self, other: "ModuleMap") -> float:
        return self.matrix.distance(other.matrix)


def inner_product(v: ModuleVector, w: ModuleVector) -> AlgebraElement:
    """``<v, w> = sum_i v_i^* w_i``, a 1x1 element of the algebra."""
    _same_module(v.module, w.module)
    return v.components.adjoint() @ w.components


def map_adjoint(t: ModuleMap) -> ModuleMap:
    return ModuleMap(t.codomain, t.domain, t.matrix.adjoint())


def rank_one(v: ModuleVector, w: ModuleVector) -> ModuleMap:
    """The map ``u -> v <w, u>`` from ``w``'s module to ``v``'s module."""
    return ModuleMap(w.module, v.module, v.components @ w.components.adjoint())


def is_positive(a: AlgebraElement, n_samples: int = 256, tol: float = 1e-10) -> bool:
    """Fiberwise positivity of a square element: all eigenvalues >= -tol and self-adjoint."""
    thetas = sample_grid(n_samples) if a.kind == LOOP else np.zeros(1)
    vals = a.evaluate(thetas)
    herm = vals - np.conj(np.swapaxes(vals, 1, 2))
    if vals.size and np.max(np.abs(herm)) > 1e3 * tol:
        return False
    if vals.size == 0:
        return True
    eig = np.linalg.eigvalsh(0.5 * (vals + np.conj(np.swapaxes(vals, 1, 2))))
    return bool(np.min(eig) >= -tol)
