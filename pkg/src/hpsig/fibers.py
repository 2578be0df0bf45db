"""
Fiberwise linear algebra for graded complexes: kernels, images, harmonic
representatives and the maps induced on cohomology.

Everything here works on stacks of complex matrices, one per sample angle.
A singular value counts as zero when it is at most ``svd_tol``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["SVD_TOL", "FiberCohomology", "induced_maps", "min_singular", "orth_complement_residual"]

SVD_TOL = 1e-8


def _ct(a: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(a, -1, -2))


def min_singular(m: np.ndarray) -> float:
    if m.shape[0] != m.shape[1]:
        return 0.0
    if m.size == 0:
        return np.inf
    return float(np.linalg.svd(m, compute_uv=False)[-1])


def orth_complement_residual(vectors: np.ndarray, basis: np.ndarray) -> float:
    """Frobenius norm (a bound for the operator norm) of the part of ``vectors`` orthogonal to span(``basis``)."""
    if vectors.size == 0:
        return 0.0
    resid = vectors - basis @ (_ct(basis) @ vectors) if basis.size else vectors
    return float(np.sqrt(np.sum(np.abs(resid) ** 2)))


@dataclass
class _DegreeSVD:
    rank: np.ndarray  # per fiber
    u: np.ndarray
    s: np.ndarray
    vh: np.ndarray


class FiberCohomology:
    """
    Kernels, images and harmonic spaces of a graded complex at every fiber.

    Parameters
    ----------
    ranks : sequence of int
        Ranks of ``E_0 .. E_n``.
    b_fibers : list of ndarray
        ``b_fibers[i]`` has shape ``(N, ranks[i+1], ranks[i])``.
    """

    def __init__(self, ranks, b_fibers, svd_tol: float = SVD_TOL, n_fibers: int | None = None):
        self.ranks = list(ranks)
        self.n = len(self.ranks) - 1
        self.n_fibers = b_fibers[0].shape[0] if b_fibers else (n_fibers or 1)
        self.svd_tol = svd_tol
        self.b = b_fibers
        self._svd = [self._decompose(b) for b in b_fibers]
        self._harm = [self._harmonic(k) for k in range(self.n + 1)]

    def _decompose(self, b: np.ndarray) -> _DegreeSVD:
        N, r, c = b.shape
        if r == 0 or c == 0:
            return _DegreeSVD(np.zeros(N, dtype=int), np.broadcast_to(np.eye(r, dtype=complex), (N, r, r)),
                              np.zeros((N, 0)), np.broadcast_to(np.eye(c, dtype=complex), (N, c, c)))
        u, s, vh = np.linalg.svd(b, full_matrices=True)
        rank = np.sum(s > self.svd_tol, axis=1)
        return _DegreeSVD(rank, u, s, vh)

    # subspaces at one fiber, as orthonormal column bases ----------------
    def kernel(self, k: int, j: int) -> np.ndarray:
        """Basis of ker b_k in E_k."""
        if k >= self.n:
            return np.eye(self.ranks[k], dtype=complex)
        d = self._svd[k]
        return _ct(d.vh[j])[:, d.rank[j]:]

    def image(self, k: int, j: int) -> np.ndarray:
        """Basis of im b_{k-1} in E_k."""
        if k == 0:
            return np.zeros((self.ranks[0], 0), dtype=complex)
        d = self._svd[k - 1]
        return d.u[j][:, : d.rank[j]]

    def coimage(self, k: int, j: int) -> np.ndarray:
        """Basis of im b_k^* in E_k."""
        if k >= self.n:
            return np.zeros((self.ranks[k], 0), dtype=complex)
        d = self._svd[k]
        return _ct(d.vh[j])[:, : d.rank[j]]

    def dual_kernel(self, k: int, j: int) -> np.ndarray:
        """Basis of ker b_{k-1}^* in E_k."""
        if k == 0:
            return np.eye(self.ranks[0], dtype=complex)
        d = self._svd[k - 1]
        return d.u[j][:, d.rank[j]:]

    def _harmonic(self, k: int) -> list[np.ndarray]:
        r = self.ranks[k]
        blocks = []
        if k < self.n:
            blocks.append(self.b[k])
        if k > 0:
            blocks.append(_ct(self.b[k - 1]))
        if r == 0:
            return [np.zeros((0, 0), dtype=complex)] * self.n_fibers
        if not blocks:
            return [np.eye(r, dtype=complex)] * self.n_fibers
        stacked = np.concatenate(blocks, axis=1)
        if stacked.shape[1] == 0:
            return [np.eye(r, dtype=complex)] * self.n_fibers
        _, s, vh = np.linalg.svd(stacked, full_matrices=True)
        out = []
        for j in range(self.n_fibers):
            rank = int(np.sum(s[j] > self.svd_tol))
            out.append(_ct(vh[j])[:, rank:])
        return out

    def harmonic(self, k: int, j: int) -> np.ndarray:
        return self._harm[k][j]

    def betti(self, j: int) -> tuple[int, ...]:
        return tuple(self._harm[k][j].shape[1] for k in range(self.n + 1))

    def betti_all(self) -> list[tuple[int, ...]]:
        return [self.betti(j) for j in range(self.n_fibers)]

    def acyclic(self, j: int) -> bool:
        return sum(self.betti(j)) == 0

    def rank_jump_fibers(self) -> list[int]:
        """Fibers whose cohomology dimensions differ from the most common pattern."""
        bettis = self.betti_all()
        values, counts = np.unique(np.array(bettis).reshape(len(bettis), -1), axis=0, return_counts=True)
        generic = tuple(values[int(np.argmax(counts))])
        return [j for j, bt in enumerate(bettis) if tuple(bt) != generic]


def induced_maps(src: FiberCohomology, dst: FiberCohomology, x_fibers: np.ndarray, k_src: int, k_dst: int) -> list[np.ndarray]:
    """
    Matrices of the map induced by ``x`` from harmonic ``H^{k_src}`` of ``src``
    to harmonic ``H^{k_dst}`` of ``dst``, one per fiber.

    The caller is responsible for ``x`` carrying cycles to cycles (of the
    appropriate differential) and boundaries to boundaries; projecting onto
    harmonic representatives then computes the class.
    """
    out = []
    for j in range(src.n_fibers):
        hs = src.harmonic(k_src, j)
        hd = dst.harmonic(k_dst, j)
        xj = x_fibers[j] if x_fibers.shape[0] > 1 else x_fibers[0]
        out.append(_ct(hd) @ xj @ hs)
    return out
