"""
Discrete foliation models and generators of test complexes.

A suspension model discretizes the mapping torus of a permutation
``sigma`` of ``m`` points.  Each ``sigma``-cycle of length ``c`` is a leaf
circle cut into ``c*k`` vertices and edges.  After a Fourier transform
along the grading the cochain complex of each leaf becomes

    b = P - I,     P[q, q+1] = 1,     P[L-1, 0] = z        (L = c*k)

over the loop algebra, with the averaging duality ``T_0 = (I + P)/2`` and
``T_1 = (I + P^*)/2``.  The single ``z`` sits on the edge that closes the
cycle, starting from the smallest point of the cycle.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.linalg import null_space

from .complexes import EXACT_TOL, HPComplexData, direct_sum, validate_duality
from .groupoids import Z_GRADED, DiscreteGroupoid
from .homotopy import ChainMap
from .loops import LOOP, MATRIX, AlgebraElement, block_diag
from .modules import ModuleMap

__all__ = [
    "parse_permutation",
    "format_permutation",
    "permutation_cycles",
    "conjugate_permutation",
    "compose_permutations",
    "SuspensionModel",
    "suspension_model",
    "subdivision_equivalence",
    "coarsening_map",
    "prism_homotopy",
    "conjugation_isomorphism",
    "random_hp_complex",
    "acyclic_padding",
    "cycle_graph_complex",
]


# ----------------------------------------------------------------------
# permutations


def parse_permutation(text: str, m: int | None = None) -> tuple[int, ...]:
    """
    Parse cycle notation with 1-based labels, e.g. ``"(1 2)(3)"`` or
    ``"(1,3,2)"``.  ``"id"`` and ``"()"`` mean the identity.  The number of
    points is the largest label unless ``m`` is given.
    """
    s = text.strip()
    if s.lower() in ("id", "e", ""):
        s = "()"
    if not re.fullmatch(r"(\(\s*(\d+([\s,]+\d+)*)?\s*\)\s*)+", s):
        raise ValueError(f"cannot parse permutation {text!r}")
    cycles = [[int(v) for v in re.split(r"[\s,]+", body.strip())] if body.strip() else []
              for body in re.findall(r"\(([^)]*)\)", s)]
    labels = [v for cyc in cycles for v in cyc]
    if any(v < 1 for v in labels):
        raise ValueError("labels start at 1")
    if len(labels) != len(set(labels)):
        raise ValueError("a point appears in two cycles")
    size = max(labels, default=1)
    if m is not None:
        if m < size:
            raise ValueError(f"permutation moves point {size} but only {m} points were requested")
        size = m
    perm = list(range(size))
    for cyc in cycles:
        for a, b in zip(cyc, cyc[1:] + cyc[:1]):
            perm[a - 1] = b - 1
    return tuple(perm)


def permutation_cycles(perm: Sequence[int]) -> list[list[int]]:
    """Cycles starting at their smallest point, ordered by that point."""
    seen: set[int] = set()
    out = []
    for start in range(len(perm)):
        if start in seen:
            continue
        cyc, x = [], start
        while x not in seen:
            seen.add(x)
            cyc.append(x)
            x = perm[x]
        out.append(cyc)
    return out


def format_permutation(perm: Sequence[int]) -> str:
    return "".join("(" + " ".join(str(x + 1) for x in cyc) + ")" for cyc in permutation_cycles(perm))


def compose_permutations(a: Sequence[int], b: Sequence[int]) -> tuple[int, ...]:
    """``a o b``."""
    return tuple(a[b[x]] for x in range(len(b)))


def conjugate_permutation(sigma: Sequence[int], tau: Sequence[int]) -> tuple[int, ...]:
    """``tau sigma tau^{-1}``."""
    if len(sigma) != len(tau):
        raise ValueError("permutations act on different point sets")
    inv = [0] * len(tau)
    for x, y in enumerate(tau):
        inv[y] = x
    return tuple(tau[sigma[inv[y]]] for y in range(len(tau)))


# ----------------------------------------------------------------------
# suspension models


def _shift(L: int) -> AlgebraElement:
    c = np.zeros((3, L, L), dtype=complex)
    for q in range(L - 1):
        c[1, q, q + 1] = 1.0
    c[2, L - 1, 0] += 1.0
    return AlgebraElement(c, LOOP)


@dataclass
class SuspensionModel:
    sigma: tuple[int, ...]
    k: int
    cycles: list[list[int]]
    complex: HPComplexData
    groupoid: DiscreteGroupoid = field(repr=False)

    @property
    def blocks(self) -> list[tuple[int, int]]:
        return self.complex.blocks

    @property
    def block_sizes(self) -> list[int]:
        return [size for _, size in self.blocks]


def suspension_model(sigma: Sequence[int] | str, k: int = 1) -> SuspensionModel:
    if isinstance(sigma, str):
        sigma = parse_permutation(sigma)
    sigma = tuple(int(v) for v in sigma)
    if len(sigma) < 1 or k < 1:
        raise ValueError("need at least one point and one vertex per fundamental domain")
    if sorted(sigma) != list(range(len(sigma))):
        raise ValueError("not a permutation")
    cycles = permutation_cycles(sigma)
    shifts = [_shift(len(c) * k) for c in cycles]
    eyes = [AlgebraElement.identity(len(c) * k) for c in cycles]
    P = block_diag(shifts, LOOP)
    eye = block_diag(eyes, LOOP)
    b = P - eye
    T0 = (eye + P) * 0.5
    T1 = (eye + P.adjoint()) * 0.5
    L = len(sigma) * k
    label = f"suspension sigma={format_permutation(sigma)} k={k}"
    blocks, off = [], 0
    for c in cycles:
        blocks.append((off, len(c) * k))
        off += len(c) * k
    cx = HPComplexData(1, [L, L], [ModuleMap.from_matrix(b)],
                       [ModuleMap.from_matrix(T0), ModuleMap.from_matrix(T1)], LOOP, label, blocks)
    groupoid = DiscreteGroupoid(len(sigma), Z_GRADED, sigma=sigma)
    return SuspensionModel(sigma, k, cycles, cx, groupoid)


def _per_block(model: SuspensionModel, fine_model: SuspensionModel, build) -> AlgebraElement:
    """Assemble a block-diagonal map from per-cycle pieces ``build(L_src, L_dst)``."""
    pieces = [build(ls, ld) for (_, ls), (_, ld) in zip(model.blocks, fine_model.blocks)]
    return block_diag(pieces, LOOP)


def _interpolation(L: int, f: int) -> AlgebraElement:
    c = np.zeros((3, L * f, L), dtype=complex)
    for q in range(L):
        for t in range(f):
            row = q * f + t
            c[1, row, q] += (f - t) / f
            if t:
                if q + 1 < L:
                    c[1, row, q + 1] += t / f
                else:
                    c[2, row, 0] += t / f
    return AlgebraElement(c, LOOP)


def _edge_split(L: int, f: int) -> AlgebraElement:
    c = np.zeros((L * f, L), dtype=complex)
    for q in range(L):
        c[q * f : (q + 1) * f, q] = 1.0 / f
    return AlgebraElement.constant(c)


def subdivision_equivalence(model: SuspensionModel, factor: int) -> ChainMap:
    """
    Chain map from the model with ``k`` vertices per fundamental domain to
    the one with ``k*factor``: vertex values are kept and linearly
    interpolated, edge values are split evenly.
    """
    if factor < 1:
        raise ValueError("factor must be positive")
    if factor == 1:
        return ChainMap.identity(model.complex)
    fine = suspension_model(model.sigma, model.k * factor)
    A0 = _per_block(model, fine, lambda ls, ld: _interpolation(ls, factor))
    A1 = _per_block(model, fine, lambda ls, ld: _edge_split(ls, factor))
    return ChainMap(model.complex, fine.complex, [ModuleMap.from_matrix(A0), ModuleMap.from_matrix(A1)],
                    f"subdivide x{factor}")


def coarsening_map(model: SuspensionModel, factor: int) -> ChainMap:
    """
    Chain map from the ``k*factor`` model back to ``model``: restrict
    vertex values to the coarse vertices and sum the sub-edges.
    """
    fine = suspension_model(model.sigma, model.k * factor)

    def restrict(L, _):
        c = np.zeros((L, L * factor))
        for q in range(L):
            c[q, q * factor] = 1.0
        return AlgebraElement.constant(c)

    def collect(L, _):
        c = np.zeros((L, L * factor))
        for q in range(L):
            c[q, q * factor : (q + 1) * factor] = 1.0
        return AlgebraElement.constant(c)

    R0 = _per_block(model, fine, restrict)
    R1 = _per_block(model, fine, collect)
    return ChainMap(fine.complex, model.complex, [ModuleMap.from_matrix(R0), ModuleMap.from_matrix(R1)],
                    f"coarsen /{factor}")


def prism_homotopy(model: SuspensionModel, factor: int) -> ModuleMap:
    """
    Degree -1 operator ``K : E_1 -> E_0`` on the ``k*factor`` model with
    ``A R - I = K b + b K`` where ``A`` subdivides and ``R`` coarsens.
    """
    fine = suspension_model(model.sigma, model.k * factor)

    def build(L, _):
        f = factor
        c = np.zeros((L * f, L * f))
        for q in range(L):
            for t in range(f):
                row = q * f + t
                c[row, q * f : (q + 1) * f] += t / f
                c[row, q * f : q * f + t] -= 1.0
        return AlgebraElement.constant(c)

    return ModuleMap.from_matrix(_per_block(model, fine, build))


def conjugation_isomorphism(sigma: Sequence[int], tau: Sequence[int], k: int = 1) -> ChainMap:
    """
    The isomorphism from the model of ``sigma`` to the model of
    ``tau sigma tau^{-1}`` given by relabeling points with ``tau``.

    When relabeling moves the smallest point of a cycle, the closing edge of
    that leaf moves too and the affected coordinates pick up a factor ``z``.
    """
    sigma, tau = tuple(sigma), tuple(tau)
    if len(sigma) != len(tau):
        raise ValueError("permutations act on different point sets")
    src = suspension_model(sigma, k)
    tgt = suspension_model(conjugate_permutation(sigma, tau), k)
    L = len(sigma) * k
    coeffs = np.zeros((3, L, L), dtype=complex)
    where = {}
    for (off, _), cyc in zip(tgt.blocks, tgt.cycles):
        for i, x in enumerate(cyc):
            where[x] = (off, i)
    for (off, size), cyc in zip(src.blocks, src.cycles):
        images = [tau[x] for x in cyc]
        start = min(images)
        r = images.index(start)
        t_off, _ = where[start]
        for qp in range(size):
            q = qp + r * k
            power = 0
            if q >= size:
                q -= size
                power = 1
            coeffs[1 + power, t_off + qp, off + q] = 1.0
    A = ModuleMap.from_matrix(AlgebraElement(coeffs, LOOP))
    return ChainMap(src.complex, tgt.complex, [A, A], f"relabel by {format_permutation(tau)}")


# ----------------------------------------------------------------------
# random finite-dimensional complexes


def _image_ranks(ranks: Sequence[int], acyclic: bool) -> list[tuple[int, ...]]:
    n = len(ranks) - 1
    options = []
    for a in itertools.product(*[range(min(ranks[i], ranks[i + 1]) + 1) for i in range(n)]):
        ext = (0,) + tuple(a) + (0,)
        h = [ranks[i] - ext[i] - ext[i + 1] for i in range(n + 1)]
        if min(h, default=0) < 0 or h != h[::-1]:
            continue
        if acyclic != (sum(h) == 0):
            continue
        options.append(tuple(a))
    return options


def _random_unitary(rng: np.random.Generator, d: int) -> np.ndarray:
    if d == 0:
        return np.zeros((0, 0), dtype=complex)
    z = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def _duality_constraints(n: int, ranks: Sequence[int], b: list[np.ndarray]) -> tuple[np.ndarray, list]:
    """Real matrix whose null space is the set of dualities ``T`` compatible with ``b``."""
    shapes = [(ranks[n - p], ranks[p]) for p in range(n + 1)]
    sizes = [r * c for r, c in shapes]
    l = (n - 1) // 2 if n % 2 else 0
    offs = np.concatenate([[0], np.cumsum(sizes)]).astype(int)
    N = int(offs[-1])
    tot = np.concatenate([[0], np.cumsum(ranks)]).astype(int)

    def unpack(x):
        z = x[:N] + 1j * x[N:]
        return [z[offs[p] : offs[p + 1]].reshape(shapes[p]) for p in range(n + 1)]

    def total(blocks):
        M = np.zeros((tot[-1], tot[-1]), dtype=complex)
        for (i, j), m in blocks.items():
            M[tot[i] : tot[i + 1], tot[j] : tot[j + 1]] = m
        return M

    btot = total({(i + 1, i): b[i] for i in range(n)})

    def residual(x):
        T = unpack(x)
        res = []
        for q in range(n + 1):
            sign = -1 if ((n - q) * q) % 2 else 1
            res.append((T[n - q].conj().T - sign * T[q]).ravel())
        for p in range(1, n + 1):
            sign = 1 if (p + 1) % 2 == 0 else -1
            res.append((T[p - 1] @ b[p - 1].conj().T + sign * b[n - p] @ T[p]).ravel())
        S = total({(n - p, p): (1j ** ((p * (p - 1) + l) % 4)) * T[p] for p in range(n + 1)})
        res.append((btot.conj().T @ S + S @ btot).ravel())
        r = np.concatenate(res) if res else np.zeros(0)
        return np.concatenate([r.real, r.imag])

    cols = [residual(e) for e in np.eye(2 * N)]
    M = np.array(cols).T if cols else np.zeros((0, 0))
    return M, unpack


def random_hp_complex(seed: int, ranks: Sequence[int], acyclic: bool = False,
                      max_tries: int = 20) -> HPComplexData:
    """
    A random finite-dimensional HP complex over the complex matrices.

    The differential is built in block form (coimage onto image by a random
    positive diagonal, harmonic part killed) and conjugated by random
    unitaries.  The duality is a random element of the space of solutions
    of the symmetry and anticommutation conditions, also anticommuting
    ``S`` with ``b^*``, redrawn until it is an isomorphism on cohomology.
    """
    ranks = [int(r) for r in ranks]
    if any(r < 0 for r in ranks) or not ranks:
        raise ValueError("ranks must be nonnegative")
    n = len(ranks) - 1
    rng = np.random.default_rng(seed)
    if sum(ranks) == 0:
        empty = [ModuleMap.from_matrix(AlgebraElement.zeros(0, 0, MATRIX)) for _ in range(n + 1)]
        return HPComplexData(n, ranks, empty[:n], empty, MATRIX, f"random seed={seed} (empty)")
    options = _image_ranks(ranks, acyclic)
    if not options:
        kind = "acyclic" if acyclic else "non-acyclic"
        raise ValueError(f"no {kind} complex with symmetric cohomology has ranks {tuple(ranks)}")
    a = options[int(rng.integers(len(options)))]
    ext = (0,) + a + (0,)
    Q = [_random_unitary(rng, r) for r in ranks]
    b = []
    for i in range(n):
        blk = np.zeros((ranks[i + 1], ranks[i]), dtype=complex)
        # layout of E_i: [coimage of b_i | harmonic | image of b_{i-1}]
        d = rng.uniform(0.5, 2.0, size=ext[i + 1])
        src_off = 0
        dst_off = ranks[i + 1] - ext[i + 1]
        blk[dst_off : dst_off + ext[i + 1], src_off : src_off + ext[i + 1]] = np.diag(d)
        b.append(Q[i + 1] @ blk @ Q[i].conj().T)
    M, unpack = _duality_constraints(n, ranks, b)
    basis = null_space(M, rcond=1e-10) if M.size else np.zeros((0, 0))
    if basis.shape[1] == 0:
        raise ValueError(f"no duality operator exists for ranks {tuple(ranks)}")
    for attempt in range(max_tries):
        x = basis @ rng.standard_normal(basis.shape[1])
        x /= np.max(np.abs(x))
        T = unpack(x)
        cx = HPComplexData.from_matrices(b, T, MATRIX, f"random seed={seed} ranks={tuple(ranks)}")
        if validate_duality(cx).passed:
            return cx
    raise ValueError(f"could not draw a duality isomorphic on cohomology for ranks {tuple(ranks)}")


def acyclic_padding(c: HPComplexData, pad, seed: int = 0) -> HPComplexData:
    """Direct sum with an acyclic complex, given by its ranks or explicitly."""
    if isinstance(pad, HPComplexData):
        extra = pad
    else:
        pad = [int(r) for r in pad]
        if len(pad) != c.n + 1:
            raise ValueError("padding ranks must match the complex length")
        if sum(pad) == 0:
            return c
        extra = random_hp_complex(seed, pad, acyclic=True)
    if extra.kind != c.kind:
        extra = extra.as_kind(c.kind)
    fc = extra.cohomology(extra.grid())
    if not all(fc.acyclic(j) for j in range(fc.n_fibers)):
        raise ValueError("padding complex is not acyclic")
    out = direct_sum(c, extra)
    out.label = f"{c.label} + acyclic{tuple(extra.ranks)}"
    return out


def cycle_graph_complex(N: int) -> HPComplexData:
    """
    Cochains of the ``N``-cycle graph over the complex numbers with the
    unitary part of the averaging duality, so that ``S^2 = 1``.  ``N`` must
    be odd, otherwise ``I + P`` is singular.
    """
    if N < 1 or N % 2 == 0:
        raise ValueError("N must be odd")
    P = np.roll(np.eye(N), 1, axis=1)
    b = P - np.eye(N)
    u, _, vh = np.linalg.svd((np.eye(N) + P) / 2)
    T0 = u @ vh
    return HPComplexData.from_matrices([b], [T0, T0.conj().T], MATRIX, f"cycle graph N={N}")
