"""
Discrete groupoids, their convolution algebras and the modules and
bimodules built from groupoid morphisms.

Two families are supported:

* ``finite``: the groupoid of an equivalence relation on ``m`` objects
  (the pair groupoid when there is a single class).  The arrow ``(r, s)``
  goes from ``s`` to ``r``.
* ``z-graded``: the action groupoid of a permutation ``sigma``.  The arrow
  ``(k, x)`` goes from ``x`` to ``sigma^k(x)``.

Elements are finitely supported dictionaries ``arrow -> complex`` so every
sum below is a finite sum over supports.  Convolution uses counting
measure.  Per-object weights of the source groupoid enter the inner
products (and the star product that reproduces them), never convolution,
so the unit laws stay exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Hashable, Iterable, Sequence

import numpy as np

from .reports import CheckResult, Report

__all__ = [
    "FINITE",
    "Z_GRADED",
    "DiscreteGroupoid",
    "ConvElement",
    "BimoduleElement",
    "GroupoidMorphism",
    "convolve",
    "module_right_action",
    "module_inner_product",
    "bimodule_inner_product",
    "bimodule_right_action",
    "pi_f",
    "xi_composition",
    "star_product",
    "star_theta_identity",
    "morita_lambda",
    "theta_h_s",
    "theta_h_s_adjoint",
    "homotopy_stage",
    "fully_faithful",
]

FINITE = "finite"
Z_GRADED = "z-graded"

Arrow = tuple


class DiscreteGroupoid:
    """
    Parameters
    ----------
    n_objects : int
    kind : "finite" or "z-graded"
    sigma : sequence of int, z-graded only
    classes : sequence of int, finite only
        Class label per object; objects with equal labels are connected by
        exactly one arrow.  Defaults to a single class (pair groupoid).
    transversal : iterable of int, optional
        Defaults to all objects.
    weights : sequence of float, optional
        Positive per-object weights (default 1).
    labels : sequence, optional
        Display names of the objects.
    """

    def __init__(self, n_objects: int, kind: str = FINITE, sigma: Sequence[int] | None = None,
                 classes: Sequence[int] | None = None, transversal: Iterable[int] | None = None,
                 weights: Sequence[float] | None = None, labels: Sequence[Hashable] | None = None):
        self.m = int(n_objects)
        if kind not in (FINITE, Z_GRADED):
            raise ValueError(f"unknown groupoid kind {kind!r}")
        self.kind = kind
        if kind == Z_GRADED:
            if sigma is None:
                raise ValueError("z-graded groupoids need a permutation")
            sigma = tuple(int(v) for v in sigma)
            if sorted(sigma) != list(range(self.m)):
                raise ValueError("sigma is not a permutation of the objects")
            self.sigma = sigma
            self._cycles()
            self.classes = tuple(self._cycle_of)
        else:
            self.sigma = None
            cl = tuple(classes) if classes is not None else (0,) * self.m
            if len(cl) != self.m:
                raise ValueError("one class label per object required")
            self.classes = cl
        self.transversal = frozenset(range(self.m) if transversal is None else (int(x) for x in transversal))
        if not self.transversal <= set(range(self.m)):
            raise ValueError("transversal must consist of objects")
        w = np.ones(self.m) if weights is None else np.asarray(weights, dtype=float)
        if w.shape != (self.m,) or np.any(w <= 0):
            raise ValueError("weights must be positive, one per object")
        self.weights = w
        self.labels = list(labels) if labels is not None else list(range(self.m))

    def _cycles(self):
        self._cycle_of = [0] * self.m
        self._pos = [0] * self.m
        self.cycles: list[list[int]] = []
        seen = set()
        for start in range(self.m):
            if start in seen:
                continue
            cyc, x = [], start
            while x not in seen:
                seen.add(x)
                self._cycle_of[x] = len(self.cycles)
                self._pos[x] = len(cyc)
                cyc.append(x)
                x = self.sigma[x]
            self.cycles.append(cyc)

    # structure ----------------------------------------------------------
    def sigma_power(self, x: int, k: int) -> int:
        cyc = self.cycles[self._cycle_of[x]]
        return cyc[(self._pos[x] + k) % len(cyc)]

    def cycle_length(self, x: int) -> int:
        return len(self.cycles[self._cycle_of[x]])

    def r(self, a: Arrow) -> int:
        return a[0] if self.kind == FINITE else self.sigma_power(a[1], a[0])

    def s(self, a: Arrow) -> int:
        return a[1]

    def unit(self, x: int) -> Arrow:
        return (x, x) if self.kind == FINITE else (0, x)

    def is_arrow(self, a: Arrow) -> bool:
        if len(a) != 2:
            return False
        if self.kind == FINITE:
            return 0 <= a[0] < self.m and 0 <= a[1] < self.m and self.classes[a[0]] == self.classes[a[1]]
        return 0 <= a[1] < self.m

    def compose(self, a: Arrow, b: Arrow) -> Arrow:
        """``a b``: first ``b``, then ``a``."""
        if self.s(a) != self.r(b):
            raise ValueError(f"arrows {a} and {b} are not composable")
        if self.kind == FINITE:
            return (a[0], b[1])
        return (a[0] + b[0], b[1])

    def inverse(self, a: Arrow) -> Arrow:
        if self.kind == FINITE:
            return (a[1], a[0])
        return (-a[0], self.r(a))

    def arrows_between(self, x: int, y: int, window: int | None = None) -> list[Arrow]:
        """Arrows from ``y`` to ``x``; z-graded results are limited to ``|k| <= window``."""
        if self.kind == FINITE:
            return [(x, y)] if self.classes[x] == self.classes[y] else []
        if window is None:
            raise ValueError("z-graded hom-sets are infinite; pass a window")
        return [(k, y) for k in range(-window, window + 1) if self.sigma_power(y, k) == x]

    def degree(self, a: Arrow) -> int:
        return 0 if self.kind == FINITE else a[0]

    # realizations -------------------------------------------------------
    def realize(self, values: dict, theta: float = 0.0) -> np.ndarray:
        """
        Matrix of a finitely supported function under the regular
        representation at Bloch angle ``theta``: ``delta_a -> e^{i k theta} E_{r(a), s(a)}``.
        For finite groupoids ``theta`` is ignored and this is the matrix-unit
        picture.
        """
        out = np.zeros((self.m, self.m), dtype=complex)
        for a, v in values.items():
            phase = np.exp(1j * self.degree(a) * theta) if self.kind == Z_GRADED else 1.0
            out[self.r(a), self.s(a)] += v * phase
        return out

    def random_element(self, rng: np.random.Generator, size: int = 4, band: int = 2,
                       on: str = "algebra", amplitude: int = 3) -> "ConvElement":
        """
        A random element with Gaussian-integer values, so that all finite
        sums are exact in floating point.  ``on="algebra"`` draws from
        arrows with both ends in the transversal, ``on="module"`` only
        requires the source there.
        """
        X = sorted(self.transversal)
        vals: dict = {}
        for _ in range(size):
            s = int(rng.choice(X))
            if self.kind == FINITE:
                choices = [y for y in range(self.m) if self.classes[y] == self.classes[s]
                           and (on == "module" or y in self.transversal)]
                a = (int(rng.choice(choices)), s)
            else:
                ks = [k for k in range(-band, band + 1)
                      if on == "module" or self.sigma_power(s, k) in self.transversal]
                a = (int(rng.choice(ks)), s)
            v = complex(int(rng.integers(-amplitude, amplitude + 1)), int(rng.integers(-amplitude, amplitude + 1)))
            vals[a] = vals.get(a, 0) + v
        return ConvElement(self, vals)

    def random_bimodule_element(self, f: "GroupoidMorphism", rng: np.random.Generator, size: int = 4,
                                band: int = 2, amplitude: int = 3) -> "BimoduleElement":
        tgt = f.target
        X = sorted(self.transversal)
        vals: dict = {}
        for _ in range(size):
            x = int(rng.choice(X))
            fx = f.object_map[x]
            if tgt.kind == FINITE:
                ends = [y for y in sorted(tgt.transversal) if tgt.classes[y] == tgt.classes[fx]]
                if not ends:
                    continue
                a = (fx, int(rng.choice(ends)))
            else:
                cands = [(k, y) for y in sorted(tgt.transversal) for k in range(-band, band + 1)
                         if tgt.sigma_power(y, k) == fx]
                if not cands:
                    continue
                a = cands[int(rng.integers(len(cands)))]
            v = complex(int(rng.integers(-amplitude, amplitude + 1)), int(rng.integers(-amplitude, amplitude + 1)))
            vals[(x, a)] = vals.get((x, a), 0) + v
        return BimoduleElement(f, vals)

    # serialization ------------------------------------------------------
    def to_json(self) -> dict:
        out = {"kind": self.kind, "objects": list(self.labels),
               "transversal": [self.labels[x] for x in sorted(self.transversal)]}
        if self.kind == Z_GRADED:
            out["sigma"] = list(self.sigma)
        else:
            out["classes"] = list(self.classes)
        if np.any(self.weights != 1.0):
            out["weights"] = {str(self.labels[i]): float(w) for i, w in enumerate(self.weights)}
        return out

    @classmethod
    def from_json(cls, data: dict) -> "DiscreteGroupoid":
        labels = list(data["objects"])
        index = {lab: i for i, lab in enumerate(labels)}
        if len(index) != len(labels):
            raise ValueError("object labels must be distinct")

        def idx(lab):
            if lab in index:
                return index[lab]
            if str(lab) in {str(k): k for k in index}:
                return index[{str(k): k for k in index}[str(lab)]]
            raise ValueError(f"unknown object {lab!r}")

        kind = data.get("kind", FINITE)
        sigma = None
        if kind == Z_GRADED:
            raw = data.get("sigma")
            if raw is None:
                raise ValueError("z-graded groupoid needs 'sigma'")
            sigma = [int(v) for v in raw]
        transversal = [idx(x) for x in data["transversal"]] if "transversal" in data else None
        weights = None
        if "weights" in data:
            weights = [1.0] * len(labels)
            for lab, w in data["weights"].items():
                weights[idx(lab)] = float(w)
        return cls(len(labels), kind, sigma=sigma, classes=data.get("classes"), transversal=transversal,
                   weights=weights, labels=labels)

    def __repr__(self) -> str:
        return f"DiscreteGroupoid(kind={self.kind!r}, objects={self.m})"


def _accumulate(out: dict, key, value) -> None:
    out[key] = out.get(key, 0) + value


def _prune(values: dict) -> dict:
    return {k: complex(v) for k, v in values.items() if v != 0}


@dataclass
class ConvElement:
    """A finitely supported function on the arrows of a groupoid."""

    groupoid: DiscreteGroupoid
    values: dict = field(default_factory=dict)

    def __post_init__(self):
        for a in self.values:
            if not self.groupoid.is_arrow(a):
                raise ValueError(f"{a} is not an arrow")
        self.values = _prune(self.values)

    @classmethod
    def delta(cls, g: DiscreteGroupoid, a: Arrow, value: complex = 1.0) -> "ConvElement":
        return cls(g, {tuple(a): value})

    @classmethod
    def unit(cls, g: DiscreteGroupoid, objects: Iterable[int] | None = None) -> "ConvElement":
        objs = sorted(g.transversal) if objects is None else objects
        return cls(g, {g.unit(x): 1.0 for x in objs})

    def support(self) -> list:
        return sorted(self.values)

    def __add__(self, other: "ConvElement") -> "ConvElement":
        out = dict(self.values)
        for k, v in other.values.items():
            _accumulate(out, k, v)
        return ConvElement(self.groupoid, out)

    def __sub__(self, other: "ConvElement") -> "ConvElement":
        return self + other * -1

    def __mul__(self, scalar) -> "ConvElement":
        return ConvElement(self.groupoid, {k: v * scalar for k, v in self.values.items()})

    __rmul__ = __mul__

    def __matmul__(self, other: "ConvElement") -> "ConvElement":
        return convolve(self, other)

    def adjoint(self) -> "ConvElement":
        g = self.groupoid
        return ConvElement(g, {g.inverse(a): np.conj(v) for a, v in self.values.items()})

    def distance(self, other: "ConvElement") -> float:
        keys = set(self.values) | set(other.values)
        return max((abs(self.values.get(k, 0) - other.values.get(k, 0)) for k in keys), default=0.0)

    def realize(self, theta: float = 0.0) -> np.ndarray:
        return self.groupoid.realize(self.values, theta)

    def is_zero(self) -> bool:
        return not self.values


@dataclass
class GroupoidMorphism:
    """
    A functor between discrete groupoids, determined by its object map
    (and, between z-graded groupoids, a degree ``e`` sending ``(k, x)`` to
    ``(e k, f(x))``).
    """

    source: DiscreteGroupoid
    target: DiscreteGroupoid
    object_map: tuple
    degree: int = 1

    def __post_init__(self):
        self.object_map = tuple(int(v) for v in self.object_map)
        if len(self.object_map) != self.source.m:
            raise ValueError("object map must cover every source object")
        if any(not 0 <= v < self.target.m for v in self.object_map):
            raise ValueError("object map leaves the target")
        if self.source.kind != self.target.kind:
            raise ValueError("morphisms between finite and z-graded groupoids are not supported")
        problem = self.functoriality_defect()
        if problem:
            raise ValueError(problem)

    def functoriality_defect(self) -> str | None:
        f, G, H = self.object_map, self.source, self.target
        if G.kind == FINITE:
            for x in range(G.m):
                for y in range(G.m):
                    if G.classes[x] == G.classes[y] and H.classes[f[x]] != H.classes[f[y]]:
                        return f"objects {x} and {y} are connected but their images are not"
            return None
        for x in range(G.m):
            if f[G.sigma[x]] != H.sigma_power(f[x], self.degree):
                return f"object map does not intertwine the permutations at {x}"
        return None

    @classmethod
    def identity(cls, g: DiscreteGroupoid) -> "GroupoidMorphism":
        return cls(g, g, tuple(range(g.m)), 1)

    def __call__(self, a: Arrow) -> Arrow:
        if self.source.kind == FINITE:
            return (self.object_map[a[0]], self.object_map[a[1]])
        return (self.degree * a[0], self.object_map[a[1]])

    def then(self, other: "GroupoidMorphism") -> "GroupoidMorphism":
        """``other o self``."""
        if other.source is not self.target:
            raise ValueError("morphisms are not composable")
        return GroupoidMorphism(self.source, other.target, tuple(other.object_map[v] for v in self.object_map),
                                self.degree * other.degree)

    def preimages(self, target_arrow: Arrow, x: int, y: int) -> list[Arrow]:
        """Arrows ``y -> x`` of the source mapping to ``target_arrow``."""
        G = self.source
        if G.kind == FINITE:
            cands = G.arrows_between(x, y)
        else:
            if self.degree == 0:
                raise ValueError("degree-zero morphisms have infinite fibers")
            k, rem = divmod(target_arrow[0], self.degree)
            cands = [(k, y)] if rem == 0 and G.sigma_power(y, k) == x else []
        return [a for a in cands if self(a) == tuple(target_arrow)]

    def to_json(self) -> dict:
        out = {"object_map": [self.target.labels[v] for v in self.object_map]}
        if self.source.kind == Z_GRADED:
            out["degree"] = self.degree
        return out

    @classmethod
    def from_json(cls, data: dict, source: DiscreteGroupoid, target: DiscreteGroupoid) -> "GroupoidMorphism":
        lookup = {str(lab): i for i, lab in enumerate(target.labels)}
        omap = data["object_map"]
        if isinstance(omap, dict):
            src = {str(lab): i for i, lab in enumerate(source.labels)}
            vals = [None] * source.m
            for k, v in omap.items():
                vals[src[str(k)]] = lookup[str(v)]
            if any(v is None for v in vals):
                raise ValueError("object map must cover every source object")
        else:
            vals = [lookup[str(v)] for v in omap]
        return cls(source, target, tuple(vals), int(data.get("degree", 1)))


@dataclass
class BimoduleElement:
    """A finitely supported function on pairs ``(x, a')`` with ``x`` in the transversal and ``r(a') = f(x)``."""

    morphism: GroupoidMorphism
    values: dict = field(default_factory=dict)

    def __post_init__(self):
        f = self.morphism
        for key in self.values:
            x, a = key
            if x not in f.source.transversal:
                raise ValueError(f"{x} is not in the transversal")
            if not f.target.is_arrow(a) or f.target.r(a) != f.object_map[x]:
                raise ValueError(f"{key} is not in the reduced graph")
            if f.target.s(a) not in f.target.transversal:
                raise ValueError(f"{key} does not end in the target transversal")
        self.values = _prune(self.values)

    def __add__(self, other: "BimoduleElement") -> "BimoduleElement":
        out = dict(self.values)
        for k, v in other.values.items():
            _accumulate(out, k, v)
        return BimoduleElement(self.morphism, out)

    def __mul__(self, scalar) -> "BimoduleElement":
        return BimoduleElement(self.morphism, {k: v * scalar for k, v in self.values.items()})

    __rmul__ = __mul__

    def distance(self, other: "BimoduleElement") -> float:
        keys = set(self.values) | set(other.values)
        return max((abs(self.values.get(k, 0) - other.values.get(k, 0)) for k in keys), default=0.0)

    def is_zero(self) -> bool:
        return not self.values


# ----------------------------------------------------------------------
# algebra and module operations


def convolve(phi: ConvElement, psi: ConvElement) -> ConvElement:
    """``(phi * psi)(g) = sum_{g = a b} phi(a) psi(b)``."""
    g = phi.groupoid
    if psi.groupoid is not g:
        raise ValueError("elements live on different groupoids")
    by_range: dict[int, list] = {}
    for b, v in psi.values.items():
        by_range.setdefault(g.r(b), []).append((b, v))
    out: dict = {}
    for a, u in phi.values.items():
        for b, v in by_range.get(g.s(a), ()):
            _accumulate(out, g.compose(a, b), u * v)
    return ConvElement(g, out)


def module_right_action(xi: ConvElement, f: ConvElement) -> ConvElement:
    """``(xi f)(g) = sum_{s(a) = s(g)} xi(g a^{-1}) f(a)`` with ``a`` between transversal objects."""
    g = xi.groupoid
    for a in f.values:
        if g.r(a) not in g.transversal or g.s(a) not in g.transversal:
            raise ValueError("the acting element must live between transversal objects")
    return convolve(xi, f)


def module_inner_product(xi1: ConvElement, xi2: ConvElement) -> ConvElement:
    """``<xi1, xi2>(u) = sum_{s(v) = r(u)} w(r(v)) conj(xi1(v)) xi2(v u)``."""
    g = xi1.groupoid
    if xi2.groupoid is not g:
        raise ValueError("elements live on different groupoids")
    by_range: dict[int, list] = {}
    for b, v in xi2.values.items():
        by_range.setdefault(g.r(b), []).append((b, v))
    out: dict = {}
    for a, u in xi1.values.items():
        w = g.weights[g.r(a)]
        ainv = g.inverse(a)
        for b, v in by_range.get(g.r(a), ()):
            _accumulate(out, g.compose(ainv, b), w * np.conj(u) * v)
    return ConvElement(g, out)


def bimodule_inner_product(xi: BimoduleElement, eta: BimoduleElement) -> ConvElement:
    """``<xi, eta>(c) = sum_{x, a} w(x) conj(xi(x, a)) eta(x, a c)``, a function on the target groupoid."""
    f = xi.morphism
    H = f.target
    w = f.source.weights
    by_key: dict = {}
    for (y, c), v in eta.values.items():
        by_key.setdefault((y, H.r(c)), []).append((c, v))
    out: dict = {}
    for (x, a), u in xi.values.items():
        ainv = H.inverse(a)
        for c, v in by_key.get((x, H.r(a)), ()):
            _accumulate(out, H.compose(ainv, c), w[x] * np.conj(u) * v)
    return ConvElement(H, out)


def bimodule_right_action(xi: BimoduleElement, phi: ConvElement) -> BimoduleElement:
    """``(xi phi)(x, a) = sum_b xi(x, a b^{-1}) phi(b)``."""
    H = xi.morphism.target
    by_range: dict[int, list] = {}
    for b, v in phi.values.items():
        by_range.setdefault(H.r(b), []).append((b, v))
    out: dict = {}
    for (x, a), u in xi.values.items():
        for b, v in by_range.get(H.s(a), ()):
            _accumulate(out, (x, H.compose(a, b)), u * v)
    return BimoduleElement(xi.morphism, out)


def pi_f(phi: ConvElement, xi: BimoduleElement) -> BimoduleElement:
    """``pi_f(phi) xi (x, a) = sum_{r(b) = x} phi(b) xi(s(b), f(b^{-1}) a)``."""
    f = xi.morphism
    G, H = f.source, f.target
    by_obj: dict[int, list] = {}
    for (y, c), v in xi.values.items():
        by_obj.setdefault(y, []).append((c, v))
    out: dict = {}
    for b, u in phi.values.items():
        if G.r(b) not in G.transversal:
            continue
        fb = f(b)
        for c, v in by_obj.get(G.s(b), ()):
            _accumulate(out, (G.r(b), H.compose(fb, c)), u * v)
    return BimoduleElement(f, out)


def xi_composition(xi_f: BimoduleElement, eta_g: BimoduleElement) -> BimoduleElement:
    """``(xi * eta)(x, a'') = sum_{a'} xi(x, a') eta(s(a'), g(a'^{-1}) a'')``, a bimodule element for ``g o f``."""
    f, g = xi_f.morphism, eta_g.morphism
    if f.target is not g.source:
        raise ValueError("morphisms are not composable")
    K = g.target
    gf = f.then(g)
    by_obj: dict[int, list] = {}
    for (y, c), v in eta_g.values.items():
        by_obj.setdefault(y, []).append((c, v))
    out: dict = {}
    for (x, a), u in xi_f.values.items():
        ga = g(a)
        for c, v in by_obj.get(f.target.s(a), ()):
            _accumulate(out, (x, K.compose(ga, c)), u * v)
    return BimoduleElement(gf, out)


def star_product(eta1: BimoduleElement, eta2: BimoduleElement) -> ConvElement:
    """``(eta1 * eta2)(b) = w(s(b)) sum_{a} eta1(r(b), a) conj(eta2(s(b), f(b^{-1}) a))`` on the source groupoid."""
    f = eta1.morphism
    G, H = f.source, f.target
    out: dict = {}
    for (x, a), u in eta1.values.items():
        for (y, c), v in eta2.values.items():
            if H.s(a) != H.s(c):
                continue
            target = H.compose(a, H.inverse(c))  # f(b) with f(b^{-1}) a = c
            for b in f.preimages(target, x, y):
                _accumulate(out, b, G.weights[y] * u * np.conj(v))
    return ConvElement(G, out)


def fully_faithful(f: GroupoidMorphism) -> bool:
    """Whether ``f`` is bijective on arrows between every pair of transversal objects."""
    G, H = f.source, f.target
    X = sorted(G.transversal)
    if G.kind == FINITE:
        return all((G.classes[x] == G.classes[y]) == (H.classes[f.object_map[x]] == H.classes[f.object_map[y]])
                   for x in X for y in X)
    if abs(f.degree) != 1:
        return False
    for x in X:
        if G.cycle_length(x) != H.cycle_length(f.object_map[x]):
            return False
        for y in X:
            same = G.classes[x] == G.classes[y]
            same_img = H.classes[f.object_map[x]] == H.classes[f.object_map[y]]
            if same != same_img:
                return False
    return True


def star_theta_identity(eta1: BimoduleElement, eta2: BimoduleElement, zeta: BimoduleElement,
                        tol: float = 0.0) -> Report:
    """Check ``eta1 <eta2, zeta> = pi_f(eta1 * eta2) zeta`` on supports."""
    rep = Report("theta-identity")
    f = eta1.morphism
    if not fully_faithful(f):
        rep.notes.append("θ-identity not expected: morphism is not bijective on arrows between transversal objects")
        rep.add(CheckResult("theta-identity-precondition", 1.0, False))
        return rep
    lhs = bimodule_right_action(eta1, bimodule_inner_product(eta2, zeta))
    rhs = pi_f(star_product(eta1, eta2), zeta)
    v = lhs.distance(rhs)
    rep.add(CheckResult("theta-identity", v, v <= tol, details={"support_size": len(lhs.values)}))
    return rep


def _check_gamma_data(f: GroupoidMorphism, gamma: dict, name: str) -> None:
    G = f.source
    for x in G.transversal:
        if x not in gamma:
            raise ValueError(f"{name} has no arrow for object {x}")
        a = tuple(gamma[x])
        if not G.is_arrow(a) or G.s(a) != x or G.r(a) != f.object_map[x]:
            raise ValueError(f"{name}[{x}] = {a} does not go from {x} to {f.object_map[x]}")


def morita_lambda(xi: BimoduleElement, gamma_data: dict) -> ConvElement:
    """``(Lambda xi)(g) = xi(r(g), gamma_{r(g)} g)`` for a bimodule over an endomorphism."""
    f = xi.morphism
    if f.source is not f.target:
        raise ValueError("Lambda needs an endomorphism")
    G = f.source
    _check_gamma_data(f, gamma_data, "gamma_data")
    out: dict = {}
    for (x, c), v in xi.values.items():
        _accumulate(out, G.compose(G.inverse(tuple(gamma_data[x])), c), v)
    return ConvElement(G, out)


def theta_h_s(xi: ConvElement, h: GroupoidMorphism, gamma_s: dict) -> BimoduleElement:
    """``theta(xi)(x, g) = xi(gamma_x^{-1} g)`` where ``gamma_x : x -> h(x)``."""
    G = h.source
    _check_gamma_data(h, gamma_s, "gamma_s")
    out: dict = {}
    for a, v in xi.values.items():
        x = G.r(a)
        if x not in G.transversal:
            continue
        _accumulate(out, (x, G.compose(tuple(gamma_s[x]), a)), v)
    return BimoduleElement(h, out)


def theta_h_s_adjoint(eta: BimoduleElement, gamma_s: dict) -> ConvElement:
    """``theta^*(eta)(g) = eta(r(g), gamma_{r(g)} g)``."""
    return morita_lambda(eta, gamma_s)


def homotopy_stage(g: DiscreteGroupoid, s: int) -> tuple[GroupoidMorphism, dict]:
    """
    Stage ``s`` of the shift homotopy on a z-graded groupoid: the morphism
    ``h_s = sigma^s`` (degree 1) and the arrows ``gamma^s_x = (s, x)``.
    """
    if g.kind != Z_GRADED:
        raise ValueError("shift homotopies need a z-graded groupoid")
    h = GroupoidMorphism(g, g, tuple(g.sigma_power(x, s) for x in range(g.m)), 1)
    return h, {x: (s, x) for x in g.transversal}
