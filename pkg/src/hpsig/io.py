"""JSON documents read and written by the command line."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Any

from .complexes import HPComplexData
from .groupoids import Z_GRADED, DiscreteGroupoid, GroupoidMorphism
from .homotopy import ChainMap
from .loops import LOOP, MATRIX, AlgebraElement
from .models import SuspensionModel, format_permutation, parse_permutation
from .modules import ModuleMap
from .winding import UnitaryLoop

__all__ = [
    "FormatError",
    "load_json",
    "dumps",
    "digest",
    "model_to_json",
    "model_from_json",
    "suspension_to_json",
    "chain_map_to_json",
    "chain_map_from_json",
    "loop_from_json",
    "groupoid_from_json",
    "morphisms_from_json",
    "morphisms_to_json",
    "model_permutation",
]


class FormatError(ValueError):
    """An input document could not be parsed or does not have the expected shape."""


def load_json(path: str | Path) -> Any:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc.strerror}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from exc


def dumps(doc: Any) -> str:
    return json.dumps(doc, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def digest(*docs: Any) -> str:
    h = hashlib.sha256()
    for d in docs:
        h.update(json.dumps(d, sort_keys=True, separators=(",", ":")).encode())
    return h.hexdigest()


def _expect(data: Any, kind: str) -> dict:
    if not isinstance(data, dict):
        raise FormatError(f"expected a {kind} object")
    if data.get("kind") != kind:
        raise FormatError(f"expected kind {kind!r}, got {data.get('kind')!r}")
    return data


def _elements(items, what: str) -> list[AlgebraElement]:
    if not isinstance(items, list):
        raise FormatError(f"{what} must be a list")
    try:
        return [AlgebraElement.from_json(x) for x in items]
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise FormatError(f"{what}: {exc}") from exc


def _as_kind(e: AlgebraElement, kind: str) -> AlgebraElement:
    if e.kind == kind:
        return e
    if kind == MATRIX:
        e = e.trimmed()
        if e.band:
            raise FormatError("loop entries in a complex-matrix model")
    return AlgebraElement(e.coeffs, kind)


# ----------------------------------------------------------------------
# complexes


def model_to_json(c: HPComplexData, extra: dict | None = None) -> dict:
    out = {
        "kind": "hp-model",
        "n": c.n,
        "ranks": list(c.ranks),
        "algebra": c.kind,
        "label": c.label,
        "b": [m.matrix.to_json() for m in c.b],
        "T": [m.matrix.to_json() for m in c.T] if c.T is not None else None,
        "blocks": [list(b) for b in c.blocks],
    }
    if extra:
        out.update(extra)
    return out


def suspension_to_json(model: SuspensionModel) -> dict:
    return model_to_json(model.complex, {
        "sigma": format_permutation(model.sigma),
        "k": model.k,
        "groupoid": model.groupoid.to_json(),
    })


def model_from_json(data: Any) -> HPComplexData:
    data = _expect(data, "hp-model")
    try:
        n = int(data["n"])
        ranks = [int(r) for r in data["ranks"]]
        kind = data.get("algebra", LOOP)
        if kind not in (LOOP, MATRIX):
            raise FormatError(f"unknown algebra {kind!r}")
        b = [ModuleMap.from_matrix(_as_kind(e, kind), kind) for e in _elements(data["b"], "b")]
        T = None
        if data.get("T") is not None:
            T = [ModuleMap.from_matrix(_as_kind(e, kind), kind) for e in _elements(data["T"], "T")]
        blocks = [tuple(int(v) for v in blk) for blk in data.get("blocks", [])]
        return HPComplexData(n, ranks, b, T, kind, str(data.get("label", "")), blocks)
    except FormatError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"hp-model: {exc}") from exc


def model_permutation(data: dict) -> tuple[tuple[int, ...], int] | None:
    """The ``(sigma, k)`` a suspension model document was generated from, if recorded."""
    if "sigma" not in data:
        return None
    try:
        return parse_permutation(str(data["sigma"])), int(data.get("k", 1))
    except ValueError as exc:
        raise FormatError(f"sigma: {exc}") from exc


# ----------------------------------------------------------------------
# chain maps


def chain_map_to_json(A: ChainMap) -> dict:
    return {
        "kind": "chain-map",
        "label": A.label,
        "source_label": A.source.label,
        "target_label": A.target.label,
        "A": [m.matrix.to_json() for m in A.A],
    }


def chain_map_from_json(data: Any, source: HPComplexData, target: HPComplexData) -> ChainMap:
    data = _expect(data, "chain-map")
    kind = LOOP if LOOP in (source.kind, target.kind) else MATRIX
    els = _elements(data.get("A"), "A")
    try:
        maps = [ModuleMap.from_matrix(_as_kind(e, kind), kind) for e in els]
        return ChainMap(source, target, maps, str(data.get("label", "")))
    except ValueError as exc:
        raise FormatError(f"chain-map: {exc}") from exc


# ----------------------------------------------------------------------
# loops


def loop_from_json(data: Any, n_samples: int) -> UnitaryLoop:
    """A sampled unitary loop, or a banded loop matrix (an algebra element) to be sampled."""
    if not isinstance(data, dict):
        raise FormatError("expected a JSON object")
    from .winding import unitary_loop_from_element

    try:
        if data.get("kind") == "unitary-loop":
            return UnitaryLoop.from_json(data)
        if data.get("kind") in (LOOP, MATRIX) and "entries" in data:
            return unitary_loop_from_element(AlgebraElement.from_json(data), n_samples)
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"loop: {exc}") from exc
    raise FormatError("expected a unitary-loop or algebra element document")


# ----------------------------------------------------------------------
# groupoids


def groupoid_from_json(data: Any) -> DiscreteGroupoid:
    if not isinstance(data, dict) or "objects" not in data:
        raise FormatError("groupoid document needs 'objects'")
    try:
        return DiscreteGroupoid.from_json(data)
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"groupoid: {exc}") from exc


def _arrow_from_json(g: DiscreteGroupoid, raw) -> tuple:
    lookup = {str(lab): i for i, lab in enumerate(g.labels)}
    if not isinstance(raw, (list, tuple)) or len(raw) != 2:
        raise FormatError(f"arrow {raw!r} must be a pair")
    if g.kind == Z_GRADED:
        return (int(raw[0]), lookup[str(raw[1])])
    return (lookup[str(raw[0])], lookup[str(raw[1])])


def _arrow_to_json(g: DiscreteGroupoid, a: tuple) -> list:
    if g.kind == Z_GRADED:
        return [int(a[0]), g.labels[a[1]]]
    return [g.labels[a[0]], g.labels[a[1]]]


def morphisms_from_json(data: Any, g: DiscreteGroupoid) -> list[tuple[str, GroupoidMorphism, dict | None]]:
    """Named endomorphisms of ``g`` with optional arrows ``gamma_x : x -> f(x)``."""
    if isinstance(data, dict):
        data = data.get("morphisms")
    if not isinstance(data, list):
        raise FormatError("expected a list of morphisms")
    out = []
    lookup = {str(lab): i for i, lab in enumerate(g.labels)}
    for i, item in enumerate(data):
        if not isinstance(item, dict):
            raise FormatError(f"morphism {i} must be an object")
        name = str(item.get("name", f"f{i}"))
        try:
            f = GroupoidMorphism.from_json(item, g, g)
            gamma = None
            if item.get("gamma") is not None:
                gamma = {lookup[str(k)]: _arrow_from_json(g, v) for k, v in item["gamma"].items()}
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, FormatError):
                raise
            raise FormatError(f"morphism {name}: {exc}") from exc
        out.append((name, f, gamma))
    return out


def morphisms_to_json(g: DiscreteGroupoid, items) -> dict:
    out = []
    for name, f, gamma in items:
        d = {"name": name, **f.to_json()}
        if gamma is not None:
            d["gamma"] = {str(g.labels[x]): _arrow_to_json(g, a) for x, a in sorted(gamma.items())}
        out.append(d)
    return {"kind": "groupoid-morphisms", "morphisms": out}
