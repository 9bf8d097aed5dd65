"""Canonical JSON encoding of complexes, weights, divisors, cycles and morphisms.

Numbers other than ranks and dimensions are written as strings (``"p/q"``
for rationals).  A cone id is the ``|``-joined sorted ray ids; the apex is
the empty string.  Output is sorted-key JSON so files are byte-stable.
"""
from __future__ import annotations

import json
import os
from fractions import Fraction
from typing import Any, Optional

from .complex import Cone, ComplexMorphism, ConeComplex, Ray, Subdivision
from .cycles import Divisor, ExtendedCycle, MinkowskiWeight, TropicalCycle

SEP = "|"


class FormatError(ValueError):
    pass


def num(x) -> str:
    return str(Fraction(x))


def parse_num(s) -> Fraction:
    try:
        return Fraction(s)
    except (TypeError, ValueError, ZeroDivisionError) as exc:
        raise FormatError(f"not a rational number: {s!r}") from exc


def cone_id(key) -> str:
    for r in key:
        if SEP in r:
            raise FormatError(f"ray id {r!r} contains the separator {SEP!r}")
    return SEP.join(key)


def parse_cone_id(s: str) -> tuple:
    return tuple(sorted(s.split(SEP))) if s else ()


def dumps(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


# ---------------------------------------------------------------------------
# complexes


def complex_to_json(S: ConeComplex) -> dict:
    rays = [{"id": r.id, "embed": [num(x) for x in r.embed]} for r in S.rays.values()]
    cones = []
    for key, c in S.cones.items():
        entry: dict = {"rays": list(key)}
        if c.lattice is not None:
            entry["lattice"] = [[num(x) for x in row] for row in c.lattice]
        cones.append(entry)
    return {"ambient_rank": S.ambient_rank, "rays": rays, "cones": cones}


def complex_from_json(doc: dict) -> ConeComplex:
    try:
        rank = int(doc["ambient_rank"])
        rays = [Ray(str(r["id"]), tuple(int(parse_num(x)) for x in r["embed"])) for r in doc["rays"]]
        cones = []
        for c in doc["cones"]:
            lat = c.get("lattice")
            if lat is not None:
                lat = tuple(tuple(parse_num(x) for x in row) for row in lat)
            cones.append(Cone(tuple(sorted(c["rays"])), lat))
    except (KeyError, TypeError) as exc:
        raise FormatError(f"malformed complex document: {exc}") from exc
    return ConeComplex(rank, rays, cones)


def subdivision_to_json(sub: Subdivision) -> dict:
    coords = {r: {b: num(x) for b, x in sorted(c.items())} for r, c in sorted(sub.coords.items())}
    return {"complex": complex_to_json(sub.fine), "coords": coords}


def subdivision_from_json(base: ConeComplex, doc: Optional[dict]) -> Subdivision:
    if doc is None:
        return Subdivision.trivial(base)
    fine = complex_from_json(doc["complex"])
    coords = {r: {b: parse_num(x) for b, x in c.items()} for r, c in doc["coords"].items()}
    return Subdivision(base, fine, coords)


# ---------------------------------------------------------------------------
# references to complexes inside other documents


class Loader:
    """Resolves ``complex`` fields given as inline objects or relative paths."""

    def __init__(self, override: Optional[ConeComplex] = None):
        self.override = override
        self._cache: dict = {}

    def load_complex_path(self, path: str) -> ConeComplex:
        path = os.path.abspath(path)
        if path not in self._cache:
            with open(path, encoding="utf-8") as fh:
                self._cache[path] = complex_from_json(json.load(fh))
        return self._cache[path]

    def complex_ref(self, ref, here: str) -> ConeComplex:
        if self.override is not None:
            return self.override
        if isinstance(ref, dict):
            return complex_from_json(ref)
        if isinstance(ref, str):
            return self.load_complex_path(os.path.join(os.path.dirname(here), ref))
        raise FormatError("missing complex reference")


def read_json(path: str) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


# ---------------------------------------------------------------------------
# weights, cycles, divisors


def weight_to_json(c: MinkowskiWeight, include_complex: bool = True) -> dict:
    out: dict = {"dim": c.k, "weights": {cone_id(k): num(w) for k, w in c.weights.items()}}
    if include_complex:
        out["complex"] = complex_to_json(c.complex)
    return out


def cycle_to_json(A: TropicalCycle, include_complex: bool = True) -> dict:
    out: dict = {"dim": A.k, "weights": {cone_id(k): num(w) for k, w in A.weight.weights.items()}}
    if include_complex:
        out["complex"] = complex_to_json(A.base)
    if not A.sub.is_trivial:
        out["subdivision"] = subdivision_to_json(A.sub)
    return out


def cycle_from_json(doc: dict, base: ConeComplex) -> TropicalCycle:
    sub = subdivision_from_json(base, doc.get("subdivision"))
    try:
        k = int(doc["dim"])
        weights = {parse_cone_id(c): parse_num(w) for c, w in doc["weights"].items()}
    except (KeyError, TypeError) as exc:
        raise FormatError(f"malformed weight document: {exc}") from exc
    return TropicalCycle(sub, MinkowskiWeight(sub.fine, k, weights))


def extended_to_json(E: ExtendedCycle, include_complex: bool = True) -> dict:
    comps = {cone_id(g): cycle_to_json(c, include_complex=False) for g, c in sorted(E.components.items())}
    out: dict = {"components": comps}
    if include_complex:
        out["complex"] = complex_to_json(E.base)
    return out


def extended_from_json(doc: dict, base: ConeComplex) -> ExtendedCycle:
    comps = {}
    for cid, cdoc in doc["components"].items():
        g = base.key(parse_cone_id(cid))
        comps[g] = cycle_from_json(cdoc, base.star_context(g).complex)
    return ExtendedCycle(base, comps)


def divisor_to_json(psi: Divisor, include_complex: bool = True) -> dict:
    out: dict = {"values": {r: num(v) for r, v in psi.values.items()}}
    if include_complex:
        out["complex"] = complex_to_json(psi.complex)
    return out


def divisor_from_json(doc: dict, base: ConeComplex) -> Divisor:
    return Divisor(base, {r: parse_num(v) for r, v in doc["values"].items()})


def morphism_to_json(f: ComplexMorphism) -> dict:
    images = {r: {b: num(x) for b, x in sorted(f.ray_image(r).items())} for r in f.source.rays}
    return {
        "source": complex_to_json(f.source),
        "target": complex_to_json(f.target),
        "lattice_map": [[num(x) for x in row] for row in f.lattice_map],
        "ray_images": images,
    }


def morphism_from_json(doc: dict, loader: Loader, here: str) -> ComplexMorphism:
    src = Loader().complex_ref(doc["source"], here)
    tgt = Loader().complex_ref(doc["target"], here)
    L = [[int(parse_num(x)) for x in row] for row in doc["lattice_map"]]
    images = {r: {b: parse_num(x) for b, x in m.items()} for r, m in doc["ray_images"].items()}
    return ComplexMorphism.from_ray_images(src, tgt, L, images)


def load_any(path: str, loader: Loader):
    """Load a weight/cycle, extended cycle or divisor document from disk."""
    doc = read_json(path)
    base = loader.complex_ref(doc.get("complex"), path)
    if "components" in doc:
        return extended_from_json(doc, base)
    if "values" in doc:
        return divisor_from_json(doc, base)
    return cycle_from_json(doc, base)


def to_json(obj) -> dict:
    if isinstance(obj, ConeComplex):
        return complex_to_json(obj)
    if isinstance(obj, MinkowskiWeight):
        return weight_to_json(obj)
    if isinstance(obj, TropicalCycle):
        return cycle_to_json(obj)
    if isinstance(obj, ExtendedCycle):
        return extended_to_json(obj)
    if isinstance(obj, Divisor):
        return divisor_to_json(obj)
    if isinstance(obj, ComplexMorphism):
        return morphism_to_json(obj)
    raise FormatError(f"cannot serialize {type(obj).__name__}")


def from_json(doc: dict, kind: str):
    """Inverse of :func:`to_json` for self-contained documents."""
    if kind == "complex":
        return complex_from_json(doc)
    if kind == "morphism":
        return morphism_from_json(doc, Loader(), ".")
    base = complex_from_json(doc["complex"])
    if kind == "cycle":
        return cycle_from_json(doc, base)
    if kind == "extended":
        return extended_from_json(doc, base)
    if kind == "divisor":
        return divisor_from_json(doc, base)
    raise FormatError(f"unknown kind {kind}")
