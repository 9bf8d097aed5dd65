"""Weakly embedded simplicial cone complexes.

A cone is a sorted tuple of ray ids.  Each cone carries a chart: rational
coordinates with respect to the primitive generators of its rays (sorted by
id), in which the intrinsic lattice ``N^sigma`` is ``B Z^d`` for a
``d x d`` rational matrix ``B`` containing ``Z^d``.  ``lattice=None`` means
``B`` is the identity.  The weak embedding sends the generator of ray ``r``
to the integer vector ``embed(r)`` and is extended linearly on every chart.
"""
from __future__ import annotations

import itertools
import os
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Sequence

from . import exactlin as el

Key = tuple  # sorted tuple of ray ids


class ComplexError(ValueError):
    pass


class ConeNotInComplex(ComplexError):
    pass


class NotCodimOneFace(ComplexError):
    pass


class NotInRelativeInterior(ComplexError):
    pass


class InvalidComplex(ComplexError):
    pass


class MapFaceIncompatible(ComplexError):
    pass


class ImageEscapesCone(ComplexError):
    pass


class ImageNotCovered(ComplexError):
    pass


class RefinementExplosion(ComplexError):
    pass


def cone_cap() -> int:
    return int(os.environ.get("CONECALC_CONE_CAP", "100000"))


@dataclass(frozen=True)
class Ray:
    id: str
    embed: tuple


@dataclass(frozen=True)
class Cone:
    rays: Key
    lattice: Optional[tuple] = None  # rows of B; columns generate N^sigma

    @property
    def dim(self) -> int:
        return len(self.rays)


def canonical_lattice(gens: Sequence[Sequence], d: int) -> Optional[tuple]:
    """Canonical ``B`` (as row tuples) for the lattice generated by ``gens``.

    Returns None for the standard lattice ``Z^d``.
    """
    if d == 0:
        return None
    gi, D = el.integralize(gens)
    basis = el.lattice_basis(gi)
    if len(basis) != d:
        raise InvalidComplex("cone lattice is not full rank")
    cols = [[el.normalize(Fraction(x, D)) for x in row] for row in basis]
    if cols == el.identity(d):
        return None
    B = el.transpose(cols)
    return tuple(tuple(row) for row in B)


def _as_key(cone) -> Key:
    if isinstance(cone, Cone):
        return cone.rays
    if isinstance(cone, str):
        return (cone,)
    return tuple(sorted(cone))


class ConeComplex:
    """Immutable weakly embedded simplicial cone complex."""

    def __init__(self, ambient_rank: int, rays: Iterable, cones: Iterable):
        self.ambient_rank = int(ambient_rank)
        ray_list = []
        for r in rays:
            if not isinstance(r, Ray):
                r = Ray(r[0], tuple(int(x) for x in r[1]))
            ray_list.append(r)
        self.rays: dict[str, Ray] = {r.id: r for r in sorted(ray_list, key=lambda r: r.id)}
        if len(self.rays) != len(ray_list):
            raise InvalidComplex("duplicate ray ids")
        cone_list = []
        for c in cones:
            if not isinstance(c, Cone):
                if isinstance(c, tuple) and len(c) == 2 and not isinstance(c[0], str):
                    c = Cone(tuple(sorted(c[0])), c[1])
                else:
                    c = Cone(tuple(sorted(c)))
            cone_list.append(c)
        self.cones: dict[Key, Cone] = {
            c.rays: c for c in sorted(cone_list, key=lambda c: (len(c.rays), c.rays))
        }
        self._cache: dict = {}

    # -- construction helpers -------------------------------------------------

    @classmethod
    def from_maximal(cls, ambient_rank: int, rays: Iterable, maximal: Iterable) -> "ConeComplex":
        """Build a face-closed complex from maximal cones (keys or (key, gens))."""
        full: dict[Key, Optional[tuple]] = {}
        for item in maximal:
            if isinstance(item, tuple) and len(item) == 2 and item and not isinstance(item[0], str):
                key, gens = _as_key(item[0]), item[1]
            else:
                key, gens = _as_key(item), None
            d = len(key)
            gens = gens if gens is not None else el.identity(d)
            for size in range(d + 1):
                for face in itertools.combinations(range(d), size):
                    fkey = tuple(key[i] for i in face)
                    lat = canonical_lattice(_face_gens(gens, d, face), size) if size else None
                    if fkey in full and full[fkey] != lat:
                        raise InvalidComplex(f"inconsistent lattices on face {fkey}")
                    full[fkey] = lat
        return cls(ambient_rank, rays, [Cone(k, lat) for k, lat in full.items()])

    # -- identity ---------------------------------------------------------------

    def _canon(self):
        if "canon" not in self._cache:
            self._cache["canon"] = (
                self.ambient_rank,
                tuple((r.id, r.embed) for r in self.rays.values()),
                tuple((c.rays, c.lattice) for c in self.cones.values()),
            )
        return self._cache["canon"]

    def __eq__(self, other):
        return isinstance(other, ConeComplex) and self._canon() == other._canon()

    def __hash__(self):
        return hash(self._canon())

    def __repr__(self):
        return (
            f"ConeComplex(ambient_rank={self.ambient_rank}, rays={len(self.rays)}, "
            f"cones={len(self.cones)}, dim={self.dim})"
        )

    # -- basic queries ------------------------------------------------------------

    @property
    def dim(self) -> int:
        return max((len(k) for k in self.cones), default=-1)

    def key(self, cone) -> Key:
        k = _as_key(cone)
        if k not in self.cones:
            raise ConeNotInComplex(f"cone {k} is not in the complex")
        return k

    def cones_of_dim(self, k: int) -> list[Key]:
        return [c for c in self.cones if len(c) == k]

    def maximal_cones(self) -> list[Key]:
        if "maximal" not in self._cache:
            out = []
            for c in self.cones:
                if not any(len(o) == len(c) + 1 for o in self.cofaces(c)):
                    out.append(c)
            self._cache["maximal"] = out
        return self._cache["maximal"]

    def _ray_index(self) -> dict:
        if "ray_index" not in self._cache:
            idx: dict[str, list] = {r: [] for r in self.rays}
            for c in self.cones:
                for r in c:
                    idx.setdefault(r, []).append(c)
            self._cache["ray_index"] = idx
        return self._cache["ray_index"]

    def cofaces(self, cone) -> list[Key]:
        """All cones containing ``cone`` (including itself)."""
        k = _as_key(cone)
        if not k:
            return list(self.cones)
        cand = self._ray_index().get(k[0], [])
        s = set(k)
        return [c for c in cand if s.issubset(c)]

    def facets_of(self, cone) -> list[Key]:
        k = _as_key(cone)
        return [k[:i] + k[i + 1:] for i in range(len(k))]

    def embed(self, ray: str) -> tuple:
        return self.rays[ray].embed

    def lattice_gens(self, cone) -> list:
        """Basis of ``N^sigma`` in chart coordinates (list of vectors)."""
        k = _as_key(cone)
        cache = self._cache.setdefault("gens", {})
        if k not in cache:
            c = self.cones[k]
            if c.lattice is None:
                cache[k] = el.identity(len(k))
            else:
                cache[k] = el.transpose(c.lattice)
        return cache[k]

    def phi(self, cone, x: Sequence) -> list:
        """Weak embedding of the chart point ``x`` of ``cone``."""
        k = _as_key(cone)
        out = [Fraction(0)] * self.ambient_rank
        for r, xi in zip(k, x):
            if xi:
                for j, e in enumerate(self.rays[r].embed):
                    if e:
                        out[j] += xi * e
        return [el.normalize(v) for v in out]

    def face_lattice(self, cone, face) -> Optional[tuple]:
        """Canonical lattice of ``N^sigma`` intersected with the face's chart."""
        k = _as_key(cone)
        f = _as_key(face)
        pos = [k.index(r) for r in f]
        return canonical_lattice(_face_gens(self.lattice_gens(k), len(k), pos), len(f)) if f else None

    def saturated_span(self, cone) -> list:
        """Basis of ``N^Sigma_tau``: the saturation of the embedded cone's span."""
        k = _as_key(cone)
        cache = self._cache.setdefault("sat", {})
        if k not in cache:
            cache[k] = el.saturation([self.embed(r) for r in k]) if k else []
        return cache[k]

    def projection(self, cone) -> list:
        """``N^Sigma -> N^Sigma / N^Sigma_tau`` as an integer matrix."""
        k = _as_key(cone)
        cache = self._cache.setdefault("proj", {})
        if k not in cache:
            cache[k] = el.quotient_projection(self.ambient_rank, self.saturated_span(k))[0]
        return cache[k]

    def normal_lift(self, tau, sigma) -> list:
        """A point of ``N^sigma`` generating ``N^sigma / N^tau`` on the sigma side.

        Coordinates are in the chart of ``sigma``.
        """
        t = self.key(tau)
        s = self.key(sigma)
        extra = set(s) - set(t)
        if len(s) != len(t) + 1 or len(extra) != 1 or not set(t) <= set(s):
            raise NotCodimOneFace(f"{t} is not a facet of {s}")
        cache = self._cache.setdefault("lift", {})
        if (t, s) not in cache:
            pos = s.index(extra.pop())
            gens = self.lattice_gens(s)
            vals = [Fraction(g[pos]) for g in gens]
            D = el.lcm_of_denominators(vals)
            ints = [int(v * D) for v in vals]
            g = 0
            for a in ints:
                g = el.math.gcd(g, a)
            z = el.solve_linear([ints], [g], integral=True)
            v = [el.normalize(sum(Fraction(zi) * gen[j] for zi, gen in zip(z, gens))) for j in range(len(s))]
            cache[(t, s)] = v
        return cache[(t, s)]

    def lift_image(self, tau, sigma) -> list:
        """Weak-embedding image of :meth:`normal_lift` (cached)."""
        cache = self._cache.setdefault("lift_image", {})
        key = (tuple(tau), tuple(sigma))
        if key not in cache:
            cache[key] = self.phi(sigma, self.normal_lift(tau, sigma))
        return cache[key]

    def generator_scale(self, tau, sigma) -> Fraction:
        """Coordinate of the normal lift on the extra ray (``1/m`` for some m)."""
        s = self.key(sigma)
        extra = (set(s) - set(self.key(tau))).pop()
        return Fraction(self.normal_lift(tau, sigma)[s.index(extra)])

    def star_context(self, tau) -> "StarContext":
        t = self.key(tau)
        cache = self._cache.setdefault("star", {})
        if t not in cache:
            cache[t] = _build_star(self, t)
        return cache[t]


def _face_gens(gens: Sequence[Sequence], d: int, face: Sequence[int]) -> list:
    """Generators of ``L intersected with Q^face``, written in face coordinates."""
    face = list(face)
    others = [i for i in range(d) if i not in face]
    if not others:
        return [[g[i] for i in face] for g in gens]
    # z in Z^d with sum z_j gens_j vanishing off the face
    A = [[g[i] for g in gens] for i in others]
    K = el.integer_kernel(A, len(gens))
    out = []
    for z in K:
        v = [sum(Fraction(zj) * g[i] for zj, g in zip(z, gens)) for i in face]
        out.append(v)
    return out


# ---------------------------------------------------------------------------
# validation


@dataclass
class Violation:
    kind: str
    cone: Key
    message: str

    def __str__(self):
        return f"{self.kind} at {self.cone}: {self.message}"


@dataclass
class ValidationReport:
    errors: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors

    def raise_if_invalid(self):
        if self.errors:
            raise InvalidComplex("; ".join(str(e) for e in self.errors))


def validate(S: ConeComplex) -> ValidationReport:
    """Check every structural invariant of a weakly embedded complex."""
    rep = ValidationReport()
    for r in S.rays.values():
        if len(r.embed) != S.ambient_rank:
            rep.errors.append(Violation("BadEmbedLength", (r.id,), f"expected {S.ambient_rank} entries"))
    if () not in S.cones:
        rep.errors.append(Violation("NotFaceClosed", (), "apex cone missing"))
    for k, c in S.cones.items():
        unknown = [r for r in k if r not in S.rays]
        if unknown:
            rep.errors.append(Violation("UnknownRay", k, f"rays {unknown} not declared"))
            continue
        for f in S.facets_of(k):
            if f not in S.cones:
                rep.errors.append(Violation("NotFaceClosed", k, f"face {f} missing"))
        d = len(k)
        if c.lattice is not None:
            if len(c.lattice) != d or any(len(row) != d for row in c.lattice):
                rep.errors.append(Violation("NonSimplicial", k, "lattice matrix must be d x d"))
                continue
            dt = el.det(c.lattice)
            if dt == 0:
                rep.errors.append(Violation("NonSimplicial", k, "lattice matrix is singular"))
                continue
            # Z^d must sit inside the lattice
            gens = el.transpose(c.lattice)
            for i in range(d):
                e = [1 if j == i else 0 for j in range(d)]
                coords = el.solve_linear(c.lattice, e)
                if any(Fraction(x).denominator != 1 for x in coords):
                    rep.errors.append(
                        Violation("NonSimplicial", k, "lattice does not contain the ray generators")
                    )
                    break
            if canonical_lattice(gens, d) != c.lattice:
                rep.errors.append(Violation("NonCanonicalLattice", k, "lattice matrix not in HNF"))
        if d == 1 and c.lattice is not None:
            rep.errors.append(Violation("FaceLatticeMismatch", k, "ray lattice must be Z"))
        for g in S.lattice_gens(k):
            img = S.phi(k, g)
            if any(Fraction(x).denominator != 1 for x in img):
                rep.errors.append(Violation("EmbeddingNotIntegral", k, f"phi{tuple(g)} = {img}"))
                break
        for f in S.facets_of(k):
            if f in S.cones and f and all(r in S.rays for r in f):
                if S.face_lattice(k, f) != S.cones[f].lattice:
                    rep.errors.append(Violation("FaceLatticeMismatch", k, f"disagrees with face {f}"))
    return rep


# ---------------------------------------------------------------------------
# lattice normals, stars, products


def lattice_normal(S: ConeComplex, tau, sigma) -> tuple:
    """Lattice normal vector of ``sigma`` relative to its facet ``tau``."""
    v = S.normal_lift(tau, sigma)
    img = S.phi(sigma, v)
    P = S.projection(tau)
    return tuple(int(x) for x in el.matvec(P, img))


@dataclass
class StarContext:
    tau: Key
    projection: list  # N^Sigma -> N^Star(tau)
    scale: dict  # star ray -> coordinate of its generator on that ray in the parent chart
    complex: ConeComplex = None

    def to_star_chart(self, sigma: Key, x: Sequence) -> list:
        """Chart point of ``sigma`` (containing tau) -> chart point of sigma/tau."""
        out = []
        for r, xi in zip(sigma, x):
            if r in self.tau:
                continue
            out.append(el.normalize(Fraction(xi) / self.scale[r]))
        return out

    def star_key(self, sigma: Key) -> Key:
        return tuple(r for r in sigma if r not in self.tau)

    def parent_key(self, star_cone: Key) -> Key:
        return tuple(sorted(set(star_cone) | set(self.tau)))


def _build_star(S: ConeComplex, t: Key) -> StarContext:
    P = S.projection(t)
    rank = len(P)
    scale = {}
    rays = []
    for c in S.cofaces(t):
        if len(c) != len(t) + 1:
            continue
        r = (set(c) - set(t)).pop()
        lift = S.normal_lift(t, c)
        scale[r] = Fraction(lift[c.index(r)])
        emb = el.matvec(P, S.phi(c, lift))
        rays.append(Ray(r, tuple(int(x) for x in emb)))
    cones = []
    for c in S.cofaces(t):
        k = tuple(r for r in c if r not in t)
        pos = [c.index(r) for r in k]
        gens = [[Fraction(g[p]) / scale[c[p]] for p in pos] for g in S.lattice_gens(c)]
        lat = canonical_lattice(gens, len(k)) if k else None
        cones.append(Cone(k, lat))
    ctx = StarContext(t, P, scale)
    ctx.complex = ConeComplex(rank, rays, cones)
    return ctx


def star(S: ConeComplex, tau) -> tuple[ConeComplex, StarContext]:
    ctx = S.star_context(tau)
    return ctx.complex, ctx


def product(S: ConeComplex, T: ConeComplex, prefixes: Optional[tuple] = None) -> ConeComplex:
    """Product complex; ray ids are kept unless they collide (or prefixes given)."""
    if prefixes is None:
        prefixes = ("", "") if not set(S.rays) & set(T.rays) else ("0:", "1:")
    pa, pb = prefixes
    na, nb = S.ambient_rank, T.ambient_rank
    rays = [Ray(pa + r.id, tuple(r.embed) + (0,) * nb) for r in S.rays.values()]
    rays += [Ray(pb + r.id, (0,) * na + tuple(r.embed)) for r in T.rays.values()]
    cones = []
    for a in S.cones:
        ga = S.lattice_gens(a)
        for b in T.cones:
            gb = T.lattice_gens(b)
            names = [pa + r for r in a] + [pb + r for r in b]
            order = sorted(range(len(names)), key=lambda i: names[i])
            key = tuple(names[i] for i in order)
            blocks = [list(g) + [0] * len(b) for g in ga] + [[0] * len(a) + list(g) for g in gb]
            gens = [[g[i] for i in order] for g in blocks]
            cones.append(Cone(key, canonical_lattice(gens, len(key)) if key else None))
    return ConeComplex(na + nb, rays, cones)


def point_complex() -> ConeComplex:
    """The terminal complex (one apex, zero lattice)."""
    return ConeComplex(0, [], [Cone(())])


def line_complex(pos: str = "+", neg: str = "-") -> ConeComplex:
    """The complete fan in R (rays +1 and -1)."""
    return ConeComplex.from_maximal(1, [Ray(pos, (1,)), Ray(neg, (-1,))], [(pos,), (neg,)])


# ---------------------------------------------------------------------------
# subdivisions


def _fresh_id(S: ConeComplex, hint: str = "w") -> str:
    i = 0
    while f"{hint}{i}" in S.rays:
        i += 1
    return f"{hint}{i}"


def pullback_lattice(parent_gens: Sequence[Sequence], columns: Sequence[Sequence]) -> Optional[tuple]:
    """Lattice ``{y : M y in L}`` for ``M`` with the given (independent) columns."""
    d0 = len(parent_gens)
    dn = len(columns)
    if dn == 0:
        return None
    ann = el.integer_kernel(el.integralize(columns)[0], d0) if dn < d0 else []
    if ann:
        A = [[el.dot(a, g) for g in parent_gens] for a in ann]
        K = el.integer_kernel(A, d0)
    else:
        K = el.identity(d0)
    Mt = el.transpose(columns)
    ys = []
    for z in K:
        vec = [sum(Fraction(zi) * g[j] for zi, g in zip(z, parent_gens)) for j in range(d0)]
        y = el.solve_linear(Mt, vec)
        if y is None:
            raise ComplexError("lattice vector outside the span of the subcone")
        ys.append(y)
    return canonical_lattice(ys, dn)


def stellar_subdivide(S: ConeComplex, sigma, v: Sequence, new_id: Optional[str] = None):
    """Stellar subdivision of ``S`` at the chart point ``v`` of ``sigma``.

    Returns ``(complex, ray_id, v_primitive)``; subdividing a ray at its own
    direction returns ``S`` unchanged together with that ray.
    """
    key = S.key(sigma)
    d = len(key)
    v = [Fraction(x) for x in v]
    if len(v) != d or d == 0 or any(x <= 0 for x in v):
        raise NotInRelativeInterior(f"{v} is not in the relative interior of {key}")
    if d == 1:
        return S, key[0], [1]
    gens = S.lattice_gens(key)
    c = el.solve_linear(el.transpose(gens), v)
    c = el.primitive_rational(c)
    vp = [el.normalize(sum(Fraction(ci) * g[j] for ci, g in zip(c, gens))) for j in range(d)]
    w = new_id or _fresh_id(S)
    if w in S.rays:
        raise InvalidComplex(f"ray id {w} already used")
    embed = tuple(int(x) for x in S.phi(key, vp))
    kset = set(key)
    new_cones: dict[Key, Cone] = {}
    for k, cone in S.cones.items():
        if not kset <= set(k):
            new_cones[k] = cone
    todo = set()
    for g in S.cofaces(key):
        for size in range(len(g) + 1):
            for face in itertools.combinations(g, size):
                if not kset <= set(face):
                    todo.add(face)
    for face in sorted(todo):
        nk = tuple(sorted(face + (w,)))
        if nk in new_cones:
            continue
        parent = tuple(sorted(set(face) | kset))
        cols = []
        for r in nk:
            if r == w:
                cols.append([vp[key.index(p)] if p in kset else 0 for p in parent])
            else:
                cols.append([1 if p == r else 0 for p in parent])
        new_cones[nk] = Cone(nk, pullback_lattice(S.lattice_gens(parent), cols))
    rays = list(S.rays.values()) + [Ray(w, embed)]
    return ConeComplex(S.ambient_rank, rays, new_cones.values()), w, vp


@dataclass
class Subdivision:
    """A proper subdivision ``fine`` of ``base`` built by stellar operations.

    ``coords[r]`` holds the coordinates of the fine ray's primitive generator
    in the chart of its carrier (the smallest base cone containing it).
    """

    base: ConeComplex
    fine: ConeComplex
    coords: dict

    @classmethod
    def trivial(cls, S: ConeComplex) -> "Subdivision":
        return cls(S, S, {r: {r: Fraction(1)} for r in S.rays})

    @property
    def is_trivial(self) -> bool:
        return self.fine is self.base or self.fine == self.base

    def carrier(self, fine_cone) -> Key:
        k = _as_key(fine_cone)
        s = set()
        for r in k:
            s.update(self.coords[r])
        c = tuple(sorted(s))
        if c not in self.base.cones:
            raise ComplexError(f"fine cone {k} has no carrier in the base")
        return c

    def chart(self, fine_cone) -> tuple[Key, list]:
        """Carrier and the coordinate vectors of the fine cone's rays in its chart."""
        k = _as_key(fine_cone)
        c = self.carrier(k)
        vecs = [[self.coords[r].get(b, Fraction(0)) for b in c] for r in k]
        return c, vecs

    def universal(self, ray: str) -> dict:
        return self.coords[ray]

    def evaluate(self, ray: str, functional: Mapping) -> Fraction:
        return sum((x * functional.get(b, 0) for b, x in self.coords[ray].items()), Fraction(0))

    def stellar(self, fine_cone, v: Sequence, new_id: Optional[str] = None) -> tuple["Subdivision", str]:
        key = self.fine.key(fine_cone)
        fine, w, vp = stellar_subdivide(self.fine, key, v, new_id)
        if fine is self.fine:
            return self, w
        acc: dict = {}
        for r, x in zip(key, vp):
            for b, y in self.coords[r].items():
                acc[b] = acc.get(b, Fraction(0)) + Fraction(x) * y
        coords = dict(self.coords)
        coords[w] = {b: y for b, y in acc.items() if y}
        return Subdivision(self.base, fine, coords), w

    def slice(self, values: Mapping, cap: Optional[int] = None) -> "Subdivision":
        """Refine so that no cone has fine-ray values of both strict signs.

        ``values`` maps each fine ray to the value of a function that is
        linear on the cones of the base.
        """
        cap = cone_cap() if cap is None else cap
        sub = self
        vals = dict(values)
        crossing = [
            e for e in self.fine.cones_of_dim(2) if vals[e[0]] * vals[e[1]] < 0
        ]
        for a, b in crossing:
            va, vb = vals[a], vals[b]
            sub, w = sub.stellar((a, b), [abs(vb), abs(va)])
            vals[w] = Fraction(0)
            if len(sub.fine.cones) > cap:
                raise RefinementExplosion(f"refinement exceeded {cap} cones")
        return sub

    def slice_by_functional(self, functional: Mapping, cap: Optional[int] = None) -> "Subdivision":
        vals = {r: self.evaluate(r, functional) for r in self.fine.rays}
        return self.slice(vals, cap)


def refine_along_map(S, ray_images: Mapping, target: ConeComplex, cap: Optional[int] = None):
    """Subdivide so every cone maps into a single cone of the complete fan ``target``.

    ``S`` is a complex or a :class:`Subdivision`; ``ray_images`` maps each base
    ray to its image in ``Z^m`` (or each base cone to a matrix whose columns
    are the ray images, which must agree on shared rays).  Returns the
    subdivision and, for each fine cone, the smallest target cone containing
    its image.
    """
    sub = S if isinstance(S, Subdivision) else Subdivision.trivial(S)
    images = _ray_images_from_maps(sub.base, ray_images)
    m = target.ambient_rank
    walls = []
    for w in target.cones_of_dim(m - 1):
        K = el.integer_kernel([list(target.embed(r)) for r in w], m) if w else el.identity(m)
        for ell in K:
            ell = el.primitive(ell)
            first = next(x for x in ell if x)
            if first < 0:
                ell = [-x for x in ell]
            if ell not in walls:
                walls.append(ell)
    for ell in walls:
        functional = {b: Fraction(el.dot(ell, img)) for b, img in images.items()}
        sub = sub.slice_by_functional(functional, cap)
    assignment = {}
    locate_cache: dict = {}
    for k in sub.fine.cones:
        imgs = [fine_image(sub, r, images) for r in k]
        assignment[k] = locate_in_fan(target, imgs, locate_cache)
    return sub, assignment


def _ray_images_from_maps(base: ConeComplex, maps: Mapping) -> dict:
    images: dict[str, list] = {}
    for key, val in maps.items():
        if isinstance(key, str):
            images[key] = [Fraction(x) for x in val]
            continue
        k = _as_key(key)
        cols = el.transpose(val) if val and isinstance(val[0], (list, tuple)) else []
        for r, col in zip(k, cols):
            col = [Fraction(x) for x in col]
            if r in images and images[r] != col:
                raise MapFaceIncompatible(f"maps disagree on ray {r}")
            images[r] = col
    missing = [r for r in base.rays if r not in images]
    if missing:
        raise MapFaceIncompatible(f"no image given for rays {missing}")
    return images


def fine_image(sub: Subdivision, ray: str, images: Mapping) -> list:
    m = len(next(iter(images.values()))) if images else 0
    out = [Fraction(0)] * m
    for b, x in sub.coords[ray].items():
        for j, y in enumerate(images[b]):
            out[j] += x * y
    return out


def locate_in_fan(fan: ConeComplex, points: Sequence[Sequence], cache: Optional[dict] = None) -> Key:
    """Smallest cone of an embedded simplicial fan containing all ``points``."""
    if cache is None:
        cache = {}
    support: set = set()
    for p in points:
        tp = tuple(p)
        if tp not in cache:
            cache[tp] = _locate_point(fan, tp)
        support |= set(cache[tp])
    key = tuple(sorted(support))
    if key not in fan.cones:
        raise ImageNotCovered(f"points {points} do not lie in a common cone")
    return key


def _locate_point(fan: ConeComplex, p: tuple) -> Key:
    if not any(p):
        return ()
    for k in fan.maximal_cones():
        A = el.transpose([list(fan.embed(r)) for r in k])
        x = el.solve_linear(A, list(p))
        if x is not None and all(xi >= 0 for xi in x):
            return tuple(r for r, xi in zip(k, x) if xi != 0)
    raise ImageNotCovered(f"point {p} is outside the support of the fan")


# ---------------------------------------------------------------------------
# morphisms


@dataclass
class ComplexMorphism:
    """Cone assignment plus chart matrices and an ambient lattice map.

    ``cone_map[sigma] = (delta, M)`` where ``M`` (``dim delta x dim sigma``)
    sends chart coordinates of ``sigma`` to chart coordinates of ``delta``.
    """

    source: ConeComplex
    target: ConeComplex
    lattice_map: list
    cone_map: dict

    @classmethod
    def from_ray_images(cls, source, target, lattice_map, ray_images: Mapping) -> "ComplexMorphism":
        """``ray_images[r]`` maps target ray ids to the coefficients of f(u_r)."""
        cone_map = {}
        for k in source.cones:
            support = set()
            for r in k:
                support.update(b for b, x in ray_images[r].items() if x)
            delta = tuple(sorted(support))
            if delta not in target.cones:
                raise ImageEscapesCone(f"image of {k} is not inside a cone of the target")
            M = [[Fraction(ray_images[r].get(b, 0)) for r in k] for b in delta]
            cone_map[k] = (delta, M)
        return cls(source, target, [list(row) for row in lattice_map], cone_map)

    def ray_image(self, ray: str) -> dict:
        delta, M = self.cone_map[(ray,)]
        return {b: M[i][0] for i, b in enumerate(delta) if M[i][0]}

    def image_coords(self, sigma: Key, x: Sequence) -> tuple[Key, list]:
        delta, M = self.cone_map[sigma]
        return delta, el.matvec(M, x)


@dataclass
class MorphismReport:
    errors: list = field(default_factory=list)
    conewise_onto: bool = False

    @property
    def ok(self) -> bool:
        return not self.errors


def validate_morphism(f: ComplexMorphism) -> MorphismReport:
    rep = MorphismReport()
    S, T = f.source, f.target
    F = f.lattice_map
    if len(F) != T.ambient_rank or any(len(row) != S.ambient_rank for row in F):
        rep.errors.append(Violation("BadLatticeMap", (), "lattice map has the wrong shape"))
        return rep
    onto = True
    for k in S.cones:
        if k not in f.cone_map:
            rep.errors.append(Violation("MissingCone", k, "cone has no assigned target"))
            continue
        delta, M = f.cone_map[k]
        if delta not in T.cones:
            rep.errors.append(Violation("ImageEscapesCone", k, f"target {delta} is not a cone"))
            continue
        if len(M) != len(delta) or any(len(row) != len(k) for row in M):
            rep.errors.append(Violation("BadConeMatrix", k, "matrix shape mismatch"))
            continue
        if any(x < 0 for row in M for x in row):
            rep.errors.append(Violation("ImageEscapesCone", k, f"image leaves {delta}"))
            continue
        for j, r in enumerate(k):
            col = {b: M[i][j] for i, b in enumerate(delta) if M[i][j]}
            if (r,) in f.cone_map:
                d1, M1 = f.cone_map[(r,)]
                own = {b: M1[i][0] for i, b in enumerate(d1) if M1[i][0]}
                if own != col:
                    rep.errors.append(Violation("MapFaceIncompatible", k, f"disagrees on ray {r}"))
            img = T.phi(delta, [M[i][j] for i in range(len(delta))])
            if list(img) != el.matvec(F, S.embed(r)):
                rep.errors.append(Violation("EmbeddingMismatch", k, f"square fails on ray {r}"))
        Tg = T.lattice_gens(delta)
        for g in S.lattice_gens(k):
            y = el.matvec(M, g)
            c = el.solve_linear(el.transpose(Tg), y) if delta else []
            if c is None or any(Fraction(x).denominator != 1 for x in c):
                rep.errors.append(Violation("NotIntegral", k, "chart map is not integral"))
                break
        support = {delta[i] for i in range(len(delta)) for j in range(len(k)) if M[i][j]}
        for s in support:
            i = delta.index(s)
            if not any(M[i][j] > 0 and all(M[ii][j] == 0 for ii in range(len(delta)) if ii != i)
                       for j in range(len(k))):
                onto = False
    rep.conewise_onto = onto and rep.ok
    return rep


def compose(g: ComplexMorphism, f: ComplexMorphism) -> ComplexMorphism:
    """``g o f`` on ray images."""
    images = {}
    for r in f.source.rays:
        acc: dict = {}
        for b, x in f.ray_image(r).items():
            for c, y in g.ray_image(b).items():
                acc[c] = acc.get(c, Fraction(0)) + x * y
        images[r] = {c: y for c, y in acc.items() if y}
    L = el.matmul(g.lattice_map, f.lattice_map) if f.lattice_map and g.lattice_map else \
        el.zeros(g.target.ambient_rank, f.source.ambient_rank)
    return ComplexMorphism.from_ray_images(f.source, g.target, L, images)


def projection_morphism(P: ConeComplex, S: ConeComplex, prefix: str = "") -> ComplexMorphism:
    """Projection ``S x T -> S`` for a product built by :func:`product`."""
    images = {}
    for r in P.rays:
        base = r[len(prefix):] if r.startswith(prefix) else None
        images[r] = {base: Fraction(1)} if base in S.rays and (prefix or r in S.rays) else {}
    n = S.ambient_rank
    L = [[1 if i == j else 0 for j in range(P.ambient_rank)] for i in range(n)]
    return ComplexMorphism.from_ray_images(P, S, L, images)


def star_morphism(f: ComplexMorphism, gamma) -> tuple[ComplexMorphism, Key]:
    """Induced morphism ``Star(gamma) -> Star(delta)`` with delta minimal around f(gamma)."""
    S, T = f.source, f.target
    g = S.key(gamma)
    support = set()
    for r in g:
        support.update(f.ray_image(r))
    delta = tuple(sorted(support))
    sctx = S.star_context(g)
    tctx = T.star_context(delta)
    images = {}
    for r in sctx.complex.rays:
        c = tuple(sorted(g + (r,)))
        lift = S.normal_lift(g, c)
        d_c, y = f.image_coords(c, lift)
        coeff = {}
        for b, val in zip(d_c, y):
            if b in delta or not val:
                continue
            coeff[b] = el.normalize(Fraction(val) / tctx.scale[b])
        images[r] = coeff
    Pg = sctx.projection
    R = el.right_inverse(Pg, S.ambient_rank) if Pg else el.zeros(S.ambient_rank, 0)
    Q = el.matmul(tctx.projection, el.matmul(f.lattice_map, R)) if tctx.projection and Pg else \
        el.zeros(len(tctx.projection), len(Pg))
    return ComplexMorphism.from_ray_images(sctx.complex, tctx.complex, Q, images), delta
