"""Minkowski weights, tropical cycles, divisors and their intersection calculus."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Optional, Sequence

from . import exactlin as el
from .complex import (
    ComplexError,
    ComplexMorphism,
    ConeComplex,
    Key,
    Subdivision,
    line_complex,
    product,
    projection_morphism,
    star_morphism,
    validate_morphism,
)


class CycleError(ValueError):
    pass


class MixedDimensions(CycleError):
    pass


class NotCp(CycleError):
    def __init__(self, cone, message: str = ""):
        self.cone = cone
        super().__init__(message or f"divisor is not combinatorially principal on cone {cone}")


class Unbalanced(CycleError):
    pass


class AssemblyNotComplex(CycleError):
    pass


class NotConewise(CycleError):
    pass


class SignChangeOnCone(CycleError):
    pass


class IncomparableAtlases(CycleError):
    pass


class DimensionMismatch(CycleError):
    pass


def _frac(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


# ---------------------------------------------------------------------------
# weights


@dataclass
class MinkowskiWeight:
    complex: ConeComplex
    k: int
    weights: dict = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for key, w in self.weights.items():
            key = tuple(sorted(key)) if not isinstance(key, str) else (key,)
            if key not in self.complex.cones:
                raise ComplexError(f"cone {key} is not in the complex")
            if len(key) != self.k:
                raise MixedDimensions(f"cone {key} has dimension {len(key)}, expected {self.k}")
            w = _frac(w)
            if w:
                clean[key] = clean.get(key, Fraction(0)) + w
        self.weights = {k: clean[k] for k in sorted(clean) if clean[k]}

    @property
    def integral(self) -> bool:
        return all(w.denominator == 1 for w in self.weights.values())

    def __getitem__(self, key) -> Fraction:
        return self.weights.get(tuple(sorted(key)), Fraction(0))

    def is_zero(self) -> bool:
        return not self.weights

    def scaled(self, s) -> "MinkowskiWeight":
        return MinkowskiWeight(self.complex, self.k, {c: w * s for c, w in self.weights.items()})


def fundamental_weight(S: ConeComplex) -> MinkowskiWeight:
    d = S.dim
    return MinkowskiWeight(S, d, {c: 1 for c in S.cones_of_dim(d)})


@dataclass
class BalanceViolation:
    cone: Key
    defect: tuple

    def __str__(self):
        return f"unbalanced at {self.cone}: defect {tuple(str(x) for x in self.defect)}"


def balance_defects(c: MinkowskiWeight) -> dict:
    S = c.complex
    sums: dict[Key, list] = {}
    for sigma, w in c.weights.items():
        for i in range(len(sigma)):
            tau = sigma[:i] + sigma[i + 1:]
            u = lattice_normal_cached(S, tau, sigma)
            acc = sums.setdefault(tau, [Fraction(0)] * len(u))
            for j, x in enumerate(u):
                if x:
                    acc[j] += w * x
    return sums


def lattice_normal_cached(S: ConeComplex, tau: Key, sigma: Key) -> tuple:
    from .complex import lattice_normal

    cache = S._cache.setdefault("normal", {})
    if (tau, sigma) not in cache:
        cache[(tau, sigma)] = lattice_normal(S, tau, sigma)
    return cache[(tau, sigma)]


def check_balanced(c: MinkowskiWeight):
    """True, or the list of violating (k-1)-cones with their defect vectors."""
    bad = [
        BalanceViolation(tau, tuple(el.normalize(x) for x in v))
        for tau, v in sorted(balance_defects(c).items())
        if any(v)
    ]
    return True if not bad else bad


def is_balanced(c) -> bool:
    if isinstance(c, TropicalCycle):
        c = c.weight
    return check_balanced(c) is True


def mink_basis(S: ConeComplex, k: int) -> list:
    """Basis of the group of integral k-dimensional Minkowski weights."""
    cones = S.cones_of_dim(k)
    rows: list[list] = []
    for tau in S.cones_of_dim(k - 1) if k > 0 else []:
        cols = []
        for sigma in cones:
            if set(tau) <= set(sigma):
                cols.append(lattice_normal_cached(S, tau, sigma))
            else:
                cols.append(None)
        q = len(S.projection(tau))
        for j in range(q):
            rows.append([col[j] if col is not None else 0 for col in cols])
    if rows:
        K = el.integer_kernel(rows, len(cones))
    else:
        K = el.identity(len(cones))
    return [MinkowskiWeight(S, k, dict(zip(cones, vec))) for vec in K]


def pullback_weight(c: MinkowskiWeight, gamma) -> MinkowskiWeight:
    S = c.complex
    g = S.key(gamma)
    ctx = S.star_context(g)
    if c.k < len(g):
        return MinkowskiWeight(ctx.complex, 0, {})
    w = {ctx.star_key(s): x for s, x in c.weights.items() if set(g) <= set(s)}
    return MinkowskiWeight(ctx.complex, c.k - len(g), w)


# ---------------------------------------------------------------------------
# divisors


@dataclass
class Divisor:
    complex: ConeComplex
    values: dict

    def __post_init__(self):
        vals = {}
        for r in self.complex.rays:
            vals[r] = _frac(self.values.get(r, 0))
        extra = set(self.values) - set(self.complex.rays)
        if extra:
            raise ComplexError(f"divisor values given for unknown rays {sorted(extra)}")
        self.values = vals

    def __call__(self, ray: str) -> Fraction:
        return self.values[ray]

    def at(self, cone, x: Sequence) -> Fraction:
        k = tuple(sorted(cone)) if not isinstance(cone, str) else (cone,)
        return sum((_frac(xi) * self.values[r] for r, xi in zip(k, x)), Fraction(0))

    @property
    def integral(self) -> bool:
        for k in self.complex.cones:
            for g in self.complex.lattice_gens(k):
                if self.at(k, g).denominator != 1:
                    return False
        return True

    def __sub__(self, other: "Divisor") -> "Divisor":
        return Divisor(self.complex, {r: self.values[r] - other.values[r] for r in self.values})

    def __add__(self, other: "Divisor") -> "Divisor":
        return Divisor(self.complex, {r: self.values[r] + other.values[r] for r in self.values})


def pullback_to_subdivision(psi: Divisor, sub: Subdivision) -> Divisor:
    if sub.fine is psi.complex:
        return psi
    vals = {r: sub.evaluate(r, psi.values) for r in sub.fine.rays}
    return Divisor(sub.fine, vals)


def pullback_divisor(psi: Divisor, f: ComplexMorphism) -> Divisor:
    """``psi o f`` on the source complex."""
    vals = {}
    for r in f.source.rays:
        vals[r] = sum((x * psi.values[b] for b, x in f.ray_image(r).items()), Fraction(0))
    return Divisor(f.source, vals)


class _ConeSolver:
    """Canonical solution map ``b -> m`` of ``m . embed(r) = b_r`` on one cone."""

    def __init__(self, S: ConeComplex, key: Key):
        n = S.ambient_rank
        d = len(key)
        aug = [list(S.embed(r)) + [1 if j == i else 0 for j in range(d)] for i, r in enumerate(key)]
        R, piv = el.rref(aug) if aug else ([], [])
        self.n = n
        self.rows = []
        self.checks = []
        for row, p in zip(R, piv):
            if p < n:
                self.rows.append((p, row[n:]))
        used = len(self.rows)
        for row in R[used:]:
            self.checks.append(row[n:])

    def solve(self, b: Sequence) -> Optional[list]:
        for chk in self.checks:
            if el.dot(chk, b) != 0:
                return None
        m = [Fraction(0)] * self.n
        for p, coeffs in self.rows:
            m[p] = _frac(el.dot(coeffs, b))
        return m


def _solver(S: ConeComplex, key: Key) -> _ConeSolver:
    cache = S._cache.setdefault("solver", {})
    if key not in cache:
        cache[key] = _ConeSolver(S, key)
    return cache[key]


class CpCertificate:
    """Per-cone linear functionals ``m_sigma`` with ``m_sigma o phi = psi`` on sigma."""

    def __init__(self, psi: Divisor, overrides: Optional[Mapping] = None):
        self.divisor = psi
        self._m: dict = dict(overrides or {})

    def functional(self, cone) -> list:
        key = tuple(sorted(cone))
        if key not in self._m:
            S = self.divisor.complex
            m = _solver(S, key).solve([self.divisor.values[r] for r in key])
            if m is None:
                raise NotCp(key)
            self._m[key] = m
        return self._m[key]

    @property
    def integral(self) -> bool:
        S = self.divisor.complex
        return all(
            _frac(x).denominator == 1 for k in S.maximal_cones() for x in self.functional(k)
        )

    def functionals(self) -> dict:
        S = self.divisor.complex
        return {k: self.functional(k) for k in S.cones}


def cp_certificate(psi: Divisor) -> CpCertificate:
    cert = CpCertificate(psi)
    for k in psi.complex.maximal_cones():
        cert.functional(k)
    return cert


def is_cp(psi: Divisor) -> bool:
    try:
        cp_certificate(psi)
    except NotCp:
        return False
    return True


def lin_equiv(psi: Divisor, other: Divisor) -> Optional[list]:
    """A single functional m with ``m o phi = psi - other`` on every ray, or None."""
    S = psi.complex
    if other.complex != S:
        raise IncomparableAtlases("divisors live on different complexes")
    rays = list(S.rays)
    if not rays:
        return [Fraction(0)] * S.ambient_rank
    A = [list(S.embed(r)) for r in rays]
    b = [psi.values[r] - other.values[r] for r in rays]
    if S.ambient_rank == 0:
        return [] if not any(b) else None
    return el.solve_linear(A, b)


def restrict_divisor_to_star(psi: Divisor, tau, cert: Optional[CpCertificate] = None) -> Divisor:
    S = psi.complex
    t = S.key(tau)
    ctx = S.star_context(t)
    if not t:
        return Divisor(ctx.complex, dict(psi.values))
    cert = cert or CpCertificate(psi)
    m = cert.functional(t)
    vals = {}
    for r in ctx.complex.rays:
        shifted = psi.values[r] - el.dot(m, S.embed(r))
        vals[r] = _frac(shifted) * ctx.scale[r]
    return Divisor(ctx.complex, vals)


# ---------------------------------------------------------------------------
# cycles on subdivisions


@dataclass
class TropicalCycle:
    sub: Subdivision
    weight: MinkowskiWeight

    @classmethod
    def of(cls, c: MinkowskiWeight) -> "TropicalCycle":
        return cls(Subdivision.trivial(c.complex), c)

    @classmethod
    def zero(cls, S: ConeComplex, k: int) -> "TropicalCycle":
        return cls(Subdivision.trivial(S), MinkowskiWeight(S, k, {}))

    @property
    def base(self) -> ConeComplex:
        return self.sub.base

    @property
    def k(self) -> int:
        return self.weight.k

    def is_zero(self) -> bool:
        return self.weight.is_zero()

    def contributions(self, scale=1) -> list:
        out = []
        for key, w in self.weight.weights.items():
            carrier, vecs = self.sub.chart(key)
            out.append((carrier, vecs, w * scale))
        return out


def as_cycle(A) -> TropicalCycle:
    return A if isinstance(A, TropicalCycle) else TropicalCycle.of(A)


@dataclass
class ExtendedCycle:
    base: ConeComplex
    components: dict = field(default_factory=dict)  # cone of base -> TropicalCycle on its star

    def nonzero(self) -> dict:
        return {g: c for g, c in self.components.items() if not c.is_zero()}


def _direction(vec: Mapping) -> tuple:
    items = sorted((b, x) for b, x in vec.items() if x)
    ints = el.primitive_rational([x for _, x in items])
    return tuple((b, x) for (b, _), x in zip(items, ints))


def _cone_functionals(gens: Sequence[Sequence], d: int) -> tuple[list, list]:
    """Annihilator rows of span(gens) and dual functionals F_j(g_i) = delta_ij."""
    k = len(gens)
    ann = el.integer_kernel(el.integralize(gens)[0], d) if k < d else []
    if k == 0:
        return el.identity(d), []
    duals = []
    for j in range(k):
        e = [1 if i == j else 0 for i in range(k)]
        F = el.solve_linear([list(g) for g in gens], e)
        if F is None:
            raise AssemblyNotComplex("contributed cone is not simplicial")
        duals.append(F)
    return ann, duals


def assemble(base: ConeComplex, k: int, contributions: Sequence, check: bool = True,
             sub: Optional[Subdivision] = None) -> TropicalCycle:
    """Weighted k-cones (carrier, generator charts, weight) -> a cycle on a refinement.

    Each contributed cone is made a union of fine cones by slicing along the
    hyperplanes that cut it out of its carrier chart; every fine cone inside a
    contributed cone receives that cone's weight.
    """
    contributions = [(tuple(c), [list(map(_frac, v)) for v in vs], _frac(w))
                     for c, vs, w in contributions if w]
    sub = sub or Subdivision.trivial(base)
    prepared = []
    for carrier, vecs, w in contributions:
        if len(vecs) != k:
            raise MixedDimensions(f"contribution of dimension {len(vecs)} in a {k}-cycle")
        ann, duals = _cone_functionals(vecs, len(carrier))
        prepared.append((carrier, vecs, w, ann, duals))

    def direction_index(s: Subdivision) -> dict:
        return {_direction(s.coords[r]): r for r in s.fine.rays}

    dirs = direction_index(sub)
    for carrier, vecs, w, ann, duals in prepared:
        rays = []
        for v in vecs:
            rays.append(dirs.get(_direction(dict(zip(carrier, v)))))
        if all(r is not None for r in rays) and tuple(sorted(rays)) in sub.fine.cones:
            continue
        for ell in list(ann) + list(duals):
            functional = {b: _frac(x) for b, x in zip(carrier, ell) if x}
            before = len(sub.fine.rays)
            sub = sub.slice_by_functional(functional)
            if len(sub.fine.rays) != before:
                dirs = direction_index(sub)
    weights: dict = {}
    by_carrier: dict = {}
    for item in prepared:
        by_carrier.setdefault(item[0], []).append(item)
    for key in sub.fine.cones_of_dim(k):
        cset = set(sub.carrier(key))
        pts = [sub.coords[r] for r in key]
        total = Fraction(0)
        for carrier, items in by_carrier.items():
            if not cset <= set(carrier):
                continue
            charts = [[p.get(b, Fraction(0)) for b in carrier] for p in pts]
            for _, vecs, w, ann, duals in items:
                ok = all(el.dot(a, x) == 0 for a in ann for x in charts) and all(
                    el.dot(F, x) >= 0 for F in duals for x in charts
                )
                if ok:
                    total += w
        if total:
            weights[key] = total
    cyc = TropicalCycle(sub, MinkowskiWeight(sub.fine, k, weights))
    if check:
        res = check_balanced(cyc.weight)
        if res is not True:
            raise AssemblyNotComplex("; ".join(str(v) for v in res))
    return cyc


def add_cycles(cycles: Sequence[TropicalCycle], scales: Optional[Sequence] = None,
               check: bool = False) -> TropicalCycle:
    if not cycles:
        raise CycleError("nothing to add")
    base = cycles[0].base
    k = cycles[0].k
    scales = scales or [1] * len(cycles)
    for c in cycles:
        if c.base != base:
            raise IncomparableAtlases("cycles live on different base complexes")
    if len(cycles) == 1 and scales[0] == 1:
        return cycles[0]
    first = cycles[0].sub
    if all(c.sub.fine == first.fine and c.sub.coords == first.coords for c in cycles):
        acc: dict = {}
        for c, s in zip(cycles, scales):
            for key, w in c.weight.weights.items():
                acc[key] = acc.get(key, Fraction(0)) + w * s
        return TropicalCycle(first, MinkowskiWeight(first.fine, k, acc))
    contribs = []
    for c, s in zip(cycles, scales):
        if c.k != k and not c.is_zero():
            raise MixedDimensions("cannot add cycles of different dimensions")
        contribs += c.contributions(s)
    return assemble(base, k, contribs, check=check)


def cycle_equal(A, B) -> bool:
    if isinstance(A, ExtendedCycle) or isinstance(B, ExtendedCycle):
        return extended_equal(A, B)
    A, B = as_cycle(A), as_cycle(B)
    if A.base != B.base:
        raise IncomparableAtlases("cycles live on different base complexes")
    if A.is_zero() and B.is_zero():
        return True
    if A.k != B.k:
        return False
    diff = add_cycles([A, B], [1, -1])
    return diff.is_zero()


def extended_equal(A: ExtendedCycle, B: ExtendedCycle) -> bool:
    if A.base != B.base:
        raise IncomparableAtlases("extended cycles live on different complexes")
    keys = set(A.nonzero()) | set(B.nonzero())
    for g in keys:
        a = A.components.get(g)
        b = B.components.get(g)
        if a is None:
            if not b.is_zero():
                return False
            continue
        if b is None:
            if not a.is_zero():
                return False
            continue
        if not cycle_equal(a, b):
            return False
    return True


def extended_combination(parts: Sequence[ExtendedCycle], scales: Sequence) -> ExtendedCycle:
    base = parts[0].base
    grouped: dict = {}
    for E, s in zip(parts, scales):
        for g, c in E.components.items():
            if not c.is_zero():
                grouped.setdefault(g, []).append((c, s))
    comps = {}
    for g in sorted(grouped):
        cs = grouped[g]
        total = add_cycles([c for c, _ in cs], [s for _, s in cs])
        if not total.is_zero():
            comps[g] = total
    return ExtendedCycle(base, comps)


# ---------------------------------------------------------------------------
# cup products


def _cup_weight(psi: Divisor, c: MinkowskiWeight, cert: CpCertificate) -> MinkowskiWeight:
    S = c.complex
    acc: dict = {}
    for sigma, w in c.weights.items():
        for i in range(len(sigma)):
            tau = sigma[:i] + sigma[i + 1:]
            v = S.normal_lift(tau, sigma)
            m = cert.functional(tau)
            phi_v = S.lift_image(tau, sigma)
            val = psi.at(sigma, v) - el.dot(m, phi_v)
            if val:
                acc[tau] = acc.get(tau, Fraction(0)) + w * val
    return MinkowskiWeight(S, c.k - 1, acc)


def cup(psi: Divisor, A, cert: Optional[CpCertificate] = None, check: bool = True):
    """Cup product of a cp-divisor with a weight, cycle or extended cycle."""
    if isinstance(A, ExtendedCycle):
        comps = {}
        for g, comp in A.components.items():
            star_psi = restrict_divisor_to_star(psi, g, cert)
            res = cup(star_psi, comp, check=check)
            if not res.is_zero():
                comps[g] = res
        return ExtendedCycle(A.base, comps)
    if isinstance(A, TropicalCycle):
        fine_psi = pullback_to_subdivision(psi, A.sub)
        fine_cert = cert if (cert is not None and A.sub.fine is psi.complex) else None
        return TropicalCycle(A.sub, cup(fine_psi, A.weight, fine_cert, check))
    c = A
    if c.k == 0:
        raise DimensionMismatch("cannot cut a 0-dimensional weight further")
    if psi.complex != c.complex:
        raise IncomparableAtlases("divisor and weight live on different complexes")
    if cert is None:
        cert = cp_certificate(psi)
    if check and check_balanced(c) is not True:
        raise Unbalanced("cup needs a balanced weight")
    return _cup_weight(psi, c, cert)


def iterated(divisors: Sequence[Divisor], A):
    """``psi_1 . (psi_2 . ( ... psi_k . A))`` by repeated cup products."""
    out = A
    for psi in reversed(list(divisors)):
        out = cup(psi, out)
    return out


# ---------------------------------------------------------------------------
# intersection with divisors (boundary-valued)


def _lattice_coords(gens_basis: Sequence[Sequence], vecs: Sequence[Sequence]) -> list:
    """Integer coordinates of lattice vectors in the given lattice basis."""
    M = el.transpose(gens_basis)
    out = []
    for v in vecs:
        c = el.solve_linear(M, list(v))
        out.append([int(x) for x in c])
    return out


def dot(psi: Divisor, A) -> ExtendedCycle:
    """Intersection of a divisor with a cycle; contributions land on stars of cones."""
    A = as_cycle(A)
    S = A.base
    if psi.complex != S:
        raise IncomparableAtlases("divisor and cycle live on different complexes")
    sub = A.sub
    k = A.k
    if k == 0:
        raise DimensionMismatch("cannot intersect a 0-dimensional cycle")
    fine = sub.fine
    fine_vals = {r: sub.evaluate(r, psi.values) for r in fine.rays}
    grouped: dict = {}
    for sigma, w in A.weight.weights.items():
        delta, vecs = sub.chart(sigma)
        d = len(delta)
        Bd = S.lattice_gens(delta)
        fine_gens = fine.lattice_gens(sigma)
        n_sigma = [[sum(_frac(y) * vec[j] for y, vec in zip(g, vecs)) for j in range(d)] for g in fine_gens]
        for idx, rho in enumerate(sigma):
            val = fine_vals[rho]
            if not val:
                continue
            tau = tuple(sorted(sub.coords[rho]))
            tpos = [delta.index(t) for t in tau]
            units = [[1 if j == p else 0 for j in range(d)] for p in tpos]
            if k + len(tau) - el.rank(vecs + units) != 1:
                continue
            n_tau = []
            for g in S.lattice_gens(tau):
                v = [Fraction(0)] * d
                for p, x in zip(tpos, g):
                    v[p] = _frac(x)
                n_tau.append(v)
            ind = el.index_in_saturation(_lattice_coords(Bd, n_tau + n_sigma))
            ctx = S.star_context(tau)
            skey = ctx.star_key(delta)
            gens = [ctx.to_star_chart(delta, vecs[j]) for j in range(len(sigma)) if j != idx]
            grouped.setdefault(tau, []).append((skey, gens, val * ind * w))
    comps = {}
    for tau in sorted(grouped):
        ctx = S.star_context(tau)
        cyc = assemble(ctx.complex, k - 1, grouped[tau])
        if not cyc.is_zero():
            comps[tau] = cyc
    return ExtendedCycle(S, comps)


def degree(E) -> Fraction:
    if isinstance(E, ExtendedCycle):
        return sum((degree(c) for c in E.components.values()), Fraction(0))
    E = as_cycle(E)
    if E.k != 0:
        return Fraction(0)
    return E.weight.weights.get((), Fraction(0))


# ---------------------------------------------------------------------------
# push-forwards


def _morphism_report(f: ComplexMorphism):
    rep = getattr(f, "_report", None)
    if rep is None:
        rep = validate_morphism(f)
        f._report = rep
    return rep


def pushforward(f: ComplexMorphism, A, require_onto: bool = True):
    if isinstance(A, ExtendedCycle):
        return _pushforward_extended(f, A, require_onto)
    A = as_cycle(A)
    rep = _morphism_report(f)
    if not rep.ok:
        raise NotConewise("; ".join(str(e) for e in rep.errors))
    if require_onto and not rep.conewise_onto:
        raise NotConewise("morphism does not map cones onto cones")
    if A.base != f.source:
        raise IncomparableAtlases("cycle does not live on the source complex")
    k = A.k
    T = f.target
    contribs = []
    for alpha, w in A.weight.weights.items():
        sigma, vecs = A.sub.chart(alpha)
        delta, M = f.cone_map[sigma]
        images = [el.matvec(M, v) for v in vecs]
        if k and el.rank(images) < k:
            continue
        fine_gens = A.sub.fine.lattice_gens(alpha)
        d = len(sigma)
        n_alpha = [[sum(_frac(y) * vec[j] for y, vec in zip(g, vecs)) for j in range(d)] for g in fine_gens]
        f_n = [el.matvec(M, v) for v in n_alpha]
        coords = _lattice_coords(T.lattice_gens(delta), f_n) if delta else []
        ind = el.index_in_saturation(coords) if coords else 1
        contribs.append((delta, images, w * ind))
    return assemble(T, k, contribs)


def _pushforward_extended(f: ComplexMorphism, E: ExtendedCycle, require_onto: bool) -> ExtendedCycle:
    grouped: dict = {}
    for g, comp in E.components.items():
        if comp.is_zero():
            continue
        h, delta = star_morphism(f, g)
        pushed = pushforward(h, comp, require_onto)
        grouped.setdefault(delta, []).append(pushed)
    comps = {}
    for delta in sorted(grouped):
        total = add_cycles(grouped[delta])
        if not total.is_zero():
            comps[delta] = total
    return ExtendedCycle(f.target, comps)


def pushforward_to_point(A) -> Fraction:
    """Degree via the morphism to the one-point complex."""
    return degree(A)


# ---------------------------------------------------------------------------
# rational equivalence witnesses


@dataclass
class WitnessResult:
    gamma: TropicalCycle
    witness: ExtendedCycle
    expected: ExtendedCycle
    balanced: bool
    check: bool


def _line_ids(S: ConeComplex) -> tuple[str, str]:
    pos, neg = "+", "-"
    while pos in S.rays or neg in S.rays:
        pos, neg = pos + "+", neg + "-"
    return pos, neg


def graph_witness(psi: Divisor, A) -> WitnessResult:
    """Full graph of ``psi`` over ``A`` and the rational-equivalence identity check."""
    A = as_cycle(A)
    sub = A.sub
    S = sub.base
    fine = sub.fine
    k = A.k
    cp_certificate(psi)
    vals = {r: sub.evaluate(r, psi.values) for r in fine.rays}
    for key in fine.cones:
        if len(key) <= k:
            signs = {(v > 0) - (v < 0) for v in (vals[r] for r in key)}
            if {1, -1} <= signs:
                raise SignChangeOnCone(f"divisor changes sign on cone {key}")
    cupc = cup(psi, A)
    pos, neg = _line_ids(fine)
    line = line_complex(pos, neg)
    base2 = product(S, line)
    coords = {r: dict(sub.coords[r]) for r in fine.rays}
    coords[pos] = {pos: Fraction(1)}
    coords[neg] = {neg: Fraction(1)}
    s2 = Subdivision(base2, product(fine, line), coords)
    graph: dict = {}
    scale: dict = {}
    for r in sorted(fine.rays):
        v = vals[r]
        if not v:
            graph[r], scale[r] = r, Fraction(1)
            continue
        eps = pos if v > 0 else neg
        edge = tuple(sorted((r, eps)))
        chart = [Fraction(1) if x == r else abs(v) for x in edge]
        s2, g = s2.stellar(edge, chart)
        graph[r] = g
        b = next(iter(sub.coords[r]))
        scale[r] = s2.coords[g][b] / sub.coords[r][b]
    F = s2.fine
    weights: dict = {}

    def add(key, w):
        key = tuple(sorted(key))
        if key not in F.cones:
            raise ComplexError(f"expected cone {key} in the graph refinement")
        weights[key] = weights.get(key, Fraction(0)) + w

    for sigma, w in A.weight.weights.items():
        gkey = tuple(sorted(graph[r] for r in sigma))
        sub_gens = []
        for x in fine.lattice_gens(sigma):
            y = {graph[r]: _frac(xr) / scale[r] for r, xr in zip(sigma, x)}
            sub_gens.append([y[g] for g in gkey])
        ratio = el.covolume_ratio(sub_gens, F.lattice_gens(gkey)) if gkey else Fraction(1)
        add(gkey, w * ratio)
    for tau, w in cupc.weight.weights.items():
        tv = [vals[r] for r in tau]
        if all(v >= 0 for v in tv):
            add(tau + (neg,), w)
            if any(v > 0 for v in tv):
                allowed = set(tau) | {graph[r] for r in tau}
                for key in F.cones_of_dim(k):
                    if set(key) <= allowed:
                        add(key, w)
        else:
            add(tuple(graph[r] for r in tau) + (neg,), w)
    gamma = TropicalCycle(s2, MinkowskiWeight(F, k, weights))
    balanced = is_balanced(gamma)
    q_psi = Divisor(base2, {pos: 1, neg: -1})
    W = dot(q_psi, gamma)
    p = projection_morphism(base2, S)
    witness = pushforward(p, W)
    d = dot(psi, A)
    apex = S.star_context(())
    expected = extended_combination(
        [d, ExtendedCycle(S, {(): _restar(cupc, apex.complex)})], [1, -1]
    )
    check = balanced and extended_equal(witness, expected)
    return WitnessResult(gamma, witness, expected, balanced, check)


def _restar(c: TropicalCycle, star_complex: ConeComplex) -> TropicalCycle:
    """Re-home a cycle on Sigma as a cycle on Star(apex) (equal complexes)."""
    if c.base is star_complex:
        return c
    sub = Subdivision(star_complex, c.sub.fine, c.sub.coords)
    return TropicalCycle(sub, c.weight)
