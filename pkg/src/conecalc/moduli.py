"""Moduli fans of rational tropical curves, psi divisors and descendant numbers."""
from __future__ import annotations

import itertools
import math
from fractions import Fraction
from functools import lru_cache
from typing import Optional, Sequence

from . import exactlin as el
from .complex import (
    ConeComplex,
    Ray,
    Subdivision,
    locate_in_fan,
    point_complex,
    product,
    refine_along_map,
)
from .cycles import (
    DimensionMismatch,
    Divisor,
    MinkowskiWeight,
    TropicalCycle,
    degree,
    fundamental_weight,
    iterated,
    lin_equiv,
    pullback_to_subdivision,
)


class ModuliError(ValueError):
    pass


class MarksNotDistinct(ModuliError):
    pass


class DegreeNotBalanced(ModuliError):
    pass


def split_id(side: Sequence[int]) -> str:
    return "I={" + ",".join(str(i) for i in sorted(side)) + "}"


def parse_split(ray_id: str) -> frozenset:
    body = ray_id[ray_id.index("{") + 1: ray_id.rindex("}")]
    return frozenset(int(x) for x in body.split(","))


def splits(n: int) -> list[frozenset]:
    """Canonical split sides (those avoiding mark n)."""
    marks = range(1, n)
    out = []
    for size in range(2, n - 1):
        out.extend(frozenset(c) for c in itertools.combinations(marks, size))
    return out


def compatible(a: frozenset, b: frozenset, n: int) -> bool:
    return a <= b or b <= a or not (a & b) or len(a | b) == n


def _pairs(n: int) -> list[tuple[int, int]]:
    return list(itertools.combinations(range(1, n + 1), 2))


@lru_cache(maxsize=None)
def moduli_projection(n: int) -> tuple:
    """Projection from Z^(n choose 2) onto the quotient by the saturated image of Phi."""
    pairs = _pairs(n)
    image = [[1 if i in p else 0 for p in pairs] for i in range(1, n + 1)]
    P, _ = el.quotient_projection(len(pairs), el.saturation(image))
    return tuple(tuple(row) for row in P)


def split_vector(n: int, side: frozenset) -> list[int]:
    return [1 if p[0] in side and p[1] in side else 0 for p in _pairs(n)]


@lru_cache(maxsize=None)
def build_m0n(n: int) -> ConeComplex:
    """The moduli fan of n-marked rational tropical curves."""
    if n == 3:
        return point_complex()
    if n < 3:
        raise ModuliError("need at least 3 marks")
    P = [list(row) for row in moduli_projection(n)]
    sides = splits(n)
    rays = [Ray(split_id(s), tuple(el.matvec(P, split_vector(n, s)))) for s in sides]
    ids = {s: split_id(s) for s in sides}
    cones: list = [()]

    def extend(current: list, start: int):
        for j in range(start, len(sides)):
            s = sides[j]
            if all(compatible(s, t, n) for t in current):
                nxt = current + [s]
                cones.append(tuple(sorted(ids[x] for x in nxt)))
                if len(nxt) < n - 3:
                    extend(nxt, j + 1)

    extend([], 0)
    return ConeComplex(len(P), rays, cones)


def _k_side(n: int, side: frozenset, k: int, containing: bool) -> frozenset:
    full = frozenset(range(1, n + 1))
    other = full - side
    if containing:
        return side if k in side else other
    return side if k not in side else other


def psi_divisor(n: int, k: int) -> Divisor:
    M = build_m0n(n)
    if not 1 <= k <= n:
        raise ModuliError(f"mark {k} out of range")
    vals = {}
    for r in M.rays:
        J = _k_side(n, parse_split(r), k, containing=False)
        vals[r] = Fraction(len(J) * (len(J) - 1), (n - 1) * (n - 2))
    return Divisor(M, vals)


def default_marks(n: int, k: int) -> tuple[int, int]:
    others = [i for i in range(1, n + 1) if i != k]
    return others[0], others[1]


def psi_boundary_rep(n: int, k: int, a: Optional[int] = None, b: Optional[int] = None) -> Divisor:
    """Integral representative: 1 on splits with k on one side and a, b on the other."""
    if a is None or b is None:
        a, b = default_marks(n, k)
    if len({a, b, k}) != 3:
        raise MarksNotDistinct(f"marks {k}, {a}, {b} must be distinct")
    M = build_m0n(n)
    vals = {}
    for r in M.rays:
        J = _k_side(n, parse_split(r), k, containing=True)
        vals[r] = 1 if a not in J and b not in J else 0
    return Divisor(M, vals)


def _descendant_with(n: int, exponents: Sequence[int], rep: str) -> Fraction:
    M = build_m0n(n)
    divisors = []
    for k, a in enumerate(exponents, start=1):
        for _ in range(a):
            divisors.append(psi_divisor(n, k) if rep == "formula" else psi_boundary_rep(n, k))
    if not divisors:
        return Fraction(1) if M.dim == 0 else Fraction(0)
    return degree(iterated(divisors, fundamental_weight(M)))


def descendant(n: int, exponents: Sequence[int], representation: str = "both") -> Fraction:
    """Top intersection of psi classes on the moduli fan (apex weight)."""
    exponents = list(exponents)
    if len(exponents) != n or any(a < 0 for a in exponents) or sum(exponents) != n - 3:
        raise DimensionMismatch(f"exponents must be {n} nonnegative integers summing to {n - 3}")
    if representation == "both":
        a = _descendant_with(n, exponents, "formula")
        b = _descendant_with(n, exponents, "boundary")
        if a != b:
            raise ModuliError(f"psi representations disagree: {a} vs {b}")
        return a
    return _descendant_with(n, exponents, representation)


def string_oracle(exponents: Sequence[int]) -> int:
    """Genus-0 descendant integral via the string equation alone."""
    a = list(exponents)
    n = len(a)
    if sum(a) != n - 3:
        return 0
    if n == 3:
        return 1
    if 0 not in a:
        return 0
    j = a.index(0)
    rest = a[:j] + a[j + 1:]
    total = 0
    for i, x in enumerate(rest):
        if x > 0:
            b = list(rest)
            b[i] -= 1
            total += string_oracle(b)
    return total


def multinomial_oracle(exponents: Sequence[int]) -> int:
    n = len(exponents)
    out = math.factorial(n - 3)
    for a in exponents:
        out //= math.factorial(a)
    return out


# ---------------------------------------------------------------------------
# labeled moduli


def build_labeled_moduli(n: int, degree_vectors: Sequence[Sequence[int]], fan: ConeComplex):
    """Moduli of n-marked rational curves in R^r with ends ``degree_vectors``.

    Returns the product complex (moduli factor times ``fan``) and, for each
    mark i in 1..n, the images of all rays under the evaluation map.  Marks
    n+1..n+m label the ends.
    """
    delta = [list(v) for v in degree_vectors]
    r = fan.ambient_rank
    if any(len(v) != r for v in delta):
        raise DegreeNotBalanced("end directions must live in the fan's lattice")
    if any(sum(v[j] for v in delta) for j in range(r)):
        raise DegreeNotBalanced("end directions must sum to zero")
    total = n + len(delta)
    M = build_m0n(total)
    if set(M.rays) & set(fan.rays):
        raise ModuliError("fan ray ids collide with split ids")
    X = product(M, fan)
    evs = {}
    for i in range(1, n + 1):
        images = {}
        for rid in M.rays:
            side = parse_split(rid)
            J = _k_side(total, side, i, containing=True)
            vec = [0] * r
            if 1 not in J:
                for k in J:
                    if k > n:
                        vec = [a + b for a, b in zip(vec, delta[k - n - 1])]
            images[rid] = vec
        for rid in fan.rays:
            images[rid] = list(fan.embed(rid))
        evs[i] = images
    return X, evs


def evaluate_pl(H: Divisor, point: Sequence) -> Fraction:
    """Value of the piecewise linear function ``H`` at a point of its fan's support."""
    fan = H.complex
    if not any(point):
        return Fraction(0)
    key = locate_in_fan(fan, [point])
    A = el.transpose([list(fan.embed(r)) for r in key])
    x = el.solve_linear(A, list(point))
    return sum((Fraction(xi) * H.values[r] for r, xi in zip(key, x)), Fraction(0))


def gw_count(fan: ConeComplex, degree_vectors: Sequence[Sequence[int]], conditions: Sequence,
             n: Optional[int] = None, cap: Optional[int] = None) -> Fraction:
    """Tropical descendant invariant with point-class style incidence conditions.

    ``conditions`` is a list of ``(mark, divisor_or_None, power)``; a ``None``
    divisor stands for the psi class of that mark.
    """
    marks = [c[0] for c in conditions]
    n = n if n is not None else max(marks, default=1)
    X, evs = build_labeled_moduli(n, degree_vectors, fan)
    codim = sum(c[2] for c in conditions)
    if codim != X.dim:
        raise DimensionMismatch(f"conditions have total codimension {codim}, the complex has dimension {X.dim}")
    sub = Subdivision.trivial(X)
    for i in sorted({c[0] for c in conditions if c[1] is not None}):
        if i != 1:
            sub, _ = refine_along_map(sub, evs[i], fan, cap)
    total = n + len(degree_vectors)
    divisors = []
    for i, H, power in conditions:
        if H is None:
            psi = psi_divisor(total, i)
            base_div = Divisor(X, {r: psi.values.get(r, 0) for r in X.rays if r in psi.values})
            fine = pullback_to_subdivision(base_div, sub)
        else:
            images = evs[i]
            cache: dict = {}
            vals = {}
            for r in sub.fine.rays:
                pt = [Fraction(0)] * fan.ambient_rank
                for b, x in sub.coords[r].items():
                    for j, y in enumerate(images[b]):
                        pt[j] += x * y
                tp = tuple(pt)
                if tp not in cache:
                    cache[tp] = evaluate_pl(H, tp)
                vals[r] = cache[tp]
            fine = Divisor(sub.fine, vals)
        divisors.extend([fine] * power)
    cyc = TropicalCycle(sub, fundamental_weight(sub.fine))
    return degree(iterated(divisors, cyc.weight))


def p2_fan() -> ConeComplex:
    rays = [Ray("r0", (1, 0)), Ray("r1", (0, 1)), Ray("r2", (-1, -1))]
    return ConeComplex.from_maximal(2, rays, [("r0", "r1"), ("r1", "r2"), ("r0", "r2")])


def boundary_reps_equivalent(n: int, k: int) -> bool:
    """All boundary representatives of psi_k are linearly equivalent to the formula."""
    ref = psi_divisor(n, k)
    for a, b in itertools.combinations([i for i in range(1, n + 1) if i != k], 2):
        if lin_equiv(psi_boundary_rep(n, k, a, b), ref) is None:
            return False
    return True
