import itertools
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conecalc import exactlin as el
from conecalc.complex import (
    Cone,
    ComplexMorphism,
    ConeComplex,
    ConeNotInComplex,
    ImageEscapesCone,
    MapFaceIncompatible,
    NotCodimOneFace,
    NotInRelativeInterior,
    Ray,
    RefinementExplosion,
    canonical_lattice,
    Subdivision,
    lattice_normal,
    line_complex,
    point_complex,
    product,
    projection_morphism,
    refine_along_map,
    star,
    stellar_subdivide,
    validate,
    validate_morphism,
)
from conecalc.moduli import build_m0n

import instances as inst


def kinds(S):
    return {e.kind for e in validate(S).errors}


# -- validate --------------------------------------------------------------------


def test_p2_complex_is_valid():
    assert validate(inst.p2_complex()).ok


def test_non_integral_embedding_is_reported():
    lat = canonical_lattice([[1, 0], [0, 1], [Fraction(1, 2), Fraction(1, 2)]], 2)
    S = ConeComplex(1, [Ray("e1", (1,)), Ray("e2", (-2,))], [(), ("e1",), ("e2",), Cone(("e1", "e2"), lat)])
    assert "EmbeddingNotIntegral" in kinds(S)


def test_missing_apex_is_reported():
    S = ConeComplex(1, [Ray("e1", (1,))], [("e1",)])
    assert "NotFaceClosed" in kinds(S)


def test_missing_face_is_reported():
    S = ConeComplex(1, [Ray("e1", (1,)), Ray("e2", (-1,))], [(), ("e1",), ("e1", "e2")])
    assert "NotFaceClosed" in kinds(S)


def test_singular_lattice_is_non_simplicial():
    lat = ((Fraction(1), Fraction(1)), (Fraction(1), Fraction(1)))
    S = ConeComplex(1, [Ray("e1", (1,)), Ray("e2", (-1,))], [(), ("e1",), ("e2",), Cone(("e1", "e2"), lat)])
    assert "NonSimplicial" in kinds(S)


def test_face_lattice_mismatch():
    # the cone's lattice contains e1/2, but the ray's lattice is Z
    lat = ((Fraction(1, 2), Fraction(0)), (Fraction(0), Fraction(1)))
    S = ConeComplex(2, [Ray("a", (2, 0)), Ray("b", (0, 1))], [(), ("a",), ("b",), Cone(("a", "b"), lat)])
    assert "FaceLatticeMismatch" in kinds(S)


# -- lattice normals -------------------------------------------------------------


def test_p2_lattice_normals():
    S = inst.p2_complex()
    assert lattice_normal(S, ("e1",), ("e1", "e2")) == ()
    assert lattice_normal(S, ("e2",), ("e1", "e2")) == ()
    assert lattice_normal(S, (), ("e1",)) == (1,)
    assert lattice_normal(S, (), ("e2",)) == (-1,)


def test_not_codim_one():
    S = inst.p2_complex()
    with pytest.raises(NotCodimOneFace):
        lattice_normal(S, (), ("e1", "e2"))


def test_half_lattice_normal_against_enumeration():
    S = inst.half_cone()
    # lattice points (x, y) of Z^2 + Z(1/2, 1/2): both in Z or both in 1/2 + Z
    pts = []
    for a in range(-6, 7):
        for b in range(-6, 7):
            if (a - b) % 2 == 0:
                pts.append((Fraction(a, 2), Fraction(b, 2)))
    ymin = min(y for _, y in pts if y > 0)
    assert ymin == Fraction(1, 2)
    rep = next(p for p in pts if p[1] == ymin)
    img = [rep[0] * 1 + rep[1] * 1, rep[0] * 0 + rep[1] * 2]
    # quotient by span of phi(a) = (1, 0) keeps the second coordinate
    assert lattice_normal(S, ("a",), ("a", "b")) == (int(img[1]),)


# -- stars ---------------------------------------------------------------------------


def test_star_of_ray_in_p2():
    st_, ctx = star(inst.p2_complex(), "e1")
    assert st_.ambient_rank == 0
    assert list(st_.rays) == ["e2"] and st_.embed("e2") == ()
    assert validate(st_).ok


def test_star_of_apex_is_identity():
    S = inst.p2_complex()
    assert star(S, ())[0] == S


def test_star_missing_cone():
    with pytest.raises(ConeNotInComplex):
        star(inst.p2_complex(), ("nope",))


def test_star_in_m05_has_three_rays():
    M = build_m0n(5)
    for r in M.rays:
        st_, _ = star(M, r)
        assert st_.dim == 1 and len(st_.rays) == 3


def _star_of_star_isomorphic(S, tau, sigma):
    inner, ctx_t = star(S, tau)
    outer, ctx_o = star(inner, tuple(r for r in sigma if r not in tau))
    direct, ctx_d = star(S, sigma)
    if outer.ambient_rank != direct.ambient_rank or set(outer.rays) != set(direct.rays):
        return False
    if {k: c.lattice for k, c in outer.cones.items()} != {k: c.lattice for k, c in direct.cones.items()}:
        return False
    # both ambients are quotients of Z^n by the same saturated sublattice
    A = el.matmul(ctx_o.projection, ctx_t.projection) if ctx_o.projection and ctx_t.projection else []
    B = ctx_d.projection
    n = S.ambient_rank
    if not B:
        return not A and all(not any(outer.embed(r)) for r in outer.rays)
    R = el.right_inverse(A, n)
    U = el.matmul(B, R)
    if abs(el.det(U)) != 1 or el.matmul(U, A) != B:
        return False
    return all(el.matvec(U, outer.embed(r)) == list(direct.embed(r)) for r in outer.rays)


@given(st.integers(0, 10**6))
@settings(max_examples=40)
def test_star_of_star(seed):
    rng = random.Random(seed)
    S = inst.random_complex(rng)
    sigma = rng.choice(list(S.cones))
    tau = tuple(r for r in sigma if rng.random() < 0.5)
    assert _star_of_star_isomorphic(S, tau, sigma)


# -- products ---------------------------------------------------------------------


def _pair_counts(S, T, d):
    return sum(1 for a in S.cones for b in T.cones if len(a) + len(b) == d)


def test_product_with_point():
    S = inst.p2_complex()
    assert product(S, point_complex()) == S


def test_product_p2_with_line():
    S, T = inst.p2_complex(), line_complex()
    P = product(S, T)
    assert len(P.rays) == 4
    assert len(P.cones_of_dim(2)) == _pair_counts(S, T, 2) == 5
    assert len(P.cones_of_dim(3)) == 2
    assert validate(P).ok


def test_product_line_with_line():
    P = product(line_complex("a", "b"), line_complex("c", "d"))
    assert len(P.rays) == 4 and len(P.cones_of_dim(2)) == 4
    assert validate(P).ok


def test_product_keeps_lattices():
    P = product(inst.half_cone(), line_complex())
    assert validate(P).ok
    assert P.face_lattice(("+", "a", "b"), ("a", "b")) == inst.half_cone().cones[("a", "b")].lattice


# -- stellar subdivision ---------------------------------------------------------


def test_stellar_p2():
    S, w, v = stellar_subdivide(inst.p2_complex(), ("e1", "e2"), [1, 1])
    assert sorted(S.embed(r) for r in S.rays) == [(-1,), (0,), (1,)]
    assert len(S.cones_of_dim(2)) == 2 and validate(S).ok


def test_stellar_ray_is_identity():
    S = inst.p2_complex()
    assert stellar_subdivide(S, ("e1",), [3])[0] is S


def test_stellar_half_lattice():
    S, w, v = stellar_subdivide(inst.half_cone(), ("a", "b"), [Fraction(1, 2), Fraction(1, 2)])
    assert v == [Fraction(1, 2), Fraction(1, 2)]
    two = S.cones_of_dim(2)
    assert len(two) == 2 and all(S.cones[c].lattice is None for c in two)
    assert validate(S).ok


def test_stellar_outside_interior():
    with pytest.raises(NotInRelativeInterior):
        stellar_subdivide(inst.p2_complex(), ("e1", "e2"), [1, 0])


def _in_cone(points, gens):
    """Is every point a nonnegative combination of the (independent) generators?"""
    for p in points:
        x = el.solve_linear(el.transpose(gens), p) if gens else ([] if not any(p) else None)
        if x is None or any(c < 0 for c in x):
            return False
    return True


@given(st.integers(0, 10**6))
@settings(max_examples=40)
def test_stellar_preserves_support(seed):
    rng = random.Random(seed)
    S = inst.random_complex(rng, max_steps=1)
    sub = inst.random_subdivision(rng, S, rng.randint(1, 3))
    fine = sub.fine
    assert validate(fine).ok
    # each sampled point of a base cone lies in some fine cone
    for key in S.cones:
        if not key:
            continue
        x = [Fraction(rng.randint(1, 5), rng.randint(1, 3)) for _ in key]
        found = False
        for fk in fine.cones:
            if not set(sub.carrier(fk)) <= set(key) or len(fk) != len(key):
                continue
            gens = [[sub.coords[r].get(b, 0) for b in key] for r in fk]
            if _in_cone([x], gens):
                found = True
                break
        assert found, (key, x)
    # each fine cone lies inside its carrier
    for fk in fine.cones:
        carrier, vecs = sub.chart(fk)
        assert all(all(c >= 0 for c in v) for v in vecs)


@given(st.integers(0, 10**6))
@settings(max_examples=30)
def test_subdivided_cone_interior_balancing(seed):
    rng = random.Random(seed)
    d = rng.choice([2, 3])
    S = inst.lines(d)
    top = S.cones_of_dim(d)[0]
    S = ConeComplex.from_maximal(S.ambient_rank, list(S.rays.values()), [top])
    sub = inst.random_subdivision(rng, S, rng.randint(1, 4))
    from conecalc.cycles import MinkowskiWeight, check_balanced

    fund = MinkowskiWeight(sub.fine, d, {c: 1 for c in sub.fine.cones_of_dim(d)})
    res = check_balanced(fund)
    bad = [] if res is True else [v.cone for v in res]
    # only faces on the boundary of the original cone may be unbalanced
    for tau in bad:
        assert len(sub.carrier(tau)) < d


@given(st.integers(0, 10**6))
@settings(max_examples=30)
def test_outputs_validate(seed):
    rng = random.Random(seed)
    S = inst.random_complex(rng)
    assert validate(S).ok
    key = rng.choice(list(S.cones))
    assert validate(star(S, key)[0]).ok
    assert validate(product(S, line_complex("z+", "z-"))).ok


# -- refine along maps -------------------------------------------------------------


def test_refine_single_ray_unchanged():
    S = ConeComplex.from_maximal(1, [Ray("a", (1,))], [("a",)])
    sub, asg = refine_along_map(S, {"a": [1]}, line_complex())
    assert sub.fine == S and asg[("a",)] == ("+",)


def test_refine_difference_map():
    S = ConeComplex.from_maximal(2, [Ray("a", (1, 0)), Ray("b", (0, 1))], [("a", "b")])
    sub, asg = refine_along_map(S, {"a": [1], "b": [-1]}, line_complex())
    new = [r for r in sub.fine.rays if r not in S.rays]
    assert len(new) == 1 and sub.coords[new[0]] == {"a": 1, "b": 1}
    assert validate(sub.fine).ok
    assert asg[tuple(sorted(("a", new[0])))] == ("+",)


def test_refine_sum_map_no_subdivision():
    S = inst.lines(2)
    quadrant = ConeComplex.from_maximal(2, [Ray("x0+", (1, 0)), Ray("x1+", (0, 1))], [("x0+", "x1+")])
    sub, asg = refine_along_map(quadrant, {"x0+": [1], "x1+": [1]}, line_complex())
    assert sub.fine == quadrant
    assert asg[("x0+", "x1+")] == ("+",)
    assert S.dim == 2


def test_refine_cone_maps_must_agree():
    S = inst.p2_complex()
    with pytest.raises(MapFaceIncompatible):
        refine_along_map(S, {("e1", "e2"): [[1, 1]], ("e1",): [[2]]}, line_complex())


def test_refinement_cap():
    S = inst.lines(3)
    with pytest.raises(RefinementExplosion):
        refine_along_map(S, {r: [1 if r.endswith("+") else -1, 2 if r.startswith("x1") else -3] for r in S.rays},
                         inst.BASES["p2fan"](), cap=30)


# -- morphisms -----------------------------------------------------------------------


def test_subdivision_morphism_not_onto():
    base = inst.p2_complex()
    sub, _ = Subdivision.trivial(base).stellar(("e1", "e2"), [1, 1])
    f = ComplexMorphism.from_ray_images(sub.fine, base, [[1]], sub.coords)
    rep = validate_morphism(f)
    assert rep.ok and not rep.conewise_onto


def test_projection_is_onto():
    S = inst.p2_complex()
    P = product(S, line_complex())
    rep = validate_morphism(projection_morphism(P, S))
    assert rep.ok and rep.conewise_onto


def test_escaping_image():
    S = line_complex()
    f = ComplexMorphism(S, S, [[1]], {(): ((), []), ("+",): (("+",), [[-1]]), ("-",): (("-",), [[1]])})
    assert "ImageEscapesCone" in {e.kind for e in validate_morphism(f).errors}
    with pytest.raises(ImageEscapesCone):
        ComplexMorphism.from_ray_images(inst.p2_complex(), line_complex(), [[1]],
                                        {"e1": {"+": 1}, "e2": {"-": 1}})


def test_lattice_square_must_commute():
    S = line_complex()
    f = ComplexMorphism.from_ray_images(S, S, [[2]], {"+": {"+": 1}, "-": {"-": 1}})
    assert "EmbeddingMismatch" in {e.kind for e in validate_morphism(f).errors}
