import itertools
import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conecalc import exactlin as el


# -- independent oracles ------------------------------------------------------


def laplace_det(M):
    n = len(M)
    if n == 0:
        return 1
    if n == 1:
        return M[0][0]
    return sum(
        (-1) ** j * M[0][j] * laplace_det([row[:j] + row[j + 1:] for row in M[1:]])
        for j in range(n)
        if M[0][j]
    )


def determinantal_invariants(M):
    """Invariant factors from gcds of k x k minors."""
    rows, cols = len(M), len(M[0])
    ds = [1]
    for k in range(1, min(rows, cols) + 1):
        g = 0
        for r in itertools.combinations(range(rows), k):
            for c in itertools.combinations(range(cols), k):
                g = math.gcd(g, laplace_det([[M[i][j] for j in c] for i in r]))
        if g == 0:
            break
        ds.append(g)
    return [ds[i] // ds[i - 1] for i in range(1, len(ds))]


def mat(rows, cols, lo=-4, hi=4):
    return st.lists(st.lists(st.integers(lo, hi), min_size=cols, max_size=cols), min_size=rows, max_size=rows)


small_matrix = st.integers(1, 3).flatmap(lambda r: st.integers(1, 4).flatmap(lambda c: mat(r, c)))


def nonsingular(n, lo=-3, hi=3):
    return mat(n, n, lo, hi).filter(lambda M: laplace_det(M) != 0)


# -- hnf -------------------------------------------------------------------------


def test_hnf_identity():
    assert el.hnf([[1, 0], [0, 1]]) == ([[1, 0], [0, 1]], [[1, 0], [0, 1]])


def test_hnf_zero():
    H, U = el.hnf([[0, 0], [0, 0]])
    assert H == [[0, 0], [0, 0]] and U == [[1, 0], [0, 1]]


def test_hnf_example_determinant():
    H, U = el.hnf([[2, 4], [1, 3]])
    assert el.is_hnf(H)
    assert abs(laplace_det(H)) == 2
    assert el.matmul(U, [[2, 4], [1, 3]]) == H


@given(small_matrix)
@settings(max_examples=150)
def test_hnf_predicates(M):
    H, U = el.hnf(M)
    assert el.matmul(U, M) == H
    assert abs(laplace_det(U)) == 1
    assert el.is_hnf(H)


@given(nonsingular(3), nonsingular(3, -1, 1).filter(lambda T: abs(laplace_det(T)) == 1))
@settings(max_examples=80)
def test_hnf_is_a_lattice_invariant(M, T):
    assert el.hnf(M)[0] == el.hnf(el.matmul(T, M))[0]


# -- snf -------------------------------------------------------------------------


@pytest.mark.parametrize(
    "M, diag",
    [([[1, 0], [0, 1]], [1, 1]), ([[2, 4], [4, 8]], [2, 0]), ([[2, 0], [0, 4]], [2, 4]), ([[2, 0], [0, 3]], [1, 6])],
)
def test_snf_examples(M, diag):
    S, U, V = el.snf(M)
    assert [S[i][i] for i in range(2)] == diag


@given(small_matrix)
@settings(max_examples=150)
def test_snf_predicates(M):
    S, U, V = el.snf(M)
    assert el.matmul(el.matmul(U, M), V) == S
    assert abs(laplace_det(U)) == 1 and abs(laplace_det(V)) == 1
    r = min(len(M), len(M[0]))
    for i in range(len(S)):
        for j in range(len(S[0])):
            if i != j:
                assert S[i][j] == 0
    d = [S[i][i] for i in range(r)]
    nz = [x for x in d if x]
    assert all(x > 0 for x in nz)
    assert all(b % a == 0 for a, b in zip(nz, nz[1:]))
    assert nz == determinantal_invariants(M)


# -- saturation and indices -----------------------------------------------------


@pytest.mark.parametrize(
    "gens, expected",
    [([[2, 0], [0, 3]], [[1, 0], [0, 1]]), ([[1, 0]], [[1, 0]]), ([[2, 4]], [[1, 2]])],
)
def test_saturation_examples(gens, expected):
    assert el.saturation(gens) == expected


@pytest.mark.parametrize("gens, idx", [([[1, 0], [0, 1]], 1), ([[2, 4]], 2), ([[1, 0], [1, 2]], 2)])
def test_index_in_saturation_examples(gens, idx):
    assert el.index_in_saturation(gens) == idx


def test_sublattice_index_examples():
    I2 = [[1, 0], [0, 1]]
    assert el.sublattice_index(I2, I2) == 1
    assert el.sublattice_index([[2, 0], [0, 1]], I2) == 2
    assert el.sublattice_index([[1, 1]], I2) == el.INFINITE
    with pytest.raises(el.NotASublattice):
        el.sublattice_index([[1, 0]], [[2, 0]])


@given(st.lists(st.lists(st.integers(-5, 5), min_size=3, max_size=3), min_size=1, max_size=3))
@settings(max_examples=150)
def test_saturation_idempotent(gens):
    sat = el.saturation(gens)
    assert el.saturation(sat) == sat
    if sat:
        assert el.index_in_saturation(sat) == 1
    nz = [g for g in gens if any(g)]
    if nz:
        assert el.index_in_saturation(nz) == el.sublattice_index(el.lattice_basis(nz), sat)


def _tower(n):
    return st.tuples(nonsingular(n, -3, 3), nonsingular(n, -2, 2), nonsingular(n, -2, 2))


@pytest.mark.parametrize("n", [2, 3])
def test_index_multiplicative_in_towers(n):
    @given(_tower(n))
    @settings(max_examples=120)
    def check(t):
        C, T1, T2 = t
        B = el.matmul(T1, C)
        A = el.matmul(T2, B)
        ab = el.sublattice_index(A, B)
        bc = el.sublattice_index(B, C)
        assert ab == abs(laplace_det(T2)) and bc == abs(laplace_det(T1))
        assert el.sublattice_index(A, C) == ab * bc

    check()


def test_covolume_ratio_fraction():
    assert el.covolume_ratio([[Fraction(1, 3)]], [[1]]) == Fraction(1, 3)
    assert el.covolume_ratio([[2, 0], [0, 3]], [[1, 0], [0, 1]]) == 6


# -- primitive, solve, projections ---------------------------------------------


def test_primitive_examples():
    assert el.primitive([2, 4]) == [1, 2]
    assert el.primitive([1, 0]) == [1, 0]
    assert el.primitive([-3, -6]) == [-1, -2]
    with pytest.raises(el.ZeroVector):
        el.primitive([0, 0])


def test_solve_linear_examples():
    assert el.solve_linear([[1, 0], [0, 1]], [3, Fraction(1, 2)]) == [3, Fraction(1, 2)]
    assert el.solve_linear([[1, -1]], [1], integral=True) == [1, 0]
    assert el.solve_linear([[2]], [1], integral=True) is None
    assert el.solve_linear([[1, 1], [1, 1]], [1, 2]) is None


@given(mat(2, 3), st.lists(st.integers(-4, 4), min_size=3, max_size=3))
@settings(max_examples=150)
def test_solve_linear_consistent(A, x0):
    b = el.matvec(A, x0)
    x = el.solve_linear(A, b)
    assert x is not None and el.matvec(A, x) == b
    xi = el.solve_linear(A, b, integral=True)
    assert xi is not None and all(isinstance(v, int) for v in xi)
    assert el.matvec(A, xi) == b
    assert el.solve_linear(A, b, integral=True) == xi


def test_quotient_projection_examples():
    assert el.quotient_projection(2, []) == ([[1, 0], [0, 1]], 2)
    P, r = el.quotient_projection(2, [[1, 0]])
    assert r == 1 and el.matvec(P, [5, 7]) == [7]
    P, r = el.quotient_projection(2, [[1, 1]])
    assert el.matvec(P, [1, 1]) == [0] and el.right_inverse(P, 2)
    with pytest.raises(el.NotSaturated):
        el.quotient_projection(2, [[2, 0]])


@given(st.lists(st.lists(st.integers(-4, 4), min_size=4, max_size=4), min_size=1, max_size=3))
@settings(max_examples=120)
def test_quotient_projection_properties(gens):
    sat = el.saturation(gens)
    P, r = el.quotient_projection(4, sat)
    assert r == 4 - len(sat)
    for v in sat:
        assert el.matvec(P, v) == [0] * r
    if r:
        R = el.right_inverse(P, 4)
        assert el.matmul(P, R) == el.identity(r)
