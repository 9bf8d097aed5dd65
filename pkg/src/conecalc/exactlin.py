"""Exact integer and rational linear algebra.

Matrices are plain lists of rows holding Python ``int`` or
``fractions.Fraction`` entries; nothing in this package ever touches a float.
Lattices are given by generator lists (one vector per row) and are always
treated as row spans.
"""
from __future__ import annotations

import math
from fractions import Fraction
from functools import reduce
from typing import Optional, Sequence

Vector = list
Matrix = list

INFINITE = math.inf


class LinAlgError(ValueError):
    pass


class NotASublattice(LinAlgError):
    pass


class NotSaturated(LinAlgError):
    pass


class ZeroVector(LinAlgError):
    pass


# ---------------------------------------------------------------------------
# small helpers


def identity(n: int) -> Matrix:
    return [[1 if i == j else 0 for j in range(n)] for i in range(n)]


def zeros(rows: int, cols: int) -> Matrix:
    return [[0] * cols for _ in range(rows)]


def transpose(M: Sequence[Sequence], cols: Optional[int] = None) -> Matrix:
    if not M:
        return [[] for _ in range(cols or 0)]
    return [list(c) for c in zip(*M)]


def matmul(A: Sequence[Sequence], B: Sequence[Sequence]) -> Matrix:
    if not A:
        return []
    if not B:
        return [[] for _ in A]
    Bt = list(zip(*B))
    return [[sum(a * b for a, b in zip(row, col)) for col in Bt] for row in A]


def matvec(A: Sequence[Sequence], v: Sequence) -> Vector:
    return [sum(a * x for a, x in zip(row, v)) for row in A]


def vecmat(v: Sequence, A: Sequence[Sequence], cols: int) -> Vector:
    out = [0] * cols
    for x, row in zip(v, A):
        if x:
            for j, a in enumerate(row):
                if a:
                    out[j] += x * a
    return out


def dot(u: Sequence, v: Sequence):
    return sum(a * b for a, b in zip(u, v))


def normalize(x):
    """Return an int when a Fraction is integral; keeps hashing/equality tidy."""
    if isinstance(x, Fraction) and x.denominator == 1:
        return x.numerator
    return x


def lcm_of_denominators(values) -> int:
    d = 1
    for x in values:
        if isinstance(x, Fraction):
            d = d * x.denominator // math.gcd(d, x.denominator)
    return d


def integralize(rows: Sequence[Sequence]) -> tuple[Matrix, int]:
    """Scale a rational matrix by the lcm ``D`` of its denominators."""
    D = lcm_of_denominators(x for row in rows for x in row)
    return [[int(x * D) for x in row] for row in rows], D


def _egcd(a: int, b: int) -> tuple[int, int, int]:
    """Return (g, s, t) with s*a + t*b = g = gcd(a, b) >= 0."""
    old_r, r = a, b
    old_s, s = 1, 0
    old_t, t = 0, 1
    while r:
        q = old_r // r
        old_r, r = r, old_r - q * r
        old_s, s = s, old_s - q * s
        old_t, t = t, old_t - q * t
    if old_r < 0:
        old_r, old_s, old_t = -old_r, -old_s, -old_t
    return old_r, old_s, old_t


def _row_combine(M: Matrix, i: int, j: int, s: int, t: int, u: int, v: int) -> None:
    """Replace rows (i, j) by (s*Ri + t*Rj, u*Ri + v*Rj)."""
    ri, rj = M[i], M[j]
    M[i] = [s * a + t * b for a, b in zip(ri, rj)]
    M[j] = [u * a + v * b for a, b in zip(ri, rj)]


def _col_combine(M: Matrix, i: int, j: int, s: int, t: int, u: int, v: int) -> None:
    """Replace columns (i, j) by (s*Ci + t*Cj, u*Ci + v*Cj)."""
    for row in M:
        a, b = row[i], row[j]
        row[i] = s * a + t * b
        row[j] = u * a + v * b


# ---------------------------------------------------------------------------
# normal forms


def hnf(M: Sequence[Sequence[int]]) -> tuple[Matrix, Matrix]:
    """Row-style Hermite normal form.

    Returns ``(H, U)`` with ``H = U @ M``, ``U`` unimodular, pivots positive,
    entries above each pivot reduced into ``[0, pivot)`` and zero rows last.
    """
    H = [[int(x) for x in row] for row in M]
    m = len(H)
    n = len(H[0]) if m else 0
    U = identity(m)
    r = 0
    for j in range(n):
        if r >= m:
            break
        for i in range(r + 1, m):
            b = H[i][j]
            if b == 0:
                continue
            a = H[r][j]
            if a != 0 and b % a == 0:
                q = b // a
                H[i] = [y - q * x for x, y in zip(H[r], H[i])]
                U[i] = [y - q * x for x, y in zip(U[r], U[i])]
                continue
            g, s, t = _egcd(a, b)
            u, v = -b // g, a // g
            _row_combine(H, r, i, s, t, u, v)
            _row_combine(U, r, i, s, t, u, v)
        if H[r][j] == 0:
            continue
        if H[r][j] < 0:
            H[r] = [-x for x in H[r]]
            U[r] = [-x for x in U[r]]
        p = H[r][j]
        for k in range(r):
            q = H[k][j] // p
            if q:
                H[k] = [y - q * x for x, y in zip(H[r], H[k])]
                U[k] = [y - q * x for x, y in zip(U[r], U[k])]
        r += 1
    return H, U


def is_hnf(H: Sequence[Sequence[int]]) -> bool:
    """Predicate for the row-style HNF produced by :func:`hnf`."""
    last_pivot = -1
    seen_zero = False
    for i, row in enumerate(H):
        nz = [j for j, x in enumerate(row) if x != 0]
        if not nz:
            seen_zero = True
            continue
        if seen_zero:
            return False
        j = nz[0]
        if j <= last_pivot or row[j] <= 0:
            return False
        for k in range(i):
            if not 0 <= H[k][j] < row[j]:
                return False
        last_pivot = j
    return True


def snf(M: Sequence[Sequence[int]]) -> tuple[Matrix, Matrix, Matrix]:
    """Smith normal form ``S = U @ M @ V`` with d1 | d2 | ... and d_i >= 0."""
    S = [[int(x) for x in row] for row in M]
    m = len(S)
    n = len(S[0]) if m else 0
    U = identity(m)
    V = identity(n)
    t = 0
    while t < min(m, n):
        # pick the smallest nonzero entry in the remaining block as pivot
        best = None
        for i in range(t, m):
            for j in range(t, n):
                if S[i][j] != 0 and (best is None or abs(S[i][j]) < abs(S[best[0]][best[1]])):
                    best = (i, j)
        if best is None:
            break
        i, j = best
        if i != t:
            S[t], S[i] = S[i], S[t]
            U[t], U[i] = U[i], U[t]
        if j != t:
            for row in S:
                row[t], row[j] = row[j], row[t]
            for row in V:
                row[t], row[j] = row[j], row[t]
        while True:
            changed = False
            for i in range(t + 1, m):
                b = S[i][t]
                if b == 0:
                    continue
                a = S[t][t]
                if b % a == 0:
                    q = b // a
                    S[i] = [y - q * x for x, y in zip(S[t], S[i])]
                    U[i] = [y - q * x for x, y in zip(U[t], U[i])]
                else:
                    g, s, tt = _egcd(a, b)
                    _row_combine(S, t, i, s, tt, -b // g, a // g)
                    _row_combine(U, t, i, s, tt, -b // g, a // g)
                    changed = True
            for j in range(t + 1, n):
                b = S[t][j]
                if b == 0:
                    continue
                a = S[t][t]
                if b % a == 0:
                    q = b // a
                    for row in S:
                        row[j] -= q * row[t]
                    for row in V:
                        row[j] -= q * row[t]
                else:
                    g, s, tt = _egcd(a, b)
                    _col_combine(S, t, j, s, tt, -b // g, a // g)
                    _col_combine(V, t, j, s, tt, -b // g, a // g)
                    changed = True
            if changed:
                continue
            # divisibility: fold any offending row into row t and retry
            a = S[t][t]
            bad = next(
                (i for i in range(t + 1, m) for j in range(t + 1, n) if S[i][j] % a), None
            )
            if bad is None:
                break
            S[t] = [x + y for x, y in zip(S[t], S[bad])]
            U[t] = [x + y for x, y in zip(U[t], U[bad])]
        if S[t][t] < 0:
            S[t] = [-x for x in S[t]]
            U[t] = [-x for x in U[t]]
        t += 1
    return S, U, V


def invariant_factors(M: Sequence[Sequence[int]]) -> list[int]:
    S, _, _ = snf(M)
    return [S[i][i] for i in range(min(len(S), len(S[0]) if S else 0)) if S[i][i] != 0]


def det(M: Sequence[Sequence]):
    """Exact determinant by fraction-free elimination over Fractions."""
    n = len(M)
    if n == 0:
        return 1
    A = [[Fraction(x) for x in row] for row in M]
    result = Fraction(1)
    for c in range(n):
        p = next((r for r in range(c, n) if A[r][c] != 0), None)
        if p is None:
            return 0
        if p != c:
            A[c], A[p] = A[p], A[c]
            result = -result
        result *= A[c][c]
        inv = 1 / A[c][c]
        for r in range(c + 1, n):
            f = A[r][c] * inv
            if f:
                A[r] = [x - f * y for x, y in zip(A[r], A[c])]
    return normalize(result)


def rref(M: Sequence[Sequence]) -> tuple[Matrix, list[int]]:
    """Reduced row echelon form over Q; returns (R, pivot_columns)."""
    A = [[Fraction(x) for x in row] for row in M]
    m = len(A)
    n = len(A[0]) if m else 0
    pivots = []
    r = 0
    for c in range(n):
        p = next((i for i in range(r, m) if A[i][c] != 0), None)
        if p is None:
            continue
        A[r], A[p] = A[p], A[r]
        inv = 1 / A[r][c]
        A[r] = [x * inv for x in A[r]]
        for i in range(m):
            if i != r and A[i][c] != 0:
                f = A[i][c]
                A[i] = [x - f * y for x, y in zip(A[i], A[r])]
        pivots.append(c)
        r += 1
        if r == m:
            break
    return A, pivots


def rank(M: Sequence[Sequence]) -> int:
    if not M or not M[0]:
        return 0
    return len(rref(M)[1])


# ---------------------------------------------------------------------------
# lattices


def lattice_basis(gens: Sequence[Sequence[int]]) -> Matrix:
    """Canonical (HNF) basis of the Z-span of integer generators."""
    if not gens:
        return []
    H, _ = hnf(gens)
    return [row for row in H if any(row)]


def integer_kernel(A: Sequence[Sequence], n: Optional[int] = None) -> Matrix:
    """Basis (rows) of {x in Z^n : A x = 0}; the result is saturated."""
    if not A:
        if n is None:
            raise LinAlgError("column count needed for an empty matrix")
        return identity(n)
    n = len(A[0])
    Ai, _ = integralize(A)
    H, U = hnf(transpose(Ai))
    kernel = [U[i] for i in range(n) if not any(H[i])]
    return lattice_basis(kernel) if kernel else []


def saturation(gens: Sequence[Sequence], n: Optional[int] = None) -> Matrix:
    """Basis of Z^n intersected with the rational span of ``gens``."""
    gens = [list(g) for g in gens if any(g)]
    if not gens:
        return []
    n = len(gens[0])
    gi, _ = integralize(gens)
    K = integer_kernel(gi)
    if not K:
        return identity(n)
    return integer_kernel(K)


def index_in_saturation(gens: Sequence[Sequence[int]]) -> int:
    gens = [list(g) for g in gens if any(g)]
    if not gens:
        return 1
    return reduce(lambda a, b: a * b, invariant_factors(gens), 1)


def coordinates_in_basis(basis: Sequence[Sequence], v: Sequence) -> Optional[Vector]:
    """Rational coordinates of ``v`` in the (independent) row basis, or None."""
    if not basis:
        return [] if not any(v) else None
    sol = solve_linear(transpose(basis), list(v))
    return sol


def covolume_ratio(sub: Sequence[Sequence], sup: Sequence[Sequence]) -> Fraction:
    """|det| of a basis of span_Z(sub) written in a basis of span_Z(sup).

    Both lattices must have the same rational span.  The value is the
    index [sup : sub] when sub is a sublattice and a fraction otherwise.
    """
    rows = [list(g) for g in sub] + [list(g) for g in sup]
    if not rows:
        return Fraction(1)
    allint, _ = integralize(rows)
    bsub = lattice_basis(allint[: len(sub)])
    bsup = lattice_basis(allint[len(sub):])
    if len(bsub) != len(bsup) or rank(bsub + bsup) != len(bsup):
        raise NotASublattice("lattices do not share a rational span")
    if not bsup:
        return Fraction(1)
    coords = [coordinates_in_basis(bsup, v) for v in bsub]
    return Fraction(abs(det(coords)))


def sublattice_index(sub_gens: Sequence[Sequence], super_gens: Sequence[Sequence]):
    """Index of span_Z(sub) in span_Z(super); ``INFINITE`` on a rank drop."""
    rows = [list(g) for g in sub_gens] + [list(g) for g in super_gens]
    if not rows:
        return 1
    allint, _ = integralize(rows)
    bsub = lattice_basis(allint[: len(sub_gens)])
    bsup = lattice_basis(allint[len(sub_gens):])
    r_all = rank(bsub + bsup) if (bsub + bsup) else 0
    if r_all != len(bsup):
        raise NotASublattice("sub is not contained in the span of super")
    coords = []
    for v in bsub:
        c = coordinates_in_basis(bsup, v)
        if any(isinstance(x, Fraction) and x.denominator != 1 for x in c):
            raise NotASublattice(f"{v} is not in the Z-span of super")
        coords.append([int(x) for x in c])
    if len(bsub) < len(bsup):
        return INFINITE
    if not bsup:
        return 1
    return abs(int(det(coords)))


def primitive(v: Sequence[int]) -> Vector:
    g = 0
    for x in v:
        g = math.gcd(g, int(x))
    if g == 0:
        raise ZeroVector("primitive() of the zero vector")
    return [int(x) // g for x in v]


def primitive_rational(v: Sequence) -> Vector:
    """Scale a nonzero rational vector to the primitive integer vector on its ray."""
    vi, _ = integralize([list(v)])
    return primitive(vi[0])


# ---------------------------------------------------------------------------
# linear systems


def solve_linear(A: Sequence[Sequence], b: Sequence, integral: bool = False) -> Optional[Vector]:
    """Solve ``A x = b`` exactly; returns None when no solution exists.

    Rational mode takes the reduced-row-echelon solution with every free
    variable set to 0.  Integral mode works in the column-style Hermite form
    ``A V = H`` and sets the free coordinates of ``V^{-1} x`` to 0.
    """
    m = len(A)
    if m == 0:
        return None if any(b) else []
    n = len(A[0])
    if not integral:
        aug = [list(row) + [bi] for row, bi in zip(A, b)]
        R, piv = rref(aug)
        if n in piv:
            return None
        x = [Fraction(0)] * n
        for row, c in zip(R, piv):
            x[c] = row[n]
        return [normalize(v) for v in x]
    # scale every equation to integer coefficients
    rows = []
    rhs = []
    for row, bi in zip(A, b):
        D = lcm_of_denominators(list(row) + [bi])
        rows.append([int(x * D) for x in row])
        bi = Fraction(bi) * D
        rhs.append(int(bi))
    Ht, U = hnf(transpose(rows))  # U A^T = Ht  ->  A U^T = Ht^T
    H = transpose(Ht, m)
    # forward substitution on the column echelon form H (m x n)
    y = [0] * n
    residual = list(rhs)
    col = 0
    for i in range(m):
        if col < n and H[i][col] != 0:
            q, rem = divmod(residual[i], H[i][col])
            if rem:
                return None
            y[col] = q
            for k in range(i, m):
                residual[k] -= q * H[k][col]
            col += 1
        elif residual[i] != 0:
            return None
    if any(residual):
        return None
    x = vecmat(y, U, n)
    return x


def quotient_projection(n: int, sat_basis: Sequence[Sequence[int]]) -> tuple[Matrix, int]:
    """Surjection ``P: Z^n -> Z^(n-r)`` whose kernel is the given saturated lattice.

    Rows of ``P`` are the HNF basis of the annihilator of the sublattice.
    """
    basis = [list(v) for v in sat_basis if any(v)]
    if basis:
        if rank(basis) != len(basis) or index_in_saturation(basis) != 1:
            raise NotSaturated("quotient_projection needs a saturated basis")
        P = integer_kernel(basis)
    else:
        P = identity(n)
    return P, len(P)


def right_inverse(P: Sequence[Sequence[int]], n: int) -> Matrix:
    """Integer ``R`` (n x k) with ``P @ R = I_k`` for a surjective ``P``."""
    k = len(P)
    cols = []
    for i in range(k):
        e = [1 if j == i else 0 for j in range(k)]
        x = solve_linear(P, e, integral=True)
        if x is None:
            raise LinAlgError("projection is not surjective over Z")
        cols.append(x)
    return transpose(cols, n) if cols else [[] for _ in range(n)]
