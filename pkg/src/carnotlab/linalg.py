"""Exact rational linear algebra (lists of Fractions) plus float-mode rank.

Matrices are lists of row lists.  The exact routines never introduce
tolerances; the float routines go through numpy with SVD thresholding.
"""

from __future__ import annotations

from fractions import Fraction
from math import gcd

import numpy as np

Matrix = list[list]


def mat_copy(m: Matrix) -> Matrix:
    return [list(row) for row in m]


def identity(n: int, one=Fraction(1)):
    zero = one * 0
    return [[one if i == j else zero for j in range(n)] for i in range(n)]


def mat_mul(a: Matrix, b: Matrix) -> Matrix:
    cols = len(b[0])
    inner = len(b)
    return [
        [sum(row[k] * b[k][j] for k in range(inner)) for j in range(cols)]
        for row in a
    ]


def mat_vec(a: Matrix, v: list) -> list:
    return [sum(row[k] * v[k] for k in range(len(v))) for row in a]


def rref(m: Matrix) -> tuple[Matrix, list[int]]:
    """Reduced row echelon form; returns (rref_matrix, pivot_columns)."""
    m = mat_copy(m)
    if not m:
        return m, []
    rows, cols = len(m), len(m[0])
    pivots = []
    r = 0
    for c in range(cols):
        pivot_row = next((i for i in range(r, rows) if m[i][c] != 0), None)
        if pivot_row is None:
            continue
        m[r], m[pivot_row] = m[pivot_row], m[r]
        pv = m[r][c]
        m[r] = [x / pv for x in m[r]]
        for i in range(rows):
            if i != r and m[i][c] != 0:
                f = m[i][c]
                m[i] = [x - f * y for x, y in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == rows:
            break
    return m, pivots


def rank(m: Matrix) -> int:
    return len(rref(m)[1])


def nullspace(m: Matrix) -> list[list]:
    """Basis of {x : m @ x = 0}, canonical RREF parametrization."""
    if not m:
        return []
    cols = len(m[0])
    red, pivots = rref(m)
    free = [c for c in range(cols) if c not in pivots]
    basis = []
    for fc in free:
        vec = [Fraction(0)] * cols
        vec[fc] = Fraction(1)
        for r, pc in enumerate(pivots):
            vec[pc] = -red[r][fc]
        basis.append(vec)
    return basis


def solve(m: Matrix, b: list) -> list | None:
    """One exact solution of m @ x = b, or None if inconsistent."""
    if not m:
        return None
    cols = len(m[0])
    aug = [list(row) + [bv] for row, bv in zip(m, b)]
    red, pivots = rref(aug)
    if cols in pivots:
        return None
    x = [Fraction(0)] * cols
    for r, pc in enumerate(pivots):
        x[pc] = red[r][cols]
    return x


def in_row_span(rows: Matrix, v: list) -> bool:
    """Exact membership of v in the row span."""
    if not rows:
        return all(x == 0 for x in v)
    base = rank(rows)
    return rank(rows + [v]) == base


def primitive_integer_vector(v: list[Fraction]) -> list[Fraction]:
    """Clear denominators, divide by content, make first nonzero entry positive."""
    if all(x == 0 for x in v):
        return [Fraction(0)] * len(v)
    denlcm = 1
    for x in v:
        denlcm = denlcm * x.denominator // gcd(denlcm, x.denominator)
    ints = [int(x * denlcm) for x in v]
    g = 0
    for x in ints:
        g = gcd(g, abs(x))
    ints = [x // g for x in ints]
    first = next(x for x in ints if x != 0)
    if first < 0:
        ints = [-x for x in ints]
    return [Fraction(x) for x in ints]


def float_rank(m, tol: float = 1e-9) -> int:
    a = np.asarray(m, dtype=float)
    if a.size == 0:
        return 0
    s = np.linalg.svd(a, compute_uv=False)
    if s.size == 0:
        return 0
    return int(np.sum(s > tol * max(1.0, s[0])))


def is_square_fraction(x: Fraction) -> Fraction | None:
    """Exact rational square root of x >= 0, or None if irrational."""
    if x < 0:
        return None
    if x == 0:
        return Fraction(0)
    num, den = x.numerator, x.denominator
    rn = _isqrt_exact(num)
    rd = _isqrt_exact(den)
    if rn is None or rd is None:
        return None
    return Fraction(rn, rd)


def _isqrt_exact(n: int) -> int | None:
    from math import isqrt

    r = isqrt(n)
    return r if r * r == n else None


def rational_roots_cubic(p: Fraction, q: Fraction) -> list[Fraction]:
    """All rational roots of t^3 + p t + q, via the rational root theorem."""
    p, q = Fraction(p), Fraction(q)
    if q == 0:
        roots = [Fraction(0)]
        # remaining factor t^2 + p
        s = is_square_fraction(-p)
        if s is not None and s != 0:
            roots += [s, -s]
        elif s == 0:
            pass  # triple-counted zero not repeated
        return sorted(set(roots))
    # integer polynomial a t^3 + b t + c with a = L, b = L p, c = L q
    L = (p.denominator * q.denominator) // gcd(p.denominator, q.denominator)
    a = L
    c = int(q * L)
    roots = []
    for num in _divisors(abs(c)):
        for den in _divisors(abs(a)):
            for sign in (1, -1):
                r = Fraction(sign * num, den)
                if r * r * r + p * r + q == 0 and r not in roots:
                    roots.append(r)
    return sorted(roots)


def _divisors(n: int) -> list[int]:
    if n == 0:
        return [1]
    out = []
    d = 1
    while d * d <= n:
        if n % d == 0:
            out.append(d)
            if d != n // d:
                out.append(n // d)
        d += 1
    return sorted(out)
