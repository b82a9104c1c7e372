import random
from fractions import Fraction

import sympy

from carnotlab import linalg
from carnotlab.poly import (
    padd,
    pder,
    peval,
    pint,
    pis_zero,
    pmul,
    pscale,
    pshift,
    psub,
)


def random_matrix(rng, rows, cols, den=5):
    return [
        [Fraction(rng.randint(-6, 6), rng.randint(1, den)) for _ in range(cols)]
        for _ in range(rows)
    ]


def test_rank_and_nullspace_against_sympy():
    rng = random.Random(7)
    for _ in range(25):
        rows, cols = rng.randint(1, 5), rng.randint(1, 5)
        m = random_matrix(rng, rows, cols)
        sm = sympy.Matrix([[sympy.Rational(x.numerator, x.denominator) for x in r] for r in m])
        assert linalg.rank(m) == sm.rank()
        ns = linalg.nullspace(m)
        assert len(ns) == cols - sm.rank()
        for vec in ns:
            assert all(sum(r[k] * vec[k] for k in range(cols)) == 0 for r in m)


def test_solve_consistent_and_inconsistent():
    m = [[Fraction(1), Fraction(2)], [Fraction(2), Fraction(4)]]
    assert linalg.solve(m, [Fraction(3), Fraction(6)]) is not None
    assert linalg.solve(m, [Fraction(3), Fraction(7)]) is None
    x = linalg.solve([[Fraction(2), Fraction(0)], [Fraction(0), Fraction(4)]], [Fraction(1), Fraction(1)])
    assert x == [Fraction(1, 2), Fraction(1, 4)]


def test_primitive_integer_vector():
    v = [Fraction(-2, 3), Fraction(4, 9), Fraction(0)]
    out = linalg.primitive_integer_vector(v)
    assert out == [Fraction(3), Fraction(-2), Fraction(0)]


def test_rational_roots_cubic():
    # (t-1)(t-2)(t+3) = t^3 - 7t + 6
    assert linalg.rational_roots_cubic(Fraction(-7), Fraction(6)) == [-3, 1, 2]
    # irreducible: t^3 + t + 1 has no rational roots
    assert linalg.rational_roots_cubic(Fraction(1), Fraction(1)) == []
    # double root: (t-1)^2(t+2) = t^3 - 3t + 2
    assert linalg.rational_roots_cubic(Fraction(-3), Fraction(2)) == [-2, 1]


def test_is_square_fraction():
    assert linalg.is_square_fraction(Fraction(9, 4)) == Fraction(3, 2)
    assert linalg.is_square_fraction(Fraction(2)) is None
    assert linalg.is_square_fraction(Fraction(0)) == 0


def test_float_rank():
    assert linalg.float_rank([[1.0, 2.0], [2.0, 4.0 + 1e-13]]) == 1
    assert linalg.float_rank([[1.0, 0.0], [0.0, 1.0]]) == 2


def test_poly_ops_exact():
    p = (Fraction(1), Fraction(2))  # 1 + 2t
    q = (Fraction(0), Fraction(0), Fraction(3))  # 3t^2
    assert pmul(p, q) == (0, 0, Fraction(3), Fraction(6))
    assert padd(p, q) == (Fraction(1), Fraction(2), Fraction(3))
    assert pint((Fraction(2),)) == (0, Fraction(2))
    assert pder(pint(q)) == q
    assert peval(pshift(p, Fraction(5)), Fraction(1)) == peval(p, Fraction(6))
    assert pis_zero(psub(p, p))
    assert pscale(p, 0) == ()


def test_poly_shift_float():
    p = (1.0, -2.0, 0.5)
    assert abs(peval(pshift(p, 0.25), 0.5) - peval(p, 0.75)) < 1e-12
