"""Dense univariate polynomials as coefficient tuples (c0, c1, ...).

Coefficients are Fractions in exact mode or floats in numeric mode; the
routines are agnostic.  All integration is the antiderivative vanishing at 0.
"""

from __future__ import annotations

from fractions import Fraction
from math import comb

Poly = tuple


def ptrim(p: Poly) -> Poly:
    n = len(p)
    while n > 0 and p[n - 1] == 0:
        n -= 1
    return tuple(p[:n])


def pzero() -> Poly:
    return ()


def pconst(c) -> Poly:
    return ptrim((c,))


def padd(a: Poly, b: Poly) -> Poly:
    if len(a) < len(b):
        a, b = b, a
    out = list(a)
    for i, c in enumerate(b):
        out[i] = out[i] + c
    return ptrim(out)


def pneg(a: Poly) -> Poly:
    return tuple(-c for c in a)


def psub(a: Poly, b: Poly) -> Poly:
    return padd(a, pneg(b))


def pscale(a: Poly, s) -> Poly:
    if s == 0:
        return ()
    return ptrim(tuple(c * s for c in a))


def pmul(a: Poly, b: Poly) -> Poly:
    if not a or not b:
        return ()
    out = [a[0] * 0] * (len(a) + len(b) - 1)
    for i, ca in enumerate(a):
        if ca == 0:
            continue
        for j, cb in enumerate(b):
            out[i + j] = out[i + j] + ca * cb
    return ptrim(out)


def pint(a: Poly) -> Poly:
    """Antiderivative with value 0 at t = 0."""
    if not a:
        return ()
    exact = isinstance(a[0], Fraction) or isinstance(a[0], int)
    out = [a[0] * 0]
    for i, c in enumerate(a):
        if exact:
            out.append(Fraction(c, 1) / (i + 1))
        else:
            out.append(c / (i + 1))
    return ptrim(out)


def pder(a: Poly) -> Poly:
    return ptrim(tuple(a[i] * i for i in range(1, len(a))))


def peval(a: Poly, t):
    acc = 0
    for c in reversed(a):
        acc = acc * t + c
    return acc


def pshift(a: Poly, h) -> Poly:
    """Compose with t -> t + h (Taylor shift)."""
    if not a:
        return ()
    n = len(a)
    out = [a[0] * 0] * n
    for i, c in enumerate(a):
        if c == 0:
            continue
        # c * (t + h)^i
        hp = 1
        for k in range(i, -1, -1):
            out[k] = out[k] + c * comb(i, k) * hp
            hp = hp * h
    return ptrim(out)


def pcompose_linear(a: Poly, s) -> Poly:
    """Compose with t -> s * t."""
    out = []
    sp = 1
    for c in a:
        out.append(c * sp)
        sp = sp * s
    return ptrim(out)


def pis_zero(a: Poly) -> bool:
    return all(c == 0 for c in a)


def pdeg(a: Poly) -> int:
    a = ptrim(a)
    return len(a) - 1 if a else -1
