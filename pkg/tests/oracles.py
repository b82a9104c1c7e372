"""Independent reference computations used only by the test suite."""

from fractions import Fraction
from itertools import product
from math import factorial

import sympy

from carnotlab.algebra import bracket


def _sym(x) -> sympy.Rational:
    f = Fraction(x)
    return sympy.Rational(f.numerator, f.denominator)


def simplex_signature_coeff(control, word, t0, t1):
    """Iterated integral over the ordered simplex via sympy Piecewise integration.

    S_w = int_{t0 <= s_1 <= ... <= s_k <= t1} u_{w_1}(s_1) ... u_{w_k}(s_k) ds,
    built iteratively: F_m(tau) = int_{t0}^{tau} F_{m-1}(s) u_{w_m}(s) ds.
    Independent of the production signature path.
    """
    t = sympy.Symbol("t", real=True)
    pieces = []
    start = Fraction(0)
    for duration, polys in control.pieces:
        pieces.append((start, start + duration, polys))
        start += duration
    comp_exprs = []
    for comp in range(control.rank):
        branches = []
        for lo, hi, polys in pieces:
            local = t - _sym(lo)
            expr = sum(_sym(c) * local**n for n, c in enumerate(polys[comp]))
            branches.append((expr, t <= _sym(hi)))
        branches.append((sympy.Integer(0), True))
        comp_exprs.append(sympy.Piecewise(*branches))
    tau = sympy.Symbol("tau", real=True, positive=True)
    F = sympy.Integer(1)
    for m, letter in enumerate(word):
        s = sympy.Symbol(f"s{m}", real=True)
        integrand = F.subs(tau, s) * comp_exprs[letter - 1].subs(t, s)
        F = sympy.integrate(integrand, (s, _sym(t0), tau))
    val = sympy.simplify(F.subs(tau, _sym(t1)))
    return Fraction(int(sympy.nsimplify(val).p), int(sympy.nsimplify(val).q))


def dynkin_bch_oracle(alg, x, y, max_total=None):
    """Dynkin-form BCH series, written independently of the production code."""
    step = alg.step if max_total is None else max_total
    total = alg.zero()
    letters = {0: x, 1: y}

    def right_nested(word):
        vec = letters[word[-1]]
        for ell in reversed(word[:-1]):
            vec = bracket(letters[ell], vec)
        return vec

    def all_blocks(m):
        if m == 0:
            yield ()
            return
        for p in range(m + 1):
            for q in range(m + 1 - p):
                if p + q == 0:
                    continue
                for rest in all_blocks(m - p - q):
                    yield ((p, q),) + rest

    for m in range(1, step + 1):
        for blocks in all_blocks(m):
            n = len(blocks)
            word = []
            denom = m * n
            for p, q in blocks:
                word += [0] * p + [1] * q
                denom *= factorial(p) * factorial(q)
            coef = Fraction((-1) ** (n - 1), denom)
            term = right_nested(word)
            if not term.is_zero():
                total = total + coef * term
    return total


def constant_ad_exponential(alg, direction, t):
    """exp(t ad X_v) as an exact matrix, direct nilpotent power sum."""
    n = alg.dim
    ad = [[Fraction(0)] * n for _ in range(n)]
    vec = alg.vector([Fraction(v) for v in direction] + [Fraction(0)] * (n - alg.rank))
    for j in range(n):
        col = bracket(vec, alg.basis_vector(j))
        for i, c in enumerate(col.coords):
            ad[i][j] = c
    out = [[Fraction(1) if i == j else Fraction(0) for j in range(n)] for i in range(n)]
    power = [row[:] for row in out]
    for k in range(1, alg.step + 1):
        nxt = [[sum(power[i][m] * ad[m][j] for m in range(n)) for j in range(n)] for i in range(n)]
        power = nxt
        coef = Fraction(t) ** k / factorial(k)
        for i in range(n):
            for j in range(n):
                out[i][j] += coef * power[i][j]
    return out


def brute_span_rank(alg, matrices_at_times):
    """Rank of the span of A(t)e_i columns over sampled times, via sympy."""
    rows = []
    for mat in matrices_at_times:
        for i in range(alg.rank):
            rows.append([sympy.Rational(Fraction(mat[r][i])) for r in range(alg.dim)])
    return sympy.Matrix(rows).rank()


def random_words(rng, rank, max_len, count):
    out = []
    for _ in range(count):
        k = rng.randint(1, max_len)
        out.append(tuple(rng.randint(1, rank) for _ in range(k)))
    return out
