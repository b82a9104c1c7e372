"""Classification of covectors into dynamical-system strata.

For the three supported (rank, step) cases, a covector with vanishing
first-layer (and, in rank 2, second-layer) projection induces an affine
system  x' = M(lam) x + v(lam)  on R^rank whose trajectories support every
primitive annihilated by lam.  Covectors are stratified by the real Jordan
type of M; each stratum carries a normal form N with a conjugation
P^-1 M P = scale * N (the displayed normal forms are eigenvalue-normalized,
so a nonzero time-rescale factor is part of the data).

The Xi refinement is defined relative to the deterministic P built here;
whether Xi labels are independent of the choice of P is not settled by the
classification itself and is documented as such.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import linalg
from .algebra import AlgebraError, DualCovector, GradedAlgebraSpec

CASES = ("r2s3", "r2s4", "r3s3")


class StrataError(ValueError):
    pass


@dataclass(frozen=True)
class CaseTag:
    """One of the supported (rank, step) classification cases, over an algebra."""

    name: str
    algebra: GradedAlgebraSpec

    def __post_init__(self):
        if self.name not in CASES:
            raise StrataError(f"unknown case {self.name!r}; expected one of {CASES}")
        want = {"r2s3": (2, 3), "r2s4": (2, 4), "r3s3": (3, 3)}[self.name]
        have = (self.algebra.rank, self.algebra.step)
        if want != have:
            raise StrataError(f"case {self.name} needs rank/step {want}, algebra has {have}")

    @property
    def is_free(self) -> bool:
        return self.algebra.is_free


# entry words of M and v per case (row-major); v entries follow the same pairing map
_M_WORDS = {
    "r2s4": [["2112", "2212"], ["1112", "2112"]],
    "r3s3": [["123", "223", "323"], ["131", "231", "331"], ["112", "212", "312"]],
}
_M_SIGNS = {
    "r2s4": [[1, 1], [-1, -1]],
    "r3s3": [[1, 1, 1], [1, 1, 1], [1, 1, 1]],
}
_V_WORDS = {
    "r2s3": ["212", "112"],
    "r2s4": ["212", "112"],
    "r3s3": ["23", "31", "12"],
}
_V_SIGNS = {"r2s3": [1, -1], "r2s4": [1, -1], "r3s3": [1, 1, 1]}


@dataclass(frozen=True)
class AffineSystem:
    """x' = M x + v read off a covector."""

    case: CaseTag
    covector: DualCovector
    M: tuple
    v: tuple

    @property
    def is_exact(self) -> bool:
        return self.covector.is_exact

    @property
    def r(self) -> int:
        return len(self.v)


def system_of(lam: DualCovector, case: CaseTag) -> AffineSystem:
    """Read the affine system off the covector's bracket pairings."""
    alg = case.algebra
    if lam.algebra is not alg:
        raise StrataError("covector does not live on the case algebra")
    if not lam.layer_is_zero(1):
        raise StrataError(
            "covector must annihilate the first layer; zero its g1* coordinates"
        )
    if case.name in ("r2s3", "r2s4") and not lam.layer_is_zero(2):
        raise StrataError(
            "rank-2 covectors must also annihilate the second layer (Goh); "
            "zero the g2* coordinates"
        )
    r = alg.rank
    if case.name == "r2s3":
        zero = Fraction(0) if lam.is_exact else 0.0
        M = ((zero, zero), (zero, zero))
    else:
        words, signs = _M_WORDS[case.name], _M_SIGNS[case.name]
        M = tuple(
            tuple(signs[i][j] * lam.pair_word(words[i][j]) for j in range(r))
            for i in range(r)
        )
    vwords, vsigns = _V_WORDS[case.name], _V_SIGNS[case.name]
    v = tuple(vsigns[i] * lam.pair_word(vwords[i]) for i in range(r))
    return AffineSystem(case=case, covector=lam, M=M, v=v)


@dataclass(frozen=True)
class StratumLabel:
    case: str
    major: int | None
    minor: int | None
    minors: tuple = ()
    near_boundary: bool = False
    mode: str = "exact"

    def text(self) -> str:
        lam = "-" if self.major is None else f"Lambda{self.major}"
        xi = "" if self.minor is None else f"/Xi{self.minor}"
        return lam + xi


# ---------------------------------------------------------------------------
# major stratum decisions


def _det2(M):
    return M[0][0] * M[1][1] - M[0][1] * M[1][0]


def _char3(M):
    """(p, q) with char(t) = t^3 + p t + q for a trace-zero 3x3 matrix."""
    p = (
        M[0][0] * M[1][1]
        - M[0][1] * M[1][0]
        + M[0][0] * M[2][2]
        - M[0][2] * M[2][0]
        + M[1][1] * M[2][2]
        - M[1][2] * M[2][1]
    )
    det = (
        M[0][0] * (M[1][1] * M[2][2] - M[1][2] * M[2][1])
        - M[0][1] * (M[1][0] * M[2][2] - M[1][2] * M[2][0])
        + M[0][2] * (M[1][0] * M[2][1] - M[1][1] * M[2][0])
    )
    return p, -det


def _mat_rank(M, exact: bool, tol: float):
    if exact:
        return linalg.rank([list(row) for row in M])
    return linalg.float_rank([[float(x) for x in row] for row in M], tol)


def _shifted(M, a):
    n = len(M)
    return [[M[i][j] - (a if i == j else 0 * a) for j in range(n)] for i in range(n)]


def major_stratum(system: AffineSystem, tol: float = 1e-9) -> tuple[int | None, bool]:
    """Major Lambda index plus a near-boundary flag (float mode only)."""
    case = system.case.name
    M = system.M
    exact = system.is_exact
    near = False
    if case == "r2s3":
        return None, False
    if case == "r2s4":
        det = _det2(M)
        if not exact:
            scale = max(abs(float(x)) for row in M for x in row) or 1.0
            near = abs(float(det)) <= tol * scale * scale
        if det < 0:
            return 1, near
        if det > 0:
            return 2, near
        rk = _mat_rank(M, exact, tol)
        return (3 if rk == 1 else 4), near
    # r3s3
    p, q = _char3(M)
    disc = -4 * p**3 - 27 * q**2
    if not exact:
        scale = max(abs(float(x)) for row in M for x in row) or 1.0
        near = abs(float(q)) <= tol * scale**3 or abs(float(disc)) <= tol * scale**6
        zero_q = abs(float(q)) <= tol * scale**3
        zero_disc = abs(float(disc)) <= tol * scale**6
    else:
        zero_q = q == 0
        zero_disc = disc == 0
    if not zero_q:
        if not zero_disc and disc > 0:
            return 1, near
        if not zero_disc and disc < 0:
            return 3, near
        # double eigenvalue a = -3q/2p (p != 0 here)
        a = Fraction(-3) * q / (2 * p) if exact else -3.0 * float(q) / (2.0 * float(p))
        rk = _mat_rank(_shifted(M, a), exact, tol)
        return (2 if rk == 1 else 4), near
    rk = _mat_rank(M, exact, tol)
    if rk == 2:
        if exact:
            if p < 0:
                return 5, near
            if p > 0:
                return 6, near
            return 7, near
        scale = max(abs(float(x)) for row in M for x in row) or 1.0
        if float(p) < -tol * scale * scale:
            return 5, near
        if float(p) > tol * scale * scale:
            return 6, near
        return 7, near
    if rk == 1:
        return 8, near
    return 9, near


# ---------------------------------------------------------------------------
# normal forms


@dataclass(frozen=True)
class NormalizedSystem:
    """P^-1 M P = scale * N; z = P^-1 x evolves by dz/ds = N z + b, b = P^-1 v / scale."""

    system: AffineSystem
    label: StratumLabel
    N: tuple
    P: tuple
    Pinv: tuple
    b: tuple
    scale: object
    rotation: object = None  # parameter a of rotation-block strata
    eigen: tuple = ()        # stratum parameters (a, b) for diagonal strata
    mode: str = "exact"

    @property
    def case(self) -> CaseTag:
        return self.system.case

    @property
    def frame(self) -> tuple:
        """Columns of P map normalized velocities to first-layer coordinates."""
        return self.P

    def equilibria(self):
        return equilibrium_set(self)


def _unit_or_primitive(cols, exact: bool):
    """Normalize a column group jointly: primitive integers / unit first column."""
    flat = [x for col in cols for x in col]
    if exact:
        prim = linalg.primitive_integer_vector(list(flat))
        k = len(cols[0])
        return [prim[i * k : (i + 1) * k] for i in range(len(cols))]
    norm = float(np.sqrt(sum(float(x) ** 2 for x in cols[0]))) or 1.0
    sign = 1.0
    for x in cols[0]:
        if abs(float(x)) > 1e-14:
            sign = 1.0 if float(x) > 0 else -1.0
            break
    out = [[float(x) * sign / norm for x in col] for col in cols]
    return out


def _columns_to_matrix(cols):
    n = len(cols[0])
    return tuple(tuple(cols[j][i] for j in range(len(cols))) for i in range(n))


def _invert(P, exact: bool):
    n = len(P)
    if exact:
        aug = [list(P[i]) + [Fraction(1) if j == i else Fraction(0) for j in range(n)] for i in range(n)]
        red, pivots = linalg.rref(aug)
        if pivots != list(range(n)):
            raise StrataError("change-of-basis matrix is singular")
        return tuple(tuple(red[i][n:]) for i in range(n))
    arr = np.linalg.inv(np.array([[float(x) for x in row] for row in P]))
    return tuple(tuple(float(x) for x in row) for row in arr)


def _nullspace_cols(M, exact: bool, tol: float = 1e-9):
    if exact:
        return linalg.nullspace([list(row) for row in M])
    arr = np.array([[float(x) for x in row] for row in M], dtype=float)
    _, s, vt = np.linalg.svd(arr)
    cols = []
    scale = s[0] if s.size and s[0] > 0 else 1.0
    for k in range(len(vt)):
        sv = s[k] if k < s.size else 0.0
        if sv <= tol * scale:
            cols.append([float(x) for x in vt[k]])
    return cols


def _mat_sub(A, B):
    return [[a - b for a, b in zip(ra, rb)] for ra, rb in zip(A, B)]


def _mat_mul_plain(A, B):
    n, m, k = len(A), len(B[0]), len(B)
    return [[sum(A[i][t] * B[t][j] for t in range(k)) for j in range(m)] for i in range(n)]


def _first_nonzero_sign_fix(cols, exact):
    """Flip the whole group so the first nonzero entry (col-major) is positive."""
    for col in cols:
        for x in col:
            if x != 0 and (exact or abs(float(x)) > 1e-14):
                if (x < 0) if exact else (float(x) < 0):
                    return [[-y for y in c] for c in cols]
                return [list(c) for c in cols]
    return [list(c) for c in cols]


def normalize(system: AffineSystem, tol: float = 1e-9) -> NormalizedSystem:
    """Normal form per stratum; exact whenever the eigendata is rational."""
    case = system.case.name
    major, near = major_stratum(system, tol)
    exact = system.is_exact
    if case == "r2s3":
        return _finish(system, None, near, N=_zmat(2, exact), cols=_eye_cols(2, exact), scale=_one(exact), exact=exact)
    if case == "r2s4":
        return _normalize_r2s4(system, major, near, tol)
    return _normalize_r3s3(system, major, near, tol)


def _one(exact):
    return Fraction(1) if exact else 1.0


def _zmat(n, exact):
    z = Fraction(0) if exact else 0.0
    return tuple(tuple(z for _ in range(n)) for _ in range(n))


def _eye_cols(n, exact):
    one, zero = _one(exact), Fraction(0) if exact else 0.0
    return [[one if i == j else zero for i in range(n)] for j in range(n)]


def _to_float_system(system: AffineSystem) -> AffineSystem:
    return AffineSystem(
        case=system.case,
        covector=system.covector.to_float(),
        M=tuple(tuple(float(x) for x in row) for row in system.M),
        v=tuple(float(x) for x in system.v),
    )


def _finish(system, major, near, N, cols, scale, exact, rotation=None, eigen=(), minors_from_b=True):
    P = _columns_to_matrix(cols)
    Pinv = _invert(P, exact)
    r = system.r
    binv = [sum(Pinv[i][j] * system.v[j] for j in range(r)) for i in range(r)]
    b = tuple(x / scale for x in binv)
    minor, minors = _xi_refinement(system.case.name, major, b, exact)
    label = StratumLabel(
        case=system.case.name,
        major=major,
        minor=minor,
        minors=minors,
        near_boundary=near,
        mode="exact" if exact else "float",
    )
    return NormalizedSystem(
        system=system,
        label=label,
        N=N,
        P=P,
        Pinv=Pinv,
        b=b,
        scale=scale,
        rotation=rotation,
        eigen=tuple(eigen),
        mode="exact" if exact else "float",
    )


def _is_zero(x, exact, tol=1e-9):
    return x == 0 if exact else abs(float(x)) <= tol


def _xi_refinement(case, major, b, exact, tol=1e-9):
    """All matching Xi indices (paper's per-stratum displays); lowest is canonical."""
    z = [_is_zero(x, exact, tol) for x in b]
    preds = None
    if case == "r2s4":
        if major == 1:
            preds = {1: (not z[0]) and (not z[1]), 2: z[0], 3: z[1]}
        elif major == 2:
            preds = {4: z[0] and z[1], 5: not z[0], 6: not z[1]}
        elif major == 3:
            preds = {7: not z[1], 8: z[1] and not z[0], 9: z[1] and z[0]}
    elif case == "r3s3":
        if major == 1:
            preds = {1: (not (z[0] and z[1])) and not z[2], 2: z[2], 3: z[0] and z[1]}
        elif major == 3:
            preds = {4: (not (z[0] and z[1])) and not z[2], 5: z[0] and z[1], 6: z[2]}
        elif major == 5:
            preds = {7: not z[2], 8: z[2] and not z[0] and not z[1], 9: z[2] and z[0], 10: z[2] and z[1]}
        elif major == 6:
            preds = {11: not z[2], 12: not z[0] and z[2], 13: not z[1] and z[2], 14: z[0] and z[1] and z[2]}
        elif major == 7:
            preds = {15: not z[2], 16: z[2] and not z[0], 17: z[2] and not z[1], 18: z[0] and z[1] and z[2]}
        elif major == 8:
            preds = {19: not z[1], 20: not z[2], 21: z[1] and z[2] and not z[0], 22: z[0] and z[1] and z[2]}
    if preds is None:
        return None, ()
    minors = tuple(sorted(k for k, hit in preds.items() if hit))
    return (minors[0] if minors else None), minors


def _normalize_r2s4(system, major, near, tol):
    exact = system.is_exact
    M = system.M
    one = _one(exact)
    if major == 4:
        return _finish(system, major, near, _zmat(2, exact), _eye_cols(2, exact), one, exact)
    if major == 3:
        # nilpotent rank one: P = [Mw | w] with Mw != 0
        for w in _eye_cols(2, exact):
            Mw = [M[0][0] * w[0] + M[0][1] * w[1], M[1][0] * w[0] + M[1][1] * w[1]]
            if any(x != 0 for x in Mw) if exact else any(abs(float(x)) > tol for x in Mw):
                break
        cols = _first_nonzero_sign_fix(_unit_or_primitive([Mw, w], exact), exact)
        N = ((0 * one, one), (0 * one, 0 * one))
        return _finish(system, major, near, N, cols, one, exact)
    det = _det2(M)
    if major == 1:
        c2 = -det
        c = linalg.is_square_fraction(c2) if exact else float(np.sqrt(float(c2)))
        if exact and c is None:
            return _normalize_r2s4(_to_float_system(system), major, near, tol)
        cols = []
        for ev in (c, -c):
            ker = _nullspace_cols(_shifted(M, ev), exact, tol)
            if not ker:
                raise StrataError("eigenvector extraction failed in stratum 1")
            cols.append(_first_nonzero_sign_fix(_unit_or_primitive([ker[0]], exact), exact)[0])
        N = ((one, 0 * one), (0 * one, -one))
        return _finish(system, major, near, N, cols, c, exact, eigen=(c, -c))
    # major == 2: rotation block, omega = sqrt(det) > 0
    w2 = det
    w = linalg.is_square_fraction(w2) if exact else float(np.sqrt(float(w2)))
    if exact and w is None:
        return _normalize_r2s4(_to_float_system(system), major, near, tol)
    x = [one, 0 * one]
    Mx = [M[0][0], M[1][0]]
    y = [-Mx[0] / w, -Mx[1] / w]
    cols = _first_nonzero_sign_fix(_unit_or_primitive([y, x], exact), exact)
    N = ((0 * one, -one), (one, 0 * one))
    return _finish(system, major, near, N, cols, w, exact)


def _normalize_r3s3(system, major, near, tol):
    exact = system.is_exact
    M = system.M
    one = _one(exact)
    zero = 0 * one
    p, q = _char3(M)
    if major == 9:
        return _finish(system, major, near, _zmat(3, exact), _eye_cols(3, exact), one, exact)
    if major == 8:
        # rank one, M^2 = 0: P = [Mw | w | k]
        for w in _eye_cols(3, exact):
            Mw = [sum(M[i][j] * w[j] for j in range(3)) for i in range(3)]
            if (any(x != 0 for x in Mw)) if exact else any(abs(float(x)) > tol for x in Mw):
                break
        kers = _nullspace_cols(M, exact, tol)
        # pick the kernel vector most independent from Mw
        pick = None
        for k in kers:
            test = [list(x) for x in ([Mw, k])]
            rk = linalg.rank(test) if exact else linalg.float_rank(test, tol)
            if rk == 2:
                pick = k
                break
        if pick is None:
            raise StrataError("kernel completion failed in stratum 8")
        chain = _first_nonzero_sign_fix(_unit_or_primitive([Mw, w], exact), exact)
        kcol = _first_nonzero_sign_fix(_unit_or_primitive([pick], exact), exact)[0]
        N = ((zero, one, zero), (zero, zero, zero), (zero, zero, zero))
        return _finish(system, major, near, N, [chain[0], chain[1], kcol], one, exact)
    if major == 7:
        # nilpotent with M^2 != 0: P = [M^2 w | M w | w]
        M2 = _mat_mul_plain([list(r) for r in M], [list(r) for r in M])
        for w in _eye_cols(3, exact):
            M2w = [sum(M2[i][j] * w[j] for j in range(3)) for i in range(3)]
            if (any(x != 0 for x in M2w)) if exact else any(abs(float(x)) > tol for x in M2w):
                break
        Mw = [sum(M[i][j] * w[j] for j in range(3)) for i in range(3)]
        cols = _first_nonzero_sign_fix(_unit_or_primitive([M2w, Mw, w], exact), exact)
        N = ((zero, one, zero), (zero, zero, one), (zero, zero, zero))
        return _finish(system, major, near, N, cols, one, exact)
    if major in (5, 6):
        # eigenvalues 0, +-c (real for 5, imaginary for 6)
        target = -p if major == 5 else p
        c = linalg.is_square_fraction(target) if exact else float(np.sqrt(abs(float(target))))
        if exact and c is None:
            return _normalize_r3s3(_to_float_system(system), major, near, tol)
        ker0 = _nullspace_cols(M, exact, tol)
        if not ker0:
            raise StrataError("kernel extraction failed")
        k0 = _first_nonzero_sign_fix(_unit_or_primitive([ker0[0]], exact), exact)[0]
        if major == 5:
            cols = []
            for ev in (c, -c):
                ker = _nullspace_cols(_shifted(M, ev), exact, tol)
                if not ker:
                    raise StrataError("eigenvector extraction failed in stratum 5")
                cols.append(_first_nonzero_sign_fix(_unit_or_primitive([ker[0]], exact), exact)[0])
            cols.append(k0)
            N = ((one, zero, zero), (zero, -one, zero), (zero, zero, zero))
            return _finish(system, major, near, N, cols, c, exact, eigen=(c, -c))
        # major 6: invariant plane of M^2 + c^2
        M2 = _mat_mul_plain([list(r) for r in M], [list(r) for r in M])
        K = [[M2[i][j] + (c * c if i == j else zero) for j in range(3)] for i in range(3)]
        plane = _nullspace_cols(K, exact, tol)
        x = None
        for cand in plane:
            if (any(v != 0 for v in cand)) if exact else any(abs(float(v)) > tol for v in cand):
                x = cand
                break
        if x is None:
            raise StrataError("invariant plane extraction failed in stratum 6")
        Mx = [sum(M[i][j] * x[j] for j in range(3)) for i in range(3)]
        y = [-v / c for v in Mx]
        pair = _first_nonzero_sign_fix(_unit_or_primitive([y, x], exact), exact)
        N = ((zero, -one, zero), (one, zero, zero), (zero, zero, zero))
        return _finish(system, major, near, N, [pair[0], pair[1], k0], c, exact)
    if major in (2, 4):
        a = (Fraction(-3) * q / (2 * p)) if exact else (-3.0 * float(q) / (2.0 * float(p)))
        ker_m2a = _nullspace_cols(_shifted(M, -2 * a), exact, tol)
        if not ker_m2a:
            raise StrataError("eigenvector extraction failed (double eigenvalue)")
        v3 = _first_nonzero_sign_fix(_unit_or_primitive([ker_m2a[0]], exact), exact)[0]
        if major == 2:
            eig = _nullspace_cols(_shifted(M, a), exact, tol)
            if len(eig) < 2:
                raise StrataError("stratum 2 expects a two-dimensional eigenspace")
            c1 = _first_nonzero_sign_fix(_unit_or_primitive([eig[0]], exact), exact)[0]
            c2 = _first_nonzero_sign_fix(_unit_or_primitive([eig[1]], exact), exact)[0]
            # the paper treats this as the diagonal case with equal parameters
            N = ((a, zero, zero), (zero, a, zero), (zero, zero, -2 * a))
            return _finish(system, major, near, N, [c1, c2, v3], one, exact, eigen=(a, a))
        # major 4: Jordan 2-block: (M - a) v != 0, (M - a)^2 v = 0
        Sh = _shifted(M, a)
        Sh2 = _mat_mul_plain(Sh, Sh)
        gen = _nullspace_cols(Sh2, exact, tol)
        v2 = None
        for cand in gen:
            img = [sum(Sh[i][j] * cand[j] for j in range(3)) for i in range(3)]
            if (any(x != 0 for x in img)) if exact else any(abs(float(x)) > tol for x in img):
                v2 = cand
                break
        if v2 is None:
            raise StrataError("generalized eigenvector extraction failed in stratum 4")
        p1 = [sum(Sh[i][j] * v2[j] for j in range(3)) / a for i in range(3)]
        chain = _first_nonzero_sign_fix(_unit_or_primitive([p1, v2], exact), exact)
        N = ((one, one, zero), (zero, one, zero), (zero, zero, -2 * one))
        return _finish(system, major, near, N, [chain[0], chain[1], v3], a, exact)
    if major == 1:
        roots = linalg.rational_roots_cubic(p, q) if exact else None
        if exact and (roots is None or len(roots) != 3):
            return _normalize_r3s3(_to_float_system(system), major, near, tol)
        if not exact:
            rr = np.roots([1.0, 0.0, float(p), float(q)])
            roots = sorted(float(np.real(r)) for r in rr)
        pos = [r for r in roots if r > 0]
        aa, bb = (pos[1], pos[0]) if len(pos) == 2 else (
            (min(r for r in roots if r < 0), max(r for r in roots if r < 0))
        )
        # aa, bb share their sign with |aa| > |bb|; third eigenvalue is -(aa+bb)
        cols = []
        for ev in (aa, bb, -(aa + bb)):
            ker = _nullspace_cols(_shifted(M, ev), exact, tol)
            if not ker:
                raise StrataError("eigenvector extraction failed in stratum 1")
            cols.append(_first_nonzero_sign_fix(_unit_or_primitive([ker[0]], exact), exact)[0])
        N = ((aa, zero, zero), (zero, bb, zero), (zero, zero, -(aa + bb)))
        return _finish(system, major, near, N, cols, one, exact, eigen=(aa, bb))
    # major == 3: complex pair sigma +- i omega plus real -2 sigma
    roots = linalg.rational_roots_cubic(p, q) if exact else None
    if exact and not roots:
        return _normalize_r3s3(_to_float_system(system), major, near, tol)
    if exact:
        rho = roots[0]
        sigma = -rho / 2
        w2 = -q / rho - rho * rho / 4
        omega = linalg.is_square_fraction(w2)
        if omega is None or sigma == 0:
            return _normalize_r3s3(_to_float_system(system), major, near, tol)
    else:
        rr = np.roots([1.0, 0.0, float(p), float(q)])
        rho = float(np.real(min(rr, key=lambda z: abs(np.imag(z)))))
        sigma = -rho / 2.0
        pair = [z for z in rr if abs(np.imag(z)) > tol * max(1.0, abs(z))]
        omega = abs(float(np.imag(pair[0]))) if pair else 0.0
        if omega == 0.0 or sigma == 0.0:
            raise StrataError("complex-pair extraction failed in stratum 3")
    vrho = _nullspace_cols(_shifted(M, rho), exact, tol)
    if not vrho:
        raise StrataError("real eigenvector extraction failed in stratum 3")
    v3 = _first_nonzero_sign_fix(_unit_or_primitive([vrho[0]], exact), exact)[0]
    Sh = _shifted(M, sigma)
    K = _mat_mul_plain(Sh, Sh)
    K = [[K[i][j] + (omega * omega if i == j else 0 * omega) for j in range(3)] for i in range(3)]
    plane = _nullspace_cols(K, exact, tol)
    x = None
    for cand in plane:
        if (any(v != 0 for v in cand)) if exact else any(abs(float(v)) > tol * 10 for v in cand):
            x = cand
            break
    if x is None:
        raise StrataError("invariant plane extraction failed in stratum 3")
    Mx = [sum(M[i][j] * x[j] for j in range(3)) for i in range(3)]
    y = [-(Mx[i] - sigma * x[i]) / omega for i in range(3)]
    pair_cols = _first_nonzero_sign_fix(_unit_or_primitive([y, x], exact), exact)
    a_par = omega / sigma
    one = _one(exact)
    zero = 0 * one
    N = ((one, -a_par, zero), (a_par, one, zero), (zero, zero, -2 * one))
    return _finish(
        system, major, near, N, [pair_cols[0], pair_cols[1], v3], sigma, exact, rotation=a_par
    )


def classify(lam: DualCovector, case: CaseTag, tol: float = 1e-9) -> StratumLabel:
    """Full stratum label (major + Xi refinement via the deterministic normal form)."""
    return normalize(system_of(lam, case), tol).label


# ---------------------------------------------------------------------------
# equilibria


@dataclass(frozen=True)
class EquilibriumSet:
    """Affine set {base + span(directions)} of rest points, or empty."""

    kind: str  # "none" | "point" | "line" | "plane"
    base: tuple = ()
    directions: tuple = ()

    def contains(self, z, exact=True, tol=1e-9) -> bool:
        if self.kind == "none":
            return False
        diff = [zi - bi for zi, bi in zip(z, self.base)]
        if not self.directions:
            return all(_is_zero(d, exact, tol) for d in diff)
        rows = [list(d) for d in self.directions] + [diff]
        if exact:
            return linalg.rank([list(d) for d in self.directions]) == linalg.rank(rows)
        return linalg.float_rank([list(map(float, d)) for d in self.directions], tol) == linalg.float_rank(
            [[float(x) for x in r] for r in rows], tol
        )


def equilibrium_set(ns: NormalizedSystem) -> EquilibriumSet:
    """Solve N z + b = 0 in normalized coordinates."""
    exact = ns.mode == "exact"
    N = [list(row) for row in ns.N]
    b = list(ns.b)
    if exact:
        sol = linalg.solve(N, [-x for x in b])
        if sol is None:
            return EquilibriumSet(kind="none")
        dirs = linalg.nullspace(N)
    else:
        arr = np.array([[float(x) for x in row] for row in N])
        rhs = -np.array([float(x) for x in b])
        sol_l, res, rk, sv = np.linalg.lstsq(arr, rhs, rcond=None)
        if not np.allclose(arr @ sol_l, rhs, atol=1e-8):
            return EquilibriumSet(kind="none")
        sol = [float(x) for x in sol_l]
        dirs = _nullspace_cols(N, False)
    kind = {0: "point", 1: "line", 2: "plane"}.get(len(dirs), "space")
    return EquilibriumSet(kind=kind, base=tuple(sol), directions=tuple(tuple(d) for d in dirs))


# ---------------------------------------------------------------------------
# rebuilding covectors from target systems (fixture construction, CLI demos)


def covector_from_system(case: CaseTag, M, v) -> DualCovector:
    """Exact covector with the prescribed affine system; inverse of system_of."""
    alg = case.algebra
    r = alg.rank
    rows = []
    rhs = []
    if case.name != "r2s3":
        words, signs = _M_WORDS[case.name], _M_SIGNS[case.name]
        for i in range(r):
            for j in range(r):
                rows.append([x for x in alg.word_vector(words[i][j]).coords])
                rhs.append(Fraction(M[i][j]) * signs[i][j])
    vwords, vsigns = _V_WORDS[case.name], _V_SIGNS[case.name]
    for i in range(r):
        rows.append([x for x in alg.word_vector(vwords[i]).coords])
        rhs.append(Fraction(v[i]) * vsigns[i])
    # transpose: unknowns are dual coordinates; pairing row = expansion coords
    n = alg.dim
    mat = [[rows[e][k] for k in range(n)] for e in range(len(rows))]
    # restrict support to the admissible layers
    lo1, hi1 = alg.layer_slice(1)
    banned = set(range(lo1, hi1))
    if case.name in ("r2s3", "r2s4"):
        lo2, hi2 = alg.layer_slice(2)
        banned |= set(range(lo2, hi2))
    for k in sorted(banned):
        for row in mat:
            row[k] = Fraction(0)
    sol = linalg.solve(mat, rhs)
    if sol is None:
        raise StrataError("no covector on this algebra realizes the requested system")
    coords = [Fraction(0) if k in banned else sol[k] for k in range(n)]
    lam = alg.dual_covector(coords)
    # paranoia: confirm the round trip
    sys2 = system_of(lam, case)
    if tuple(tuple(row) for row in sys2.M) != tuple(tuple(Fraction(x) for x in row) for row in M):
        raise StrataError("covector reconstruction failed to reproduce M")
    return lam
