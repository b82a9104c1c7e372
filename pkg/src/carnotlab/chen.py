"""Flows on the group: truncated tensor signatures, group law, adjoint flow.

The signature of a piecewise-polynomial control is computed by exact iterated
integration, level by level; its logarithm gives exponential coordinates of
the first kind.  The adjoint flow A(t) transports first-layer directions and
is the engine behind the differential-image computation:

    A'(t) = A(t) ad X_{u(t)},  A(0) = Id,

solved piecewise by Picard iteration (finitely many steps since ad raises
the layer).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import factorial

from .algebra import (
    AlgebraError,
    DualCovector,
    GradedAlgebraSpec,
    LieVector,
    bracket,
    build_free_algebra,
)
from .controls import PolyControl
from .linalg import identity as mat_identity
from .linalg import mat_mul
from .poly import Poly, padd, peval, pint, pmul, pscale, ptrim


class FlowError(ValueError):
    """Invalid flow computation."""


# ---------------------------------------------------------------------------
# truncated tensor series


@dataclass(frozen=True)
class TensorSeries:
    """Coefficients per tensor word of length 0..step over letters 1..rank."""

    rank: int
    step: int
    levels: tuple  # levels[k] is a tuple of length rank**k

    @classmethod
    def identity(cls, rank: int, step: int, exact: bool = True) -> "TensorSeries":
        one = Fraction(1) if exact else 1.0
        zero = one * 0
        return cls(
            rank, step, tuple(((one,) if k == 0 else (zero,) * rank**k) for k in range(step + 1))
        )

    @classmethod
    def zero(cls, rank: int, step: int, exact: bool = True) -> "TensorSeries":
        zero = Fraction(0) if exact else 0.0
        return cls(rank, step, tuple((zero,) * rank**k for k in range(step + 1)))

    @property
    def is_exact(self) -> bool:
        return isinstance(self.levels[0][0], (Fraction, int))

    def coeff(self, word: tuple[int, ...]):
        k = len(word)
        if k > self.step:
            raise FlowError(f"word {word} longer than truncation level {self.step}")
        idx = 0
        for letter in word:
            if not 1 <= letter <= self.rank:
                raise FlowError(f"letter {letter} out of range 1..{self.rank}")
            idx = idx * self.rank + (letter - 1)
        return self.levels[k][idx]

    def __add__(self, other: "TensorSeries") -> "TensorSeries":
        self._peer(other)
        return TensorSeries(
            self.rank,
            self.step,
            tuple(tuple(a + b for a, b in zip(la, lb)) for la, lb in zip(self.levels, other.levels)),
        )

    def __sub__(self, other: "TensorSeries") -> "TensorSeries":
        self._peer(other)
        return TensorSeries(
            self.rank,
            self.step,
            tuple(tuple(a - b for a, b in zip(la, lb)) for la, lb in zip(self.levels, other.levels)),
        )

    def scale(self, s) -> "TensorSeries":
        return TensorSeries(
            self.rank, self.step, tuple(tuple(s * a for a in lv) for lv in self.levels)
        )

    def __matmul__(self, other: "TensorSeries") -> "TensorSeries":
        """Truncated tensor (concatenation) product."""
        self._peer(other)
        r = self.rank
        out = []
        for n in range(self.step + 1):
            level = [self.levels[0][0] * 0] * (r**n)
            for p in range(n + 1):
                q = n - p
                la, lb = self.levels[p], other.levels[q]
                shift = r**q
                for ia, ca in enumerate(la):
                    if ca == 0:
                        continue
                    base = ia * shift
                    for ib, cb in enumerate(lb):
                        if cb == 0:
                            continue
                        level[base + ib] = level[base + ib] + ca * cb
            out.append(tuple(level))
        return TensorSeries(self.rank, self.step, tuple(out))

    def _peer(self, other: "TensorSeries"):
        if (self.rank, self.step) != (other.rank, other.step):
            raise FlowError("tensor series shapes differ")


def tensor_log(s: TensorSeries) -> TensorSeries:
    """log(1 + x) with x = s - 1; requires empty-word coefficient 1."""
    if s.levels[0][0] != 1:
        raise FlowError(f"series is not group-like: empty-word coefficient {s.levels[0][0]}")
    one = s.levels[0][0]
    x = TensorSeries(s.rank, s.step, ((one * 0,),) + s.levels[1:])
    acc = TensorSeries.zero(s.rank, s.step, s.is_exact)
    power = TensorSeries.identity(s.rank, s.step, s.is_exact)
    for k in range(1, s.step + 1):
        power = power @ x
        coef = Fraction((-1) ** (k + 1), k) if s.is_exact else ((-1) ** (k + 1)) / k
        acc = acc + power.scale(coef)
    return acc


def tensor_exp(s: TensorSeries) -> TensorSeries:
    if s.levels[0][0] != 0:
        raise FlowError("exponent must have zero empty-word coefficient")
    acc = TensorSeries.identity(s.rank, s.step, s.is_exact)
    power = TensorSeries.identity(s.rank, s.step, s.is_exact)
    for k in range(1, s.step + 1):
        power = power @ s
        coef = Fraction(1, factorial(k)) if s.is_exact else 1.0 / factorial(k)
        acc = acc + power.scale(coef)
    return acc


# ---------------------------------------------------------------------------
# signatures of piecewise-polynomial controls


def _piece_signature(polys, duration, rank: int, step: int) -> TensorSeries:
    """Signature of one polynomial piece over [0, duration], exact."""
    exact = not isinstance(duration, float)
    one = Fraction(1) if exact else 1.0
    level_polys = [[(one,)]]
    for k in range(1, step + 1):
        prev = level_polys[k - 1]
        cur = []
        for q in prev:
            for j in range(rank):
                cur.append(pint(pmul(q, polys[j])))
        level_polys.append(cur)
    levels = [tuple(peval(p, duration) for p in lv) for lv in level_polys]
    return TensorSeries(rank, step, tuple(levels))


def chen_signature(u: PolyControl, t0, t1, step: int) -> TensorSeries:
    """Iterated-integral series of u over [t0, t1] (Chen: multiplicative in t)."""
    if not (0 <= t0 <= t1 <= u.duration):
        raise FlowError(f"window [{t0},{t1}] outside control domain [0,{u.duration}]")
    exact = u.is_exact and not isinstance(t0, float) and not isinstance(t1, float)
    if t0 == t1:
        return TensorSeries.identity(u.rank, step, exact)
    clipped = u.clip(t0, t1)
    series = TensorSeries.identity(u.rank, step, exact)
    for duration, polys in clipped.pieces:
        series = series @ _piece_signature(polys, duration, u.rank, step)
    return series


# ---------------------------------------------------------------------------
# conversions between tensor and Lie coordinates


def _free_expansions(alg: GradedAlgebraSpec):
    if "expansions" not in alg._cache:
        alg._cache["expansions"] = {
            w.text: alg.basis_tensor(k) for k, w in enumerate(alg.basis)
        }
    return alg._cache["expansions"]


def lie_to_tensor(vec: LieVector) -> TensorSeries:
    alg = vec.algebra
    if not alg.is_free:
        raise FlowError("tensor embedding requires a free algebra")
    exact = vec.is_exact
    zero = Fraction(0) if exact else 0.0
    levels = [[zero] * alg.rank**k for k in range(alg.step + 1)]
    for k, c in enumerate(vec.coords):
        if c == 0:
            continue
        for word, cw in alg.basis_tensor(k).items():
            idx = 0
            for letter in word:
                idx = idx * alg.rank + (letter - 1)
            levels[len(word)][idx] += c * (cw if exact else float(cw))
    return TensorSeries(alg.rank, alg.step, tuple(tuple(lv) for lv in levels))


def tensor_to_lie(series: TensorSeries, alg: GradedAlgebraSpec) -> LieVector:
    """Exponential coordinates of a group-like series (log, then Lyndon peeling)."""
    if not alg.is_free:
        raise FlowError("direct tensor coordinates require a free algebra")
    if (series.rank, series.step) != (alg.rank, alg.step):
        raise FlowError("series shape does not match the algebra")
    logs = tensor_log(series)
    exact = logs.is_exact
    coords = [Fraction(0) if exact else 0.0] * alg.dim
    lookup = alg._cache.setdefault(
        "foliage_index", {w.foliage: k for k, w in enumerate(alg.basis)}
    )
    # float mode leaves roundoff non-Lie residues ~ eps * scale^level; exact
    # mode tolerates nothing
    base = max([1.0] + [abs(float(c)) for c in series.levels[1]]) if not exact else 1.0
    for level in range(1, alg.step + 1):
        residue = {}
        for idx, c in enumerate(logs.levels[level]):
            if c != 0:
                word = []
                rem = idx
                for _ in range(level):
                    word.append(rem % alg.rank + 1)
                    rem //= alg.rank
                residue[tuple(reversed(word))] = c
        tol = 0 if exact else 1e-9 * base**level
        while residue:
            wmin = min(residue)
            c = residue.pop(wmin)
            if c == 0 or (not exact and abs(c) <= tol):
                continue
            k = lookup.get(wmin)
            if k is None:
                raise FlowError(f"series is not group-like (non-Lyndon leading word {wmin})")
            coords[k] += c
            for word, cw in alg.basis_tensor(k).items():
                if word == wmin:
                    continue
                cc = c * (cw if exact else float(cw))
                residue[word] = residue.get(word, c * 0) - cc
                if residue[word] == 0:
                    del residue[word]
    return LieVector(alg, tuple(coords))


# ---------------------------------------------------------------------------
# group elements


@dataclass(frozen=True)
class GroupElement:
    """Point of the group in exponential coordinates of the first kind."""

    vec: LieVector

    @property
    def algebra(self) -> GradedAlgebraSpec:
        return self.vec.algebra

    @property
    def coords(self):
        return self.vec.coords

    def is_identity(self) -> bool:
        return self.vec.is_zero()

    def inverse(self) -> "GroupElement":
        return GroupElement(-self.vec)

    def __mul__(self, other: "GroupElement") -> "GroupElement":
        return group_product(self, other)


def identity_element(alg: GradedAlgebraSpec) -> GroupElement:
    return GroupElement(alg.zero())


def _free_companion(alg: GradedAlgebraSpec) -> GradedAlgebraSpec:
    if alg.is_free:
        return alg
    if "free_companion" not in alg._cache:
        free = build_free_algebra(alg.rank, alg.step)
        projection = [alg.tree_vector(w.tree).coords for w in free.basis]
        alg._cache["free_companion"] = (free, projection)
    return alg._cache["free_companion"][0]


def _project_from_free(alg: GradedAlgebraSpec, free_vec: LieVector) -> LieVector:
    _free_companion(alg)
    _, projection = alg._cache["free_companion"]
    exact = free_vec.is_exact
    coords = [Fraction(0) if exact else 0.0] * alg.dim
    for c, row in zip(free_vec.coords, projection):
        if c == 0:
            continue
        for k, p in enumerate(row):
            if p != 0:
                coords[k] += c * (p if exact else float(p))
    return LieVector(alg, tuple(coords))


def dynkin_bch(a: LieVector, b: LieVector) -> LieVector:
    """Baker-Campbell-Hausdorff series in Dynkin form, exact in nilpotent algebras."""
    a._check_peer(b)
    alg = a.algebra
    total = alg.zero() if a.is_exact else alg.zero().to_float()

    def nested(word):
        # right-nested bracketing [w1,[w2,[...,wm]]] of a/b letters
        vec = a if word[-1] == 0 else b
        for letter in reversed(word[:-1]):
            vec = bracket(a if letter == 0 else b, vec)
        return vec

    def compositions(m_left, blocks):
        # sequences of (p_i, q_i) with p_i + q_i > 0, total length m_left
        if m_left == 0:
            yield blocks
            return
        for p in range(m_left + 1):
            for q in range(m_left - p + 1):
                if p + q == 0:
                    continue
                yield from compositions(m_left - p - q, blocks + ((p, q),))

    for m in range(1, alg.step + 1):
        for blocks in compositions(m, ()):
            n = len(blocks)
            word = []
            for p, q in blocks:
                word.extend([0] * p)
                word.extend([1] * q)
            denom = m
            for p, q in blocks:
                denom *= factorial(p) * factorial(q)
            coef = Fraction((-1) ** (n - 1), n * denom)
            if not a.is_exact:
                coef = float(coef)
            term = nested(word)
            if not term.is_zero():
                total = total + coef * term
    return total


def group_product(g: GroupElement, h: GroupElement) -> GroupElement:
    if g.algebra is not h.algebra:
        raise AlgebraError("group elements belong to different algebras")
    alg = g.algebra
    if alg.is_free:
        series = tensor_exp(lie_to_tensor(g.vec)) @ tensor_exp(lie_to_tensor(h.vec))
        return GroupElement(tensor_to_lie(series, alg))
    return GroupElement(dynkin_bch(g.vec, h.vec))


def log_to_group(series: TensorSeries, alg: GradedAlgebraSpec) -> GroupElement:
    if alg.is_free:
        return GroupElement(tensor_to_lie(series, alg))
    free = _free_companion(alg)
    free_vec = tensor_to_lie(series, free)
    return GroupElement(_project_from_free(alg, free_vec))


def endpoint(u: PolyControl, alg: GradedAlgebraSpec, t=None) -> GroupElement:
    """Point reached at time t (default: full duration) by the curve driven by u."""
    if u.rank != alg.rank:
        raise FlowError(f"control has {u.rank} components, algebra rank {alg.rank}")
    t1 = u.duration if t is None else t
    series = chen_signature(u, t1 * 0, t1, alg.step)
    return log_to_group(series, alg)


# ---------------------------------------------------------------------------
# adjoint flow


def ad_matrices(alg: GradedAlgebraSpec):
    """Matrices of ad(X_i) for generators i = 1..rank, acting on basis columns."""
    if "ad" not in alg._cache:
        n = alg.dim
        mats = []
        for i in range(alg.rank):
            m = [[Fraction(0)] * n for _ in range(n)]
            for j in range(n):
                for k, c in alg.bracket_indices(i, j).items():
                    m[k][j] = c
            mats.append(m)
        alg._cache["ad"] = mats
    return alg._cache["ad"]


def _poly_mat_mul(a, b):
    n = len(a)
    cols = len(b[0])
    out = [[() for _ in range(cols)] for _ in range(n)]
    for i in range(n):
        ai = a[i]
        for k in range(len(b)):
            p = ai[k]
            if not p:
                continue
            bk = b[k]
            for j in range(cols):
                if bk[j]:
                    out[i][j] = padd(out[i][j], pmul(p, bk[j]))
    return out


def _poly_mat_int(a):
    return [[pint(p) for p in row] for row in a]


def _poly_mat_eval(a, t):
    return [[peval(p, t) for p in row] for row in a]


def piece_ad_field(alg: GradedAlgebraSpec, polys, exact: bool):
    """Polynomial matrix B(tau) = sum_i u_i(tau) ad(X_i) for one piece."""
    n = alg.dim
    ads = ad_matrices(alg)
    B = [[() for _ in range(n)] for _ in range(n)]
    for i in range(alg.rank):
        p = polys[i]
        if not p:
            continue
        pp = p if exact else tuple(float(c) for c in p)
        for r in range(n):
            for c in range(n):
                coef = ads[i][r][c]
                if coef != 0:
                    B[r][c] = padd(B[r][c], pscale(pp, coef if exact else float(coef)))
    return B


def piece_transitions(u: PolyControl, alg: GradedAlgebraSpec):
    """Per-piece transition matrices Phi_p(tau) with A(t) = A(start) Phi_p(tau).

    Entries are polynomials in local time; Picard iteration terminates because
    ad raises the layer.
    """
    key = ("transitions", u)
    if key in alg._cache:
        return alg._cache[key]
    n = alg.dim
    exact = u.is_exact
    one = Fraction(1) if exact else 1.0
    eye = [[(one,) if i == j else () for j in range(n)] for i in range(n)]
    out = []
    for duration, polys in u.pieces:
        B = piece_ad_field(alg, polys, exact)
        phi = eye
        for _ in range(alg.step - 1):
            phi = [
                [padd(eye[i][j], p) for j, p in enumerate(row)]
                for i, row in enumerate(_poly_mat_int(_poly_mat_mul(phi, B)))
            ]
        out.append((duration, phi))
    alg._cache[key] = out
    return out


def adjoint_flow(u: PolyControl, t, alg: GradedAlgebraSpec):
    """Exact matrix of A(t) on basis coordinates (columns transform vectors)."""
    if not (0 <= t <= u.duration):
        raise FlowError(f"time {t} outside control domain [0,{u.duration}]")
    transitions = piece_transitions(u, alg)
    exact = u.is_exact
    acc = mat_identity(alg.dim, Fraction(1) if exact else 1.0)
    local = t
    for duration, phi in transitions:
        if local <= duration:
            return mat_mul(acc, _poly_mat_eval(phi, local))
        acc = mat_mul(acc, _poly_mat_eval(phi, duration))
        local = local - duration
    return acc


def apply_matrix(alg: GradedAlgebraSpec, m, vec: LieVector) -> LieVector:
    coords = tuple(
        sum(m[i][j] * vec.coords[j] for j in range(alg.dim)) for i in range(alg.dim)
    )
    return LieVector(alg, coords)


def transport_covector(lam: DualCovector, u: PolyControl):
    """Per-piece polynomial rows of mu(t) = lam . A(t) (cheap covector path).

    Returns a list of (duration, rows) where rows[j] is the polynomial in local
    time of mu(t)_j.  Solves rho' = rho B by Picard on the row directly.
    """
    alg = lam.algebra
    n = alg.dim
    exact = lam.is_exact and u.is_exact
    out = []
    row0 = [(c,) if c != 0 else () for c in lam.coords]
    for duration, polys in u.pieces:
        B = piece_ad_field(alg, polys, exact)
        rho = row0
        for _ in range(alg.step - 1):
            nxt = [() for _ in range(n)]
            for k in range(n):
                p = rho[k]
                if not p:
                    continue
                for j in range(n):
                    if B[k][j]:
                        nxt[j] = padd(nxt[j], pmul(p, B[k][j]))
            rho = [padd(row0[j], pint(nxt[j])) for j in range(n)]
        out.append((duration, rho))
        row0 = [(peval(p, duration),) if peval(p, duration) != 0 else () for p in rho]
    return out
