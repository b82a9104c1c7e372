"""Decide and certify singularity of a control.

The image of the endpoint differential is spanned by the adjoint transports
A(t)Y of first-layer directions; per polynomial piece those transports are
polynomial in local time, so collecting coefficient vectors makes the span
over continuous t exact.  A covector annihilates the image iff its transport
kills the first layer for all t, which reduces to per-piece polynomial
identities (the moment-matrix kernel criterion).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import sqrt

from . import linalg
from .algebra import (
    AlgebraError,
    DualCovector,
    GradedAlgebraSpec,
    scalar_to_json,
)
from .chen import piece_transitions, transport_covector
from .controls import PolyControl
from .linalg import mat_mul
from .poly import padd, peval, pis_zero, pmul


class SingularityError(ValueError):
    pass


@dataclass(frozen=True)
class DifferentialImage:
    """Exact span of the endpoint-differential image for one control."""

    algebra: GradedAlgebraSpec
    control: PolyControl
    basis_rows: tuple      # RREF basis of the span
    rank: int
    generator_count: int   # raw coefficient vectors collected (saturation certificate)
    mode: str

    @property
    def codim(self) -> int:
        return self.algebra.dim - self.rank

    def contains(self, vec_coords) -> bool:
        return linalg.in_row_span([list(r) for r in self.basis_rows], list(vec_coords))


def image_of_differential(u: PolyControl, alg: GradedAlgebraSpec) -> DifferentialImage:
    """Span over t and first-layer Y of the transported directions A(t)Y."""
    if u.rank != alg.rank:
        raise SingularityError(f"control rank {u.rank} != algebra rank {alg.rank}")
    if not u.is_exact:
        raise SingularityError("exact image computation needs rational control data")
    n = alg.dim
    transitions = piece_transitions(u, alg)
    rows = []
    acc = linalg.identity(n)
    for duration, phi in transitions:
        # columns A(start)*Phi(tau)*e_Y, Y in layer one; collect tau-coefficients
        for ycol in range(alg.rank):
            col_polys = []
            for i in range(n):
                p = ()
                for k in range(n):
                    if phi[k][ycol]:
                        p = padd(p, tuple(acc[i][k] * c for c in phi[k][ycol]))
                col_polys.append(p)
            deg = max((len(p) for p in col_polys), default=0)
            for m in range(deg):
                vec = [p[m] if m < len(p) else Fraction(0) for p in col_polys]
                if any(x != 0 for x in vec):
                    rows.append(vec)
        acc = mat_mul(acc, [[peval(p, duration) for p in row] for row in phi])
    red, pivots = linalg.rref(rows)
    basis_rows = tuple(tuple(red[i]) for i in range(len(pivots)))
    return DifferentialImage(
        algebra=alg,
        control=u,
        basis_rows=basis_rows,
        rank=len(pivots),
        generator_count=len(rows),
        mode="exact",
    )


def annihilator(image: DifferentialImage) -> list[DualCovector]:
    """Exact basis of the orthogonal complement of the image, normalized."""
    alg = image.algebra
    rows = [list(r) for r in image.basis_rows]
    if not rows:
        rows = [[Fraction(0)] * alg.dim]
    kernel = linalg.nullspace(rows)
    out = []
    for vec in kernel:
        vec = linalg.primitive_integer_vector(vec)
        lam = DualCovector(alg, tuple(vec))
        if not lam.layer_is_zero(1):
            raise SingularityError("annihilator has a first-layer component; span lost g1")
        out.append(lam)
    return out


@dataclass(frozen=True)
class MomentMatrix:
    """Skew r x r matrix of transported second-layer pairings, polynomial per piece."""

    algebra: GradedAlgebraSpec
    control: PolyControl
    covector: DualCovector
    piece_entries: tuple  # of (duration, entries[r][r] polynomials in local time)

    @property
    def rank_size(self) -> int:
        return self.algebra.rank

    def eval(self, t):
        local = t
        for duration, entries in self.piece_entries:
            if local <= duration:
                return [[peval(p, local) for p in row] for row in entries]
            local = local - duration
        raise SingularityError(f"time {t} outside control domain")

    def is_identically_zero(self) -> bool:
        return all(
            pis_zero(p) for _, entries in self.piece_entries for row in entries for p in row
        )

    def pfaffian_pieces(self):
        """For rank 2: the (1,2) entry per piece (the Pfaffian polynomial)."""
        if self.rank_size != 2:
            raise SingularityError("Pfaffian shortcut applies to rank-2 groups only")
        return [(d, entries[0][1]) for d, entries in self.piece_entries]


def moment_matrix(u: PolyControl, lam: DualCovector) -> MomentMatrix:
    alg = lam.algebra
    if u.rank != alg.rank:
        raise SingularityError(f"control rank {u.rank} != algebra rank {alg.rank}")
    if lam.is_exact != u.is_exact:
        raise SingularityError("covector and control must share the scalar mode")
    r = alg.rank
    # coordinates of [X_i, X_j] once
    brackets = {}
    for i in range(r):
        for j in range(r):
            if i != j:
                brackets[(i, j)] = alg.bracket_indices(i, j)
    rows = transport_covector(lam, u)
    piece_entries = []
    for duration, rho in rows:
        entries = [[() for _ in range(r)] for _ in range(r)]
        for i in range(r):
            for j in range(r):
                if i == j:
                    continue
                p = ()
                for k, c in brackets[(i, j)].items():
                    if rho[k]:
                        p = padd(p, tuple(x * c for x in rho[k]))
                entries[i][j] = p
        piece_entries.append((duration, entries))
    return MomentMatrix(algebra=alg, control=u, covector=lam, piece_entries=tuple(piece_entries))


def pfaffian2(matrix) -> object:
    """Pfaffian of a 2x2 skew matrix: its (1,2) entry."""
    if len(matrix) != 2 or any(len(row) != 2 for row in matrix):
        raise SingularityError("pfaffian2 expects a 2x2 matrix")
    if matrix[0][0] != 0 or matrix[1][1] != 0 or matrix[0][1] != -matrix[1][0]:
        raise SingularityError("matrix is not skew-symmetric")
    return matrix[0][1]


def kernel_residual(u: PolyControl, lam: DualCovector, grid: int = 64):
    """max_t ||M_u(lam,t) u(t)||_2; exact zero via polynomial identities when rational.

    For rational data the product M(t)u(t) is a per-piece polynomial vector and
    "identically zero" is decided symbolically; otherwise the maximum over a
    uniform grid (plus piece endpoints) is returned as a float.
    """
    if grid < 2:
        raise SingularityError("grid must have at least 2 points")
    mm = moment_matrix(u, lam)
    r = u.rank
    exact = u.is_exact and lam.is_exact
    residual_polys = []
    for (duration, entries), (_, upolys) in zip(mm.piece_entries, u.pieces):
        vec = []
        for i in range(r):
            p = ()
            for j in range(r):
                if entries[i][j] and upolys[j]:
                    p = padd(p, pmul(entries[i][j], upolys[j]))
            vec.append(p)
        residual_polys.append((duration, vec))
    if exact and all(pis_zero(p) for _, vec in residual_polys for p in vec):
        return Fraction(0)
    total = float(u.duration)
    worst = 0.0
    times = [total * k / (grid - 1) for k in range(grid)]
    for t in times:
        local = t
        for duration, vec in residual_polys:
            if local <= float(duration):
                break
            local -= float(duration)
        else:
            local, vec = float(residual_polys[-1][0]), residual_polys[-1][1]
        local_t = local
        vals = [float(peval(p, local_t)) for p in vec]
        worst = max(worst, sqrt(sum(v * v for v in vals)))
    return worst


@dataclass(frozen=True)
class SingularityReport:
    control_id: str
    rank: int
    codim: int
    annihilator: tuple
    goh: bool | None
    residual: object
    mode: str

    @property
    def singular(self) -> bool:
        return self.codim >= 1

    def to_json(self) -> dict:
        alg = self.annihilator[0].algebra if self.annihilator else None
        return {
            "control_id": self.control_id,
            "rank": self.rank,
            "codim": self.codim,
            "singular": self.singular,
            "annihilator": [
                {
                    alg.basis[k].text: scalar_to_json(c)
                    for k, c in enumerate(lam.coords)
                    if c != 0
                }
                for lam in self.annihilator
            ],
            "goh": self.goh,
            "residual": None if self.residual is None else scalar_to_json(self.residual),
            "mode": self.mode,
        }


def singularity_report(
    u: PolyControl,
    alg: GradedAlgebraSpec,
    lam: DualCovector | None = None,
    grid: int = 64,
    control_id: str = "control",
) -> SingularityReport:
    """Full pipeline: exact image rank, annihilator, Goh check, optional residual."""
    image = image_of_differential(u, alg)
    ann = annihilator(image)
    goh = None
    if alg.rank == 2:
        goh = all(l.layer_is_zero(2) for l in ann) if ann else None
    residual = None
    if lam is not None:
        residual = kernel_residual(u, lam, grid=grid)
    return SingularityReport(
        control_id=control_id,
        rank=image.rank,
        codim=image.codim,
        annihilator=tuple(ann),
        goh=goh,
        residual=residual,
        mode="exact",
    )
