"""Piecewise-polynomial controls u:[0,T] -> R^r and their primitives.

Pieces carry a positive duration and one polynomial per component in local
time.  Rational data keeps every downstream iterated integral exact; float
data flags the whole control as numeric.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .algebra import AlgebraError, scalar_mode, scalar_from_json, scalar_to_json
from .poly import Poly, padd, pder, peval, pint, pshift, ptrim

DEFAULT_MAX_DEGREE = 4


class ControlError(ValueError):
    """Malformed control or primitive."""


@dataclass(frozen=True)
class PolyControl:
    """Ordered pieces of (duration, polynomials per component)."""

    rank: int
    pieces: tuple  # of (duration, tuple[Poly, ...])

    @classmethod
    def from_pieces(cls, rank: int, pieces, max_degree: int = DEFAULT_MAX_DEGREE) -> "PolyControl":
        norm = []
        all_scalars = []
        for duration, polys in pieces:
            if duration <= 0:
                raise ControlError(f"piece duration must be positive, got {duration}")
            if len(polys) != rank:
                raise ControlError(f"expected {rank} components, got {len(polys)}")
            polys = tuple(ptrim(tuple(p)) for p in polys)
            for p in polys:
                if len(p) - 1 > max_degree:
                    raise ControlError(
                        f"piece degree {len(p) - 1} exceeds maximum {max_degree}"
                    )
                all_scalars.extend(p)
            all_scalars.append(duration)
            norm.append((duration, polys))
        scalar_mode(all_scalars)
        if not norm:
            raise ControlError("a control needs at least one piece")
        return cls(rank=rank, pieces=tuple(norm))

    @classmethod
    def constant(cls, values, duration=Fraction(1)) -> "PolyControl":
        return cls.from_pieces(len(values), [(duration, [(v,) for v in values])])

    @property
    def duration(self):
        return sum(d for d, _ in self.pieces)

    @property
    def is_exact(self) -> bool:
        return scalar_mode([d for d, _ in self.pieces])

    def __call__(self, t):
        local = t
        for duration, polys in self.pieces:
            if local <= duration:
                return [peval(p, local) for p in polys]
            local = local - duration
        raise ControlError(f"time {t} outside control domain [0,{self.duration}]")

    def clip(self, t0, t1) -> "PolyControl":
        """Restriction to [t0, t1], re-based to start at time 0."""
        if not (0 <= t0 < t1 <= self.duration):
            raise ControlError(f"invalid window [{t0},{t1}] within [0,{self.duration}]")
        out = []
        start = t0 * 0
        for duration, polys in self.pieces:
            end = start + duration
            lo = max(start, t0)
            hi = min(end, t1)
            if lo < hi:
                shifted = tuple(pshift(p, lo - start) for p in polys)
                out.append((hi - lo, shifted))
            start = end
        return PolyControl(rank=self.rank, pieces=tuple(out))

    def concat(self, other: "PolyControl") -> "PolyControl":
        if other.rank != self.rank:
            raise ControlError("rank mismatch in concatenation")
        return PolyControl(rank=self.rank, pieces=self.pieces + other.pieces)

    def scale_time(self, k) -> "PolyControl":
        """Reparametrize so the same path is traversed over duration k * T."""
        if k <= 0:
            raise ControlError("time scale must be positive")
        inv = (Fraction(1) / Fraction(k)) if self.is_exact else 1.0 / k
        out = []
        for duration, polys in self.pieces:
            scaled = tuple(
                ptrim(tuple(c * inv ** (n + 1) for n, c in enumerate(p))) for p in polys
            )
            out.append((duration * k, scaled))
        return PolyControl(rank=self.rank, pieces=tuple(out))

    def reversed_negated(self) -> "PolyControl":
        """u~(t) = -u(T - t): drives the reversed path."""
        out = []
        for duration, polys in reversed(self.pieces):
            flipped = []
            for p in polys:
                # -p(duration - t)
                comp = pshift(tuple((-1) ** n * c for n, c in enumerate(p)), -duration)
                flipped.append(tuple(-c for c in comp))
            out.append((duration, tuple(flipped)))
        return PolyControl(rank=self.rank, pieces=tuple(out))

    def to_float(self) -> "PolyControl":
        return PolyControl(
            rank=self.rank,
            pieces=tuple(
                (float(d), tuple(tuple(float(c) for c in p) for p in polys))
                for d, polys in self.pieces
            ),
        )

    def primitive(self) -> "Primitive":
        return Primitive.from_control(self)

    def to_json(self) -> dict:
        return {
            "pieces": [
                {
                    "duration": scalar_to_json(d),
                    "poly": [[scalar_to_json(c) for c in p] for p in polys],
                }
                for d, polys in self.pieces
            ]
        }

    @classmethod
    def from_json(cls, data: dict, max_degree: int = DEFAULT_MAX_DEGREE) -> "PolyControl":
        try:
            raw = data["pieces"]
            pieces = []
            rank = None
            for row in raw:
                d = scalar_from_json(row["duration"])
                polys = [tuple(scalar_from_json(c) for c in p) for p in row["poly"]]
                if rank is None:
                    rank = len(polys)
                pieces.append((d, polys))
        except (KeyError, TypeError) as exc:
            raise ControlError(f"malformed control file: {exc}") from exc
        if rank is None:
            raise ControlError("a control needs at least one piece")
        return cls.from_pieces(rank, pieces, max_degree=max_degree)


@dataclass(frozen=True)
class Primitive:
    """Piecewise-polynomial path w with w(0) = 0 and continuous junctions."""

    rank: int
    pieces: tuple  # of (duration, tuple[Poly, ...]) with matching endpoints

    @classmethod
    def from_control(cls, u: PolyControl) -> "Primitive":
        out = []
        offset = [Fraction(0) if u.is_exact else 0.0] * u.rank
        for duration, polys in u.pieces:
            integrated = []
            for k, p in enumerate(polys):
                q = pint(p)
                integrated.append(padd(q, (offset[k],)))
            out.append((duration, tuple(integrated)))
            offset = [peval(q, duration) for q in integrated]
        return cls(rank=u.rank, pieces=tuple(out))

    @classmethod
    def from_samples(cls, times, points) -> "Primitive":
        """Piecewise-linear interpolation of sampled points (w(t_0) must be 0)."""
        if len(times) != len(points) or len(times) < 2:
            raise ControlError("need matching times/points with at least two samples")
        rank = len(points[0])
        if any(x != 0 for x in points[0]):
            raise ControlError("primitives start at the origin")
        exact = scalar_mode(list(times) + [x for p in points for x in p])
        if exact:
            times = [Fraction(t) for t in times]
            points = [[Fraction(x) for x in p] for p in points]
        pieces = []
        for (t0, p0), (t1, p1) in zip(zip(times, points), zip(times[1:], points[1:])):
            d = t1 - t0
            if d <= 0:
                raise ControlError("sample times must be strictly increasing")
            polys = tuple(ptrim((p0[k], (p1[k] - p0[k]) / d)) for k in range(rank))
            pieces.append((d, polys))
        return cls(rank=rank, pieces=tuple(pieces))

    @property
    def duration(self):
        return sum(d for d, _ in self.pieces)

    @property
    def is_exact(self) -> bool:
        return scalar_mode([d for d, _ in self.pieces])

    def __call__(self, t):
        local = t
        for duration, polys in self.pieces:
            if local <= duration:
                return [peval(p, local) for p in polys]
            local = local - duration
        raise ControlError(f"time {t} outside domain [0,{self.duration}]")

    def derivative(self) -> PolyControl:
        return PolyControl(
            rank=self.rank,
            pieces=tuple((d, tuple(pder(p) or ((d * 0),) for p in polys)) for d, polys in self.pieces),
        )

    def endpoint_value(self):
        d, polys = self.pieces[-1]
        return [peval(p, d) for p in polys]

    def validate(self, tol=0) -> None:
        prev = None
        for duration, polys in self.pieces:
            start = [peval(p, duration * 0) for p in polys]
            if prev is None:
                if any(abs(x) > tol for x in start):
                    raise ControlError("primitive must start at the origin")
            else:
                if any(abs(a - b) > tol for a, b in zip(start, prev)):
                    raise ControlError("primitive pieces are discontinuous")
            prev = [peval(p, duration) for p in polys]
