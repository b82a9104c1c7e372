"""Closed-form trajectories of the normalized systems, concatenations, lifts.

Each stratum's normal form decomposes into scalar, rotation and Jordan
blocks, so z' = N z + b integrates in closed form.  Nilpotent strata give
polynomial trajectories (kept exact); the others are evaluated in floats and
discretized to piecewise-linear primitives when a group lift is needed.
Concatenations switch legs only at equilibria, matching the supported curve
classes; asymptotic approach legs carry a truncation horizon and report the
discarded tail.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from .algebra import GradedAlgebraSpec
from .chen import GroupElement, endpoint, group_product, identity_element
from .controls import PolyControl, Primitive
from .poly import padd, pcompose_linear, peval, pscale
from .strata import EquilibriumSet, NormalizedSystem, StrataError, equilibrium_set

POLYNOMIAL_STRATA = {("r2s3", None), ("r2s4", 3), ("r2s4", 4), ("r3s3", 7), ("r3s3", 8), ("r3s3", 9)}


class DynamicsError(ValueError):
    pass


def _blocks(ns: NormalizedSystem):
    """Decompose the normal form into integrable blocks."""
    case, major = ns.case.name, ns.label.major
    one = Fraction(1) if ns.mode == "exact" else 1.0
    if case == "r2s3":
        return [("zero", (0,), None), ("zero", (1,), None)]
    if case == "r2s4":
        return {
            1: [("exp", (0,), one), ("exp", (1,), -one)],
            2: [("rot", (0, 1), (0 * one, one))],
            3: [("nilp2", (0, 1), None)],
            4: [("zero", (0,), None), ("zero", (1,), None)],
        }[major]
    # r3s3
    if major in (1, 2):
        a, b = ns.eigen
        return [("exp", (0,), a), ("exp", (1,), b), ("exp", (2,), -(a + b))]
    if major == 3:
        return [("rot", (0, 1), (one, ns.rotation)), ("exp", (2,), -2 * one)]
    if major == 4:
        return [("jordan2", (0, 1), one), ("exp", (2,), -2 * one)]
    if major == 5:
        return [("exp", (0,), one), ("exp", (1,), -one), ("zero", (2,), None)]
    if major == 6:
        return [("rot", (0, 1), (0 * one, one)), ("zero", (2,), None)]
    if major == 7:
        return [("nilp3", (0, 1, 2), None)]
    if major == 8:
        return [("nilp2", (0, 1), None), ("zero", (2,), None)]
    if major == 9:
        return [("zero", (k,), None) for k in range(3)]
    raise DynamicsError(f"no block decomposition for {case}/{major}")


@dataclass(frozen=True)
class ClosedFormTrajectory:
    """Integral curve of z' = N z + b from z0, evaluated by displayed formulas."""

    ns: NormalizedSystem
    z0: tuple
    equilibria: EquilibriumSet = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "equilibria", equilibrium_set(self.ns))

    @property
    def is_polynomial(self) -> bool:
        return (self.ns.case.name, self.ns.label.major) in POLYNOMIAL_STRATA

    @property
    def is_exact(self) -> bool:
        return self.is_polynomial and self.ns.mode == "exact" and all(
            isinstance(x, (Fraction, int)) for x in self.z0
        )

    def _bz(self):
        return self.ns.b, self.z0

    def eval(self, t):
        b, z0 = self._bz()
        exact = self.is_exact and isinstance(t, (Fraction, int))
        out = [None] * len(z0)
        for kind, idx, par in _blocks(self.ns):
            if kind == "zero":
                (k,) = idx
                out[k] = z0[k] + b[k] * t
            elif kind == "exp":
                (k,) = idx
                a = par
                e = math.exp(float(a) * float(t))
                if exact:
                    raise DynamicsError("exponential coordinate in exact evaluation")
                out[k] = e * (float(z0[k]) + float(b[k]) / float(a)) - float(b[k]) / float(a)
            elif kind == "rot":
                i, j = idx
                sig, a = par
                zeq = _rot_equilibrium(b, i, j, sig, a)
                ci, cj = float(z0[i]) - zeq[0], float(z0[j]) - zeq[1]
                g = math.exp(float(sig) * float(t))
                th = float(a) * float(t)
                out[i] = g * (ci * math.cos(th) - cj * math.sin(th)) + zeq[0]
                out[j] = g * (ci * math.sin(th) + cj * math.cos(th)) + zeq[1]
            elif kind == "jordan2":
                i, j = idx
                mu = float(par)
                p2 = -float(b[j]) / mu
                p1 = (float(b[j]) / mu - float(b[i])) / mu
                e = math.exp(mu * float(t))
                out[j] = e * (float(z0[j]) - p2) + p2
                out[i] = e * ((float(z0[i]) - p1) + float(t) * (float(z0[j]) - p2)) + p1
            elif kind == "nilp2":
                i, j = idx
                if exact:
                    out[j] = z0[j] + b[j] * t
                    out[i] = z0[i] + (b[i] + z0[j]) * t + b[j] * t * t / 2
                else:
                    tf = float(t)
                    out[j] = float(z0[j]) + float(b[j]) * tf
                    out[i] = float(z0[i]) + (float(b[i]) + float(z0[j])) * tf + float(b[j]) * tf**2 / 2
            elif kind == "nilp3":
                i, j, k = idx
                tt = t
                if exact:
                    out[k] = z0[k] + b[k] * tt
                    out[j] = z0[j] + (b[j] + z0[k]) * tt + b[k] * tt * tt / 2
                    out[i] = (
                        z0[i]
                        + (b[i] + z0[j]) * tt
                        + (b[j] + z0[k]) * tt * tt / 2
                        + b[k] * tt * tt * tt / 6
                    )
                else:
                    tf = float(t)
                    out[k] = float(z0[k]) + float(b[k]) * tf
                    out[j] = float(z0[j]) + (float(b[j]) + float(z0[k])) * tf + float(b[k]) * tf**2 / 2
                    out[i] = (
                        float(z0[i])
                        + (float(b[i]) + float(z0[j])) * tf
                        + (float(b[j]) + float(z0[k])) * tf**2 / 2
                        + float(b[k]) * tf**3 / 6
                    )
            else:
                raise DynamicsError(f"unknown block {kind}")
        if not exact:
            out = [float(x) for x in out]
        return out

    def velocity(self, t):
        """dz/dt from the differentiated closed forms (not from N z + b)."""
        b, z0 = self._bz()
        out = [None] * len(z0)
        for kind, idx, par in _blocks(self.ns):
            if kind == "zero":
                (k,) = idx
                out[k] = float(b[k])
            elif kind == "exp":
                (k,) = idx
                a = float(par)
                out[k] = a * math.exp(a * float(t)) * (float(z0[k]) + float(b[k]) / a)
            elif kind == "rot":
                i, j = idx
                sig, a = (float(par[0]), float(par[1]))
                zeq = _rot_equilibrium(b, i, j, par[0], par[1])
                ci, cj = float(z0[i]) - zeq[0], float(z0[j]) - zeq[1]
                g = math.exp(sig * float(t))
                th = a * float(t)
                cos, sin = math.cos(th), math.sin(th)
                out[i] = g * (sig * (ci * cos - cj * sin) + a * (-ci * sin - cj * cos))
                out[j] = g * (sig * (ci * sin + cj * cos) + a * (ci * cos - cj * sin))
            elif kind == "jordan2":
                i, j = idx
                mu = float(par)
                p2 = -float(b[j]) / mu
                p1 = (float(b[j]) / mu - float(b[i])) / mu
                e = math.exp(mu * float(t))
                out[j] = mu * e * (float(z0[j]) - p2)
                out[i] = e * (mu * ((float(z0[i]) - p1) + float(t) * (float(z0[j]) - p2)) + (float(z0[j]) - p2))
            elif kind == "nilp2":
                i, j = idx
                out[j] = float(b[j])
                out[i] = float(b[i]) + float(z0[j]) + float(b[j]) * float(t)
            elif kind == "nilp3":
                i, j, k = idx
                tf = float(t)
                out[k] = float(b[k])
                out[j] = float(b[j]) + float(z0[k]) + float(b[k]) * tf
                out[i] = float(b[i]) + float(z0[j]) + (float(b[j]) + float(z0[k])) * tf + float(b[k]) * tf**2 / 2
        return [float(x) for x in out]

    def poly_coords(self):
        """Exact coordinate polynomials in t for polynomial strata."""
        if not self.is_exact:
            raise DynamicsError("closed form is not polynomial-exact for this stratum")
        b, z0 = self.ns.b, self.z0
        r = len(z0)
        out = [None] * r
        for kind, idx, _ in _blocks(self.ns):
            if kind == "zero":
                (k,) = idx
                out[k] = (z0[k], b[k])
            elif kind == "nilp2":
                i, j = idx
                out[j] = (z0[j], b[j])
                out[i] = (z0[i], b[i] + z0[j], b[j] / 2)
            elif kind == "nilp3":
                i, j, k = idx
                out[k] = (z0[k], b[k])
                out[j] = (z0[j], b[j] + z0[k], b[k] / 2)
                out[i] = (z0[i], b[i] + z0[j], (b[j] + z0[k]) / 2, b[k] / 6)
            else:
                raise DynamicsError("non-polynomial block in polynomial stratum")
        return [tuple(p) for p in out]


def _rot_equilibrium(b, i, j, sig, a):
    """Rest point of the 2x2 block [[sig, -a], [a, sig]] with drift (b_i, b_j)."""
    sig, a = float(sig), float(a)
    bi, bj = float(b[i]), float(b[j])
    det = sig * sig + a * a
    return ((-sig * bi - a * bj) / det, (a * bi - sig * bj) / det)


def trajectory(ns: NormalizedSystem, z0) -> ClosedFormTrajectory:
    z0 = tuple(z0)
    if len(z0) != len(ns.b):
        raise DynamicsError(f"z0 needs {len(ns.b)} coordinates")
    return ClosedFormTrajectory(ns=ns, z0=z0)


def asymptotic_limit(traj: ClosedFormTrajectory, direction: int):
    """Limit of z(t) as t -> direction * infinity, or raise if it diverges.

    Returns (point, decay_rate); rate = None for tails that are exactly
    constant after finite time (stationary trajectories).
    """
    if direction not in (1, -1):
        raise DynamicsError("direction must be +1 or -1")
    b, z0 = traj.ns.b, traj.z0
    tol = 0 if traj.ns.mode == "exact" else 1e-11
    limit = [None] * len(z0)
    rates = []

    def near(x, y):
        return x == y if tol == 0 else abs(float(x) - float(y)) <= tol

    for kind, idx, par in _blocks(traj.ns):
        if kind == "zero":
            (k,) = idx
            if not near(b[k], 0):
                raise DynamicsError("coordinate drifts linearly; no asymptotic limit")
            limit[k] = z0[k]
        elif kind == "exp":
            (k,) = idx
            a = par
            eq = -b[k] / a if traj.ns.mode == "exact" else -float(b[k]) / float(a)
            if float(a) * direction < 0:
                limit[k] = eq
                rates.append(abs(float(a)))
            else:
                if not near(z0[k], eq):
                    raise DynamicsError("expanding coordinate is not at its rest value")
                limit[k] = z0[k]
        elif kind == "rot":
            i, j = idx
            sig, a = par
            zeq = _rot_equilibrium(b, i, j, sig, a)
            at_eq = near(z0[i], zeq[0]) and near(z0[j], zeq[1])
            if float(sig) * direction < 0:
                limit[i], limit[j] = zeq
                rates.append(abs(float(sig)))
            elif at_eq:
                limit[i], limit[j] = z0[i], z0[j]
            else:
                raise DynamicsError("rotating block does not settle; no asymptotic limit")
        elif kind == "jordan2":
            i, j = idx
            mu = float(par)
            p2 = -float(b[j]) / mu
            p1 = (float(b[j]) / mu - float(b[i])) / mu
            if mu * direction < 0:
                limit[i], limit[j] = p1, p2
                rates.append(abs(mu))
            elif near(z0[i], p1) and near(z0[j], p2):
                limit[i], limit[j] = z0[i], z0[j]
            else:
                raise DynamicsError("Jordan block expands; no asymptotic limit")
        else:  # nilpotent polynomial blocks settle only when constant
            coords = traj.poly_coords() if traj.is_exact else None
            if coords is None:
                raise DynamicsError("polynomial stratum limit requires exact data")
            for k in idx:
                if any(c != 0 for c in coords[k][1:]):
                    raise DynamicsError("polynomial coordinate diverges; no asymptotic limit")
                limit[k] = z0[k]
    rate = min(rates) if rates else None
    return tuple(limit), rate


# ---------------------------------------------------------------------------
# concatenation plans


@dataclass(frozen=True)
class FlowLeg:
    """Follow the integral curve from z0 for signed time span."""

    z0: tuple
    span: object  # nonzero; negative runs the curve backwards in time


@dataclass(frozen=True)
class AsymptoticLeg:
    """Approach the equilibrium asymptotically (t -> direction * infinity)."""

    z0: tuple
    direction: int = 1
    horizon: float = 40.0


@dataclass(frozen=True)
class EquilibriumLeg:
    """Straight move inside the equilibrium set."""

    start: tuple
    end: tuple
    span: object = 1


@dataclass(frozen=True)
class ConcatenationPlan:
    ns: NormalizedSystem
    legs: tuple

    def __post_init__(self):
        if not self.legs:
            raise DynamicsError("a plan needs at least one leg")


@dataclass(frozen=True)
class ConcatenationResult:
    primitive: Primitive
    exact: bool
    duration_before_rescale: object
    tail_bounds: tuple
    leg_breaks: tuple


def _leg_start(leg):
    return leg.start if isinstance(leg, EquilibriumLeg) else leg.z0


def _leg_end(plan, leg):
    if isinstance(leg, EquilibriumLeg):
        return tuple(leg.end)
    traj = trajectory(plan.ns, leg.z0)
    if isinstance(leg, AsymptoticLeg):
        return asymptotic_limit(traj, leg.direction)[0]
    return tuple(traj.eval(leg.span))


def _points_close(a, b, exact, tol=1e-9):
    if exact:
        return all(x == y for x, y in zip(a, b))
    return all(abs(float(x) - float(y)) <= tol for x, y in zip(a, b))


def validate_plan(plan: ConcatenationPlan, tol: float = 1e-9) -> None:
    ns = plan.ns
    exact_mode = ns.mode == "exact"
    eq = equilibrium_set(ns)
    start = _leg_start(plan.legs[0])
    if any(x != 0 for x in start) if exact_mode else any(abs(float(x)) > tol for x in start):
        raise DynamicsError("plans start at the origin")
    prev_end = None
    for k, leg in enumerate(plan.legs):
        if isinstance(leg, EquilibriumLeg):
            for point, name in ((leg.start, "start"), (leg.end, "end")):
                if not eq.contains(point, exact_mode, tol):
                    raise DynamicsError(
                        f"equilibrium move {name} point {point} is not an equilibrium"
                    )
        if isinstance(leg, AsymptoticLeg):
            asymptotic_limit(trajectory(ns, leg.z0), leg.direction)  # raises if invalid
        if isinstance(leg, FlowLeg) and leg.span == 0:
            raise DynamicsError("flow legs need a nonzero time span")
        if prev_end is not None:
            here = _leg_start(leg)
            if not _points_close(prev_end, here, exact_mode, tol):
                raise DynamicsError(f"leg {k} starts at {here}, previous ended at {prev_end}")
            # a switch between legs must happen at an equilibrium
            if not eq.contains(here, exact_mode, tol):
                raise DynamicsError(f"switch at non-equilibrium point {here}")
        prev_end = _leg_end(plan, leg)


def concatenate(
    plan: ConcatenationPlan,
    samples_per_leg: int = 64,
    rescale_to_unit: bool = True,
    tol: float = 1e-9,
) -> ConcatenationResult:
    """Realize the plan as a primitive: exact piecewise-polynomial when every
    leg is polynomial, else a piecewise-linear sampling."""
    validate_plan(plan, tol)
    ns = plan.ns
    all_poly = True
    for leg in plan.legs:
        if isinstance(leg, AsymptoticLeg):
            all_poly = False
        elif isinstance(leg, FlowLeg):
            if not trajectory(ns, leg.z0).is_exact or isinstance(leg.span, float):
                all_poly = False
        elif isinstance(leg, EquilibriumLeg):
            data = tuple(leg.start) + tuple(leg.end) + (leg.span,)
            if not all(isinstance(x, (Fraction, int)) for x in data):
                all_poly = False
    tail_bounds = []
    if all_poly:
        pieces = []
        breaks = [Fraction(0)]
        for leg in plan.legs:
            if isinstance(leg, EquilibriumLeg):
                span = Fraction(leg.span)
                polys = tuple(
                    (Fraction(s), (Fraction(e) - Fraction(s)) / span)
                    for s, e in zip(leg.start, leg.end)
                )
                pieces.append((span, polys))
            else:
                traj = trajectory(ns, leg.z0)
                coords = traj.poly_coords()
                span = Fraction(leg.span)
                if span > 0:
                    pieces.append((span, tuple(coords)))
                else:
                    flipped = tuple(pcompose_linear(p, Fraction(-1)) for p in coords)
                    pieces.append((-span, flipped))
            breaks.append(breaks[-1] + pieces[-1][0])
        w = Primitive(rank=len(ns.b), pieces=tuple(pieces))
        w.validate()
        total = w.duration
        if rescale_to_unit and total != 1:
            w = rescale_primitive(w, Fraction(1))
        return ConcatenationResult(
            primitive=w,
            exact=True,
            duration_before_rescale=total,
            tail_bounds=(),
            leg_breaks=tuple(breaks),
        )
    # sampled path
    times = [0.0]
    points = [[0.0] * len(ns.b)]
    breaks = [0.0]
    for leg in plan.legs:
        t_base = times[-1]
        if isinstance(leg, EquilibriumLeg):
            span = abs(float(leg.span)) or 1.0
            for j in range(1, samples_per_leg + 1):
                frac = j / samples_per_leg
                times.append(t_base + span * frac)
                points.append(
                    [
                        float(s) + (float(e) - float(s)) * frac
                        for s, e in zip(leg.start, leg.end)
                    ]
                )
        else:
            traj = trajectory(ns, leg.z0)
            if isinstance(leg, AsymptoticLeg):
                limit, rate = asymptotic_limit(traj, leg.direction)
                H = float(leg.horizon)
                for j in range(1, samples_per_leg + 1):
                    s = H * j / samples_per_leg
                    times.append(t_base + s)
                    points.append(traj.eval(leg.direction * s))
                zH = points[-1]
                tail = math.sqrt(sum((float(a) - float(b)) ** 2 for a, b in zip(zH, limit)))
                tail_bounds.append(tail)
                # splice the exact limit so the next leg starts cleanly
                times.append(times[-1] + H / samples_per_leg)
                points.append([float(x) for x in limit])
            else:
                span = float(leg.span)
                for j in range(1, samples_per_leg + 1):
                    s = span * j / samples_per_leg
                    times.append(t_base + abs(span) * j / samples_per_leg)
                    points.append(traj.eval(s))
        breaks.append(times[-1])
    w = Primitive.from_samples(times, points)
    total = w.duration
    if rescale_to_unit:
        w = rescale_primitive(w, 1.0)
    return ConcatenationResult(
        primitive=w,
        exact=False,
        duration_before_rescale=total,
        tail_bounds=tuple(tail_bounds),
        leg_breaks=tuple(breaks),
    )


def rescale_primitive(w: Primitive, new_duration) -> Primitive:
    """Affine time rescale of the whole primitive onto [0, new_duration]."""
    total = w.duration
    factor = (
        Fraction(new_duration) / Fraction(total)
        if w.is_exact
        else float(new_duration) / float(total)
    )
    pieces = tuple(
        (
            d * factor,
            tuple(pcompose_linear(p, 1 / factor if w.is_exact else 1.0 / factor) for p in polys),
        )
        for d, polys in w.pieces
    )
    return Primitive(rank=w.rank, pieces=pieces)


# ---------------------------------------------------------------------------
# lifting primitives to group paths


@dataclass(frozen=True)
class LiftedPath:
    """Group path of a frame-transported primitive, with its driving control."""

    algebra: GradedAlgebraSpec
    control: PolyControl
    breakpoints: tuple
    points: tuple  # GroupElement at each breakpoint (piece boundaries)

    def at(self, t) -> GroupElement:
        acc = 0 * t
        for k, (duration, _) in enumerate(self.control.pieces):
            if t <= acc + duration:
                if t == acc:
                    return self.points[k]
                seg = self.control.clip(acc, t)
                return group_product(self.points[k], endpoint(seg, self.algebra))
            acc = acc + duration
        return self.points[-1]

    def endpoint(self) -> GroupElement:
        return self.points[-1]


def lift(w: Primitive, frame, alg: GradedAlgebraSpec) -> LiftedPath:
    """Transport w through the frame (columns of P span the first layer) and
    accumulate per-piece endpoint factors on the group."""
    r = w.rank
    if alg.rank != r:
        raise DynamicsError(f"frame/algebra rank mismatch: {r} vs {alg.rank}")
    exact = w.is_exact
    frame_rows = [[x for x in row] for row in frame]
    x_pieces = []
    for duration, polys in w.pieces:
        rows = []
        for i in range(r):
            p = ()
            for j in range(r):
                coef = frame_rows[i][j]
                if coef != 0:
                    p = padd(p, pscale(polys[j], coef if exact else float(coef)))
            rows.append(p)
        x_pieces.append((duration, tuple(rows)))
    x_prim = Primitive(rank=r, pieces=tuple(x_pieces))
    u = x_prim.derivative()
    points = [identity_element(alg) if exact else GroupElement(alg.zero().to_float())]
    acc = None
    for duration, polys in u.pieces:
        seg = PolyControl(rank=r, pieces=((duration, polys),))
        g = endpoint(seg, alg)
        points.append(group_product(points[-1], g))
    breaks = [u.pieces[0][0] * 0]
    for duration, _ in u.pieces:
        breaks.append(breaks[-1] + duration)
    return LiftedPath(
        algebra=alg, control=u, breakpoints=tuple(breaks), points=tuple(points)
    )


def identity_frame(r: int, exact: bool = True):
    one = Fraction(1) if exact else 1.0
    zero = one * 0
    return tuple(tuple(one if i == j else zero for j in range(r)) for i in range(r))
