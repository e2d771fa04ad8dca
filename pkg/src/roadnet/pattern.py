"""Periodic arc patterns on the flat torus.

A pattern is a finite collection of arcs (segments, circular arcs, circles and
polylines) given in the plane; the torus quotient is taken mod 1 in each
coordinate.  Arcs may only meet at their endpoints.  The module also produces
the restriction of the periodic extension to one closed cell (``unfold``) and
uniform polyline discretizations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations

import numpy as np

from .errors import GeometryError, ParameterError

#: endpoints closer than this (on the torus) are the same node
NODE_TOL = 1e-9
#: coordinates closer than this to 0 or 1 are snapped onto the cell boundary
SNAP_TOL = 1e-10
STRAIGHT_TOL = 1e-9
DISCRETIZE_RTOL = 1e-3


def _point(p):
    x, y = p
    return (float(x), float(y))


def torus_delta(a, b):
    """Shortest lattice-reduced difference ``a - b``."""
    d = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
    return d - np.round(d)


def snap_unit(points, tol=SNAP_TOL):
    """Snap coordinates within ``tol`` of 0 or 1 exactly onto the cell boundary."""
    pts = np.array(points, dtype=float, copy=True)
    pts[np.abs(pts) < tol] = 0.0
    pts[np.abs(pts - 1.0) < tol] = 1.0
    return pts


# ---------------------------------------------------------------- arcs


class Arc:
    """Common behaviour of the arc types; subclasses are frozen dataclasses."""

    kind = "arc"

    @property
    def start(self):
        return self.point(0.0)

    @property
    def end(self):
        return self.point(self.length)

    @property
    def start_tangent(self):
        """Outgoing unit tangent at the start."""
        return self.tangent_at(0.0)

    @property
    def end_tangent(self):
        """Outgoing unit tangent at the end (pointing back into the arc)."""
        return -self.tangent_at(self.length)

    @property
    def is_closed(self):
        return bool(np.all(np.abs(self.end - self.start) < NODE_TOL))

    @property
    def straight_tangent(self):
        """The constant unit tangent of a straight arc, ``None`` otherwise."""
        return None

    def sample(self, h):
        raise NotImplementedError

    def edge_tangents(self, points):
        """Unit tangent per polyline edge of a sampling of this arc."""
        t = self.straight_tangent
        d = np.diff(points, axis=0)
        if t is not None:
            return np.tile(t, (len(d), 1))
        return d / np.linalg.norm(d, axis=1)[:, None]

    def crossings(self, axis, c):
        """Arc-length parameters in [0, L] where coordinate ``axis`` crosses ``c`` mod 1."""
        raise NotImplementedError


@dataclass(frozen=True)
class Segment(Arc):
    p: tuple
    q: tuple
    kind = "segment"

    def __post_init__(self):
        object.__setattr__(self, "p", _point(self.p))
        object.__setattr__(self, "q", _point(self.q))
        if self.p == self.q:
            raise GeometryError("segment endpoints coincide")

    @cached_property
    def length(self):
        return math.hypot(self.q[0] - self.p[0], self.q[1] - self.p[1])

    @cached_property
    def tangent(self):
        p, q = np.array(self.p), np.array(self.q)
        return (q - p) / self.length

    @property
    def straight_tangent(self):
        return self.tangent

    def point(self, s):
        if s == 0.0:
            return np.array(self.p)
        if s == self.length:
            return np.array(self.q)
        return np.array(self.p) + s * self.tangent

    def tangent_at(self, s):
        return self.tangent.copy()

    def sub(self, s0, s1):
        return Segment(self.point(s0), self.point(s1))

    def translated(self, v):
        return Segment(np.array(self.p) + v, np.array(self.q) + v)

    def sample(self, h):
        n = max(1, math.ceil(self.length / h - 1e-12))
        t = np.linspace(0.0, 1.0, n + 1)[:, None]
        pts = np.array(self.p) + t * (np.array(self.q) - np.array(self.p))
        pts[0], pts[-1] = self.p, self.q
        return pts

    def crossings(self, axis, c):
        a, b = self.p[axis], self.q[axis]
        if a == b:
            return []
        lo, hi = min(a, b), max(a, b)
        out = []
        for m in range(math.ceil(lo - c), math.floor(hi - c) + 1):
            s = (c + m - a) / (b - a) * self.length
            if -1e-12 * self.length <= s <= self.length * (1 + 1e-12):
                out.append(s)
        return out

    def to_dict(self):
        return {"type": "segment", "p": list(self.p), "q": list(self.q)}


@dataclass(frozen=True)
class CircularArc(Arc):
    """Arc of a circle swept from ``theta0`` to ``theta1`` (either direction)."""

    center: tuple
    radius: float
    theta0: float
    theta1: float
    kind = "arc"

    def __post_init__(self):
        object.__setattr__(self, "center", _point(self.center))
        if not self.radius > 0:
            raise GeometryError("arc radius must be positive")
        if self.theta0 == self.theta1:
            raise GeometryError("arc has zero sweep")

    @property
    def sign(self):
        return 1.0 if self.theta1 > self.theta0 else -1.0

    @cached_property
    def length(self):
        return self.radius * abs(self.theta1 - self.theta0)

    def angle(self, s):
        if s == self.length:
            return self.theta1
        return self.theta0 + self.sign * s / self.radius

    def point(self, s):
        th = self.angle(s)
        return np.array(self.center) + self.radius * np.array([math.cos(th), math.sin(th)])

    def tangent_at(self, s):
        th = self.angle(s)
        return self.sign * np.array([-math.sin(th), math.cos(th)])

    def sub(self, s0, s1):
        return CircularArc(self.center, self.radius, self.angle(s0), self.angle(s1))

    def translated(self, v):
        return CircularArc(np.array(self.center) + v, self.radius, self.theta0, self.theta1)

    def sample(self, h):
        n = max(1, math.ceil(self.length / h - 1e-12))
        if self.is_closed:
            n = max(n, 3)
        th = np.linspace(self.theta0, self.theta1, n + 1)
        pts = np.array(self.center) + self.radius * np.c_[np.cos(th), np.sin(th)]
        pts[0] = self.start
        pts[-1] = pts[0] if self.is_closed else self.end
        return pts

    def crossings(self, axis, c):
        cen, r = self.center[axis], self.radius
        lo, hi = min(self.theta0, self.theta1), max(self.theta0, self.theta1)
        thetas = []
        for m in range(math.ceil(cen - r - c), math.floor(cen + r - c) + 1):
            v = (c + m - cen) / r
            if abs(v) >= 1 - 1e-14:
                continue  # tangential touch, not a crossing
            if axis == 0:
                base = [math.acos(v), -math.acos(v)]
            else:
                base = [math.asin(v), math.pi - math.asin(v)]
            for b in base:
                k0 = math.ceil((lo - b) / (2 * math.pi))
                k1 = math.floor((hi - b) / (2 * math.pi))
                thetas.extend(b + 2 * math.pi * k for k in range(k0, k1 + 1))
        out = []
        for th in thetas:
            s = abs(th - self.theta0) * r
            if -1e-12 * self.length <= s <= self.length * (1 + 1e-12):
                out.append(s)
        return sorted(out)

    def to_dict(self):
        return {
            "type": "arc",
            "center": list(self.center),
            "radius": self.radius,
            "theta0": self.theta0,
            "theta1": self.theta1,
        }


@dataclass(frozen=True)
class Circle(Arc):
    """Full circle, traversed clockwise from its rightmost point.

    Clockwise traversal puts the left (positive) side of the curve outside the
    disc, so road strips of circles lie outside.
    """

    center: tuple
    radius: float
    kind = "circle"

    def __post_init__(self):
        object.__setattr__(self, "center", _point(self.center))
        if not self.radius > 0:
            raise GeometryError("circle radius must be positive")

    @cached_property
    def _arc(self):
        return CircularArc(self.center, self.radius, 0.0, -2.0 * math.pi)

    @property
    def length(self):
        return self._arc.length

    @property
    def is_closed(self):
        return True

    @property
    def end(self):
        return self.start

    def point(self, s):
        return self._arc.point(s)

    def tangent_at(self, s):
        return self._arc.tangent_at(s)

    def sub(self, s0, s1):
        return self._arc.sub(s0, s1)

    def translated(self, v):
        return Circle(np.array(self.center) + v, self.radius)

    def sample(self, h):
        return self._arc.sample(h)

    def crossings(self, axis, c):
        return self._arc.crossings(axis, c)

    def to_dict(self):
        return {"type": "circle", "center": list(self.center), "radius": self.radius}


@dataclass(frozen=True)
class Polyline(Arc):
    points: tuple
    kind = "polyline"

    def __post_init__(self):
        pts = tuple(_point(p) for p in self.points)
        object.__setattr__(self, "points", pts)
        if len(pts) < 2:
            raise GeometryError("polyline needs at least two points")
        if any(a == b for a, b in zip(pts, pts[1:])):
            raise GeometryError("polyline has repeated consecutive points")

    @cached_property
    def _array(self):
        return np.array(self.points)

    @cached_property
    def _cum(self):
        return np.r_[0.0, np.cumsum(np.linalg.norm(np.diff(self._array, axis=0), axis=1))]

    @property
    def length(self):
        return float(self._cum[-1])

    @cached_property
    def is_straight(self):
        p = self._array
        d = p[-1] - p[0]
        n = np.linalg.norm(d)
        if n == 0:
            return False
        rel = p - p[0]
        off = np.abs(rel[:, 0] * d[1] - rel[:, 1] * d[0]) / n
        along = rel @ d / n
        return bool(np.all(off <= STRAIGHT_TOL) and np.all(np.diff(along) > 0))

    @property
    def straight_tangent(self):
        if not self.is_straight:
            return None
        d = self._array[-1] - self._array[0]
        return d / np.linalg.norm(d)

    def _locate(self, s):
        i = int(np.searchsorted(self._cum, s, side="right") - 1)
        return min(max(i, 0), len(self.points) - 2)

    def point(self, s):
        if s == 0.0:
            return self._array[0].copy()
        if s == self.length:
            return self._array[-1].copy()
        i = self._locate(s)
        t = (s - self._cum[i]) / (self._cum[i + 1] - self._cum[i])
        return self._array[i] + t * (self._array[i + 1] - self._array[i])

    def tangent_at(self, s):
        if self.straight_tangent is not None:
            return self.straight_tangent
        i = self._locate(s)
        if s == self.length:
            i = len(self.points) - 2
        d = self._array[i + 1] - self._array[i]
        return d / np.linalg.norm(d)

    def sub(self, s0, s1):
        inner = [tuple(p) for p, c in zip(self._array, self._cum) if s0 < c < s1]
        return Polyline([tuple(self.point(s0))] + inner + [tuple(self.point(s1))])

    def translated(self, v):
        return Polyline(self._array + v)

    def sample(self, h):
        out = [self._array[:1]]
        for a, b in zip(self._array[:-1], self._array[1:]):
            n = max(1, math.ceil(np.linalg.norm(b - a) / h - 1e-12))
            t = np.linspace(0.0, 1.0, n + 1)[1:, None]
            seg = a + t * (b - a)
            seg[-1] = b
            out.append(seg)
        return np.concatenate(out)

    def crossings(self, axis, c):
        out = []
        for i, (a, b) in enumerate(zip(self._array[:-1], self._array[1:])):
            if a[axis] == b[axis]:
                continue
            lo, hi = min(a[axis], b[axis]), max(a[axis], b[axis])
            seglen = self._cum[i + 1] - self._cum[i]
            for m in range(math.ceil(lo - c), math.floor(hi - c) + 1):
                t = (c + m - a[axis]) / (b[axis] - a[axis])
                s = self._cum[i] + t * seglen
                if -1e-12 * self.length <= s <= self.length * (1 + 1e-12):
                    out.append(float(s))
        return sorted(set(out))

    def to_dict(self):
        return {"type": "polyline", "points": [list(p) for p in self.points]}


# ---------------------------------------------------------------- torus pattern


@dataclass(frozen=True, eq=False)
class NodeEnd:
    arc: int
    at_start: bool
    tangent: np.ndarray  # outgoing unit tangent
    away: np.ndarray  # vector from this end to the arc's other end (unfolded)


@dataclass(frozen=True, eq=False)
class Node:
    position: np.ndarray  # in [0, 1)^2
    ends: tuple

    @property
    def arcs(self):
        return sorted({e.arc for e in self.ends})


@dataclass(frozen=True)
class TorusPattern:
    """A 1-periodic pattern of arcs; immutable."""

    name: str
    arcs: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "arcs", tuple(self.arcs))
        for i, arc in enumerate(self.arcs):
            if not isinstance(arc, Arc):
                raise GeometryError(f"arc {i}: not an arc object")
            if not arc.length > 0:
                raise GeometryError(f"arc {i}: non-positive length")

    @property
    def total_length(self):
        return total_length(self)

    @cached_property
    def _junctions(self):
        ends = []
        for i, arc in enumerate(self.arcs):
            a, b = arc.start, arc.end
            ends.append((np.mod(a, 1.0), NodeEnd(i, True, arc.start_tangent, b - a)))
            ends.append((np.mod(b, 1.0), NodeEnd(i, False, arc.end_tangent, a - b)))
        groups = []
        for pos, end in ends:
            for g in groups:
                if np.all(np.abs(torus_delta(pos, g[0])) < NODE_TOL):
                    g[1].append(end)
                    break
            else:
                groups.append([pos, [end]])
        nodes, closures = [], []
        for pos, members in groups:
            pos = np.where(np.abs(pos - 1.0) < NODE_TOL, 0.0, pos)
            if (
                len(members) == 2
                and members[0].arc == members[1].arc
                and float(members[0].tangent @ members[1].tangent) < -1 + 1e-12
            ):
                closures.append(Node(pos, tuple(members)))
            else:
                nodes.append(Node(pos, tuple(members)))
        return tuple(nodes), tuple(closures)

    @property
    def nodes(self):
        """Junctions of arc ends, excluding smooth self-closures of single arcs."""
        return self._junctions[0]

    @property
    def closures(self):
        """Points where one arc closes on itself smoothly (not nodes)."""
        return self._junctions[1]

    @property
    def junction_points(self):
        return [n.position for n in self.nodes + self.closures]

    def check_intersections(self, h=None):
        """Raise ``GeometryError`` if arcs cross or overlap away from nodes."""
        from shapely.geometry import LineString

        if h is None:
            h = 0.01
        samples = [arc.sample(min(h, arc.length / 8)) for arc in self.arcs]
        lines = [LineString(s) for s in samples]
        for i, line in enumerate(lines):
            if not line.is_simple and not (self.arcs[i].is_closed and _ring_simple(samples[i])):
                raise GeometryError(f"arc {i}: self-intersecting")
        junctions = self.junction_points
        for i, j in combinations(range(len(lines)), 2):
            self._check_pair(i, j, samples, lines, junctions)
        for i in range(len(lines)):
            self._check_pair(i, i, samples, lines, junctions)

    def _check_pair(self, i, j, samples, lines, junctions):
        from shapely.affinity import translate

        lo_i, hi_i = samples[i].min(0), samples[i].max(0)
        lo_j, hi_j = samples[j].min(0), samples[j].max(0)
        mx = range(math.floor(lo_i[0] - hi_j[0]) - 1, math.ceil(hi_i[0] - lo_j[0]) + 2)
        my = range(math.floor(lo_i[1] - hi_j[1]) - 1, math.ceil(hi_i[1] - lo_j[1]) + 2)
        for sx in mx:
            for sy in my:
                if i == j and sx == 0 and sy == 0:
                    continue
                other = translate(lines[j], sx, sy)
                if not lines[i].intersects(other):
                    continue
                inter = lines[i].intersection(other)
                for g in getattr(inter, "geoms", [inter]):
                    if g.geom_type != "Point":
                        raise GeometryError(f"arc {i}: overlaps arc {j}")
                    p = np.array(g.coords[0])
                    if not any(np.all(np.abs(torus_delta(p, q)) < 1e-7) for q in junctions):
                        raise GeometryError(
                            f"arc {i}: intersects arc {j} away from a node at {p.round(6).tolist()}"
                        )


def _ring_simple(pts):
    from shapely.geometry import LinearRing

    return LinearRing(pts[:-1]).is_simple


def total_length(pattern):
    """Sum of arc lengths in one cell (chord sum for polylines)."""
    return float(sum(arc.length for arc in pattern.arcs))


# ---------------------------------------------------------------- validation


@dataclass
class NodeReport:
    position: np.ndarray
    arcs: list
    angles: list  # degrees, one per pair of incident ends
    ok: bool


@dataclass
class ValidationReport:
    nodes: list
    warnings: list = field(default_factory=list)
    angle_tol: float = 0.0

    @property
    def ok(self):
        return all(n.ok for n in self.nodes)

    def format(self):
        lines = [f"regularity: {'PASS' if self.ok else 'FAIL'} (angle_tol={math.degrees(self.angle_tol):.6g} deg)"]
        for n in self.nodes:
            angs = ", ".join(f"{a:.3f}" for a in n.angles)
            lines.append(
                f"  node ({n.position[0]:.6f}, {n.position[1]:.6f}) arcs={n.arcs} "
                f"angles=[{angs}] {'ok' if n.ok else 'TANGENTIAL'}"
            )
        for w in self.warnings:
            lines.append(f"  warning: {w}")
        return "\n".join(lines)


def validate_regularity(pattern, angle_tol=math.radians(1e-3)):
    """Check that arcs meet at every node mutually nontangentially.

    Every pair of incident ends at a node must have outgoing tangents more
    than ``angle_tol`` radians apart.  Pairs of distinct arcs whose outgoing
    tangents are opposite (they would form one smooth curve) are reported as
    warnings only.
    """
    pattern.check_intersections()
    reports, warnings = [], []
    for node in pattern.nodes:
        angles, ok = [], True
        for e1, e2 in combinations(node.ends, 2):
            c = float(np.clip(e1.tangent @ e2.tangent, -1.0, 1.0))
            ang = math.acos(c)
            angles.append(math.degrees(ang))
            if ang <= angle_tol:
                ok = False
            if e1.arc != e2.arc and c < -1 + 1e-12:
                warnings.append(
                    f"arcs {e1.arc} and {e2.arc} join smoothly at "
                    f"({node.position[0]:.6f}, {node.position[1]:.6f}); kept as separate arcs"
                )
        reports.append(NodeReport(node.position, node.arcs, angles, ok))
    return ValidationReport(reports, warnings, angle_tol)


# ---------------------------------------------------------------- unfolding


@dataclass(frozen=True, eq=False)
class Piece:
    """Part of one arc clipped to the closed unit cell."""

    arc: Arc
    parent: int
    tangent: np.ndarray = None  # exact parent tangent for straight arcs

    def sample(self, h):
        return snap_unit(self.arc.sample(h))

    def edge_tangents(self, points):
        d = np.diff(points, axis=0)
        if self.tangent is not None:
            return np.tile(self.tangent, (len(d), 1))
        return d / np.linalg.norm(d, axis=1)[:, None]


@dataclass(frozen=True, eq=False)
class UnfoldedPattern:
    offset: tuple
    pieces: tuple
    boundary_identifications: tuple
    node_identifications: tuple
    source: TorusPattern = None

    @property
    def total_length(self):
        return float(sum(p.arc.length for p in self.pieces))


def unfold(pattern, offset=(0.0, 0.0)):
    """Restrict the periodic extension to one closed cell.

    The coordinate system is translated by ``offset``: the cell window
    ``[offset, offset + 1]^2`` is mapped onto ``[0, 1]^2``.  Each arc is cut
    where it crosses the window boundary and every sub-arc is moved into the
    cell by a lattice vector.  Sub-arcs lying on the boundary are kept on the
    left/bottom edge only, so no length is counted twice.
    """
    off = np.asarray(offset, dtype=float)
    if off.shape != (2,) or np.any(off < 0) or np.any(off >= 1):
        raise ParameterError("offset must lie in [0, 1)^2")
    pieces = []
    for idx, arc in enumerate(pattern.arcs):
        L = arc.length
        raw = arc.crossings(0, off[0]) + arc.crossings(1, off[1])
        if arc.is_closed:
            raw = [0.0 if (s < 1e-12 * L or s > L * (1 - 1e-12)) else s for s in raw]
        else:
            raw = [s for s in raw if 1e-12 * L < s < L * (1 - 1e-12)]
        cuts = sorted(set(raw))
        if arc.is_closed and cuts:
            # the closure point of a closed arc is not a cut
            spans = list(zip(cuts[:-1], cuts[1:])) + [(cuts[-1], cuts[0] + arc.length)]
        else:
            params = [0.0] + cuts + [arc.length]
            spans = list(zip(params[:-1], params[1:]))
        for s0, s1 in spans:
            if s1 - s0 <= 1e-12 * arc.length:
                continue
            if s0 == 0.0 and s1 == arc.length:
                sub = arc
            elif s1 > arc.length:
                sub = _wrapped_sub(arc, s0, s1)
            else:
                sub = arc.sub(s0, s1)
            mid = sub.point(0.5 * sub.length)
            shift = np.floor(mid - off + 1e-12)
            pieces.append(Piece(sub.translated(-(off + shift)), idx, arc.straight_tangent))
    ends = []
    for k, pc in enumerate(pieces):
        pts = pc.sample(max(pc.arc.length, 1e-3))
        ends.append((pts[0], k, True))
        ends.append((pts[-1], k, False))
    return UnfoldedPattern(
        tuple(off.tolist()),
        tuple(pieces),
        tuple(_boundary_pairs(ends)),
        tuple(_interior_groups(ends)),
        pattern,
    )


def _wrapped_sub(arc, s0, s1):
    """Sub-arc of a closed arc running from ``s0`` past the closure to ``s1 - L``."""
    L = arc.length
    if isinstance(arc, Circle):
        arc = arc._arc
    if isinstance(arc, CircularArc):
        return CircularArc(arc.center, arc.radius, arc.angle(s0), arc.theta0 + arc.sign * s1 / arc.radius)
    head = arc.sub(s0, L)
    tail = arc.sub(0.0, s1 - L)
    return Polyline(list(head.points) + list(tail.points[1:]))


def _on_boundary(p):
    return bool(np.any((p == 0.0) | (p == 1.0)))


def _boundary_pairs(ends):
    bpts = []
    for p, _, _ in ends:
        if _on_boundary(p) and not any(np.all(np.abs(p - q) < NODE_TOL) for q in bpts):
            bpts.append(p)
    pairs = []
    for a, b in combinations(bpts, 2):
        d = b - a
        if np.all(np.abs(d - np.round(d)) < NODE_TOL) and np.any(np.abs(d) > 0.5):
            pairs.append((tuple(a.tolist()), tuple(b.tolist())))
    return pairs


def _interior_groups(ends):
    groups = []
    for p, k, at_start in ends:
        if _on_boundary(p):
            continue
        for g in groups:
            if np.all(np.abs(p - g[0]) < NODE_TOL):
                g[1].append((k, at_start))
                break
        else:
            groups.append([p, [(k, at_start)]])
    return [(tuple(p.tolist()), tuple(m)) for p, m in groups if len(m) >= 2]


# ---------------------------------------------------------------- discretization


def discretize(pattern, h, length_rtol=DISCRETIZE_RTOL):
    """Polyline approximation of every arc with edges no longer than ``h``.

    Returns a list of ``(arc_index, points)``; endpoints are kept exactly.
    Circular arcs are sampled finer than ``h`` where needed so that the chord
    sum is within ``length_rtol`` of the true length (the relative chord
    error for chord ``c`` is about ``c**2 / (24 r**2)``); chord deviation is
    then at most ``h**2 / (8 r)``.  Segments come back as their two endpoints.
    """
    if not h > 0:
        raise ParameterError("h must be positive")
    out = []
    for i, arc in enumerate(pattern.arcs):
        if isinstance(arc, Segment):
            out.append((i, np.array([arc.start, arc.end])))
        elif isinstance(arc, Polyline) and np.all(np.diff(arc._cum) <= h):
            out.append((i, arc._array.copy()))
        elif isinstance(arc, (Circle, CircularArc)):
            out.append((i, arc.sample(min(h, arc.radius * math.sqrt(24.0 * length_rtol)))))
        else:
            out.append((i, arc.sample(h)))
    return out


def polyline_length(points):
    return float(np.linalg.norm(np.diff(points, axis=0), axis=1).sum())
