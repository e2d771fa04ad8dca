"""Periodic pattern-conforming triangulations of the unit cell.

Pattern polylines (and, for the finite-width model, the offset curves bounding
the one-sided road strips) are constrained edges.  Vertices on the right/top
cell edges are exact copies of those on the left/bottom edges, so the
``periodic_map`` identifies them by exact coordinate equality.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import cached_property

import numpy as np

from .errors import GeometryError, MeshingError, ParameterError
from .pattern import Circle, CircularArc, snap_unit

QUALITY_FLOOR = 20.0
MAX_BOUNDARY_ROUNDS = 6
_EPS = 1e-9


@dataclass(frozen=True, eq=False)
class PeriodicMesh:
    vertices: np.ndarray  # (N, 2) in [0, 1]^2
    triangles: np.ndarray  # (M, 3), counter-clockwise
    pattern_edges: np.ndarray  # (E, 2) vertex indices, oriented along the arc
    pattern_tangents: np.ndarray  # (E, 2)
    pattern_parents: np.ndarray  # (E,)
    periodic_map: np.ndarray  # (N,) master vertex of each vertex
    road: np.ndarray  # (M,) True on road-strip triangles
    h: float
    delta: float = None
    road_polygon: object = None  # shapely geometry of the clipped road region

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_triangles(self):
        return len(self.triangles)

    @cached_property
    def dof(self):
        """Compact degree-of-freedom index of every vertex (shared by periodic copies)."""
        masters = np.unique(self.periodic_map)
        lookup = np.full(self.n_vertices, -1)
        lookup[masters] = np.arange(len(masters))
        return lookup[self.periodic_map]

    @property
    def n_dofs(self):
        return int(self.dof.max() + 1)

    @cached_property
    def areas(self):
        p = self.vertices[self.triangles]
        d1, d2 = p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    @cached_property
    def gradients(self):
        """Gradients of the three P1 hat functions on each triangle, (M, 3, 2)."""
        p = self.vertices[self.triangles]
        area2 = 2.0 * self.areas
        g = np.empty((len(p), 3, 2))
        for i in range(3):
            j, k = (i + 1) % 3, (i + 2) % 3
            e = p[:, k] - p[:, j]
            g[:, i, 0] = -e[:, 1] / area2
            g[:, i, 1] = e[:, 0] / area2
        return g

    @property
    def pattern_lengths(self):
        d = self.vertices[self.pattern_edges[:, 1]] - self.vertices[self.pattern_edges[:, 0]]
        return np.linalg.norm(d, axis=1)

    @cached_property
    def edges(self):
        """Unique undirected edges of the triangulation (in the unfolded cell)."""
        e = np.sort(self.triangles[:, [0, 1, 1, 2, 2, 0]].reshape(-1, 2), axis=1)
        return np.unique(e, axis=0)

    @property
    def road_area(self):
        return float(self.areas[self.road].sum())


# ---------------------------------------------------------------- structured


def structured_mesh(n):
    """Uniform ``n x n`` mesh of the cell with every square cut along its diagonal."""
    if n < 1:
        raise ParameterError("n must be positive")
    t = np.linspace(0.0, 1.0, n + 1)
    X, Y = np.meshgrid(t, t, indexing="xy")
    verts = np.c_[X.ravel(), Y.ravel()]
    idx = lambda i, j: j * (n + 1) + i  # noqa: E731
    tris = []
    for j in range(n):
        for i in range(n):
            a, b, c, d = idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1)
            tris.append((a, b, c))
            tris.append((a, c, d))
    tris = np.array(tris)
    pmap = _periodic_map(verts)
    return PeriodicMesh(
        verts,
        tris,
        np.zeros((0, 2), int),
        np.zeros((0, 2)),
        np.zeros(0, int),
        pmap,
        np.zeros(len(tris), bool),
        1.0 / n,
    )


def _periodic_map(verts):
    """Map right/top boundary vertices onto their exact left/bottom copies."""
    n = len(verts)
    pmap = np.arange(n)
    key = {(x, y): i for i, (x, y) in enumerate(map(tuple, verts))}
    for i, (x, y) in enumerate(map(tuple, verts)):
        mx = 0.0 if x == 1.0 else x
        my = 0.0 if y == 1.0 else y
        if (mx, my) != (x, y):
            j = key.get((mx, my))
            if j is None:
                raise MeshingError(f"boundary vertex ({x}, {y}) has no periodic partner")
            pmap[i] = j
    return pmap


# ---------------------------------------------------------------- constraint geometry


class _Registry:
    """Vertex list with exact-coordinate deduplication and tolerance lookup."""

    def __init__(self):
        self.points = []
        self.index = {}

    def add(self, p):
        p = (float(p[0]), float(p[1]))
        i = self.index.get(p)
        if i is not None:
            return i
        for j, q in enumerate(self.points):
            if abs(q[0] - p[0]) < _EPS and abs(q[1] - p[1]) < _EPS:
                self.index[p] = j
                return j
        self.points.append(p)
        self.index[p] = len(self.points) - 1
        return len(self.points) - 1

    def compact(self):
        """Merge points with identical coordinates; returns the old-to-new index map."""
        new, remap, index = [], [], {}
        for p in self.points:
            if p not in index:
                index[p] = len(new)
                new.append(p)
            remap.append(index[p])
        self.points, self.index = new, index
        return np.array(remap)


def _pattern_polylines(unfolded, hp):
    """Sampled pieces with per-edge tangents, parents and per-vertex left normals."""
    out = []
    for piece in unfolded.pieces:
        pts = piece.sample(hp)
        tans = piece.edge_tangents(pts)
        out.append((pts, tans, piece.parent, _left_normals(piece, pts, tans)))
    return out


def _rot90(v):
    return np.c_[-v[:, 1], v[:, 0]]


def _left_normals(piece, pts, tans):
    """Offset directions for the strip: exact for circular arcs, mitred otherwise.

    Scaling is such that ``pts + delta * n`` lies at normal distance ``delta``
    from the adjacent chords.
    """
    arc = piece.arc._arc if isinstance(piece.arc, Circle) else piece.arc
    if isinstance(arc, CircularArc):
        # counter-clockwise arcs have the centre on their left
        return -arc.sign * (pts - np.asarray(arc.center)) / arc.radius
    en = _rot90(tans)
    n = np.empty_like(pts)
    n[0], n[-1] = en[0], en[-1]
    closed = len(pts) > 2 and np.array_equal(pts[0], pts[-1])
    if len(pts) > 2:
        m = en[:-1] + en[1:]
        cos_half = np.einsum("ij,ij->i", m, en[1:]) / np.linalg.norm(m, axis=1)
        n[1:-1] = m / np.linalg.norm(m, axis=1)[:, None] / cos_half[:, None]
    if closed:
        m = en[-1] + en[0]
        c = m @ en[0] / np.linalg.norm(m)
        n[0] = n[-1] = m / np.linalg.norm(m) / c
    return n


def _check_reach(unfolded, delta):
    for piece in unfolded.pieces:
        arc = piece.arc._arc if isinstance(piece.arc, Circle) else piece.arc
        if isinstance(arc, CircularArc):
            # left side faces the centre for counter-clockwise sweeps
            if arc.sign > 0 and delta >= arc.radius:
                raise GeometryError(
                    f"arc {piece.parent}: strip width {delta} exceeds radius {arc.radius}"
                )


def _strip(pts, normals, delta):
    from shapely.geometry import Polygon

    off = pts + delta * normals
    if np.array_equal(pts[0], pts[-1]):
        strip = Polygon(off).symmetric_difference(Polygon(pts))
    else:
        strip = Polygon(np.concatenate([pts, off[::-1]]))
    return strip if strip.is_valid else strip.buffer(0)


def road_region(polylines, delta):
    """Union of the one-sided strips ``{0 < tau < delta}`` clipped to the cell."""
    import shapely
    import shapely.affinity
    from shapely.geometry import box

    strips = []
    for pts, _, _, normals in polylines:
        base = _strip(pts, normals, delta)
        for sx in (-1, 0, 1):
            for sy in (-1, 0, 1):
                strips.append(shapely.affinity.translate(base, sx, sy))
    region = shapely.make_valid(shapely.unary_union(strips).intersection(box(0.0, 0.0, 1.0, 1.0)))
    # clipping can leave zero-area slivers (lines, points) in a collection
    polys = [g for g in shapely.get_parts(region) if g.area > 0]
    return shapely.unary_union(polys)


def _signed_area(q):
    x, y = q[:, 0], q[:, 1]
    return 0.5 * float(np.sum(x[:-1] * y[1:] - x[1:] * y[:-1]))


def _road_boundary_lines(region, polylines):
    """Parts of the road boundary that are neither pattern nor cell boundary."""
    import shapely
    import shapely.affinity
    from shapely.geometry import MultiLineString, box

    pattern = MultiLineString([pts for pts, _, _, _ in polylines])
    lines = region.boundary.difference(pattern.buffer(1e-9))
    lines = lines.difference(box(0.0, 0.0, 1.0, 1.0).exterior.buffer(1e-9))
    lines = shapely.line_merge(shapely.unary_union(lines))
    out = []
    for g in getattr(lines, "geoms", [lines]):
        if g.is_empty or g.length < 1e-6:
            continue
        out.append(np.array(g.simplify(1e-10).coords))
    return out


def _resample(pts, hmax, corner_deg=10.0):
    """Uniform resampling with spacing at most ``hmax``, keeping sharp corners."""
    d = np.diff(pts, axis=0)
    keep = [0]
    for i in range(1, len(pts) - 1):
        c = d[i - 1] @ d[i] / (np.linalg.norm(d[i - 1]) * np.linalg.norm(d[i]))
        if c < math.cos(math.radians(corner_deg)):
            keep.append(i)
    keep.append(len(pts) - 1)
    out = [pts[:1]]
    for i, j in zip(keep[:-1], keep[1:]):
        part = pts[i : j + 1]
        cum = np.r_[0.0, np.cumsum(np.linalg.norm(np.diff(part, axis=0), axis=1))]
        n = max(1, math.ceil(cum[-1] / hmax - 1e-12))
        s = np.linspace(0.0, cum[-1], n + 1)[1:]
        seg = np.c_[np.interp(s, cum, part[:, 0]), np.interp(s, cum, part[:, 1])]
        seg[-1] = part[-1]
        out.append(seg)
    return np.concatenate(out)


def _snap_endpoint(p, reg_pts, pattern_segs):
    """Snap a road-boundary endpoint onto the cell boundary or the pattern."""
    p = snap_unit(p, 1e-7)
    d = np.linalg.norm(reg_pts - p, axis=1) if len(reg_pts) else np.array([np.inf])
    j = int(np.argmin(d))
    if d[j] < 1e-7:
        return reg_pts[j], None
    best = None
    for k, (a, b) in enumerate(pattern_segs):
        ab = b - a
        t = float(np.clip((p - a) @ ab / (ab @ ab), 0.0, 1.0))
        q = a + t * ab
        dist = np.linalg.norm(p - q)
        if dist < 1e-7 and (best is None or dist < best[0]):
            best = (dist, k, q)
    if best is not None:
        return best[2], best[1]
    return p, None


# ---------------------------------------------------------------- triangle driver


def _merge_coords(base, extra, tol=1e-9):
    """Sorted union of boundary coordinates, dropping near-duplicates of ``base``."""
    base = np.asarray(base, float)
    extra = np.asarray(extra, float)
    extra = extra[np.min(np.abs(extra[:, None] - base[None, :]), axis=1) > tol] if len(extra) else extra
    out = []
    for v in np.sort(extra):
        if not out or v - out[-1] > tol:
            out.append(float(v))
    return sorted(base.tolist() + out)


def _triangulate(points, segments, markers, h, floor, seeds=(), seed_area=None, fixed_boundary=True):
    """One constrained quality triangulation.

    ``seeds`` are points inside road subregions; the subregion around each
    seed (bounded by constrained edges) gets the tighter ``seed_area`` bound.
    """
    import triangle

    data = {
        "vertices": np.asarray(points, float),
        "segments": np.asarray(segments, int),
        "segment_markers": np.asarray(markers, int)[:, None],
    }
    # Triangle's switch parser does not read exponents: fixed-point only
    # Y: no Steiner points on the cell boundary, which keeps it periodic
    opts = f"pq{floor:.6f}a{math.sqrt(3) / 4 * h * h:.15f}" + ("Y" if fixed_boundary else "")
    if len(seeds):
        data["regions"] = np.array([[x, y, 0.0, seed_area] for x, y in seeds])
        opts += "a"
    return triangle.triangulate(data, opts + "Q")


def _road_seeds(region, polylines, delta):
    """Points inside every road subregion cut out by the constrained edges."""
    import shapely

    pts = []
    for p, _, _, normals in polylines:
        mid = 0.5 * (p[:-1] + p[1:])
        nrm = 0.5 * (normals[:-1] + normals[1:])
        pts.append(mid + 0.5 * delta * nrm)
    pts.append(np.array([g.representative_point().coords[0] for g in getattr(region, "geoms", [region]) if g.area > 0]).reshape(-1, 2))
    pts = np.concatenate(pts)
    pts = pts[np.all((pts > 0) & (pts < 1), axis=1)]
    return pts[shapely.contains_xy(region, pts[:, 0], pts[:, 1])]


def _unify_boundary(reg, tol=1e-8):
    """Give boundary points and their periodic partners bit-identical coordinates.

    Offset curves reach the cell boundary with round-off of order 1e-9, so
    partners on opposite edges may differ slightly; the earliest registered
    point (pattern points come first) wins.
    """
    for ax in (0, 1):
        other = 1 - ax
        members = [i for i, p in enumerate(reg.points) if p[ax] in (0.0, 1.0)]
        members.sort(key=lambda i: (reg.points[i][other], i))
        clusters = []
        for i in members:
            v = reg.points[i][other]
            if clusters and abs(v - reg.points[clusters[-1][0]][other]) < tol:
                clusters[-1].append(i)
            else:
                clusters.append([i])
        for c in clusters:
            rep = reg.points[min(c)][other]
            for i in c:
                p = list(reg.points[i])
                p[other] = rep
                reg.points[i] = tuple(p)
    return reg.compact()


def _boundary_points(reg, h, segments, grade=0.3):
    """Boundary vertex coordinates shared by opposite cell edges.

    Spacing is ``h`` away from constraints and shrinks towards points where
    short constrained edges meet the boundary, growing at rate ``grade``.
    """
    pts = np.array(reg.points)
    local = np.full(len(pts), h)
    for a, b in segments:
        ln = float(np.linalg.norm(pts[a] - pts[b]))
        local[a] = min(local[a], ln)
        local[b] = min(local[b], ln)
    out = []
    for ax in (0, 1):
        other = 1 - ax
        on = np.isin(pts[:, other], (0.0, 1.0))
        anchors = {0.0: h, 1.0: h}
        for t, size in zip(pts[on, ax], local[on]):
            anchors[t] = min(anchors.get(t, h), size)
        # constraint vertices close to (but off) the boundary need a boundary
        # spacing comparable to their distance, or Triangle cannot split there
        dist = np.minimum(pts[:, other], 1.0 - pts[:, other])
        for t, d in zip(pts[(dist > 0) & (dist < h), ax], dist[(dist > 0) & (dist < h)]):
            anchors[t] = min(anchors.get(t, h), max(d, 1e-3 * h))
        tv = np.array(sorted(anchors))
        sv = np.array([anchors[t] for t in tv])

        def size(t):
            return np.minimum(h, np.min(sv[None, :] + grade * np.abs(t[:, None] - tv[None, :]), axis=1))

        vals = [tv[0]]
        for a, b in zip(tv[:-1], tv[1:]):
            t = np.linspace(a, b, 201)
            f = 1.0 / size(t)
            cum = np.r_[0.0, np.cumsum(0.5 * (f[1:] + f[:-1]) * np.diff(t))]
            n = max(1, math.ceil(cum[-1] - 1e-9))
            inner = np.interp(np.arange(1, n) * cum[-1] / n, cum, t)
            vals.extend(inner.tolist())
            vals.append(b)
        out.append(vals)
    return out[0], out[1]


def build_mesh(unfolded, h, delta=None, quality_floor=QUALITY_FLOOR):
    """Triangulate the unit cell conforming to the unfolded pattern.

    Parameters
    ----------
    unfolded : UnfoldedPattern
    h : float
        Target edge length away from the pattern.
    delta : float, optional
        Width of the one-sided road strips; when given, the strip boundaries
        are constrained edges, edges inside strips are at most ``delta / 2``
        and triangles carry road/bulk tags.
    quality_floor : float
        Minimum angle in degrees requested from the mesher.
    """
    if not h > 0:
        raise ParameterError("h must be positive")
    if delta is not None and not delta > 0:
        raise ParameterError("delta must be positive")
    if not unfolded.pieces:
        return replace(structured_mesh(max(1, math.ceil(1.0 / h - 1e-12))), delta=delta)
    hp = h if delta is None else min(h, delta / 2)
    if delta is not None:
        _check_reach(unfolded, delta)
    polylines = _pattern_polylines(unfolded, hp)

    reg = _Registry()
    pat = []  # (i, j, tangent, parent)
    for pts, tans, parent, _ in polylines:
        ids = [reg.add(p) for p in pts]
        for (i, j), t in zip(zip(ids[:-1], ids[1:]), tans):
            if i == j:
                raise MeshingError(f"arc {parent}: degenerate edge at resolution {hp}")
            pat.append([i, j, t, parent])

    region = None
    road_lines = []
    if delta is not None:
        region = road_region(polylines, delta)
        for line in _road_boundary_lines(region, polylines):
            ends = []
            for p in (line[0], line[-1]):
                reg_pts = np.array(reg.points)
                segs = [(reg_pts[a], reg_pts[b]) for a, b, _, _ in pat]
                q, k = _snap_endpoint(p, reg_pts, segs)
                if k is not None:
                    # split pattern edge k at q
                    a, b, t, par = pat[k]
                    m = reg.add(q)
                    pat[k] = [a, m, t, par]
                    pat.append([m, b, t, par])
                ends.append(q)
            line = line.copy()
            line[0], line[-1] = ends
            line = snap_unit(_resample(line, hp), 1e-7)
            road_lines.append([reg.add(p) for p in line])

    remap = _unify_boundary(reg)
    pat = [[remap[a], remap[b], t, par] for a, b, t, par in pat]
    road_lines = [[remap[i] for i in chain] for chain in road_lines]
    inner = {}
    for chain in road_lines:
        for a, b in zip(chain[:-1], chain[1:]):
            if a != b:
                inner[(min(a, b), max(a, b))] = 2
    for k, (a, b, _, _) in enumerate(pat):
        inner[(min(a, b), max(a, b))] = 3 + k
    seeds = () if delta is None else _road_seeds(region, polylines, delta)
    xs, ys = _boundary_points(reg, h, inner)
    seed_area = math.sqrt(3) / 4 * hp * hp
    for attempt in range(MAX_BOUNDARY_ROUNDS + 1):
        chains = [
            [reg.add((x, 0.0)) for x in xs],
            [reg.add((x, 1.0)) for x in xs],
            [reg.add((0.0, y)) for y in ys],
            [reg.add((1.0, y)) for y in ys],
        ]
        segs = {}
        for chain in chains:
            for a, b in zip(chain[:-1], chain[1:]):
                segs[(min(a, b), max(a, b))] = 1
        segs.update(inner)
        args = (np.array(reg.points), np.array(list(segs.keys())), np.array(list(segs.values())), h, quality_floor, seeds, seed_area)
        try:
            return _finish(_triangulate(*args), pat, h, delta, region, quality_floor)
        except MeshingError:
            if attempt == MAX_BOUNDARY_ROUNDS:
                raise
        # let Triangle split the boundary freely; if it adds no boundary
        # vertex the result is periodic as it stands, otherwise adopt its
        # boundary vertices on both partner edges and go round again
        free = _triangulate(*args, fixed_boundary=False)
        fv = free["vertices"]
        nx = _merge_coords(xs, fv[np.isin(fv[:, 1], (0.0, 1.0)), 0])
        ny = _merge_coords(ys, fv[np.isin(fv[:, 0], (0.0, 1.0)), 1])
        if len(nx) == len(xs) and len(ny) == len(ys):
            return _finish(free, pat, h, delta, region, quality_floor)
        xs, ys = nx, ny


def _tri_areas(v, t):
    p = v[t]
    d1, d2 = p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]
    return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])


def _finish(out, pat, h, delta, region, floor):
    verts = snap_unit(out["vertices"], 1e-12)
    tris = out["triangles"].astype(int)
    area = _tri_areas(verts, tris)
    flip = area < 0
    tris[flip] = tris[flip][:, [0, 2, 1]]

    seg = out["segments"].astype(int)
    mk = out["segment_markers"].ravel().astype(int)
    pe, pt, pp = [], [], []
    for (a, b), m in zip(seg, mk):
        if m < 3:
            continue
        i, j, t, par = pat[m - 3]
        # orient along the parent edge
        d = verts[b] - verts[a]
        if d @ (verts[j] - verts[i]) < 0:
            a, b = b, a
        pe.append((a, b))
        pt.append(t)
        pp.append(par)
    order = np.lexsort((np.array([p[1] for p in pe]), np.array([p[0] for p in pe]))) if pe else []
    pe = np.array(pe, int).reshape(-1, 2)[order] if pe else np.zeros((0, 2), int)
    pt = np.array(pt, float).reshape(-1, 2)[order] if pt else np.zeros((0, 2))
    pp = np.array(pp, int)[order] if pp else np.zeros(0, int)

    if delta is not None:
        import shapely

        cen = verts[tris].mean(axis=1)
        road = shapely.contains_xy(region, cen[:, 0], cen[:, 1])
    else:
        road = np.zeros(len(tris), bool)
    mesh = PeriodicMesh(verts, tris, pe, pt, pp, _periodic_map(verts), road, h, delta, region)
    q = quality_report(mesh)
    need = _forced_floor(verts, seg, floor)
    if q["min_angle"] < need - 1e-6:
        raise MeshingError(f"minimum angle {q['min_angle']:.3f} deg below quality floor {need:.3f}")
    return mesh


def _forced_floor(verts, segments, floor):
    """Quality floor, lowered near small angles between input constraints.

    Constrained edges (cell boundary included) meeting at a small angle force
    poor triangles nearby; the accepted floor is then half that angle.
    """
    incident = {}
    for a, b in segments:
        incident.setdefault(a, []).append(b)
        incident.setdefault(b, []).append(a)
    smallest = 180.0
    for a, nbrs in incident.items():
        d = verts[nbrs] - verts[a]
        d /= np.linalg.norm(d, axis=1)[:, None]
        c = np.clip(d @ d.T, -1.0, 1.0)
        iu = np.triu_indices(len(nbrs), 1)
        if len(iu[0]):
            smallest = min(smallest, float(np.degrees(np.arccos(c[iu])).min()))
    return min(floor, 0.5 * smallest)


# ---------------------------------------------------------------- refinement & quality


def refine(mesh):
    """Split every triangle into four; all constraints and tags carry over."""
    v = mesh.vertices
    edges = mesh.edges
    key = {tuple(e): len(v) + k for k, e in enumerate(edges)}
    mids = 0.5 * (v[edges[:, 0]] + v[edges[:, 1]])
    verts = np.vstack([v, mids])

    def mid(a, b):
        return key[(min(a, b), max(a, b))]

    t = mesh.triangles
    new_t, new_road = [], []
    for (a, b, c), r in zip(t, mesh.road):
        ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
        new_t += [(a, ab, ca), (ab, b, bc), (ca, bc, c), (ab, bc, ca)]
        new_road += [r] * 4
    pe, pt, pp = [], [], []
    for (a, b), tan, par in zip(mesh.pattern_edges, mesh.pattern_tangents, mesh.pattern_parents):
        m = mid(a, b)
        pe += [(a, m), (m, b)]
        pt += [tan, tan]
        pp += [par, par]
    return PeriodicMesh(
        verts,
        np.array(new_t),
        np.array(pe, int).reshape(-1, 2),
        np.array(pt, float).reshape(-1, 2),
        np.array(pp, int),
        _periodic_map(verts),
        np.array(new_road, bool),
        mesh.h / 2,
        mesh.delta,
        mesh.road_polygon,
    )


def triangle_angles(mesh):
    p = mesh.vertices[mesh.triangles]
    out = np.empty((len(p), 3))
    for i in range(3):
        a = p[:, (i + 1) % 3] - p[:, i]
        b = p[:, (i + 2) % 3] - p[:, i]
        c = np.einsum("ij,ij->i", a, b) / (np.linalg.norm(a, axis=1) * np.linalg.norm(b, axis=1))
        out[:, i] = np.degrees(np.arccos(np.clip(c, -1, 1)))
    return out


def quality_report(mesh):
    ang = triangle_angles(mesh)
    p = mesh.vertices[mesh.triangles]
    lens = np.stack([np.linalg.norm(p[:, (i + 1) % 3] - p[:, i], axis=1) for i in range(3)], 1)
    # aspect: longest edge over the altitude-equivalent 2*sqrt(3)*inradius
    s = lens.sum(1) / 2
    inr = np.abs(mesh.areas) / s
    aspect = lens.max(1) / (2 * math.sqrt(3) * inr)
    road_edges = lens[mesh.road].max() if mesh.road.any() else 0.0
    return {
        "min_angle": float(ang.min()),
        "max_aspect": float(aspect.max()),
        "n_vertices": int(mesh.n_vertices),
        "n_triangles": int(mesh.n_triangles),
        "n_dofs": int(mesh.n_dofs),
        "n_pattern_edges": int(len(mesh.pattern_edges)),
        "max_edge": float(lens.max()),
        "max_road_edge": float(road_edges),
        "area": float(mesh.areas.sum()),
        "road_area": mesh.road_area,
    }


# ---------------------------------------------------------------- text dump


def dump_mesh(mesh, stream, fields=None):
    """Write the plain-text mesh dump.

    Sections, each ``NAME count`` followed by one record per line::

        VERTICES       index x y
        TRIANGLES      index v0 v1 v2
        PATTERN_EDGES  index v0 v1 tx ty parent
        PERIODIC_MAP   index master
        TAGS           index tag            (0 bulk, 1 road)
        FIELD name     index value          (optional, per vertex)
    """
    w = stream.write
    w("# roadnet mesh dump v1\n")
    w(f"# h {float(mesh.h):.17g} delta {_fmt_opt(mesh.delta)}\n")
    w(f"VERTICES {mesh.n_vertices}\n")
    for i, (x, y) in enumerate(mesh.vertices):
        w(f"{i} {x:.17g} {y:.17g}\n")
    w(f"TRIANGLES {mesh.n_triangles}\n")
    for i, (a, b, c) in enumerate(mesh.triangles):
        w(f"{i} {a} {b} {c}\n")
    w(f"PATTERN_EDGES {len(mesh.pattern_edges)}\n")
    for i, ((a, b), (tx, ty), par) in enumerate(zip(mesh.pattern_edges, mesh.pattern_tangents, mesh.pattern_parents)):
        w(f"{i} {a} {b} {tx:.17g} {ty:.17g} {par}\n")
    w(f"PERIODIC_MAP {mesh.n_vertices}\n")
    for i, m in enumerate(mesh.periodic_map):
        w(f"{i} {m}\n")
    w(f"TAGS {mesh.n_triangles}\n")
    for i, r in enumerate(mesh.road):
        w(f"{i} {int(r)}\n")
    for name, values in (fields or {}).items():
        w(f"FIELD {name} {len(values)}\n")
        for i, val in enumerate(values):
            w(f"{i} {float(val):.17g}\n")


def _fmt_opt(x):
    return "None" if x is None else f"{float(x):.17g}"


def load_mesh(stream):
    """Read a mesh dump; returns ``(mesh, fields)``."""
    lines = [ln.strip() for ln in stream if ln.strip()]
    h = delta = None
    sections, fields = {}, {}
    i = 0
    while i < len(lines):
        ln = lines[i]
        if ln.startswith("#"):
            parts = ln[1:].split()
            if parts and parts[0] == "h":
                h = float(parts[1])
                delta = None if parts[3] == "None" else float(parts[3])
            i += 1
            continue
        parts = ln.split()
        if parts[0] == "FIELD":
            name, n = parts[1], int(parts[2])
            fields[name] = np.array([float(r.split()[1]) for r in lines[i + 1 : i + 1 + n]])
        else:
            name, n = parts[0], int(parts[1])
            sections[name] = [r.split()[1:] for r in lines[i + 1 : i + 1 + n]]
        i += 1 + n
    verts = np.array(sections["VERTICES"], float).reshape(-1, 2)
    tris = np.array(sections["TRIANGLES"], int).reshape(-1, 3)
    pe_rows = sections.get("PATTERN_EDGES", [])
    pe = np.array([[int(r[0]), int(r[1])] for r in pe_rows], int).reshape(-1, 2)
    pt = np.array([[float(r[2]), float(r[3])] for r in pe_rows], float).reshape(-1, 2)
    pp = np.array([int(r[4]) for r in pe_rows], int)
    pmap = np.array(sections["PERIODIC_MAP"], int).ravel()
    road = np.array(sections["TAGS"], int).ravel().astype(bool)
    return PeriodicMesh(verts, tris, pe, pt, pp, pmap, road, h, delta), fields


def with_road(mesh, road, delta):
    """Copy of ``mesh`` with explicit road tags (for hand-built test meshes)."""
    return replace(mesh, road=np.asarray(road, bool), delta=delta)
