"""Function spaces on the pattern graph and the distances ``d_k#`` and ``d``.

Functions on the pattern are continuous and piecewise linear on a 1D mesh of
the unfolded pattern.  With ``periodic=True`` boundary points identified by the
torus quotient share one vertex, so the graph is the pattern on the torus;
otherwise the unfolded pieces stay cut open at the cell boundary.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components
from scipy.sparse.linalg import spsolve
from scipy.spatial import cKDTree

from ._parallel import pmap
from .errors import DegenerateInputError, DomainError, ParameterError
from .pattern import NODE_TOL, unfold


@dataclass(frozen=True, eq=False)
class PatternGraph:
    vertices: np.ndarray  # (N, 2)
    edges: np.ndarray  # (E, 2) vertex indices
    lengths: np.ndarray  # (E,)
    tangents: np.ndarray  # (E, 2) unit tangents
    parents: np.ndarray  # (E,) parent arc index
    labels: np.ndarray  # (N,) connected component label
    periodic: bool

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_components(self):
        return int(self.labels.max() + 1) if len(self.labels) else 0

    @property
    def total_length(self):
        return float(self.lengths.sum())

    def incidence(self):
        """Signed edge-vertex incidence (E x N): +1 at the head, -1 at the tail."""
        e = len(self.edges)
        rows = np.r_[np.arange(e), np.arange(e)]
        cols = np.r_[self.edges[:, 1], self.edges[:, 0]]
        vals = np.r_[np.ones(e), -np.ones(e)]
        return sp.csr_matrix((vals, (rows, cols)), shape=(e, self.n_vertices))

    def seminorm(self, u):
        """``p(u) = (integral of u_s^2)^(1/2)`` for a piecewise-linear ``u``."""
        du = u[self.edges[:, 1]] - u[self.edges[:, 0]]
        return float(np.sqrt(np.sum(du**2 / self.lengths)))


def _merge_points(points, periodic, tol=NODE_TOL):
    """Index points so that coincident ones (mod 1 when periodic) share an id."""
    pts = np.array(points, dtype=float)
    if periodic:
        pts = np.mod(pts, 1.0)
        pts[pts >= 1.0 - tol] = 0.0
        tree = cKDTree(pts, boxsize=1.0)
    else:
        tree = cKDTree(pts)
    pairs = tree.query_pairs(tol, output_type="ndarray")
    n = len(pts)
    if len(pairs):
        g = sp.coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(n, n))
        _, lab = connected_components(g, directed=False)
    else:
        lab = np.arange(n)
    # relabel in order of first appearance, representative = first point
    uniq, first, inv = np.unique(lab, return_index=True, return_inverse=True)
    order = np.argsort(first)
    rank = np.empty_like(order)
    rank[order] = np.arange(len(order))
    ids = rank[inv]
    return ids, pts[np.sort(first)]


def build_graph(unfolded, h, periodic=True):
    """1D P1 mesh of the unfolded pattern with edges no longer than ``h``."""
    if not h > 0:
        raise ParameterError("h must be positive")
    pts_all, edges, lengths, tangents, parents = [], [], [], [], []
    base = 0
    for piece in unfolded.pieces:
        pts = piece.sample(h)
        t = piece.edge_tangents(pts)
        n = len(pts)
        pts_all.append(pts)
        idx = np.arange(base, base + n)
        edges.append(np.c_[idx[:-1], idx[1:]])
        lengths.append(np.linalg.norm(np.diff(pts, axis=0), axis=1))
        tangents.append(t)
        parents.append(np.full(n - 1, piece.parent))
        base += n
    if not pts_all:
        empty = np.zeros((0, 2))
        return PatternGraph(empty, np.zeros((0, 2), int), np.zeros(0), empty, np.zeros(0, int), np.zeros(0, int), periodic)
    ids, verts = _merge_points(np.concatenate(pts_all), periodic)
    edges = ids[np.concatenate(edges)]
    nv = len(verts)
    adj = sp.coo_matrix((np.ones(len(edges)), (edges[:, 0], edges[:, 1])), shape=(nv, nv))
    _, labels = connected_components(adj, directed=False)
    return PatternGraph(
        verts,
        edges,
        np.concatenate(lengths),
        np.concatenate(tangents),
        np.concatenate(parents),
        labels,
        periodic,
    )


def kernel_dim(graph):
    """Dimension of the locally-constant kernel = number of components."""
    return graph.n_components


def poincare_ratio(graph, u):
    """``||u - <u>||^2 / (l^2 p(u)^2)`` on a connected graph; at most 1."""
    if graph.n_components != 1:
        raise DomainError(f"graph has {graph.n_components} components; need a connected graph")
    u = np.asarray(u, dtype=float)
    p2 = graph.seminorm(u) ** 2
    if not p2 > 0:
        raise DegenerateInputError("u has zero tangential seminorm")
    a, b = u[graph.edges[:, 0]], u[graph.edges[:, 1]]
    length = graph.total_length
    mean = np.sum(graph.lengths * (a + b) / 2) / length
    a, b = a - mean, b - mean
    l2 = np.sum(graph.lengths * (a * a + a * b + b * b) / 3)
    return float(l2 / (length**2 * p2))


def _harmonic_residual(graph, k):
    """Least-squares fit of a potential to the 1-form ``T_k ds``.

    Returns ``(u, d2)`` with ``d2 = min_u integral (T_k - u_s)^2 ds``.
    """
    if len(graph.edges) == 0:
        return np.zeros(graph.n_vertices), 0.0
    B = graph.incidence()
    W = sp.diags(1.0 / graph.lengths)
    omega = graph.tangents[:, k] * graph.lengths  # integral of d(x_k) along each edge
    L = (B.T @ W @ B).tocsr()
    rhs = B.T @ (W @ omega)
    # one pinned vertex per component removes the locally constant kernel
    pinned = np.unique(graph.labels, return_index=True)[1]
    free = np.setdiff1d(np.arange(graph.n_vertices), pinned)
    u = np.zeros(graph.n_vertices)
    if len(free):
        u[free] = spsolve(L[free][:, free].tocsc(), rhs[free])
    r = omega - B @ u
    return u, float(np.sum(r**2 / graph.lengths))


def compute_dk(unfolded, k, h):
    """Distance ``d_k#`` of the coordinate ``x_k`` from periodic graph functions.

    ``d_k# = min over periodic u of (integral ((x_k)_s - u_s)^2 ds)^(1/2)``,
    evaluated on the periodic pattern graph at resolution ``h``.
    """
    if k not in (0, 1):
        raise ParameterError("k must be 0 or 1")
    g = build_graph(unfolded, h, periodic=True)
    return float(np.sqrt(max(_harmonic_residual(g, k)[1], 0.0)))


@dataclass
class DResult:
    d: float
    d_squared: float
    argmax: tuple
    table: list  # rows (offset_x, offset_y, d1sq, d2sq, sum, components)

    def csv(self):
        lines = ["offset_x,offset_y,d1sq,d2sq,sum,components"]
        for ox, oy, d1, d2, s, c in self.table:
            lines.append(f"{ox:.6f},{oy:.6f},{d1:.12e},{d2:.12e},{s:.12e},{c}")
        lines.append(f"# d={self.d:.12e} d_squared={self.d_squared:.12e} argmax=({self.argmax[0]:.6f},{self.argmax[1]:.6f})")
        return "\n".join(lines) + "\n"


def feature_offsets(pattern, limit=8):
    """Offsets placing the cell boundary midway between pattern features."""
    coords = [[], []]
    for arc in pattern.arcs:
        pts = np.mod(arc.sample(arc.length / 16), 1.0)
        for ax in (0, 1):
            coords[ax].extend([pts[:, ax].min(), pts[:, ax].max(), pts[len(pts) // 2, ax]])
    for pos in pattern.junction_points:
        coords[0].append(pos[0])
        coords[1].append(pos[1])
    mids = []
    for ax in (0, 1):
        c = np.unique(np.round(np.mod(coords[ax], 1.0), 12))
        if len(c) == 0:
            mids.append(np.array([0.5]))
            continue
        nxt = np.r_[c[1:], c[0] + 1.0]
        m = np.mod((c + nxt) / 2, 1.0)
        if len(m) > limit:
            m = m[np.linspace(0, len(m) - 1, limit).round().astype(int)]
        mids.append(np.sort(m))
    return [(float(x), float(y)) for x in mids[0] for y in mids[1]]


def d_at_offset(pattern, offset, h):
    """``((d_1#)^2, (d_2#)^2, components of the unfolded graph)`` at one offset."""
    u = unfold(pattern, offset)
    g = build_graph(u, h, periodic=True)
    d1 = _harmonic_residual(g, 0)[1]
    d2 = _harmonic_residual(g, 1)[1]
    comps = build_graph(u, h, periodic=False).n_components
    return d1, d2, comps


def compute_d(pattern, grid_n=16, h=0.02):
    """Maximize ``(d_1#)^2 + (d_2#)^2`` over translations of the coordinate system.

    The maximum is taken over a ``grid_n x grid_n`` grid of offsets together
    with offsets that put the cell boundary between pattern features.  This is
    a sampled maximum, not a certified one.
    """
    if grid_n < 1:
        raise ParameterError("grid_n must be at least 1")
    grid = [(i / grid_n, j / grid_n) for i, j in itertools.product(range(grid_n), repeat=2)]
    offsets = sorted(set(grid) | set(feature_offsets(pattern)))
    rows = pmap(lambda off: (off, d_at_offset(pattern, off, h)), offsets)
    table = [(ox, oy, d1, d2, d1 + d2, c) for (ox, oy), (d1, d2, c) in rows]
    best = max(table, key=lambda r: r[4])
    d2 = max(best[4], 0.0)
    return DResult(float(np.sqrt(d2)), d2, (best[0], best[1]), table)
