"""Shared oracles and pattern generators for the test suite."""

from collections import deque

import numpy as np

from roadnet.pattern import Polyline, TorusPattern

CONNECTED = ("horizontal_line", "diagonal_line", "grid", "hexagon", "circle", "circle_segment")


def star_pattern(rng, name="star"):
    """A closed star-shaped polygon around a random centre (may wrap the cell)."""
    n = int(rng.integers(5, 10))
    c = rng.uniform(0.0, 1.0, 2)
    th = np.sort(rng.uniform(0.0, 2 * np.pi, n))
    r = rng.uniform(0.12, 0.3, n)
    pts = [tuple(c + ri * np.array([np.cos(t), np.sin(t)])) for ri, t in zip(r, th)]
    return TorusPattern(f"{name}{n}", [Polyline(pts + [pts[0]])])


def random_star_patterns(count, seed=2024):
    rng = np.random.default_rng(seed)
    return [star_pattern(rng, f"star{i}_") for i in range(count)]


def conductance_d2(graph, k):
    """``min_u int (T_k - u_s)^2`` from the cycle space instead of the vertex Laplacian.

    The optimal residual flow is divergence free, so with a fundamental cycle
    basis ``C`` (spanning forest by BFS), edge resistances ``R = diag(len)`` and
    periods ``p = C^T omega`` of the 1-form ``omega_e = T_k(e) len_e`` the
    minimum equals ``p^T (C^T R C)^{-1} p``.
    """
    n, edges = graph.n_vertices, graph.edges
    m = len(edges)
    adj = [[] for _ in range(n)]
    for e, (a, b) in enumerate(edges):
        adj[a].append((e, b, +1.0))
        adj[b].append((e, a, -1.0))
    path = [None] * n  # signed edge vector of the tree path root -> v
    tree = np.zeros(m, bool)
    for root in range(n):
        if path[root] is not None:
            continue
        path[root] = np.zeros(m)
        queue = deque([root])
        while queue:
            v = queue.popleft()
            for e, w, s in adj[v]:
                if path[w] is None:
                    path[w] = path[v].copy()
                    path[w][e] += s
                    tree[e] = True
                    queue.append(w)
    cycles = []
    for e in np.flatnonzero(~tree):
        a, b = edges[e]
        c = path[a] - path[b]
        c[e] += 1.0
        cycles.append(c)
    if not cycles:
        return 0.0
    C = np.array(cycles).T
    omega = graph.tangents[:, k] * graph.lengths
    p = C.T @ omega
    K = C.T @ (graph.lengths[:, None] * C)
    return float(p @ np.linalg.solve(K, p))


def annulus_area(r, delta):
    return np.pi * ((r + delta) ** 2 - r**2)
