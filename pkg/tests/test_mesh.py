import io
import math
from collections import Counter
from functools import lru_cache

import numpy as np
import pytest
from _helpers import annulus_area, random_star_patterns

from roadnet import GeometryError, ParameterError
from roadnet.mesh import (
    QUALITY_FLOOR,
    build_mesh,
    dump_mesh,
    load_mesh,
    quality_report,
    refine,
    structured_mesh,
)
from roadnet.pattern import CircularArc, TorusPattern, polyline_length, unfold
from roadnet.patternio import FIXTURES, load_fixture

OFFSETS = [(0.0, 0.0), (0.3, 0.7), (0.45, 0.1)]
CASES = [(n, off, d) for n in FIXTURES for off in OFFSETS for d in (None, 0.02)]


@lru_cache(maxsize=None)
def cached_mesh(name, off, delta, h=None):
    h = (0.05 if delta is None else delta) if h is None else h
    return build_mesh(unfold(load_fixture(name), off), h, delta)


def edge_counts(mesh):
    e = np.sort(mesh.triangles[:, [0, 1, 1, 2, 2, 0]].reshape(-1, 2), axis=1)
    return Counter(map(tuple, e))


def on_boundary(p):
    return bool(np.any((p == 0.0) | (p == 1.0)))


def test_empty_pattern_structured():
    m = build_mesh(unfold(load_fixture("empty")), 0.25)
    assert m.n_vertices == 25 and m.n_triangles == 32
    assert len(m.pattern_edges) == 0
    assert quality_report(m)["min_angle"] == pytest.approx(45.0, abs=1e-12)
    assert m.n_dofs == 16


def test_structured_mesh_min_angle():
    assert quality_report(structured_mesh(7))["min_angle"] == pytest.approx(45.0, abs=1e-12)


def test_horizontal_line_conformity():
    m = build_mesh(unfold(load_fixture("horizontal_line")), 0.1)
    mesh_edges = set(edge_counts(m))
    assert len(m.pattern_edges) == 10
    xs = sorted(m.vertices[m.pattern_edges].reshape(-1, 2)[:, 0])
    assert np.allclose(np.unique(xs), np.linspace(0, 1, 11), atol=1e-12)
    for a, b in m.pattern_edges:
        assert (min(a, b), max(a, b)) in mesh_edges
        assert m.vertices[a, 1] == 0.5 and m.vertices[b, 1] == 0.5


@pytest.mark.parametrize("name,off,delta", CASES)
def test_mesh_invariants(name, off, delta):
    m = cached_mesh(name, off, delta)
    v = m.vertices
    # positive orientation and unit area
    assert np.all(m.areas > 0)
    assert m.areas.sum() == pytest.approx(1.0, abs=1e-10)
    assert m.areas[m.road].sum() + m.areas[~m.road].sum() == pytest.approx(m.areas.sum(), abs=1e-14)
    # watertight: interior edges twice, cell-boundary edges once
    for (a, b), c in edge_counts(m).items():
        both_on_side = any(v[a, ax] == v[b, ax] and v[a, ax] in (0.0, 1.0) for ax in (0, 1))
        assert c == (1 if both_on_side else 2)
    # periodic partners are exact lattice translates
    for i, j in enumerate(m.periodic_map):
        if i != j:
            d = v[i] - v[j]
            assert np.all(np.isin(d, (0.0, 1.0))) and d.sum() >= 1.0
    # every boundary vertex on the left/bottom edges has its right/top partner
    left = {y for x, y in v if x == 0.0}
    right = {y for x, y in v if x == 1.0}
    assert left == right
    assert {x for x, y in v if y == 0.0} == {x for x, y in v if y == 1.0}
    # conformity: pattern edges are mesh edges and cover the pattern length
    mesh_edges = set(edge_counts(m))
    for a, b in m.pattern_edges:
        assert (min(a, b), max(a, b)) in mesh_edges
    hp = m.h if delta is None else min(m.h, delta / 2)
    sampled = sum(polyline_length(pc.sample(hp)) for pc in unfold(load_fixture(name), off).pieces)
    assert m.pattern_lengths.sum() == pytest.approx(sampled, abs=1e-12)
    # quality
    if name != "tangential_node":
        assert quality_report(m)["min_angle"] > 2.0


@pytest.mark.parametrize("name", ["grid", "hexagon", "circle", "circle_segment", "horizontal_line"])
def test_quality_floor_holds_away_from_small_input_angles(name):
    m = cached_mesh(name, (0.3, 0.7), None)
    assert quality_report(m)["min_angle"] >= QUALITY_FLOOR - 1e-6


def test_pattern_edges_lie_on_the_pattern():
    m = cached_mesh("circle", (0.0, 0.0), None)
    r = np.linalg.norm(m.vertices[m.pattern_edges.ravel()] - 0.5, axis=1)
    assert np.allclose(r, 0.1, atol=1e-12)
    # tangents follow the edge direction
    d = m.vertices[m.pattern_edges[:, 1]] - m.vertices[m.pattern_edges[:, 0]]
    assert np.all(np.einsum("ij,ij->i", d, m.pattern_tangents) > 0)


def test_circle_road_area_matches_annulus():
    m = build_mesh(unfold(load_fixture("circle")), 0.01, 0.02)
    assert m.road_area == pytest.approx(annulus_area(0.1, 0.02), rel=0.02)
    assert quality_report(m)["max_road_edge"] <= 0.02 / 2 * 1.5


@pytest.mark.parametrize("delta", [0.04, 0.02, 0.01])
def test_road_area_close_to_delta_times_length(delta):
    m = cached_mesh("horizontal_line", (0.0, 0.0), delta)
    assert m.road_area == pytest.approx(delta, rel=1e-9)
    # the strip lies on the left (above) the rightward line
    cen = m.vertices[m.triangles[m.road]].mean(axis=1)
    assert np.all((cen[:, 1] > 0.5) & (cen[:, 1] < 0.5 + delta))


def test_strip_wider_than_radius_is_rejected():
    ccw = TorusPattern("ccw", [CircularArc((0.5, 0.5), 0.05, 0.0, 2 * math.pi)])
    with pytest.raises(GeometryError, match="arc 0"):
        build_mesh(unfold(ccw), 0.02, 0.06)


def test_parameter_errors():
    u = unfold(load_fixture("circle"))
    with pytest.raises(ParameterError):
        build_mesh(u, 0.0)
    with pytest.raises(ParameterError):
        build_mesh(u, 0.05, -0.01)


@pytest.mark.parametrize("name,delta", [("circle", None), ("figure1", 0.02), ("hexagon", None)])
def test_refine_bookkeeping(name, delta):
    m = cached_mesh(name, (0.3, 0.7), delta)
    r = refine(m)
    assert r.n_vertices == m.n_vertices + len(m.edges)
    assert r.n_triangles == 4 * m.n_triangles
    assert len(r.pattern_edges) == 2 * len(m.pattern_edges)
    assert r.h == m.h / 2
    assert r.areas.sum() == pytest.approx(1.0, abs=1e-10)
    assert r.road_area == pytest.approx(m.road_area, abs=1e-12)
    assert np.array_equal(r.periodic_map[: m.n_vertices], m.periodic_map)
    assert r.n_dofs == m.n_dofs + len(m.edges) - sum(1 for a, b in m.edges if _boundary_partner_edge(m, a, b))
    mesh_edges = set(edge_counts(r))
    for a, b in r.pattern_edges:
        assert (min(a, b), max(a, b)) in mesh_edges


def _boundary_partner_edge(m, a, b):
    """Edge on the right/top side (its midpoint is a periodic copy)."""
    v = m.vertices
    return any(v[a, ax] == v[b, ax] == 1.0 for ax in (0, 1))


def test_dump_round_trip_and_determinism():
    m = cached_mesh("figure1", (0.3, 0.7), 0.02)
    buf = io.StringIO()
    dump_mesh(m, buf, {"w1": np.arange(m.n_vertices) / 7.0})
    text = buf.getvalue()
    back, fields = load_mesh(io.StringIO(text))
    assert np.array_equal(back.vertices, m.vertices)
    assert np.array_equal(back.triangles, m.triangles)
    assert np.array_equal(back.pattern_edges, m.pattern_edges)
    assert np.array_equal(back.pattern_tangents, m.pattern_tangents)
    assert np.array_equal(back.periodic_map, m.periodic_map)
    assert np.array_equal(back.road, m.road)
    assert back.h == m.h and back.delta == m.delta
    assert np.array_equal(fields["w1"], np.arange(m.n_vertices) / 7.0)
    again = io.StringIO()
    dump_mesh(build_mesh(unfold(load_fixture("figure1"), (0.3, 0.7)), 0.02, 0.02), again, {"w1": np.arange(m.n_vertices) / 7.0})
    assert again.getvalue() == text


def test_random_star_patterns_mesh():
    for p in random_star_patterns(20):
        m = build_mesh(unfold(p), 0.04)
        assert m.areas.sum() == pytest.approx(1.0, abs=1e-10)
        assert quality_report(m)["min_angle"] > 2.0
