import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from roadnet import GeometryError, ParameterError, PatternFileError
from roadnet.pattern import (
    Circle,
    CircularArc,
    Polyline,
    Segment,
    TorusPattern,
    discretize,
    polyline_length,
    total_length,
    unfold,
    validate_regularity,
)
from roadnet.patternio import FIXTURES, dumps, load_fixture, loads

offsets = st.tuples(st.floats(0.0, 0.999), st.floats(0.0, 0.999))


def test_total_length_closed_forms():
    assert total_length(load_fixture("horizontal_line")) == pytest.approx(1.0, abs=1e-15)
    assert total_length(load_fixture("diagonal_line")) == pytest.approx(math.sqrt(2), abs=1e-15)
    assert total_length(load_fixture("circle")) == pytest.approx(2 * math.pi * 0.1, abs=1e-15)
    assert total_length(load_fixture("circle_segment")) == pytest.approx(0.2 * math.pi + 0.8, abs=1e-14)
    assert total_length(load_fixture("hexagon")) == pytest.approx(1 + math.sqrt(3), abs=1e-14)
    assert total_length(load_fixture("empty")) == 0.0


def test_unfold_circle_type0_and_split():
    circle = load_fixture("circle")
    u = unfold(circle, (0.0, 0.0))
    assert len(u.pieces) == 1
    assert u.boundary_identifications == ()

    u = unfold(circle, (0.45, 0.0))
    assert len(u.pieces) == 2
    assert len(u.boundary_identifications) == 2


def test_unfold_horizontal_line_identifies_its_ends():
    u = unfold(load_fixture("horizontal_line"))
    assert len(u.pieces) == 1
    p = u.pieces[0].sample(0.1)
    ends = {tuple(p[0]), tuple(p[-1])}
    assert ends == {(0.0, 0.5), (1.0, 0.5)}
    assert u.boundary_identifications == (((0.0, 0.5), (1.0, 0.5)),)


@pytest.mark.parametrize("name", FIXTURES)
@settings(max_examples=15, deadline=None)
@given(off=offsets)
def test_unfold_preserves_length(name, off):
    pattern = load_fixture(name)
    u = unfold(pattern, off)
    assert u.total_length == pytest.approx(total_length(pattern), abs=1e-12)
    for piece in u.pieces:
        pts = piece.sample(0.05)
        assert np.all(pts >= 0.0) and np.all(pts <= 1.0)


@pytest.mark.parametrize("name", ["circle", "circle_segment", "grid", "hexagon", "figure1"])
@settings(max_examples=10, deadline=None)
@given(off=offsets)
def test_identified_pairs_differ_by_lattice_vectors(name, off):
    u = unfold(load_fixture(name), off)
    for a, b in u.boundary_identifications:
        d = np.subtract(b, a)
        assert np.allclose(d, np.round(d), atol=1e-9)
        assert np.abs(np.round(d)).sum() >= 1


def test_unfold_regluing_recovers_the_torus_pattern():
    pattern = load_fixture("circle_segment")
    u = unfold(pattern, (0.3, 0.7))
    # every piece, shifted back by the offset, lies on the original arcs mod 1
    ref = np.concatenate([np.mod(arc.sample(1e-3), 1.0) for arc in pattern.arcs])
    for piece in u.pieces:
        pts = np.mod(piece.sample(0.02) + np.array(u.offset), 1.0)
        dist = np.min(np.linalg.norm(pts[:, None, :] - ref[None, :, :], axis=2), axis=1)
        dist = np.minimum(dist, np.min(np.linalg.norm(np.mod(pts + 0.5, 1)[:, None] - np.mod(ref + 0.5, 1)[None], axis=2), axis=1))
        assert dist.max() < 1e-3


def test_unfold_rejects_offsets_outside_the_cell():
    with pytest.raises(ParameterError):
        unfold(load_fixture("circle"), (1.0, 0.0))


def test_discretize_segment_is_itself():
    pattern = TorusPattern("s", [Segment((0.1, 0.2), (0.7, 0.4))])
    ((_, pts),) = discretize(pattern, 0.01)
    assert np.array_equal(pts, [[0.1, 0.2], [0.7, 0.4]])


def test_discretize_circle():
    ((_, pts),) = discretize(load_fixture("circle"), 0.02)
    assert len(pts) - 1 >= math.ceil(2 * math.pi * 0.1 / 0.02)
    assert np.all(np.linalg.norm(np.diff(pts, axis=0), axis=1) <= 0.02 + 1e-15)
    assert polyline_length(pts) == pytest.approx(0.2 * math.pi, rel=1e-3)
    assert np.array_equal(pts[0], pts[-1])


def test_discretize_circle_error_is_second_order():
    exact = 0.2 * math.pi
    # length_rtol=1 leaves the step at h so the pure chord error is measured
    errs = [exact - polyline_length(discretize(load_fixture("circle"), h, 1.0)[0][1]) for h in (0.04, 0.02, 0.01)]
    assert all(e > 0 for e in errs)
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.15)
    assert errs[1] / errs[2] == pytest.approx(4.0, rel=0.15)


def test_discretize_keeps_fine_polylines():
    pts = [(0.1, 0.1), (0.105, 0.11), (0.11, 0.1)]
    ((_, out),) = discretize(TorusPattern("p", [Polyline(pts)]), 0.05)
    assert np.array_equal(out, pts)


def test_discretize_rejects_nonpositive_h():
    with pytest.raises(ParameterError):
        discretize(load_fixture("circle"), 0.0)


@pytest.mark.parametrize(
    "make",
    [
        lambda: Segment((0.2, 0.2), (0.2, 0.2)),
        lambda: Circle((0.5, 0.5), 0.0),
        lambda: Circle((0.5, 0.5), -0.1),
        lambda: CircularArc((0.5, 0.5), 0.1, 1.0, 1.0),
        lambda: Polyline([(0.1, 0.1)]),
        lambda: Polyline([(0.1, 0.1), (0.1, 0.1), (0.2, 0.3)]),
    ],
)
def test_malformed_arcs(make):
    with pytest.raises(GeometryError):
        make()


def test_validate_grid_passes():
    rep = validate_regularity(load_fixture("grid"))
    assert rep.ok
    (node,) = rep.nodes
    assert sorted(round(a, 9) for a in node.angles) == [90.0, 90.0, 90.0, 90.0, 180.0, 180.0]


def test_validate_flags_tangential_node():
    pattern = load_fixture("tangential_node")
    rep = validate_regularity(pattern, math.radians(2.0))
    assert not rep.ok
    bad = [n for n in rep.nodes if not n.ok]
    assert len(bad) == 1 and np.allclose(bad[0].position, (0.5, 0.5))
    assert bad[0].angles[0] == pytest.approx(1.0, abs=1e-9)
    assert "FAIL" in rep.format()


def test_validate_figure1_warns_about_collinear_arcs():
    rep = validate_regularity(load_fixture("figure1"))
    assert rep.ok
    assert len(rep.warnings) == 1 and "arcs 2 and 3" in rep.warnings[0]


def test_interior_crossing_is_rejected():
    pattern = TorusPattern("x", [Segment((0.2, 0.5), (0.8, 0.5)), Segment((0.5, 0.2), (0.5, 0.8))])
    with pytest.raises(GeometryError):
        validate_regularity(pattern)


def test_node_snapping():
    eps = 1e-10
    pattern = TorusPattern("v", [Segment((0.5, 0.5), (0.8, 0.5)), Segment((0.5 + eps, 0.5), (0.5, 0.8))])
    assert any(len(n.arcs) == 2 for n in pattern.nodes)


def test_pattern_json_round_trip():
    for name in FIXTURES:
        p = load_fixture(name)
        q = loads(dumps(p))
        assert q.name == p.name
        assert total_length(q) == total_length(p)


@pytest.mark.parametrize(
    "text",
    [
        '{"name": "x", "arcs": [{"type": "segment", "p": [0, 0]}]}',
        '{"name": "x", "arcs": [{"type": "blob"}]}',
        '{"name": "x", "arcs": [], "colour": 1}',
        '{"name": "x", "arcs": [{"type": "circle", "center": [0.5, 0.5], "radius": "big"}]}',
        '{"name": "x", "arcs": [',
    ],
)
def test_bad_pattern_files(text):
    with pytest.raises(PatternFileError):
        loads(text)


def test_parse_error_reports_position():
    with pytest.raises(PatternFileError) as exc:
        loads('{\n  "name": "x",\n  "arcs": [\n')
    assert exc.value.line is not None and exc.value.column is not None
