import numpy as np
import pytest

from roadnet import check_balance
from roadnet.pattern import Polyline, Segment, TorusPattern
from roadnet.patternio import load_fixture


def test_grid_is_balanced():
    rep = check_balance(load_fixture("grid"))
    assert rep.is_balanced
    assert all(np.array_equal(r, [0.0, 0.0]) for _, r in rep.residuals)


def test_hexagon_is_balanced():
    rep = check_balance(load_fixture("hexagon"))
    assert rep.is_balanced
    assert len(rep.residuals) == 4
    assert max(np.hypot(*r) for _, r in rep.residuals) <= 1e-15


def test_t_junction_residual():
    rep = check_balance(load_fixture("t_junction"))
    assert not rep.is_balanced and rep.straight_ok
    (res,) = [r for pos, r in rep.residuals if np.allclose(pos, (0.5, 0.5))]
    assert np.allclose(res, (0.0, 1.0), atol=1e-15)
    # the three free ends are nodes with a single arc
    assert not rep.node_degree_ok and len(rep.low_degree_nodes) == 3


def test_circle_is_not_straight():
    rep = check_balance(load_fixture("circle"))
    assert not rep.straight_ok and rep.non_straight_arcs == [0]
    assert not rep.is_balanced


@pytest.mark.parametrize("name", ["horizontal_line", "diagonal_line"])
def test_node_free_lines_are_vacuously_balanced(name):
    rep = check_balance(load_fixture(name))
    assert rep.is_balanced and rep.residuals == []


def test_straight_polyline_counts_as_straight():
    line = Polyline([(0.0, 0.25), (0.4, 0.25), (1.0, 0.25)])
    assert check_balance(TorusPattern("p", [line])).is_balanced
    bent = Polyline([(0.0, 0.25), (0.4, 0.26), (1.0, 0.25)])
    assert not check_balance(TorusPattern("p", [bent])).straight_ok


@pytest.mark.parametrize("name", ["grid", "hexagon", "t_junction", "figure1"])
def test_translation_invariance(name):
    pattern = load_fixture(name)
    shift = np.array([0.137, 0.291])
    moved = TorusPattern(name, [arc.translated(shift) for arc in pattern.arcs])
    a, b = check_balance(pattern), check_balance(moved)
    assert a.is_balanced == b.is_balanced
    key = lambda r: tuple(np.round(r, 12))  # noqa: E731
    ra = sorted(key(r) for _, r in a.residuals)
    rb = sorted(key(r) for _, r in b.residuals)
    assert ra == rb


def test_tolerance_is_respected():
    pattern = load_fixture("t_junction")
    assert not check_balance(pattern, 0.999).balance_ok
    assert check_balance(pattern, 1.001).balance_ok


def test_report_formats():
    rep = check_balance(load_fixture("t_junction"))
    assert "balanced        : NO" in rep.format()
    rows = rep.csv_rows().splitlines()
    assert rows[0] == "node_x,node_y,res_x,res_y,norm"
    assert rows[-1] == "is_balanced,0"
