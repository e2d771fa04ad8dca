import math
from functools import lru_cache

import numpy as np
import pytest

from roadnet import ParameterError, fem, tensor
from roadnet.mesh import build_mesh
from roadnet.pattern import CircularArc, TorusPattern, unfold
from roadnet.patternio import FIXTURES, load_fixture

SOLVABLE = [n for n in FIXTURES if n != "tangential_node"]

# circle r = 0.1, a = 1, h = 0.02, offset (0, 0); frozen from a verified run
CIRCLE_ROW = "circle,effective,1,,0.02,1.05369550142,1.14417348763e-06,1.05369457244,2.10739007386,,2.62730969811"


@lru_cache(maxsize=None)
def effective(name, a, h=0.05, off=(0.3, 0.7)):
    return tensor.solve_effective(load_fixture(name), a, h, off)


def test_empty_is_identity():
    t, m, f = effective("empty", 1.0)
    assert np.array_equal(t.S, np.eye(2))
    assert np.array_equal(tensor.sigma0_energy(m, 1.0, f).S, np.eye(2))
    ti = tensor.trace_identity(m, 1.0, f)
    assert ti.trace == 2.0 and ti.rhs == 2.0


@pytest.mark.parametrize("a", [0.5, 2.0, 7.0])
def test_horizontal_line_oracle(a):
    t, _, _ = effective("horizontal_line", a)
    assert np.allclose(t.S, np.diag([1 + a, 1.0]), rtol=0, atol=1e-12)


def test_diagonal_line_oracle():
    a = 1.0
    t, _, _ = effective("diagonal_line", a)
    expect = np.eye(2) + a * math.sqrt(2) / 2 * np.ones((2, 2))
    assert np.allclose(t.S, expect, rtol=0, atol=1e-12)
    assert t.trace == pytest.approx(2 + a * math.sqrt(2), abs=1e-12)


def test_grid_is_one_plus_a():
    t, m, f = effective("grid", 3.0)
    assert np.allclose(t.S, 4.0 * np.eye(2), rtol=0, atol=1e-12)
    assert np.allclose(tensor.sigma0_energy(m, 3.0, f).S, 4.0 * np.eye(2), rtol=0, atol=1e-12)


def test_circle_is_isotropic_and_bounded():
    t, _, _ = effective("circle", 1.0, 0.02, (0.0, 0.0))
    assert abs(t.S[0, 1]) < 1e-3
    assert t.S[0, 0] == pytest.approx(t.S[1, 1], rel=1e-3)
    assert 2.0 < t.trace < 2.0 + 2 * math.pi * 0.1


def test_circle_regression_row():
    t, _, _ = effective("circle", 1.0, 0.02, (0.0, 0.0))
    got = t.row().split(",")
    ref = CIRCLE_ROW.split(",")
    assert got[:5] == ref[:5]
    for g, r in zip(got[5:11], ref[5:]):
        if r:
            assert float(g) == pytest.approx(float(r), abs=1e-6)


@pytest.mark.parametrize("name", SOLVABLE)
@pytest.mark.parametrize("a", [0.5, 5.0])
def test_flux_and_energy_formulas_agree(name, a):
    t, m, f = effective(name, a)
    e = tensor.sigma0_energy(m, a, f)
    assert np.abs(t.S - e.S).max() <= 1e-10 * np.abs(e.S).max()
    assert np.array_equal(e.S, e.S.T)
    assert t.symmetry_defect <= 1e-10 * (1 + np.abs(t.S).max())
    ti = tensor.trace_identity(m, a, f)
    assert ti.relative_defect <= 1e-10
    lo, hi = t.eigenvalues
    assert lo >= 1 - 1e-9 and hi <= 1 + a * t.length + 1e-9


def test_trace_identity_balanced_has_zero_energy():
    t, m, f = effective("hexagon", 2.0)
    ti = tensor.trace_identity(m, 2.0, f)
    assert ti.energy1 == 0.0 and ti.energy2 == 0.0
    assert ti.trace == pytest.approx(2 + 2.0 * (1 + math.sqrt(3)), rel=1e-12)


def test_field_mismatch_is_rejected():
    _, m, f = effective("circle", 1.0)
    _, m2, f2 = effective("figure1", 1.0)
    with pytest.raises(ParameterError):
        tensor.sigma0(m, 1.0, f2)
    with pytest.raises(ParameterError):
        tensor.sigma0(m, 1.0, f[::-1])
    with pytest.raises(ParameterError):
        tensor.sigma_delta(m, 1.0, f)


def test_sigma_delta_empty_is_identity():
    t, _, _ = tensor.solve_delta(load_fixture("empty"), 1.0, 0.05)
    assert np.allclose(t.S, np.eye(2), atol=1e-14)


@pytest.mark.parametrize("delta", [0.04, 0.02])
def test_sigma_delta_horizontal_strip_closed_form(delta):
    # arithmetic mean along the strip, harmonic mean across it
    a = 2.0
    t, _, _ = tensor.solve_delta(load_fixture("horizontal_line"), a, delta, offset=(0.3, 0.7))
    assert t.S[0, 0] == pytest.approx(1 - delta + a, abs=1e-10)
    assert t.S[1, 1] == pytest.approx(1 / (1 - delta + delta**2 / a), abs=1e-10)
    assert abs(t.S[0, 1]) <= 1e-10


def test_sigma_delta_is_elliptic():
    a, delta = 1.0, 0.02
    t, _, _ = tensor.solve_delta(load_fixture("figure1"), a, delta)
    lo, hi = t.eigenvalues
    assert lo >= 1 - 1e-8 and hi <= a / delta
    assert t.symmetry_defect <= 1e-8 * np.abs(t.S).max()


def test_commutation_sweep_empty_and_line():
    rep = tensor.commutation_sweep(load_fixture("empty"), 1.0, [0.04, 0.02])
    assert all(g == pytest.approx(0.0, abs=1e-12) for g in rep.gaps)
    rep = tensor.commutation_sweep(load_fixture("horizontal_line"), 1.0, [0.04, 0.02, 0.01])
    assert rep.strictly_decreasing
    assert min(rep.orders) >= 0.8


def test_commutation_sweep_records_failures():
    ccw = TorusPattern("ccw", [CircularArc((0.5, 0.5), 0.05, 0.0, 2 * math.pi)])
    rep = tensor.commutation_sweep(ccw, 1.0, [0.08, 0.02], h0=0.02)
    (d0, t0, g0, err0), (d1, t1, g1, err1) = rep.rows
    assert t0 is None and "GeometryError" in err0
    assert err1 is None and g1 > 0


def test_commutation_sweep_needs_decreasing_deltas():
    with pytest.raises(ParameterError):
        tensor.commutation_sweep(load_fixture("circle"), 1.0, [0.01, 0.02])


def test_small_a_ratio_matches_isolated_ring():
    # An isolated ring of radius r and line conductance a in a unit background
    # has potential c*x inside and x + b*x/|x|^2 outside with c = 2/(2 + a/r),
    # giving a trace deficit of 2*pi*a^2/(2 + a/r) per unit cell.  The periodic
    # correction is of the order of the disc's area fraction (about 3%).
    r, a_list = 0.1, [0.0125, 0.025, 0.05, 0.1]
    rep = tensor.small_a_sweep(load_fixture("circle"), a_list, h=0.02)
    for a, ratio in zip(a_list, rep.ratios):
        assert ratio == pytest.approx(2 * math.pi / (2 + a / r), rel=0.05)
    assert rep.ratios == sorted(rep.ratios, reverse=True)


def test_small_a_sweep_balanced_and_empty():
    rep = tensor.small_a_sweep(load_fixture("grid"), [0.05, 0.1], h=0.05)
    assert rep.ratios == [0.0, 0.0]
    rep = tensor.small_a_sweep(load_fixture("empty"), [0.05], h=0.1)
    assert rep.ratios == [0.0]
    with pytest.raises(ParameterError):
        tensor.small_a_sweep(load_fixture("circle"), [0.5])


def test_large_a_examples():
    rep = tensor.large_a_bound_check(load_fixture("horizontal_line"), [10.0], 1.0, h=0.05)
    (a, t1, t2, eps, lo, up, lok, uok) = rep.rows[0]
    assert t1 == pytest.approx(12.0, abs=1e-10) and lo == 12.0 and up == pytest.approx(12.0, abs=1e-12)
    assert rep.ok
    rep = tensor.large_a_bound_check(load_fixture("circle"), [10.0], 0.0, h=0.04)
    (a, t1, t2, eps, lo, up, lok, uok) = rep.rows[0]
    assert lo == 2.0 and lok and uok and t2 < up


def test_richardson():
    h = np.array([0.1, 0.05])
    vals = 3.0 + 2.0 * h**2
    assert tensor.richardson(vals[0], vals[1]) == pytest.approx(3.0, abs=1e-14)


def test_csv_is_sorted_and_stable():
    rows = [(effective(n, 1.0)[0], None) for n in ("hexagon", "circle", "grid")]
    text = tensor.tensor_csv(rows, ["header"])
    lines = text.splitlines()
    assert lines[0] == "# header" and lines[1] == tensor.CSV_HEADER
    assert [ln.split(",")[0] for ln in lines[2:]] == ["circle", "grid", "hexagon"]
    assert tensor.tensor_csv(rows[::-1], ["header"]) == text


def test_extrapolated_sigma0_reports_both_meshes():
    est = tensor.sigma0_extrapolated(load_fixture("circle"), 1.0, 0.04)
    assert est.coarse.h == 0.04 and est.fine.h == 0.02
    assert np.allclose(est.S, tensor.richardson(est.coarse.S, est.fine.S))


def test_mesh_reuse():
    m = build_mesh(unfold(load_fixture("circle")), 0.04)
    t, m2, _ = tensor.solve_effective(load_fixture("circle"), 1.0, mesh=m)
    assert m2 is m
    r = tensor.TENSOR_RTOL
    f = fem.solve(fem.assemble_effective(m, 1.0, 0), r), fem.solve(fem.assemble_effective(m, 1.0, 1), r)
    assert np.array_equal(tensor.sigma0(m, 1.0, list(f)).S, t.S)
