"""Deterministic standalone SVG pictures of patterns, meshes and fields.

The unit cell maps to a fixed 512 x 512 viewport (plus a 16 px margin) with
y pointing up.  All coordinates are written with three decimals, so equal
inputs give byte-identical files.

Field colormap: piecewise-linear interpolation between five stops, from the
minimum to the maximum of the field::

    0.00  #3b4cc0  (blue)
    0.25  #8db0fe
    0.50  #dddddd  (grey, the midpoint)
    0.75  #f49a7b
    1.00  #b40426  (red)

A constant field is drawn entirely in the midpoint colour.
"""

from __future__ import annotations

import numpy as np

SIZE = 512
MARGIN = 16
PATTERN_STROKE = "#000000"
ROAD_FILL = "#f4c542"

COLORMAP = (
    (0.00, (0x3B, 0x4C, 0xC0)),
    (0.25, (0x8D, 0xB0, 0xFE)),
    (0.50, (0xDD, 0xDD, 0xDD)),
    (0.75, (0xF4, 0x9A, 0x7B)),
    (1.00, (0xB4, 0x04, 0x26)),
)


def colormap(t):
    """Hex colour for ``t`` in [0, 1] (clipped)."""
    t = min(1.0, max(0.0, float(t)))
    for (t0, c0), (t1, c1) in zip(COLORMAP, COLORMAP[1:]):
        if t <= t1:
            s = (t - t0) / (t1 - t0)
            rgb = [round(a + s * (b - a)) for a, b in zip(c0, c1)]
            return "#{:02x}{:02x}{:02x}".format(*rgb)
    return "#{:02x}{:02x}{:02x}".format(*COLORMAP[-1][1])


def _xy(p):
    return f"{MARGIN + p[0] * SIZE:.3f},{MARGIN + (1.0 - p[1]) * SIZE:.3f}"


def _head(title):
    full = SIZE + 2 * MARGIN
    return [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{full}" height="{full}" viewBox="0 0 {full} {full}">',
        f"<title>{title}</title>",
        f'<rect x="0" y="0" width="{full}" height="{full}" fill="#ffffff"/>',
    ]


def _frame():
    return f'<rect x="{MARGIN}" y="{MARGIN}" width="{SIZE}" height="{SIZE}" fill="none" stroke="#808080" stroke-width="1"/>'


def _polylines(polylines, stroke=PATTERN_STROKE, width=2.5):
    out = []
    for pts in polylines:
        d = " ".join(_xy(p) for p in pts)
        out.append(f'<polyline points="{d}" fill="none" stroke="{stroke}" stroke-width="{width}" stroke-linejoin="round"/>')
    return out


def _pattern_lines(unfolded, h=0.005):
    return [piece.sample(h) for piece in unfolded.pieces]


def render_pattern(unfolded, title="pattern"):
    """Cell frame with the pattern pieces as thick strokes."""
    body = _head(title) + [_frame()] + _polylines(_pattern_lines(unfolded))
    return "\n".join(body + ["</svg>"]) + "\n"


def _triangles(mesh, fills, stroke):
    out = []
    for tri, fill in zip(mesh.triangles, fills):
        d = " ".join(_xy(mesh.vertices[i]) for i in tri)
        s = f' stroke="{stroke}" stroke-width="0.3"' if stroke else f' stroke="{fill}" stroke-width="0.3"'
        out.append(f'<polygon points="{d}" fill="{fill}"{s}/>')
    return out


def _pattern_edges(mesh):
    return [mesh.vertices[e] for e in mesh.pattern_edges]


def render_mesh(mesh, title="mesh"):
    """Triangle outlines; road triangles filled; pattern edges on top."""
    fills = [ROAD_FILL if r else "#ffffff" for r in mesh.road]
    body = _head(title) + _triangles(mesh, fills, "#9a9a9a") + [_frame()] + _polylines(_pattern_edges(mesh), width=1.5)
    return "\n".join(body + ["</svg>"]) + "\n"


def render_field(mesh, values, title="field"):
    """Per-triangle fill by the mean nodal value of ``values`` (one per vertex)."""
    values = np.asarray(values, dtype=float)
    tv = values[mesh.triangles].mean(axis=1)
    lo, hi = float(values.min()), float(values.max())
    span = hi - lo
    fills = [colormap(0.5 if span == 0 else (v - lo) / span) for v in tv]
    body = _head(f"{title} [{lo:.6g}, {hi:.6g}]") + _triangles(mesh, fills, None) + [_frame()]
    body += _polylines(_pattern_edges(mesh), width=1.5)
    return "\n".join(body + ["</svg>"]) + "\n"
