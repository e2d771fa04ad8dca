"""JSON pattern files.

Schema::

    {
      "name": "circle",
      "arcs": [
        {"type": "segment",  "p": [x, y], "q": [x, y]},
        {"type": "circle",   "center": [x, y], "radius": r},
        {"type": "arc",      "center": [x, y], "radius": r, "theta0": t0, "theta1": t1},
        {"type": "polyline", "points": [[x, y], ...]}
      ]
    }

Coordinates live in the plane; the torus quotient is taken mod 1.  Angles are
radians.  Unknown keys anywhere are rejected.
"""

import json
from importlib import resources
from pathlib import Path

from .errors import GeometryError, PatternFileError
from .pattern import Circle, CircularArc, Polyline, Segment, TorusPattern

_ARC_FIELDS = {
    "segment": ("p", "q"),
    "circle": ("center", "radius"),
    "arc": ("center", "radius", "theta0", "theta1"),
    "polyline": ("points",),
}


def _number(v, where):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise PatternFileError(f"{where}: expected a number, got {v!r}")
    return float(v)


def _pair(v, where):
    if not isinstance(v, list) or len(v) != 2:
        raise PatternFileError(f"{where}: expected [x, y]")
    return (_number(v[0], where), _number(v[1], where))


def _arc_from_dict(d, i):
    where = f"arcs[{i}]"
    if not isinstance(d, dict):
        raise PatternFileError(f"{where}: expected an object")
    kind = d.get("type")
    if kind not in _ARC_FIELDS:
        raise PatternFileError(f"{where}: unknown arc type {kind!r}")
    expected = set(_ARC_FIELDS[kind]) | {"type"}
    extra = set(d) - expected
    if extra:
        raise PatternFileError(f"{where}: unknown keys {sorted(extra)}")
    missing = expected - set(d)
    if missing:
        raise PatternFileError(f"{where}: missing keys {sorted(missing)}")
    try:
        if kind == "segment":
            return Segment(_pair(d["p"], where + ".p"), _pair(d["q"], where + ".q"))
        if kind == "circle":
            return Circle(_pair(d["center"], where + ".center"), _number(d["radius"], where + ".radius"))
        if kind == "arc":
            return CircularArc(
                _pair(d["center"], where + ".center"),
                _number(d["radius"], where + ".radius"),
                _number(d["theta0"], where + ".theta0"),
                _number(d["theta1"], where + ".theta1"),
            )
        pts = d["points"]
        if not isinstance(pts, list):
            raise PatternFileError(f"{where}.points: expected a list")
        return Polyline([_pair(p, f"{where}.points[{j}]") for j, p in enumerate(pts)])
    except GeometryError as exc:
        raise GeometryError(f"arc {i}: {exc}") from None


def pattern_from_dict(data):
    if not isinstance(data, dict):
        raise PatternFileError("top level must be an object")
    extra = set(data) - {"name", "arcs"}
    if extra:
        raise PatternFileError(f"unknown top-level keys {sorted(extra)}")
    if "arcs" not in data:
        raise PatternFileError("missing key 'arcs'")
    name = data.get("name", "")
    if not isinstance(name, str):
        raise PatternFileError("'name' must be text")
    if not isinstance(data["arcs"], list):
        raise PatternFileError("'arcs' must be an array")
    return TorusPattern(name, [_arc_from_dict(a, i) for i, a in enumerate(data["arcs"])])


def loads(text):
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise PatternFileError(exc.msg, exc.lineno, exc.colno) from None
    return pattern_from_dict(data)


def load_pattern(path):
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise PatternFileError(f"cannot read {path}: {exc}") from None
    return loads(text)


def dumps(pattern):
    data = {"name": pattern.name, "arcs": [a.to_dict() for a in pattern.arcs]}
    return json.dumps(data, indent=2)


FIXTURES = (
    "empty",
    "horizontal_line",
    "diagonal_line",
    "grid",
    "hexagon",
    "circle",
    "circle_segment",
    "figure1",
    "t_junction",
    "tangential_node",
)


def fixture_path(name):
    return resources.files("roadnet") / "fixtures" / f"{name}.json"


def load_fixture(name):
    """Load one of the bundled fixture patterns by name."""
    if name not in FIXTURES:
        raise KeyError(f"unknown fixture {name!r}; available: {', '.join(FIXTURES)}")
    return loads(fixture_path(name).read_text(encoding="utf-8"))
