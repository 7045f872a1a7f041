"""Problem specifications: a JSON document describing one system and one run.

Polynomials use the text grammar of :func:`polarmaps.multipoly.parse`.
Rational numbers may be written as JSON numbers or as strings such as
``"1/10"``; strings keep exact values, which matters for exact runs and for
the Darboux search.

Example::

    {
      "name": "quartic1d",
      "mode": "homogeneous",
      "n": 1,
      "K": [[1]],
      "W": "x1^4/4",
      "h": 1,
      "steps": 10,
      "initial": [[1], [2]]
    }

Higher-order systems use ``"mode": "higher-order"`` with ``m``, ``f`` (one
polynomial per component) and optionally the stencil ``c``; ``initial`` then
holds ``m`` points. Tracked rational functions (``track``) are written in the
variables of the flattened state, ``x1..xn`` for the first point,
``x{n+1}..x{2n}`` for the second, and so on.
"""
from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import jsonschema
import numpy as np

from ..exceptions import ConfigError
from ..higherorder import HigherState, HigherSystem
from ..multipoly import MultiPoly, PolyParseError, parse
from ..polarmap import PolarState, PolarSystem

__all__ = ["ProblemSpec", "SCHEMA", "METHODS", "load_spec", "parse_spec", "parse_number"]

METHODS = ("polar", "stormer-verlet", "implicit-midpoint", "rk4")

_number = {
    "oneOf": [
        {"type": "number"},
        {"type": "string", "pattern": r"^\s*[-+]?\d+(\.\d*)?([eE][-+]?\d+)?(\s*/\s*\d+)?\s*$"},
    ]
}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "polar map problem",
    "type": "object",
    "required": ["name", "mode", "n", "h", "steps"],
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string", "minLength": 1},
        "description": {"type": "string"},
        "mode": {"enum": ["homogeneous", "nonhomogeneous", "higher-order"]},
        "n": {"type": "integer", "minimum": 1, "maximum": 16},
        "K": {"type": "array", "items": {"type": "array", "items": _number}},
        "W": {"type": "string"},
        "m": {"type": "integer", "minimum": 1, "maximum": 4},
        "f": {"type": "array", "items": {"type": "string"}},
        "c": {"type": "array", "items": _number},
        "h": _number,
        "steps": {"type": "integer", "minimum": 0},
        "initial": {"type": "array", "items": {"type": "array", "items": _number}},
        "amplitude": {"type": "number", "exclusiveMinimum": 0},
        "exact": {"type": "boolean"},
        "integrators": {"type": "array", "items": {"enum": list(METHODS)}, "uniqueItems": True},
        "track": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["name", "num"],
                "additionalProperties": False,
                "properties": {
                    "name": {"type": "string", "minLength": 1},
                    "num": {"type": "string"},
                    "den": {"type": "string"},
                },
            },
        },
        "out": {"type": "string"},
        "seed": {"type": "integer", "minimum": 0},
    },
}


def parse_number(v) -> Fraction:
    """JSON number or rational string to an exact Fraction."""
    if isinstance(v, bool):
        raise ValueError("booleans are not numbers")
    if isinstance(v, str):
        return Fraction(v.replace(" ", ""))
    return Fraction(v)


def _path(err: jsonschema.ValidationError) -> str:
    return "/".join(str(p) for p in err.absolute_path) or "<root>"


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    """Validated problem description; see the module docstring for the format.

    Construct from a dict with :func:`parse_spec` or from a file with
    :func:`load_spec`; :meth:`to_dict` gives back the JSON form.
    """

    data: dict = field(repr=False)

    def __post_init__(self):
        _validate(self.data)

    @property
    def name(self) -> str:
        return self.data["name"]

    @property
    def mode(self) -> str:
        return self.data["mode"]

    @property
    def n(self) -> int:
        return self.data["n"]

    @property
    def order(self) -> int:
        return self.data.get("m", 2) if self.mode == "higher-order" else 2

    @property
    def h(self) -> Fraction:
        return parse_number(self.data["h"])

    @property
    def steps(self) -> int:
        return self.data["steps"]

    @property
    def seed(self) -> int:
        return self.data.get("seed", 0)

    @property
    def exact(self) -> bool:
        return self.data.get("exact", False)

    @property
    def integrators(self) -> tuple[str, ...]:
        return tuple(self.data.get("integrators", METHODS))

    @property
    def out(self) -> str | None:
        return self.data.get("out")

    def to_dict(self) -> dict:
        return copy.deepcopy(self.data)

    def to_json(self) -> str:
        return json.dumps(self.data, indent=2)

    def with_overrides(self, **kw) -> ProblemSpec:
        """Copy with top-level fields replaced; ``None`` values are ignored."""
        d = self.to_dict()
        for k, v in kw.items():
            if v is not None:
                d[k] = v
        return parse_spec(d)

    def K(self) -> np.ndarray:
        n = self.n
        if "K" not in self.data:
            K = np.empty((n, n), dtype=object)
            for i in range(n):
                for j in range(n):
                    K[i, j] = Fraction(int(i == j))
            return K
        return np.array([[parse_number(v) for v in row] for row in self.data["K"]], dtype=object)

    def system(self):
        """``PolarSystem`` for second-order modes, ``HigherSystem`` otherwise."""
        if self.mode == "higher-order":
            f = tuple(parse(t, self.n) for t in self.data["f"])
            c = [parse_number(v) for v in self.data["c"]] if "c" in self.data else None
            return HigherSystem(f, self.data["m"], c)
        return PolarSystem(self.K(), parse(self.data.get("W", "0"), self.n))

    def initial_points(self) -> list[np.ndarray]:
        """Initial window as exact points; seeded and consistent with a smooth path when not given."""
        k = self.order if self.mode == "higher-order" else 2
        if "initial" in self.data:
            return [np.array([parse_number(v) for v in p], dtype=object) for p in self.data["initial"]]
        # seeded position and velocity, sampled along x0 + t v at t = 0, h, 2h, ...
        rng = np.random.default_rng(self.seed)
        amp = self.data.get("amplitude", 0.5)
        x0, v = rng.uniform(-amp, amp, size=(2, self.n))
        h = float(self.h)
        return [np.array([Fraction(float(c)).limit_denominator(10**6) for c in x0 + j * h * v], dtype=object) for j in range(k)]

    def initial_state(self):
        pts = self.initial_points()
        h = self.h
        if not self.exact:
            pts = [p.astype(float) for p in pts]
            h = float(h)
        if self.mode == "higher-order":
            return HigherState(tuple(pts), h)
        return PolarState(pts[0], pts[1], h)

    def tracked(self) -> list[tuple[str, MultiPoly, MultiPoly]]:
        N = self.n * (self.order if self.mode == "higher-order" else 2)
        out = []
        for t in self.data.get("track", []):
            den = parse(t["den"], N) if "den" in t else MultiPoly.constant(N, 1)
            out.append((t["name"], parse(t["num"], N), den))
        return out


def _validate(d: dict) -> None:
    if not isinstance(d, dict):
        raise ConfigError("<root>: a problem spec must be a JSON object")
    errors = sorted(jsonschema.Draft202012Validator(SCHEMA).iter_errors(d), key=lambda e: list(e.absolute_path))
    if errors:
        raise ConfigError("; ".join(f"{_path(e)}: {e.message}" for e in errors))
    n, mode = d["n"], d["mode"]

    def fail(where, msg):
        raise ConfigError(f"{where}: {msg}")

    try:
        h = parse_number(d["h"])
    except (ValueError, ZeroDivisionError) as e:
        fail("h", str(e))
    if h == 0:
        fail("h", "step size must be nonzero")
    if mode == "higher-order":
        if "m" not in d or "f" not in d:
            fail("<root>", "higher-order mode needs 'm' and 'f'")
        if "W" in d or "K" in d:
            fail("<root>", "higher-order mode takes 'f', not 'W'/'K'")
        if len(d["f"]) != n:
            fail("f", f"expected {n} components, got {len(d['f'])}")
        for i, t in enumerate(d["f"]):
            try:
                p = parse(t, n)
            except PolyParseError as e:
                fail(f"f/{i}", str(e))
            if p.degree > d["m"] + 1:
                fail(f"f/{i}", f"degree {p.degree} exceeds m + 1 = {d['m'] + 1}")
        if "c" in d and len(d["c"]) != d["m"] - 1:
            fail("c", f"expected {d['m'] - 1} coefficients, got {len(d['c'])}")
        npts = d["m"]
        if "integrators" in d and set(d["integrators"]) - {"polar"}:
            fail("integrators", "comparison integrators need a second-order system")
    else:
        for key in ("m", "f", "c"):
            if key in d:
                fail(key, f"'{key}' is only valid in higher-order mode")
        try:
            W = parse(d.get("W", "0"), n)
        except PolyParseError as e:
            fail("W", str(e))
        if W.degree > 4:
            fail("W", f"degree {W.degree} exceeds 4")
        if mode == "homogeneous" and not W.is_homogeneous(4) and not W.is_zero():
            fail("W", "homogeneous mode needs a homogeneous quartic; use mode 'nonhomogeneous'")
        if "K" in d:
            K = d["K"]
            if len(K) != n or any(len(row) != n for row in K):
                fail("K", f"must be {n}x{n}")
            try:
                Kf = [[parse_number(v) for v in row] for row in K]
            except (ValueError, ZeroDivisionError) as e:
                fail("K", str(e))
            if any(Kf[i][j] != Kf[j][i] for i in range(n) for j in range(n)):
                fail("K", "must be symmetric")
        npts = 2
    if "initial" in d:
        init = d["initial"]
        if len(init) != npts:
            fail("initial", f"expected {npts} points, got {len(init)}")
        for i, p in enumerate(init):
            if len(p) != n:
                fail(f"initial/{i}", f"expected {n} coordinates, got {len(p)}")
            for j, v in enumerate(p):
                try:
                    parse_number(v)
                except (ValueError, ZeroDivisionError) as e:
                    fail(f"initial/{i}/{j}", str(e))
    N = n * npts
    for i, t in enumerate(d.get("track", [])):
        for key in ("num", "den"):
            if key in t:
                try:
                    parse(t[key], N)
                except PolyParseError as e:
                    fail(f"track/{i}/{key}", str(e))


def parse_spec(d: dict) -> ProblemSpec:
    return ProblemSpec(copy.deepcopy(d))


def load_spec(path) -> ProblemSpec:
    """Read and validate a spec file; JSON syntax errors report line and column."""
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as e:
        raise ConfigError(f"{path}: {e.strerror}") from e
    try:
        d = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: line {e.lineno} column {e.colno}: {e.msg}") from e
    try:
        return parse_spec(d)
    except ConfigError as e:
        raise ConfigError(f"{path}: {e}") from e
