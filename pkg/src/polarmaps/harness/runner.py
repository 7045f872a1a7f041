"""Trajectory runs with per-step records and self-auditing summaries."""
from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import linalg
from ..exceptions import SingularStep
from ..higherorder import HigherSystem, hjacobian_det, hmeasure_density, hstep
from ..polarmap import (
    first_integral,
    first_integral_nonhom,
    hamiltonian,
    jacobian_matrix,
    measure_density,
    step,
)
from .spec import ProblemSpec

__all__ = ["RunReport", "run_trajectory", "summarize", "state_vector"]


def state_vector(s) -> np.ndarray:
    """Flattened state: ``(x0, x1)`` or the higher-order window."""
    pts = s.window if hasattr(s, "window") else (s.x0, s.x1)
    return np.concatenate([np.asarray(p) for p in pts])


def _f(v) -> float:
    return float(v)


def _rel(a: np.ndarray, ref: float) -> np.ndarray:
    return np.abs(a - ref) / max(abs(ref), 1e-300)


def summarize(records: dict[str, np.ndarray]) -> dict:
    """Summary statistics from the record columns alone.

    * ``F_max_rel_drift``: ``max_k |F_k - F_0| / |F_0|``.
    * ``F_max_step_drift``: ``max_k |F_{k+1} - F_k| / |F_k|``.
    * ``H_drift_slope``: least-squares slope of ``|H_k - H_0|`` against ``k``.
    * ``measure_residual``: ``max_k |rho_{k+1} jac_k - rho_k| / |rho_k|``.
    * ``<name>_max_rel_drift`` for every tracked quantity.
    """
    out: dict = {"records": int(len(records.get("step", [])))}

    def drift(col):
        v = records.get(col)
        if v is None or len(v) == 0 or not np.all(np.isfinite(v)):
            return None
        return float(np.max(_rel(v, v[0])))

    def step_drift(col):
        v = records.get(col)
        if v is None or len(v) < 2 or not np.all(np.isfinite(v)):
            return None
        return float(np.max(np.abs(np.diff(v)) / np.maximum(np.abs(v[:-1]), 1e-300)))

    out["F_max_rel_drift"] = drift("F")
    out["F_max_step_drift"] = step_drift("F")
    H = records.get("H")
    if H is not None and len(H) >= 2 and np.all(np.isfinite(H)):
        k = records["step"].astype(float)
        out["H_drift_slope"] = float(np.polyfit(k, np.abs(H - H[0]), 1)[0])
        out["H_max_abs_drift"] = float(np.max(np.abs(H - H[0])))
    else:
        out["H_drift_slope"] = None
        out["H_max_abs_drift"] = None
    rho, jac = records.get("density"), records.get("jacdet")
    if rho is not None and len(rho) >= 2 and np.all(np.isfinite(rho)) and np.all(np.isfinite(jac[:-1])):
        out["measure_residual"] = float(np.max(np.abs(rho[1:] * jac[:-1] - rho[:-1]) / np.abs(rho[:-1])))
    else:
        out["measure_residual"] = None
    for col in records:
        if col.startswith("track:"):
            out[f"{col[6:]}_max_rel_drift"] = drift(col)
    return out


@dataclass(eq=False)
class RunReport:
    """Per-step records of one run plus a summary recomputable from them.

    ``records`` maps column names to arrays of equal length. State
    coordinates are columns ``s1..sN``; the remaining columns are ``F``,
    ``H``, ``density``, ``jacdet`` and ``track:<name>``. ``status`` is
    ``"ok"`` or ``"singular"``; a singular run keeps every record up to the
    failing step.
    """

    name: str
    method: str
    columns: list[str]
    records: dict[str, np.ndarray]
    summary: dict
    status: str = "ok"
    message: str = ""
    wall_time: float = 0.0
    meta: dict = field(default_factory=dict)

    @property
    def steps_completed(self) -> int:
        return max(len(self.records["step"]) - 1, 0)

    def audit(self) -> bool:
        """True when the stored summary equals one recomputed from the records."""
        return _same(summarize(self.records), self.summary)

    def to_csv(self, path=None) -> str:
        """CSV text (17 significant digits); written to ``path`` when given."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        cols = [self.records[c] for c in self.columns]
        for i in range(len(self.records["step"])):
            w.writerow([str(int(c[i])) if j == 0 else format(float(c[i]), ".17g") for j, c in enumerate(cols)])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "method": self.method,
            "status": self.status,
            "message": self.message,
            "steps_completed": self.steps_completed,
            "wall_time": self.wall_time,
            "summary": self.summary,
            "meta": self.meta,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, default=_jsonable)


def _jsonable(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    return str(v)


def _same(a: dict, b: dict) -> bool:
    if a.keys() != b.keys():
        return False
    for k in a:
        x, y = a[k], b[k]
        if isinstance(x, float) and isinstance(y, float):
            if not (x == y or (math.isnan(x) and math.isnan(y))):
                return False
        elif x != y:
            return False
    return True


def _records(columns, rows) -> dict[str, np.ndarray]:
    arr = np.array(rows, dtype=float).reshape(len(rows), len(columns))
    rec = {c: arr[:, i].copy() for i, c in enumerate(columns)}
    rec["step"] = rec["step"].astype(np.int64)
    return rec


def _tracked_values(tracked, v) -> list[float]:
    out = []
    pt = list(v)
    for _, num, den in tracked:
        out.append(float(num.eval(pt)) / float(den.eval(pt)))
    return out


def run_trajectory(spec: ProblemSpec, steps: int | None = None) -> RunReport:
    """Iterate the polar map of ``spec`` and record invariants at every state.

    Deterministic for a given spec (random initial data uses ``spec.seed``).
    A singular step ends the run early with ``status="singular"``.
    """
    steps = spec.steps if steps is None else steps
    sys = spec.system()
    s = spec.initial_state()
    higher = isinstance(sys, HigherSystem)
    tracked = spec.tracked()
    N = len(state_vector(s))
    columns = ["step"] + [f"s{i + 1}" for i in range(N)] + ["F", "H", "density", "jacdet"]
    columns += [f"track:{name}" for name, _, _ in tracked]

    if higher:
        def invariants(s):
            rho = _f(hmeasure_density(sys, s)) if sys.admissible else math.nan
            return math.nan, math.nan, rho, _f(hjacobian_det(sys, s))

        advance = lambda s: hstep(sys, s)
    else:
        F = first_integral if spec.mode == "homogeneous" and sys.W.is_homogeneous(4) else first_integral_nonhom

        def invariants(s):
            J = jacobian_matrix(sys, s)
            return _f(F(sys, s)), _f(hamiltonian(sys, s)), _f(measure_density(sys, s)), _f(linalg.det(J))

        advance = lambda s: step(sys, s)

    rows = []
    status, message = "ok", ""
    t0 = time.perf_counter()
    for k in range(steps + 1):
        try:
            inv = invariants(s)
        except SingularStep as e:
            status, message = "singular", f"step {k}: {e}"
            break
        v = state_vector(s)
        rows.append([k, *map(_f, v), *inv, *_tracked_values(tracked, v)])
        if k == steps:
            break
        try:
            s = advance(s)
        except SingularStep as e:
            status, message = "singular", f"step {k}: {e}"
            break
    wall = time.perf_counter() - t0
    records = _records(columns, rows) if rows else {c: np.empty(0) for c in columns}
    if not rows:
        records["step"] = records["step"].astype(np.int64)
    return RunReport(
        name=spec.name,
        method="polar",
        columns=columns,
        records=records,
        summary=summarize(records),
        status=status,
        message=message,
        wall_time=wall,
        meta={"h": str(spec.h), "mode": spec.mode, "exact": spec.exact, "seed": spec.seed},
    )
