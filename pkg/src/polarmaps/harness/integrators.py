"""Baseline integrators for ``x' = K p, p' = -grad W(x)`` and side-by-side runs.

The baselines (Stormer-Verlet, implicit midpoint, classical RK4) act on the
first-order form and exist to give reference drift curves. Each starts from
``x = x0`` and ``p = K^-1 (x1 - x0) / h`` so all methods see the same data
as the polar map.
"""
from __future__ import annotations

import time

import numpy as np

from ..exceptions import ConfigError
from ..multipoly import FloatEvaluator
from ..polarmap import PolarSystem
from .runner import RunReport, _records, run_trajectory, summarize
from .spec import METHODS, ProblemSpec

__all__ = ["compare_integrators", "stormer_verlet", "implicit_midpoint", "rk4", "Hamiltonian"]


class Hamiltonian:
    """``H(x, p) = p^T K p / 2 + W(x)`` with floating gradient and Hessian."""

    def __init__(self, sys: PolarSystem):
        self.K = sys.K_float
        n = sys.n
        self.n = n
        self._W = FloatEvaluator([sys.W])
        self._g = FloatEvaluator(list(sys.W.grad()))
        self._H = FloatEvaluator([p for row in sys.W.hessian() for p in row])

    def energy(self, x, p) -> float:
        return float(p @ self.K @ p / 2 + self._W(x[None])[0, 0])

    def grad(self, x) -> np.ndarray:
        return self._g(x[None])[0]

    def hess(self, x) -> np.ndarray:
        return self._H(x[None])[0].reshape(self.n, self.n)


def stormer_verlet(H: Hamiltonian, x, p, h):
    p = p - h / 2 * H.grad(x)
    x = x + h * H.K @ p
    return x, p - h / 2 * H.grad(x)


def implicit_midpoint(H: Hamiltonian, x, p, h, tol=1e-14, maxiter=50):
    """Newton iteration on the midpoint ``(X, P)``."""
    n = H.n
    X, P = x.copy(), p.copy()
    I = np.eye(n)
    for _ in range(maxiter):
        rx = X - x - h / 2 * H.K @ P
        rp = P - p + h / 2 * H.grad(X)
        r = np.concatenate([rx, rp])
        J = np.block([[I, -h / 2 * H.K], [h / 2 * H.hess(X), I]])
        d = np.linalg.solve(J, -r)
        X, P = X + d[:n], P + d[n:]
        if np.max(np.abs(d)) <= tol * max(1.0, np.max(np.abs(np.concatenate([X, P])))):
            break
    return 2 * X - x, 2 * P - p


def rk4(H: Hamiltonian, x, p, h):
    def f(x, p):
        return H.K @ p, -H.grad(x)

    k1 = f(x, p)
    k2 = f(x + h / 2 * k1[0], p + h / 2 * k1[1])
    k3 = f(x + h / 2 * k2[0], p + h / 2 * k2[1])
    k4 = f(x + h * k3[0], p + h * k3[1])
    return (
        x + h / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]),
        p + h / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]),
    )


_STEPPERS = {"stormer-verlet": stormer_verlet, "implicit-midpoint": implicit_midpoint, "rk4": rk4}


def _baseline(spec: ProblemSpec, method: str, steps: int) -> RunReport:
    sys = spec.system()
    H = Hamiltonian(sys)
    pts = [p.astype(float) for p in spec.initial_points()]
    h = float(spec.h)
    x = pts[0]
    p = np.linalg.solve(sys.K_float, (pts[1] - pts[0]) / h)
    n = sys.n
    columns = ["step"] + [f"x{i + 1}" for i in range(n)] + [f"p{i + 1}" for i in range(n)] + ["H"]
    rows = []
    stepper = _STEPPERS[method]
    status, message = "ok", ""
    t0 = time.perf_counter()
    for k in range(steps + 1):
        rows.append([k, *x, *p, H.energy(x, p)])
        if k == steps:
            break
        x, p = stepper(H, x, p, h)
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(p))):
            status, message = "diverged", f"step {k}: non-finite state"
            break
    records = _records(columns, rows)
    return RunReport(
        name=spec.name,
        method=method,
        columns=columns,
        records=records,
        summary=summarize(records),
        status=status,
        message=message,
        wall_time=time.perf_counter() - t0,
        meta={"h": str(spec.h), "mode": spec.mode},
    )


def compare_integrators(spec: ProblemSpec, methods=None, steps: int | None = None) -> dict[str, RunReport]:
    """One report per method on identical initial data; ``H`` columns align by step."""
    if spec.mode == "higher-order":
        raise ConfigError("mode: comparison integrators need a second-order system")
    methods = tuple(methods or spec.integrators)
    unknown = set(methods) - set(METHODS)
    if unknown:
        raise ConfigError(f"integrators: unknown methods {sorted(unknown)}")
    steps = spec.steps if steps is None else steps
    out = {}
    for m in methods:
        out[m] = run_trajectory(spec, steps) if m == "polar" else _baseline(spec, m, steps)
    return out
