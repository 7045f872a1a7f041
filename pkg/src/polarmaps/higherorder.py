"""Polar maps of m-th order systems ``x^(m) = f(x)`` with ``deg f <= m + 1``.

The map on windows ``(x_0, ..., x_{m-1}) -> (x_1, ..., x_m)`` solves

    x_m + sum_{i=1}^{m-1} c_i x_i + (-1)**m x_0 = h**m pol_{m+1} f(x_0, ..., x_m)

which is affine in ``x_m``. The density ``1 / det(I - h**m/(m+1) pol_m Df)``
is invariant for even ``m`` and, for odd ``m``, when ``f`` passes
:func:`odd_admissible`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Sequence

import numpy as np

from . import linalg
from .exceptions import OddInadmissible
from .linalg import as_scalar, as_vector, is_exact
from .multipoly import MultiPoly, jacobian, poly_det
from .polarize import PolarizedForm
from .polarmap import _check

__all__ = [
    "HigherSystem",
    "HigherState",
    "hstep",
    "hmeasure_density",
    "hjacobian_det",
    "hjacobian_matrix",
    "odd_admissible",
    "binomial_stencil",
    "MAX_ORDER",
]

MAX_ORDER = 4


def binomial_stencil(m: int) -> tuple[Fraction, ...]:
    """Interior coefficients ``c_i = (-1)**(m-i) binom(m, i)``, i = 1..m-1."""
    return tuple(Fraction((-1) ** (m - i) * math.comb(m, i)) for i in range(1, m))


@dataclass(frozen=True, eq=False)
class HigherSystem:
    """``x^(m) = f(x)`` with polynomial ``f`` and a difference stencil ``c``.

    ``c`` defaults to the binomial stencil so that the left side is the m-th
    forward difference; any values keep the measure result intact.
    """

    f: tuple[MultiPoly, ...]
    m: int
    c: tuple = field(default=None)

    def __post_init__(self):
        f = tuple(self.f)
        if not f:
            raise ValueError("empty vector field")
        n = len(f)
        if any(p.nvars != n for p in f):
            raise ValueError("f must map R^n to R^n")
        if not 1 <= self.m <= MAX_ORDER:
            raise ValueError(f"order m must be in 1..{MAX_ORDER}")
        deg = max(p.degree for p in f)
        if deg > self.m + 1:
            raise ValueError(f"deg f = {deg} exceeds m + 1 = {self.m + 1}")
        c = binomial_stencil(self.m) if self.c is None else tuple(Fraction(v) for v in self.c)
        if len(c) != self.m - 1:
            raise ValueError(f"need {self.m - 1} interior coefficients, got {len(c)}")
        object.__setattr__(self, "f", f)
        object.__setattr__(self, "c", c)

    @property
    def n(self) -> int:
        return len(self.f)

    @cached_property
    def rhs_form(self) -> PolarizedForm:
        return PolarizedForm(self.f, self.m + 1)

    @cached_property
    def jac_form(self) -> PolarizedForm:
        return PolarizedForm(jacobian(self.f), self.m)

    @cached_property
    def admissible(self) -> bool:
        return self.m % 2 == 0 or odd_admissible(self.f)

    def stencil(self, exact: bool) -> list:
        """Coefficients of x_0 .. x_{m-1} on the left side (x_m has coefficient 1)."""
        c0 = Fraction((-1) ** self.m)
        coeffs = [c0, *self.c]
        return coeffs if exact else [float(v) for v in coeffs]


@dataclass(frozen=True, eq=False)
class HigherState:
    """Window ``(x_0, ..., x_{m-1})`` and step size ``h``."""

    window: tuple
    h: object

    def __post_init__(self):
        pts = list(self.window)
        if not pts:
            raise ValueError("empty window")
        exact = all(is_exact(list(np.ravel(p))) for p in pts) and is_exact(self.h)
        pts = tuple(as_vector(p, exact) for p in pts)
        if len({p.shape for p in pts}) != 1 or pts[0].ndim != 1:
            raise ValueError("window points must be vectors of one dimension")
        h = as_scalar(self.h, exact)
        if h == 0:
            raise ValueError("step size h must be nonzero")
        object.__setattr__(self, "window", pts)
        object.__setattr__(self, "h", h)

    @property
    def exact(self) -> bool:
        return self.window[0].dtype == object


def _check_state(sys: HigherSystem, s: HigherState):
    if len(s.window) != sys.m:
        raise ValueError(f"window has {len(s.window)} points, order is {sys.m}")
    if s.window[0].shape != (sys.n,):
        raise ValueError(f"points have dimension {s.window[0].shape[0]}, system has {sys.n}")


def _zero(n, exact):
    z = np.empty(n, dtype=object if exact else float)
    z[:] = Fraction(0) if exact else 0.0
    return z


def _A(sys, pts):
    """``pol_m Df(pts) / (m+1)``: the coefficient matrix of the new point."""
    return sys.jac_form.evaluate(list(pts)) / (sys.m + 1)


def _step_parts(sys, s):
    exact, h, m = s.exact, s.h, sys.m
    pts = list(s.window)
    A0 = _A(sys, pts)
    b = sys.rhs_form.evaluate(pts + [_zero(sys.n, exact)])
    hm = h**m
    hA = -hm * A0
    M = linalg.eye(sys.n, exact) + hA
    coeffs = sys.stencil(exact)
    rhs = hm * b - sum(cf * x for cf, x in zip(coeffs, pts))
    return M, rhs, hA


def hstep(sys: HigherSystem, s: HigherState) -> HigherState:
    """Shift the window by one step, solving the linear system for the new point."""
    _check_state(sys, s)
    M, rhs, hA = _step_parts(sys, s)
    _check(M, hA, s.exact)
    xm = linalg.solve(M, rhs)
    return HigherState(s.window[1:] + (xm,), s.h)


def hmeasure_density(sys: HigherSystem, s: HigherState):
    """``1 / det(I - h**m/(m+1) pol_m Df(x_0, ..., x_{m-1}))``.

    Raises
    ------
    OddInadmissible
        For odd ``m`` when ``f`` fails :func:`odd_admissible`.
    """
    _check_state(sys, s)
    if not sys.admissible:
        raise OddInadmissible(f"f does not satisfy det(I+tDf) = det(I-tDf); no invariant density for m={sys.m}")
    A0 = _A(sys, s.window)
    hA = -(s.h**sys.m) * A0
    M = linalg.eye(sys.n, s.exact) + hA
    return 1 / _check(M, hA, s.exact)


def hjacobian_det(sys: HigherSystem, s: HigherState):
    """Jacobian determinant of the window map from the determinant identity

    ``det(I + (-1)**(m+1) h**m A(x_1..x_m)) / det(I - h**m A(x_0..x_{m-1}))``.
    """
    _check_state(sys, s)
    exact, h, m, n = s.exact, s.h, sys.m, sys.n
    M, _, hA = _step_parts(sys, s)
    d0 = _check(M, hA, exact)
    nxt = hstep(sys, s)
    A1 = _A(sys, nxt.window)
    top = linalg.eye(n, exact) + (-1) ** (m + 1) * h**m * A1
    return linalg.det(top) / d0


def hjacobian_matrix(sys: HigherSystem, s: HigherState) -> np.ndarray:
    """Full (m n) x (m n) derivative of the window map by implicit differentiation."""
    _check_state(sys, s)
    exact, h, m, n = s.exact, s.h, sys.m, sys.n
    M, _, hA = _step_parts(sys, s)
    _check(M, hA, exact)
    xm = hstep(sys, s).window[-1]
    full = list(s.window) + [xm]
    coeffs = sys.stencil(exact)
    I = linalg.eye(n, exact)
    blocks = []
    for i in range(m):
        others = full[:i] + full[i + 1 :]
        rhs = -coeffs[i] * I + h**m * _A(sys, others)
        blocks.append(linalg.solve(M, rhs))
    J = np.empty((m * n, m * n), dtype=object if exact else float)
    J[...] = Fraction(0) if exact else 0.0
    for j in range(m - 1):
        J[j * n : (j + 1) * n, (j + 1) * n : (j + 2) * n] = I
    for i in range(m):
        J[(m - 1) * n :, i * n : (i + 1) * n] = blocks[i]
    return J


def odd_admissible(f: Sequence[MultiPoly]) -> bool:
    """Decide exactly whether ``det(I + t Df(x)) == det(I - t Df(x))`` identically.

    ``t`` is an extra indeterminate, so the test covers every rescaling of
    ``Df`` (the form in which the condition enters the measure proof).
    """
    f = tuple(f)
    n = len(f)
    if any(p.nvars != n for p in f):
        raise ValueError("f must map R^n to R^n")
    t = MultiPoly.variable(n + 1, n)
    one = MultiPoly.constant(n + 1, 1)
    J = [[p.embed(n + 1, range(n)) for p in row] for row in jacobian(f)]

    def shifted(sign):
        return [
            [(one if i == j else MultiPoly.zero(n + 1)) + sign * t * J[i][j] for j in range(n)]
            for i in range(n)
        ]

    return (poly_det(shifted(1)) - poly_det(shifted(-1))).is_zero()
