"""Polar maps of second-order systems ``x'' = -K grad W(x)`` with ``deg W <= 4``.

The map ``(x0, x1) -> (x1, x2)`` is defined by

    x2 - 2 x1 + x0 = -h**2 K V(x0, x1, x2, .)

where ``V/4`` polarizes ``W`` (homogenized when ``W`` is not a pure quartic).
The right side is affine in ``x2``, so each step is one linear solve with the
step matrix ``M01 = I + h**2 K V01``. Everything here works in floating point
or, when the state and step size are rational, in exact arithmetic.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import Sequence

import numpy as np

from . import linalg
from .exceptions import NonInvertibleK, SingularStep
from .linalg import as_exact, as_scalar, as_vector, is_exact
from .multipoly import FloatEvaluator, MultiPoly, jacobian, parse
from .polarize import PolarizedForm, PotentialPolarization

__all__ = [
    "PolarSystem",
    "PolarState",
    "StepMatrix",
    "step",
    "inverse_step",
    "step_matrix",
    "jacobian_det",
    "jacobian_matrix",
    "measure_density",
    "first_integral",
    "first_integral_nonhom",
    "kahan_step",
    "kahan_inverse",
    "hamiltonian",
    "linear_transform",
    "SINGULAR_RTOL",
]

SINGULAR_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class PolarSystem:
    """``x'' = -K grad W(x)`` with constant symmetric ``K`` and ``deg W <= 4``.

    ``K`` is stored exactly (floats are converted to their exact binary value).
    """

    K: np.ndarray
    W: MultiPoly

    def __post_init__(self):
        K = as_exact(self.K)
        if K.ndim != 2 or K.shape[0] != K.shape[1]:
            raise ValueError(f"K must be square, got shape {K.shape}")
        if K.shape[0] != self.W.nvars:
            raise ValueError(f"K is {K.shape[0]}x{K.shape[0]} but W has {self.W.nvars} variables")
        if not np.array_equal(K, K.T):
            raise ValueError("K must be symmetric")
        if self.W.degree > 4:
            raise ValueError(f"W has degree {self.W.degree} > 4")
        object.__setattr__(self, "K", K)

    @classmethod
    def from_text(cls, K, W: str) -> PolarSystem:
        K = as_exact(K)
        return cls(K, parse(W, K.shape[0]))

    @property
    def n(self) -> int:
        return self.W.nvars

    @property
    def homogeneous(self) -> bool:
        """True when ``W`` is a homogeneous quartic (or zero)."""
        return self.W.is_homogeneous(4)

    @cached_property
    def K_float(self) -> np.ndarray:
        return self.K.astype(float)

    @cached_property
    def potential(self) -> PotentialPolarization:
        return PotentialPolarization(self.W)

    @cached_property
    def force(self) -> tuple[MultiPoly, ...]:
        """The vector field ``f = -K grad W``."""
        g = self.W.grad()
        zero = MultiPoly.zero(self.n)
        return tuple(
            -sum((g[j] * self.K[i, j] for j in range(self.n)), zero) for i in range(self.n)
        )

    @cached_property
    def force_jacobian_form(self) -> PolarizedForm:
        return PolarizedForm(jacobian(self.force), 2)

    def K_for(self, exact: bool) -> np.ndarray:
        return self.K if exact else self.K_float

    def K_inverse(self, exact: bool) -> np.ndarray:
        try:
            if exact:
                return self._K_inv_exact
            return self._K_inv_float
        except np.linalg.LinAlgError as err:
            raise NonInvertibleK("K is singular") from err

    @cached_property
    def _K_inv_exact(self):
        return linalg.inv(self.K)

    @cached_property
    def _K_inv_float(self):
        return self._K_inv_exact.astype(float)


@dataclass(frozen=True, eq=False)
class PolarState:
    """Two consecutive points ``(x0, x1)`` and the step size ``h``.

    Coordinates are kept exact when ``x0``, ``x1`` and ``h`` are all rational.
    """

    x0: np.ndarray
    x1: np.ndarray
    h: object

    def __post_init__(self):
        exact = is_exact(list(np.ravel(self.x0))) and is_exact(list(np.ravel(self.x1))) and is_exact(self.h)
        x0 = as_vector(self.x0, exact)
        x1 = as_vector(self.x1, exact)
        if x0.shape != x1.shape or x0.ndim != 1:
            raise ValueError(f"x0 and x1 must be vectors of equal length, got {x0.shape}, {x1.shape}")
        h = as_scalar(self.h, exact)
        if h == 0:
            raise ValueError("step size h must be nonzero")
        object.__setattr__(self, "x0", x0)
        object.__setattr__(self, "x1", x1)
        object.__setattr__(self, "h", h)

    @property
    def exact(self) -> bool:
        return self.x0.dtype == object

    def as_float(self) -> PolarState:
        return PolarState(self.x0.astype(float), self.x1.astype(float), float(self.h))


@dataclass(frozen=True)
class StepMatrix:
    M01: np.ndarray
    detM01: object


def _zeros(n, exact):
    if exact:
        z = np.empty(n, dtype=object)
        z[:] = Fraction(0)
        return z
    return np.zeros(n)


def _affine(sys: PolarSystem, x0, x1, exact: bool, method: str):
    """``(V01, b)`` with ``V(x0, x1, x2, .) = V01 @ x2 + b``."""
    P = sys.potential
    n = sys.n
    if method == "direct":
        # pol_3 of grad W at (x0, x1, 0) and (x0, x1, e_j)
        if exact:
            zero = _zeros(n, True)
            b = P.grad_form.evaluate([x0, x1, zero])
            V = np.empty((n, n), dtype=object)
            for j in range(n):
                e = zero.copy()
                e[j] = Fraction(1)
                V[:, j] = P.grad_form.evaluate([x0, x1, e]) - b
            return V, b
        batch = np.zeros((n + 1, 3, n))
        batch[:, 0] = x0
        batch[:, 1] = x1
        batch[1:, 2] = np.eye(n)
        vals = P.grad_form.evaluate_batch(batch)
        b = vals[0]
        return (vals[1:] - b).T, b
    if method == "hessian":
        V = P.matrix(x0, x1)
        if sys.homogeneous:
            return V, _zeros(n, exact)
        return V, P.grad_form.evaluate([x0, x1, _zeros(n, exact)])
    if method == "homogenized":
        Vt = P.extended_matrix(x0, x1)
        return Vt[:n, :n], Vt[:n, n]
    raise ValueError(f"unknown method {method!r}")


def _check(M, hKV, exact):
    d = linalg.det(M)
    if exact:
        if d == 0:
            raise SingularStep("step matrix is singular", d)
    elif not abs(d) >= SINGULAR_RTOL * (1.0 + np.linalg.norm(hKV)):
        raise SingularStep(f"step matrix is numerically singular (det={d:.3e})", d)
    return d


def _step_system(sys, a, b_pt, h, exact, method):
    """Matrix and right side for the unknown third point given two known ones."""
    V, b = _affine(sys, a, b_pt, exact, method)
    K = sys.K_for(exact)
    hKV = h * h * (K @ V)
    M = linalg.eye(sys.n, exact) + hKV
    rhs = 2 * b_pt - a - h * h * (K @ b)
    return M, rhs, hKV


def step(sys: PolarSystem, s: PolarState, method: str = "direct") -> PolarState:
    """Advance ``(x0, x1)`` to ``(x1, x2)``.

    ``method`` picks how the affine dependence on ``x2`` is extracted:
    ``"direct"`` (inclusion-exclusion on the gradient), ``"hessian"``
    (polarized Hessian) or ``"homogenized"`` (extended system in n+1
    variables restricted to z = 1). All three agree exactly on rational data.

    Raises
    ------
    SingularStep
        If the step matrix is singular at ``(x0, x1)``.
    """
    exact = s.exact
    M, rhs, hKV = _step_system(sys, s.x0, s.x1, s.h, exact, method)
    _check(M, hKV, exact)
    x2 = linalg.solve(M, rhs)
    return PolarState(s.x1, x2, s.h)


def inverse_step(sys: PolarSystem, s: PolarState, method: str = "direct") -> PolarState:
    """Map ``(x1, x2)`` (given as ``s.x0, s.x1``) back to ``(x0, x1)``."""
    exact = s.exact
    M, rhs, hKV = _step_system(sys, s.x1, s.x0, s.h, exact, method)
    _check(M, hKV, exact)
    x0 = linalg.solve(M, rhs)
    return PolarState(x0, s.x0, s.h)


def _M(sys, x0, x1, h, exact):
    V = sys.potential.matrix(x0, x1) if exact else sys.potential.matrix_float(x0, x1)
    hKV = h * h * (sys.K_for(exact) @ V)
    return linalg.eye(sys.n, exact) + hKV, hKV, V


def step_matrix(sys: PolarSystem, s: PolarState) -> StepMatrix:
    M, hKV, _ = _M(sys, s.x0, s.x1, s.h, s.exact)
    return StepMatrix(M, linalg.det(M))


def jacobian_det(sys: PolarSystem, s: PolarState):
    """Determinant of the derivative of ``(x0, x1) -> (x1, x2)``, as ``det M12 / det M01``."""
    M01, hKV, _ = _M(sys, s.x0, s.x1, s.h, s.exact)
    d01 = _check(M01, hKV, s.exact)
    x2 = step(sys, s).x1
    M12, _, _ = _M(sys, s.x1, x2, s.h, s.exact)
    return linalg.det(M12) / d01


def jacobian_matrix(sys: PolarSystem, s: PolarState) -> np.ndarray:
    """Full 2n x 2n derivative of ``(x0, x1) -> (x1, x2)`` by implicit differentiation."""
    exact, h, n = s.exact, s.h, sys.n
    M01, hKV, _ = _M(sys, s.x0, s.x1, h, exact)
    _check(M01, hKV, exact)
    x2 = step(sys, s).x1
    K = sys.K_for(exact)
    I = linalg.eye(n, exact)
    V12 = sys.potential.matrix(s.x1, x2)
    V02 = sys.potential.matrix(s.x0, x2)
    d_x0 = linalg.solve(M01, -I - h * h * (K @ V12))
    d_x1 = linalg.solve(M01, 2 * I - h * h * (K @ V02))
    J = np.empty((2 * n, 2 * n), dtype=object if exact else float)
    J[:n, :n] = 0 * I
    J[:n, n:] = I
    J[n:, :n] = d_x0
    J[n:, n:] = d_x1
    return J


def measure_density(sys: PolarSystem, s: PolarState, via: str = "M01"):
    """Invariant density ``1 / det M01``.

    ``via="Df"`` evaluates the same quantity as
    ``1 / det(I - h**2/3 pol_2 Df(x0, x1))`` from the force field ``f = -K grad W``.
    """
    exact = s.exact
    if via == "M01":
        M, hKV, _ = _M(sys, s.x0, s.x1, s.h, exact)
    elif via == "Df":
        A = sys.force_jacobian_form(s.x0, s.x1)
        hKV = -(s.h * s.h) * A / 3
        M = linalg.eye(sys.n, exact) + hKV
    else:
        raise ValueError(f"unknown via {via!r}")
    d = _check(M, hKV, exact)
    return 1 / d


def first_integral(sys: PolarSystem, s: PolarState):
    """Conserved quantity of the polar map for a homogeneous quartic ``W``:

        F = dx^T K^-1 M01^-1 dx - 1/2 x0^T K^-1 (M01^-1 - I) x1,   dx = x1 - x0.

    ``M01^-1 - I`` is evaluated as ``-M01^-1 h^2 K V01`` to avoid cancellation.
    """
    if not sys.homogeneous:
        raise ValueError("first_integral needs a homogeneous quartic W; use first_integral_nonhom")
    exact, h = s.exact, s.h
    Kinv = sys.K_inverse(exact)
    M, hKV, V = _M(sys, s.x0, s.x1, h, exact)
    _check(M, hKV, exact)
    d = s.x1 - s.x0
    K = sys.K_for(exact)
    rhs = np.stack([d, K @ (V @ s.x1)], axis=1)
    Y = Kinv @ linalg.solve(M, rhs)
    return d @ Y[:, 0] + h * h * (s.x0 @ Y[:, 1]) / 2


def first_integral_nonhom(sys: PolarSystem, s: PolarState):
    """Conserved quantity for any ``W`` of degree ``<= 4``.

    Limit as eps -> 0 of the homogeneous integral of the extended system with
    ``K~ = diag(K, eps)`` restricted to z = 1, in closed form. With
    ``V~01 = [[A, b], [b^T, c]]``, ``M = I + h^2 K A``, ``q = h^2 K b`` and
    ``P^-1 = K^-1 M^-1``::

        F0 = dx^T P^-1 dx
             + 1/2 (h^2 x0^T P^-1 K A x1 + (x0 + x1)^T P^-1 q - q^T P^-1 q + h^2 c)

    Equal to :func:`first_integral` when ``W`` is a homogeneous quartic.
    """
    exact, h, n = s.exact, s.h, sys.n
    Kinv = sys.K_inverse(exact)
    K = sys.K_for(exact)
    P = sys.potential
    Vt = P.extended_matrix(s.x0, s.x1) if exact else P.extended_matrix_float(s.x0, s.x1)
    A, b, c = Vt[:n, :n], Vt[:n, n], Vt[n, n]
    hKV = h * h * (K @ A)
    M = linalg.eye(n, exact) + hKV
    _check(M, hKV, exact)
    q = h * h * (K @ b)
    d = s.x1 - s.x0
    rhs = np.stack([d, K @ (A @ s.x1), q], axis=1)
    Y = Kinv @ linalg.solve(M, rhs)
    return d @ Y[:, 0] + (
        h * h * (s.x0 @ Y[:, 1]) + (s.x0 + s.x1) @ Y[:, 2] - q @ Y[:, 2] + h * h * c
    ) / 2


def hamiltonian(sys: PolarSystem, s: PolarState):
    """``H = p^T K p / 2 + W(x0)`` with ``p = K^-1 (x1 - x0) / h``.

    Reporting only; the polar map does not conserve ``H`` exactly.
    """
    exact = s.exact
    Kinv = sys.K_inverse(exact)
    p = Kinv @ (s.x1 - s.x0) / s.h
    W = sys.W.eval(list(s.x0)) if exact else float(sys.W.float_evaluator()(s.x0[None])[0, 0])
    return p @ (sys.K_for(exact) @ p) / 2 + W


# Kahan map


@lru_cache(maxsize=64)
def _vector_evaluators(f: tuple[MultiPoly, ...]):
    J = jacobian(f)
    return FloatEvaluator(list(f)), FloatEvaluator([p for row in J for p in row]), J


def _eval_field(f, x, exact):
    ev, jev, J = _vector_evaluators(tuple(f))
    n = len(f)
    if exact:
        pt = list(x)
        fx = np.array([p.eval(pt) for p in f], dtype=object)
        Jx = np.array([[p.eval(pt) for p in row] for row in J], dtype=object)
        return fx, Jx
    return ev(x[None])[0], jev(x[None])[0].reshape(n, n)


def _check_quadratic(f):
    if not f:
        raise ValueError("empty vector field")
    if max(p.degree for p in f) > 2:
        raise ValueError("Kahan's method needs a vector field of degree <= 2")
    if any(p.nvars != len(f) for p in f):
        raise ValueError("vector field must map R^n to R^n")


def kahan_step(f: Sequence[MultiPoly], x, h):
    """One step ``x' = x + h (I - h/2 f'(x))^-1 f(x)`` for quadratic ``f``."""
    _check_quadratic(f)
    exact = is_exact(list(x)) and is_exact(h)
    x = as_vector(x, exact)
    h = as_scalar(h, exact)
    fx, Jx = _eval_field(f, x, exact)
    hJ = -(h / 2) * Jx
    M = linalg.eye(len(f), exact) + hJ
    _check(M, hJ, exact)
    return x + h * linalg.solve(M, fx)


def kahan_inverse(f: Sequence[MultiPoly], xp, h):
    """Inverse step ``x = x' - h (I + h/2 f'(x'))^-1 f(x')``."""
    _check_quadratic(f)
    exact = is_exact(list(xp)) and is_exact(h)
    xp = as_vector(xp, exact)
    h = as_scalar(h, exact)
    fx, Jx = _eval_field(f, xp, exact)
    hJ = (h / 2) * Jx
    M = linalg.eye(len(f), exact) + hJ
    _check(M, hJ, exact)
    return xp - h * linalg.solve(M, fx)


def linear_transform(sys: PolarSystem, A) -> PolarSystem:
    """The system for ``y = A x``: ``K -> A K A^T`` and ``W -> W(A^-1 y)``."""
    A = as_exact(A)
    Ainv = linalg.inv(A)
    n = sys.n
    ys = MultiPoly.variables(n)
    zero = MultiPoly.zero(n)
    subs = [sum((ys[j] * Ainv[i, j] for j in range(n)), zero) for i in range(n)]
    return PolarSystem(A @ sys.K @ A.T, sys.W.compose(subs))
