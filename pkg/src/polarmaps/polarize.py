"""Polarization of polynomials and polynomial vector/matrix fields.

For ``f`` of degree ``<= d`` the degree-``d`` polarization is the symmetric
form in ``d`` points that restricts to ``f`` on the diagonal; nonhomogeneous
``f`` is handled by homogenizing with an extra coordinate fixed at 1. Values
are computed with the inclusion-exclusion rule

    pol_d f(x_0, ..., x_{d-1}) = 1/d! * sum_S (-1)**(d - |S|) |S|**d f(mean of x_S)

over nonempty subsets ``S``, which needs ``2**d - 1`` evaluations of ``f`` and
never stores a rank-``d`` tensor.

Two independent routes exist for cross-checking: :meth:`PolarizedForm.symbolic`
expands the polarization as a polynomial by summing over slot permutations,
and :func:`quartic_tensor` builds the dense symmetric tensor of a quartic
potential.
"""
from __future__ import annotations

import itertools
import math
from fractions import Fraction
from functools import cached_property
from typing import Sequence

import numpy as np

from .linalg import as_vector, is_exact
from .multipoly import FloatEvaluator, MultiPoly

__all__ = [
    "PolarizedForm",
    "pol_eval",
    "PotentialPolarization",
    "pol_matrix",
    "pol_rhs",
    "quartic_tensor",
    "MAX_DEGREE",
]

MAX_DEGREE = 5


def _poly_array(base) -> np.ndarray:
    if isinstance(base, MultiPoly):
        arr = np.empty((), dtype=object)
        arr[()] = base
        return arr
    rows = list(base)
    if rows and not isinstance(rows[0], MultiPoly):
        rows = [list(r) for r in rows]
        arr = np.empty((len(rows), len(rows[0])), dtype=object)
        for i, r in enumerate(rows):
            if len(r) != arr.shape[1]:
                raise ValueError("ragged polynomial matrix")
            for j, p in enumerate(r):
                arr[i, j] = p
        return arr
    arr = np.empty(len(rows), dtype=object)
    for i, p in enumerate(rows):
        arr[i] = p
    return arr


class PolarizedForm:
    """Degree-``d`` polarization of a polynomial, vector or matrix of polynomials.

    Parameters
    ----------
    base : MultiPoly, sequence of MultiPoly, or nested sequence (matrix)
        Entries share ``nvars`` and have degree ``<= d``.
    d : int
        Number of point arguments, ``1 <= d <= 5``.
    """

    def __init__(self, base, d: int):
        if not 1 <= d <= MAX_DEGREE:
            raise ValueError(f"polarization degree must be in 1..{MAX_DEGREE}, got {d}")
        self.base = _poly_array(base)
        polys = list(self.base.flat)
        if not polys:
            raise ValueError("empty base")
        nv = {p.nvars for p in polys}
        if len(nv) != 1:
            raise ValueError("all entries must share nvars")
        self.nvars = nv.pop()
        top = max(p.degree for p in polys)
        if top > d:
            raise ValueError(f"base has degree {top} > polarization degree {d}")
        self.d = d
        self.shape = self.base.shape
        self._polys = polys

        subsets = [S for m in range(1, d + 1) for S in itertools.combinations(range(d), m)]
        self._subsets = subsets
        self._weights_exact = [
            Fraction((-1) ** (d - len(S)) * len(S) ** d, math.factorial(d)) for S in subsets
        ]
        self._weights = np.array([float(w) for w in self._weights_exact])
        mix = np.zeros((len(subsets), d))
        for r, S in enumerate(subsets):
            mix[r, list(S)] = 1.0 / len(S)
        self._mix = mix

    @cached_property
    def _evaluator(self) -> FloatEvaluator:
        return FloatEvaluator(self._polys)

    def stage_weights(self) -> list[tuple[tuple[int, ...], Fraction]]:
        """``(subset, weight)`` pairs of the inclusion-exclusion rule."""
        return list(zip(self._subsets, self._weights_exact))

    def __call__(self, *points):
        return self.evaluate(points)

    def evaluate(self, points: Sequence):
        """Polarization at ``d`` points; exact if all coordinates are rational."""
        if len(points) != self.d:
            raise ValueError(f"need exactly {self.d} points, got {len(points)}")
        exact = all(is_exact(list(p)) if not isinstance(p, np.ndarray) else is_exact(p) for p in points)
        pts = [as_vector(p, exact) for p in points]
        for p in pts:
            if p.shape != (self.nvars,):
                raise ValueError(f"point of shape {p.shape}, expected ({self.nvars},)")
        if exact:
            return self._evaluate_exact(pts)
        return self.evaluate_batch(np.stack(pts)[None])[0]

    def _evaluate_exact(self, pts):
        out = np.empty(len(self._polys), dtype=object)
        out[:] = Fraction(0)
        for S, w in zip(self._subsets, self._weights_exact):
            m = len(S)
            stage = [sum((pts[i][k] for i in S), Fraction(0)) / m for k in range(self.nvars)]
            for j, p in enumerate(self._polys):
                out[j] += w * p.eval(stage)
        if self.shape == ():
            return out[0]
        return out.reshape(self.shape)

    def evaluate_batch(self, P: np.ndarray) -> np.ndarray:
        """Floating evaluation at a batch of point tuples, ``P`` of shape (B, d, nvars)."""
        P = np.asarray(P, dtype=float)
        B = P.shape[0]
        stages = np.einsum("sd,bdn->bsn", self._mix, P).reshape(-1, self.nvars)
        vals = self._evaluator(stages).reshape(B, len(self._subsets), -1)
        out = np.einsum("s,bsk->bk", self._weights, vals)
        return out.reshape((B,) + self.shape)

    def symbolic(self):
        """The polarization as polynomial(s) in ``d * nvars`` variables.

        Point ``k`` occupies variables ``k*nvars .. (k+1)*nvars - 1``. Built by
        averaging over slot permutations of each monomial, independently of the
        inclusion-exclusion rule used by :meth:`evaluate`.
        """
        out = np.empty(self.shape, dtype=object)
        for idx, p in np.ndenumerate(self.base):
            out[idx] = polarize_symbolic(p, self.d)
        return out[()] if self.shape == () else out


def polarize_symbolic(p: MultiPoly, d: int) -> MultiPoly:
    n = p.nvars
    N = d * n
    terms: dict[tuple[int, ...], Fraction] = {}
    for exp, c in p.terms.items():
        # multiset of slot contents; n stands for the homogenizing coordinate (== 1)
        slots = [v for v, e in enumerate(exp) for _ in range(e)] + [n] * (d - sum(exp))
        perms = set(itertools.permutations(slots))
        scale = c * Fraction(
            math.prod(math.factorial(e) for e in exp) * math.factorial(d - sum(exp)),
            math.factorial(d),
        )
        for perm in perms:
            e = [0] * N
            for k, v in enumerate(perm):
                if v < n:
                    e[k * n + v] += 1
            key = tuple(e)
            terms[key] = terms.get(key, 0) + scale
    return MultiPoly(N, terms)


def pol_eval(F: PolarizedForm, points: Sequence):
    return F.evaluate(points)


def quartic_tensor(W: MultiPoly) -> np.ndarray:
    """Dense symmetric tensor ``V`` of the homogenized quartic, ``W~ = V(y,y,y,y)/4``.

    Shape ``(n+1,)*4`` with Fraction entries; the last index is the
    homogenizing coordinate. Intended as a cross-check for ``n <= 8``.
    """
    if W.degree > 4:
        raise ValueError("potential must have degree <= 4")
    if W.nvars > 8:
        raise ValueError("dense tensor backend is limited to n <= 8")
    Wh = W.homogenize(4)
    N = Wh.nvars
    V = np.empty((N,) * 4, dtype=object)
    V[...] = Fraction(0)
    for exp, c in Wh.terms.items():
        slots = [v for v, e in enumerate(exp) for _ in range(e)]
        val = c * math.prod(math.factorial(e) for e in exp) / 6
        for perm in set(itertools.permutations(slots)):
            V[perm] = val
    return V


class PotentialPolarization:
    """Polarized derivatives of a potential ``W`` of degree ``<= 4``.

    Holds ``pol_3`` of the gradient and ``pol_2`` of the Hessian, plus the same
    objects for the homogenized potential in ``n + 1`` variables.
    """

    def __init__(self, W: MultiPoly):
        if W.degree > 4:
            raise ValueError(f"potential has degree {W.degree} > 4")
        self.W = W
        self.n = W.nvars
        self.grad_form = PolarizedForm(W.grad(), 3)
        self.hess_form = PolarizedForm(W.hessian(), 2)

    @cached_property
    def homogenized(self) -> MultiPoly:
        return self.W.homogenize(4)

    @cached_property
    def extended_hess_form(self) -> PolarizedForm:
        return PolarizedForm(self.homogenized.hessian(), 2)

    @cached_property
    def tensor(self) -> np.ndarray:
        return quartic_tensor(self.W)

    @cached_property
    def tensor_float(self) -> np.ndarray:
        return self.tensor.astype(float)

    def matrix(self, x0, x1):
        """``V(x0, x1, ., .)`` as ``pol_2 Hess W / 3`` (symmetrized in floating point)."""
        V = self.hess_form(x0, x1) / 3
        if V.dtype != object:
            V = 0.5 * (V + V.T)
        return V

    def matrix_tensor(self, x0, x1):
        """Same matrix by contracting the dense quartic tensor (cross-check)."""
        exact = is_exact(list(x0)) and is_exact(list(x1))
        V = self.tensor if exact else self.tensor_float
        y0 = _extend(as_vector(x0, exact), exact)
        y1 = _extend(as_vector(x1, exact), exact)
        full = np.tensordot(np.tensordot(V, y0, axes=([0], [0])), y1, axes=([0], [0]))
        return full[: self.n, : self.n]

    def _contract_float(self, x0, x1) -> np.ndarray:
        T = self.tensor_float
        m = T.shape[0]
        y0 = np.append(np.asarray(x0, dtype=float), 1.0)
        y1 = np.append(np.asarray(x1, dtype=float), 1.0)
        return ((T.reshape(m * m * m, m) @ y1).reshape(m * m, m) @ y0).reshape(m, m)

    def matrix_float(self, x0, x1) -> np.ndarray:
        """Floating ``V(x0, x1, ., .)``, contracting the cached tensor when ``n <= 8``."""
        if self.n > 8:
            return self.matrix(np.asarray(x0, dtype=float), np.asarray(x1, dtype=float))
        return self._contract_float(x0, x1)[: self.n, : self.n]

    def extended_matrix_float(self, x0, x1) -> np.ndarray:
        """Floating counterpart of :meth:`extended_matrix`."""
        if self.n > 8:
            return self.extended_matrix(np.asarray(x0, dtype=float), np.asarray(x1, dtype=float))
        return self._contract_float(x0, x1)

    def extended_matrix(self, x0, x1):
        """``V~([x0,1], [x1,1], ., .)``, the (n+1)x(n+1) matrix of the homogenized potential."""
        exact = is_exact(list(x0)) and is_exact(list(x1))
        y0 = _extend(as_vector(x0, exact), exact)
        y1 = _extend(as_vector(x1, exact), exact)
        V = self.extended_hess_form(y0, y1) / 3
        if V.dtype != object:
            V = 0.5 * (V + V.T)
        return V

    def rhs(self, x0, x1, x2):
        """``V(x0, x1, x2, .)`` as ``pol_3`` of the gradient."""
        return self.grad_form(x0, x1, x2)


def _extend(y: np.ndarray, exact: bool) -> np.ndarray:
    one = Fraction(1) if exact else 1.0
    out = np.empty(len(y) + 1, dtype=object if exact else float)
    out[:-1] = y
    out[-1] = one
    return out


def pol_matrix(P: PotentialPolarization, x0, x1, method: str = "pol2"):
    """Symmetric matrix ``V01`` with ``V(x0, x1, x2, .) = V01 @ x2`` (plus a constant
    vector when ``W`` is not a homogeneous quartic).

    ``method`` selects ``"pol2"`` (default), ``"tensor"`` or ``"homogenized"``.
    """
    if len(x0) != P.n or len(x1) != P.n:
        raise ValueError(f"points must have dimension {P.n}")
    if method == "pol2":
        return P.matrix(x0, x1)
    if method == "tensor":
        return P.matrix_tensor(x0, x1)
    if method == "homogenized":
        return P.extended_matrix(x0, x1)[: P.n, : P.n]
    raise ValueError(f"unknown method {method!r}")


def pol_rhs(P: PotentialPolarization, x0, x1, x2):
    for x in (x0, x1, x2):
        if len(x) != P.n:
            raise ValueError(f"points must have dimension {P.n}")
    return P.rhs(x0, x1, x2)
