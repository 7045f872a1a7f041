"""Dense linear algebra over floats or exact rationals.

Arrays of dtype ``object`` holding :class:`~fractions.Fraction` entries are
treated as exact; everything else goes through numpy/LAPACK (LU with partial
pivoting).
"""
from __future__ import annotations

from fractions import Fraction
from numbers import Integral, Rational

import numpy as np

from .multipoly import to_fraction


def is_exact(*arrays) -> bool:
    """True if every argument is a rational scalar or an object/integer array."""
    for a in arrays:
        if isinstance(a, np.ndarray):
            if a.dtype != object and not np.issubdtype(a.dtype, np.integer):
                return False
        elif isinstance(a, (list, tuple)):
            if not all(is_exact(v) for v in a):
                return False
        elif isinstance(a, (bool, np.bool_)) or not isinstance(a, (Integral, Rational)):
            return False
    return True


def as_exact(a) -> np.ndarray:
    arr = np.asarray(a, dtype=object)
    out = np.empty(arr.shape, dtype=object)
    for idx, v in np.ndenumerate(arr):
        out[idx] = to_fraction(v)
    return out


def as_vector(x, exact: bool | None = None) -> np.ndarray:
    """Coerce a point to a float array, or to an exact object array if it is rational."""
    if exact is None:
        exact = is_exact(x) if isinstance(x, np.ndarray) else is_exact(list(x))
    if exact:
        return as_exact(x)
    return np.asarray(x, dtype=float)


def as_scalar(h, exact: bool):
    return to_fraction(h) if exact else float(h)


def eye(n: int, exact: bool) -> np.ndarray:
    if exact:
        out = np.empty((n, n), dtype=object)
        out[...] = Fraction(0)
        for i in range(n):
            out[i, i] = Fraction(1)
        return out
    return np.eye(n)


def _lu_exact(M):
    """Gaussian elimination on a copy; returns (rows, perm sign) or raises on singular."""
    A = [list(r) for r in M]
    n = len(A)
    sign = 1
    for k in range(n):
        piv = next((i for i in range(k, n) if A[i][k] != 0), None)
        if piv is None:
            return None, 0
        if piv != k:
            A[k], A[piv] = A[piv], A[k]
            sign = -sign
        for i in range(k + 1, n):
            if A[i][k] != 0:
                f = A[i][k] / A[k][k]
                for j in range(k, n):
                    A[i][j] -= f * A[k][j]
    return A, sign


def det(M: np.ndarray):
    if M.dtype == object:
        A, sign = _lu_exact(M)
        if A is None:
            return Fraction(0)
        out = Fraction(sign)
        for i in range(len(A)):
            out *= A[i][i]
        return out
    return float(np.linalg.det(M))


def solve(M: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve ``M x = b``; ``b`` may be a vector or a matrix of right-hand sides."""
    if M.dtype != object:
        return np.linalg.solve(M, b)
    n = M.shape[0]
    vec = b.ndim == 1
    B = b.reshape(n, -1)
    A = [list(M[i]) + list(B[i]) for i in range(n)]
    ncol = len(A[0])
    for k in range(n):
        piv = next((i for i in range(k, n) if A[i][k] != 0), None)
        if piv is None:
            raise np.linalg.LinAlgError("Singular matrix")
        A[k], A[piv] = A[piv], A[k]
        inv = 1 / A[k][k]
        A[k] = [v * inv for v in A[k]]
        for i in range(n):
            if i != k and A[i][k] != 0:
                f = A[i][k]
                A[i] = [a - f * c for a, c in zip(A[i], A[k])]
    X = np.empty((n, ncol - n), dtype=object)
    for i in range(n):
        X[i] = A[i][n:]
    return X[:, 0] if vec else X


def inv(M: np.ndarray) -> np.ndarray:
    if M.dtype != object:
        return np.linalg.inv(M)
    return solve(M, eye(M.shape[0], True))
