"""Discrete Darboux polynomials of birational maps.

A polynomial ``P`` is a Darboux polynomial of a map ``phi`` with cofactor ``C``
when ``P(phi(x)) = C(x) P(x)``. Cofactors are taken from products of factors
of the map's Jacobian determinant, with a constant scale that is discovered
from the data. For a fixed cofactor, finding ``P`` up to a degree bound is a
linear problem solved by sampling and nullspace extraction; the resulting
bases are rationalized and re-checked in exact arithmetic.

Darboux polynomials combine into first integrals (products with cofactor
product 1) and invariant densities ``rho`` with
``rho(phi(x)) * det Dphi(x) = rho(x)`` (products with cofactor product
``1 / det Dphi``).
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np
import sympy

from . import linalg
from .exceptions import SingularStep
from .multipoly import (
    FloatEvaluator,
    MultiPoly,
    poly_adjugate,
    poly_det,
    poly_matvec,
    to_fraction,
)
from .polarmap import PolarState, PolarSystem, step

__all__ = [
    "BirationalMap",
    "FactorPool",
    "CofactorCandidate",
    "DarbouxSpace",
    "Invariant",
    "DarbouxReport",
    "polar_birational_map",
    "factor_jacobian",
    "enumerate_cofactors",
    "find_darboux",
    "darboux_spectrum",
    "assemble_invariants",
    "check_continuous_darboux",
    "verify_darboux",
    "discover",
]

NULL_RTOL = 1e-9
VALIDATE_RTOL = 1e-8


@dataclass(frozen=True, eq=False)
class BirationalMap:
    """A map on R^N given by an evaluator plus its Jacobian determinant ``num/den``.

    ``forward`` accepts a 1-d array, float or exact (object dtype with
    Fractions), and returns the image in the same arithmetic.
    """

    forward: Callable[[np.ndarray], np.ndarray]
    n_total: int
    jac_num: MultiPoly
    jac_den: MultiPoly

    def __post_init__(self):
        for p in (self.jac_num, self.jac_den):
            if p.nvars != self.n_total:
                raise ValueError("Jacobian polynomials must have n_total variables")
        if self.jac_den.is_zero():
            raise ValueError("zero Jacobian denominator")

    def jacobian_det(self, X: np.ndarray) -> np.ndarray:
        """Floating values of the Jacobian determinant at points ``X`` (npts, N)."""
        ev = FloatEvaluator([self.jac_num, self.jac_den])
        v = ev(np.atleast_2d(X))
        return v[:, 0] / v[:, 1]

    def orbit(self, x0, steps: int) -> np.ndarray:
        out = [np.asarray(x0, dtype=float)]
        for _ in range(steps):
            out.append(self.forward(out[-1]))
        return np.array(out)


def _drop_block(p: MultiPoly, keep: int) -> MultiPoly:
    """Set variables ``keep..`` to zero and drop them."""
    return MultiPoly(
        keep, {e[:keep]: c for e, c in p.terms.items() if not any(e[keep:])}
    )


def _substitute_cleared(p: MultiPoly, n: int, first: Sequence[MultiPoly], num, den, k: int):
    """``den**k * p(first, num/den)`` where ``p`` has two n-blocks and degree <= k in the second."""
    nv = den.nvars
    dpow = [MultiPoly.constant(nv, 1)]
    for _ in range(k):
        dpow.append(dpow[-1] * den)
    out = MultiPoly.zero(nv)
    for e, c in p.terms.items():
        e2 = sum(e[n:])
        if e2 > k:
            raise ValueError("degree in the second block exceeds the clearing power")
        term = dpow[k - e2] * c
        for i in range(n):
            if e[i]:
                term = term * first[i] ** e[i]
            if e[n + i]:
                term = term * num[i] ** e[n + i]
        out = out + term
    return out


def polar_birational_map(sys: PolarSystem, h) -> BirationalMap:
    """The polar map of ``sys`` with rational step ``h`` on R^{2n} = (x0, x1)."""
    h = to_fraction(h)
    n = sys.n
    N = 2 * n
    P = sys.potential
    K = sys.K
    h2 = h * h
    # V(x0, x1, ., .) in variables (x0, x1)
    V01 = [[q / 3 for q in row] for row in P.hess_form.symbolic()]
    b = [_drop_block(q, N) for q in P.grad_form.symbolic()]
    xs = MultiPoly.variables(N)
    zero = MultiPoly.zero(N)
    one = MultiPoly.constant(N, 1)
    KV = [[sum((V01[k][j] * K[i, k] for k in range(n)), zero) for j in range(n)] for i in range(n)]
    M01 = [[(one if i == j else zero) + KV[i][j] * h2 for j in range(n)] for i in range(n)]
    Kb = [sum((b[k] * K[i, k] for k in range(n)), zero) for i in range(n)]
    r = [xs[n + i] * 2 - xs[i] - Kb[i] * h2 for i in range(n)]
    D = poly_det(M01)
    x2num = poly_matvec(poly_adjugate(M01), r)
    # D * V(x1, x2, ., .): the polarized Hessian is affine in its second point
    x1s = xs[n:]
    DV12 = [[_substitute_cleared(q / 3, n, x1s, x2num, D, 1) for q in row] for row in P.hess_form.symbolic()]
    E = [
        [(D if i == j else zero) + sum((DV12[k][j] * K[i, k] for k in range(n)), zero) * h2 for j in range(n)]
        for i in range(n)
    ]
    num = poly_det(E)  # = D**n det M12
    den = D ** (n + 1)

    def forward(v):
        v = np.asarray(v)
        s = PolarState(v[:n], v[n:], h if v.dtype == object else float(h))
        t = step(sys, s)
        return np.concatenate([t.x0, t.x1])

    return BirationalMap(forward, N, num, den)


# factorization


def _to_sympy(p: MultiPoly, gens):
    return sympy.Poly.from_dict(
        {e: sympy.Rational(c.numerator, c.denominator) for e, c in p.terms.items()} or {(0,) * len(gens): 0},
        *gens,
        domain="QQ",
    )


def _from_sympy(q, nvars: int) -> MultiPoly:
    return MultiPoly(nvars, {e: Fraction(int(c.p), int(c.q)) for e, c in q.as_dict().items()})


def _normalize(p: MultiPoly) -> tuple[Fraction, MultiPoly]:
    """``p = scale * q`` with ``q`` primitive, integral, positive leading coefficient."""
    c = p.content()
    lead = next(iter(p.terms.values()))
    if lead < 0:
        c = -c
    return c, p / c


@dataclass(frozen=True)
class FactorPool:
    """Jacobian determinant as ``constant * prod(f**e)``; ``e < 0`` for denominator factors."""

    constant: Fraction
    factors: tuple[tuple[MultiPoly, int], ...]

    def __len__(self):
        return len(self.factors)

    def polys(self) -> list[MultiPoly]:
        return [f for f, _ in self.factors]

    def reproduces(self, num: MultiPoly, den: MultiPoly) -> bool:
        """Exact check that ``constant * prod f**e == num / den``."""
        top = MultiPoly.constant(num.nvars, self.constant) * den
        bottom = num
        for f, e in self.factors:
            if e > 0:
                top = top * f**e
            else:
                bottom = bottom * f ** (-e)
        return top == bottom


def factor_jacobian(bmap: BirationalMap) -> FactorPool:
    """Factor ``jac_num / jac_den`` over the rationals and cancel common factors.

    Irreducible factors are pairwise coprime and normalized to primitive
    integer polynomials with positive leading coefficient.
    """
    N = bmap.n_total
    gens = sympy.symbols(f"y0:{N}")
    exps: dict[MultiPoly, int] = {}
    const = Fraction(1)
    for poly, sign in ((bmap.jac_num, 1), (bmap.jac_den, -1)):
        if poly.is_zero():
            return FactorPool(Fraction(0), ())
        c, flist = _to_sympy(poly, gens).factor_list()
        const *= Fraction(int(c.p), int(c.q)) ** sign
        for q, mult in flist:
            f = _from_sympy(q, N)
            if f.degree == 0:
                const *= f.constant_term() ** (sign * mult)
                continue
            s, f = _normalize(f)
            const *= s ** (sign * mult)
            exps[f] = exps.get(f, 0) + sign * mult
    factors = tuple((f, e) for f, e in exps.items() if e)
    factors = tuple(sorted(factors, key=lambda fe: (fe[0].degree, -fe[1], str(fe[0]))))
    return FactorPool(const, factors)


# cofactors


@dataclass(frozen=True, eq=False)
class CofactorCandidate:
    """``scale * prod(f**e)`` over Jacobian factors; ``scale=None`` means "discover"."""

    factors: tuple[tuple[MultiPoly, int], ...]
    scale: Fraction | None = None

    def with_scale(self, scale) -> CofactorCandidate:
        return CofactorCandidate(self.factors, to_fraction(scale))

    @property
    def exponents(self) -> tuple[int, ...]:
        return tuple(e for _, e in self.factors)

    def _base(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        out = np.ones(X.shape[0])
        for f, e in self.factors:
            if e:
                out *= f.float_evaluator()(X)[:, 0] ** e
        return out

    def evaluate(self, X: np.ndarray) -> np.ndarray:
        s = 1.0 if self.scale is None else float(self.scale)
        return s * self._base(X)

    def evaluate_exact(self, x) -> Fraction:
        pt = list(x)
        out = Fraction(1) if self.scale is None else self.scale
        for f, e in self.factors:
            if e:
                out *= f.eval(pt) ** e
        return out

    def describe(self) -> dict:
        return {
            "factors": [{"poly": str(f), "exponent": e} for f, e in self.factors if e],
            "scale": None if self.scale is None else str(self.scale),
        }


def enumerate_cofactors(
    pool: FactorPool, max_exponent: int = 3, max_factors: int = 4, max_total: int | None = None
) -> list[CofactorCandidate]:
    """Products of pool factors with ``|e| <= max_exponent``.

    At most ``max_factors`` distinct factors appear and, if given, the summed
    ``|e|`` is at most ``max_total``. The empty product (constant cofactor)
    comes first; the full Jacobian determinant is always included.
    """
    polys = pool.polys()
    out = []
    rng = range(-max_exponent, max_exponent + 1)
    full = tuple(e for _, e in pool.factors)
    for exps in itertools.product(rng, repeat=len(polys)):
        nz = sum(1 for e in exps if e)
        total = sum(abs(e) for e in exps)
        if exps != full and (nz > max_factors or (max_total is not None and total > max_total)):
            continue
        out.append(CofactorCandidate(tuple(zip(polys, exps))))
    if full not in {c.exponents for c in out}:
        out.append(CofactorCandidate(pool.factors))
    out.sort(key=lambda c: (sum(abs(e) for e in c.exponents), c.exponents))
    return out


# sampling and the linear problem


def monomial_exponents(nvars: int, degree: int) -> list[tuple[int, ...]]:
    """Exponents of all monomials of total degree <= ``degree``, lowest degree first."""
    out = []
    for d in range(degree + 1):
        for combo in itertools.combinations_with_replacement(range(nvars), d):
            e = [0] * nvars
            for v in combo:
                e[v] += 1
            out.append(tuple(e))
    return out


def _monomials(X: np.ndarray, exps) -> np.ndarray:
    E = np.array(exps, dtype=np.int64)
    maxd = int(E.max(initial=0))
    pw = np.ones((maxd + 1,) + X.shape)
    for k in range(1, maxd + 1):
        pw[k] = pw[k - 1] * X
    out = np.ones((X.shape[0], len(exps)))
    for v in range(X.shape[1]):
        out *= pw[E[:, v], :, v].T
    return out


class _Samples:
    """Rational sample points, their images, and monomial tables for one degree."""

    def __init__(self, bmap: BirationalMap, degree: int, seed: int, oversample: int = 2, denom: int = 64):
        self.exps = monomial_exponents(bmap.n_total, degree)
        need = oversample * len(self.exps) + 10
        rng = np.random.default_rng(seed)
        X, Y = [], []
        tries = 0
        while len(X) < need:
            tries += 1
            if tries > 20 * need:
                raise RuntimeError("could not find enough points where the map is defined")
            num = rng.integers(-denom, denom + 1, size=bmap.n_total)
            x = np.array([Fraction(int(v), denom) for v in num], dtype=object)
            xf = x.astype(float)
            try:
                y = np.asarray(bmap.forward(xf), dtype=float)
            except (SingularStep, np.linalg.LinAlgError):
                continue
            if not np.all(np.isfinite(y)) or np.max(np.abs(y)) > 1e3:
                continue
            X.append(x)
            Y.append(y)
        self.X_exact = X
        self.X = np.array([x.astype(float) for x in X])
        self.Y = np.array(Y)
        self.mono_x = _monomials(self.X, self.exps)
        self.mono_y = _monomials(self.Y, self.exps)


@dataclass(eq=False)
class DarbouxSpace:
    """Polynomials of degree <= ``degree_bound`` sharing the cofactor ``cofactor``."""

    cofactor: CofactorCandidate
    degree_bound: int
    basis: list[MultiPoly]
    exact: bool = False
    residual: float = float("nan")
    derived: bool = False

    @property
    def dimension(self) -> int:
        return len(self.basis)

    def describe(self) -> dict:
        return {
            "cofactor": self.cofactor.describe(),
            "degree_bound": self.degree_bound,
            "dimension": self.dimension,
            "basis": [str(p) for p in self.basis],
            "exact": self.exact,
            "residual": self.residual,
            "derived": self.derived,
        }


def _row_scaled(Phi, Psi):
    s = np.maximum(np.abs(Phi).max(axis=1), np.abs(Psi).max(axis=1))
    s[s == 0] = 1.0
    return Phi / s[:, None], Psi / s[:, None]


def _nullspace(A: np.ndarray, rtol: float = NULL_RTOL) -> np.ndarray:
    _, sv, Vt = np.linalg.svd(A, full_matrices=True)
    if sv.size == 0:
        return Vt
    rank = int(np.sum(sv > rtol * sv[0]))
    return Vt[rank:]


def _rref(B: np.ndarray, tol: float = 1e-8) -> np.ndarray:
    B = B.copy()
    rows, cols = B.shape
    r = 0
    for c in range(cols):
        if r == rows:
            break
        piv = r + int(np.argmax(np.abs(B[r:, c])))
        if abs(B[piv, c]) < tol * np.abs(B).max():
            continue
        B[[r, piv]] = B[[piv, r]]
        B[r] /= B[r, c]
        for i in range(rows):
            if i != r:
                B[i] -= B[i, c] * B[r]
        r += 1
    return B[:r]


def _poly_from(coeffs, exps, nvars, max_den=None) -> MultiPoly:
    terms = {}
    for c, e in zip(coeffs, exps):
        if abs(c) < 1e-11:
            continue
        q = Fraction(float(c))
        terms[e] = q.limit_denominator(max_den) if max_den else q
    return MultiPoly(nvars, terms)


def verify_darboux(bmap: BirationalMap, P: MultiPoly, C: CofactorCandidate, points) -> bool:
    """Exact check of ``P(phi(x)) == C(x) P(x)`` at rational ``points``."""
    for x in points:
        x = linalg.as_exact(x)
        try:
            y = bmap.forward(x)
        except SingularStep:
            continue
        if P.eval(list(y)) != C.evaluate_exact(x) * P.eval(list(x)):
            return False
    return True


def _fresh_points(bmap, k, seed, denom=97):
    rng = np.random.default_rng(seed + 7919)
    return [
        np.array([Fraction(int(v), denom) for v in rng.integers(-denom, denom + 1, bmap.n_total)], dtype=object)
        for _ in range(k)
    ]


def _residual(bmap, basis, C, seed) -> float:
    rng = np.random.default_rng(seed + 104729)
    worst = 0.0
    for _ in range(8):
        x = rng.uniform(-1, 1, bmap.n_total)
        try:
            y = bmap.forward(x)
        except SingularStep:
            continue
        c = C.evaluate(x[None])[0]
        for P in basis:
            a, b = P.eval(list(y)), c * P.eval(list(x))
            worst = max(worst, abs(a - b) / max(abs(a), abs(b), 1e-300))
    return worst


def _exact_monomials(x, exps) -> list[Fraction]:
    pw = [[Fraction(1)] for _ in x]
    top = max((max(e) for e in exps), default=0)
    for v, xv in enumerate(x):
        for _ in range(top):
            pw[v].append(pw[v][-1] * xv)
    return [math.prod((pw[v][k] for v, k in enumerate(e)), start=Fraction(1)) for e in exps]


def _exact_basis(bmap, C, exps, dim, seed) -> list[MultiPoly] | None:
    """Nullspace over the rationals on the monomials ``exps``, in reduced echelon form.

    Rows come from exact map evaluations at rational points. Returns ``None``
    unless the dimension matches the floating estimate ``dim``.
    """
    from sympy import QQ
    from sympy.polys.matrices import DomainMatrix

    rng = np.random.default_rng(seed + 65537)
    rows = []
    denom = 11
    while len(rows) < len(exps) + 4:
        x = [Fraction(int(v), denom) for v in rng.integers(-denom, denom + 1, bmap.n_total)]
        try:
            y = bmap.forward(np.array(x, dtype=object))
        except SingularStep:
            continue
        c = C.evaluate_exact(x)
        if c == 0:
            continue
        rows.append(
            [QQ(a.numerator, a.denominator) for a in (my - c * mx for my, mx in zip(_exact_monomials(y, exps), _exact_monomials(x, exps)))]
        )
    null = DomainMatrix(rows, (len(rows), len(exps)), QQ).nullspace()
    if null.shape[0] != dim:
        return None
    null = null.rref()[0].to_list()
    return [
        MultiPoly(bmap.n_total, {e: Fraction(int(c.numerator), int(c.denominator)) for e, c in zip(exps, row) if c})
        for row in null
    ]


def _space_from_null(bmap, C, degree, null, samples, seed) -> DarbouxSpace | None:
    if null.shape[0] == 0:
        return None
    B = _rref(null)
    nv = bmap.n_total
    fresh = _fresh_points(bmap, 3, seed)

    def accept(basis):
        return all(not p.is_zero() for p in basis) and all(verify_darboux(bmap, p, C, fresh) for p in basis)

    for max_den in (10**3, 10**4, 10**6):
        basis = [_poly_from(row, samples.exps, nv, max_den) for row in B]
        if accept(basis):
            return DarbouxSpace(C, degree, basis, exact=True, residual=_residual(bmap, basis, C, seed))
    # exact linear algebra on the support of the floating basis
    support = np.abs(B).max(axis=0) > 1e-9 * np.abs(B).max()
    exps = [e for e, keep in zip(samples.exps, support) if keep]
    if C.scale is not None and C.scale == Fraction(float(C.scale)).limit_denominator(10**6):
        basis = _exact_basis(bmap, C, exps, B.shape[0], seed)
        if basis is not None and accept(basis):
            return DarbouxSpace(C, degree, basis, exact=True, residual=_residual(bmap, basis, C, seed))
    basis = [_poly_from(row, samples.exps, nv) for row in B]
    res = _residual(bmap, basis, C, seed)
    if res > VALIDATE_RTOL:
        return None
    return DarbouxSpace(C, degree, basis, exact=False, residual=res)


def _matrices(C: CofactorCandidate, samples: _Samples):
    c = C._base(samples.X)
    return _row_scaled(samples.mono_y, c[:, None] * samples.mono_x)


def find_darboux(
    bmap: BirationalMap,
    C: CofactorCandidate,
    degree_bound: int,
    seed: int = 0,
    samples: _Samples | None = None,
) -> DarbouxSpace:
    """Darboux polynomials of degree ``<= degree_bound`` for cofactor ``C``.

    With ``C.scale`` set, solves the nullspace problem for exactly that
    cofactor. With ``C.scale=None`` the constant is discovered (see
    :func:`darboux_spectrum`) and the largest space found is returned. An
    empty basis is a valid answer.
    """
    if degree_bound < 0:
        raise ValueError("degree_bound must be nonnegative")
    if C.scale is None:
        spaces = darboux_spectrum(bmap, C, degree_bound, seed=seed, samples=samples)
        if not spaces:
            return DarbouxSpace(C, degree_bound, [])
        return max(spaces, key=lambda s: (s.dimension, s.exact))
    samples = samples or _Samples(bmap, degree_bound, seed)
    Phi, Psi = _matrices(C, samples)
    null = _nullspace(Phi - float(C.scale) * Psi)
    return _space_from_null(bmap, C, degree_bound, null, samples, seed) or DarbouxSpace(C, degree_bound, [])


def darboux_spectrum(
    bmap: BirationalMap,
    C: CofactorCandidate,
    degree_bound: int,
    seed: int = 0,
    samples: _Samples | None = None,
) -> list[DarbouxSpace]:
    """All constants ``s`` for which ``s * C`` has Darboux polynomials, with their spaces.

    The pencil ``Phi p = s Psi p`` is reduced to the square eigenproblem
    ``pinv(Psi) Phi``; real eigenvalues are checked against the full
    rectangular system and rationalized.
    """
    samples = samples or _Samples(bmap, degree_bound, seed)
    Phi, Psi = _matrices(C, samples)
    B = np.linalg.lstsq(Psi, Phi, rcond=None)[0]
    eig, vecs = np.linalg.eig(B)
    # cheap screen: a genuine eigenpair also solves the rectangular system
    res = np.linalg.norm(Phi @ vecs - (Psi @ vecs) * eig, axis=0)
    res /= np.maximum(np.linalg.norm(Phi @ vecs, axis=0), 1e-300)
    scales = []
    for lam, r in zip(eig, res):
        if r > 1e-6 or abs(lam.imag) > 1e-7 * max(1.0, abs(lam)) or abs(lam.real) < 1e-12:
            continue
        lam = lam.real
        if any(abs(lam - s) <= 1e-7 * max(1.0, abs(s)) for s in scales):
            continue
        scales.append(lam)
    out = []
    for lam in scales:
        null = _nullspace(Phi - lam * Psi)
        if null.shape[0] == 0:
            continue
        exact_scale = Fraction(lam).limit_denominator(10**6)
        if abs(float(exact_scale) - lam) > 1e-8 * max(1.0, abs(lam)):
            exact_scale = Fraction(lam)
        space = _space_from_null(bmap, C.with_scale(exact_scale), degree_bound, null, samples, seed)
        if space is not None:
            out.append(space)
    return out


# assembling invariants


@dataclass(eq=False)
class Invariant:
    """``prod(P**a)`` tagged as a first integral or an invariant density."""

    kind: str
    factors: list[tuple[MultiPoly, int]]
    orbit_residual: float = float("nan")

    def __call__(self, x) -> float:
        x = np.asarray(x, dtype=float)
        out = 1.0
        for P, a in self.factors:
            out *= P.eval(list(x)) ** a
        return out

    def describe(self) -> dict:
        return {
            "kind": self.kind,
            "factors": [{"poly": str(P), "exponent": a} for P, a in self.factors],
            "orbit_residual": self.orbit_residual,
        }


def _orbit_residual(bmap, inv: Invariant, seed: int, steps: int = 50) -> float:
    rng = np.random.default_rng(seed + 31337)
    for _ in range(20):
        x = rng.uniform(-0.5, 0.5, bmap.n_total)
        try:
            orb = bmap.orbit(x, steps)
        except SingularStep:
            continue
        if not np.all(np.isfinite(orb)):
            continue
        vals = np.array([inv(p) for p in orb])
        if inv.kind == "integral":
            return float(np.max(np.abs(vals - vals[0])) / max(abs(vals[0]), 1e-300))
        jac = bmap.jacobian_det(orb[:-1])
        lhs = vals[1:] * jac
        return float(np.max(np.abs(lhs - vals[:-1]) / np.maximum(np.abs(vals[:-1]), 1e-300)))
    return float("nan")


def assemble_invariants(
    spaces: Sequence[DarbouxSpace],
    bmap: BirationalMap,
    max_exponent: int = 3,
    max_factors: int = 4,
    seed: int = 0,
) -> list[Invariant]:
    """Combine Darboux polynomials into integrals and invariant densities.

    * Two elements of one space give the integral ``P_i / P_0``.
    * Exponents ``a`` with ``prod C_i**a_i == 1`` give the integral ``prod P_i**a_i``.
    * Exponents with ``prod C_i**a_i == 1/det Dphi`` give the density ``prod P_i**a_i``.

    Cofactor relations are tested numerically at random points; every
    returned invariant is then checked along an orbit.
    """
    results: list[Invariant] = []
    spaces = [sp for sp in spaces if not sp.derived]
    for sp in spaces:
        for P in sp.basis[1:]:
            if sp.basis[0].degree > 0 or P.degree > 0:
                results.append(Invariant("integral", [(P, 1), (sp.basis[0], -1)]))

    reps = [(sp.basis[0], sp.cofactor) for sp in spaces if sp.basis and sp.basis[0].degree > 0]
    if reps:
        rng = np.random.default_rng(seed + 271828)
        X = rng.uniform(-1, 1, size=(12, bmap.n_total))
        C = np.array([c.evaluate(X) for _, c in reps])  # (k, npts)
        J = bmap.jacobian_det(X)
        ok = np.all(np.isfinite(C), axis=0) & np.isfinite(J) & np.all(C != 0, axis=0) & (J != 0)
        logC = np.log(np.abs(C[:, ok]))
        sgnC = np.sign(C[:, ok])
        logJ = np.log(np.abs(J[ok]))
        sgnJ = np.sign(J[ok])
        k = len(reps)
        rng_e = [a for a in range(-max_exponent, max_exponent + 1) if a]
        integrals, measures = [], []
        for support in range(1, min(max_factors, k) + 1):
            for idx in itertools.combinations(range(k), support):
                for alpha in itertools.product(rng_e, repeat=support):
                    if math.gcd(*map(abs, alpha)) != 1:
                        continue
                    a = np.array(alpha)
                    lg = a @ logC[list(idx)]
                    sg = np.prod(sgnC[list(idx)] ** (np.abs(a)[:, None] % 2), axis=0)
                    vec = np.zeros(k)
                    vec[list(idx)] = a
                    if alpha[0] > 0 and np.allclose(lg, 0, atol=1e-9) and np.all(sg == 1):
                        integrals.append(vec)
                    if np.allclose(lg, -logJ, atol=1e-9) and np.all(sg * sgnJ == 1):
                        measures.append(vec)
        # keep a generating set: integrals independent of those kept, and
        # measures that do not differ from a kept one by a kept integral
        order = lambda v: (np.abs(v).sum(), np.count_nonzero(v))
        kept_int: list[np.ndarray] = []
        for v in sorted(integrals, key=order):
            if np.linalg.matrix_rank(np.array(kept_int + [v])) > len(kept_int):
                kept_int.append(v)
        base_rank = len(kept_int)
        kept_meas: list[np.ndarray] = []
        for v in sorted(measures, key=order):
            if all(np.linalg.matrix_rank(np.array(kept_int + [v - m])) > base_rank for m in kept_meas):
                kept_meas.append(v)
        for kind, vecs in (("integral", kept_int), ("measure", kept_meas)):
            for v in vecs:
                results.append(Invariant(kind, [(reps[i][0], int(v[i])) for i in np.flatnonzero(v)]))
    for inv in results:
        inv.orbit_residual = _orbit_residual(bmap, inv, seed)
    return [r for r in results if not (r.orbit_residual > 1e-6)]


def check_continuous_darboux(f: Sequence[MultiPoly], P: MultiPoly, C: MultiPoly) -> bool:
    """Exact test of ``grad(P) . f == C * P`` for the ODE ``x' = f(x)``."""
    if len(f) != P.nvars or any(p.nvars != P.nvars for p in f) or C.nvars != P.nvars:
        raise ValueError("dimension mismatch")
    dP = sum((g * fi for g, fi in zip(P.grad(), f)), MultiPoly.zero(P.nvars))
    return (dP - C * P).is_zero()


# pipeline


@dataclass(eq=False)
class DarbouxReport:
    bmap: BirationalMap
    pool: FactorPool
    degree_bound: int
    tried: list[tuple[CofactorCandidate, int]] = field(default_factory=list)
    spaces: list[DarbouxSpace] = field(default_factory=list)
    invariants: list[Invariant] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "n_total": self.bmap.n_total,
            "jacobian": {"numerator": str(self.bmap.jac_num), "denominator": str(self.bmap.jac_den)},
            "factor_pool": {
                "constant": str(self.pool.constant),
                "factors": [{"poly": str(f), "exponent": e, "degree": f.degree} for f, e in self.pool.factors],
            },
            "degree_bound": self.degree_bound,
            "cofactors_tried": [
                {"exponents": list(c.exponents), "spaces_found": k} for c, k in self.tried
            ],
            "spaces": [s.describe() for s in self.spaces],
            "invariants": [i.describe() for i in self.invariants],
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), indent=2, **kw)


def discover(
    bmap: BirationalMap,
    degree_bound: int,
    max_exponent: int = 3,
    max_factors: int = 4,
    max_total: int | None = None,
    seed: int = 0,
    candidates: Sequence[CofactorCandidate] | None = None,
) -> DarbouxReport:
    """Factor the Jacobian, search every candidate cofactor, assemble invariants."""
    pool = factor_jacobian(bmap)
    if candidates is None:
        candidates = enumerate_cofactors(pool, max_exponent, max_factors, max_total)
    samples = _Samples(bmap, degree_bound, seed)
    report = DarbouxReport(bmap, pool, degree_bound)
    for C in candidates:
        found = darboux_spectrum(bmap, C, degree_bound, seed=seed, samples=samples)
        found = [s for s in found if any(p.degree > 0 for p in s.basis)]
        report.tried.append((C, len(found)))
        report.spaces.extend(found)
    _mark_derived(report.spaces, bmap.n_total, seed)
    report.invariants = assemble_invariants(report.spaces, bmap, seed=seed)
    return report


def _mark_derived(spaces: list[DarbouxSpace], nvars: int, seed: int) -> None:
    """Flag spaces spanned by products of two other spaces' elements.

    Products of Darboux polynomials are Darboux polynomials for the product
    cofactor, so such spaces carry no new information.
    """
    rng = np.random.default_rng(seed + 4242)
    X = rng.uniform(-1, 1, size=(60, nvars))
    vals = [np.array([[P.eval(list(x)) for x in X] for P in sp.basis]) for sp in spaces]
    key = [(np.array(sp.cofactor.exponents), sp.cofactor.scale) for sp in spaces]
    for t, sp in enumerate(spaces):
        prods = []
        for a, b in itertools.combinations_with_replacement(range(len(spaces)), 2):
            if t in (a, b):
                continue
            if np.array_equal(key[a][0] + key[b][0], key[t][0]) and key[a][1] * key[b][1] == key[t][1]:
                prods.extend(va * vb for va in vals[a] for vb in vals[b])
        if not prods:
            continue
        prods = np.array(prods)
        r = np.linalg.matrix_rank(prods, tol=1e-9 * np.abs(prods).max())
        both = np.vstack([prods, vals[t]])
        if r == sp.dimension and np.linalg.matrix_rank(both, tol=1e-9 * np.abs(both).max()) == r:
            sp.derived = True
