"""Sparse multivariate polynomials with exact rational coefficients.

A :class:`MultiPoly` maps exponent tuples to nonzero :class:`fractions.Fraction`
coefficients. Values are immutable and hashable. Evaluation is exact at
rational points and uses a cached numpy kernel at floating points.

Text form
---------
Polynomials print as sums of terms ``coef*x1^a1*x2^a2``, in graded
lexicographic order, e.g. ``3/2*x1^2*x3 - x2 + 1``. Variables are 1-indexed.
:func:`parse` accepts that grammar plus decimals, parentheses and powers of groups,
and ``parse(str(p), p.nvars) == p`` always holds.
"""
from __future__ import annotations

import math
import re
from fractions import Fraction
from numbers import Integral, Rational
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

import numpy as np

__all__ = [
    "MultiPoly",
    "parse",
    "grad",
    "hessian",
    "jacobian",
    "homogenize",
    "poly_det",
    "poly_adjugate",
    "poly_matvec",
    "FloatEvaluator",
    "to_fraction",
]


def to_fraction(c) -> Fraction:
    """Convert an int, Fraction, decimal string or float to a Fraction (floats exactly)."""
    if isinstance(c, Fraction):
        return c
    if isinstance(c, (Integral, Rational)):
        return Fraction(int(c.numerator), int(c.denominator))
    if isinstance(c, str):
        return Fraction(c.strip())
    if isinstance(c, (float, np.floating)):
        return Fraction(float(c))
    raise TypeError(f"cannot convert {type(c).__name__} to a rational coefficient")


def _grlex_key(exp):
    return (-sum(exp), tuple(-e for e in exp))


class MultiPoly:
    """Immutable sparse polynomial in ``nvars`` variables over the rationals."""

    __slots__ = ("nvars", "_terms", "_hash", "_float")

    def __init__(self, nvars: int, terms: Mapping[Sequence[int], object] | None = None):
        if nvars < 0:
            raise ValueError("nvars must be nonnegative")
        clean: dict[tuple[int, ...], Fraction] = {}
        for exp, c in (terms or {}).items():
            exp = tuple(int(e) for e in exp)
            if len(exp) != nvars:
                raise ValueError(f"exponent {exp} has length {len(exp)}, expected {nvars}")
            if any(e < 0 for e in exp):
                raise ValueError(f"negative exponent in {exp}")
            c = to_fraction(c)
            if c:
                c = clean.get(exp, 0) + c
                if c:
                    clean[exp] = c
                else:
                    clean.pop(exp, None)
        self.nvars = nvars
        self._terms = dict(sorted(clean.items(), key=lambda kv: _grlex_key(kv[0])))
        self._hash = None
        self._float = None

    # construction helpers

    @classmethod
    def _raw(cls, nvars, terms):
        # terms already normalized (nonzero Fractions, correct lengths)
        obj = cls.__new__(cls)
        obj.nvars = nvars
        obj._terms = dict(sorted(terms.items(), key=lambda kv: _grlex_key(kv[0])))
        obj._hash = None
        obj._float = None
        return obj

    @classmethod
    def zero(cls, nvars: int) -> MultiPoly:
        return cls._raw(nvars, {})

    @classmethod
    def constant(cls, nvars: int, c) -> MultiPoly:
        return cls(nvars, {(0,) * nvars: c})

    @classmethod
    def variable(cls, nvars: int, i: int) -> MultiPoly:
        """The coordinate polynomial x_i (0-based index)."""
        if not 0 <= i < nvars:
            raise IndexError(f"variable index {i} out of range for nvars={nvars}")
        exp = [0] * nvars
        exp[i] = 1
        return cls._raw(nvars, {tuple(exp): Fraction(1)})

    @classmethod
    def variables(cls, nvars: int) -> tuple[MultiPoly, ...]:
        return tuple(cls.variable(nvars, i) for i in range(nvars))

    # basic properties

    @property
    def terms(self) -> Mapping[tuple[int, ...], Fraction]:
        return MappingProxyType(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    @property
    def degree(self) -> int:
        """Total degree; -1 for the zero polynomial."""
        return max((sum(e) for e in self._terms), default=-1)

    def is_homogeneous(self, d: int | None = None) -> bool:
        """True if every term has total degree ``d`` (any common degree if ``d`` is None).

        The zero polynomial is homogeneous of every degree.
        """
        degs = {sum(e) for e in self._terms}
        if not degs:
            return True
        if len(degs) > 1:
            return False
        return d is None or degs == {d}

    def coefficient(self, exp: Sequence[int]) -> Fraction:
        return self._terms.get(tuple(exp), Fraction(0))

    def constant_term(self) -> Fraction:
        return self.coefficient((0,) * self.nvars)

    # arithmetic

    def _coerce(self, other) -> MultiPoly:
        if isinstance(other, MultiPoly):
            if other.nvars != self.nvars:
                raise ValueError(f"nvars mismatch: {self.nvars} vs {other.nvars}")
            return other
        return MultiPoly.constant(self.nvars, other)

    def __add__(self, other):
        try:
            other = self._coerce(other)
        except TypeError:
            return NotImplemented
        out = dict(self._terms)
        for e, c in other._terms.items():
            s = out.get(e, 0) + c
            if s:
                out[e] = s
            else:
                out.pop(e, None)
        return MultiPoly._raw(self.nvars, out)

    __radd__ = __add__

    def __neg__(self):
        return MultiPoly._raw(self.nvars, {e: -c for e, c in self._terms.items()})

    def __sub__(self, other):
        try:
            other = self._coerce(other)
        except TypeError:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, MultiPoly):
            try:
                c = to_fraction(other)
            except TypeError:
                return NotImplemented
            if not c:
                return MultiPoly.zero(self.nvars)
            return MultiPoly._raw(self.nvars, {e: v * c for e, v in self._terms.items()})
        other = self._coerce(other)
        out: dict[tuple[int, ...], Fraction] = {}
        for e1, c1 in self._terms.items():
            for e2, c2 in other._terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                out[e] = out.get(e, 0) + c1 * c2
        return MultiPoly._raw(self.nvars, {e: c for e, c in out.items() if c})

    __rmul__ = __mul__

    def __truediv__(self, other):
        c = to_fraction(other)
        if not c:
            raise ZeroDivisionError("polynomial division by zero")
        return self * (1 / c)

    def __pow__(self, k: int):
        if not isinstance(k, Integral) or k < 0:
            raise ValueError("only nonnegative integer powers are supported")
        result = MultiPoly.constant(self.nvars, 1)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def __eq__(self, other):
        if isinstance(other, MultiPoly):
            return self.nvars == other.nvars and self._terms == other._terms
        try:
            return self == MultiPoly.constant(self.nvars, other)
        except TypeError:
            return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.nvars, tuple(self._terms.items())))
        return self._hash

    # evaluation

    def eval(self, x):
        """Value at the point ``x``; exact when every coordinate is rational."""
        if len(x) != self.nvars:
            raise ValueError(f"point has dimension {len(x)}, polynomial has {self.nvars} variables")
        if _all_rational(x):
            xs = [to_fraction(v) for v in x]
            total = Fraction(0)
            for exp, c in self._terms.items():
                term = c
                for v, e in zip(xs, exp):
                    if e:
                        term *= v**e
                total += term
            return total
        return float(self.float_evaluator()(np.asarray(x, dtype=float)[None, :])[0, 0])

    __call__ = eval

    def float_evaluator(self) -> FloatEvaluator:
        if self._float is None:
            self._float = FloatEvaluator([self])
        return self._float

    # calculus and structure

    def diff(self, i: int) -> MultiPoly:
        out = {}
        for exp, c in self._terms.items():
            if exp[i]:
                e = list(exp)
                e[i] -= 1
                out[tuple(e)] = c * exp[i]
        return MultiPoly._raw(self.nvars, out)

    def grad(self) -> tuple[MultiPoly, ...]:
        return tuple(self.diff(i) for i in range(self.nvars))

    def hessian(self) -> list[list[MultiPoly]]:
        g = self.grad()
        rows = [[None] * self.nvars for _ in range(self.nvars)]
        for i in range(self.nvars):
            for j in range(i, self.nvars):
                rows[i][j] = rows[j][i] = g[i].diff(j)
        return rows

    def homogenize(self, d: int) -> MultiPoly:
        """``z**d * p(x/z)`` as a polynomial in ``nvars + 1`` variables (z last)."""
        if self.degree > d:
            raise ValueError(f"cannot homogenize degree {self.degree} polynomial to degree {d}")
        return MultiPoly._raw(
            self.nvars + 1, {exp + (d - sum(exp),): c for exp, c in self._terms.items()}
        )

    def dehomogenize(self) -> MultiPoly:
        """Set the last variable to 1 and drop it."""
        if self.nvars < 1:
            raise ValueError("no variable to remove")
        return MultiPoly(self.nvars - 1, {exp[:-1]: c for exp, c in self._terms.items()})

    def substitute(self, i: int, value) -> MultiPoly:
        """Fix variable ``i`` to a rational value, keeping nvars unchanged."""
        v = to_fraction(value)
        out: dict = {}
        for exp, c in self._terms.items():
            e = list(exp)
            k, e[i] = e[i], 0
            e = tuple(e)
            out[e] = out.get(e, 0) + c * v**k
        return MultiPoly(self.nvars, out)

    def compose(self, polys: Sequence[MultiPoly]) -> MultiPoly:
        """Substitute ``polys[i]`` for variable ``i``; all ``polys`` share one nvars."""
        if len(polys) != self.nvars:
            raise ValueError(f"need {self.nvars} substitutions, got {len(polys)}")
        if not polys:
            return self
        m = polys[0].nvars
        powers: list[dict[int, MultiPoly]] = [{0: MultiPoly.constant(m, 1)} for _ in polys]

        def power(i, k):
            cache = powers[i]
            if k not in cache:
                cache[k] = power(i, k - 1) * polys[i]
            return cache[k]

        out = MultiPoly.zero(m)
        for exp, c in self._terms.items():
            term = MultiPoly.constant(m, c)
            for i, e in enumerate(exp):
                if e:
                    term = term * power(i, e)
            out = out + term
        return out

    def embed(self, nvars: int, positions: Sequence[int]) -> MultiPoly:
        """Re-express in ``nvars`` variables, variable ``i`` going to ``positions[i]``."""
        if len(positions) != self.nvars:
            raise ValueError("positions must list one slot per variable")
        out = {}
        for exp, c in self._terms.items():
            e = [0] * nvars
            for p, k in zip(positions, exp):
                e[p] += k
            out[tuple(e)] = out.get(tuple(e), 0) + c
        return MultiPoly(nvars, out)

    def content(self) -> Fraction:
        """Positive rational c with p/c primitive with integer coefficients."""
        if not self._terms:
            return Fraction(0)
        nums = [c.numerator for c in self._terms.values()]
        dens = [c.denominator for c in self._terms.values()]
        return Fraction(math.gcd(*nums), math.lcm(*dens))

    # text form

    def __str__(self):
        return format_poly(self)

    def __repr__(self):
        return f"MultiPoly({self.nvars}, {format_poly(self)!r})"


def _all_rational(x) -> bool:
    for v in x:
        if isinstance(v, (bool, np.bool_)):
            return False
        if not isinstance(v, (Integral, Rational)):
            return False
    return True


class FloatEvaluator:
    """Vectorized floating evaluation of a list of polynomials sharing nvars.

    ``ev(X)`` with ``X`` of shape ``(npts, nvars)`` returns ``(npts, len(polys))``.
    """

    def __init__(self, polys: Sequence[MultiPoly]):
        if not polys:
            raise ValueError("need at least one polynomial")
        self.nvars = polys[0].nvars
        if any(p.nvars != self.nvars for p in polys):
            raise ValueError("all polynomials must share nvars")
        exps = sorted({e for p in polys for e in p.terms}, key=_grlex_key)
        index = {e: k for k, e in enumerate(exps)}
        self.exponents = np.array(exps, dtype=np.int64).reshape(len(exps), self.nvars)
        self.coeffs = np.zeros((len(exps), len(polys)))
        for j, p in enumerate(polys):
            for e, c in p.terms.items():
                self.coeffs[index[e], j] = float(c)
        self.maxdeg = int(self.exponents.max(initial=0))
        self._cols = np.broadcast_to(np.arange(self.nvars), self.exponents.shape)

    def monomials(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        npts = X.shape[0]
        if self.exponents.shape[0] == 0:
            return np.zeros((npts, 0))
        # powers[:, v, k] = X[:, v]**k, gathered once for every (monomial, variable)
        powers = np.empty(X.shape + (self.maxdeg + 1,))
        powers[..., 0] = 1.0
        for k in range(1, self.maxdeg + 1):
            powers[..., k] = powers[..., k - 1] * X
        return powers[:, self._cols, self.exponents].prod(axis=2)

    def __call__(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.nvars:
            raise ValueError(f"expected points of shape (npts, {self.nvars}), got {X.shape}")
        return self.monomials(X) @ self.coeffs


# vector and matrix helpers


def grad(p: MultiPoly) -> tuple[MultiPoly, ...]:
    return p.grad()


def hessian(p: MultiPoly) -> list[list[MultiPoly]]:
    return p.hessian()


def homogenize(p: MultiPoly, d: int) -> MultiPoly:
    return p.homogenize(d)


def jacobian(f: Sequence[MultiPoly]) -> list[list[MultiPoly]]:
    """Matrix of partials ``J[i][j] = d f_i / d x_j``."""
    _check_uniform(f)
    return [[fi.diff(j) for j in range(fi.nvars)] for fi in f]


def _check_uniform(polys: Iterable[MultiPoly]) -> int:
    nv = {p.nvars for p in polys}
    if len(nv) > 1:
        raise ValueError(f"components have differing nvars {sorted(nv)}")
    return nv.pop() if nv else 0


def poly_det(M: Sequence[Sequence[MultiPoly]]) -> MultiPoly:
    """Determinant of a small square polynomial matrix (cofactor expansion)."""
    n = len(M)
    if n == 0:
        raise ValueError("empty matrix")
    if n == 1:
        return M[0][0]
    if n == 2:
        return M[0][0] * M[1][1] - M[0][1] * M[1][0]
    total = MultiPoly.zero(M[0][0].nvars)
    for j in range(n):
        if M[0][j].is_zero():
            continue
        minor = [row[:j] + row[j + 1 :] for row in M[1:]]
        term = M[0][j] * poly_det(minor)
        total = total + term if j % 2 == 0 else total - term
    return total


def poly_adjugate(M: Sequence[Sequence[MultiPoly]]) -> list[list[MultiPoly]]:
    n = len(M)
    nv = M[0][0].nvars
    if n == 1:
        return [[MultiPoly.constant(nv, 1)]]
    adj = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            minor = [row[:j] + row[j + 1 :] for k, row in enumerate(M) if k != i]
            c = poly_det(minor)
            adj[j][i] = c if (i + j) % 2 == 0 else -c
    return adj


def poly_matvec(M, v):
    return [sum((a * b for a, b in zip(row, v)), MultiPoly.zero(v[0].nvars)) for row in M]


# text form

def _format_coef(c: Fraction) -> str:
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


def format_poly(p: MultiPoly) -> str:
    if not p._terms:
        return "0"
    parts = []
    for i, (exp, c) in enumerate(p._terms.items()):
        mono = "*".join(
            f"x{v + 1}" if e == 1 else f"x{v + 1}^{e}" for v, e in enumerate(exp) if e
        )
        a = abs(c)
        if not mono:
            body = _format_coef(a)
        elif a == 1:
            body = mono
        else:
            body = f"{_format_coef(a)}*{mono}"
        if i == 0:
            parts.append(("-" if c < 0 else "") + body)
        else:
            parts.append(("- " if c < 0 else "+ ") + body)
    return " ".join(parts)


_TOKEN_RE = re.compile(
    r"\s*(?:(?P<var>x\d+)|(?P<num>\d+(?:\.\d*)?(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)|(?P<op>[-+*/^()]))"
)


class PolyParseError(ValueError):
    pass


class _Parser:
    """Recursive descent over ``expr := term (('+'|'-') term)*``,
    ``term := unary (('*'|'/') unary)*``, ``unary := ('+'|'-')* power``,
    ``power := atom ('^' integer)?`` and ``atom := number | xK | '(' expr ')'``.
    """

    def __init__(self, text: str, nvars: int):
        self.text = text
        self.nvars = nvars
        self.tokens = []
        pos = 0
        while pos < len(text):
            if text[pos:].strip() == "":
                break
            m = _TOKEN_RE.match(text, pos)
            if not m:
                raise PolyParseError(f"unexpected character at column {pos + 1} in {text!r}")
            kind = m.lastgroup
            self.tokens.append((kind, m.group(kind), m.start(kind) + 1))
            pos = m.end()
        self.i = 0

    def error(self, what):
        col = self.tokens[self.i][2] if self.i < len(self.tokens) else len(self.text) + 1
        return PolyParseError(f"{what} at column {col} in {self.text!r}")

    def peek(self):
        return self.tokens[self.i] if self.i < len(self.tokens) else (None, None, None)

    def take_op(self, ops):
        kind, val, _ = self.peek()
        if kind == "op" and val in ops:
            self.i += 1
            return val
        return None

    def parse(self) -> MultiPoly:
        if not self.tokens:
            raise PolyParseError("empty polynomial text")
        p = self.expr()
        if self.i != len(self.tokens):
            raise self.error("unexpected token")
        return p

    def expr(self):
        p = self.term()
        while (op := self.take_op("+-")) is not None:
            q = self.term()
            p = p + q if op == "+" else p - q
        return p

    def term(self):
        p = self.unary()
        while (op := self.take_op("*/")) is not None:
            q = self.unary()
            if op == "*":
                p = p * q
            else:
                if q.degree > 0:
                    raise self.error("division by a non-constant")
                if q.is_zero():
                    raise self.error("division by zero")
                p = p / q.constant_term()
        return p

    def unary(self):
        sign = 1
        while (op := self.take_op("+-")) is not None:
            sign = -sign if op == "-" else sign
        p = self.power()
        return p if sign == 1 else -p

    def power(self):
        p = self.atom()
        if self.take_op("^") is not None:
            kind, val, _ = self.peek()
            if kind != "num" or not val.isdigit():
                raise self.error("expected a nonnegative integer exponent")
            self.i += 1
            p = p ** int(val)
        return p

    def atom(self):
        kind, val, _ = self.peek()
        if kind == "num":
            self.i += 1
            return MultiPoly.constant(self.nvars, Fraction(val))
        if kind == "var":
            v = int(val[1:]) - 1
            if not 0 <= v < self.nvars:
                raise self.error(f"variable {val} out of range for nvars={self.nvars}")
            self.i += 1
            return MultiPoly.variable(self.nvars, v)
        if self.take_op("(") is not None:
            p = self.expr()
            if self.take_op(")") is None:
                raise self.error("expected ')'")
            return p
        raise self.error("expected a factor")


def parse(text: str, nvars: int) -> MultiPoly:
    """Parse polynomial text in variables ``x1 .. x{nvars}``.

    Accepts ``+ - * ^``, parentheses, integer and decimal constants, and
    division by constant subexpressions, so ``(x1^2 + x2^2)^2/4`` is valid.

    Raises
    ------
    PolyParseError
        With the column of the offending token.
    """
    return _Parser(text, nvars).parse()
