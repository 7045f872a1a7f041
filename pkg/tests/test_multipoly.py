from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import naive_eval, points, polys
from polarmaps.multipoly import FloatEvaluator, MultiPoly, PolyParseError, parse


def test_eval_examples():
    x = MultiPoly.variable(1, 0)
    assert (x**2).eval([3]) == 9
    assert parse("3*x1^2*x2", 2).eval([1, 2]) == 6


def test_eval_dimension_mismatch():
    with pytest.raises(ValueError):
        parse("x1 + x2", 2).eval([1])


@given(polys(nvars=3), points(3))
def test_eval_matches_naive_summation(p, x):
    assert p.eval(x) == naive_eval(p, x)


@given(polys(nvars=3), st.lists(st.floats(-2, 2), min_size=3, max_size=3))
def test_float_evaluator_matches_exact(p, x):
    exact = float(p.eval([Fraction(v) for v in x]))
    got = FloatEvaluator([p])(np.array([x]))[0, 0]
    assert got == pytest.approx(exact, rel=1e-12, abs=1e-12)


def test_canonical_form_and_zero():
    z = MultiPoly(2, {(1, 0): 0, (0, 1): Fraction(1, 2)})
    assert z.terms == {(0, 1): Fraction(1, 2)}
    assert MultiPoly.zero(2).is_zero() and MultiPoly.zero(2).terms == {}
    assert parse("x1 - x1", 2) == MultiPoly.zero(2)
    assert MultiPoly.zero(2) != MultiPoly.zero(3)


def test_grad_examples():
    x = MultiPoly.variable(1, 0)
    assert (x**4 / 4).grad() == (x**3,)
    assert all(g.is_zero() for g in MultiPoly.zero(2).grad())
    a, b = Fraction(2, 3), Fraction(5, 7)
    W = parse(f"{a}*(x1^2 + x2^2) + {b}*(x1^2 + x2^2)^2", 2)
    want = (
        parse(f"2*{a}*x1 + 4*{b}*(x1^2 + x2^2)*x1", 2),
        parse(f"2*{a}*x2 + 4*{b}*(x1^2 + x2^2)*x2", 2),
    )
    assert W.grad() == want


def test_hessian_example():
    p = parse("x1^2*x2^2", 2)
    assert p.hessian() == [[parse("2*x2^2", 2), parse("4*x1*x2", 2)], [parse("4*x1*x2", 2), parse("2*x1^2", 2)]]
    assert parse("x1^4/4", 1).hessian() == [[parse("3*x1^2", 1)]]


@given(polys())
def test_hessian_symmetric(p):
    H = p.hessian()
    assert all(H[i][j] == H[j][i] for i in range(p.nvars) for j in range(p.nvars))


def test_homogenize_examples():
    assert parse("x1^2 + x1", 1).homogenize(2) == parse("x1^2 + x1*x2", 2)
    assert MultiPoly.constant(1, 1).homogenize(3) == parse("x2^3", 2)
    with pytest.raises(ValueError):
        parse("x1^3", 1).homogenize(2)


@given(polys(max_degree=4))
def test_homogenize_round_trip(p):
    H = p.homogenize(4)
    assert H.is_homogeneous(4) or H.is_zero()
    assert H.dehomogenize() == p
    x = [Fraction(k + 2, 3) for k in range(p.nvars)]
    assert H.eval(x + [1]) == p.eval(x)


@given(polys(nvars=2, max_degree=4), points(2))
def test_homogenized_gradient_at_z1(p, x):
    # first n partials of z^4 p(x/z) at z = 1 are the partials of p
    H = p.homogenize(4)
    gH = H.grad()
    gp = p.grad()
    for i in range(2):
        assert gH[i].eval(list(x) + [1]) == gp[i].eval(x)
    # the z-partial is the Euler defect 4p - x.grad p
    euler = 4 * p.eval(x) - sum(xi * g.eval(x) for xi, g in zip(x, gp))
    assert gH[2].eval(list(x) + [1]) == euler


@given(polys(nvars=3), polys(nvars=3), points(3))
def test_ring_laws(p, q, x):
    assert (p + q).eval(x) == p.eval(x) + q.eval(x)
    assert (p * q).eval(x) == p.eval(x) * q.eval(x)
    assert (p - q).eval(x) == p.eval(x) - q.eval(x)


@given(polys(nvars=3, max_degree=3), points(3))
def test_euler_identity(p, x):
    h = MultiPoly(3, {e: c for e, c in p.terms.items() if sum(e) == 3})
    lhs = sum(xi * g.eval(x) for xi, g in zip(x, h.grad()))
    assert lhs == 3 * h.eval(x)


@given(polys())
def test_parse_round_trip(p):
    text = str(p)
    q = parse(text, p.nvars)
    assert q == p
    assert str(q) == text


def test_parse_grammar():
    assert parse("(x1 + 1)^2", 1) == parse("x1^2 + 2*x1 + 1", 1)
    assert parse("-x1*-x2", 2) == parse("x1*x2", 2)
    assert parse("x1/2 + 3/4", 1) == MultiPoly(1, {(1,): Fraction(1, 2), (0,): Fraction(3, 4)})
    assert parse("2.5*x1", 1) == parse("5/2*x1", 1)
    assert parse("0", 3).is_zero()


@pytest.mark.parametrize("text", ["x3", "x1 +", "x1^x1", "x1/x1", "(x1", "x1 $ 2", ""])
def test_parse_errors(text):
    with pytest.raises(PolyParseError):
        parse(text, 2)


def test_parse_error_reports_column():
    with pytest.raises(PolyParseError, match="column"):
        parse("x1 + * x2", 2)
