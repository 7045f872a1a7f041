import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import points, polys, small_fractions
from polarmaps.multipoly import MultiPoly, parse
from polarmaps.polarize import (
    PolarizedForm,
    PotentialPolarization,
    pol_eval,
    pol_matrix,
    pol_rhs,
    polarize_symbolic,
    quartic_tensor,
)

F = Fraction


def test_table_rows():
    x = MultiPoly.variable(1, 0)
    assert pol_eval(PolarizedForm(x**3, 3), [[2], [3], [5]]) == 30
    assert pol_eval(PolarizedForm(MultiPoly.constant(1, 1), 3), [[2], [3], [5]]) == 1
    assert pol_eval(PolarizedForm(x, 2), [[F(1, 3)], [F(1, 2)]]) == F(5, 12)
    assert pol_eval(PolarizedForm(x**2, 3), [[1], [2], [3]]) == F(11, 3)


def test_worked_trilinear_form():
    p = parse("3*x1^2*x2", 2)
    pts = [[F(2), F(3)], [F(5), F(7)], [F(-1, 2), F(4)]]
    (y1, z1), (y2, z2), (y3, z3) = pts
    assert pol_eval(PolarizedForm(p, 3), pts) == y1 * y2 * z3 + y2 * y3 * z1 + y3 * y1 * z2


def test_stage_weight_signs():
    w = dict(PolarizedForm(MultiPoly.variable(1, 0), 3).stage_weights())
    assert w[(0, 1, 2)] == F(27, 6) and w[(0, 1)] == F(-8, 6) and w[(2,)] == F(1, 6)


def test_errors():
    x = MultiPoly.variable(2, 0)
    with pytest.raises(ValueError):
        PolarizedForm(x**3, 2)
    with pytest.raises(ValueError):
        PolarizedForm(x, 6)
    form = PolarizedForm(x**2, 2)
    with pytest.raises(ValueError):
        form([1, 2])
    with pytest.raises(ValueError):
        form([1, 2], [1, 2, 3])


@given(polys(nvars=2, max_degree=3), st.lists(points(2), min_size=3, max_size=3))
def test_permutation_symmetry(p, pts):
    form = PolarizedForm(p, 3)
    vals = {form(*perm) for perm in itertools.permutations(pts)}
    assert len(vals) == 1


@given(polys(nvars=2, max_degree=4), points(2))
def test_diagonal_identity(p, x):
    assert PolarizedForm(p, 4)(x, x, x, x) == p.eval(x)


@given(polys(nvars=2, max_degree=3), st.lists(points(2), min_size=3, max_size=3))
def test_homogenization_consistency(p, pts):
    lhs = PolarizedForm(p, 3)(*pts)
    rhs = PolarizedForm(p.homogenize(3), 3)(*[list(x) + [1] for x in pts])
    assert lhs == rhs


@given(polys(nvars=2, max_degree=3), st.lists(points(2), min_size=3, max_size=3))
def test_symbolic_route_agrees(p, pts):
    S = polarize_symbolic(p, 3)
    assert S.eval([c for x in pts for c in x]) == PolarizedForm(p, 3)(*pts)


@given(polys(nvars=2, max_degree=3), st.lists(st.lists(st.floats(-1, 1), min_size=2, max_size=2), min_size=3, max_size=3))
def test_float_evaluation_matches_exact(p, pts):
    form = PolarizedForm(p, 3)
    exact = float(form(*[[F(v) for v in x] for x in pts]))
    assert form(*[np.array(x) for x in pts]) == pytest.approx(exact, rel=1e-10, abs=1e-12)


def test_matrix_quartic_1d():
    P = PotentialPolarization(parse("x1^4/4", 1))
    assert pol_matrix(P, [F(2)], [F(3)])[0, 0] == 6
    assert pol_rhs(P, [F(1)], [F(2)], [F(3)])[0] == 6


def test_matrix_routes_agree_exactly():
    P = PotentialPolarization(parse("(x1^2 + x2^2)^2", 2))
    x0, x1 = [F(1), F(0)], [F(0), F(1)]
    a = pol_matrix(P, x0, x1, "pol2")
    b = pol_matrix(P, x0, x1, "tensor")
    c = pol_matrix(P, x0, x1, "homogenized")
    assert np.all(a == b) and np.all(a == c)
    with pytest.raises(ValueError):
        pol_matrix(P, [1, 2, 3], x1)


@given(polys(nvars=2, max_degree=4), points(2), points(2))
def test_matrix_routes_random(W, x0, x1):
    P = PotentialPolarization(W)
    a = P.matrix(x0, x1)
    assert np.all(a == P.matrix_tensor(x0, x1))
    assert np.all(a == a.T)
    fl = P.matrix_float(np.array(x0, float), np.array(x1, float))
    assert np.allclose(fl, a.astype(float), rtol=1e-12, atol=1e-12)


@given(polys(nvars=2, max_degree=4), points(2))
def test_matrix_diagonal_is_hessian_over_3(W, x):
    P = PotentialPolarization(W)
    H = W.hessian()
    V = P.matrix(x, x)
    assert all(V[i, j] == H[i][j].eval(x) / 3 for i in range(2) for j in range(2))


@given(polys(nvars=2, max_degree=4), points(2), points(2), points(2), points(2), small_fractions)
def test_rhs_affine_and_consistent(W, x0, x1, x2, y2, a):
    # affine in x2 (linear when W is a homogeneous quartic)
    b = 1 - a
    P = PotentialPolarization(W)
    z = [a * u + b * v for u, v in zip(x2, y2)]
    assert np.all(pol_rhs(P, x0, x1, z) == a * pol_rhs(P, x0, x1, x2) + b * pol_rhs(P, x0, x1, y2))
    zero = pol_rhs(P, x0, x1, [F(0), F(0)])
    assert np.all(pol_rhs(P, x0, x1, x2) == P.matrix(x0, x1) @ np.array(x2, dtype=object) + zero)


@given(polys(nvars=2, max_degree=4), points(2))
def test_rhs_diagonal_is_gradient(W, x):
    assert list(pol_rhs(PotentialPolarization(W), x, x, x)) == [g.eval(x) for g in W.grad()]


def test_quartic_tensor_reproduces_potential():
    W = parse("x1^4 + 2*x1*x2^3 - x2^2 + x1", 2)
    T = quartic_tensor(W)
    y = np.array([F(1, 2), F(-2, 3), F(1)], dtype=object)
    assert np.einsum("ijkl,i,j,k,l->", T, y, y, y, y) / 4 == W.eval(list(y[:2]))
    assert np.all(T == np.transpose(T, (1, 0, 2, 3)))
