from fractions import Fraction

import numpy as np
import pytest
from sympy import Matrix, Rational

from polarmaps import darboux
from polarmaps.acceptance import rotational_system
from polarmaps.darboux import CofactorCandidate, check_continuous_darboux, find_darboux, verify_darboux
from polarmaps.harness.problems import random_quartic
from polarmaps.multipoly import MultiPoly, parse, poly_adjugate, poly_det, poly_matvec
from polarmaps.polarmap import PolarState, PolarSystem, first_integral, jacobian_det, measure_density

F = Fraction
H = F(1, 10)


@pytest.fixture(scope="module")
def rot():
    bmap = darboux.polar_birational_map(rotational_system(1, 1), H)
    return bmap, darboux.factor_jacobian(bmap)


def rational_points(N, k, seed=0, den=13):
    rng = np.random.default_rng(seed)
    return [np.array([F(int(v), den) for v in rng.integers(-den, den + 1, N)], dtype=object) for _ in range(k)]


def rank(polys):
    monos = sorted({e for p in polys for e in p.terms})
    return Matrix([[Rational(str(p.coefficient(e))) for p in polys] for e in monos]).rank()


def same_span(a, b):
    return rank(a) == rank(b) == rank(a + b)


P1 = parse("x2*x3 - x1*x4", 4)
P2 = parse(f"3 + {H * H * 2} + {H * H * 4}*(x1*x3 + x2*x4)", 4)


def test_rotational_pool(rot):
    bmap, pool = rot
    shape = sorted((f.degree, e) for f, e in pool.factors)
    assert shape == [(2, 1), (4, -3), (6, 1)]
    assert pool.reproduces(bmap.jac_num, bmap.jac_den)


def test_jacobian_matches_polar_map(rot, rng):
    bmap, _ = rot
    sys = rotational_system(1, 1)
    X = rng.uniform(-0.7, 0.7, size=(10, 4))
    got = bmap.jacobian_det(X)
    want = [jacobian_det(sys, PolarState(x[:2], x[2:], float(H))) for x in X]
    assert np.allclose(got, want, rtol=1e-8)


def test_forward_matches_exact_step(rot):
    bmap, _ = rot
    x = np.array([F(1, 2), F(0), F(1, 2), F(1, 20)], dtype=object)
    y = bmap.forward(x)
    assert y.dtype == object and y[0] == F(1, 2) and y[1] == F(1, 20)


def test_free_map_has_empty_pool():
    bmap = darboux.polar_birational_map(PolarSystem(np.eye(2, dtype=int), parse("0", 2)), F(1, 3))
    pool = darboux.factor_jacobian(bmap)
    assert len(pool) == 0 and pool.constant == 1


def test_n1_quartic_two_factors():
    h = F(1, 2)
    bmap = darboux.polar_birational_map(PolarSystem(np.eye(1, dtype=int), parse("x1^4/4", 1)), h)
    pool = darboux.factor_jacobian(bmap)
    # (1 + h^2 x1 x2) / (1 + h^2 x0 x1) with x2 = (2 x1 - x0) / D eliminated:
    # D + h^2 x1 (2 x1 - x0) over D^2, where D = 1 + h^2 x0 x1
    D = parse("1 + 1/4*x1*x2", 2)
    N = D + parse("1/4*x2*(2*x2 - x1)", 2)

    def proportional(p, q):
        return set(p.terms) == set(q.terms) and len({q.coefficient(k) / c for k, c in p.terms.items()}) == 1

    assert sorted(e for _, e in pool.factors) == [-2, 1]
    assert proportional(next(f for f, e in pool.factors if e < 0), D)
    assert proportional(next(f for f, e in pool.factors if e > 0), N)
    assert pool.reproduces(bmap.jac_num, bmap.jac_den)


def test_recovers_rotational_polynomials(rot):
    bmap, pool = rot
    N2 = next(f for f, e in pool.factors if f.degree == 2)
    D4 = next(f for f, e in pool.factors if f.degree == 4)
    space = find_darboux(bmap, CofactorCandidate(((N2, 1), (D4, -1))), 2)
    assert space.dimension == 2 and space.exact
    assert same_span(space.basis, [P1, P2])
    assert verify_darboux(bmap, P1, space.cofactor, rational_points(4, 5))


def test_constants_for_unit_cofactor(rot):
    bmap, _ = rot
    space = find_darboux(bmap, CofactorCandidate((), F(1)), 0)
    assert space.dimension == 1 and space.basis[0].degree == 0


def test_empty_space_is_valid(rot):
    bmap, pool = rot
    N6 = next(f for f, e in pool.factors if f.degree == 6)
    assert find_darboux(bmap, CofactorCandidate(((N6, 1),), F(1)), 1).dimension == 0
    with pytest.raises(ValueError):
        find_darboux(bmap, CofactorCandidate(()), -1)


def test_product_closure(rot):
    bmap, pool = rot
    N2 = next(f for f, e in pool.factors if f.degree == 2)
    D4 = next(f for f, e in pool.factors if f.degree == 4)
    C = find_darboux(bmap, CofactorCandidate(((N2, 1), (D4, -1))), 2).cofactor
    pts = rational_points(4, 4, seed=3)
    C2 = CofactorCandidate(((N2, 2), (D4, -2)), C.scale**2)
    assert verify_darboux(bmap, P1 * P2, C2, pts)
    assert not verify_darboux(bmap, P1 * P2, C, pts)
    # D4 has the full Jacobian as cofactor; D4 * P1 multiplies the cofactors
    full = CofactorCandidate(pool.factors, pool.constant)
    assert verify_darboux(bmap, D4, full, pts)
    mixed = CofactorCandidate(tuple((f, e + {2: 1, 4: -1}.get(f.degree, 0)) for f, e in pool.factors), pool.constant * C.scale)
    assert verify_darboux(bmap, D4 * P1, mixed, pts)


def test_reseeding_spans_same_space(rot):
    bmap, pool = rot
    N2 = next(f for f, e in pool.factors if f.degree == 2)
    D4 = next(f for f, e in pool.factors if f.degree == 4)
    C = CofactorCandidate(((N2, 1), (D4, -1)))
    a = find_darboux(bmap, C, 2, seed=0)
    b = find_darboux(bmap, C, 2, seed=17)
    assert same_span(a.basis, b.basis)


def test_assembles_rotational_integral(rot):
    bmap, _ = rot
    rep = darboux.discover(bmap, 2)
    integrals = [i for i in rep.invariants if i.kind == "integral"]
    assert integrals and all(i.orbit_residual < 1e-9 for i in integrals)
    X = np.random.default_rng(1).uniform(-0.5, 0.5, size=(5, 4))
    ratio = np.array([P1.eval(list(x)) / P2.eval(list(x)) for x in X])
    # some assembled integral is a constant multiple of P1/P2
    assert any(np.allclose(np.array([I(x) for x in X]) / ratio, I(X[0]) / ratio[0], rtol=1e-10) for I in integrals)
    doc = rep.to_dict()
    assert {"n_total", "jacobian", "factor_pool", "degree_bound", "cofactors_tried", "spaces", "invariants"} <= set(doc)
    assert rep.to_json()


def test_rotational_measure_matches_density(rot):
    bmap, _ = rot
    rep = darboux.discover(bmap, 4)
    measures = [i for i in rep.invariants if i.kind == "measure"]
    assert measures
    sys = rotational_system(1, 1)
    rng = np.random.default_rng(0)
    X = rng.uniform(-0.6, 0.6, size=(6, 4))
    ratios = [measures[0](x) / measure_density(sys, PolarState(x[:2], x[2:], float(H))) for x in X]
    assert np.allclose(ratios, ratios[0], rtol=1e-9)


def _integral_numerator_and_denominator(sys, h):
    """``F = N / D`` with ``D = det M01`` as polynomials in (x0, x1)."""
    n = sys.n
    N2 = 2 * n
    xs = MultiPoly.variables(N2)
    V = [[q / 3 for q in row] for row in sys.potential.hess_form.symbolic()]
    K = sys.K
    one = MultiPoly.constant(N2, 1)
    zero = MultiPoly.zero(N2)
    KV = [[sum((V[k][j] * K[i, k] for k in range(n)), zero) for j in range(n)] for i in range(n)]
    M = [[(one if i == j else zero) + KV[i][j] * (h * h) for j in range(n)] for i in range(n)]
    D = poly_det(M)
    adj = poly_adjugate(M)
    from polarmaps import linalg

    Kinv = linalg.inv(K)
    d = [xs[n + i] - xs[i] for i in range(n)]
    x0, x1 = xs[:n], xs[n:]
    Vx1 = [sum((V[i][j] * x1[j] for j in range(n)), zero) for i in range(n)]
    KVx1 = [sum((Vx1[j] * K[i, j] for j in range(n)), zero) for i in range(n)]
    u, w = poly_matvec(adj, d), poly_matvec(adj, KVx1)
    Kd = [sum((d[j] * Kinv[j, i] for j in range(n)), zero) for i in range(n)]
    Kx0 = [sum((x0[j] * Kinv[j, i] for j in range(n)), zero) for i in range(n)]
    N = sum((Kd[i] * u[i] for i in range(n)), zero) + sum((Kx0[i] * w[i] for i in range(n)), zero) * (h * h / 2)
    return N, D


@pytest.mark.parametrize("n", [1, 2])
def test_integral_numerator_and_denominator_are_darboux(n):
    h = F(1, 3)
    sys = PolarSystem(*random_quartic(n, 50 + n))
    bmap = darboux.polar_birational_map(sys, h)
    pool = darboux.factor_jacobian(bmap)
    N, D = _integral_numerator_and_denominator(sys, h)
    x = rational_points(2 * n, 1, seed=1)[0]
    assert N.eval(list(x)) / D.eval(list(x)) == first_integral(sys, PolarState(x[:n], x[n:], h))
    jac = CofactorCandidate(pool.factors, pool.constant)
    pts = rational_points(2 * n, 3, seed=2)
    assert verify_darboux(bmap, D, jac, pts)
    assert verify_darboux(bmap, N, jac, pts)


def test_blind_recovery_of_integral():
    K = np.array([[F(1), F(0)], [F(0), F(2)]], dtype=object)
    sys = PolarSystem(K, random_quartic(2, 1)[1])
    h = F(1, 3)
    rep = darboux.discover(darboux.polar_birational_map(sys, h), 6)
    integrals = [i for i in rep.invariants if i.kind == "integral"]
    assert integrals
    I = integrals[0]

    def grad(fun, x, eps=1e-6):
        return np.array([(fun(x + e) - fun(x - e)) / (2 * eps) for e in np.eye(4) * eps])

    Fn = lambda v: first_integral(sys, PolarState(v[:2], v[2:], float(h)))
    rng = np.random.default_rng(4)
    for _ in range(5):
        x = rng.uniform(-0.4, 0.4, 4)
        a, b = grad(I, x), grad(Fn, x)
        cos = abs(a @ b) / (np.linalg.norm(a) * np.linalg.norm(b))
        assert np.arccos(min(cos, 1.0)) <= 1e-6


def test_continuous_checker():
    # energy of a Hamiltonian field in (x, p)
    Hm = parse("x2^2/2 + x1^4/4", 2)
    f = (parse("x2", 2), parse("-x1^3", 2))
    assert check_continuous_darboux(f, Hm, MultiPoly.zero(2))
    x = parse("x1", 1)
    assert check_continuous_darboux((x * x,), x, x)
    assert not check_continuous_darboux(f, parse("x1*x2 + x1^2", 2), MultiPoly.zero(2))
    with pytest.raises(ValueError):
        check_continuous_darboux(f, x, x)


def test_continuous_cofactors_add():
    # x' = x, y' = 2y: P = x has C = 1, Q = y has C = 2, PQ has C = 3
    f = (parse("x1", 2), parse("2*x2", 2))
    P, Q = parse("x1", 2), parse("x2", 2)
    c = lambda k: MultiPoly.constant(2, k)
    assert check_continuous_darboux(f, P, c(1)) and check_continuous_darboux(f, Q, c(2))
    assert check_continuous_darboux(f, P * Q, c(3))


def test_enumerate_cofactors_bounds(rot):
    _, pool = rot
    cands = darboux.enumerate_cofactors(pool, max_exponent=1, max_factors=2)
    assert cands[0].exponents == (0, 0, 0)
    assert all(sum(1 for e in c.exponents if e) <= 2 or c.exponents == tuple(e for _, e in pool.factors) for c in cands)
    assert tuple(e for _, e in pool.factors) in {c.exponents for c in cands}
