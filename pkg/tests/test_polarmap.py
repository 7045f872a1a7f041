from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from polarmaps import linalg
from polarmaps.acceptance import finite_eps_integral, richardson_integral, rotational_density, rotational_system
from polarmaps.exceptions import NonInvertibleK, SingularStep
from polarmaps.harness.problems import random_nonhomogeneous_problem, random_quartic
from polarmaps.multipoly import parse
from polarmaps.polarize import PolarizedForm
from polarmaps.polarmap import (
    PolarState,
    PolarSystem,
    first_integral,
    first_integral_nonhom,
    hamiltonian,
    inverse_step,
    jacobian_det,
    jacobian_matrix,
    kahan_inverse,
    kahan_step,
    linear_transform,
    measure_density,
    step,
    step_matrix,
)

F = Fraction
QUARTIC1 = PolarSystem(np.eye(1, dtype=int), parse("x1^4/4", 1))
FREE = PolarSystem(np.array([[2, 1], [1, 3]]), parse("0", 2))


def fd_jacobian(sys, s, eps=1e-6):
    n = sys.n
    v = np.concatenate([s.x0, s.x1])
    J = np.empty((2 * n, 2 * n))
    for j in range(2 * n):
        e = np.zeros(2 * n)
        e[j] = eps
        a, b = step(sys, PolarState((v + e)[:n], (v + e)[n:], s.h)), step(sys, PolarState((v - e)[:n], (v - e)[n:], s.h))
        J[:, j] = (np.concatenate([a.x0, a.x1]) - np.concatenate([b.x0, b.x1])) / (2 * eps)
    return J


rational = st.builds(F, st.integers(-6, 6), st.integers(1, 5))


# hand values for W = x^4/4, K = 1, h = 1 from (1, 2)


def test_hand_step_and_inverse():
    s = PolarState([1], [2], 1)
    t = step(QUARTIC1, s)
    assert t.exact and t.x0[0] == 2 and t.x1[0] == 1
    back = inverse_step(QUARTIC1, t)
    assert back.x0[0] == 1 and back.x1[0] == 2


def test_hand_jacobian_density_integral():
    s = PolarState([1], [2], 1)
    assert step_matrix(QUARTIC1, s).detM01 == 3
    assert jacobian_det(QUARTIC1, s) == 1
    assert linalg.det(jacobian_matrix(QUARTIC1, s)) == 1
    assert measure_density(QUARTIC1, s) == F(1, 3)
    assert first_integral(QUARTIC1, s) == 1
    assert first_integral(QUARTIC1, step(QUARTIC1, s)) == 1
    assert first_integral_nonhom(QUARTIC1, s) == 1


def test_n1_integral_closed_form():
    # ((x1 - x0)^2 + h^2 x0^2 x1^2 / 2) / (1 + h^2 x0 x1)
    for x0, x1, h in [(F(1, 3), F(-2, 5), F(1, 7)), (F(3, 2), F(1, 4), F(2, 3))]:
        want = ((x1 - x0) ** 2 + h * h * x0 * x0 * x1 * x1 / 2) / (1 + h * h * x0 * x1)
        assert first_integral(QUARTIC1, PolarState([x0], [x1], h)) == want


# free flight


def test_free_flight():
    s = PolarState([F(1), F(2)], [F(3), F(-1)], F(1, 10))
    t = step(FREE, s)
    assert list(t.x1) == [5, -4]
    assert list(inverse_step(FREE, s).x0) == [-1, 5]
    assert jacobian_det(FREE, s) == 1
    assert measure_density(FREE, s) == 1
    d = s.x1 - s.x0
    assert first_integral(FREE, s) == d @ linalg.inv(FREE.K) @ d
    assert first_integral(FREE, t) == first_integral(FREE, s)


def test_hamiltonian_free():
    sys = PolarSystem(np.eye(2, dtype=int), parse("0", 2))
    s = PolarState([F(1), F(0)], [F(2), F(1)], F(1, 2))
    assert hamiltonian(sys, s) == F(2) / (2 * F(1, 4))


# round trips and Jacobians


@pytest.mark.parametrize("n", [1, 2, 3])
def test_step_inverse_round_trip(n, rng):
    sys = PolarSystem(*random_quartic(n, 7 + n))
    for _ in range(20):
        s = PolarState(rng.uniform(-0.8, 0.8, n), rng.uniform(-0.8, 0.8, n), 0.2)
        back = inverse_step(sys, step(sys, s))
        assert np.allclose(back.x0, s.x0, atol=1e-12) and np.allclose(back.x1, s.x1, atol=1e-12)


def test_step_residual_small(rng):
    sys = random_nonhomogeneous_problem(2, 3).system()
    s = PolarState(rng.uniform(-0.5, 0.5, 2), rng.uniform(-0.5, 0.5, 2), 0.3)
    x2 = step(sys, s).x1
    lhs = x2 - 2 * s.x1 + s.x0
    rhs = -s.h**2 * sys.K_float @ sys.potential.rhs(s.x0, s.x1, x2)
    assert np.allclose(lhs, rhs, rtol=1e-12, atol=1e-14)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_jacobian_against_finite_differences(n, rng):
    sys = PolarSystem(*random_quartic(n, 20 + n))
    for _ in range(5):
        s = PolarState(rng.uniform(-0.7, 0.7, n), rng.uniform(-0.7, 0.7, n), 0.3)
        J = jacobian_matrix(sys, s)
        assert np.allclose(J, fd_jacobian(sys, s), rtol=1e-6, atol=1e-7)
        assert jacobian_det(sys, s) == pytest.approx(np.linalg.det(fd_jacobian(sys, s)), rel=1e-6)


@given(st.lists(rational, min_size=4, max_size=4))
def test_measure_identity_exact(v):
    sys = rotational_system(1, F(1, 2))
    s = PolarState(v[:2], v[2:], F(1, 3))
    try:
        t = step(sys, s)
        d12 = step_matrix(sys, t).detM01
    except SingularStep:
        return
    d01 = step_matrix(sys, s).detM01
    assert jacobian_det(sys, s) * d01 == d12
    assert linalg.det(jacobian_matrix(sys, s)) == jacobian_det(sys, s)


def test_density_transport_float(rng):
    sys = PolarSystem(*random_quartic(3, 4))
    s = PolarState(rng.uniform(-0.5, 0.5, 3), rng.uniform(-0.5, 0.5, 3), 0.1)
    for _ in range(200):
        rho, jac = measure_density(sys, s), np.linalg.det(jacobian_matrix(sys, s))
        s = step(sys, s)
        assert measure_density(sys, s) * jac == pytest.approx(rho, rel=1e-12)


def test_rotational_density_closed_form(rng):
    for alpha, beta in [(1, 1), (F(-1, 2), F(3, 2))]:
        sys = rotational_system(alpha, beta)
        for _ in range(10):
            x0, x1 = rng.uniform(-1, 1, 2), rng.uniform(-1, 1, 2)
            want = rotational_density(float(alpha), float(beta), 0.2, x0, x1)
            assert measure_density(sys, PolarState(x0, x1, 0.2)) == pytest.approx(want, rel=1e-12)


def test_density_routes_agree(rng):
    sys = random_nonhomogeneous_problem(2, 9).system()
    x0 = [F(int(v), 7) for v in rng.integers(-5, 6, 2)]
    x1 = [F(int(v), 7) for v in rng.integers(-5, 6, 2)]
    s = PolarState(x0, x1, F(1, 4))
    assert measure_density(sys, s) == measure_density(sys, s, via="Df")


def test_symmetric_kinv_minv():
    K, W = random_quartic(3, 5)
    sys = PolarSystem(K, W)
    s = PolarState([F(1, 2), F(-1, 3), F(1)], [F(0), F(2, 3), F(-1, 4)], F(1, 5))
    S = linalg.inv(K) @ linalg.inv(step_matrix(sys, s).M01)
    assert np.all(S == S.T)


# first integrals


@given(st.lists(rational, min_size=4, max_size=4), st.sampled_from([F(1, 10), F(1, 2), F(1)]))
def test_integral_exactly_conserved(v, h):
    sys = PolarSystem(*random_quartic(2, 1))
    s = PolarState(v[:2], v[2:], h)
    try:
        t = step(sys, s)
        Ft = first_integral(sys, t)
    except SingularStep:
        return
    assert first_integral(sys, s) == Ft


def test_integral_long_orbit_n3(rng):
    sys = PolarSystem(*random_quartic(3, 33))
    x0 = rng.uniform(-0.3, 0.3, 3)
    s = PolarState(x0, x0 + 0.1 * rng.uniform(-0.3, 0.3, 3), 0.1)
    F0 = first_integral(sys, s)
    worst = 0.0
    for _ in range(10_000):
        s = step(sys, s)
        worst = max(worst, abs(first_integral(sys, s) - F0) / abs(F0))
    assert worst <= 1e-10


def test_nonhom_equals_hom_for_quartics(rng):
    K, W = random_quartic(3, 6)
    sys = PolarSystem(K, W)
    x0 = [F(int(v), 9) for v in rng.integers(-9, 10, 3)]
    x1 = [F(int(v), 9) for v in rng.integers(-9, 10, 3)]
    s = PolarState(x0, x1, F(1, 3))
    assert first_integral_nonhom(sys, s) == first_integral(sys, s)


def test_nonhom_integral_exact_conservation():
    sys = random_nonhomogeneous_problem(2, 5).system()
    s = PolarState([F(1, 3), F(-1, 5)], [F(2, 7), F(0)], F(1, 4))
    assert first_integral_nonhom(sys, step(sys, s)) == first_integral_nonhom(sys, s)


def test_nonhom_richardson_oracle(rng):
    sys = rotational_system(1, 1)
    for _ in range(5):
        s = PolarState(rng.uniform(-0.5, 0.5, 2), rng.uniform(-0.5, 0.5, 2), 0.1)
        assert richardson_integral(sys, s) == pytest.approx(first_integral_nonhom(sys, s), rel=1e-8)
        # the finite-eps value itself converges linearly
        err1 = abs(finite_eps_integral(sys, s, 1e-3) - first_integral_nonhom(sys, s))
        err2 = abs(finite_eps_integral(sys, s, 5e-4) - first_integral_nonhom(sys, s))
        assert err2 < err1


def test_first_integral_errors():
    with pytest.raises(ValueError):
        first_integral(rotational_system(1, 1), PolarState([0, 0], [1, 0], 0.1))
    sing = PolarSystem(np.array([[1, 1], [1, 1]]), parse("x1^4 + x2^4", 2))
    s = PolarState([F(1), F(0)], [F(0), F(1)], F(1, 10))
    step(sing, s)
    with pytest.raises(NonInvertibleK):
        first_integral(sing, s)
    with pytest.raises(NonInvertibleK):
        hamiltonian(sing, s)


def test_singular_step():
    sys = PolarSystem(np.eye(1, dtype=int), parse("-x1^4/4", 1))
    with pytest.raises(SingularStep):
        step(sys, PolarState([1], [1], 1))
    with pytest.raises(SingularStep):
        step(sys, PolarState([1.0], [1.0], 1.0))
    with pytest.raises(SingularStep):
        measure_density(sys, PolarState([1], [1], 1))


def test_system_validation():
    with pytest.raises(ValueError):
        PolarSystem(np.array([[1, 2], [0, 1]]), parse("x1^4", 2))
    with pytest.raises(ValueError):
        PolarSystem(np.eye(2, dtype=int), parse("x1^5", 2))
    with pytest.raises(ValueError):
        PolarSystem(np.eye(3, dtype=int), parse("x1^4", 2))
    with pytest.raises(ValueError):
        PolarState([1], [1], 0)


# stepping routes


@pytest.mark.parametrize("seed", range(4))
def test_stepping_routes_agree_exactly(seed):
    sys = random_nonhomogeneous_problem(2, 60 + seed).system()
    s = PolarState([F(1, 3), F(-1, 2)], [F(1, 4), F(2, 5)], F(1, 5))
    a = step(sys, s, method="direct")
    assert np.all(a.x1 == step(sys, s, method="hessian").x1)
    assert np.all(a.x1 == step(sys, s, method="homogenized").x1)


def test_seven_point_combination():
    # pol_3 of grad W equals the weighted sum over the 7 stage points
    W = parse("x1^4/2 + x1*x2^3 - x2^2 + x1*x2 + 3*x2", 2)
    pts = [np.array([F(1, 3), F(2)], dtype=object), np.array([F(-1), F(1, 2)], dtype=object), np.array([F(1, 5), F(-2, 3)], dtype=object)]
    weights = {3: F(27, 6), 2: F(-8, 6), 1: F(1, 6)}
    g = W.grad()
    total = np.zeros(2, dtype=object)
    for S in [(0, 1, 2), (0, 1), (0, 2), (1, 2), (0,), (1,), (2,)]:
        mean = sum(pts[i] for i in S) / len(S)
        total = total + weights[len(S)] * np.array([q.eval(list(mean)) for q in g], dtype=object)
    assert np.all(PolarizedForm(g, 3)(*pts) == total)


def test_linear_equivariance(rng):
    sys = PolarSystem(*random_quartic(2, 8))
    A = np.array([[F(2), F(1)], [F(-1), F(3)]], dtype=object)
    other = linear_transform(sys, A)
    Af = A.astype(float)
    s = PolarState(rng.uniform(-0.5, 0.5, 2), rng.uniform(-0.5, 0.5, 2), 0.1)
    r = PolarState(Af @ s.x0, Af @ s.x1, 0.1)
    for _ in range(50):
        s, r = step(sys, s), step(other, r)
        assert np.allclose(Af @ s.x1, r.x1, atol=1e-12)


# Kahan map


def test_kahan_hand_value():
    f = [parse("x1^2", 1)]
    assert kahan_step(f, [F(1)], F(1, 2))[0] == 2


def test_kahan_linear_is_midpoint(rng):
    A = np.array([[F(1, 2), F(-1)], [F(2), F(1, 3)]], dtype=object)
    f = [parse(f"{A[i, 0]}*x1 + {A[i, 1]}*x2 + 1", 2) for i in range(2)]
    x = np.array([F(1, 3), F(-2, 7)], dtype=object)
    h = F(1, 5)
    xp = kahan_step(f, x, h)
    mid = (x + xp) / 2
    assert np.all((xp - x) / h == A @ mid + 1)


def test_kahan_round_trip(rng):
    f = [parse("x1*x2 - x1", 2), parse("x1^2 - x2 + 1", 2)]
    for _ in range(10):
        x = rng.uniform(-0.5, 0.5, 2)
        assert np.allclose(kahan_inverse(f, kahan_step(f, x, 0.1), 0.1), x, atol=1e-12)
    with pytest.raises(ValueError):
        kahan_step([parse("x1^3", 1)], [1.0], 0.1)


def test_energy_is_limit_of_integral():
    from polarmaps.acceptance import energy_gap

    sys = rotational_system(1, 1)
    x, p = np.array([0.5, 0.1]), np.array([0.2, 0.4])
    hs = np.array([1e-1, 1e-2, 1e-3])
    gaps = [energy_gap(sys, x, p, h) for h in hs]
    assert np.polyfit(np.log(hs), np.log(gaps), 1)[0] >= 1
