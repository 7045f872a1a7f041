"""End-to-end acceptance checks.

Each ``check_<k>`` returns a :class:`CheckResult`; :func:`run_all` runs them
in order. The checks are deterministic (fixed seeds) and self-contained, so
the same code backs the test suite and the ``verify-paper`` command.
"""
from __future__ import annotations

import time
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np

from . import darboux
from .harness.problems import random_nonhomogeneous_problem, random_quartic
from .higherorder import HigherState, HigherSystem, hjacobian_matrix, hmeasure_density, hstep, odd_admissible
from .multipoly import MultiPoly, parse
from .polarize import PolarizedForm
from .polarmap import (
    PolarState,
    PolarSystem,
    first_integral,
    first_integral_nonhom,
    jacobian_det,
    jacobian_matrix,
    kahan_inverse,
    kahan_step,
    measure_density,
    step,
)

__all__ = ["CheckResult", "CHECKS", "run_all", "finite_eps_integral", "richardson_integral", "rotational_system"]


@dataclass
class CheckResult:
    number: int
    title: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] criterion {self.number:2d}: {self.title} ({self.detail}; {self.seconds:.1f}s)"


def _q(v, den=64) -> Fraction:
    return Fraction(float(v)).limit_denominator(den)


def _rel(a, b) -> float:
    return abs(a - b) / max(abs(a), abs(b), 1e-300)


def rotational_system(alpha, beta) -> PolarSystem:
    a, b = Fraction(alpha), Fraction(beta)
    return PolarSystem(np.eye(2, dtype=int), parse(f"{a}*(x1^2 + x2^2) + {b}*(x1^2 + x2^2)^2", 2))


def _P1(s) -> float:
    return s.x1[0] * s.x0[1] - s.x0[0] * s.x1[1]


def _P2(s, alpha, beta) -> float:
    return 3 + s.h**2 * (2 * alpha + 4 * beta * (s.x0 @ s.x1))


# 1. polarization table


def _ie_symbolic(p: MultiPoly, d: int) -> MultiPoly:
    """Inclusion-exclusion formula applied to ``p`` with symbolic points (one variable each)."""
    F = PolarizedForm(p, d)
    ys = MultiPoly.variables(d)
    out = MultiPoly.zero(d)
    for S, w in F.stage_weights():
        mean = sum((ys[i] for i in S), MultiPoly.zero(d)) / len(S)
        out = out + p.compose([mean]) * w
    return out


def check_1() -> CheckResult:
    x = MultiPoly.variable(1, 0)
    one = MultiPoly.constant(1, 1)
    y2, y3 = MultiPoly.variables(2), MultiPoly.variables(3)
    rows = [
        (x**2, 2, y2[0] * y2[1]),
        (x, 2, (y2[0] + y2[1]) / 2),
        (one, 2, MultiPoly.constant(2, 1)),
        (x**3, 3, y3[0] * y3[1] * y3[2]),
        (x**2, 3, (y3[0] * y3[1] + y3[1] * y3[2] + y3[2] * y3[0]) / 3),
        (x, 3, (y3[0] + y3[1] + y3[2]) / 3),
        (one, 3, MultiPoly.constant(3, 1)),
    ]
    ok = 0
    for p, d, expected in rows:
        ok += _ie_symbolic(p, d) == expected and PolarizedForm(p, d).symbolic() == expected
    # the two generic rows: stage weights of the d = 2 and d = 3 formulas
    w2 = {S: w for S, w in PolarizedForm(x, 2).stage_weights()}
    ok += w2 == {(0, 1): 2, (0,): Fraction(-1, 2), (1,): Fraction(-1, 2)}
    w3 = {S: w for S, w in PolarizedForm(x, 3).stage_weights()}
    ok += w3 == {
        (0, 1, 2): Fraction(27, 6),
        **{S: Fraction(-8, 6) for S in ((0, 1), (0, 2), (1, 2))},
        **{S: Fraction(1, 6) for S in ((0,), (1,), (2,))},
    }
    return CheckResult(1, "polarization table identities", ok == 9, f"{ok}/9 rows exact")


# 2. worked polarizations


def check_2() -> CheckResult:
    # variables (y, z) and (y, z, w); point k occupies variables k*n .. k*n + n - 1
    p = parse("3*x1^2*x2", 2)
    q = parse("6*x1*x2*x3", 3)
    P = PolarizedForm(p, 3).symbolic()
    Q = PolarizedForm(q, 3).symbolic()
    # y_k = x(2k+1), z_k = x(2k+2)
    want_p = parse("x1*x3*x6 + x3*x5*x2 + x5*x1*x4", 6)
    # y_k = x(3k+1), z_k = x(3k+2), w_k = x(3k+3)
    want_q = parse("x1*x5*x9 + x4*x8*x3 + x7*x2*x6 + x1*x8*x6 + x7*x5*x3 + x4*x2*x9", 9)
    ok_ie = all(
        _ie_check(f, F, nv)
        for f, F, nv in ((p, want_p, 2), (q, want_q, 3))
    )
    ok = P == want_p and Q == want_q and ok_ie
    return CheckResult(2, "worked trilinear forms of 3y^2z and 6yzw", ok, "symbolic and sampled agree" if ok else "mismatch")


def _ie_check(f, F, nv) -> bool:
    rng = np.random.default_rng(2)
    form = PolarizedForm(f, 3)
    for _ in range(5):
        pts = [[Fraction(int(v), 7) for v in rng.integers(-9, 10, nv)] for _ in range(3)]
        if form(*pts) != F.eval([c for p in pts for c in p]):
            return False
    return True


# 3. conservation of the first integral


def check_3(steps: int = 10_000) -> CheckResult:
    worst = 0.0
    count = 0
    for n in (1, 2, 3, 4):
        for h in (0.01, 0.1, 0.5):
            for rep in range(2):
                seed = 1000 * n + 10 * rep + int(h * 100)
                K, W = random_quartic(n, seed)
                sys = PolarSystem(K, W)
                rng = np.random.default_rng(seed)
                amp = 0.3
                x0 = rng.uniform(-amp, amp, n)
                x1 = x0 + h * rng.uniform(-amp, amp, n)
                s = PolarState(x0, x1, h)
                F = first_integral(sys, s)
                for _ in range(steps):
                    s = step(sys, s)
                    G = first_integral(sys, s)
                    worst = max(worst, abs(G - F) / abs(F))
                    F = G
                count += 1
    sys1 = PolarSystem(np.eye(1, dtype=int), parse("x1^4/4", 1))
    s = PolarState([1], [2], 1)
    t = step(sys1, s)
    exact_ok = t.x1[0] == 1 and first_integral(sys1, s) == 1 and first_integral(sys1, t) == 1
    ok = count >= 20 and worst <= 1e-11 and exact_ok
    return CheckResult(
        3,
        "first integral conserved for random homogeneous quartics",
        ok,
        f"{count} systems, max per-step drift {worst:.2e}, exact spot check {'ok' if exact_ok else 'failed'}",
    )


# 4. Jacobian determinant and density transport


def _fd_jacdet(sys, s, eps=1e-6) -> float:
    n = sys.n
    v = np.concatenate([s.x0, s.x1])
    J = np.empty((2 * n, 2 * n))
    for j in range(2 * n):
        e = np.zeros(2 * n)
        e[j] = eps
        a = step(sys, PolarState((v + e)[:n], (v + e)[n:], s.h))
        b = step(sys, PolarState((v - e)[:n], (v - e)[n:], s.h))
        J[:, j] = (np.concatenate([a.x0, a.x1]) - np.concatenate([b.x0, b.x1])) / (2 * eps)
    return float(np.linalg.det(J))


def check_4() -> CheckResult:
    rng = np.random.default_rng(4)
    worst_fd = 0.0
    systems = [PolarSystem(*random_quartic(n, 40 + n)) for n in (1, 2, 3)]
    systems.append(rotational_system(1, 1))
    for k in range(100):
        sys = systems[k % len(systems)]
        x0 = rng.uniform(-0.7, 0.7, sys.n)
        x1 = rng.uniform(-0.7, 0.7, sys.n)
        s = PolarState(x0, x1, 0.3)
        worst_fd = max(worst_fd, _rel(jacobian_det(sys, s), _fd_jacdet(sys, s)))
    worst_tr = 0.0
    for sys in systems:
        s = PolarState(rng.uniform(-0.5, 0.5, sys.n), rng.uniform(-0.5, 0.5, sys.n), 0.1)
        rho = measure_density(sys, s)
        for _ in range(1000):
            jac = np.linalg.det(jacobian_matrix(sys, s))
            s = step(sys, s)
            rho_next = measure_density(sys, s)
            worst_tr = max(worst_tr, _rel(rho_next * jac, rho))
            rho = rho_next
    ok = worst_fd <= 1e-6 and worst_tr <= 1e-12
    return CheckResult(
        4, "Jacobian determinant and density transport", ok, f"finite-difference rel err {worst_fd:.2e}, transport {worst_tr:.2e}"
    )


# 5. explicit density of the rotational system


def rotational_density(alpha, beta, h, x0, x1) -> float:
    """Closed form of the invariant density of the rotational system."""
    h2 = h * h
    a = 1 + 2 / 3 * h2 * (alpha + 4 * beta * (x0 @ x1))
    return 1 / (a * a - 16 / 9 * h2 * h2 * beta**2 * (x0 @ x0) * (x1 @ x1))


def check_5() -> CheckResult:
    rng = np.random.default_rng(5)
    worst = 0.0
    for _ in range(5):
        alpha, beta = _q(rng.uniform(-1, 2)), _q(rng.uniform(0.1, 2))
        h = float(rng.uniform(0.05, 0.5))
        sys = rotational_system(alpha, beta)
        for _ in range(100):
            x0, x1 = rng.uniform(-1, 1, 2), rng.uniform(-1, 1, 2)
            got = measure_density(sys, PolarState(x0, x1, h))
            worst = max(worst, _rel(got, rotational_density(float(alpha), float(beta), h, x0, x1)))
    return CheckResult(5, "explicit density of the rotational system", worst <= 1e-12, f"max rel err {worst:.2e}")


# 6. Darboux recovery


def _in_span(p: MultiPoly, basis: list[MultiPoly]) -> bool:
    """Exact membership of ``p`` in the rational span of ``basis``."""
    from sympy import Matrix, Rational

    monos = sorted({e for q in basis + [p] for e in q.terms})
    A = Matrix([[Rational(str(q.coefficient(e))) for q in basis] for e in monos])
    b = Matrix([Rational(str(p.coefficient(e))) for e in monos])
    aug = A.row_join(b)
    return A.rank() == aug.rank()


def check_6(steps: int = 10_000) -> CheckResult:
    alpha = beta = 1
    h = Fraction(1, 10)
    sys = rotational_system(alpha, beta)
    bmap = darboux.polar_birational_map(sys, h)
    pool = darboux.factor_jacobian(bmap)
    N2 = [f for f, e in pool.factors if f.degree == 2 and e > 0]
    D4 = [f for f, e in pool.factors if f.degree == 4 and e < 0]
    if len(N2) != 1 or len(D4) != 1:
        return CheckResult(6, "Darboux recovery for the rotational system", False, "unexpected factor pool")
    space = darboux.find_darboux(bmap, darboux.CofactorCandidate(((N2[0], 1), (D4[0], -1))), 2)
    P1 = parse("x3*x2 - x1*x4", 4)
    P2 = parse(f"3 + {h * h * 2 * alpha} + {h * h * 4 * beta}*(x1*x3 + x2*x4)", 4)
    spans = space.dimension == 2 and space.exact and all(_in_span(p, [P1, P2]) for p in space.basis)
    spans = spans and all(_in_span(p, space.basis) for p in (P1, P2))
    s = PolarState(np.array([0.5, 0.0]), np.array([0.5, 0.05]), float(h))
    r0 = _P1(s) / _P2(s, alpha, beta)
    worst = 0.0
    for _ in range(steps):
        s = step(sys, s)
        worst = max(worst, _rel(_P1(s) / _P2(s, alpha, beta), r0))
    ok = spans and worst <= 1e-10
    return CheckResult(
        6,
        "Darboux recovery for the rotational system",
        ok,
        f"dimension {space.dimension}, spans P1,P2 exactly: {spans}, P1/P2 drift {worst:.2e}",
    )


# 7. nonhomogeneous integral


def finite_eps_integral(sys: PolarSystem, s: PolarState, eps: float) -> float:
    """Homogeneous integral of the extended system ``K~ = diag(K, eps)`` at ``z = 1``."""
    n = sys.n
    K = np.zeros((n + 1, n + 1), dtype=object)
    K[...] = Fraction(0)
    K[:n, :n] = sys.K
    K[n, n] = Fraction(eps)
    ext = PolarSystem(K, sys.W.homogenize(4))
    st = PolarState(np.append(s.x0, 1.0), np.append(s.x1, 1.0), s.h)
    return first_integral(ext, st)


def richardson_integral(sys: PolarSystem, s: PolarState, eps: float = 1e-4) -> float:
    return 2 * finite_eps_integral(sys, s, eps / 2) - finite_eps_integral(sys, s, eps)


def check_7(steps: int = 10_000) -> CheckResult:
    rng = np.random.default_rng(7)
    systems = [rotational_system(1, 1), random_nonhomogeneous_problem(2, 71).system()]
    worst_r = 0.0
    for k in range(50):
        sys = systems[k % 2]
        s = PolarState(rng.uniform(-0.5, 0.5, 2), rng.uniform(-0.5, 0.5, 2), 0.1)
        worst_r = max(worst_r, _rel(first_integral_nonhom(sys, s), richardson_integral(sys, s)))
    worst_c = 0.0
    for sys in systems:
        x0 = rng.uniform(-0.5, 0.5, 2)
        s = PolarState(x0, x0 + 0.1 * rng.uniform(-0.5, 0.5, 2), 0.1)
        F = first_integral_nonhom(sys, s)
        for _ in range(steps):
            s = step(sys, s)
            worst_c = max(worst_c, _rel(first_integral_nonhom(sys, s), F))
    ok = worst_r <= 1e-8 and worst_c <= 1e-9
    return CheckResult(
        7, "nonhomogeneous integral vs extended-system limit", ok, f"Richardson rel err {worst_r:.2e}, drift {worst_c:.2e}"
    )


# 8. direct and homogenized stepping agree exactly


def check_8() -> CheckResult:
    rng = np.random.default_rng(8)
    agree = 0
    for k in range(10):
        n = 1 + k % 3
        sys = random_nonhomogeneous_problem(n, 80 + k).system()
        x0 = [_q(v) for v in rng.uniform(-1, 1, n)]
        x1 = [_q(v) for v in rng.uniform(-1, 1, n)]
        s = PolarState(x0, x1, Fraction(1, 5))
        a = step(sys, s, method="direct")
        b = step(sys, s, method="homogenized")
        agree += bool(a.exact and np.all(a.x1 == b.x1))
    return CheckResult(8, "direct and homogenized stepping agree exactly", agree == 10, f"{agree}/10 systems")


# 9. higher-order measures


def _h_transport(sys: HigherSystem, s: HigherState, steps: int) -> float:
    worst = 0.0
    rho = hmeasure_density(sys, s)
    for _ in range(steps):
        jac = np.linalg.det(hjacobian_matrix(sys, s).astype(float))
        s = hstep(sys, s)
        rho_next = hmeasure_density(sys, s)
        worst = max(worst, _rel(rho_next * jac, rho))
        rho = rho_next
    return worst


def check_9(steps: int = 1000) -> CheckResult:
    f2 = (parse("-x1 - x1*x2^2", 2), parse("-x2 + x1^3", 2))
    a = _h_transport(HigherSystem(f2, 2), HigherState(([0.2, 0.0], [0.2, 0.02]), 0.1), steps)
    f3 = (parse("x2^4 + x2", 2), parse("x1^3 - x1^2", 2))
    b = _h_transport(HigherSystem(f3, 3), HigherState(([0.1, 0.1], [0.11, 0.1], [0.12, 0.1]), 0.1), steps)
    hamiltonian_fields = [
        f3,
        (parse("x2", 2), parse("-x1", 2)),
        (parse("3*x2^2 + x1^2", 2), parse("-2*x1*x2", 2)),
    ]
    c = all(odd_admissible(f) for f in hamiltonian_fields) and not odd_admissible((parse("x1", 1),))
    ok = a <= 1e-11 and b <= 1e-11 and c
    return CheckResult(
        9, "higher-order density transport and odd admissibility", ok, f"m=2 {a:.2e}, m=3 {b:.2e}, admissibility {'ok' if c else 'wrong'}"
    )


# 10. first order reduces to Kahan's map


def check_10() -> CheckResult:
    rng = np.random.default_rng(10)
    same = 0
    worst = 0.0
    for k in range(10):
        n = 1 + k % 3
        xs = MultiPoly.variables(n)
        f = []
        for _ in range(n):
            p = MultiPoly.constant(n, _q(rng.uniform(-1, 1), 8))
            for i in range(n):
                p = p + xs[i] * _q(rng.uniform(-1, 1), 8)
                for j in range(i, n):
                    p = p + xs[i] * xs[j] * _q(rng.uniform(-1, 1), 8)
            f.append(p)
        x = [_q(v, 16) for v in rng.uniform(-0.5, 0.5, n)]
        h = Fraction(1, 10)
        a = hstep(HigherSystem(tuple(f), 1), HigherState((x,), h)).window[0]
        b = kahan_step(f, x, h)
        same += bool(np.all(a == b))
        xf = np.array(x, dtype=float)
        back = kahan_inverse(f, kahan_step(f, xf, 0.1), 0.1)
        worst = max(worst, float(np.max(np.abs(back - xf))))
    ok = same == 10 and worst <= 1e-12
    return CheckResult(10, "first-order polar map equals Kahan's map", ok, f"{same}/10 exact, round trip {worst:.2e}")


# 11. superintegrability evidence


def _F0_and_ratio(sys, v, h, alpha, beta):
    s = PolarState(v[:2], v[2:], h)
    return np.array([first_integral_nonhom(sys, s), _P1(s) / _P2(s, alpha, beta)])


def check_11(steps: int = 1000) -> CheckResult:
    alpha, beta, h = 1.0, 1.0, 0.1
    sys = rotational_system(1, 1)
    rng = np.random.default_rng(11)
    # (a) equivariance under O(2)
    worst_eq = 0.0
    for k in range(4):
        th = rng.uniform(0, 2 * np.pi)
        R = np.array([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]])
        if k % 2:
            R = R @ np.diag([1.0, -1.0])
        s = PolarState(rng.uniform(-0.5, 0.5, 2), rng.uniform(-0.5, 0.5, 2), h)
        r = PolarState(R @ s.x0, R @ s.x1, h)
        for _ in range(100):
            s, r = step(sys, s), step(sys, r)
            worst_eq = max(worst_eq, float(np.max(np.abs(R @ s.x1 - r.x1))))
    # (b) two conserved integrals and (d) the measure, on one orbit
    s = PolarState(np.array([0.5, 0.0]), np.array([0.5, 0.05]), h)
    v0 = _F0_and_ratio(sys, np.concatenate([s.x0, s.x1]), h, alpha, beta)
    rho = measure_density(sys, s)
    worst_int = worst_meas = 0.0
    for _ in range(steps):
        jac = np.linalg.det(jacobian_matrix(sys, s))
        s = step(sys, s)
        v = _F0_and_ratio(sys, np.concatenate([s.x0, s.x1]), h, alpha, beta)
        worst_int = max(worst_int, float(np.max(np.abs(v - v0) / np.abs(v0))))
        rho_next = measure_density(sys, s)
        worst_meas = max(worst_meas, _rel(rho_next * jac, rho))
        rho = rho_next
    # (c) functional independence
    worst_ratio = np.inf
    for _ in range(20):
        v = rng.uniform(-0.6, 0.6, 4)
        G = np.empty((2, 4))
        for j in range(4):
            e = np.zeros(4)
            e[j] = 1e-6
            G[:, j] = (_F0_and_ratio(sys, v + e, h, alpha, beta) - _F0_and_ratio(sys, v - e, h, alpha, beta)) / 2e-6
        sv = np.linalg.svd(G, compute_uv=False)
        worst_ratio = min(worst_ratio, sv[-1] / sv[0])
    ok = worst_eq <= 1e-12 and worst_int <= 1e-9 and worst_ratio > 1e-6 and worst_meas <= 1e-12
    return CheckResult(
        11,
        "superintegrability evidence for the rotational system",
        ok,
        f"equivariance {worst_eq:.1e}, integrals {worst_int:.1e}, min sv ratio {worst_ratio:.1e}, measure {worst_meas:.1e}",
    )


# 12. the integral perturbs the energy


def energy_gap(sys: PolarSystem, x, p, h) -> float:
    """``|F0/(2h^2) - H|`` from consistent data ``x1 = x + hKp - h^2/2 K grad W(x)``."""
    K = sys.K_float
    g = np.array([float(q.eval(list(x))) for q in sys.W.grad()])
    x1 = x + h * K @ p - h * h / 2 * K @ g
    s = PolarState(x, x1, h)
    H = 0.5 * p @ K @ p + float(sys.W.eval(list(x)))
    return abs(first_integral_nonhom(sys, s) / (2 * h * h) - H)


def check_12() -> CheckResult:
    hs = np.array([1e-1, 3e-2, 1e-2, 3e-3, 1e-3])
    slopes = []
    for sys, x, p in (
        (rotational_system(1, 1), np.array([0.5, 0.1]), np.array([0.2, 0.4])),
        (PolarSystem(*random_quartic(2, 12)), np.array([0.3, -0.2]), np.array([0.1, 0.3])),
    ):
        gaps = np.array([energy_gap(sys, x, p, h) for h in hs])
        slopes.append(float(np.polyfit(np.log(hs), np.log(gaps), 1)[0]))
    ok = min(slopes) >= 1
    return CheckResult(12, "integral approaches the energy as h -> 0", ok, "observed orders " + ", ".join(f"{s:.2f}" for s in slopes))


CHECKS: dict[int, Callable[[], CheckResult]] = {
    1: check_1,
    2: check_2,
    3: check_3,
    4: check_4,
    5: check_5,
    6: check_6,
    7: check_7,
    8: check_8,
    9: check_9,
    10: check_10,
    11: check_11,
    12: check_12,
}


def run_check(k: int) -> CheckResult:
    t = time.perf_counter()
    try:
        res = CHECKS[k]()
    except Exception as e:  # a crash is a failure, reported on its line
        res = CheckResult(k, CHECKS[k].__name__, False, f"raised {type(e).__name__}: {e}")
    res.seconds = time.perf_counter() - t
    return res


def run_all(which=None, echo: Callable[[str], None] | None = None) -> list[CheckResult]:
    out = []
    for k in which or sorted(CHECKS):
        r = run_check(k)
        if echo:
            echo(r.line())
        out.append(r)
    return out
