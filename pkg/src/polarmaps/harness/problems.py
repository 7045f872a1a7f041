"""Built-in problems and seeded random families."""
from __future__ import annotations

from fractions import Fraction

import numpy as np

from ..multipoly import MultiPoly
from .spec import ProblemSpec, parse_spec

__all__ = [
    "builtin_problems",
    "get_problem",
    "rotational",
    "random_quartic",
    "random_quartic_problem",
    "random_nonhomogeneous_problem",
]


def _q(v) -> str:
    return str(Fraction(v))


def rotational(alpha=1, beta=1, h="1/10", steps=10_000, initial=None, amplitude=None) -> ProblemSpec:
    """``H = |p|^2/2 + alpha |x|^2 + beta |x|^4`` in the plane.

    Tracks the rotation-invariant Darboux polynomials ``P1 = x1 x4 - x2 x3``
    (angular momentum of the pair) and ``P2 = 3 + h^2 (2 alpha + 4 beta x0.x1)``.
    """
    a, b, hq = Fraction(alpha), Fraction(beta), Fraction(h)
    h2 = hq * hq
    d = {
        "name": "rotational",
        "description": "planar central force |p|^2/2 + alpha|x|^2 + beta|x|^4",
        "mode": "nonhomogeneous",
        "n": 2,
        "K": [[1, 0], [0, 1]],
        "W": f"{_q(a)}*(x1^2 + x2^2) + {_q(b)}*(x1^2 + x2^2)^2",
        "h": _q(hq),
        "steps": steps,
        "initial": initial or [["1/2", "0"], ["1/2", "1/20"]],
        "track": [
            {"name": "P1", "num": "x2*x3 - x1*x4"},
            {"name": "P2", "num": f"3 + {_q(h2 * 2 * a)} + {_q(h2 * 4 * b)}*(x1*x3 + x2*x4)"},
            {
                "name": "P1/P2",
                "num": "x2*x3 - x1*x4",
                "den": f"3 + {_q(h2 * 2 * a)} + {_q(h2 * 4 * b)}*(x1*x3 + x2*x4)",
            },
        ],
    }
    if amplitude is not None:
        d["amplitude"] = amplitude
    return parse_spec(d)


def _rand_q(rng, lo, hi, den=8) -> Fraction:
    return Fraction(int(rng.integers(int(lo * den), int(hi * den) + 1)), den)


def random_quartic(n: int, seed: int) -> tuple[np.ndarray, MultiPoly]:
    """Seeded ``(K, W)`` with ``K`` symmetric positive definite and ``W`` a positive
    definite homogeneous quartic (a sum of fourth powers of ``n + 1`` linear forms
    plus ``|x|^4 / 4``), all with small rational coefficients.
    """
    rng = np.random.default_rng(seed)
    B = np.array([[_rand_q(rng, -1, 1) for _ in range(n)] for _ in range(n)], dtype=object)
    K = B @ B.T
    for i in range(n):
        K[i, i] += 1
    xs = MultiPoly.variables(n)
    zero = MultiPoly.zero(n)
    W = zero
    for _ in range(n + 1):
        form = sum((xs[j] * _rand_q(rng, -1, 1) for j in range(n)), zero)
        W = W + form**4 * _rand_q(rng, 1 / 8, 1)
    r2 = sum((x * x for x in xs), zero)
    W = W + r2 * r2 / 4
    return K, W


def random_quartic_problem(n: int, seed: int, h="1/10", steps=10_000, amplitude=0.5) -> ProblemSpec:
    K, W = random_quartic(n, seed)
    return parse_spec(
        {
            "name": f"random-quartic-n{n}",
            "description": f"seeded random homogeneous quartic, n={n}, seed={seed}",
            "mode": "homogeneous",
            "n": n,
            "K": [[str(v) for v in row] for row in K],
            "W": str(W),
            "h": _q(h),
            "steps": steps,
            "amplitude": amplitude,
            "seed": seed,
        }
    )


def random_nonhomogeneous_problem(n: int, seed: int, h="1/10", steps=10_000, amplitude=0.5) -> ProblemSpec:
    """Random quartic plus random quadratic and cubic terms (positive quadratic part)."""
    K, W = random_quartic(n, seed)
    rng = np.random.default_rng(seed + 1)
    xs = MultiPoly.variables(n)
    zero = MultiPoly.zero(n)
    quad = sum((x * x for x in xs), zero) / 2
    cubic = sum((xs[i] * xs[j] * xs[k] * _rand_q(rng, -1, 1) for i in range(n) for j in range(i, n) for k in range(j, n)), zero)
    lin = sum((x * _rand_q(rng, -1, 1, 4) for x in xs), zero)
    W = W + quad + cubic / 4 + lin / 10
    return parse_spec(
        {
            "name": f"random-nonhomogeneous-n{n}",
            "description": f"seeded random quartic with lower-order terms, n={n}, seed={seed}",
            "mode": "nonhomogeneous",
            "n": n,
            "K": [[str(v) for v in row] for row in K],
            "W": str(W),
            "h": _q(h),
            "steps": steps,
            "amplitude": amplitude,
            "seed": seed,
        }
    )


def builtin_problems() -> list[ProblemSpec]:
    probs = [
        rotational(),
        parse_spec(
            {
                "name": "quartic1d",
                "description": "x'' = -x^3 from the hand-checkable state (1, 2) with h = 1",
                "mode": "homogeneous",
                "n": 1,
                "K": [[1]],
                "W": "x1^4/4",
                "h": 1,
                "steps": 100,
                "initial": [[1], [2]],
            }
        ),
        parse_spec(
            {
                "name": "free",
                "description": "free motion W = 0",
                "mode": "homogeneous",
                "n": 2,
                "W": "0",
                "h": "1/10",
                "steps": 1000,
                "initial": [[0, 0], ["1/10", "-1/20"]],
            }
        ),
        parse_spec(
            {
                "name": "linear",
                "description": "harmonic oscillator W = (x1^2 + 2 x2^2)/2",
                "mode": "nonhomogeneous",
                "n": 2,
                "W": "x1^2/2 + x2^2",
                "h": "1/10",
                "steps": 1000,
                "initial": [[1, 0], [1, "1/10"]],
            }
        ),
    ]
    probs += [random_quartic_problem(n, seed=100 + n) for n in (2, 3, 4)]
    probs.append(
        parse_spec(
            {
                "name": "nonhomogeneous-cubic-force",
                "description": "degree-3 force field from a quartic W with lower-order terms",
                "mode": "nonhomogeneous",
                "n": 2,
                "W": "x1^2/2 + x2^2 + x1*x2^2 + (x1^4 + x2^4)/4",
                "h": "1/10",
                "steps": 10_000,
                "initial": [["3/10", "1/5"], ["3/10", "1/4"]],
            }
        )
    )
    probs.append(
        parse_spec(
            {
                "name": "odd-m3",
                "description": "third-order system with a planar Hamiltonian field (odd-admissible)",
                "mode": "higher-order",
                "n": 2,
                "m": 3,
                "f": ["x2^4 + x2", "x1^3 - x1^2"],
                "h": "1/10",
                "steps": 1000,
                "initial": [["1/10", "1/10"], ["11/100", "1/10"], ["3/25", "1/10"]],
            }
        )
    )
    probs.append(
        parse_spec(
            {
                "name": "nonconservative-m2",
                "description": "second-order system with a non-gradient cubic field",
                "mode": "higher-order",
                "n": 2,
                "m": 2,
                "f": ["-x1 - x1*x2^2", "-x2 + x1^3"],
                "h": "1/10",
                "steps": 1000,
                "initial": [["1/5", "0"], ["1/5", "1/50"]],
            }
        )
    )
    return probs


def get_problem(name: str) -> ProblemSpec:
    for p in builtin_problems():
        if p.name == name:
            return p
    raise KeyError(f"unknown problem {name!r}")
