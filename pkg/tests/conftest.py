from fractions import Fraction

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from polarmaps.multipoly import MultiPoly

settings.register_profile("default", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

small_fractions = st.builds(Fraction, st.integers(-9, 9), st.integers(1, 7))


@st.composite
def polys(draw, nvars=None, max_degree=4, max_terms=6):
    """Random MultiPoly with small rational coefficients."""
    n = draw(st.integers(1, 3)) if nvars is None else nvars
    exps = st.lists(st.integers(0, max_degree), min_size=n, max_size=n).filter(lambda e: sum(e) <= max_degree)
    terms = draw(st.dictionaries(exps.map(tuple), small_fractions, max_size=max_terms))
    return MultiPoly(n, terms)


def points(n):
    return st.lists(small_fractions, min_size=n, max_size=n)


def naive_eval(p: MultiPoly, x) -> Fraction:
    """Term-by-term summation, independent of MultiPoly.eval."""
    total = Fraction(0)
    for e, c in p.terms.items():
        t = Fraction(c)
        for xi, k in zip(x, e):
            for _ in range(k):
                t *= xi
        total += t
    return total


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
