"""Shared oracles: jets of explicit polynomial sections, computed without the taylor module."""
from __future__ import annotations

import sys
from itertools import combinations_with_replacement, product

import numpy as np
import pytest

from ymsym import liealg
from ymsym.jet import JetPoint


class PolySection:
    """a^alpha_i(x) = sum_e coeff[alpha, i, e] x^e, differentiated monomial by monomial."""

    def __init__(self, coeffs: dict):
        self.coeffs = coeffs  # {(alpha, i): {exponent tuple: float}}

    @classmethod
    def random(cls, dim: int, degree: int, rng) -> "PolySection":
        exps = [e for e in product(range(degree + 1), repeat=4) if sum(e) <= degree]
        return cls({(al, i): {e: rng.uniform(-1, 1) for e in exps} for al in range(dim) for i in range(4)})

    def derivative(self, alpha: int, i: int, multi, x) -> float:
        total = 0.0
        for e, c in self.coeffs.get((alpha, i), {}).items():
            e = list(e)
            fac = c
            for v in multi:
                if e[v] == 0:
                    fac = 0.0
                    break
                fac *= e[v]
                e[v] -= 1
            if fac:
                total += fac * np.prod(np.asarray(x, float) ** np.array(e))
        return total

    def jet(self, algebra, x, order: int) -> JetPoint:
        dim = algebra.dim
        a = []
        for q in range(order + 1):
            ms = list(combinations_with_replacement(range(4), q))
            arr = np.zeros((dim, 4, len(ms)))
            for al in range(dim):
                for i in range(4):
                    for k, m in enumerate(ms):
                        arr[al, i, k] = self.derivative(al, i, m, x)
            a.append(arr)
        return JetPoint(algebra, x, tuple(a))


def random_gauge_generator(rng, dim, terms=3):
    """Random polynomial gauge generator of order <= 1 as text."""
    out = []
    for _ in range(dim):
        parts = []
        for _ in range(terms):
            c = int(rng.integers(-3, 4)) or 1
            factors = [str(c)]
            for _ in range(int(rng.integers(0, 3))):
                kind = rng.integers(0, 3)
                if kind == 0:
                    factors.append(f"x{rng.integers(0, 4)}")
                elif kind == 1:
                    factors.append(f"a[{rng.integers(0, dim)},{rng.integers(0, 4)}]")
                else:
                    factors.append(f"d1[{rng.integers(0, dim)},{rng.integers(0, 4)},{rng.integers(0, 4)}]")
            parts.append("*".join(factors))
        out.append(" + ".join(parts))
    return out


def ad_float(g):
    """ad matrices as floats, ad[b][a, g] = c[a, b, g]."""
    c = g.c_float
    return [c[:, b, :] for b in range(g.dim)]


@pytest.fixture(scope="session")
def su2():
    return liealg.builtin("su2")


@pytest.fixture(scope="session")
def sl2c():
    return liealg.builtin("sl2c_r")


@pytest.fixture(params=list(liealg.SEMISIMPLE_BUILTINS), scope="session")
def semisimple(request):
    return liealg.builtin(request.param)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for n in sorted(lines):
            terminalreporter.write_line(lines[n])
