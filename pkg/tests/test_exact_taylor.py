from fractions import Fraction

import numpy as np
import pytest
import sympy
from hypothesis import given, settings, strategies as st

from ymsym import exact
from ymsym.taylor import OrderExceeded, Series, bilinear, monomials, space, stack

small = st.integers(min_value=-4, max_value=4)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 4), st.integers(1, 5), st.data())
def test_rank_nullspace_match_sympy(r, c, data):
    rows = data.draw(st.lists(st.lists(small, min_size=c, max_size=c), min_size=r, max_size=r))
    M = exact.qarray(rows)
    S = sympy.Matrix(rows)
    assert exact.rank(M) == S.rank()
    N = exact.nullspace(M)
    assert len(N) == c - S.rank()
    for v in N:
        assert (exact.matmul(M, v) == 0).all()


def test_inverse_det_solve():
    A = exact.qarray([[2, 1], [Fraction(1, 3), 4]])
    assert exact.det(A) == Fraction(23, 3)
    assert (exact.matmul(A, exact.inverse(A)) == exact.qeye(2)).all()
    b = exact.qarray([1, 2])
    x = exact.solve(A, b)
    assert (exact.matmul(A, x) == b).all()


def test_frac_parsing():
    assert exact.frac("3/4") == Fraction(3, 4)
    assert exact.frac(2) == 2
    assert exact.to_float(exact.qarray(["1/2"]))[0] == 0.5


def _poly_value(coef, sp, x):
    return sum(coef[..., k] * np.prod(x ** np.array(m)) for k, m in enumerate(sp.mons))


def test_series_product_and_derivative_match_sympy():
    rng = np.random.default_rng(0)
    sp = space(4)
    t = sympy.symbols("t0:4")
    A = Series(rng.normal(size=sp.n), sp, sp.N)
    B = Series(rng.normal(size=sp.n), sp, sp.N)
    pa = sum(A.coef[k] * sympy.prod([v ** e for v, e in zip(t, m)]) for k, m in enumerate(sp.mons))
    pb = sum(B.coef[k] * sympy.prod([v ** e for v, e in zip(t, m)]) for k, m in enumerate(sp.mons))
    prod = sympy.Poly(sympy.expand(pa * pb), *t)
    C = A * B
    for k, m in enumerate(sp.mons):
        assert C.coef[k] == pytest.approx(float(prod.coeff_monomial(m)), abs=1e-12)
    d = A.d(2)
    assert d.valid == 3
    dp = sympy.Poly(sympy.diff(pa, t[2]), *t)
    for k, m in enumerate(sp.mons):
        if sum(m) <= 3:
            assert d.coef[k] == pytest.approx(float(dp.coeff_monomial(m)), abs=1e-12)
    # derivative_value reads ordinary partials at t = 0
    assert A.derivative_value((1, 1, 3)) == pytest.approx(float(sympy.diff(pa, t[1], t[1], t[3]).subs(
        {v: 0 for v in t})), abs=1e-12)


def test_validity_tracking():
    sp = space(2)
    X = Series.coordinate(np.zeros(4), sp)
    Y = X.d(0).d(0).d(0)
    assert Y.valid == -1
    with pytest.raises(OrderExceeded):
        Y.value()
    with pytest.raises(OrderExceeded):
        X.derivative_value((0, 0, 0))


def test_bilinear_and_stack():
    rng = np.random.default_rng(1)
    sp = space(2)
    A = Series(rng.normal(size=(3, sp.n)), sp, 2)
    B = Series(rng.normal(size=(3, sp.n)), sp, 2)
    M = rng.normal(size=(3, 3))
    out = bilinear("ab,a,b->", A, B, M)
    ref = sum(M[a, b] * (A[a] * B[b]).coef for a in range(3) for b in range(3))
    assert np.allclose(out.coef, ref)
    s = stack([A, B], axis=-1)
    assert s.shape == (3, 2)
    assert np.allclose(s[:, 1].coef, B.coef)


def test_monomial_count():
    assert len(monomials(3)) == 35
    assert space(5).n == 126
