import itertools
from fractions import Fraction

import numpy as np
import pytest
import sympy
from hypothesis import given, settings, strategies as st

from ymsym import jet, symexpr as E
from ymsym.jet import JetPoint
from ymsym.symexpr import (BadIndexRange, ExprSyntaxError, NonLiteralDenominator, UnknownCoordinate)


def to_sympy(e):
    """Independent translation of the AST into sympy, coordinates as plain symbols."""
    if isinstance(e, E.Num):
        return sympy.Rational(e.value.numerator, e.value.denominator)
    if isinstance(e, E.Var):
        return sympy.Symbol(f"x{e.index}")
    if isinstance(e, E.Coord):
        return sympy.Symbol("c_" + "_".join(map(str, (e.alpha, e.i) + tuple(sorted(e.deriv)))))
    if isinstance(e, E.Neg):
        return -to_sympy(e.operand)
    if isinstance(e, E.Pow):
        return to_sympy(e.base) ** e.exponent
    ops = {E.Add: lambda a, b: a + b, E.Sub: lambda a, b: a - b, E.Mul: lambda a, b: a * b,
           E.Div: lambda a, b: a / b}
    return ops[type(e)](to_sympy(e.left), to_sympy(e.right))


def sympy_value(e, point):
    s = to_sympy(e)
    subs = {sympy.Symbol(f"x{i}"): point.x[i] for i in range(4)}
    for c in E.coordinates(e):
        subs[sympy.Symbol("c_" + "_".join(map(str, (c.alpha, c.i) + c.deriv)))] = point.coordinate(
            c.alpha, c.i, c.deriv)
    return float(s.subs(subs))


def test_parse_examples():
    e = E.parse("x2 * a[0,1]", 3)
    assert e == E.Mul(E.Var(2), E.Coord(0, 1))
    assert E.parse("d1[2,3,0]") == E.Coord(2, 3, (0,))
    # derivative indices are canonicalised
    assert E.parse("d2[0,1,3,2]") == E.parse("d2[0,1,2,3]")
    assert E.parse("d3[1,0,3,0,2]").deriv == (0, 2, 3)
    assert E.parse("3/4") == E.Num(Fraction(3, 4))
    assert E.order(E.parse("a[0,0]*d4[1,1,0,0,0,0]")) == 4
    assert E.order(E.parse("x0 + 1")) == 0


@pytest.mark.parametrize("text,exc", [
    ("a[9,0]", BadIndexRange),
    ("a[0,4]", BadIndexRange),
    ("d1[0,1]", BadIndexRange),
    ("d6[0,0,0,0,0,0,0,0]", UnknownCoordinate),
    ("y + 1", UnknownCoordinate),
    ("x4", UnknownCoordinate),
    ("a[0,1] / x0", NonLiteralDenominator),
    ("x0^-1", NonLiteralDenominator),
    ("1/0", ZeroDivisionError),
])
def test_parse_errors(text, exc):
    with pytest.raises(exc):
        E.parse(text, 3)


@pytest.mark.parametrize("text,pos", [("x0 + * x1", 5), ("(x0 + x1", 8), ("a[0,1", 5), ("x0 $ 1", 3),
                                      ("x0^1.5", 3), ("x0 x1", 3)])
def test_syntax_error_positions(text, pos):
    with pytest.raises(ExprSyntaxError) as info:
        E.parse(text)
    assert info.value.position == pos
    assert f"position {pos}" in str(info.value)


def test_constant_exponents_and_division():
    assert float(E._const_value(E.parse("2^-2"))) == 0.25
    e = E.parse("a[0,0] / (2*3)")
    p = JetPoint.random(_su2(), 1, np.random.default_rng(0))
    assert E.evaluate(e, p) == pytest.approx(p.coordinate(0, 0) / 6)


def _su2():
    from ymsym import liealg
    return liealg.su2()


# random expressions over a small vocabulary
leaf = st.one_of(
    st.fractions(min_value=-5, max_value=5, max_denominator=4).map(E.Num),
    st.integers(0, 3).map(E.Var),
    st.tuples(st.integers(0, 2), st.integers(0, 3), st.lists(st.integers(0, 3), max_size=2)).map(
        lambda t: E.Coord(t[0], t[1], tuple(sorted(t[2])))),
)


def _extend(children):
    return st.one_of(
        st.tuples(children, children).map(lambda t: E.Add(*t)),
        st.tuples(children, children).map(lambda t: E.Sub(*t)),
        st.tuples(children, children).map(lambda t: E.Mul(*t)),
        children.map(E.Neg),
        st.tuples(children, st.integers(0, 3)).map(lambda t: E.Pow(*t)),
        st.tuples(children, st.integers(1, 5)).map(lambda t: E.Div(t[0], E.Num(Fraction(t[1])))),
    )


exprs = st.recursive(leaf, _extend, max_leaves=8)


@settings(max_examples=150, deadline=None)
@given(exprs)
def test_print_parse_roundtrip(e):
    back = E.parse(E.to_string(e))
    assert sympy.expand(to_sympy(back) - to_sympy(e)) == 0


@settings(max_examples=40, deadline=None)
@given(exprs, st.integers(0, 10_000))
def test_evaluator_matches_sympy(e, seed):
    p = JetPoint.random(_su2(), 2, np.random.default_rng(seed))
    assert E.evaluate(e, p) == pytest.approx(sympy_value(e, p), rel=1e-9, abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(exprs, st.integers(0, 3))
def test_plain_partials_match_sympy(e, i):
    d = E.partial(e, E.Var(i))
    assert sympy.expand(to_sympy(d) - sympy.diff(to_sympy(e), sympy.Symbol(f"x{i}"))) == 0


def test_symmetric_weight():
    assert E.symmetric_weight(()) == 1
    assert E.symmetric_weight((0, 1)) == Fraction(1, 2)
    assert E.symmetric_weight((0, 0)) == 1
    assert E.symmetric_weight((0, 0, 1)) == Fraction(1, 3)


def test_partial_symmetrised_delta():
    e = E.parse("d2[0,1,0,3]^2")
    d = E.partial(e, (0, 1, (3, 0)))
    assert sympy.expand(to_sympy(d) - sympy.Symbol("c_0_1_0_3")) == 0  # 2 c * 1/2


@pytest.mark.parametrize("text", ["x1*a[0,2]^2 - d1[1,0,3]*a[2,2]", "d2[0,0,1,1]*x0 + d2[1,1,0,2]^2",
                                  "(a[0,0] + d1[2,1,2] - 3/7)^3"])
def test_total_derivative_as_ordered_sum(text):
    """D_i G = d_i G + sum over ordered (al, j, K) of a_{j,K i} dG/da_{j,K}, K ranging over all tuples."""
    e = E.parse(text, 3)
    for i in range(4):
        total = to_sympy(E.partial(e, E.Var(i)))
        for q in range(3):
            for al, j in itertools.product(range(3), range(4)):
                for K in itertools.product(range(4), repeat=q):
                    d = E.partial(e, (al, j, K))
                    if d == E.ZERO:
                        continue
                    shifted = sympy.Symbol("c_" + "_".join(map(str, (al, j) + tuple(sorted(K + (i,))))))
                    total += to_sympy(d) * shifted
        assert sympy.expand(total - to_sympy(E.total_derivative_expr(e, i))) == 0


def test_total_derivatives_commute():
    e = E.parse("x0*a[1,2]*d1[0,1,3] - a[2,0]^3 + x3^2", 3)
    for i, j in itertools.combinations(range(4), 2):
        dij = E.total_derivative_expr(E.total_derivative_expr(e, i), j)
        dji = E.total_derivative_expr(E.total_derivative_expr(e, j), i)
        assert sympy.expand(to_sympy(dij) - to_sympy(dji)) == 0


def test_total_derivative_expr_matches_jet_series():
    g = _su2()
    p = JetPoint.random(g, 4, np.random.default_rng(3))
    e = E.parse("x0*a[1,2]*d1[0,1,3] - d2[2,0,1,1]^2", 3)
    for i in range(4):
        assert E.evaluate(E.total_derivative_expr(e, i), p) == pytest.approx(
            jet.total_derivative(e, i, p), rel=1e-10, abs=1e-10)


def test_total_derivative_order_limit():
    with pytest.raises(Exception):
        E.total_derivative_expr(E.parse("d5[0,0,1,1,1,1,1]"), 0)


def test_expr_array_and_bracket():
    g = _su2()
    X = E.expr_array(["x0", "a[0,1]", "0"], 3)
    Y = E.expr_array(["1", "0", "x2"], 3)
    br = E.bracket_expr(g.c, X, Y)
    p = JetPoint.random(g, 1, np.random.default_rng(4))
    xv = np.array([E.evaluate(v, p) for v in X])
    yv = np.array([E.evaluate(v, p) for v in Y])
    ref = np.einsum("abg,b,g->a", g.c_float, xv, yv)
    assert np.allclose([E.evaluate(v, p) for v in br], ref)
    with pytest.raises(BadIndexRange):
        E.expr_array(["a[5,0]"], 3)


def test_operators_build_expressions():
    e = E.x(0) * 2 + E.coord(1, 2, 3) - Fraction(1, 2)
    assert E.is_constant(E.num(3) * 2) and not E.is_constant(e)
    assert E.coordinates(e) == {E.Coord(1, 2, (3,))}
    with pytest.raises(TypeError):
        E.x(0) + "a"
