"""Truncated Taylor series in the four Minkowski coordinates.

A jet of order k at x0 is the k-jet of a polynomial section, so total
derivatives of differential functions become ordinary derivatives of
truncated series in t = x - x0.  Every series carries the degree up to
which its coefficients are exact; differentiation lowers it by one and
reading a point value needs it to be non-negative.
"""
from __future__ import annotations

from functools import lru_cache
from itertools import combinations_with_replacement
from math import factorial

import numpy as np
from scipy import sparse

NVAR = 4


class OrderExceeded(ValueError):
    """A quantity needs jet coordinates beyond the order that is available."""


def monomials(max_degree: int, nvar: int = NVAR) -> list[tuple[int, ...]]:
    out = []
    for d in range(max_degree + 1):
        for combo in combinations_with_replacement(range(nvar), d):
            e = [0] * nvar
            for v in combo:
                e[v] += 1
            out.append(tuple(e))
    return out


def multiset_to_exponent(indices) -> tuple[int, ...]:
    e = [0] * NVAR
    for v in indices:
        e[v] += 1
    return tuple(e)


def exponent_to_multiset(e) -> tuple[int, ...]:
    return tuple(v for v in range(NVAR) for _ in range(e[v]))


def exponent_factorial(e) -> int:
    out = 1
    for v in e:
        out *= factorial(v)
    return out


class TaylorSpace:
    def __init__(self, N: int):
        self.N = N
        self.mons = monomials(N)
        self.index = {m: k for k, m in enumerate(self.mons)}
        self.n = len(self.mons)
        self.deg = np.array([sum(m) for m in self.mons])
        self.fact = np.array([exponent_factorial(m) for m in self.mons], dtype=float)
        self._deriv = []
        for i in range(NVAR):
            src, dst, fac = [], [], []
            for k, m in enumerate(self.mons):
                up = list(m)
                up[i] += 1
                up = tuple(up)
                if up in self.index:
                    src.append(self.index[up])
                    dst.append(k)
                    fac.append(up[i])
            self._deriv.append((np.array(src, dtype=int), np.array(dst, dtype=int), np.array(fac, dtype=float)))
        I, J, K = [], [], []
        for a, ma in enumerate(self.mons):
            for b, mb in enumerate(self.mons):
                m = tuple(x + y for x, y in zip(ma, mb))
                if m in self.index:
                    I.append(a)
                    J.append(b)
                    K.append(self.index[m])
        self.I = np.array(I)
        self.J = np.array(J)
        T = len(K)
        self.P = sparse.csr_matrix((np.ones(T), (np.arange(T), np.array(K))), shape=(T, self.n))

    def reduce(self, prod: np.ndarray) -> np.ndarray:
        shape = prod.shape[:-1]
        flat = prod.reshape(-1, prod.shape[-1])
        out = (self.P.T @ flat.T).T
        return np.asarray(out).reshape(shape + (self.n,))


@lru_cache(maxsize=None)
def space(N: int) -> TaylorSpace:
    return TaylorSpace(N)


class Series:
    """Array of truncated series; the last axis holds monomial coefficients."""

    __array_priority__ = 100

    def __init__(self, coef: np.ndarray, sp: TaylorSpace, valid: int):
        self.coef = coef
        self.sp = sp
        self.valid = min(valid, sp.N)

    # construction
    @classmethod
    def const(cls, value, sp: TaylorSpace) -> "Series":
        value = np.asarray(value)
        coef = np.zeros(value.shape + (sp.n,), dtype=np.result_type(value, float))
        coef[..., 0] = value
        return cls(coef, sp, sp.N)

    @classmethod
    def coordinate(cls, x0, sp: TaylorSpace) -> "Series":
        """The four coordinate functions x^i = x0^i + t^i."""
        coef = np.zeros((NVAR, sp.n))
        coef[:, 0] = x0
        if sp.N >= 1:
            for i in range(NVAR):
                coef[i, sp.index[tuple(int(v == i) for v in range(NVAR))]] = 1.0
        return cls(coef, sp, sp.N)

    # structure
    @property
    def shape(self):
        return self.coef.shape[:-1]

    def __getitem__(self, idx) -> "Series":
        if not isinstance(idx, tuple):
            idx = (idx,)
        return Series(self.coef[idx + (Ellipsis,)] if Ellipsis not in idx else self.coef[idx],
                      self.sp, self.valid)

    def map(self, fn) -> "Series":
        """Apply a linear map on the non-series axes: fn receives coef with series axis last."""
        return Series(fn(self.coef), self.sp, self.valid)

    def moveaxis(self, src, dst) -> "Series":
        n = len(self.shape)
        src = [a % n for a in np.atleast_1d(src)]
        dst = [a % n for a in np.atleast_1d(dst)]
        return Series(np.moveaxis(self.coef, src, dst), self.sp, self.valid)

    def sum(self, axis) -> "Series":
        n = len(self.shape)
        axes = tuple(a % n for a in np.atleast_1d(axis))
        return Series(self.coef.sum(axis=axes), self.sp, self.valid)

    def value(self) -> np.ndarray:
        if self.valid < 0:
            raise OrderExceeded("jet order too low for this evaluation")
        return self.coef[..., 0]

    def derivative_value(self, multi) -> np.ndarray:
        """Partial derivative d^multi at the base point (multi is an index multiset)."""
        e = multiset_to_exponent(multi)
        if sum(e) > self.valid:
            raise OrderExceeded(f"derivative of order {sum(e)} needs validity {sum(e)}, have {self.valid}")
        return self.coef[..., self.sp.index[e]] * exponent_factorial(e)

    # calculus
    def d(self, i: int) -> "Series":
        src, dst, fac = self.sp._deriv[i]
        coef = np.zeros_like(self.coef)
        coef[..., dst] = self.coef[..., src] * fac
        return Series(coef, self.sp, self.valid - 1)

    # arithmetic
    def _lift(self, other):
        if isinstance(other, Series):
            return other
        return Series.const(other, self.sp)

    def __add__(self, other):
        other = self._lift(other)
        return Series(self.coef + other.coef, self.sp, min(self.valid, other.valid))

    __radd__ = __add__

    def __sub__(self, other):
        other = self._lift(other)
        return Series(self.coef - other.coef, self.sp, min(self.valid, other.valid))

    def __rsub__(self, other):
        return self._lift(other) - self

    def __neg__(self):
        return Series(-self.coef, self.sp, self.valid)

    def __mul__(self, other):
        if isinstance(other, Series):
            sp = self.sp
            prod = self.coef[..., sp.I] * other.coef[..., sp.J]
            return Series(sp.reduce(prod), sp, min(self.valid, other.valid))
        other = np.asarray(other)
        return Series(self.coef * other[..., None], self.sp, self.valid)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Series):
            raise TypeError("division by a series is not supported")
        return self * (1.0 / np.asarray(other))

    def __pow__(self, k: int):
        if not isinstance(k, (int, np.integer)) or k < 0:
            raise ValueError("only non-negative integer powers")
        out = Series.const(np.ones(self.shape), self.sp)
        for _ in range(k):
            out = out * self
        return out

    def conj(self) -> "Series":
        return Series(np.conj(self.coef), self.sp, self.valid)

    def __repr__(self):
        return f"Series(shape={self.shape}, N={self.sp.N}, valid={self.valid})"


def bilinear(spec: str, A: Series, B: Series, *arrays) -> Series:
    """einsum over the non-series axes of two series (plus plain constant arrays).

    ``spec`` is written without the series axis, e.g. ``"abg,bk,gij->akij"``
    with the plain arrays first.
    """
    sp = A.sp
    ins, out = spec.split("->")
    ins = ins.split(",")
    nplain = len(arrays)
    plain_specs, a_spec, b_spec = ins[:nplain], ins[nplain], ins[nplain + 1]
    full = ",".join(plain_specs + [a_spec + "T", b_spec + "T"]) + "->" + out + "T"
    prod = np.einsum(full, *arrays, A.coef[..., sp.I], B.coef[..., sp.J], optimize=True)
    return Series(sp.reduce(prod), sp, min(A.valid, B.valid))


def linear(spec: str, array, A: Series) -> Series:
    """einsum of a constant array with a series, series axis appended."""
    ins, out = spec.split("->")
    p, a = ins.split(",")
    return Series(np.einsum(f"{p},{a}T->{out}T", array, A.coef, optimize=True), A.sp, A.valid)


def stack(items, axis=0) -> Series:
    """Stack series along a new non-series axis (negative axes count from the last non-series axis)."""
    items = list(items)
    if axis < 0:
        axis += len(items[0].shape) + 1
    coef = np.stack([s.coef for s in items], axis=axis)
    return Series(coef, items[0].sp, min(s.valid for s in items))
