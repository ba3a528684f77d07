"""Thin exact-rational linear algebra layer over sympy's DomainMatrix (QQ).

Everything public speaks ``fractions.Fraction``; conversion to the gmpy-backed
ground domain happens here only.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Sequence

import numpy as np
from sympy import QQ
from sympy.polys.matrices import DomainMatrix


def frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, str):
        return Fraction(x.strip())
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    if isinstance(x, float):
        return Fraction(x).limit_denominator()
    # gmpy / sympy rationals
    return Fraction(int(x.numerator), int(x.denominator))


def qarray(data) -> np.ndarray:
    """Object array of Fractions with the shape of ``data``."""
    arr = np.asarray(data, dtype=object)
    out = np.empty(arr.shape, dtype=object)
    for idx in np.ndindex(arr.shape):
        out[idx] = frac(arr[idx])
    return out


def qzeros(shape) -> np.ndarray:
    out = np.empty(shape, dtype=object)
    out.fill(Fraction(0))
    return out


def qeye(n: int) -> np.ndarray:
    out = qzeros((n, n))
    for i in range(n):
        out[i, i] = Fraction(1)
    return out


def to_dm(m) -> DomainMatrix:
    m = np.asarray(m, dtype=object)
    rows, cols = m.shape
    data = [[QQ(int(frac(v).numerator), int(frac(v).denominator)) for v in row] for row in m]
    return DomainMatrix(data, (rows, cols), QQ)


def from_dm(dm: DomainMatrix) -> np.ndarray:
    rows, cols = dm.shape
    out = qzeros((rows, cols))
    for i, row in enumerate(dm.to_list()):
        for j, v in enumerate(row):
            out[i, j] = frac(v)
    return out


def nullspace(m) -> list[np.ndarray]:
    """Basis of the right nullspace as Fraction vectors (RREF-normalized)."""
    m = np.asarray(m, dtype=object)
    if m.shape[0] == 0:
        return [qeye(m.shape[1])[i] for i in range(m.shape[1])]
    ns = to_dm(m).to_sparse().nullspace()
    return [row for row in from_dm(ns.to_dense())] if ns.shape[0] else []


def rank(m) -> int:
    m = np.asarray(m, dtype=object)
    if m.size == 0:
        return 0
    return to_dm(m).rank()


def det(m) -> Fraction:
    return frac(to_dm(m).det())


def inverse(m) -> np.ndarray:
    return from_dm(to_dm(m).inv())


def solve(m, b) -> np.ndarray:
    """Exact solution of the consistent system m @ x = b (least-index pivot basis)."""
    m = np.asarray(m, dtype=object)
    b = np.asarray(b, dtype=object).reshape(-1, 1)
    aug = np.concatenate([m, b], axis=1)
    rref, pivots = to_dm(aug).rref()
    ncols = m.shape[1]
    if ncols in pivots:
        raise ValueError("inconsistent linear system")
    r = from_dm(rref)
    x = qzeros(ncols)
    for row, p in enumerate(pivots):
        x[p] = r[row, ncols]
    return x


def matmul(a, b) -> np.ndarray:
    return np.dot(np.asarray(a, dtype=object), np.asarray(b, dtype=object))


def column_space(vectors: Sequence[np.ndarray]) -> np.ndarray:
    """Independent subset (as columns) spanning the given vectors."""
    if not vectors:
        return qzeros((0, 0))
    m = np.stack(vectors, axis=1)
    _, pivots = to_dm(m).rref()
    return m[:, list(pivots)]


def to_float(m) -> np.ndarray:
    return np.asarray(m, dtype=object).astype(float)
