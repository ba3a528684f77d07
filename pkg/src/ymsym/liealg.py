"""Structure-constant analysis of real Lie algebras over exact rationals.

Conventions: ``c[a, b, g]`` is the coefficient of ``e_a`` in ``[e_b, e_g]``.
Matrices act on column vectors; ``ad(v)[a, g] = c[a, b, g] v[b]``.
"""
from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Optional

import numpy as np
import sympy

from . import exact
from .exact import frac, qarray, qeye, qzeros


class LieAlgebraError(ValueError):
    pass


class AntisymmetryViolation(LieAlgebraError):
    def __init__(self, indices):
        super().__init__(f"c[a][b][g] != -c[a][g][b] at (a, b, g) = {indices}")
        self.indices = indices


class JacobiViolation(LieAlgebraError):
    def __init__(self, indices, value):
        super().__init__(f"Jacobi identity fails at (a, b, g, d) = {indices}: {value}")
        self.indices = indices
        self.value = value


class NotSemisimple(LieAlgebraError):
    pass


class NotADerivation(LieAlgebraError):
    pass


class CentralizerDimUnexpected(LieAlgebraError):
    pass


class IrrationalComplexStructure(LieAlgebraError):
    pass


@dataclass(frozen=True, eq=False)
class LieAlgebra:
    dim: int
    c: np.ndarray  # object array of Fraction, shape (dim, dim, dim)
    name: Optional[str] = None

    @property
    def c_float(self) -> np.ndarray:
        cached = self.__dict__.get("_c_float")
        if cached is None:
            cached = exact.to_float(self.c)
            object.__setattr__(self, "_c_float", cached)
        return cached

    def ad(self, v) -> np.ndarray:
        v = qarray(v)
        return np.einsum("abg,b->ag", self.c, v)

    def bracket(self, v, w) -> np.ndarray:
        return np.einsum("abg,b,g->a", self.c, qarray(v), qarray(w))

    def basis_ad(self) -> list[np.ndarray]:
        return [self.c[:, b, :] for b in range(self.dim)]

    def __repr__(self):
        return f"LieAlgebra(name={self.name!r}, dim={self.dim})"


def validate_algebra(c, name: Optional[str] = None) -> LieAlgebra:
    c = qarray(c)
    if c.ndim != 3 or len(set(c.shape)) != 1:
        raise LieAlgebraError(f"structure constants must be a cubic array, got shape {c.shape}")
    n = c.shape[0]
    for a in range(n):
        for b in range(n):
            for g in range(b, n):
                if c[a, b, g] != -c[a, g, b]:
                    raise AntisymmetryViolation((a, b, g))
    # Jacobi, entrywise over all quadruples
    for a in range(n):
        for b in range(n):
            for g in range(n):
                for d in range(n):
                    s = Fraction(0)
                    for m in range(n):
                        s += (c[m, b, g] * c[a, m, d] + c[m, g, d] * c[a, m, b]
                              + c[m, d, b] * c[a, m, g])
                    if s != 0:
                        raise JacobiViolation((a, b, g, d), s)
    return LieAlgebra(n, c, name)


# ---------------------------------------------------------------- Killing form

@dataclass(frozen=True, eq=False)
class KillingFormMatrix:
    kappa: np.ndarray
    kappa_inv: Optional[np.ndarray] = None


def killing_form(g: LieAlgebra) -> KillingFormMatrix:
    c = g.c
    kappa = np.einsum("man,nbm->ab", c, c)
    inv = exact.inverse(kappa) if exact.det(kappa) != 0 else None
    return KillingFormMatrix(kappa, inv)


def is_semisimple(g: LieAlgebra) -> bool:
    return exact.det(killing_form(g).kappa) != 0


# ---------------------------------------------------------------- ideals

@dataclass(frozen=True, eq=False)
class IdealDecomposition:
    ideals: list  # basis matrices, columns are ambient vectors
    projectors: list

    @property
    def dims(self) -> list[int]:
        return [b.shape[1] for b in self.ideals]


def _coords(basis: np.ndarray, v: np.ndarray) -> np.ndarray:
    return exact.solve(basis, v)


def ideal_closure(g: LieAlgebra, vectors) -> np.ndarray:
    """Smallest ideal containing ``vectors``, as a basis matrix (columns)."""
    span = [qarray(v) for v in vectors if any(x != 0 for x in qarray(v))]
    if not span:
        return qzeros((g.dim, 0))
    basis = exact.column_space(span)
    ads = g.basis_ad()
    while True:
        new = [basis[:, k] for k in range(basis.shape[1])]
        new += [exact.matmul(A, basis[:, k]) for A in ads for k in range(basis.shape[1])]
        grown = exact.column_space(new)
        if grown.shape[1] == basis.shape[1]:
            return basis
        basis = grown


def restrict(g: LieAlgebra, basis: np.ndarray, name=None) -> LieAlgebra:
    """Structure constants of the subalgebra spanned by the columns of ``basis``."""
    k = basis.shape[1]
    c = qzeros((k, k, k))
    for i in range(k):
        for j in range(k):
            c[:, i, j] = _coords(basis, g.bracket(basis[:, i], basis[:, j]))
    return LieAlgebra(k, c, name)


def _kappa_orthocomplement(kappa, ideal: np.ndarray, within: np.ndarray) -> np.ndarray:
    m = exact.matmul(exact.matmul(ideal.T, kappa), within)
    ns = exact.nullspace(m)
    if not ns:
        return qzeros((within.shape[0], 0))
    return exact.matmul(within, np.stack(ns, axis=1))


def _centralizer_matrices(g: LieAlgebra) -> list[np.ndarray]:
    n = g.dim
    rows = []
    for A in g.basis_ad():
        # (R A - A R)[a, d] in the unknowns r[x, y]
        for a in range(n):
            for d in range(n):
                row = qzeros(n * n)
                for y in range(n):
                    if A[y, d] != 0:
                        row[a * n + y] += A[y, d]
                for x in range(n):
                    if A[a, x] != 0:
                        row[x * n + d] -= A[a, x]
                if any(v != 0 for v in row):
                    rows.append(row)
    m = np.stack(rows) if rows else qzeros((0, n * n))
    return [v.reshape(n, n) for v in exact.nullspace(m)]


def _split_by_centralizer(g: LieAlgebra, seed: int) -> Optional[list[np.ndarray]]:
    """Invariant subspaces of a generic centralizer element; None if irreducible."""
    basis = _centralizer_matrices(g)
    if len(basis) <= 1:
        return None
    rng = random.Random(seed)
    R = sum((Fraction(rng.randint(-7, 7), rng.randint(1, 5)) * B for B in basis), qzeros((g.dim, g.dim)))
    t = sympy.Symbol("t")
    M = sympy.Matrix(R.tolist()).applyfunc(sympy.Rational)
    factors = sympy.factor_list(M.charpoly(t).as_expr(), t)[1]
    if len(factors) <= 1:
        return None
    parts = []
    for f, mult in factors:
        poly = sympy.Poly(f ** mult, t)
        P = sympy.zeros(g.dim, g.dim)
        for coeff in poly.all_coeffs():
            P = P * M + coeff * sympy.eye(g.dim)
        ker = P.nullspace()
        parts.append(qarray([[v[i] for v in ker] for i in range(g.dim)]))
    return parts


def decompose_ideals(g: LieAlgebra, seed: int = 0) -> IdealDecomposition:
    if not is_semisimple(g):
        raise NotSemisimple(f"{g.name or 'algebra'} has a degenerate Killing form")
    kappa = killing_form(g).kappa
    rng = random.Random(seed)

    def split(W: np.ndarray) -> list[np.ndarray]:
        k = W.shape[1]
        seeds = []
        for _ in range(2):
            coeffs = [Fraction(rng.randint(-9, 9), rng.randint(1, 4)) for _ in range(k)]
            seeds.append(exact.matmul(W, qarray(coeffs)))
        seeds += [W[:, i] for i in range(k)]
        best = None
        for v in seeds:
            I = ideal_closure(g, [v])
            if 0 < I.shape[1] < k and (best is None or I.shape[1] < best.shape[1]):
                best = I
        if best is not None:
            rest = _kappa_orthocomplement(kappa, best, W)
            return split(best) + split(rest)
        # every seed generates W: certify with the centralizer of the restriction
        parts = _split_by_centralizer(restrict(g, W), seed)
        if parts is None:
            return [W]
        out = []
        for p in parts:
            out += split(exact.matmul(W, p))
        return out

    ideals = split(qeye(g.dim))
    ideals.sort(key=lambda I: min(i for i in range(g.dim) if any(v != 0 for v in I[i])))
    full = np.concatenate(ideals, axis=1)
    inv = exact.inverse(full)
    projectors = []
    offset = 0
    for I in ideals:
        k = I.shape[1]
        projectors.append(exact.matmul(I, inv[offset:offset + k, :]))
        offset += k
    return IdealDecomposition(ideals, projectors)


# ---------------------------------------------------------------- ad-centralizer

@dataclass(frozen=True, eq=False)
class IdealCentralizer:
    kind: str  # "scalar" or "complex"
    J: Optional[np.ndarray] = None  # ideal coordinates, J @ J == -identity
    J_ambient: Optional[np.ndarray] = None  # J acting on the ideal, zero elsewhere

    def coordinates(self, R_ideal: np.ndarray) -> tuple[Fraction, Fraction]:
        """(a, b) with R = a id + b J on the ideal."""
        k = R_ideal.shape[0]
        a = sum(R_ideal[i, i] for i in range(k)) / k
        if self.J is None:
            return a, Fraction(0)
        # tr(J) = 0 and tr(J J) = -k
        b = -sum((exact.matmul(R_ideal, self.J))[i, i] for i in range(k)) / k
        return a, b


@dataclass(frozen=True, eq=False)
class AdCommutingEndoSpace:
    basis: list
    per_ideal: list

    @property
    def dim(self) -> int:
        return len(self.basis)


def _exact_sqrt(q: Fraction) -> Optional[Fraction]:
    if q < 0:
        return None
    n, d = math.isqrt(q.numerator), math.isqrt(q.denominator)
    if n * n == q.numerator and d * d == q.denominator:
        return Fraction(n, d)
    return None


def _classify_ideal(gm: LieAlgebra) -> IdealCentralizer:
    basis = _centralizer_matrices(gm)
    k = gm.dim
    if len(basis) == 1:
        return IdealCentralizer("scalar")
    if len(basis) > 2:
        raise CentralizerDimUnexpected(
            f"centralizer of a {k}-dimensional ideal has dimension {len(basis)}; the ideal is not simple")
    I = qeye(k)
    B = next(b for b in basis if not all(b[i, j] == (b[0, 0] if i == j else 0)
                                        for i in range(k) for j in range(k)))
    a = sum(B[i, i] for i in range(k)) / k
    B0 = B - a * I
    sq = exact.matmul(B0, B0)
    mu = -sq[0, 0]
    if not all(sq[i, j] == (-mu if i == j else 0) for i in range(k) for j in range(k)) or mu <= 0:
        raise CentralizerDimUnexpected("two-dimensional centralizer without a complex structure")
    b = _exact_sqrt(mu)
    if b is None:
        raise IrrationalComplexStructure(f"complex structure needs sqrt({mu}); not rational in this basis")
    J = B0 / b
    # tie-break between +J and -J: first nonzero entry in column-major order is positive
    first = next(J[i, j] for j in range(k) for i in range(k) if J[i, j] != 0)
    if first < 0:
        J = -J
    return IdealCentralizer("complex", J)


def ad_centralizer(g: LieAlgebra, dec: IdealDecomposition) -> AdCommutingEndoSpace:
    full = np.concatenate(dec.ideals, axis=1)
    inv = exact.inverse(full)
    per_ideal, basis = [], []
    offset = 0
    for I, P in zip(dec.ideals, dec.projectors):
        k = I.shape[1]
        info = _classify_ideal(restrict(g, I))
        basis.append(P)
        if info.J is not None:
            J_amb = exact.matmul(exact.matmul(I, info.J), inv[offset:offset + k, :])
            info = IdealCentralizer("complex", info.J, J_amb)
            basis.append(J_amb)
        per_ideal.append(info)
        offset += k
    # the constructed basis must span the full nullspace of the commuting condition
    ns = _centralizer_matrices(g)
    if len(ns) != len(basis) or exact.rank(np.stack([b.reshape(-1) for b in basis + ns])) != len(ns):
        raise CentralizerDimUnexpected(
            f"centralizer dimension {len(ns)} does not match the per-ideal classification {len(basis)}")
    return AdCommutingEndoSpace(basis, per_ideal)


def extract_complex_structure(space: AdCommutingEndoSpace, m: int) -> Optional[np.ndarray]:
    if not 0 <= m < len(space.per_ideal):
        raise CentralizerDimUnexpected(f"no ideal with index {m}")
    return space.per_ideal[m].J


def commutes_with_ad(g: LieAlgebra, R) -> bool:
    R = qarray(R)
    return all((exact.matmul(R, A) == exact.matmul(A, R)).all() for A in g.basis_ad())


# ---------------------------------------------------------------- derivations

def is_derivation(z, g: LieAlgebra) -> bool:
    z, c = qarray(z), g.c
    t = (np.einsum("ab,bgd->agd", z, c) + np.einsum("bd,abg->agd", z, c)
         - np.einsum("bg,abd->agd", z, c))
    return all(v == 0 for v in t.reshape(-1))


def derivation_of(g: LieAlgebra, w) -> np.ndarray:
    """The derivation z with z[a, b] = c[a, b, g] w[g], i.e. v -> [v, w]."""
    return np.einsum("abg,g->ab", g.c, qarray(w))


def inner_derivation_vector(z, g: LieAlgebra) -> np.ndarray:
    kf = killing_form(g)
    if kf.kappa_inv is None:
        raise NotSemisimple("inner-derivation recovery needs a non-degenerate Killing form")
    if not is_derivation(z, g):
        raise NotADerivation("matrix is not a derivation of the algebra")
    z = qarray(z)
    w = -np.einsum("ab,dbg,gd->a", kf.kappa_inv, g.c, z)
    assert (derivation_of(g, w) == z).all()
    return w


# ---------------------------------------------------------------- built-ins

def _from_brackets(n, brackets, name) -> LieAlgebra:
    c = qzeros((n, n, n))
    for (b, g), terms in brackets.items():
        for a, val in terms.items():
            c[a, b, g] += Fraction(val)
            c[a, g, b] -= Fraction(val)
    return validate_algebra(c, name)


def su2() -> LieAlgebra:
    br = {(0, 1): {2: 1}, (1, 2): {0: 1}, (2, 0): {1: 1}}
    return _from_brackets(3, br, "su2")


def sl2r() -> LieAlgebra:
    # basis H, E, F
    br = {(0, 1): {1: 2}, (0, 2): {2: -2}, (1, 2): {0: 1}}
    return _from_brackets(3, br, "sl2r")


def realification(h: LieAlgebra, name=None) -> LieAlgebra:
    """Realification in the basis e_a, f_a = i e_a of a complex algebra with real constants."""
    n = h.dim
    c = qzeros((2 * n, 2 * n, 2 * n))
    for a in range(n):
        for b in range(n):
            for g in range(n):
                v = h.c[a, b, g]
                c[a, b, g] = v                # [e, e] = c e
                c[n + a, b, n + g] = v        # [e, f] = c f
                c[n + a, n + b, g] = v        # [f, e] = c f
                c[a, n + b, n + g] = -v       # [f, f] = -c e
    return validate_algebra(c, name)


def sl2c_r() -> LieAlgebra:
    return realification(sl2r(), "sl2c_r")


def direct_sum(*algebras: LieAlgebra, name=None) -> LieAlgebra:
    n = sum(a.dim for a in algebras)
    c = qzeros((n, n, n))
    off = 0
    for alg in algebras:
        k = alg.dim
        c[off:off + k, off:off + k, off:off + k] = alg.c
        off += k
    return validate_algebra(c, name or "+".join(a.name or "?" for a in algebras))


def abelian(n: int = 3) -> LieAlgebra:
    return validate_algebra(qzeros((n, n, n)), f"abelian{n}")


BUILTINS = {
    "su2": su2,
    "sl2r": sl2r,
    "sl2c_r": sl2c_r,
    "su2_su2": lambda: direct_sum(su2(), su2(), name="su2_su2"),
    "sl2c_r_su2": lambda: direct_sum(sl2c_r(), su2(), name="sl2c_r_su2"),
    "abelian3": lambda: abelian(3),
}

SEMISIMPLE_BUILTINS = ("su2", "sl2r", "sl2c_r", "su2_su2", "sl2c_r_su2")

_cache: dict = {}


def builtin(name: str) -> LieAlgebra:
    if name not in BUILTINS:
        raise KeyError(f"unknown built-in algebra {name!r}; choose from {sorted(BUILTINS)}")
    if name not in _cache:
        _cache[name] = BUILTINS[name]()
    return _cache[name]


# ---------------------------------------------------------------- file format

def algebra_to_json(g: LieAlgebra) -> dict:
    return {
        "dim": g.dim,
        "c": [[[str(g.c[a, b, d]) for d in range(g.dim)] for b in range(g.dim)] for a in range(g.dim)],
        "name": g.name or "",
    }


def algebra_from_json(data: dict) -> LieAlgebra:
    try:
        n = int(data["dim"])
        c = qarray(data["c"])
    except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
        raise LieAlgebraError(f"malformed algebra spec: {exc}") from exc
    if c.shape != (n, n, n):
        raise LieAlgebraError(f"'c' has shape {c.shape}, expected {(n, n, n)}")
    return validate_algebra(c, data.get("name") or None)


def load_algebra(path) -> LieAlgebra:
    return algebra_from_json(json.loads(Path(path).read_text()))


def save_algebra(g: LieAlgebra, path) -> None:
    Path(path).write_text(json.dumps(algebra_to_json(g), indent=1))
