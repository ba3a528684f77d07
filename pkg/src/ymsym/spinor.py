"""Two-spinor calculus on Minkowski space.

Fixed conventions (recorded in :class:`SpinorConvention` and checked on
construction):

* eta = diag(-1, 1, 1, 1), eps_{01} = 1, eps^{AB} eps_{CB} = delta^A_C.
* indices move north-west to south-east: xi^A = eps^{AB} xi_B, xi_B = xi^A eps_{AB}.
* sigma^i_{II'} = (i / sqrt 2) (1, Pauli_x, Pauli_y, Pauli_z).  With this
  signature no real normalization satisfies eta_ij sigma^i sigma^j = eps eps;
  the imaginary factor does, at the price of rank-r real tensors obeying
  conj(T_{I I' ...}) = (-1)^r T_{I' I ...}.

Spinor arrays store every tensor slot as an unprimed/primed pair in that
order: T[I1, I1', I2, I2', ...].
"""
from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .taylor import Series, monomials


class RankUnsupported(ValueError):
    pass


class NotAntisymmetric(ValueError):
    pass


class DegreeTooLow(UserWarning):
    pass


@dataclass(frozen=True, eq=False)
class SpinorConvention:
    eta: np.ndarray
    eps: np.ndarray       # eps_{AB}
    eps_up: np.ndarray    # eps^{AB}
    sigma: np.ndarray     # sigma[i, I, I']
    sigma_inv: np.ndarray  # sigma_inv[i, I, I'], T_i = sigma_inv[i, I, I'] T_{II'}
    description: str = "sigma = (i/sqrt2)(1, pauli); eta=diag(-1,1,1,1); eps_01=1; NW-SE raising"

    def soldering_residual(self) -> float:
        lhs = np.einsum("ij,iab,jcd->abcd", self.eta, self.sigma, self.sigma)
        rhs = np.einsum("ac,bd->abcd", self.eps, self.eps)
        return float(np.abs(lhs - rhs).max())

    def as_dict(self) -> dict:
        return {
            "eta": self.eta.diagonal().tolist(),
            "eps_lower": self.eps.tolist(),
            "eps_upper": self.eps_up.tolist(),
            "sigma_factor": "i/sqrt(2)",
            "sigma_basis": ["identity", "pauli_x", "pauli_y", "pauli_z"],
            "raising": "xi^A = eps^{AB} xi_B, xi_B = xi^A eps_{AB}",
        }


@lru_cache(maxsize=None)
def default_convention() -> SpinorConvention:
    eta = np.diag([-1.0, 1.0, 1.0, 1.0])
    eps = np.array([[0.0, 1.0], [-1.0, 0.0]])
    # eps^{AB} eps_{CB} = delta^A_C  =>  eps_up = inverse of eps^T
    eps_up = np.linalg.inv(eps.T)
    pauli = [np.eye(2), np.array([[0, 1], [1, 0]]), np.array([[0, -1j], [1j, 0]]), np.array([[1, 0], [0, -1]])]
    sigma = (1j / np.sqrt(2)) * np.array(pauli, dtype=complex)
    S = sigma.reshape(4, 4).T  # S[(I, I'), i]
    sigma_inv = np.linalg.inv(S).reshape(4, 2, 2)
    conv = SpinorConvention(eta, eps, eps_up, sigma, sigma_inv)
    res = conv.soldering_residual()
    if res > 1e-14:
        raise AssertionError(f"soldering relation fails: {res}")
    return conv


# ---------------------------------------------------------------- index moves

def raise_index(arr, axis: int, conv: SpinorConvention | None = None):
    conv = conv or default_convention()
    arr = np.moveaxis(np.asarray(arr), axis, -1)
    out = np.einsum("...b,ab->...a", arr, conv.eps_up)
    return np.moveaxis(out, -1, axis)


def lower_index(arr, axis: int, conv: SpinorConvention | None = None):
    conv = conv or default_convention()
    arr = np.moveaxis(np.asarray(arr), axis, -1)
    out = np.einsum("...a,ab->...b", arr, conv.eps)
    return np.moveaxis(out, -1, axis)


# ---------------------------------------------------------------- tensors <-> spinors

def tensor_to_spinor(T, conv: SpinorConvention | None = None, rank: int | None = None):
    """Spinor representative of a tensor with lower indices; leading axes are batch axes."""
    conv = conv or default_convention()
    T = np.asarray(T)
    rank = T.ndim if rank is None else rank
    if rank > 4:
        raise RankUnsupported(f"rank {rank} > 4")
    out = T.astype(complex)
    lead = T.ndim - rank
    for _ in range(rank):
        # contracted slots move to the end, so the next tensor slot is always at ``lead``
        out = np.tensordot(out, conv.sigma, axes=([lead], [0]))
    return out


def spinor_to_tensor(S, conv: SpinorConvention | None = None, rank: int | None = None):
    conv = conv or default_convention()
    S = np.asarray(S)
    rank = S.ndim // 2 if rank is None else rank
    if rank > 4:
        raise RankUnsupported(f"rank {rank} > 4")
    out = S
    lead = S.ndim - 2 * rank
    for _ in range(rank):
        out = np.tensordot(out, conv.sigma_inv, axes=([lead, lead + 1], [1, 2]))
    return out


def is_hermitian_rep(S, rank: int, tol=1e-13) -> bool:
    """Reality test of a spinor representative: conj(S) = (-1)^rank S with I<->I' swapped."""
    S = np.asarray(S)
    lead = S.ndim - 2 * rank
    perm = list(range(lead))
    for k in range(rank):
        perm += [lead + 2 * k + 1, lead + 2 * k]
    swapped = np.transpose(S, perm)
    return bool(np.abs(np.conj(S) - (-1) ** rank * swapped).max() <= tol)


# ---------------------------------------------------------------- field spinor

def phi_from_F(F, conv: SpinorConvention | None = None, check: bool = True, tol: float = 1e-12):
    """(Phi_IJ, PhiBar_I'J') of an antisymmetric F_ij (leading axes are batch axes)."""
    conv = conv or default_convention()
    F = np.asarray(F)
    if check and np.abs(F + np.swapaxes(F, -1, -2)).max() > tol * (1 + np.abs(F).max()):
        raise NotAntisymmetric("F_ij is not antisymmetric")
    Fs = tensor_to_spinor(F, conv, rank=2)  # [..., I, I', J, J']
    phi = 0.5 * np.einsum("...aibj,ij->...ab", Fs, conv.eps_up)
    phibar = 0.5 * np.einsum("...aibj,ab->...ij", Fs, conv.eps_up)
    return phi, phibar


def phi_reconstruct(phi, phibar, conv: SpinorConvention | None = None):
    """eps_{I'J'} Phi_IJ + eps_IJ PhiBar_I'J' laid out as [..., I, I', J, J']."""
    conv = conv or default_convention()
    return (np.einsum("ij,...ab->...aibj", conv.eps, phi)
            + np.einsum("ab,...ij->...aibj", conv.eps, phibar))


def phi_series(F: Series, conv: SpinorConvention | None = None) -> tuple[Series, Series]:
    """Phi and PhiBar as series; F has shape (dim, 4, 4)."""
    conv = conv or default_convention()
    sig = conv.sigma
    phi = F.map(lambda c: 0.5 * np.einsum("zklT,kai,lbj,ij->zabT", c, sig, sig, conv.eps_up))
    phibar = F.map(lambda c: 0.5 * np.einsum("zklT,kai,lbj,ab->zijT", c, sig, sig, conv.eps_up))
    return phi, phibar


# ---------------------------------------------------------------- symmetrization

@dataclass(frozen=True, eq=False)
class SpinorField:
    data: np.ndarray
    kinds: tuple  # per axis: "u" (unprimed) or "p" (primed)
    upper: tuple = ()

    def __post_init__(self):
        if len(self.kinds) != self.data.ndim or any(n != 2 for n in self.data.shape):
            raise ValueError("spinor field shape does not match its signature")
        if not self.upper:
            object.__setattr__(self, "upper", (False,) * len(self.kinds))


def symmetrize(field, group) -> SpinorField | np.ndarray:
    """Average over all permutations of the axes in ``group``."""
    if isinstance(field, SpinorField):
        kinds = {field.kinds[a] for a in group}
        ups = {field.upper[a] for a in group}
        if len(kinds) > 1 or len(ups) > 1:
            raise ValueError("can only symmetrize indices of one kind and position")
        return SpinorField(symmetrize(field.data, group), field.kinds, field.upper)
    arr = np.asarray(field)
    group = list(group)
    out = np.zeros_like(arr)
    perms = list(itertools.permutations(group))
    for p in perms:
        axes = list(range(arr.ndim))
        for src, dst in zip(group, p):
            axes[dst] = src
        out = out + np.transpose(arr, axes)
    return out / len(perms)


# ---------------------------------------------------------------- conformal Killing vectors

CKV_NAMES = ("t0", "t1", "t2", "t3", "rot12", "rot13", "rot23", "boost01", "boost02", "boost03",
             "dil", "sc0", "sc1", "sc2", "sc3")
_ALIASES = {"rot01": "boost01", "rot02": "boost02", "rot03": "boost03", "dilation": "dil"}


@dataclass(frozen=True, eq=False)
class ConformalKillingVector:
    """Polynomial vector field xi^j(x) = coeffs[j, m] x^m over monomials of degree <= degree."""
    coeffs: np.ndarray
    degree: int = 2
    name: str = ""

    @property
    def mons(self):
        return monomials(self.degree)

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        vals = np.array([np.prod(x ** np.array(m)) for m in self.mons])
        return self.coeffs @ vals

    def series(self, x0, sp) -> Series:
        """xi^j as a Taylor series around x0 (shape (4,))."""
        xs = Series.coordinate(x0, sp)
        out = Series.const(np.zeros(4), sp)
        for k, m in enumerate(self.mons):
            if not np.any(self.coeffs[:, k]):
                continue
            term = Series.const(np.ones(()), sp)
            for v, e in enumerate(m):
                for _ in range(e):
                    term = term * xs[v]
            out = out + Series(np.outer(self.coeffs[:, k], term.coef), sp, term.valid)
        return out

    def jacobian(self, x) -> np.ndarray:
        """d_i xi^j at x, as [i, j]."""
        x = np.asarray(x, dtype=float)
        J = np.zeros((4, 4))
        for k, m in enumerate(self.mons):
            for i in range(4):
                if m[i] == 0:
                    continue
                e = np.array(m)
                e[i] -= 1
                J[i] += m[i] * np.prod(x ** e) * self.coeffs[:, k]
        return J

    def __add__(self, other):
        return ConformalKillingVector(self.coeffs + other.coeffs, self.degree, "")

    def __mul__(self, s):
        return ConformalKillingVector(self.coeffs * s, self.degree, self.name)

    __rmul__ = __mul__


def ckv_residual(xi: ConformalKillingVector, x, conv: SpinorConvention | None = None) -> float:
    """max |d^(i xi^j) - eta^{ij} d_k xi^k / 4| at x."""
    conv = conv or default_convention()
    eta = conv.eta  # its own inverse
    J = xi.jacobian(x)  # J[a, j] = d_a xi^j
    up = eta @ J        # d^i xi^j
    sym = 0.5 * (up + up.T)
    return float(np.abs(sym - 0.25 * eta * np.trace(J)).max())


def ckv(name: str, degree: int = 2) -> ConformalKillingVector:
    name = _ALIASES.get(name, name)
    mons = monomials(degree)
    idx = {m: k for k, m in enumerate(mons)}
    eta = np.diag([-1.0, 1.0, 1.0, 1.0])
    C = np.zeros((4, len(mons)))

    def unit(*vs):
        e = [0, 0, 0, 0]
        for v in vs:
            e[v] += 1
        return idx[tuple(e)]

    if name.startswith("t") and len(name) == 2:
        C[int(name[1]), 0] = 1.0
    elif name.startswith("rot") or name.startswith("boost"):
        a, b = int(name[-2]), int(name[-1])
        omega = np.zeros((4, 4))
        omega[a, b], omega[b, a] = 1.0, -1.0
        for j in range(4):
            for l in range(4):
                coef = eta[j, j] * omega[j, l]
                if coef:
                    C[j, unit(l)] += coef
    elif name == "dil":
        for j in range(4):
            C[j, unit(j)] = 1.0
    elif name.startswith("sc"):
        k = int(name[2])
        b = np.zeros(4)
        b[k] = 1.0
        for j in range(4):
            for l in range(4):
                # 2 (b.x) x^j
                C[j, unit(l, j)] += 2 * eta[l, l] * b[l]
                # - (x.x) b^j
                C[j, unit(l, l)] -= eta[l, l] * b[j]
    else:
        raise KeyError(f"unknown conformal Killing vector {name!r}")
    return ConformalKillingVector(C, degree, name)


def conformal_killing_basis(conv: SpinorConvention | None = None) -> list[ConformalKillingVector]:
    return [ckv(n) for n in CKV_NAMES]


def _poly_derivative_matrices(degree: int):
    """D[i] maps coefficients over monomials(degree) to those of d_i over monomials(degree-1)."""
    src = monomials(degree)
    dst = monomials(max(degree - 1, 0)) if degree >= 1 else []
    didx = {m: k for k, m in enumerate(dst)}
    D = np.zeros((4, len(dst), len(src)))
    for k, m in enumerate(src):
        for i in range(4):
            if m[i]:
                e = list(m)
                e[i] -= 1
                D[i, didx[tuple(e)], k] = m[i]
    return D


def _nullspace(A: np.ndarray, rel_tol: float = 1e-8):
    if A.shape[0] == 0:
        return np.eye(A.shape[1]), np.zeros(0)
    u, s, vh = np.linalg.svd(A)
    smax = s[0] if s.size else 0.0
    rank = int(np.sum(s > rel_tol * max(smax, 1e-300)))
    return vh[rank:].conj().T, s


@dataclass
class CKVSolution:
    max_degree: int
    dimension: int
    basis: list
    singular_values: np.ndarray = field(repr=False, default=None)


def solve_conformal_killing(max_degree: int) -> CKVSolution:
    mons = monomials(max_degree)
    M = len(mons)
    eta = np.diag([-1.0, 1.0, 1.0, 1.0])
    if max_degree == 0:
        basis = [ConformalKillingVector(np.eye(4)[:, [j]], 0, f"t{j}") for j in range(4)]
        return CKVSolution(0, 4, basis, np.zeros(0))
    D = _poly_derivative_matrices(max_degree)
    Md = D.shape[1]
    rows = []
    # unknowns: xi^j coefficients, flattened as j * M + m
    for i in range(4):
        for j in range(i, 4):
            blk = np.zeros((Md, 4 * M))
            # (1/2)(eta^{ii} d_i xi^j + eta^{jj} d_j xi^i) - (1/4) eta^{ij} d_k xi^k
            blk[:, j * M:(j + 1) * M] += 0.5 * eta[i, i] * D[i]
            blk[:, i * M:(i + 1) * M] += 0.5 * eta[j, j] * D[j]
            if i == j:
                for k in range(4):
                    blk[:, k * M:(k + 1) * M] -= 0.25 * eta[i, i] * D[k]
            rows.append(blk)
    A = np.vstack(rows)
    N, s = _nullspace(A)
    basis = [ConformalKillingVector(N[:, k].reshape(4, M), max_degree, f"ckv{k}") for k in range(N.shape[1])]
    return CKVSolution(max_degree, N.shape[1], basis, s)


# ---------------------------------------------------------------- Killing spinors

@dataclass
class KillingSpinorBasis:
    r: int
    s: int
    max_degree: int
    complex_dim: int
    basis: list  # complex arrays [(r+1), (s+1), monomial]
    real_dim: int | None = None
    singular_values: np.ndarray = field(repr=False, default=None)

    def full_tensor(self, coeffs, x) -> np.ndarray:
        """Lowered components s_{K1..Kr K1'..Ks'} at x."""
        mons = monomials(self.max_degree)
        vals = np.array([np.prod(np.asarray(x, float) ** np.array(m)) for m in mons])
        comp = coeffs @ vals
        out = np.zeros((2,) * (self.r + self.s), dtype=complex)
        for idx in itertools.product((0, 1), repeat=self.r + self.s):
            out[idx] = comp[sum(idx[:self.r]), sum(idx[self.r:])]
        return out


def _killing_matrix(r, s, max_degree, conv):
    M = len(monomials(max_degree))
    D = _poly_derivative_matrices(max_degree)
    Md = D.shape[1]
    nunk = (r + 1) * (s + 1) * M
    rows = []
    for p in range(r + 2):
        for q in range(s + 2):
            uidx = [1] * p + [0] * (r + 1 - p)
            pidx = [1] * q + [0] * (s + 1 - q)
            blk = np.zeros((Md, nunk), dtype=complex)
            w = 1.0 / ((r + 1) * (s + 1))
            for a in range(r + 1):
                rest_u = sum(uidx) - uidx[a]
                for b in range(s + 1):
                    rest_p = sum(pidx) - pidx[b]
                    col = (rest_u * (s + 1) + rest_p) * M
                    for i in range(4):
                        blk[:, col:col + M] += w * conv.sigma[i, uidx[a], pidx[b]] * D[i]
            rows.append(blk)
    return np.vstack(rows), M


def solve_killing_spinors(r: int, s: int, max_degree: int,
                          conv: SpinorConvention | None = None) -> KillingSpinorBasis:
    """Polynomial Killing spinors d_{(J(J'} s_{K1..Kr) K1'..Ks')} = 0 (all indices lowered)."""
    conv = conv or default_convention()
    if r + s > 4:
        raise ValueError("desk-scale solver: r + s <= 4")
    if max_degree < r + s:
        warnings.warn(f"max_degree {max_degree} < {r + s}; the solution space may be truncated", DegreeTooLow)
    if max_degree == 0:
        M = 1
        A = np.zeros((0, (r + 1) * (s + 1)), dtype=complex)
    else:
        A, M = _killing_matrix(r, s, max_degree, conv)
    N, sv = _nullspace(A)
    basis = [N[:, k].reshape(r + 1, s + 1, M) for k in range(N.shape[1])]
    real_dim = None
    if r == s:
        # real unknowns (Re, Im); equations split into real and imaginary parts
        n = A.shape[1]
        Ar = np.block([[A.real, -A.imag], [A.imag, A.real]]) if A.shape[0] else np.zeros((0, 2 * n))
        # reality: s_(p,q) = (-1)^r conj s_(q,p)
        R = np.zeros((2 * n, 2 * n))
        for p in range(r + 1):
            for q in range(s + 1):
                for m in range(M):
                    a = (p * (s + 1) + q) * M + m
                    b = (q * (s + 1) + p) * M + m
                    sign = (-1) ** r
                    R[a, a] += 1.0
                    R[a, b] -= sign
                    R[n + a, n + a] += 1.0
                    R[n + a, n + b] += sign
        Nr, _ = _nullspace(np.vstack([Ar, R]))
        real_dim = Nr.shape[1]
    return KillingSpinorBasis(r, s, max_degree, len(basis), basis, real_dim, sv)


def ckv_to_spinor_coeffs(xi: ConformalKillingVector, conv: SpinorConvention | None = None) -> np.ndarray:
    """Lowered spinor xi_{KK'} = sigma^k_{KK'} eta_kj xi^j as a (2, 2, monomial) array."""
    conv = conv or default_convention()
    lowered = conv.eta @ xi.coeffs
    return np.einsum("kab,km->abm", conv.sigma, lowered)
