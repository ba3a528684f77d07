"""Candidate symmetries of the Yang-Mills equations and their determining equations.

A candidate is an evolutionary vector field with components Q^alpha_i, given
either in closed form on series (conformal families) or as an array of
expressions (gauge and custom candidates).  The determining equations

    nabla^j nabla_i Q_j - nabla^j nabla_j Q_i - [F_i^j, Q_j] = 0

are evaluated at on-shell samples in tensor and in spinor form.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from math import ceil
from typing import Callable, Optional, Sequence

import numpy as np

from . import exact, liealg, spinor as sp_mod, symexpr
from .jet import (ETA, JetContext, OnShellSample, SampleOrderTooLow, bracket_values, normalized,
                  sample_on_shell)
from .liealg import AdCommutingEndoSpace, IdealDecomposition, LieAlgebra
from .spinor import ConformalKillingVector
from .taylor import Series, bilinear, monomials


class NoComplexStructure(ValueError):
    pass


class HypothesisViolated(ValueError):
    def __init__(self, which: str, detail: str = ""):
        super().__init__(f"hypothesis violated: {which}" + (f" ({detail})" if detail else ""))
        self.which = which


class InsufficientSamples(ValueError):
    pass


# ---------------------------------------------------------------- candidates

@dataclass(frozen=True, eq=False)
class CandidateSymmetry:
    algebra: LieAlgebra
    order: int
    kind: str
    closed_form: Optional[Callable[[JetContext], Series]] = None
    exprs: Optional[np.ndarray] = None  # object array (dim, 4)
    label: str = ""

    def series(self, ctx: JetContext) -> Series:
        if self.closed_form is not None:
            return self.closed_form(ctx)
        return ctx.evaluate(self.exprs)

    def __add__(self, other: "CandidateSymmetry") -> "CandidateSymmetry":
        return combine([(1.0, self), (1.0, other)])

    def __sub__(self, other: "CandidateSymmetry") -> "CandidateSymmetry":
        return combine([(1.0, self), (-1.0, other)])


def combine(terms: Sequence[tuple[float, CandidateSymmetry]], label: str = "") -> CandidateSymmetry:
    """Linear combination of candidates (closed-form evaluation on series)."""
    g = terms[0][1].algebra

    def q(ctx):
        out = None
        for w, c in terms:
            s = c.series(ctx) * w
            out = s if out is None else out + s
        return out

    return CandidateSymmetry(g, max(c.order for _, c in terms), "combination", q,
                             label=label or " + ".join(f"{w:g}*{c.label or c.kind}" for w, c in terms))


@dataclass(frozen=True, eq=False)
class GaugeGenerator:
    exprs: np.ndarray  # object array (dim,)

    @property
    def order(self) -> int:
        return max(symexpr.order(e) for e in self.exprs)

    @classmethod
    def parse(cls, texts, dim: Optional[int] = None) -> "GaugeGenerator":
        return cls(symexpr.expr_array(texts, dim))


def _ckv_series(xi: ConformalKillingVector, ctx: JetContext) -> Series:
    return xi.series(ctx.point.x, ctx.sp)


def _check_ckv(xi: ConformalKillingVector, tol: float = 1e-10):
    rng = np.random.default_rng(12345)
    for _ in range(3):
        if sp_mod.ckv_residual(xi, rng.uniform(-1, 1, 4)) > tol:
            raise HypothesisViolated("conformal Killing equation", xi.name or "vector field")


def build_conformal(g: LieAlgebra, xi, check: bool = True) -> CandidateSymmetry:
    """Q_i = xi^j F_ij."""
    if isinstance(xi, str):
        xi = sp_mod.ckv(xi)
    if check:
        _check_ckv(xi)

    def q(ctx):
        return bilinear("j,aij->ai", _ckv_series(xi, ctx), ctx.F)

    return CandidateSymmetry(g, 1, "conformal", q, label=f"conformal({xi.name})")


def build_endo_conformal(g: LieAlgebra, R, xi, check: bool = True) -> CandidateSymmetry:
    """Q^a_i = R^a_b xi^j F^b_ij for R commuting with ad and xi conformal Killing."""
    if isinstance(xi, str):
        xi = sp_mod.ckv(xi)
    Rq = exact.qarray(R) if np.asarray(R).dtype == object else None
    Rf = np.asarray(R, dtype=float)
    if check:
        ok = liealg.commutes_with_ad(g, Rq) if Rq is not None else all(
            np.allclose(Rf @ A, A @ Rf, atol=1e-12) for A in (g.c_float[:, b, :] for b in range(g.dim)))
        if not ok:
            raise HypothesisViolated("R commutes with the adjoint representation")
        _check_ckv(xi)

    def q(ctx):
        base = bilinear("j,aij->ai", _ckv_series(xi, ctx), ctx.F)
        return base.map(lambda c: np.einsum("ab,biT->aiT", Rf, c))

    return CandidateSymmetry(g, 1, "endo_conformal", q, label=f"endo_conformal({xi.name})")


def build_jconformal(g: LieAlgebra, dec: IdealDecomposition, space: AdCommutingEndoSpace, m: int,
                     tau) -> CandidateSymmetry:
    """tau^j J_m F_{m,ij} on ideal m, zero on the other ideals."""
    if not 0 <= m < len(space.per_ideal):
        raise NoComplexStructure(f"no ideal with index {m}")
    info = space.per_ideal[m]
    if info.J_ambient is None:
        raise NoComplexStructure(f"ideal {m} ({dec.dims[m]}-dimensional) carries no complex structure")
    cand = build_endo_conformal(g, info.J_ambient, tau)
    name = tau if isinstance(tau, str) else tau.name
    return CandidateSymmetry(g, 1, "jconformal", cand.closed_form, label=f"jconformal({m},{name})")


def gauge_components(g: LieAlgebra, X: GaugeGenerator) -> np.ndarray:
    """Q^a_i = D_i X^a + c^a_{bg} a^b_i X^g as expressions."""
    dim = g.dim
    Q = np.empty((dim, 4), dtype=object)
    for i in range(4):
        a_i = np.array([symexpr.coord(b, i) for b in range(dim)], dtype=object)
        br = symexpr.bracket_expr(g.c, a_i, X.exprs)
        for a in range(dim):
            Q[a, i] = symexpr.add(symexpr.total_derivative_expr(X.exprs[a], i), br[a])
    return Q


def build_gauge(g: LieAlgebra, X) -> CandidateSymmetry:
    if not isinstance(X, GaugeGenerator):
        X = GaugeGenerator.parse(X, g.dim)
    if len(X.exprs) != g.dim:
        raise ValueError(f"gauge generator needs {g.dim} components")
    if X.order > 1:
        raise ValueError("gauge generators are limited to order <= 1")
    Q = gauge_components(g, X)
    return CandidateSymmetry(g, X.order + 1, "gauge", exprs=Q, label="gauge")


def build_custom(g: LieAlgebra, Q) -> CandidateSymmetry:
    Q = symexpr.expr_array(Q, g.dim)
    if Q.shape != (g.dim, 4):
        raise ValueError(f"custom candidate needs shape ({g.dim}, 4), got {Q.shape}")
    order = max(symexpr.order(e) for e in Q.ravel())
    if order > 2:
        raise ValueError("candidate symmetries are limited to order <= 2")
    return CandidateSymmetry(g, order, "custom", exprs=Q, label="custom")


def build_ansatz(g: LieAlgebra, coeffs: np.ndarray, degree: int) -> CandidateSymmetry:
    """Q^a_i = s^a_b^j(x) F^b_ij with s given by polynomial coefficients [monomial, j, a, b]."""
    mons = monomials(degree)
    coeffs = np.asarray(coeffs, dtype=float)

    def q(ctx):
        xs = ctx.xs
        basis = []
        for m in mons:
            term = Series.const(np.ones(()), ctx.sp)
            for v, e in enumerate(m):
                for _ in range(e):
                    term = term * xs[v]
            basis.append(term.coef)
        B = Series(np.array(basis), ctx.sp, ctx.sp.N)  # [monomial]
        s = B.map(lambda c: np.einsum("mjab,mT->jabT", coeffs, c))
        return bilinear("jab,bij->ai", s, ctx.F)

    return CandidateSymmetry(g, 1, "ansatz", q, label="ansatz")


# ---------------------------------------------------------------- determining equations

@dataclass(frozen=True)
class DeterminingResult:
    raw: np.ndarray
    normalized: float
    spinor_raw: Optional[np.ndarray] = None
    spinor_normalized: Optional[float] = None
    agreement: Optional[float] = None


def _check_sample(Q: CandidateSymmetry, sample: OnShellSample):
    if sample.point.order < Q.order + 2 or sample.depth < Q.order:
        raise SampleOrderTooLow(
            f"order-{Q.order} candidate needs a sample of order >= {Q.order + 2} on depth >= {Q.order}; "
            f"got order {sample.point.order}, depth {sample.depth}")


@lru_cache(maxsize=4096)
def _context(g: LieAlgebra, order: int, seed: int, index: int) -> tuple[OnShellSample, JetContext]:
    s = sample_on_shell(g, order, seed, index)
    return s, s.point.context()


def _context_of(sample: OnShellSample) -> JetContext:
    cached = sample.__dict__.get("_ctx")
    if cached is None:
        cached = sample.point.context()
        object.__setattr__(sample, "_ctx", cached)
    return cached


def _residual_pieces(Q: CandidateSymmetry, ctx: JetContext):
    Qs = Q.series(ctx)
    N2 = ctx.nabla(ctx.nabla(Qs)).value()       # [a, m, k, l] = nabla_l nabla_k Q_m
    Qv = Qs.value()
    F = ctx.F.value()
    t1 = np.einsum("lm,amil->ai", ETA, N2)
    t2 = np.einsum("lm,aiml->ai", ETA, N2)
    t3 = np.einsum("lm,ailm->ai", ETA, bracket_values(ctx.c, F, Qv))
    return N2, Qv, F, (t1, t2, t3)


def determining_residual(Q: CandidateSymmetry, sample: OnShellSample, spinor: bool = True) -> DeterminingResult:
    _check_sample(Q, sample)
    ctx = _context_of(sample)
    N2, Qv, F, (t1, t2, t3) = _residual_pieces(Q, ctx)
    raw = t1 - t2 - t3
    norm = normalized(raw, [t1, t2, t3])
    if not spinor:
        return DeterminingResult(raw, norm)
    sraw, sterms = _spinor_residual(ctx.c, N2, Qv, F)
    agree = normalized(sp_mod.tensor_to_spinor(raw, rank=1) - sraw, sterms)
    return DeterminingResult(raw, norm, sraw, normalized(sraw, sterms), agree)


def _spinor_residual(c, N2, Qv, F):
    conv = sp_mod.default_convention()
    eu = conv.eps_up
    S = sp_mod.tensor_to_spinor(N2, conv, rank=3)     # [a, M, M', K, K', L, L']
    Qs = sp_mod.tensor_to_spinor(Qv, conv, rank=1)    # [a, J, J']
    phi, phibar = sp_mod.phi_from_F(F, conv)
    tA = np.einsum("JB,jb,aJjIiBb->aIi", eu, eu, S)
    tB = np.einsum("JB,jb,aIiJjBb->aIi", eu, eu, S)
    phi_m = np.einsum("aIB,JB->aIJ", phi, eu)         # Phi_I^J
    phibar_m = np.einsum("aib,jb->aij", phibar, eu)   # PhiBar_I'^J'
    tC = np.einsum("abg,bIJ,gJi->aIi", c, phi_m, Qs)
    tD = np.einsum("abg,bij,gIj->aIi", c, phibar_m, Qs)
    return tA - tB - tC - tD, [tA, tB, tC, tD]


def determining_residual_spinor(Q: CandidateSymmetry, sample: OnShellSample) -> np.ndarray:
    return determining_residual(Q, sample, spinor=True).spinor_raw


@dataclass
class SymmetryReport:
    label: str
    seeds: list
    tensor: list
    spinor: list
    agreement: list
    tol: float
    max_residual: float = field(init=False)
    mean_residual: float = field(init=False)
    passed: bool = field(init=False)

    def __post_init__(self):
        both = [max(t, s) for t, s in zip(self.tensor, self.spinor)]
        self.max_residual = max(both) if both else 0.0
        self.mean_residual = float(np.mean(both)) if both else 0.0
        self.passed = self.max_residual < self.tol

    @property
    def verdict(self) -> str:
        return "PASS" if self.passed else "FAIL"


def on_shell_samples(g: LieAlgebra, order: int, n: int, seed: int = 0) -> list[OnShellSample]:
    return [_context(g, order, seed, k)[0] for k in range(n)]


def _map(fn, items, jobs: int):
    if jobs <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))  # preserves input order


def is_symmetry(Q: CandidateSymmetry, n_samples: int = 10, tol: float = 1e-8, seed: int = 0,
                jobs: int = 1) -> SymmetryReport:
    order = Q.order + 2

    def one(k):
        s = _context(Q.algebra, order, seed, k)[0]
        return determining_residual(Q, s)

    results = _map(one, range(n_samples), jobs)
    return SymmetryReport(Q.label or Q.kind, [[seed, k] for k in range(n_samples)],
                          [r.normalized for r in results], [r.spinor_normalized for r in results],
                          [r.agreement for r in results], tol)


@dataclass(frozen=True)
class EquivalenceResult:
    passed: bool
    residual: float


def equivalence_check(Q1: CandidateSymmetry, Q2: CandidateSymmetry, X: Optional[GaugeGenerator] = None,
                      n_samples: int = 5, tol: float = 1e-10, seed: int = 0) -> EquivalenceResult:
    """Does Q1 - Q2 - nabla X vanish on-shell?"""
    g = Q1.algebra
    G = build_gauge(g, X) if X is not None else None
    order = max(Q1.order, Q2.order, G.order if G else 0)
    worst = 0.0
    for s in on_shell_samples(g, max(order, 0) + 2, n_samples, seed):
        ctx = _context_of(s)
        v1, v2 = Q1.series(ctx).value(), Q2.series(ctx).value()
        vg = G.series(ctx).value() if G else np.zeros_like(v1)
        worst = max(worst, normalized(v1 - v2 - vg, [v1, v2, vg]))
    return EquivalenceResult(worst < tol, worst)


# ---------------------------------------------------------------- first-order ansatz classifier

GAP_THRESHOLD = 1e6
# conformal Killing vectors of polynomial degree <= 0, 1, >= 2
_CKV_DIM = (4, 11, 15)


def rank_cut(s: np.ndarray, ncols: int, shape) -> tuple[int, float]:
    """Numerical rank and gap sigma_rank / sigma_{rank+1} from singular values (descending)."""
    s = np.asarray(s, dtype=float)
    if s.size == 0 or s[0] == 0.0:
        return 0, float("inf")
    floor = s[0] * np.finfo(float).eps * max(shape) * 1e-2
    vals = np.concatenate([s, np.zeros(max(ncols - s.size, 0))])
    vals = np.maximum(vals, floor)
    vals = np.concatenate([vals, [floor]])
    ratios = vals[:-1] / vals[1:]
    k = int(np.argmax(ratios))
    if ratios[k] <= GAP_THRESHOLD:
        # no separation: either full rank with a tail above the floor or numerically ambiguous
        return ncols, float(ratios[k])
    return k + 1, float(ratios[k])


def _svd_null(M: np.ndarray):
    """(null basis as columns, complement rows, rank, gap, singular values)."""
    if M.shape[0] < M.shape[1]:
        M = np.vstack([M, np.zeros((M.shape[1] - M.shape[0], M.shape[1]))])
    # reduce tall matrices first; the singular values are those of R
    if M.shape[0] > 2 * M.shape[1]:
        M = np.linalg.qr(M, mode="r")
    _, s, vh = np.linalg.svd(M, full_matrices=True)
    rank, gap = rank_cut(s, M.shape[1], M.shape)
    return vh[rank:].T, vh[:rank], rank, gap, s


def _local_data(ctx: JetContext):
    c = ctx.c
    a = ctx.A.value()                      # [d, k]
    da = ctx.dA.value()                    # [d, k, l] = d_l a_k
    F = ctx.F.value()                      # [b, m, j]
    NF = ctx.nabla(ctx.F)
    DF = NF.value()                        # [b, m, j, l] = nabla_l F_mj
    DDF = ctx.nabla(NF).value()            # [b, m, j, k, l] = nabla_l nabla_k F_mj
    A = np.einsum("adg,dk->kag", c, a)
    Ad = np.einsum("adg,dkl->klag", c, da)
    adF = np.einsum("adg,dil->ilag", c, F)
    return A, Ad, adF, F, DF, DDF


def local_operators(ctx: JetContext):
    """Linear maps from (s, ds, d^2 s) at the base point to the determining residual.

    Returns L0 [(i,A), (j,a,b)], L1 [(i,A), (j,n,a,b)] and K2 [i, (j,np,b)]
    where the second-derivative block is L2 = identity(a) x K2 (np runs over
    n <= p).  Row index (i, A) is the residual component, (a, b) the matrix
    entry of s_j.
    """
    A, Ad, adF, F, DF, DDF = _local_data(ctx)
    dim = F.shape[0]
    I = np.eye(dim)
    I4 = np.eye(4)
    AF = np.einsum("kbg,gmj->kbmj", A, F)
    AAF = np.einsum("kbg,lgmj->klbmj", A, AF)
    ADF = np.einsum("kbg,gmjl->kbmjl", A, DF)
    AdF = np.einsum("klbg,gmj->klbmj", Ad, F)
    o = "lkmAjab"
    T0 = (np.einsum(f"klAa,bmj->{o}", Ad, F) - np.einsum(f"Aa,klbmj->{o}", I, AdF)
          + np.einsum(f"lAg,kga,bmj->{o}", A, A, F) - np.einsum(f"lAa,kbmj->{o}", A, AF)
          - np.einsum(f"kAa,lbmj->{o}", A, AF) + np.einsum(f"Aa,klbmj->{o}", I, AAF)
          + np.einsum(f"kAa,bmjl->{o}", A, DF) - np.einsum(f"Aa,kbmjl->{o}", I, ADF)
          + np.einsum(f"lAa,bmjk->{o}", A, DF) - np.einsum(f"Aa,lbmjk->{o}", I, ADF)
          + np.einsum(f"Aa,bmjkl->{o}", I, DDF))
    o = "lkmAjnab"
    T1 = (np.einsum(f"nl,kAa,bmj->{o}", I4, A, F) - np.einsum(f"nl,Aa,kbmj->{o}", I4, I, AF)
          + np.einsum(f"nk,lAa,bmj->{o}", I4, A, F) - np.einsum(f"nk,Aa,lbmj->{o}", I4, I, AF)
          + np.einsum(f"nk,Aa,bmjl->{o}", I4, I, DF) + np.einsum(f"nl,Aa,bmjk->{o}", I4, I, DF))
    E0 = np.einsum("lm,limAjab->iAjab", ETA, T0) - np.einsum("lm,lmiAjab->iAjab", ETA, T0)
    E0 = E0 - np.einsum("ml,ilAa,bmj->iAjab", ETA, adF, F)
    E1 = np.einsum("lm,limAjnab->iAjnab", ETA, T1) - np.einsum("lm,lmiAjnab->iAjnab", ETA, T1)
    etaF = np.einsum("pm,bmj->bpj", ETA, F)
    K2full = np.einsum("ni,bpj->ijnpb", I4, etaF) - np.einsum("pn,bij->ijnpb", ETA, F)
    pairs = [(n, p) for n in range(4) for p in range(n, 4)]
    K2 = np.stack([K2full[:, :, n, p] + (K2full[:, :, p, n] if n != p else 0) for n, p in pairs], axis=2)
    return E0.reshape(4 * dim, -1), E1.reshape(4 * dim, -1), K2.reshape(4, -1)


def _poly_second_derivative(degree: int):
    """D2[np, nu, mu]: d_n d_p on monomials(degree) -> monomials(degree - 2), n <= p."""
    D = sp_mod._poly_derivative_matrices(degree)
    D1 = sp_mod._poly_derivative_matrices(degree - 1) if degree >= 1 else None
    pairs = [(n, p) for n in range(4) for p in range(n, 4)]
    if degree < 2:
        return np.zeros((10, 0, len(monomials(degree)))), pairs
    return np.stack([D1[n] @ D[p] for n, p in pairs]), pairs


@dataclass
class AnsatzClassification:
    algebra: str
    degree: int
    n_coefficients: int
    n_samples: int
    nullity: int
    gap: float
    expected: Optional[int]
    stage_dims: dict
    stage_gaps: dict
    singular_values: np.ndarray = field(repr=False)

    @property
    def matches(self) -> bool:
        return self.expected is None or self.nullity == self.expected


@dataclass(frozen=True)
class _LocalSpaces:
    N0: np.ndarray
    P1: np.ndarray
    P2: np.ndarray
    gaps: dict
    dims: dict


def default_sample_count(dim: int) -> int:
    # rows per sample: 4 dim (blocks 0, 1) and 4 (block 2); keep 1.5x the largest block width
    need = max(4 * dim * dim / (4 * dim), 16 * dim * dim / (4 * dim), 40 * dim / 4)
    return int(ceil(1.5 * need))


@lru_cache(maxsize=32)
def _local_spaces(g: LieAlgebra, n_samples: int, seed: int, jobs: int = 1) -> _LocalSpaces:
    dim = g.dim
    ops = _map(lambda k: local_operators(sample_on_shell(g, 3, seed, k).point.context()),
               range(n_samples), jobs)
    M0, M1, M2 = (np.vstack([op[r] for op in ops]) for r in range(3))
    for name, M in (("s", M0), ("ds", M1), ("d2s", M2)):
        if M.shape[0] < M.shape[1]:
            raise InsufficientSamples(
                f"{n_samples} samples give {M.shape[0]} rows for the {M.shape[1]} unknowns of the {name} block")
    N0, _, r0, g0, _ = _svd_null(M0)
    N1, P1, r1, g1, _ = _svd_null(M1)
    N2, P2, r2, g2, _ = _svd_null(M2)
    return _LocalSpaces(N0, P1, P2, {"s": g0, "ds": g1, "d2s": g2},
                        {"s": N0.shape[1], "ds": N1.shape[1], "d2s": N2.shape[1] * dim})


def classify_first_order_ansatz(g: LieAlgebra, dec: Optional[IdealDecomposition] = None, degree: int = 2,
                                n_samples: Optional[int] = None, seed: int = 0,
                                jobs: int = 1) -> AnsatzClassification:
    """Numerical nullity of the determining equations on Q = s(x) F with s of degree <= ``degree``.

    The determining residual at a point depends on s, ds, d^2 s there, each
    block with its own weight under the scaling a_{i,J} -> t^{1+|J|} a_{i,J}
    (which maps solutions to solutions); so each block must vanish alone.  The
    null spaces V_r of the three blocks are computed from on-shell samples, and
    a polynomial s solves the equations iff d^r s(x) lies in V_r for all x.
    """
    dim = g.dim
    n_samples = default_sample_count(dim) if n_samples is None else n_samples
    loc = _local_spaces(g, n_samples, seed, jobs)
    mons = monomials(degree)
    M = len(mons)
    N0 = loc.N0                                           # [(j,a,b), k]
    d0 = N0.shape[1]
    N0r = N0.reshape(4, dim, dim, d0)
    blocks = []
    if degree >= 1 and d0:
        D = sp_mod._poly_derivative_matrices(degree)     # [n, nu, mu]
        Y1 = np.einsum("rjnab,jabk->rnk", loc.P1.reshape(-1, 4, 4, dim, dim), N0r)
        blocks.append(np.einsum("nvm,rnk->vrmk", D, Y1).reshape(-1, M * d0))
    if degree >= 2 and d0:
        D2, _ = _poly_second_derivative(degree)            # [np, nu, mu]
        Y2 = np.einsum("rjpb,jabk->rapk", loc.P2.reshape(-1, 4, 10, dim), N0r)
        blocks.append(np.einsum("pvm,rapk->varmk", D2, Y2).reshape(-1, M * d0))
    ncols = M * d0
    if blocks and ncols:
        Mfin = np.vstack(blocks)
        _, _, rank, gfin, s = _svd_null(Mfin)
        nullity = ncols - rank
    else:
        nullity, gfin, s = ncols, float("inf"), np.zeros(0)
    gaps = dict(loc.gaps, final=gfin)
    expected = None
    if not liealg.is_semisimple(g):
        raise liealg.NotSemisimple(f"{g.name or 'algebra'} is not semisimple")
    if dec is not None:
        expected = _CKV_DIM[min(degree, 2)] * liealg.ad_centralizer(g, dec).dim
    return AnsatzClassification(g.name or "algebra", degree, dim * dim * 4 * M, n_samples, nullity,
                                min(gaps.values()), expected, dict(loc.dims, coefficients=ncols),
                                gaps, s)


# ---------------------------------------------------------------- JSON specs

def _ckv_from_spec(spec) -> ConformalKillingVector:
    if isinstance(spec, str):
        if spec == "zero":
            return ConformalKillingVector(np.zeros((4, len(monomials(2)))), 2, "zero")
        return sp_mod.ckv(spec)
    if isinstance(spec, dict) and "coeffs" in spec:
        degree = int(spec.get("degree", 2))
        return ConformalKillingVector(np.asarray(spec["coeffs"], dtype=float), degree, spec.get("name", "custom"))
    raise ValueError(f"bad conformal Killing vector spec: {spec!r}")


def candidate_from_spec(g: LieAlgebra, spec: dict, dec: Optional[IdealDecomposition] = None) -> CandidateSymmetry:
    """Build a candidate from a JSON symmetry spec (see the README for the schema)."""
    kind = spec.get("type")
    if kind == "conformal":
        return build_conformal(g, _ckv_from_spec(spec["ckv"]))
    if kind == "gauge":
        return build_gauge(g, spec["X"])
    if kind == "custom":
        return build_custom(g, spec["Q"])
    if kind == "endo_conformal":
        return build_endo_conformal(g, exact.qarray(spec["R"]), _ckv_from_spec(spec["ckv"]))
    if kind == "jconformal":
        dec = dec or liealg.decompose_ideals(g)
        space = liealg.ad_centralizer(g, dec)
        return build_jconformal(g, dec, space, int(spec.get("ideal", 0)), _ckv_from_spec(spec["ckv"]))
    raise ValueError(f"unknown symmetry type {kind!r}")
