"""Command-line front end.

    ymsym algebra analyze  --builtin su2
    ymsym symmetry verify  --builtin su2 --spec dil.json
    ymsym identity suite   --builtin su2 --samples 5
    ymsym classify         --builtin sl2c_r --degree 2
    ymsym killing solve    --r 1 --s 1 --degree 2

Exit codes: 0 all checks pass, 1 a verification failed, 2 bad usage or input.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
import warnings
from contextlib import contextmanager
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import exact, jet, liealg, spinor, symexpr, symmetry
from .report import FAIL, MEASURED, PASS, Report

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


# errors that mean "bad input", mapped to exit code 2
INPUT_ERRORS = (UsageError, liealg.LieAlgebraError, symexpr.ExprError, symmetry.NoComplexStructure,
                symmetry.HypothesisViolated, symmetry.InsufficientSamples, jet.SampleOrderTooLow,
                KeyError, ValueError, OSError, json.JSONDecodeError)


@contextmanager
def _timed(report: Report, section: str):
    t0 = time.perf_counter()
    yield
    report.section_time(section, time.perf_counter() - t0)


def _algebra(args) -> liealg.LieAlgebra:
    if args.algebra:
        return liealg.load_algebra(args.algebra)
    return liealg.builtin(args.builtin or "su2")


def _config(args) -> dict:
    keep = {k: v for k, v in vars(args).items() if k not in ("func", "out", "jobs") and v is not None}
    return keep


# ---------------------------------------------------------------- commands

def cmd_algebra_analyze(args) -> Report:
    g = _algebra(args)
    rep = Report("algebra analyze", _config(args))
    with _timed(rep, "algebra"):
        kf = liealg.killing_form(g)
        semi = liealg.is_semisimple(g)
        rep.add("algebra", "dimension", MEASURED, value=g.dim)
        rep.add("algebra", "killing_form", MEASURED, matrix=kf.kappa)
        rep.add("algebra", "semisimple", MEASURED, value=semi)
        if semi:
            dec = liealg.decompose_ideals(g, args.seed)
            space = liealg.ad_centralizer(g, dec)
            rep.add("algebra", "ideal_dims", MEASURED, value=dec.dims)
            rep.add("algebra", "centralizer_dim", MEASURED, value=space.dim,
                    basis=[b for b in space.basis])
            for m, info in enumerate(space.per_ideal):
                entry = {"kind": info.kind, "dim": dec.dims[m]}
                if info.J is not None:
                    sq = exact.matmul(info.J, info.J)
                    ok = (sq == -exact.qeye(sq.shape[0])).all()
                    rep.add("algebra", f"ideal{m}.J_squared_is_minus_identity", PASS if ok else FAIL,
                            J=info.J, J_ambient=info.J_ambient, **entry)
                else:
                    rep.add("algebra", f"ideal{m}.classification", MEASURED, **entry)
    return rep


def _spec(args) -> dict:
    if not args.spec:
        raise UsageError("symmetry verify needs --spec FILE (or an inline JSON object)")
    text = args.spec
    if not text.lstrip().startswith("{"):
        text = Path(text).read_text()
    spec = json.loads(text)
    if not isinstance(spec, dict):
        raise UsageError("the symmetry spec must be a JSON object")
    return spec


def cmd_symmetry_verify(args) -> Report:
    g = _algebra(args)
    spec = _spec(args)
    rep = Report("symmetry verify", dict(_config(args), spec=spec))
    tol = args.tol if args.tol is not None else 1e-8
    with _timed(rep, "symmetry"):
        dec = liealg.decompose_ideals(g, args.seed) if spec.get("type") == "jconformal" else None
        Q = symmetry.candidate_from_spec(g, spec, dec)
        r = symmetry.is_symmetry(Q, args.samples or 10, tol, args.seed, jobs=args.jobs)
        rep.add("symmetry", "determining_equations", PASS if r.passed else FAIL,
                candidate=r.label, order=Q.order, max_residual=r.max_residual,
                mean_residual=r.mean_residual, tol=tol, seeds=r.seeds,
                tensor=r.tensor, spinor=r.spinor)
        agree = max(r.agreement)
        rep.add("symmetry", "tensor_spinor_agreement", PASS if agree < 1e-10 else FAIL,
                residual=agree, tol=1e-10)
    return rep


def _commuting_endo(g):
    if liealg.is_semisimple(g):
        space = liealg.ad_centralizer(g, liealg.decompose_ideals(g))
        R = sum(exact.to_float(b) * (k + 1) for k, b in enumerate(space.basis))
    else:
        R = np.eye(g.dim)
    return lambda ctx: jet.Series.const(R, ctx.sp)


def cmd_identity_suite(args) -> Report:
    g = _algebra(args)
    rep = Report("identity suite", _config(args))
    n = args.samples or 5
    depth = 2 if args.depth is None else args.depth
    order = depth + 2
    if depth < 2:
        raise jet.SampleOrderTooLow(f"the wave identities need prolongation depth >= 2, got {depth}")
    if order > jet.MAX_ORDER:
        raise UsageError(f"depth {depth} exceeds the jet order cap {jet.MAX_ORDER}")
    r_comm = _commuting_endo(g)
    worst: dict[str, float] = {}
    control = float("inf")

    def note(name, value):
        worst[name] = max(worst.get(name, 0.0), value)

    with _timed(rep, "off_shell"):
        for k in range(n):
            rng = np.random.default_rng([args.seed, k])
            pt = jet.JetPoint.random(g, 4, rng)
            note("product_rule", jet.check_product_rule(pt, rng=rng).full)
            note("product_rule_commuting", jet.check_product_rule(pt, r=r_comm, rng=rng, commuting=True).simple)
            note("covar_bracket", jet.check_covar_bracket(pt, rng=rng))
            cc = jet.check_covar_commute(pt, rng=rng)
            note("covar_commute_tensor", cc.tensor)
            note("covar_commute_spinor", cc.spinor)
            note("covar_commute_agreement", cc.agreement)
            for key, v in jet.check_symm_skew_covar(pt, rng=rng).items():
                note(key, v)
            control = min(control, jet.check_wave_identities(pt, ("i",)).wave_phi)
    for name, v in worst.items():
        rep.check("off_shell", name, v, 1e-11)
    # the control must fail at every point, so its smallest value is reported
    rep.check("off_shell", "wave_phi_off_shell_control", control, 1e-3, below=False)

    with _timed(rep, "on_shell"):
        w1 = w2 = 0.0
        for k in range(n):
            s = jet.sample_on_shell(g, order, args.seed, k)
            w = jet.check_wave_identities(s)
            w1, w2 = max(w1, w.wave_phi), max(w2, w.wave_commute)
    rep.check("on_shell", "wave_phi", w1, 1e-10)
    rep.check("on_shell", "wave_commute", w2, 1e-9)

    with _timed(rep, "structure"):
        for p in (1, 2):
            v = jet.check_derasymm_structure(p, args.seed, g)
            rep.add("structure", f"derasymm_p{p}", PASS if v.passed else FAIL,
                    difference=v.difference, control=v.control)
        c1 = jet.check_derphisymm_structure_p1(g, args.seed, max(n, 2))
        rep.add("structure", "derphisymm_p1_constancy", PASS if c1.passed else FAIL,
                spread=c1.spread, constant_max=c1.constant_max, n_samples=c1.n_samples)
        for p in (0, 1):
            c = jet.check_wavephi_ordp(p, g, args.seed, max(n, 2))
            rep.add("structure", f"wavephi_p{p}_constancy", PASS if c.passed else FAIL,
                    spread=c.spread, constant_max=c.constant_max, n_samples=c.n_samples)
    return rep


def cmd_classify(args) -> Report:
    g = _algebra(args)
    rep = Report("classify", _config(args))
    degree = 2 if args.degree is None else args.degree
    with _timed(rep, "classifier"):
        dec = liealg.decompose_ideals(g, args.seed)
        res = symmetry.classify_first_order_ansatz(g, dec, degree, args.samples, args.seed, jobs=args.jobs)
        ok = res.matches and res.gap >= symmetry.GAP_THRESHOLD
        rep.add("classifier", "first_order_ansatz_nullity", PASS if ok else FAIL,
                nullity=res.nullity, expected=res.expected, gap=res.gap, degree=degree,
                n_samples=res.n_samples, coefficients=res.n_coefficients, stage_dims=res.stage_dims,
                stage_gaps=res.stage_gaps)
    with _timed(rep, "killing"):
        ck = spinor.solve_conformal_killing(2)
        rep.add("killing", "conformal_killing_degree2", PASS if ck.dimension == 15 else FAIL,
                dimension=ck.dimension, expected=15)
        ks = spinor.solve_killing_spinors(0, 0, 1)
        rep.add("killing", "killing_spinor_type_0_0", PASS if ks.complex_dim == 1 else FAIL,
                dimension=ks.complex_dim, expected=1)
    return rep


def cmd_killing_solve(args) -> Report:
    rep = Report("killing solve", _config(args))
    degree = 2 if args.degree is None else args.degree
    with _timed(rep, "killing"):
        if args.r is None and args.s is None:
            sol = spinor.solve_conformal_killing(degree)
            rep.add("killing", "conformal_killing_vectors", MEASURED, dimension=sol.dimension,
                    max_degree=degree)
        else:
            r, s = args.r or 0, args.s or 0
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always", spinor.DegreeTooLow)
                sol = spinor.solve_killing_spinors(r, s, degree)
            rep.add("killing", f"killing_spinors_type_{r}_{s}", MEASURED, complex_dim=sol.complex_dim,
                    real_dim=sol.real_dim, max_degree=degree,
                    warnings=[str(w.message) for w in caught])
    return rep


# ---------------------------------------------------------------- argument parsing

def _common(p: argparse.ArgumentParser, algebra: bool = True):
    if algebra:
        src = p.add_mutually_exclusive_group()
        src.add_argument("--builtin", metavar="NAME", choices=sorted(liealg.BUILTINS),
                         help="built-in algebra (default su2)")
        src.add_argument("--algebra", metavar="FILE", help="JSON file with structure constants")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples", type=int, default=None)
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--out", metavar="FILE", help="write the JSON report here")
    p.add_argument("--jobs", type=int, default=1, help="worker threads for per-sample work")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ymsym", description=__doc__.splitlines()[0])
    groups = parser.add_subparsers(dest="group", required=True)

    actions: dict[str, argparse._SubParsersAction] = {}

    def leaf(group: str, action: str, func, helptext: str, algebra: bool = True):
        if group not in actions:
            actions[group] = groups.add_parser(group).add_subparsers(dest="action", required=True)
        p = actions[group].add_parser(action, help=helptext)
        _common(p, algebra)
        p.set_defaults(func=func)
        return p

    leaf("algebra", "analyze", cmd_algebra_analyze, "Killing form, ideals, ad-centralizer")
    p = leaf("symmetry", "verify", cmd_symmetry_verify, "evaluate the determining equations")
    p.add_argument("--spec", metavar="FILE", help="JSON symmetry spec (file or inline object)")
    p = leaf("identity", "suite", cmd_identity_suite, "jet-space identity checks")
    p.add_argument("--depth", type=int, default=None, help="prolongation depth of on-shell samples")
    p = groups.add_parser("classify", help="first-order ansatz classifier")
    _common(p)
    p.add_argument("--degree", type=int, default=None)
    p.set_defaults(func=cmd_classify)
    p = leaf("killing", "solve", cmd_killing_solve, "conformal Killing vectors or Killing spinors",
             algebra=False)
    p.add_argument("--degree", type=int, default=None)
    p.add_argument("--r", type=int, default=None)
    p.add_argument("--s", type=int, default=None)
    return parser


def _summary(rep: Report) -> str:
    lines = []
    for c in rep.checks:
        vals = c["values"]
        shown = {k: vals[k] for k in ("residual", "max_residual", "nullity", "expected", "gap", "dimension",
                                      "complex_dim", "real_dim", "value", "spread", "difference")
                 if k in vals}
        text = " ".join(f"{k}={v:.3g}" if isinstance(v, float) else f"{k}={v}" for k, v in shown.items())
        lines.append(f"{c['verdict']:<13} {c['section']}/{c['name']} {text}".rstrip())
    return "\n".join(lines)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    if args.jobs < 1:
        print("error: --jobs must be positive", file=sys.stderr)
        return EXIT_USAGE
    try:
        rep = args.func(args)
    except INPUT_ERRORS as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    print(_summary(rep))
    if args.out:
        Path(args.out).write_text(rep.to_json() + "\n")
    return EXIT_OK if rep.passed else EXIT_FAIL


if __name__ == "__main__":
    raise SystemExit(main())
