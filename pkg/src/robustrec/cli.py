"""Command-line interface.

Exit status is 0 on success, 2 on a usage error and 1 when the command
fails at run time (bad input file, invalid parameters, numerical failure).
"""
from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import io
from .certificates import (
    build_cs_certificate,
    build_mc_certificate,
    rip_constant_exact,
    verify_cs_inexact_duality,
    verify_mc_duality,
)
from .config import load_config
from .cs_solver import CsSolveOptions, solve_cs
from .errors import ConfigError, InvalidArgument, NumericalError, ParseError
from .experiments import (
    EQUIVALENCE_COLUMNS,
    LEMMA_SUMMARY_COLUMNS,
    STABILITY_COLUMNS,
    SUMMARY_COLUMNS,
    resolve_lambda,
    run_lemma_frequencies,
    run_model_equivalence,
    run_phase_cs,
    run_phase_mc,
    run_stability_cs,
)
from .mc_solver import McSolveOptions, estimate_rho, solve_mc
from .models import make_cs_instance, make_mc_instance

__all__ = ["build_parser", "main"]

HELP_WIDTH = 80


def _formatter(prog):
    return argparse.HelpFormatter(prog, width=HELP_WIDTH, max_help_position=30)


def _lambda_arg(text):
    try:
        value = float(text)
    except ValueError:
        if text in ("gaussian", "general", "mc"):
            return text
        raise argparse.ArgumentTypeError(f"expected gaussian, general, mc or a number, got {text!r}") from None
    if not value > 0:
        raise argparse.ArgumentTypeError("lambda must be positive")
    return value


def _nonneg_int(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 0:
        raise argparse.ArgumentTypeError("expected a non-negative integer")
    return value


def _pos_int(text):
    value = _nonneg_int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("expected a positive integer")
    return value


def build_parser():
    p = argparse.ArgumentParser(
        prog="robustrec",
        description="Sparse and low-rank recovery from grossly corrupted measurements.",
        formatter_class=_formatter,
    )
    sub = p.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    def add(name, help_text):
        return sub.add_parser(name, help=help_text, description=help_text, formatter_class=_formatter)

    g = add("gen", "draw a random instance and write it as Matrix Market files")
    g.add_argument("--problem", choices=("cs", "mc"), required=True, help="instance family")
    g.add_argument("--seed", type=_nonneg_int, required=True, help="random seed")
    g.add_argument("--out-dir", required=True, help="directory for the output files")
    g.add_argument("--ensemble", default="gaussian", help="cs: gaussian, rademacher or dct")
    g.add_argument("--m", type=_pos_int, help="cs: number of measurements")
    g.add_argument("--n", type=_pos_int, help="signal length (cs) or matrix size (mc)")
    g.add_argument("--sparsity", type=_nonneg_int, default=0, help="cs: nonzeros in x")
    g.add_argument("--corruption", type=_nonneg_int, default=0, help="cs: nonzeros in f")
    g.add_argument("--eps", type=float, default=0.0, help="cs: noise norm")
    g.add_argument("--r", type=_nonneg_int, help="mc: rank")
    g.add_argument("--rho", type=float, help="mc: sampling rate")
    g.add_argument("--s", type=float, default=0.0, help="mc: corruption rate")
    g.add_argument("--model", choices=("3.1", "3.2"), default="3.1", help="mc: mask sampler")

    s = add("solve-cs", "recover (x, f) from y = A x + f + w")
    s.add_argument("--A", required=True, help="sensing matrix (.mtx)")
    s.add_argument("--y", required=True, help="measurements (.mtx, one column)")
    s.add_argument("--lambda-rule", type=_lambda_arg, default="gaussian", help="gaussian, general or a number")
    s.add_argument("--eps", type=float, default=0.0, help="noise bound")
    s.add_argument("--max-iters", type=_pos_int, default=50_000, help="iteration cap")
    s.add_argument("--tol", type=float, default=1e-8, help="stopping tolerance")
    s.add_argument("--out", required=True, help="output .mtx holding [x; f]")

    s = add("solve-mc", "recover (L, S) from M_obs = P_O(L) + S")
    s.add_argument("--M", required=True, help="observed matrix (.mtx), zero off the mask")
    s.add_argument("--mask", required=True, help="observed set (.mtx pattern)")
    s.add_argument("--lambda-rule", type=_lambda_arg, default="mc", help="mc or a number")
    s.add_argument("--max-iters", type=_pos_int, default=10_000, help="iteration cap")
    s.add_argument("--tol", type=float, default=1e-7, help="stopping tolerance")
    s.add_argument("--out-L", required=True, help="output .mtx for L")
    s.add_argument("--out-S", required=True, help="output .mtx for S")

    s = add("rip", "exact RIP constant of [A, I] by enumeration")
    s.add_argument("--A", required=True, help="sensing matrix (.mtx)")
    s.add_argument("--s1", type=_nonneg_int, required=True, help="signal support size")
    s.add_argument("--s2", type=_nonneg_int, required=True, help="corruption support size")

    s = add("certify-cs", "build and verify a golfing dual vector for a sparse instance")
    s.add_argument("--A", required=True, help="sensing matrix (.mtx)")
    s.add_argument("--x", required=True, help="true signal (.mtx); its support and signs are used")
    s.add_argument("--f", required=True, help="true corruption (.mtx)")
    s.add_argument("--lambda-rule", type=_lambda_arg, default="general", help="gaussian, general or a number")
    s.add_argument("--seed", type=_nonneg_int, required=True, help="block partition seed")
    s.add_argument("--out", help="optional .mtx for the dual vector q")

    s = add("certify-mc", "build and verify a golfing dual certificate for a random instance")
    s.add_argument("--n", type=_pos_int, required=True, help="matrix size")
    s.add_argument("--r", type=_nonneg_int, required=True, help="rank")
    s.add_argument("--rho", type=float, required=True, help="sampling rate")
    s.add_argument("--s", type=float, required=True, help="corruption rate")
    s.add_argument("--lambda-rule", type=_lambda_arg, default="mc", help="mc or a number")
    s.add_argument("--seed", type=_nonneg_int, required=True, help="random seed")
    s.add_argument("--out", help="optional .mtx for the certificate Y")

    for name, help_text in (
        ("phase-cs", "success grid for sparse recovery"),
        ("phase-mc", "success grid for matrix recovery"),
        ("stability", "error versus noise level on a fixed instance"),
        ("lemmas", "empirical pass rates of concentration bounds"),
    ):
        s = add(name, help_text)
        s.add_argument("--config", required=True, help="TOML experiment config")
        s.add_argument("--seed", type=_nonneg_int, help="override the config seed")
        s.add_argument("--out", help="output CSV (default: config output, else stdout)")
        s.add_argument("--summary", help="optional CSV of per-cell aggregates")
        s.add_argument("--jobs", type=_pos_int, default=1, help="worker processes")
        if name in ("phase-cs", "phase-mc"):
            s.add_argument("--timing", action="store_true", help="record runtime_ms (breaks byte reproducibility)")

    s = add("model-equiv", "compare the two corrupted-sampling models")
    s.add_argument("--n", type=_pos_int, required=True, help="matrix size")
    s.add_argument("--rho", type=float, required=True, help="sampling rate")
    s.add_argument("--s", type=float, required=True, help="corruption rate")
    s.add_argument("--trials", type=_pos_int, default=10, help="repetitions")
    s.add_argument("--seed", type=_nonneg_int, required=True, help="random seed")
    s.add_argument("--out", help="output CSV (default: stdout)")
    return p


def full_help(parser=None):
    """Top-level help followed by every subcommand's help."""
    parser = parser or build_parser()
    parts = [parser.format_help()]
    sub = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    for name, sp in sub.choices.items():
        parts.append(sp.format_help())
    return "\n".join(parts)


def _need(args, *names):
    for name in names:
        if getattr(args, name) is None:
            raise InvalidArgument(f"--{name.replace('_', '-')} is required for --problem {args.problem}")


def _cmd_gen(args):
    os.makedirs(args.out_dir, exist_ok=True)
    path = lambda name: os.path.join(args.out_dir, name)  # noqa: E731
    if args.problem == "cs":
        _need(args, "m", "n")
        inst = make_cs_instance(args.ensemble, args.m, args.n, args.sparsity, args.corruption, args.seed, epsilon=args.eps)
        io.write_matrix(path("A.mtx"), inst.A.data)
        io.write_matrix(path("y.mtx"), inst.y)
        io.write_matrix(path("x.mtx"), inst.x_true)
        io.write_matrix(path("f.mtx"), inst.f_true)
        print(f"wrote A.mtx y.mtx x.mtx f.mtx to {args.out_dir}")
    else:
        _need(args, "n", "r", "rho")
        inst = make_mc_instance(args.n, args.r, args.rho, args.s, args.seed, model=args.model)
        io.write_matrix(path("M.mtx"), inst.M_obs)
        io.write_mask(path("mask.mtx"), inst.O)
        io.write_matrix(path("L.mtx"), inst.L)
        io.write_matrix(path("S.mtx"), inst.S)
        print(f"wrote M.mtx mask.mtx L.mtx S.mtx to {args.out_dir}")
        print(f"incoherence {inst.mu:.6g}")
    return 0


def _cmd_solve_cs(args):
    A = io.read_matrix(args.A)
    y = io.read_matrix(args.y).reshape(-1)
    m, n = A.shape
    lam = resolve_lambda(args.lambda_rule, m=m, n=n)
    opts = CsSolveOptions(lam=lam, epsilon=args.eps, max_iters=args.max_iters, tol_primal=args.tol, tol_dual=args.tol)
    res = solve_cs(A, y, opts)
    io.write_matrix(args.out, np.concatenate([res.x_hat, res.f_hat]))
    print(f"lambda {lam:.9g}")
    print(f"status {res.status.value}")
    print(f"iterations {res.iters}")
    print(f"objective {res.objective:.12g}")
    print(f"primal_residual {res.primal_residual:.6e}")
    print(f"dual_residual {res.dual_residual:.6e}")
    print(f"constraint_residual {res.constraint_residual:.6e}")
    return 0


def _cmd_solve_mc(args):
    M = io.read_matrix(args.M)
    O = io.read_mask(args.mask)
    n = M.shape[0]
    lam = resolve_lambda(args.lambda_rule, n=n, rho=estimate_rho(O) if args.lambda_rule == "mc" else None)
    res = solve_mc(M, O, McSolveOptions(lam=lam, max_iters=args.max_iters, tol=args.tol))
    io.write_matrix(args.out_L, res.L_hat)
    io.write_matrix(args.out_S, res.S_hat)
    print(f"lambda {lam:.9g}")
    print(f"status {res.status.value}")
    print(f"iterations {res.iters}")
    print(f"objective {res.objective:.12g}")
    print(f"residual {res.residual:.6e}")
    return 0


def _cmd_rip(args):
    rep = rip_constant_exact(io.read_matrix(args.A), args.s1, args.s2)
    T, V = rep.argmax_supports
    print(f"delta {rep.delta:.12g}")
    print(f"subsets {rep.n_subsets_enumerated}")
    print("argmax_T " + " ".join(str(i) for i in T))
    print("argmax_V " + " ".join(str(i) for i in V))
    return 0


def _print_margins(margins):
    for mg in margins:
        print(f"{mg.name} {mg.achieved:.6e} <= {mg.required:.6e} {'ok' if mg.ok else 'FAIL'}")


def _cmd_certify_cs(args):
    A = io.read_matrix(args.A)
    x = io.read_matrix(args.x).reshape(-1)
    f = io.read_matrix(args.f).reshape(-1)
    m, n = A.shape
    if x.size != n or f.size != m:
        raise InvalidArgument(f"x must have length {n} and f length {m}")
    T, B = np.flatnonzero(x), np.flatnonzero(f)
    lam = resolve_lambda(args.lambda_rule, m=m, n=n)
    cert = build_cs_certificate(A, T, B, np.sign(x[T]), np.sign(f[B]), lam, args.seed)
    rep = verify_cs_inexact_duality(cert, A, T, B, np.sign(x[T]), np.sign(f[B]), lam)
    print(f"lambda {lam:.9g}")
    print("partition " + " ".join(str(k) for k in cert.partition))
    _print_margins(rep.margins)
    print(f"clean_gram_deviation {rep.gram_deviation:.6e}")
    print(f"clean_cross_column {rep.cross_column:.6e}")
    print(f"telescoping_residual {cert.telescoping_residual:.3e}")
    print(f"certificate {'found' if rep.guarantee else 'not found'}")
    if args.out:
        io.write_matrix(args.out, cert.q)
    return 0


def _cmd_certify_mc(args):
    inst = make_mc_instance(args.n, args.r, args.rho, args.s, args.seed, model="3.2")
    lam = resolve_lambda(args.lambda_rule, n=args.n, rho=args.rho)
    cert = build_mc_certificate(inst, lam, args.seed)
    rep = verify_mc_duality(cert.Y, inst, lam)
    print(f"lambda {lam:.9g}")
    print(f"blocks {len(cert.q_sequence)} q1 {cert.q_sequence[0]:.6g} q {cert.q_sequence[-1]:.6g}")
    _print_margins(cert.margins)
    print(f"max_step_ratio {cert.step_ratios.max():.6g}")
    print(f"isometry_deviation {rep.isometry_deviation:.6g}")
    print(f"sampled_norm {rep.sampled_norm:.6g}")
    print(f"telescoping_residual {cert.telescoping_residual:.3e}")
    print(f"certificate {'found' if cert.satisfied and rep.assumptions_ok else 'not found'}")
    if args.out:
        io.write_matrix(args.out, cert.Y)
    return 0


def _write_csv(path, rows, columns):
    if path:
        io.write_report(path, rows, columns)
    else:
        io.write_report(sys.stdout, rows, columns)


def _load(args, kind):
    cfg = load_config(args.config)
    if cfg.kind != kind:
        raise ConfigError(f"config kind is {cfg.kind!r}, expected {kind!r}")
    if args.seed is not None:
        cfg.seed = args.seed
    return cfg


def _cmd_phase(args, kind):
    cfg = _load(args, kind)
    runner = run_phase_cs if kind == "phase-cs" else run_phase_mc
    grid = runner(cfg, jobs=args.jobs, timing=args.timing)
    _write_csv(args.out or cfg.output, grid.rows, io.REPORT_COLUMNS)
    if args.summary:
        io.write_report(args.summary, grid.summary_rows(), SUMMARY_COLUMNS)
    if args.out or cfg.output:
        for row in grid.summary_rows():
            print(f"{row['cell']} success {row['successes']}/{row['trials']}")
    return 0


def _cmd_stability(args):
    cfg = _load(args, "stability")
    rep = run_stability_cs(cfg, jobs=args.jobs)
    _write_csv(args.out or cfg.output, rep.rows, STABILITY_COLUMNS)
    if args.summary and rep.delta is not None:
        io.write_report(args.summary, [{"delta": rep.delta, "k_constant": rep.k_constant}], ("delta", "k_constant"))
    if args.out or cfg.output:
        if rep.delta is not None:
            print(f"delta {rep.delta:.9g}")
        for row in rep.rows:
            print(f"epsilon {row['epsilon']:.3g} error {row['error']:.6e}")
    return 0


def _cmd_lemmas(args):
    cfg = _load(args, "lemmas")
    rep = run_lemma_frequencies(cfg, jobs=args.jobs)
    _write_csv(args.out or cfg.output, rep.rows, io.REPORT_COLUMNS)
    if args.summary:
        io.write_report(args.summary, rep.summary, LEMMA_SUMMARY_COLUMNS)
    if args.out or cfg.output:
        for s in rep.summary:
            print(f"{s['check']} {s['params']} pass_rate {s['pass_rate']:.4f}")
    return 0


def _cmd_model_equiv(args):
    rep = run_model_equivalence(args.n, args.rho, args.s, args.trials, args.seed)
    _write_csv(args.out, rep.rows, EQUIVALENCE_COLUMNS)
    if args.out:
        print(f"max_abs_z {rep.max_abs_z:.6g}")
        print(f"result {'pass' if rep.passed else 'fail'}")
    return 0


_COMMANDS = {
    "gen": _cmd_gen,
    "solve-cs": _cmd_solve_cs,
    "solve-mc": _cmd_solve_mc,
    "rip": _cmd_rip,
    "certify-cs": _cmd_certify_cs,
    "certify-mc": _cmd_certify_mc,
    "phase-cs": lambda a: _cmd_phase(a, "phase-cs"),
    "phase-mc": lambda a: _cmd_phase(a, "phase-mc"),
    "stability": _cmd_stability,
    "lemmas": _cmd_lemmas,
    "model-equiv": _cmd_model_equiv,
}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    try:
        return _COMMANDS[args.command](args)
    except (InvalidArgument, ParseError, ConfigError, NumericalError, OSError) as exc:
        print(f"robustrec {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
