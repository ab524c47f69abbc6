"""Monte-Carlo harnesses: recovery phase grids, noise sweeps, lemma frequencies.

Every trial draws its randomness from ``derive_seed(base, cell, trial)``, so
results do not depend on execution order and a grid can be spread over a
process pool. Per-trial output rows follow :data:`robustrec.io.REPORT_COLUMNS`.
``runtime_ms`` is only filled when timing is requested; leaving it empty
keeps the CSV byte-identical between runs.
"""
from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .certificates import (
    SpectralMode,
    rip_constant_exact,
    sampling_deviation,
    spectral_check_rows,
    stability_constant,
)
from .certificates.rip import PROOF_THRESHOLD
from .cs_solver import CsSolveOptions, lambda_gaussian, lambda_general, solve_cs
from .errors import ConfigError, InvalidArgument, NumericalError
from .mc_solver import McSolveOptions, lambda_mc, solve_mc
from .models import (
    EnsembleKind,
    assemble_cs_instance,
    gen_balanced_rademacher,
    gen_gaussian_ensemble,
    gen_mc_lowrank,
    gen_row_ensemble,
    gen_sparse_signal,
    make_cs_instance,
    make_mc_instance,
    random_sign_matrix,
    random_support,
    sample_model31,
    sample_model32,
)

__all__ = [
    "derive_seed",
    "resolve_lambda",
    "PhaseCell",
    "PhaseGrid",
    "StabilityReport",
    "LemmaReport",
    "EquivalenceReport",
    "run_phase_cs",
    "run_phase_mc",
    "run_stability_cs",
    "run_lemma_frequencies",
    "run_model_equivalence",
    "STABILITY_COLUMNS",
    "LEMMA_SUMMARY_COLUMNS",
    "EQUIVALENCE_COLUMNS",
    "SUMMARY_COLUMNS",
]

STABILITY_COLUMNS = ("epsilon", "error", "ratio", "k_bound", "iterations", "status")
SUMMARY_COLUMNS = ("cell", "trials", "successes", "success_rate", "median_error", "median_iterations", "errata")
LEMMA_SUMMARY_COLUMNS = ("check", "params", "trials", "passes", "pass_rate")
EQUIVALENCE_COLUMNS = ("trial", "category", "count_independent", "count_auxiliary", "z")


def derive_seed(base, *keys):
    """A 32-bit seed determined by ``base`` and the integer ``keys``."""
    return int(np.random.SeedSequence([int(base), *map(int, keys)]).generate_state(1)[0])


def resolve_lambda(rule, m=None, n=None, rho=None):
    """Turn a rule name (``gaussian``, ``general``, ``mc``) or a number into a weight."""
    if isinstance(rule, str):
        if rule == "gaussian":
            return lambda_gaussian(m, n)
        if rule == "general":
            return lambda_general(n)
        if rule == "mc":
            if rho is None:
                raise InvalidArgument("the mc rule needs a sampling rate")
            return lambda_mc(rho, n)
        raise InvalidArgument(f"unknown lambda rule {rule!r}")
    lam = float(rule)
    if not lam > 0:
        raise InvalidArgument("lambda must be positive")
    return lam


def _pool_map(fn, tasks, jobs):
    if jobs <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))


def _cell_label(names, coords):
    return ";".join(f"{k}={_coord(v)}" for k, v in zip(names, coords))


def _coord(v):
    if isinstance(v, float):
        return "%.12g" % v
    return str(v)


# --------------------------------------------------------------------------
# phase grids


@dataclass
class PhaseCell:
    coords: tuple
    trials: int
    successes: int
    median_error: float
    median_iterations: float
    errata: int = 0

    @property
    def success_rate(self):
        return self.successes / self.trials


@dataclass
class PhaseGrid:
    """Per-cell aggregates plus the per-trial rows they came from."""

    experiment: str
    axes: dict
    trials: int
    tol: float
    seed: int
    cells: list
    rows: list = field(repr=False)

    def cell(self, *coords):
        for c in self.cells:
            if tuple(c.coords) == tuple(coords):
                return c
        raise KeyError(coords)

    def success_rate(self, *coords):
        return self.cell(*coords).success_rate

    def summary_rows(self):
        names = list(self.axes)
        return [
            {
                "cell": _cell_label(names, c.coords),
                "trials": c.trials,
                "successes": c.successes,
                "success_rate": float(c.success_rate),
                "median_error": c.median_error,
                "median_iterations": c.median_iterations,
                "errata": c.errata,
            }
            for c in self.cells
        ]


def _aggregate(experiment, cfg, rows):
    names = list(cfg.grid)
    cells = []
    for idx, coords in enumerate(cfg.cells()):
        mine = [r for r in rows if r["_cell"] == idx]
        errs = [r["value"] for r in mine if r["value"] is not None]
        iters = [r["iterations"] for r in mine if r["iterations"] is not None]
        cells.append(
            PhaseCell(
                coords=tuple(coords),
                trials=len(mine),
                successes=sum(bool(r["success"]) for r in mine),
                median_error=float(np.median(errs)) if errs else math.nan,
                median_iterations=float(np.median(iters)) if iters else math.nan,
                errata=sum(1 for r in mine if r["errata"]),
            )
        )
    for r in rows:
        del r["_cell"]
    return PhaseGrid(experiment, dict(cfg.grid), cfg.trials, cfg.tol, cfg.seed, cells, rows)


def _timed(fn, timing):
    t0 = time.perf_counter()
    out = fn()
    return out, (round((time.perf_counter() - t0) * 1000.0, 3) if timing else None)


def _row(experiment, label, idx, trial, seed, timing_ms):
    return {
        "experiment": experiment,
        "cell": label,
        "trial": trial,
        "seed": seed,
        "success": False,
        "value": None,
        "iterations": None,
        "runtime_ms": timing_ms,
        "errata": "",
        "_cell": idx,
    }


def _cs_options(cfg_solver, lam, epsilon):
    kw = {"lam": lam, "epsilon": epsilon}
    if "max_iters" in cfg_solver:
        kw["max_iters"] = int(cfg_solver["max_iters"])
    if "tol" in cfg_solver:
        kw["tol_primal"] = kw["tol_dual"] = float(cfg_solver["tol"])
    if "penalty" in cfg_solver:
        kw["penalty"] = float(cfg_solver["penalty"])
    return CsSolveOptions(**kw)


def _mc_options(cfg_solver, lam):
    kw = {"lam": lam}
    if "max_iters" in cfg_solver:
        kw["max_iters"] = int(cfg_solver["max_iters"])
    if "tol" in cfg_solver:
        kw["tol"] = float(cfg_solver["tol"])
    if "penalty" in cfg_solver:
        kw["penalty"] = float(cfg_solver["penalty"])
    return McSolveOptions(**kw)


def cs_relative_error(x_hat, f_hat, x, f):
    """``(||x_hat - x|| + ||f_hat - f||) / (||x|| + ||f||)``; absolute when the truth is zero."""
    num = np.linalg.norm(x_hat - x) + np.linalg.norm(f_hat - f)
    den = np.linalg.norm(x) + np.linalg.norm(f)
    return float(num / den) if den > 0 else float(num)


def _cs_trial(task):
    idx, label, trial, seed, model, k, b, lam_rule, tol, solver, timing = task
    m, n = int(model["m"]), int(model["n"])
    eps = float(model.get("epsilon", 0.0))

    def work():
        inst = make_cs_instance(model["ensemble"], m, n, k, b, seed, epsilon=eps)
        lam = resolve_lambda(lam_rule, m=m, n=n)
        return inst, solve_cs(inst.A, inst.y, _cs_options(solver, lam, eps))

    try:
        (inst, res), ms = _timed(work, timing)
    except NumericalError as exc:
        row = _row("phase-cs", label, idx, trial, seed, None)
        row["errata"] = f"numerical-error: {exc}"
        return row
    row = _row("phase-cs", label, idx, trial, seed, ms)
    err = cs_relative_error(res.x_hat, res.f_hat, inst.x_true, inst.f_true)
    row.update(success=err <= tol, value=err, iterations=res.iters)
    if not res.converged:
        row["errata"] = "max-iters"
    return row


def run_phase_cs(cfg, jobs=1, timing=False):
    """Success grid over (sparsity, corruption) counts for the l1/l1 program."""
    if cfg.kind != "phase-cs":
        raise ConfigError(f"expected a phase-cs config, got {cfg.kind!r}")
    names = list(cfg.grid)
    tasks = []
    for idx, (k, b) in enumerate(cfg.cells()):
        label = _cell_label(names, (k, b))
        for t in range(cfg.trials):
            tasks.append((idx, label, t, derive_seed(cfg.seed, idx, t), cfg.model, int(k), int(b), cfg.lam, cfg.tol, cfg.solver, timing))
    return _aggregate("phase-cs", cfg, _pool_map(_cs_trial, tasks, jobs))


def mc_relative_error(L_hat, L):
    """``||L_hat - L||_F / ||L||_F``; absolute when ``L = 0``."""
    den = np.linalg.norm(L)
    num = np.linalg.norm(L_hat - L)
    return float(num / den) if den > 0 else float(num)


def _mc_trial(task):
    idx, label, trial, seed, model, r, rho, s, lam_rule, tol, solver, timing = task
    n = int(model["n"])

    def work():
        inst = make_mc_instance(
            n,
            r,
            rho,
            s,
            seed,
            model=str(model.get("model", "3.1")),
            magnitudes=model.get("magnitudes", "unit"),
            spectrum=model.get("spectrum", "unit"),
        )
        lam = resolve_lambda(lam_rule, n=n, rho=rho)
        return inst, solve_mc(inst.M_obs, inst.O, _mc_options(solver, lam))

    try:
        (inst, res), ms = _timed(work, timing)
    except NumericalError as exc:
        row = _row("phase-mc", label, idx, trial, seed, None)
        row["errata"] = f"numerical-error: {exc}"
        return row
    row = _row("phase-mc", label, idx, trial, seed, ms)
    err = mc_relative_error(res.L_hat, inst.L)
    row.update(success=err <= tol, value=err, iterations=res.iters)
    if not res.converged:
        row["errata"] = "max-iters"
    return row


def run_phase_mc(cfg, jobs=1, timing=False):
    """Success grid over (rank, rho, s) for the nuclear-norm + l1 program."""
    if cfg.kind != "phase-mc":
        raise ConfigError(f"expected a phase-mc config, got {cfg.kind!r}")
    names = list(cfg.grid)
    tasks = []
    for idx, (r, rho, s) in enumerate(cfg.cells()):
        label = _cell_label(names, (r, rho, s))
        for t in range(cfg.trials):
            tasks.append(
                (idx, label, t, derive_seed(cfg.seed, idx, t), cfg.model, int(r), float(rho), float(s), cfg.lam, cfg.tol, cfg.solver, timing)
            )
    return _aggregate("phase-mc", cfg, _pool_map(_mc_trial, tasks, jobs))


# --------------------------------------------------------------------------
# noise sweep


@dataclass
class StabilityReport:
    """One row per noise level; ``delta`` is set when the exact RIP constant was computed."""

    rows: list
    delta: float | None
    k_constant: float | None
    instance: object = field(repr=False)


def stability_instance(model, seed):
    """The fixed noiseless instance of a stability sweep.

    ``ensemble`` may be ``balanced`` for the deterministic design of
    :func:`robustrec.models.gen_balanced_rademacher`.
    """
    m, n = int(model["m"]), int(model["n"])
    k, b = int(model["sparsity"]), int(model["corruption"])
    if str(model["ensemble"]).lower() == "balanced":
        A = gen_balanced_rademacher(m, n)
        T = random_support(n, k, derive_seed(seed, 0, 1))
        B = random_support(m, b, derive_seed(seed, 0, 2))
        x = gen_sparse_signal(n, T, seed=derive_seed(seed, 0, 3))
        f = gen_sparse_signal(m, B, seed=derive_seed(seed, 0, 4))
        return assemble_cs_instance(A, x, f, np.zeros(m), 0.0)
    EnsembleKind.parse(model["ensemble"])
    return make_cs_instance(model["ensemble"], m, n, k, b, derive_seed(seed, 0, 0))


def _noise(m, eps, seed):
    if eps == 0:
        return np.zeros(m)
    g = np.random.default_rng(seed).standard_normal(m)
    return eps * g / np.linalg.norm(g)


def _stability_trial(task):
    k, eps, base, lam, solver, seed = task
    m = base.A.m
    w = _noise(m, eps, seed)
    inst = assemble_cs_instance(base.A, base.x_true, base.f_true, w, eps)
    res = solve_cs(inst.A, inst.y, _cs_options(solver, lam, eps))
    err = float(np.linalg.norm(res.x_hat - inst.x_true) + np.linalg.norm(res.f_hat - inst.f_true))
    return err, res.iters, res.status.value


def run_stability_cs(cfg, jobs=1):
    """Re-solve one instance under noise of norm exactly ``epsilon`` for each level.

    With ``exact_delta`` the RIP constant of order ``(2 sparsity, 2 corruption)``
    is enumerated and, when below 1/9, the bound ``K(delta) epsilon`` is reported.
    """
    if cfg.kind != "stability":
        raise ConfigError(f"expected a stability config, got {cfg.kind!r}")
    base = stability_instance(cfg.model, cfg.seed)
    m, n = base.A.m, base.A.n
    lam = resolve_lambda(cfg.lam, m=m, n=n)
    delta = kc = None
    if cfg.exact_delta:
        delta = rip_constant_exact(base.A, 2 * int(cfg.model["sparsity"]), 2 * int(cfg.model["corruption"])).delta
        if delta < PROOF_THRESHOLD:
            kc = stability_constant(delta)
    tasks = [(k, eps, base, lam, cfg.solver, derive_seed(cfg.seed, 1, k)) for k, eps in enumerate(cfg.epsilons)]
    results = _pool_map(_stability_trial, tasks, jobs)
    rows = []
    for eps, (err, iters, status) in zip(cfg.epsilons, results):
        rows.append(
            {
                "epsilon": float(eps),
                "error": err,
                "ratio": err / eps if eps > 0 else None,
                "k_bound": kc * eps if kc is not None else None,
                "iterations": iters,
                "status": status,
            }
        )
    return StabilityReport(rows=rows, delta=delta, k_constant=kc, instance=base)


# --------------------------------------------------------------------------
# lemma frequencies

_DEFAULT_THRESHOLDS = {
    "rows-gram": 0.5,
    "rows-crossvec": 1.0 / 20.0,
    "rows-crosscol": 1.0,
    "sampling-contraction": 0.5,
}


@dataclass
class LemmaReport:
    rows: list = field(repr=False)
    summary: list

    def pass_rate(self, check):
        for s in self.summary:
            if s["check"] == check:
                return s["pass_rate"]
        raise KeyError(check)


def _row_matrix(ensemble, m, n, seed):
    kind = EnsembleKind.parse(ensemble)
    if kind is EnsembleKind.GAUSSIAN:
        return gen_gaussian_ensemble(m, n, seed)
    return gen_row_ensemble(m, n, kind, seed)


def _lemma_trial(task):
    """Return ``(value, passed)`` for one draw of one check."""
    chk, seed = task
    name = chk["name"]
    rng = np.random.default_rng(seed)
    if name == "gaussian-norm":
        m, n, t = int(chk["m"]), int(chk["n"]), float(chk["t"])
        value = float(np.linalg.norm(rng.standard_normal((m, n)), 2))
        return value, value <= math.sqrt(m) + math.sqrt(n) + t
    if name == "sampling-contraction":
        n, r, rho0 = int(chk["n"]), int(chk["r"]), float(chk["rho0"])
        U, _, V, _ = gen_mc_lowrank(n, r, derive_seed(seed, 0))
        mask = np.random.default_rng(derive_seed(seed, 1)).random((n, n)) < rho0
        value = sampling_deviation(U, V, mask, rho0, seed=derive_seed(seed, 2))
        return value, value <= float(chk.get("threshold", 0.5))

    m, n, s = int(chk["m"]), int(chk["n"]), int(chk["s"])
    T = random_support(n, s, derive_seed(seed, 1))
    if name == "restricted-isometry":
        A = gen_gaussian_ensemble(m, n, derive_seed(seed, 0))
        value = spectral_check_rows(A, T, SpectralMode.GRAM)
        return value, value <= float(chk["delta"])
    A = _row_matrix(chk.get("ensemble", "rademacher"), m, n, derive_seed(seed, 0))
    threshold = float(chk.get("threshold", _DEFAULT_THRESHOLDS[name]))
    if name == "rows-gram":
        value = spectral_check_rows(A, T, SpectralMode.GRAM)
    elif name == "rows-crossvec":
        v = np.random.default_rng(derive_seed(seed, 2)).standard_normal(s)
        value = spectral_check_rows(A, T, SpectralMode.CROSS_VEC, v)
    elif name == "rows-crosscol":
        value = spectral_check_rows(A, T, SpectralMode.CROSS_COL)
    else:
        raise InvalidArgument(f"unknown check {name!r}")
    return value, value <= threshold


def _params_label(chk):
    return ";".join(f"{k}={_coord(v)}" for k, v in sorted(chk.items()) if k not in ("name", "trials"))


def run_lemma_frequencies(cfg, jobs=1):
    """Empirical pass rates of the concentration inequalities listed in ``cfg.checks``.

    Check names and parameters:

    ``gaussian-norm`` (m, n, t)
        standard normal ``B`` has ``||B|| <= sqrt(m) + sqrt(n) + t``.
    ``restricted-isometry`` (m, n, s, delta)
        Gaussian ensemble, random ``|T| = s``: ``||A_T^T A_T - I|| <= delta``.
    ``rows-gram`` / ``rows-crossvec`` / ``rows-crosscol`` (m, n, s[, ensemble, threshold])
        the three :func:`spectral_check_rows` modes on a bounded-row ensemble.
    ``sampling-contraction`` (n, r, rho0[, threshold])
        ``||P_T - P_T P_Omega P_T / rho0|| <= threshold`` for ``Omega ~ Ber(rho0)``.
    """
    if cfg.kind != "lemmas":
        raise ConfigError(f"expected a lemmas config, got {cfg.kind!r}")
    tasks, meta = [], []
    for ci, chk in enumerate(cfg.checks):
        trials = int(chk.get("trials", cfg.trials))
        for t in range(trials):
            seed = derive_seed(cfg.seed, ci, t)
            tasks.append((chk, seed))
            meta.append((ci, t, seed))
    results = _pool_map(_lemma_trial, tasks, jobs)
    rows, summary = [], []
    for (ci, t, seed), (value, ok) in zip(meta, results):
        chk = cfg.checks[ci]
        rows.append(
            {
                "experiment": chk["name"],
                "cell": _params_label(chk),
                "trial": t,
                "seed": seed,
                "success": bool(ok),
                "value": float(value),
                "iterations": None,
                "runtime_ms": None,
                "errata": "",
            }
        )
    for ci, chk in enumerate(cfg.checks):
        mine = [r for (c, _, _), r in zip(meta, rows) if c == ci]
        passes = sum(r["success"] for r in mine)
        summary.append(
            {
                "check": chk["name"],
                "params": _params_label(chk),
                "trials": len(mine),
                "passes": passes,
                "pass_rate": passes / len(mine),
            }
        )
    return LemmaReport(rows=rows, summary=summary)


# --------------------------------------------------------------------------
# sampler equivalence

_CATEGORIES = (("unobserved", False, False), ("clean", True, False), ("corrupted", True, True))


@dataclass
class EquivalenceReport:
    """Per-repetition two-proportion z-scores for the three entry categories.

    Category ``unobserved`` is ``(not in O)``, ``clean`` is ``O minus Omega``
    and ``corrupted`` is ``Omega``.
    """

    rows: list
    omega_rate_independent: float
    omega_rate_auxiliary: float

    @property
    def max_abs_z(self):
        return max(abs(r["z"]) for r in self.rows)

    @property
    def passed(self):
        return self.max_abs_z <= 4.0


def _two_proportion_z(c1, c2, total):
    p = (c1 + c2) / (2.0 * total)
    if p <= 0 or p >= 1:
        return 0.0
    return (c1 - c2) / total / math.sqrt(p * (1 - p) * 2.0 / total)


def run_model_equivalence(n, rho, s, trials, seed):
    """Compare the independent sampler with the auxiliary-set sampler.

    Each repetition draws one ``n x n`` mask pair from each sampler, with a
    shared sign matrix ``K``, and z-tests the category frequencies.
    """
    if trials < 1:
        raise InvalidArgument("trials must be at least 1")
    rows = []
    om_a = om_b = 0
    total = n * n
    for t in range(trials):
        K = random_sign_matrix(n, derive_seed(seed, t, 0))
        O1, Om1, _, _ = sample_model31(n, rho, s, K, derive_seed(seed, t, 1))
        _, _, _, Om2, O2, _ = sample_model32(n, rho, s, K, derive_seed(seed, t, 2))
        om_a += int(Om1.sum())
        om_b += int(Om2.sum())
        for name, in_o, in_om in _CATEGORIES:
            c1 = int(np.count_nonzero((O1 == in_o) & (Om1 == in_om)))
            c2 = int(np.count_nonzero((O2 == in_o) & (Om2 == in_om)))
            rows.append(
                {
                    "trial": t,
                    "category": name,
                    "count_independent": c1,
                    "count_auxiliary": c2,
                    "z": _two_proportion_z(c1, c2, total),
                }
            )
    return EquivalenceReport(rows=rows, omega_rate_independent=om_a / (trials * total), omega_rate_auxiliary=om_b / (trials * total))
