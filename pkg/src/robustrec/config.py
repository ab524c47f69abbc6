"""Experiment configuration documents (TOML).

A config is a TOML table with a ``kind`` plus the keys that kind needs::

    kind = "phase-cs"          # phase-cs | phase-mc | stability | lemmas
    seed = 7
    trials = 20                # per grid cell
    tol = 1e-4                 # success threshold on relative error
    lambda = "gaussian"        # gaussian | general | mc | a number
    output = "phase.csv"       # optional; the CLI can override it

    [model]                    # instance parameters, per kind
    [grid]                     # axis name -> list of values
    [solver]                   # optional solver overrides

See README for the keys each kind accepts. Unknown keys anywhere are errors.
"""
from __future__ import annotations

import sys
from dataclasses import dataclass, field

from .errors import ConfigError

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

__all__ = ["ExperimentConfig", "KINDS", "LAMBDA_RULES", "parse_config", "load_config"]

KINDS = ("phase-cs", "phase-mc", "stability", "lemmas")
LAMBDA_RULES = ("gaussian", "general", "mc")

_TOP = {"kind", "seed", "trials", "tol", "lambda", "output", "model", "grid", "solver", "epsilons", "exact_delta", "checks"}

_MODEL = {
    "phase-cs": ({"ensemble", "m", "n"}, {"epsilon"}),
    "phase-mc": ({"n"}, {"model", "magnitudes", "spectrum"}),
    "stability": ({"ensemble", "m", "n", "sparsity", "corruption"}, set()),
    "lemmas": (set(), set()),
}
_GRID = {
    "phase-cs": ("sparsity", "corruption"),
    "phase-mc": ("rank", "rho", "s"),
}
_SOLVER = {"max_iters", "tol", "penalty"}
_DEFAULT_LAMBDA = {"phase-cs": "gaussian", "phase-mc": "mc", "stability": "gaussian", "lemmas": "gaussian"}

CHECK_KEYS = {
    "gaussian-norm": ({"m", "n", "t"}, set()),
    "restricted-isometry": ({"m", "n", "s", "delta"}, set()),
    "rows-gram": ({"m", "n", "s"}, {"ensemble", "threshold"}),
    "rows-crossvec": ({"m", "n", "s"}, {"ensemble", "threshold"}),
    "rows-crosscol": ({"m", "n", "s"}, {"ensemble", "threshold"}),
    "sampling-contraction": ({"n", "r", "rho0"}, {"threshold"}),
}


@dataclass
class ExperimentConfig:
    """A validated experiment description.

    ``lam`` is a rule name from :data:`LAMBDA_RULES` or a positive number.
    ``grid`` maps axis names to value lists in a fixed axis order.
    ``checks`` is only used by the ``lemmas`` kind: a list of tables, each
    with a ``name`` from ``CHECK_KEYS`` and its parameters.
    """

    kind: str
    seed: int
    trials: int = 20
    tol: float = 1e-4
    lam: object = None
    output: str | None = None
    model: dict = field(default_factory=dict)
    grid: dict = field(default_factory=dict)
    solver: dict = field(default_factory=dict)
    epsilons: tuple = ()
    exact_delta: bool = False
    checks: tuple = ()

    def cells(self):
        """Grid cells as tuples of axis values, last axis fastest."""
        axes = list(self.grid.values())
        out = [()]
        for values in axes:
            out = [c + (v,) for c in out for v in values]
        return out


def _unknown(where, keys, allowed):
    extra = sorted(set(keys) - set(allowed))
    if extra:
        raise ConfigError(f"unknown key {extra[0]!r} in {where}")


def _missing(where, keys, required):
    for k in sorted(required):
        if k not in keys:
            raise ConfigError(f"missing required key {k!r} in {where}")


def _int(value, name, minimum=0):
    if isinstance(value, bool) or not isinstance(value, int) or value < minimum:
        raise ConfigError(f"{name} must be an integer >= {minimum}, got {value!r}")
    return value


def _number(value, name):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{name} must be a number, got {value!r}")
    return float(value)


def _lambda(value):
    if isinstance(value, str):
        if value not in LAMBDA_RULES:
            raise ConfigError(f"lambda must be one of {', '.join(LAMBDA_RULES)} or a number, got {value!r}")
        return value
    lam = _number(value, "lambda")
    if not lam > 0:
        raise ConfigError("lambda must be positive")
    return lam


def parse_config(doc):
    """Validate a parsed TOML document and return an :class:`ExperimentConfig`."""
    if not isinstance(doc, dict):
        raise ConfigError("config must be a table")
    _unknown("config", doc, _TOP)
    _missing("config", doc, {"kind", "seed"})
    kind = doc["kind"]
    if kind not in KINDS:
        raise ConfigError(f"kind must be one of {', '.join(KINDS)}, got {kind!r}")

    cfg = ExperimentConfig(kind=kind, seed=_int(doc["seed"], "seed"))
    cfg.trials = _int(doc.get("trials", 20), "trials", 1)
    cfg.tol = _number(doc.get("tol", 1e-4), "tol")
    cfg.lam = _lambda(doc.get("lambda", _DEFAULT_LAMBDA[kind]))
    if "output" in doc:
        if not isinstance(doc["output"], str):
            raise ConfigError("output must be a string path")
        cfg.output = doc["output"]

    model = dict(doc.get("model", {}))
    required, optional = _MODEL[kind]
    _unknown("[model]", model, required | optional)
    _missing("[model]", model, required)
    cfg.model = model

    solver = dict(doc.get("solver", {}))
    _unknown("[solver]", solver, _SOLVER)
    cfg.solver = solver

    grid = dict(doc.get("grid", {}))
    if kind in _GRID:
        axes = _GRID[kind]
        _unknown("[grid]", grid, axes)
        _missing("[grid]", grid, axes)
        for name in axes:
            values = grid[name]
            if not isinstance(values, list) or not values:
                raise ConfigError(f"grid axis {name!r} must be a nonempty list")
        cfg.grid = {name: list(grid[name]) for name in axes}
    elif grid:
        raise ConfigError(f"[grid] is not used by kind {kind!r}")

    if kind == "stability":
        _missing("config", doc, {"epsilons"})
        eps = doc["epsilons"]
        if not isinstance(eps, list) or not eps:
            raise ConfigError("epsilons must be a nonempty list")
        cfg.epsilons = tuple(_number(e, "epsilon") for e in eps)
        cfg.exact_delta = bool(doc.get("exact_delta", False))
    else:
        for key in ("epsilons", "exact_delta"):
            if key in doc:
                raise ConfigError(f"{key!r} is only used by kind 'stability'")

    if kind == "lemmas":
        _missing("config", doc, {"checks"})
        checks = doc["checks"]
        if not isinstance(checks, list) or not checks:
            raise ConfigError("checks must be a nonempty array of tables")
        parsed = []
        for i, chk in enumerate(checks):
            where = f"checks[{i}]"
            if not isinstance(chk, dict) or "name" not in chk:
                raise ConfigError(f"missing required key 'name' in {where}")
            if chk["name"] not in CHECK_KEYS:
                raise ConfigError(f"unknown check {chk['name']!r} in {where}")
            req, opt = CHECK_KEYS[chk["name"]]
            _unknown(where, chk, req | opt | {"name", "trials"})
            if "trials" in chk:
                _int(chk["trials"], f"{where}.trials", 1)
            _missing(where, chk, req)
            parsed.append(dict(chk))
        cfg.checks = tuple(parsed)
    elif "checks" in doc:
        raise ConfigError("'checks' is only used by kind 'lemmas'")
    return cfg


def load_config(path):
    """Read and validate a TOML config file."""
    try:
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return parse_config(doc)
