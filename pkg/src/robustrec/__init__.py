"""Exact and stable recovery of sparse signals and low-rank matrices from grossly corrupted measurements."""
from .cs_solver import CsRecovery, CsSolveOptions, Status, brute_force_cs, lambda_gaussian, lambda_general, solve_cs
from .errors import ConfigError, InvalidArgument, NumericalError, ParseError
from .mc_solver import McRecovery, McSolveOptions, lambda_mc, solve_mc
from .models import CsInstance, EnsembleKind, McInstance, SensingMatrix, make_cs_instance, make_mc_instance

__version__ = "0.1.0"

__all__ = [
    "CsRecovery",
    "CsSolveOptions",
    "Status",
    "brute_force_cs",
    "lambda_gaussian",
    "lambda_general",
    "solve_cs",
    "ConfigError",
    "InvalidArgument",
    "NumericalError",
    "ParseError",
    "McRecovery",
    "McSolveOptions",
    "lambda_mc",
    "solve_mc",
    "CsInstance",
    "EnsembleKind",
    "McInstance",
    "SensingMatrix",
    "make_cs_instance",
    "make_mc_instance",
]
