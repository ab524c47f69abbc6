"""Nuclear norm + l1 recovery of a low-rank matrix from corrupted samples.

Solves::

    minimize ||L||_* + lam ||S||_1   subject to   P_O(L) + S = M_obs,

where ``S`` lives on the observed set ``O`` (the constraint forces it to be
zero elsewhere). The ADMM splitting carries an auxiliary ``E`` off ``O`` that
absorbs the unobserved entries of ``L``, giving the equality
``L + S + E = M_obs`` with closed-form updates:

* ``L``: singular value thresholding,
* ``S`` (on ``O``): soft thresholding,
* ``E`` (off ``O``): unconstrained, so a plain copy.

Full SVDs are taken every iteration; intended for ``n <= 500``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .cs_solver import Status
from .errors import InvalidArgument
from .proxops import shrink, svt

__all__ = ["McSolveOptions", "McRecovery", "lambda_mc", "estimate_rho", "solve_mc", "default_penalty"]


def lambda_mc(rho, n):
    """``1 / sqrt(rho n log n)``."""
    if not 0 < rho <= 1:
        raise InvalidArgument(f"rho must lie in (0, 1], got {rho}")
    if n < 2:
        raise InvalidArgument(f"n must be at least 2, got {n}")
    return 1.0 / math.sqrt(rho * n * math.log(n))


def estimate_rho(O, n=None):
    """Fraction of observed entries, ``|O| / n^2``."""
    O = np.asarray(O, dtype=bool)
    if n is None:
        n = O.shape[0]
    if O.shape != (n, n):
        raise InvalidArgument(f"mask must be {n} x {n}, got {O.shape}")
    return float(np.count_nonzero(O)) / n**2


def default_penalty(M_obs):
    """``n1 n2 / (4 ||M_obs||_1)``, the usual principal-component-pursuit scaling."""
    l1 = np.abs(M_obs).sum()
    return M_obs.size / (4.0 * l1) if l1 > 0 else 1.0


@dataclass
class McSolveOptions:
    """Solver settings.

    ``penalty=None`` picks :func:`default_penalty` of the observation. The
    penalty is residual-balanced every ``balance_every`` iterations until
    ``adapt_iters`` and fixed afterwards.
    """

    lam: float
    penalty: float | None = None
    max_iters: int = 10_000
    tol: float = 1e-7
    balance_ratio: float = 10.0
    balance_every: int = 50
    adapt_iters: int = 20_000

    def validate(self):
        if not self.lam > 0:
            raise InvalidArgument(f"lambda must be positive, got {self.lam}")
        if self.penalty is not None and not self.penalty > 0:
            raise InvalidArgument("penalty must be positive")
        if self.max_iters < 1:
            raise InvalidArgument("max_iters must be at least 1")
        if not self.tol > 0:
            raise InvalidArgument("tol must be positive")


@dataclass
class McRecovery:
    L_hat: np.ndarray
    S_hat: np.ndarray
    status: Status
    iters: int
    residual: float
    dual_residual: float
    objective: float
    penalty: float
    history: np.ndarray = field(repr=False, default=None)

    @property
    def converged(self):
        return self.status is Status.CONVERGED


def mc_objective(L, S, lam):
    return float(np.linalg.svd(L, compute_uv=False).sum() + lam * np.abs(S).sum())


def solve_mc(M_obs, O, opts):
    """Recover ``(L, S)`` from ``M_obs = P_O(L) + S``.

    Returns an :class:`McRecovery`. ``S_hat`` is exactly zero off ``O``.
    """
    opts.validate()
    M = np.asarray(M_obs, dtype=float)
    O = np.asarray(O, dtype=bool)
    if M.ndim != 2 or M.shape != O.shape:
        raise InvalidArgument(f"M_obs {M.shape} and mask {O.shape} must have the same 2-D shape")
    if np.any(M[~O] != 0):
        raise InvalidArgument("M_obs must vanish off the observed set")

    mu = default_penalty(M) if opts.penalty is None else opts.penalty
    lam = opts.lam
    scale = 1.0 + np.linalg.norm(M)
    L = np.zeros_like(M)
    S = np.zeros_like(M)
    E = np.zeros_like(M)
    Y = np.zeros_like(M)
    history = []
    status = Status.MAX_ITERS
    for k in range(opts.max_iters):
        L = svt(M - S - E + Y / mu, 1.0 / mu)
        T = M - L + Y / mu
        S_new = np.where(O, shrink(T, lam / mu), 0.0)
        E_new = np.where(O, 0.0, T)
        R = M - L - S_new - E_new
        Y += mu * R
        r_pri = np.linalg.norm(R)
        r_dual = mu * np.linalg.norm((S_new - S) + (E_new - E))
        S, E = S_new, E_new
        history.append((r_pri, r_dual))
        if r_pri <= opts.tol * scale and r_dual <= opts.tol * scale:
            status = Status.CONVERGED
            break
        if k < opts.adapt_iters and k % opts.balance_every == 0:
            if r_pri > opts.balance_ratio * r_dual:
                mu *= 2.0
            elif r_dual > opts.balance_ratio * r_pri:
                mu /= 2.0
    residual = float(np.linalg.norm(np.where(O, L, 0.0) + S - M))
    return McRecovery(
        L_hat=L,
        S_hat=S,
        status=status,
        iters=k + 1,
        residual=residual,
        dual_residual=float(r_dual),
        objective=mc_objective(L, S, lam),
        penalty=mu,
        history=np.array(history),
    )
