"""l1/l1 recovery of a sparse signal from sparsely corrupted measurements.

Solves::

    minimize ||x||_1 + lam ||f||_1   subject to   ||A x + f - y||_2 <= eps

with ADMM. For ``eps = 0`` the constraint is the affine set ``A x + f = y``
and the splitting alternates an exact projection onto it with weighted soft
thresholding. For ``eps > 0`` a ball variable ``r`` is split off
``Phi z - y`` so every subproblem stays closed form.

``lambda_gaussian`` and ``lambda_general`` give the penalty weights under
which exact recovery is guaranteed for Gaussian and bounded-row ensembles.
Logarithms are natural.
"""
from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .errors import InvalidArgument, NumericalError
from .models import as_matrix
from .proxops import AffineProjector, project_ball, shrink

__all__ = [
    "Status",
    "CsSolveOptions",
    "CsRecovery",
    "lambda_gaussian",
    "lambda_general",
    "solve_cs",
    "brute_force_cs",
    "BRUTE_FORCE_MAX_M",
    "BRUTE_FORCE_MAX_N",
]

BRUTE_FORCE_MAX_M = 8
BRUTE_FORCE_MAX_N = 10


class Status(str, enum.Enum):
    CONVERGED = "Converged"
    MAX_ITERS = "MaxIters"


def lambda_gaussian(m, n):
    """``1 / sqrt(log(n/m) + 1)``."""
    if m < 1 or m > n:
        raise InvalidArgument(f"need 1 <= m <= n, got m={m}, n={n}")
    return 1.0 / math.sqrt(math.log(n / m) + 1.0)


def lambda_general(n):
    """``1 / sqrt(log n)``."""
    if n < 2:
        raise InvalidArgument(f"need n >= 2, got n={n}")
    return 1.0 / math.sqrt(math.log(n))


@dataclass
class CsSolveOptions:
    """Solver settings.

    The penalty is adapted by residual balancing (doubled or halved when one
    residual exceeds the other by ``balance_ratio``) during the first
    ``adapt_iters`` iterations and then frozen, which keeps ADMM's
    convergence guarantee. ``seed=None`` means a zero start; an integer seed
    draws a random start instead.
    """

    lam: float
    epsilon: float = 0.0
    penalty: float = 1.0
    max_iters: int = 50_000
    tol_primal: float = 1e-8
    tol_dual: float = 1e-8
    seed: int | None = None
    balance_ratio: float = 10.0
    balance_every: int = 10
    adapt_iters: int = 1000

    def validate(self):
        if not self.lam > 0:
            raise InvalidArgument(f"lambda must be positive, got {self.lam}")
        if self.epsilon < 0:
            raise InvalidArgument("epsilon must be non-negative")
        if not self.penalty > 0:
            raise InvalidArgument("penalty must be positive")
        if self.max_iters < 1:
            raise InvalidArgument("max_iters must be at least 1")
        if not (self.tol_primal > 0 and self.tol_dual > 0):
            raise InvalidArgument("tolerances must be positive")


@dataclass
class CsRecovery:
    """Solver output.

    ``nu`` is the Lagrange multiplier of the measurement constraint recovered
    from the ADMM dual variable; at an optimum ``A^T nu`` is a subgradient of
    ``||x||_1`` and ``nu`` one of ``lam ||f||_1``.
    """

    x_hat: np.ndarray
    f_hat: np.ndarray
    status: Status
    iters: int
    primal_residual: float
    dual_residual: float
    objective: float
    constraint_residual: float
    nu: np.ndarray
    penalty: float
    history: np.ndarray = field(repr=False, default=None)

    @property
    def converged(self):
        return self.status is Status.CONVERGED


def _check_inputs(A, y):
    A = as_matrix(A)
    y = np.asarray(y, dtype=float).reshape(-1)
    if A.ndim != 2:
        raise InvalidArgument("A must be a 2-D matrix")
    if y.size != A.shape[0]:
        raise InvalidArgument(f"y has length {y.size} but A has {A.shape[0]} rows")
    return A, y


def solve_cs(A, y, opts):
    """Minimize ``||x||_1 + lam ||f||_1`` subject to ``||A x + f - y|| <= eps``.

    Returns a :class:`CsRecovery`; hitting ``max_iters`` is reported through
    ``status`` rather than raised.
    """
    opts.validate()
    A, y = _check_inputs(A, y)
    m, n = A.shape
    weights = np.concatenate([np.ones(n), np.full(m, opts.lam)])
    if opts.seed is None:
        w0 = np.zeros(n + m)
    else:
        w0 = np.random.default_rng(opts.seed).standard_normal(n + m)
    if opts.epsilon == 0:
        return _solve_equality(A, y, opts, weights, w0)
    return _solve_ball(A, y, opts, weights, w0)


def _balance(rho, u, r_pri, r_dual, opts, k):
    if k >= opts.adapt_iters or k % opts.balance_every:
        return rho
    if r_pri > opts.balance_ratio * r_dual:
        rho *= 2.0
        for block in u:
            block /= 2.0
    elif r_dual > opts.balance_ratio * r_pri:
        rho /= 2.0
        for block in u:
            block *= 2.0
    return rho


def _solve_equality(A, y, opts, weights, w):
    m, n = A.shape
    proj = AffineProjector(A, y)
    u = np.zeros(n + m)
    rho = opts.penalty
    ny = np.linalg.norm(y)
    history = []
    status = Status.MAX_ITERS
    for k in range(opts.max_iters):
        z = proj(w - u)
        w_old = w
        w = shrink(z + u, weights / rho)
        u += z - w
        r_pri = np.linalg.norm(z - w)
        r_dual = rho * np.linalg.norm(w - w_old)
        history.append((r_pri, r_dual))
        if r_pri <= opts.tol_primal * (1 + ny) and r_dual <= opts.tol_dual * (1 + rho * np.linalg.norm(u)):
            status = Status.CONVERGED
            break
        rho = _balance(rho, (u,), r_pri, r_dual, opts, k)
    x_hat, f_hat = z[:n].copy(), z[n:].copy()
    nu = rho * u[n:]
    return CsRecovery(
        x_hat=x_hat,
        f_hat=f_hat,
        status=status,
        iters=k + 1,
        primal_residual=float(r_pri),
        dual_residual=float(r_dual),
        objective=float(np.abs(x_hat).sum() + opts.lam * np.abs(f_hat).sum()),
        constraint_residual=float(np.linalg.norm(A @ x_hat + f_hat - y)),
        nu=nu,
        penalty=rho,
        history=np.array(history),
    )


def _solve_ball(A, y, opts, weights, w):
    # z-update solves (I + Phi^T Phi) z = b; by Woodbury this needs (A A^T + 2I)^{-1}
    m, n = A.shape
    try:
        factor = cho_factor(A @ A.T + 2.0 * np.eye(m), lower=True)
    except LinAlgError as exc:
        raise NumericalError(f"Cholesky of A A^T + 2I failed: {exc}") from exc

    def phi(z):
        return A @ z[:n] + z[n:]

    def phi_t(v):
        return np.concatenate([A.T @ v, v])

    def solve_normal(b):
        return b - phi_t(cho_solve(factor, phi(b)))

    eps = opts.epsilon
    r = np.zeros(m)
    u1 = np.zeros(n + m)
    u2 = np.zeros(m)
    rho = opts.penalty
    ny = np.linalg.norm(y)
    zero = np.zeros(m)
    history = []
    status = Status.MAX_ITERS
    for k in range(opts.max_iters):
        z = solve_normal((w - u1) + phi_t(y + r - u2))
        pz = phi(z) - y
        w_old, r_old = w, r
        w = shrink(z + u1, weights / rho)
        r = project_ball(pz + u2, zero, eps)
        d1 = z - w
        d2 = pz - r
        u1 += d1
        u2 += d2
        r_pri = math.sqrt(d1 @ d1 + d2 @ d2)
        r_dual = rho * np.linalg.norm((w - w_old) + phi_t(r - r_old))
        history.append((r_pri, r_dual))
        dual_scale = rho * np.linalg.norm(u1 + phi_t(u2))
        if r_pri <= opts.tol_primal * (1 + ny) and r_dual <= opts.tol_dual * (1 + dual_scale):
            status = Status.CONVERGED
            break
        rho = _balance(rho, (u1, u2), r_pri, r_dual, opts, k)
    x_hat, f_hat = z[:n].copy(), z[n:].copy()
    return CsRecovery(
        x_hat=x_hat,
        f_hat=f_hat,
        status=status,
        iters=k + 1,
        primal_residual=float(r_pri),
        dual_residual=float(r_dual),
        objective=float(np.abs(x_hat).sum() + opts.lam * np.abs(f_hat).sum()),
        constraint_residual=float(np.linalg.norm(A @ x_hat + f_hat - y)),
        nu=-rho * u2,
        penalty=rho,
        history=np.array(history),
    )


def brute_force_cs(A, y, lam):
    """Exact minimizer of the noiseless program by vertex enumeration.

    The program is a linear program whose optimum is attained at a basic
    solution: one supported on ``m`` linearly independent columns of
    ``[A, I]``. All ``C(n+m, m)`` column subsets are tried; singular ones are
    skipped.

    Returns
    -------
    x, f, objective
    """
    A, y = _check_inputs(A, y)
    m, n = A.shape
    if m > BRUTE_FORCE_MAX_M or n > BRUTE_FORCE_MAX_N:
        raise InvalidArgument(
            f"enumeration bound is m <= {BRUTE_FORCE_MAX_M}, n <= {BRUTE_FORCE_MAX_N}; got m={m}, n={n}"
        )
    if not lam > 0:
        raise InvalidArgument("lambda must be positive")
    if not np.any(y):
        return np.zeros(n), np.zeros(m), 0.0
    phi = np.hstack([A, np.eye(m)])
    weights = np.concatenate([np.ones(n), np.full(m, lam)])
    bases = np.array(list(itertools.combinations(range(n + m), m)))
    mats = np.transpose(phi[:, bases], (1, 0, 2))
    sv = np.linalg.svd(mats, compute_uv=False)
    ok = sv[:, -1] > 1e-10 * sv[:, 0]
    bases, mats = bases[ok], mats[ok]
    rhs = np.broadcast_to(y, (len(bases), m))[..., None]
    coeffs = np.linalg.solve(mats, rhs)[..., 0]
    objectives = np.sum(np.abs(coeffs) * weights[bases], axis=1)
    best = int(np.argmin(objectives))
    z = np.zeros(n + m)
    z[bases[best]] = coeffs[best]
    return z[:n], z[n:], float(objectives[best])
