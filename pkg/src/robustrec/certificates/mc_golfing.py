"""Golfing construction of a dual certificate for corrupted matrix completion.

Works on an instance drawn with the auxiliary sets ``GammaPrime`` (clean
observed entries), ``OmegaPrime`` and the sign matrix ``W``. With
``rho' = (1 - 2s) rho``, ``GammaPrime`` is split into ``l = floor(5 log n + 1)``
random blocks whose inclusion rates ``q_1 = q_2 = rho'/6`` and
``q_3 = ... = q_l = q`` make the union exactly ``Ber(rho')``. Then::

    Z_0 = P_T(U V^T - lam P_{OmegaPrime} W)
    Z_j = (P_T - P_T P_{Gamma_j} P_T / q_j) Z_{j-1}
    Y   = sum_j P_{Gamma_j} Z_{j-1} / q_j

Operator norms over the matrix space use power iteration restricted to the
tangent space.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import InvalidArgument
from ..proxops import TangentProjector
from .cs_golfing import Margin

__all__ = [
    "McCertificate",
    "McDualityReport",
    "mc_block_count",
    "mc_block_rates",
    "assign_blocks",
    "operator_norm",
    "sampling_deviation",
    "build_mc_certificate",
    "verify_mc_duality",
]

POWER_ITERS = 200
POWER_TOL = 1e-8


@dataclass
class McCertificate:
    Y: np.ndarray = field(repr=False)
    z_fro: np.ndarray
    z_inf: np.ndarray
    margins: tuple
    q_sequence: np.ndarray
    blocks: list = field(repr=False)
    telescoping_residual: float = 0.0

    @property
    def satisfied(self):
        return all(mg.ok for mg in self.margins)

    @property
    def step_ratios(self):
        """``||Z_j||_F / ||Z_{j-1}||_F``; the contraction argument needs each to be at most 1/2."""
        prev = self.z_fro[:-1]
        return np.divide(self.z_fro[1:], prev, out=np.zeros_like(prev), where=prev > 0)


@dataclass
class McDualityReport:
    margins: tuple
    isometry_deviation: float
    sampled_norm: float

    @property
    def margins_ok(self):
        return all(mg.ok for mg in self.margins)

    @property
    def assumptions_ok(self):
        return self.isometry_deviation <= 0.5 and self.sampled_norm <= math.sqrt(1.5)

    @property
    def guarantee(self):
        return self.margins_ok and self.assumptions_ok


def mc_block_count(n):
    """``floor(5 log n + 1)``."""
    if n < 2:
        raise InvalidArgument("n must be at least 2")
    return int(math.floor(5.0 * math.log(n) + 1.0))


def mc_block_rates(rho_clean, l):
    """Inclusion rates ``q_1..q_l`` whose union has rate ``rho_clean``.

    ``q_1 = q_2 = rho_clean / 6``; the common ``q`` of the remaining blocks
    solves ``1 - rho_clean = (1 - q_1)^2 (1 - q)^(l - 2)``.
    """
    if not 0 < rho_clean < 1:
        raise InvalidArgument(f"clean sampling rate must lie in (0, 1), got {rho_clean}")
    if l < 3:
        raise InvalidArgument("need at least three blocks")
    q1 = rho_clean / 6.0
    q = 1.0 - ((1.0 - rho_clean) / (1.0 - q1) ** 2) ** (1.0 / (l - 2))
    if not 0 < q < 1:
        raise InvalidArgument(f"no block rate in (0, 1) for rate {rho_clean} and {l} blocks")
    return np.array([q1, q1] + [q] * (l - 2))


def assign_blocks(mask, rates, rng):
    """Split ``mask`` into overlapping blocks with marginal rates ``rates``.

    Each masked entry joins block ``j`` by sequential inclusion: until it has
    joined some block it does so with probability
    ``q_j / (1 - prod_{k >= j} (1 - q_k))``, and afterwards with plain
    probability ``q_j``. If ``mask`` is ``Ber(1 - prod (1 - q_k))`` the blocks
    are then independent ``Ber(q_j)`` sets whose union is ``mask``.
    """
    rates = np.asarray(rates, dtype=float)
    tail = np.cumprod((1.0 - rates)[::-1])[::-1]
    joined = np.zeros(mask.shape, dtype=bool)
    blocks = []
    for j, qj in enumerate(rates):
        u = rng.random(mask.shape)
        first = np.minimum(qj / (1.0 - tail[j]), 1.0)
        blk = mask & np.where(joined, u < qj, u < first)
        joined |= blk
        blocks.append(blk)
    return blocks


def operator_norm(apply, shape, start, iters=POWER_ITERS, tol=POWER_TOL, block=4):
    """Largest ``|eigenvalue|`` of a self-adjoint map on ``shape``-matrices.

    Block power iteration with a Rayleigh-Ritz step: ``start`` seeds the first
    direction and the other ``block - 1`` are derived from it by applying the
    map. Stops once the estimate changes by at most ``tol`` relatively.
    """
    X0 = np.asarray(start, dtype=float).reshape(-1)
    if not np.any(X0):
        return 0.0

    def op(x):
        return np.asarray(apply(x.reshape(shape)), dtype=float).reshape(-1)

    cols = [X0]
    for _ in range(block - 1):
        cols.append(op(cols[-1]))
    Q, _ = np.linalg.qr(np.column_stack(cols))
    est = 0.0
    for _ in range(iters):
        AQ = np.column_stack([op(Q[:, j]) for j in range(Q.shape[1])])
        H = Q.T @ AQ
        ritz = np.linalg.eigvalsh((H + H.T) / 2.0)
        new = float(np.abs(ritz).max())
        if new == 0.0:
            return 0.0
        if abs(new - est) <= tol * new:
            return new
        est = new
        Q, R = np.linalg.qr(AQ)
        keep = np.abs(np.diag(R)) > 1e-14 * new
        if not keep.all():
            Q = Q[:, keep]
    return est


def _start(P, seed):
    return P.pt(np.random.default_rng(seed).standard_normal((P.n1, P.n2)))


def sampling_deviation(U, V, mask, rate, seed=0):
    """``||P_T - P_T P_mask P_T / rate||`` on the tangent space of ``(U, V)``."""
    P = TangentProjector(U, V)
    n1, n2 = P.n1, P.n2

    def apply(X):
        Z = P.pt(X)
        return Z - P.pt(np.where(mask, Z, 0.0)) / rate

    return operator_norm(apply, (n1, n2), _start(P, seed))


def _require_aux(inst):
    if not inst.has_auxiliaries:
        raise InvalidArgument("instance lacks the auxiliary sets GammaPrime, OmegaPrime, W")


def _margin_set(P, Y, G, lam, n, UV, WP, fro_bound):
    return (
        Margin("tangent_fro", float(np.linalg.norm(P.pt(Y) + P.pt(lam * WP - UV))), fro_bound),
        Margin("normal_spectral", float(np.linalg.norm(P.ptperp(Y) + P.ptperp(lam * WP), 2)), 0.25),
        Margin("outside_support", float(np.abs(np.where(G, 0.0, Y)).max()), 0.0),
        Margin("support_linf", float(np.abs(np.where(G, Y, 0.0)).max()), lam / 4),
    )


def build_mc_certificate(inst, lam, seed):
    """Run the golfing scheme on an instance carrying the auxiliary sets."""
    _require_aux(inst)
    n = inst.n
    rho_clean = (1.0 - 2.0 * inst.s) * inst.rho
    l = mc_block_count(n)
    rates = mc_block_rates(rho_clean, l)
    G = np.asarray(inst.GammaPrime, dtype=bool)
    blocks = assign_blocks(G, rates, np.random.default_rng(seed))

    P = TangentProjector(inst.U, inst.V)
    UV = inst.U @ inst.V.T
    WP = np.where(inst.OmegaPrime, inst.W, 0.0)
    Z = P.pt(UV - lam * WP)
    Z0 = Z
    Y = np.zeros((n, n))
    z_fro, z_inf = [np.linalg.norm(Z)], [np.abs(Z).max()]
    for qj, blk in zip(rates, blocks):
        step = np.where(blk, Z, 0.0) / qj
        Y += step
        Z = Z - P.pt(step)
        z_fro.append(np.linalg.norm(Z))
        z_inf.append(np.abs(Z).max())
    residual = float(np.linalg.norm(P.pt(Y) - (Z0 - Z)))
    margins = _margin_set(P, Y, G, lam, n, UV, WP, lam / (2.0 * n * n))
    return McCertificate(
        Y=Y,
        z_fro=np.array(z_fro),
        z_inf=np.array(z_inf),
        margins=margins,
        q_sequence=rates,
        blocks=blocks,
        telescoping_residual=residual,
    )


def verify_mc_duality(Y, inst, lam, seed=0):
    """Evaluate the exact-recovery certificate conditions for ``Y``.

    Uses the signs of ``W`` on the observed entries outside ``GammaPrime``.
    Also measures the two sampling assumptions on ``GammaPrime``:
    ``||P_T P_G P_T / rho' - P_T|| <= 1/2`` and ``||P_T P_G|| / sqrt(rho') <= sqrt(3/2)``.
    """
    _require_aux(inst)
    n = inst.n
    Y = np.asarray(Y, dtype=float)
    if Y.shape != (n, n):
        raise InvalidArgument(f"Y must be {n} x {n}, got {Y.shape}")
    G = np.asarray(inst.GammaPrime, dtype=bool)
    P = TangentProjector(inst.U, inst.V)
    UV = inst.U @ inst.V.T
    WP = np.where(np.asarray(inst.O, dtype=bool) & ~G, inst.W, 0.0)
    margins = _margin_set(P, Y, G, lam, n, UV, WP, lam / (n * n))

    rho_clean = (1.0 - 2.0 * inst.s) * inst.rho
    if inst.r == 0:
        return McDualityReport(margins=margins, isometry_deviation=0.0, sampled_norm=0.0)
    iso = sampling_deviation(inst.U, inst.V, G, rho_clean, seed)
    start = _start(P, seed)
    top = operator_norm(lambda X: P.pt(np.where(G, P.pt(X), 0.0)), (n, n), start)
    return McDualityReport(margins=margins, isometry_deviation=iso, sampled_norm=math.sqrt(top / rho_clean))
