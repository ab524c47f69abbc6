"""Golfing construction of an inexact dual vector for sparse recovery with corruptions.

Given supports ``T`` (signal) and ``B`` (corrupted measurements), the clean
rows ``B^c`` are split into ``l = floor(log2 n + 1)`` blocks ``G_1..G_l``.
Starting from ``p_0 = sgn(x_T) - lam A_{B,T}^T sgn(f_B)`` each block takes a
step::

    q[G_i] = (m / m_i) A_{G_i,T} p_{i-1}
    p_i    = (I - (m / m_i) A_{G_i,T}^T A_{G_i,T}) p_{i-1}

and the certificate is ``v = A_{B^c,:}^T q + lam A_{B,:}^T sgn(f_B)``. Exact
recovery follows when ``v`` and ``q`` meet three margins and the clean rows
are well conditioned on ``T``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import InvalidArgument
from ..models import as_matrix

__all__ = [
    "Margin",
    "CsCertificate",
    "CsDualityReport",
    "golfing_block_count",
    "cs_partition_sizes",
    "build_cs_certificate",
    "verify_cs_inexact_duality",
]

TELESCOPE_RTOL = 1e-10


@dataclass(frozen=True)
class Margin:
    name: str
    achieved: float
    required: float

    @property
    def ok(self):
        return self.achieved <= self.required


@dataclass
class CsCertificate:
    """Output of :func:`build_cs_certificate`.

    ``q`` is indexed like ``clean_rows`` (the sorted complement of ``B``).
    ``gram_deviations[i]`` is the operator norm of the step matrix of block
    ``i``, so ``p_norms[i+1] <= gram_deviations[i] * p_norms[i]``.
    """

    q: np.ndarray
    v: np.ndarray
    p_norms: np.ndarray
    margins: tuple
    partition: tuple
    clean_rows: np.ndarray
    blocks: list = field(repr=False)
    gram_deviations: np.ndarray = field(repr=False)
    telescoping_residual: float = 0.0

    @property
    def satisfied(self):
        return all(mg.ok for mg in self.margins)


@dataclass
class CsDualityReport:
    margins: tuple
    gram_deviation: float
    cross_column: float
    lam: float

    @property
    def margins_ok(self):
        return all(mg.ok for mg in self.margins)

    @property
    def gram_ok(self):
        return self.gram_deviation <= 0.5 and self.cross_column <= 1.0

    @property
    def guarantee(self):
        """True when the sufficient conditions for exact recovery all hold."""
        return self.margins_ok and self.gram_ok and self.lam < 1.5


def golfing_block_count(n):
    """``floor(log2 n + 1)``."""
    if n < 1:
        raise InvalidArgument("n must be positive")
    return int(math.floor(math.log2(n) + 1))


def cs_partition_sizes(n_clean, l):
    """Block sizes: two large blocks of ``ceil(n_clean / 4)``, the rest split evenly.

    The large blocks shrink if needed so every block keeps at least one row.
    """
    if l < 1:
        raise InvalidArgument("need at least one block")
    if l > n_clean:
        raise InvalidArgument(f"cannot split {n_clean} clean rows into {l} nonempty blocks")
    if l == 1:
        return (n_clean,)
    if l == 2:
        big = math.ceil(n_clean / 4)
        return (big, n_clean - big) if n_clean - big >= 1 else (1, n_clean - 1)
    big = min(math.ceil(n_clean / 4), (n_clean - (l - 2)) // 2)
    rest = n_clean - 2 * big
    k = l - 2
    small = [rest // k + (1 if i < rest % k else 0) for i in range(k)]
    return (big, big, *small)


def _check_supports(A, T, B, sgn_xT, sgn_fB):
    m, n = A.shape
    T = np.asarray(T, dtype=int).reshape(-1)
    B = np.asarray(B, dtype=int).reshape(-1)
    if T.size and (T.min() < 0 or T.max() >= n):
        raise InvalidArgument("T has indices outside the column range")
    if B.size and (B.min() < 0 or B.max() >= m):
        raise InvalidArgument("B has indices outside the row range")
    sgn_xT = np.asarray(sgn_xT, dtype=float).reshape(-1)
    sgn_fB = np.asarray(sgn_fB, dtype=float).reshape(-1)
    if sgn_xT.size != T.size or sgn_fB.size != B.size:
        raise InvalidArgument("sign vectors must match the support sizes")
    return T, B, sgn_xT, sgn_fB


def _margins(A, T, B, sgn_xT, sgn_fB, lam, q, clean):
    m, n = A.shape
    v = A[clean].T @ q + lam * (A[B].T @ sgn_fB)
    Tc = np.setdiff1d(np.arange(n), T)
    margins = (
        Margin("support_l2", float(np.linalg.norm(v[T] - sgn_xT)), lam / 4),
        Margin("offsupport_linf", float(np.abs(v[Tc]).max()) if Tc.size else 0.0, 0.25),
        Margin("dual_linf", float(np.abs(q).max()) if q.size else 0.0, lam / 4),
    )
    return v, margins


def build_cs_certificate(A, T, B, sgn_xT, sgn_fB, lam, seed):
    """Run the golfing scheme; ``seed`` shuffles clean rows into blocks."""
    A = as_matrix(A)
    m, n = A.shape
    T, B, sgn_xT, sgn_fB = _check_supports(A, T, B, sgn_xT, sgn_fB)
    if B.size >= m:
        raise InvalidArgument("need |B| < m")
    clean = np.setdiff1d(np.arange(m), B)
    l = golfing_block_count(n)
    sizes = cs_partition_sizes(clean.size, l)
    order = np.random.default_rng(seed).permutation(clean.size)
    edges = np.cumsum((0,) + sizes)
    blocks = [np.sort(order[edges[i] : edges[i + 1]]) for i in range(l)]

    AT = A[:, T]
    p = sgn_xT - lam * (AT[B].T @ sgn_fB)
    p0 = p.copy()
    q = np.zeros(clean.size)
    p_norms = [np.linalg.norm(p)]
    devs = []
    for blk in blocks:
        AG = AT[clean[blk]]
        scale = m / blk.size
        q[blk] = scale * (AG @ p)
        step = np.eye(T.size) - scale * (AG.T @ AG)
        p = step @ p
        p_norms.append(np.linalg.norm(p))
        devs.append(np.linalg.norm(step, 2) if T.size else 0.0)

    u_T = AT[clean].T @ q
    residual = float(np.linalg.norm(u_T - (p0 - p)))
    v, margins = _margins(A, T, B, sgn_xT, sgn_fB, lam, q, clean)
    return CsCertificate(
        q=q,
        v=v,
        p_norms=np.array(p_norms),
        margins=margins,
        partition=sizes,
        clean_rows=clean,
        blocks=blocks,
        gram_deviations=np.array(devs),
        telescoping_residual=residual,
    )


def verify_cs_inexact_duality(cert, A, T, B, sgn_xT, sgn_fB, lam):
    """Recompute the margins of a dual vector and the clean-row conditioning.

    ``cert`` is a :class:`CsCertificate` or a bare vector ``q`` on the clean
    rows. The conditioning checks are ``||(m / |B^c|) A_{B^c,T}^T A_{B^c,T} - I|| <= 1/2``
    and ``max_{i not in T} ||(m / |B^c|) A_{B^c,T}^T A_{B^c,i}|| <= 1``.
    """
    A = as_matrix(A)
    m, n = A.shape
    T, B, sgn_xT, sgn_fB = _check_supports(A, T, B, sgn_xT, sgn_fB)
    clean = np.setdiff1d(np.arange(m), B)
    q = cert.q if isinstance(cert, CsCertificate) else np.asarray(cert, dtype=float).reshape(-1)
    if q.size != clean.size:
        raise InvalidArgument(f"q has length {q.size}, expected {clean.size}")
    _, margins = _margins(A, T, B, sgn_xT, sgn_fB, lam, q, clean)

    gram_dev, cross = 0.0, 0.0
    if T.size and clean.size:
        scale = m / clean.size
        AcT = A[np.ix_(clean, T)]
        gram_dev = float(np.linalg.norm(scale * (AcT.T @ AcT) - np.eye(T.size), 2))
        Tc = np.setdiff1d(np.arange(n), T)
        if Tc.size:
            cross = float(np.linalg.norm(scale * (AcT.T @ A[np.ix_(clean, Tc)]), axis=0).max())
    return CsDualityReport(margins=margins, gram_deviation=gram_dev, cross_column=cross, lam=float(lam))
