"""Empirical checks of spectral concentration bounds."""
from __future__ import annotations

import enum
import math

import numpy as np

from ..errors import InvalidArgument
from ..models import as_matrix

__all__ = ["SpectralMode", "spectral_check_gaussian", "gaussian_norm_bound_probability", "spectral_check_rows"]


class SpectralMode(str, enum.Enum):
    GRAM = "Gram"
    CROSS_VEC = "CrossVec"
    CROSS_COL = "CrossCol"


def gaussian_norm_bound_probability(t):
    """Lower bound ``1 - 2 exp(-t^2 / 2)`` on ``P(||B|| <= sqrt(m) + sqrt(n) + t)``."""
    return 1.0 - 2.0 * math.exp(-t * t / 2.0)


def spectral_check_gaussian(m, n, t, trials, seed):
    """Fraction of standard normal ``m x n`` draws with ``||B|| <= sqrt(m) + sqrt(n) + t``.

    The draws depend only on ``(m, n, trials, seed)``, so frequencies for
    different ``t`` are computed on the same matrices.
    """
    if trials < 1:
        raise InvalidArgument("trials must be at least 1")
    if m < 1 or n < 1:
        raise InvalidArgument("m and n must be positive")
    rng = np.random.default_rng(seed)
    bound = math.sqrt(m) + math.sqrt(n) + t
    hits = 0
    for _ in range(trials):
        B = rng.standard_normal((m, n))
        hits += np.linalg.norm(B, 2) <= bound
    return hits / trials


def spectral_check_rows(A, T, mode, v=None):
    """Measure one of three column-restricted quantities of ``A``.

    ``Gram``
        ``||A_T^T A_T - I||``.
    ``CrossVec``
        ``||A_{T^c}^T A_T v||_inf * sqrt(|T|) / ||v||_2``; ``v`` defaults to all ones.
    ``CrossCol``
        ``max_{i not in T} ||A_T^T A_i||_2``.
    """
    A = as_matrix(A)
    m, n = A.shape
    mode = SpectralMode(mode)
    T = np.asarray(T, dtype=int).reshape(-1)
    if T.size and (T.min() < 0 or T.max() >= n):
        raise InvalidArgument(f"support indices must lie in [0, {n})")
    Tc = np.setdiff1d(np.arange(n), T)
    AT = A[:, T]
    if mode is SpectralMode.GRAM:
        if T.size == 0:
            return 0.0
        return float(np.linalg.norm(AT.T @ AT - np.eye(T.size), 2))
    if mode is SpectralMode.CROSS_VEC:
        if T.size == 0:
            raise InvalidArgument("CrossVec needs a nonempty support")
        v = np.ones(T.size) if v is None else np.asarray(v, dtype=float).reshape(-1)
        if v.size != T.size:
            raise InvalidArgument(f"v has length {v.size}, expected {T.size}")
        nv = np.linalg.norm(v)
        if nv == 0:
            raise InvalidArgument("v must be nonzero")
        if Tc.size == 0:
            return 0.0
        return float(np.abs(A[:, Tc].T @ (AT @ v)).max() * math.sqrt(T.size) / nv)
    if Tc.size == 0 or T.size == 0:
        return 0.0
    return float(np.linalg.norm(AT.T @ A[:, Tc], axis=0).max())
