"""Exact restricted-isometry constants of ``Phi = [A, I]`` by enumeration.

The constant ``delta_{s1,s2}`` is the smallest ``delta`` such that

    (1 - delta) ||(x; f)||^2 <= ||A x + f||^2 <= (1 + delta) ||(x; f)||^2

for every ``x`` with at most ``s1`` nonzeros and ``f`` with at most ``s2``.
By eigenvalue interlacing it suffices to check supports of exactly those
sizes, which is what :func:`rip_constant_exact` enumerates.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from ..errors import InvalidArgument
from ..models import as_matrix

__all__ = [
    "RipReport",
    "RIP_BUDGET",
    "STRICT_THRESHOLD",
    "PROOF_THRESHOLD",
    "rip_constant_exact",
    "rip_deviation",
    "check_cross_term",
    "stability_constant",
    "stability_regime",
]

RIP_BUDGET = 10**6
# K(delta) is finite below 1/9; the stricter 1/18 threshold is reported alongside
STRICT_THRESHOLD = 1.0 / 18.0
PROOF_THRESHOLD = 1.0 / 9.0

_CHUNK = 8192


@dataclass(frozen=True)
class RipReport:
    s1: int
    s2: int
    delta: float
    n_subsets_enumerated: int
    argmax_supports: tuple


def _full_gram(A):
    m, n = A.shape
    G = np.empty((n + m, n + m))
    G[:n, :n] = A.T @ A
    G[:n, n:] = A.T
    G[n:, :n] = A
    G[n:, n:] = np.eye(m)
    return G


def rip_deviation(A, T, V):
    """Deviation ``max(lam_max - 1, 1 - lam_min)`` of the Gram of ``Phi`` on ``T`` and ``n + V``."""
    A = as_matrix(A)
    m, n = A.shape
    idx = np.concatenate([np.asarray(T, dtype=int), n + np.asarray(V, dtype=int)])
    if idx.size == 0:
        return 0.0
    G = _full_gram(A)[np.ix_(idx, idx)]
    ev = np.linalg.eigvalsh(G)
    return float(max(ev[-1] - 1.0, 1.0 - ev[0]))


def rip_constant_exact(A, s1, s2):
    """Enumerate every support pair of sizes ``(s1, s2)`` and return the worst deviation.

    Raises
    ------
    InvalidArgument
        If ``C(n, s1) * C(m, s2)`` exceeds :data:`RIP_BUDGET`.
    """
    A = as_matrix(A)
    m, n = A.shape
    if not (0 <= s1 <= n and 0 <= s2 <= m):
        raise InvalidArgument(f"support sizes must satisfy 0 <= s1 <= {n}, 0 <= s2 <= {m}")
    total = math.comb(n, s1) * math.comb(m, s2)
    if total > RIP_BUDGET:
        raise InvalidArgument(f"enumeration needs {total} subsets, budget is {RIP_BUDGET}")
    if s1 + s2 == 0:
        return RipReport(s1, s2, 0.0, 1, ((), ()))

    G = _full_gram(A)
    pairs = itertools.product(itertools.combinations(range(n), s1), itertools.combinations(range(m), s2))
    best, best_pair, count = -np.inf, ((), ()), 0
    while True:
        chunk = list(itertools.islice(pairs, _CHUNK))
        if not chunk:
            break
        idx = np.array([T + tuple(n + v for v in V) for T, V in chunk], dtype=int)
        sub = G[idx[:, :, None], idx[:, None, :]]
        ev = np.linalg.eigvalsh(sub)
        dev = np.maximum(ev[:, -1] - 1.0, 1.0 - ev[:, 0])
        k = int(np.argmax(dev))
        if dev[k] > best:
            best, best_pair = float(dev[k]), chunk[k]
        count += len(chunk)
    return RipReport(s1, s2, max(best, 0.0), count, best_pair)


def _as_index(a, name, size):
    a = np.asarray(a, dtype=int).reshape(-1)
    if a.size and (a.min() < 0 or a.max() >= size):
        raise InvalidArgument(f"{name} has indices outside [0, {size})")
    if np.unique(a).size != a.size:
        raise InvalidArgument(f"{name} has repeated indices")
    return a


def check_cross_term(A, T1, T2, V1, V2, delta, s1=None, s2=None):
    """Check the cross-term bound for two disjointly supported vectors.

    For all ``(x1, f1)`` on ``(T1, V1)`` and ``(x2, f2)`` on ``(T2, V2)``,
    ``|<Phi(x1; f1), Phi(x2; f2)>|`` must not exceed ``delta`` times the
    product of their norms. The worst ratio over all such pairs is the
    largest singular value of ``Phi_{S1}^T Phi_{S2}``, which is computed
    exactly instead of probed with random vectors.

    Returns
    -------
    passed : bool
        ``ratio <= delta + 1e-10``.
    ratio : float
    """
    A = as_matrix(A)
    m, n = A.shape
    T1, T2 = _as_index(T1, "T1", n), _as_index(T2, "T2", n)
    V1, V2 = _as_index(V1, "V1", m), _as_index(V2, "V2", m)
    if np.intersect1d(T1, T2).size or np.intersect1d(V1, V2).size:
        raise InvalidArgument("supports must be disjoint")
    if s1 is not None and T1.size + T2.size > s1:
        raise InvalidArgument(f"|T1| + |T2| exceeds s1 = {s1}")
    if s2 is not None and V1.size + V2.size > s2:
        raise InvalidArgument(f"|V1| + |V2| exceeds s2 = {s2}")
    i1 = np.concatenate([T1, n + V1])
    i2 = np.concatenate([T2, n + V2])
    if i1.size == 0 or i2.size == 0:
        return True, 0.0
    C = _full_gram(A)[np.ix_(i1, i2)]
    ratio = float(np.linalg.norm(C, 2))
    return ratio <= delta + 1e-10, ratio


def stability_constant(delta):
    """Error amplification ``4 sqrt(13 + 13 delta) / (1 - 9 delta)`` for ``0 <= delta < 1/9``."""
    if not 0 <= delta < PROOF_THRESHOLD:
        raise InvalidArgument(f"delta must lie in [0, 1/9), got {delta}")
    return 4.0 * math.sqrt(13.0 + 13.0 * delta) / (1.0 - 9.0 * delta)


def stability_regime(delta):
    """Which stability threshold ``delta`` satisfies: ``{"strict": < 1/18, "proof": < 1/9}``."""
    return {"strict": bool(delta < STRICT_THRESHOLD), "proof": bool(delta < PROOF_THRESHOLD)}
