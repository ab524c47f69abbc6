"""Proximal maps and projections used by the solvers and certificate builders."""
from __future__ import annotations

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .errors import InvalidArgument, NumericalError
from .models import as_matrix

__all__ = [
    "shrink",
    "svt",
    "AffineProjector",
    "project_affine",
    "project_ball",
    "TangentProjector",
    "pt_apply",
    "ptperp_apply",
    "pmask_apply",
]


def shrink(v, tau):
    """Soft thresholding ``sign(v) * max(|v| - tau, 0)``, elementwise.

    ``tau`` may be a scalar or an array broadcastable against ``v``.
    """
    tau_arr = np.asarray(tau, dtype=float)
    if np.any(tau_arr < 0):
        raise InvalidArgument("threshold must be non-negative")
    v = np.asarray(v, dtype=float)
    return np.sign(v) * np.maximum(np.abs(v) - tau_arr, 0.0)


def svt(M, tau):
    """Singular value thresholding: ``U shrink(Sigma, tau) V^T``."""
    if tau < 0:
        raise InvalidArgument("threshold must be non-negative")
    try:
        U, sig, Vt = np.linalg.svd(np.asarray(M, dtype=float), full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"SVD failed: {exc}") from exc
    sig = np.maximum(sig - tau, 0.0)
    k = int(np.count_nonzero(sig))
    return (U[:, :k] * sig[:k]) @ Vt[:k]


class AffineProjector:
    """Euclidean projection onto ``{(x, f) : A x + f = y}``.

    ``Phi = [A, I]`` is never formed; ``Phi Phi^T = A A^T + I`` is factorized
    once at construction. Projector objects are read-only afterwards.
    """

    def __init__(self, A, y):
        self.A = as_matrix(A)
        self.y = np.asarray(y, dtype=float).reshape(-1)
        m, n = self.A.shape
        if self.y.size != m:
            raise InvalidArgument(f"y has length {self.y.size}, expected {m}")
        self.m, self.n = m, n
        try:
            self.gram_factor = cho_factor(self.A @ self.A.T + np.eye(m), lower=True)
        except LinAlgError as exc:
            raise NumericalError(f"Cholesky of A A^T + I failed: {exc}") from exc

    def phi(self, z):
        return self.A @ z[: self.n] + z[self.n :]

    def phi_adjoint(self, nu):
        return np.concatenate([self.A.T @ nu, nu])

    def __call__(self, z):
        z = np.asarray(z, dtype=float)
        nu = cho_solve(self.gram_factor, self.phi(z) - self.y)
        return z - self.phi_adjoint(nu)


def project_affine(z, proj):
    """``z - Phi^T (A A^T + I)^{-1} (Phi z - y)``."""
    z = np.asarray(z, dtype=float).reshape(-1)
    if z.size != proj.n + proj.m:
        raise InvalidArgument(f"z has length {z.size}, expected {proj.n + proj.m}")
    return proj(z)


def project_ball(r, center, eps):
    """Project ``r`` onto the Euclidean ball of radius ``eps`` around ``center``."""
    if eps < 0:
        raise InvalidArgument("radius must be non-negative")
    r = np.asarray(r, dtype=float)
    center = np.asarray(center, dtype=float)
    d = r - center
    nd = np.linalg.norm(d)
    if nd <= eps:
        return r.copy()
    return center + (eps / nd) * d


class TangentProjector:
    """Projections onto the tangent space ``T = {U X^T + Y V^T}`` and its complement."""

    def __init__(self, U, V):
        U = np.asarray(U, dtype=float)
        V = np.asarray(V, dtype=float)
        if U.ndim != 2 or V.ndim != 2 or U.shape[1] != V.shape[1]:
            raise InvalidArgument(f"U and V must be n x r with equal r, got {U.shape} and {V.shape}")
        self.U, self.V = U, V
        self.n1, self.n2 = U.shape[0], V.shape[0]

    def _check(self, X):
        X = np.asarray(X, dtype=float)
        if X.shape != (self.n1, self.n2):
            raise InvalidArgument(f"expected a {self.n1} x {self.n2} matrix, got {X.shape}")
        return X

    def pt(self, X):
        X = self._check(X)
        U, V = self.U, self.V
        UtX = U.T @ X
        left = U @ UtX
        right = (X @ V) @ V.T
        return left + right - (U @ (UtX @ V)) @ V.T

    def ptperp(self, X):
        X = self._check(X)
        U, V = self.U, self.V
        Y = X - U @ (U.T @ X)
        return Y - (Y @ V) @ V.T


def pt_apply(P, X):
    """``P_T X = U U^T X + X V V^T - U U^T X V V^T``."""
    return P.pt(X)


def ptperp_apply(P, X):
    """``P_{T-perp} X = (I - U U^T) X (I - V V^T)``."""
    return P.ptperp(X)


def pmask_apply(mask, X):
    """Keep the entries of ``X`` on the boolean ``mask`` and zero the rest."""
    X = np.asarray(X, dtype=float)
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != X.shape:
        raise InvalidArgument(f"mask shape {mask.shape} does not match {X.shape}")
    return np.where(mask, X, 0.0)
