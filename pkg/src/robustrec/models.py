"""Random models for corrupted compressed sensing and corrupted matrix completion.

Every generator here is a pure function of its arguments: the ``seed``
argument fully determines the output. Arrays returned inside the dataclasses
are marked read-only.

Masks are boolean ``n x n`` arrays.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.fft import dct

from .errors import InvalidArgument

__all__ = [
    "EnsembleKind",
    "SensingMatrix",
    "CsInstance",
    "McInstance",
    "gen_gaussian_ensemble",
    "gen_row_ensemble",
    "gen_balanced_rademacher",
    "gen_sparse_signal",
    "random_support",
    "assemble_cs_instance",
    "make_cs_instance",
    "gen_mc_lowrank",
    "compute_incoherence",
    "random_sign_matrix",
    "sample_model31",
    "sample_model32",
    "make_mc_instance",
]


class EnsembleKind(str, enum.Enum):
    GAUSSIAN = "GaussianIid"
    RADEMACHER = "RademacherRows"
    DCT = "SubsampledDct"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        aliases = {
            "gaussian": cls.GAUSSIAN,
            "gaussianiid": cls.GAUSSIAN,
            "rademacher": cls.RADEMACHER,
            "rademacherrows": cls.RADEMACHER,
            "dct": cls.DCT,
            "subsampleddct": cls.DCT,
        }
        try:
            return aliases[str(value).lower()]
        except KeyError:
            raise InvalidArgument(f"unknown ensemble kind {value!r}") from None


def _frozen(a):
    a = np.asarray(a)
    a.setflags(write=False)
    return a


def _rng(seed):
    if seed is None or int(seed) < 0:
        raise InvalidArgument(f"seed must be a non-negative integer, got {seed!r}")
    return np.random.default_rng(int(seed))


@dataclass(frozen=True)
class SensingMatrix:
    """An ``m x n`` measurement matrix together with how it was drawn.

    ``mu`` is the coherence bound ``||a||_inf <= sqrt(mu)`` of the row
    distribution; it is ``None`` for the Gaussian ensemble.
    """

    data: np.ndarray
    kind: EnsembleKind
    mu: float | None
    seed: int | None

    @property
    def m(self):
        return self.data.shape[0]

    @property
    def n(self):
        return self.data.shape[1]

    @property
    def shape(self):
        return self.data.shape

    @classmethod
    def from_array(cls, data, kind=EnsembleKind.GAUSSIAN, mu=None, seed=None):
        data = np.array(data, dtype=float)
        if data.ndim != 2 or 0 in data.shape:
            raise InvalidArgument(f"sensing matrix must be a nonempty 2-D array, got shape {data.shape}")
        return cls(_frozen(data), EnsembleKind.parse(kind), mu, seed)


def as_matrix(A):
    """Return the dense array behind ``A`` (a SensingMatrix or array-like)."""
    if isinstance(A, SensingMatrix):
        return A.data
    return np.asarray(A, dtype=float)


@dataclass(frozen=True)
class CsInstance:
    """Ground truth and observation for ``y = A x + f + w``."""

    A: SensingMatrix
    x_true: np.ndarray
    f_true: np.ndarray
    w: np.ndarray
    y: np.ndarray
    epsilon: float
    T: np.ndarray
    B: np.ndarray


@dataclass(frozen=True)
class McInstance:
    """Low-rank matrix, observation masks and corruption for matrix completion.

    The auxiliary sets (``GammaPrime``, ``OmegaPrime``, ``W``) are only
    present for instances drawn with the auxiliary-set sampler
    (``model="3.2"``); otherwise they are ``None``.
    """

    n: int
    r: int
    U: np.ndarray
    Sigma: np.ndarray
    V: np.ndarray
    L: np.ndarray
    mu: float
    O: np.ndarray
    Omega: np.ndarray
    Gamma: np.ndarray
    K: np.ndarray
    S: np.ndarray
    M_obs: np.ndarray
    rho: float
    s: float
    GammaPrime: np.ndarray | None = None
    OmegaPrime: np.ndarray | None = None
    W: np.ndarray | None = None

    @property
    def has_auxiliaries(self):
        return self.GammaPrime is not None


# --------------------------------------------------------------------------
# compressed sensing ensembles


def gen_gaussian_ensemble(m, n, seed):
    """iid N(0, 1/m) entries."""
    if m < 1 or n < 1:
        raise InvalidArgument(f"dimensions must be positive, got m={m}, n={n}")
    rng = _rng(seed)
    data = rng.standard_normal((m, n)) / np.sqrt(m)
    return SensingMatrix(_frozen(data), EnsembleKind.GAUSSIAN, None, int(seed))


def _dct_basis(n):
    # rows are orthonormal DCT-II basis vectors
    return dct(np.eye(n), norm="ortho", axis=0)


def gen_row_ensemble(m, n, kind, seed):
    """Rows ``a_i^T / sqrt(m)`` with ``a_i`` iid, ``E[a a^T] = I`` and bounded entries.

    ``RademacherRows`` draws ``a`` with iid +-1 entries (mu = 1).
    ``SubsampledDct`` picks a row of the orthonormal DCT-II matrix uniformly at
    random, scales it by ``sqrt(n)`` and flips its sign at random (mu = 2).
    """
    kind = EnsembleKind.parse(kind)
    if m < 1 or n < 1:
        raise InvalidArgument(f"dimensions must be positive, got m={m}, n={n}")
    rng = _rng(seed)
    if kind is EnsembleKind.RADEMACHER:
        a = rng.choice(np.array([-1.0, 1.0]), size=(m, n))
        mu = 1.0
    elif kind is EnsembleKind.DCT:
        rows = rng.integers(0, n, size=m)
        signs = rng.choice(np.array([-1.0, 1.0]), size=(m, 1))
        a = np.sqrt(n) * _dct_basis(n)[rows] * signs
        mu = 2.0
    else:
        raise InvalidArgument(f"gen_row_ensemble does not draw {kind.value}; use gen_gaussian_ensemble")
    return SensingMatrix(_frozen(a / np.sqrt(m)), kind, mu, int(seed))


def gen_balanced_rademacher(m, n):
    """Deterministic +-1/sqrt(m) design whose rows cycle through all 2**n sign patterns.

    When ``2**n`` divides ``m`` the columns are exactly orthonormal and the
    empirical second moment of the rows is exactly the identity, so the
    matrix is a zero-variance member of the ``RademacherRows`` model. Used to
    build small-``n`` instances with a provably small two-sided RIP constant.
    """
    if m < 1 or n < 1:
        raise InvalidArgument(f"dimensions must be positive, got m={m}, n={n}")
    if n > 20:
        raise InvalidArgument("balanced design needs n <= 20")
    patterns = (np.arange(m)[:, None] >> np.arange(n)[None, :]) & 1
    a = 1.0 - 2.0 * patterns
    return SensingMatrix(_frozen(a / np.sqrt(m)), EnsembleKind.RADEMACHER, 1.0, None)


# --------------------------------------------------------------------------
# sparse vectors


def random_support(size, k, seed):
    """A uniformly random ``k``-subset of ``range(size)``, sorted."""
    if not 0 <= k <= size:
        raise InvalidArgument(f"cannot choose {k} indices out of {size}")
    rng = _rng(seed)
    return np.sort(rng.choice(size, size=k, replace=False))


def gen_sparse_signal(n, support, magnitudes=None, seed=0):
    """Vector of length ``n`` that is zero off ``support``.

    Parameters
    ----------
    n : int
    support : sequence of int
    magnitudes : None or sequence of float
        ``None`` draws iid symmetric +-1 entries on the support; otherwise the
        given values are placed on ``support`` in order.
    seed : int
    """
    support = np.asarray(support, dtype=int).reshape(-1)
    if support.size and (support.min() < 0 or support.max() >= n):
        raise InvalidArgument(f"support index out of range for n={n}")
    if np.unique(support).size != support.size:
        raise InvalidArgument("support has repeated indices")
    x = np.zeros(n)
    if magnitudes is None:
        rng = _rng(seed)
        x[support] = rng.choice(np.array([-1.0, 1.0]), size=support.size)
    else:
        values = np.asarray(magnitudes, dtype=float).reshape(-1)
        if values.size != support.size:
            raise InvalidArgument(f"{values.size} values given for a support of size {support.size}")
        x[support] = values
    return x


def assemble_cs_instance(A, x, f, w, epsilon):
    """Bundle ``y = A x + f + w``; supports are read from the nonzero patterns."""
    if not isinstance(A, SensingMatrix):
        A = SensingMatrix.from_array(A)
    x = np.asarray(x, dtype=float).reshape(-1)
    f = np.asarray(f, dtype=float).reshape(-1)
    w = np.asarray(w, dtype=float).reshape(-1)
    if x.size != A.n or f.size != A.m or w.size != A.m:
        raise InvalidArgument(f"shape mismatch: A is {A.shape}, x {x.size}, f {f.size}, w {w.size}")
    if epsilon < 0:
        raise InvalidArgument("epsilon must be non-negative")
    if np.linalg.norm(w) > epsilon * (1 + 1e-12):
        raise InvalidArgument(f"noise norm {np.linalg.norm(w):.6g} exceeds epsilon={epsilon:.6g}")
    y = A.data @ x + f + w
    return CsInstance(
        A=A,
        x_true=_frozen(x.copy()),
        f_true=_frozen(f.copy()),
        w=_frozen(w.copy()),
        y=_frozen(y),
        epsilon=float(epsilon),
        T=_frozen(np.flatnonzero(x)),
        B=_frozen(np.flatnonzero(f)),
    )


def _noise_of_norm(m, epsilon, rng):
    if epsilon == 0:
        return np.zeros(m)
    g = rng.standard_normal(m)
    return epsilon * g / np.linalg.norm(g)


def make_cs_instance(ensemble, m, n, sparsity, corruption, seed, epsilon=0.0, corruption_scale=1.0):
    """Draw a full instance: ensemble, random supports, random signs, noise of norm ``epsilon``.

    ``corruption_scale`` multiplies the +-1 corruption values.
    """
    ss = np.random.SeedSequence(int(seed))
    s_a, s_t, s_b, s_x, s_f, s_w = (int(c.generate_state(1)[0]) for c in ss.spawn(6))
    kind = EnsembleKind.parse(ensemble)
    if kind is EnsembleKind.GAUSSIAN:
        A = gen_gaussian_ensemble(m, n, s_a)
    else:
        A = gen_row_ensemble(m, n, kind, s_a)
    T = random_support(n, sparsity, s_t)
    B = random_support(m, corruption, s_b)
    x = gen_sparse_signal(n, T, seed=s_x)
    f = corruption_scale * gen_sparse_signal(m, B, seed=s_f)
    w = _noise_of_norm(m, epsilon, _rng(s_w))
    return assemble_cs_instance(A, x, f, w, epsilon)


# --------------------------------------------------------------------------
# matrix completion


def _haar_orthonormal(n, r, rng):
    g = rng.standard_normal((n, r))
    q, R = np.linalg.qr(g)
    # sign fix makes the distribution exactly rotation invariant
    d = np.sign(np.diag(R))
    d[d == 0] = 1.0
    return q * d


def gen_mc_lowrank(n, r, seed, spectrum="unit"):
    """Random rank-``r`` ``n x n`` matrix ``L = U diag(Sigma) V^T``.

    ``U`` and ``V`` are Haar-distributed orthonormal frames. ``spectrum`` is
    ``"unit"`` (all singular values 1) or ``"logspaced"`` (geometric from 1 to 10).

    Returns
    -------
    U, Sigma, V, L
    """
    if not 1 <= r <= n:
        raise InvalidArgument(f"rank must satisfy 1 <= r <= n, got r={r}, n={n}")
    rng = _rng(seed)
    U = _haar_orthonormal(n, r, rng)
    V = _haar_orthonormal(n, r, rng)
    if spectrum == "unit":
        Sigma = np.ones(r)
    elif spectrum == "logspaced":
        Sigma = np.geomspace(1.0, 10.0, r)
    else:
        raise InvalidArgument(f"unknown spectrum {spectrum!r}")
    L = (U * Sigma) @ V.T
    return U, Sigma, V, L


def compute_incoherence(U, V):
    """Smallest ``mu`` with ``||U U^T e_i||^2 <= mu r/n``, same for ``V``, and
    ``||U V^T||_inf <= sqrt(mu r)/n``.
    """
    U = np.asarray(U, dtype=float)
    V = np.asarray(V, dtype=float)
    if U.shape != V.shape or U.ndim != 2:
        raise InvalidArgument(f"U and V must have equal 2-D shapes, got {U.shape} and {V.shape}")
    n, r = U.shape
    if r == 0:
        raise InvalidArgument("incoherence is undefined for r = 0")
    eye = np.eye(r)
    for name, X in (("U", U), ("V", V)):
        if np.max(np.abs(X.T @ X - eye)) > 1e-8:
            raise InvalidArgument(f"{name} does not have orthonormal columns")
    # ||U U^T e_i||^2 equals the squared norm of row i of U
    row_u = np.max(np.sum(U**2, axis=1)) * n / r
    row_v = np.max(np.sum(V**2, axis=1)) * n / r
    joint = np.max(np.abs(U @ V.T)) ** 2 * n**2 / r
    return float(max(row_u, row_v, joint))


def random_sign_matrix(n, seed):
    return _rng(seed).choice(np.array([-1.0, 1.0]), size=(n, n))


def _check_rates(rho, s, s_max):
    if not 0 < rho < 0.5:
        raise InvalidArgument(f"rho must lie in (0, 1/2), got {rho}")
    if not 0 <= s < s_max:
        raise InvalidArgument(f"s must lie in [0, {s_max}), got {s}")


def _corruption_values(mask, K, magnitudes, rng):
    if magnitudes == "unit":
        mag = np.ones(mask.shape)
    elif magnitudes == "uniform":
        mag = rng.uniform(0.5, 2.0, size=mask.shape)
    else:
        raise InvalidArgument(f"unknown corruption magnitudes {magnitudes!r}")
    return np.where(mask, K * mag, 0.0)


def _check_signs(K, n):
    K = np.asarray(K, dtype=float)
    if K.shape != (n, n) or not np.all(np.abs(K) == 1):
        raise InvalidArgument(f"K must be an {n} x {n} matrix of +-1")
    return K


def _model31_masks(n, rho, s, K, rng, magnitudes):
    O = rng.random((n, n)) < rho
    Omega = O & (rng.random((n, n)) < s)
    Gamma = O & ~Omega
    S = _corruption_values(Omega, K, magnitudes, rng)
    return O, Omega, Gamma, S


def sample_model31(n, rho, s, K, seed, magnitudes="unit"):
    """Draw ``(O, Omega, Gamma, S)`` with the independent sampler.

    ``O ~ Ber(rho)``; given membership in ``O`` an entry is corrupted with
    probability ``s``. ``sgn(S) = P_Omega(K)``; magnitudes are 1
    (``"unit"``) or iid uniform on [0.5, 2] (``"uniform"``).
    """
    _check_rates(rho, s, 1.0)
    K = _check_signs(K, n)
    return _model31_masks(n, rho, s, K, _rng(seed), magnitudes)


def _model32_masks(n, rho, s, K, rng):
    GammaPrime = rng.random((n, n)) < (1 - 2 * s) * rho
    OmegaPrime = rng.random((n, n)) < 2 * s * rho / (1 - rho + 2 * s * rho)
    W = rng.choice(np.array([-1.0, 1.0]), size=(n, n))
    Omega = OmegaPrime & (W == K) & ~GammaPrime
    O = GammaPrime | OmegaPrime
    Gamma = O & ~Omega
    return GammaPrime, OmegaPrime, W, Omega, O, Gamma


def sample_model32(n, rho, s, K, seed):
    """Draw the auxiliary-set sampler's masks.

    Its ``(O, Omega)`` has the same joint law as :func:`sample_model31`.

    Returns
    -------
    GammaPrime, OmegaPrime, W, Omega, O, Gamma
        ``GammaPrime ~ Ber((1-2s) rho)`` and
        ``OmegaPrime ~ Ber(2 s rho / (1 - rho + 2 s rho))`` independently,
        ``W`` iid +-1, ``Omega = {OmegaPrime, W = K} minus GammaPrime``,
        ``O = GammaPrime | OmegaPrime`` and ``Gamma = O minus Omega``.
    """
    _check_rates(rho, s, 0.5)
    K = _check_signs(K, n)
    return _model32_masks(n, rho, s, K, _rng(seed))


def make_mc_instance(n, r, rho, s, seed, model="3.1", K=None, magnitudes="unit", spectrum="unit"):
    """Draw a complete matrix-completion instance.

    ``model`` selects the sampler: ``"3.1"`` (independent, see
    :func:`sample_model31`) or ``"3.2"`` (auxiliary sets, see
    :func:`sample_model32`; needed by the dual-certificate construction). ``K``
    defaults to an iid +-1 matrix.

    Unlike :func:`sample_model31`, sampling rates up to ``rho = 1`` are
    accepted (``rho < 1`` for the auxiliary-set sampler): the sampling scheme is well defined
    there even though exact recovery is only expected for ``rho < 1/2``.
    """
    if not 0 < rho <= 1 or (str(model) == "3.2" and rho >= 1):
        raise InvalidArgument(f"rho out of range: {rho}")
    if not 0 <= s < (0.5 if str(model) == "3.2" else 1.0):
        raise InvalidArgument(f"s out of range: {s}")
    ss = np.random.SeedSequence(int(seed))
    s_low, s_k, s_mask, s_mag = (int(c.generate_state(1)[0]) for c in ss.spawn(4))
    U, Sigma, V, L = gen_mc_lowrank(n, r, s_low, spectrum=spectrum)
    K = random_sign_matrix(n, s_k) if K is None else _check_signs(K, n)
    aux = {}
    if str(model) == "3.1":
        O, Omega, Gamma, S = _model31_masks(n, rho, s, K, _rng(s_mask), magnitudes)
    elif str(model) == "3.2":
        Gp, Op, W, Omega, O, Gamma = _model32_masks(n, rho, s, K, _rng(s_mask))
        S = _corruption_values(Omega, K, magnitudes, _rng(s_mag))
        aux = dict(GammaPrime=_frozen(Gp), OmegaPrime=_frozen(Op), W=_frozen(W))
    else:
        raise InvalidArgument(f"unknown model {model!r}; expected '3.1' or '3.2'")
    M_obs = np.where(O, L + S, 0.0)
    return McInstance(
        n=n,
        r=r,
        U=_frozen(U),
        Sigma=_frozen(Sigma),
        V=_frozen(V),
        L=_frozen(L),
        mu=compute_incoherence(U, V),
        O=_frozen(O),
        Omega=_frozen(Omega),
        Gamma=_frozen(Gamma),
        K=_frozen(K),
        S=_frozen(S),
        M_obs=_frozen(M_obs),
        rho=float(rho),
        s=float(s),
        **aux,
    )
