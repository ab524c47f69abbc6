import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from robustrec.errors import InvalidArgument
from robustrec.models import (
    EnsembleKind,
    SensingMatrix,
    assemble_cs_instance,
    compute_incoherence,
    gen_balanced_rademacher,
    gen_gaussian_ensemble,
    gen_mc_lowrank,
    gen_row_ensemble,
    gen_sparse_signal,
    make_cs_instance,
    make_mc_instance,
    random_sign_matrix,
    sample_model31,
    sample_model32,
)


def test_gaussian_shape_and_determinism():
    A = gen_gaussian_ensemble(2, 3, 5)
    assert A.shape == (2, 3)
    assert A.kind is EnsembleKind.GAUSSIAN and A.mu is None
    assert np.array_equal(A.data, gen_gaussian_ensemble(2, 3, 5).data)


def test_gaussian_second_moment():
    A = gen_gaussian_ensemble(100, 100, 1).data
    sq = A.ravel() ** 2
    se = sq.std() / math.sqrt(sq.size)
    assert abs(sq.mean() - 0.01) <= 3 * se


def test_zero_dimension_rejected():
    with pytest.raises(InvalidArgument):
        gen_gaussian_ensemble(0, 3, 1)
    with pytest.raises(InvalidArgument):
        gen_row_ensemble(3, 0, "rademacher", 1)


def test_rademacher_entries_exact():
    A = gen_row_ensemble(16, 10, EnsembleKind.RADEMACHER, 3)
    assert A.mu == 1.0
    assert np.all(np.abs(A.data) == 1 / 4)


def test_dct_rows_bounded():
    m, n = 50, 64
    A = gen_row_ensemble(m, n, "dct", 2)
    assert A.mu == 2.0
    rows = A.data * math.sqrt(m)
    assert np.abs(rows).max() <= math.sqrt(2) + 1e-12


@pytest.mark.parametrize("kind", ["rademacher", "dct"])
def test_row_second_moment_is_identity(kind):
    m, n = 10_000, 8
    a = gen_row_ensemble(m, n, kind, 11).data * math.sqrt(m)
    emp = a.T @ a / m
    assert np.abs(emp - np.eye(n)).max() <= 0.1


def test_unknown_kind_rejected():
    with pytest.raises(InvalidArgument):
        gen_row_ensemble(4, 4, "fourier", 1)
    with pytest.raises(InvalidArgument):
        gen_row_ensemble(4, 4, "gaussian", 1)


def test_balanced_design_is_isometric():
    A = gen_balanced_rademacher(64, 4).data
    assert np.allclose(A.T @ A, np.eye(4), atol=1e-15)
    assert np.all(np.abs(A) == 1 / 8)


def test_sparse_signal_contracts():
    x = gen_sparse_signal(4, [0, 2], seed=3)
    assert np.count_nonzero(x) == 2 and set(np.abs(x[[0, 2]])) == {1.0}
    assert not np.any(gen_sparse_signal(5, []))
    assert np.array_equal(gen_sparse_signal(4, [1, 3], magnitudes=[3.5, -1]), [0, 3.5, 0, -1])
    with pytest.raises(InvalidArgument):
        gen_sparse_signal(4, [4])


def test_assemble_cs_instance():
    A = SensingMatrix.from_array(np.eye(2))
    inst = assemble_cs_instance(A, [1, 0], [0, 2], [0, 0], 0.0)
    assert np.array_equal(inst.y, [1.0, 2.0])
    assert list(inst.T) == [0] and list(inst.B) == [1]
    zero = assemble_cs_instance(A, [0, 0], [0, 0], [0, 0], 0.0)
    assert not np.any(zero.y)
    with pytest.raises(InvalidArgument):
        assemble_cs_instance(A, [0, 0], [0, 0], [0.3, 0.4], 0.4)


def test_make_cs_instance_noise_norm_and_freeze():
    inst = make_cs_instance("gaussian", 20, 40, 3, 2, 9, epsilon=0.05)
    assert np.linalg.norm(inst.w) == pytest.approx(0.05, rel=1e-12)
    assert np.allclose(inst.y, inst.A.data @ inst.x_true + inst.f_true + inst.w)
    assert inst.T.size == 3 and inst.B.size == 2
    with pytest.raises(ValueError):
        inst.y[0] = 1.0


def test_lowrank_contracts():
    U, S, V, L = gen_mc_lowrank(12, 12, 4)
    assert np.linalg.norm(L @ L.T - np.eye(12), 2) <= 1e-10
    U, S, V, L = gen_mc_lowrank(30, 3, 5, spectrum="logspaced")
    sv = np.linalg.svd(L, compute_uv=False)
    assert np.count_nonzero(sv > 1e-10 * sv[0]) == 3
    assert np.abs(U.T @ U - np.eye(3)).max() <= 1e-12
    with pytest.raises(InvalidArgument):
        gen_mc_lowrank(3, 4, 1)


def test_incoherence_examples():
    n = 16
    u = np.ones((n, 1)) / math.sqrt(n)
    assert compute_incoherence(u, u) == pytest.approx(1.0, abs=1e-12)
    r = 3
    E = np.eye(n)[:, :r]
    # the entrywise ratio n^2/r * max|U V^T|^2 dominates for coordinate vectors
    assert compute_incoherence(E, E) == pytest.approx(n * n / r)
    with pytest.raises(InvalidArgument):
        compute_incoherence(2 * u, u)


def _incoherence_ratios(U, V):
    n, r = U.shape
    return (
        n / r * np.max(np.sum(U**2, axis=1)),
        n / r * np.max(np.sum(V**2, axis=1)),
        n * n / r * np.max(np.abs(U @ V.T)) ** 2,
    )


@given(st.integers(4, 30), st.integers(1, 4), st.integers(0, 10**6))
def test_incoherence_is_tight(n, r, seed):
    r = min(r, n)
    U, _, V, _ = gen_mc_lowrank(n, r, seed)
    mu = compute_incoherence(U, V)
    ratios = _incoherence_ratios(U, V)
    assert all(x <= mu * (1 + 1e-12) for x in ratios)
    assert any(abs(x - mu) <= 1e-12 * mu for x in ratios)
    assert any(x > 0.99 * mu for x in ratios)


def test_model31_examples():
    n = 200
    K = random_sign_matrix(n, 1)
    O, Om, G, S = sample_model31(n, 0.3, 0.0, K, 2)
    assert not Om.any() and np.array_equal(G, O)
    assert abs(O.mean() - 0.3) <= 4 * math.sqrt(0.3 * 0.7) / n
    O, Om, G, S = sample_model31(n, 0.3, 0.2, K, 3)
    assert not np.any(Om & ~O)
    assert np.array_equal(np.sign(S[Om]), K[Om]) and not np.any(S[~Om])
    with pytest.raises(InvalidArgument):
        sample_model31(n, 0.5, 0.1, K, 1)


def test_model32_examples():
    n = 100
    K = random_sign_matrix(n, 1)
    Gp, Op, W, Om, O, G = sample_model32(n, 0.3, 0.0, K, 2)
    assert not Op.any() and not Om.any() and np.array_equal(O, Gp)
    Gp, Op, W, Om, O, G = sample_model32(n, 0.3, 0.1, K, 3)
    assert not np.any(Om & ~O)
    assert np.array_equal(G, O & ~Om)
    assert np.array_equal(W[Om], K[Om])


@pytest.mark.parametrize("sampler", ["31", "32"])
def test_mask_rates(sampler):
    n, rho, s = 320, 0.3, 0.1  # ~10^5 cells
    K = random_sign_matrix(n, 4)
    if sampler == "31":
        O, Om, _, _ = sample_model31(n, rho, s, K, 8)
    else:
        _, _, _, Om, O, _ = sample_model32(n, rho, s, K, 8)
    N = n * n
    assert abs(O.mean() - rho) <= 3 * math.sqrt(rho * (1 - rho) / N)
    n_o = O.sum()
    assert abs(Om.sum() / n_o - s) <= 3 * math.sqrt(s * (1 - s) / n_o)


def test_make_mc_instance():
    inst = make_mc_instance(30, 2, 0.4, 0.1, 3, model="3.2")
    assert inst.has_auxiliaries
    assert np.array_equal(inst.M_obs, np.where(inst.O, inst.L + inst.S, 0))
    assert np.array_equal(np.sign(inst.S[inst.Omega]), inst.K[inst.Omega])
    full = make_mc_instance(10, 1, 1.0, 0.0, 3)
    assert full.O.all()
    assert not make_mc_instance(10, 1, 0.4, 0.1, 3).has_auxiliaries
    with pytest.raises(InvalidArgument):
        make_mc_instance(10, 1, 1.0, 0.1, 3, model="3.2")


@given(st.integers(0, 2**31))
def test_generators_are_pure(seed):
    a = make_cs_instance("rademacher", 8, 12, 2, 1, seed)
    b = make_cs_instance("rademacher", 8, 12, 2, 1, seed)
    assert np.array_equal(a.y, b.y) and np.array_equal(a.A.data, b.A.data)
