import math

import numpy as np
import pytest

from robustrec.certificates import (
    SpectralMode,
    gaussian_norm_bound_probability,
    spectral_check_gaussian,
    spectral_check_rows,
)
from robustrec.errors import InvalidArgument
from robustrec.models import gen_row_ensemble, random_support


def test_large_margin_always_holds():
    assert spectral_check_gaussian(50, 50, 5.0, 200, seed=0) == 1.0


def test_scalar_case_matches_normal_cdf():
    # ||B|| = |g| and the bound is 2, so the frequency estimates P(|g| <= 2) = 0.9544997
    trials = 20000
    freq = spectral_check_gaussian(1, 1, 0.0, trials, seed=4)
    se = math.sqrt(0.9545 * 0.0455 / trials)
    assert abs(freq - 0.9544997) <= 4 * se


def test_frequency_monotone_in_t():
    freqs = [spectral_check_gaussian(10, 20, t, 100, seed=9) for t in (-2.0, -1.0, 0.0, 0.5, 1.0, 3.0)]
    assert freqs == sorted(freqs)


@pytest.mark.parametrize("t", [0.5, 1.0, 2.0, 3.0])
def test_frequency_meets_probability_bound(t):
    trials = 200
    freq = spectral_check_gaussian(20, 30, t, trials, seed=1)
    p = gaussian_norm_bound_probability(t)
    se = math.sqrt(max(p * (1 - p), 1e-12) / trials)
    assert freq >= p - 3 * se


def test_trials_must_be_positive():
    with pytest.raises(InvalidArgument):
        spectral_check_gaussian(2, 2, 0.0, 0, seed=0)


def test_orthonormal_gram_deviation_zero():
    Q, _ = np.linalg.qr(np.random.default_rng(0).standard_normal((9, 6)))
    assert spectral_check_rows(Q, [0, 2, 5], SpectralMode.GRAM) == pytest.approx(0.0, abs=1e-12)


def test_gram_rademacher_regime():
    passes = 0
    for seed in range(100):
        A = gen_row_ensemble(256, 512, "RademacherRows", seed)
        T = random_support(512, 4, seed + 1000)
        passes += spectral_check_rows(A, T, "Gram") <= 0.5
    assert passes >= 95


def test_crosscol_single_column_reduction():
    A = np.random.default_rng(3).standard_normal((6, 5))
    val = spectral_check_rows(A, [2], SpectralMode.CROSS_COL)
    expected = max(abs(A[:, 2] @ A[:, j]) for j in range(5) if j != 2)
    assert val == pytest.approx(expected, rel=1e-12)


def test_crossvec_definition():
    A = np.random.default_rng(5).standard_normal((6, 5))
    v = np.array([1.0, -2.0])
    val = spectral_check_rows(A, [1, 3], SpectralMode.CROSS_VEC, v)
    w = A[:, [1, 3]] @ v
    expected = max(abs(A[:, j] @ w) for j in (0, 2, 4)) * math.sqrt(2) / np.linalg.norm(v)
    assert val == pytest.approx(expected, rel=1e-12)


def test_crossvec_empty_support_rejected():
    with pytest.raises(InvalidArgument):
        spectral_check_rows(np.eye(3), [], "CrossVec")
