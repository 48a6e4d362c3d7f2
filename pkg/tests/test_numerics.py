import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from okreg.errors import InputError, NotSPDError, SingularMatrixError
from okreg.numerics import (
    clamp_eigenvalues,
    eigh,
    inverse_spd,
    log_det_spd,
    rank_one_inverse_update,
    relative_frobenius,
    solve_spd,
    spectral_norm,
)

from conftest import random_spd


def test_eigh_identity():
    dec = eigh(np.eye(3))
    assert np.allclose(dec.values, [1, 1, 1])


def test_eigh_diagonal_axis_aligned():
    dec = eigh(np.diag([1.0, 4.0]))
    assert np.allclose(dec.values, [4, 1])
    assert np.allclose(np.abs(dec.vectors), [[0, 1], [1, 0]])


def test_eigh_two_by_two():
    dec = eigh([[2.0, 1.0], [1.0, 2.0]])
    assert np.allclose(dec.values, [3, 1], atol=1e-14)


def test_eigh_rejects_non_finite():
    with pytest.raises(InputError):
        eigh([[1.0, np.nan], [np.nan, 1.0]])


def test_eigh_rejects_asymmetric():
    with pytest.raises(InputError):
        eigh([[1.0, 2.0], [0.0, 1.0]])


@settings(max_examples=30, deadline=None)
@given(n=st.integers(1, 200), seed=st.integers(0, 2**31))
def test_eigh_reconstruction_and_orthonormality(n, seed):
    rng = np.random.default_rng(seed)
    B = rng.standard_normal((n, max(1, n // 2)))
    M = B @ B.T
    dec = eigh(M)
    assert np.all(np.diff(dec.values) <= 1e-12)
    assert np.linalg.norm(dec.reconstruct() - M) <= 1e-8 * (1 + np.linalg.norm(M))
    assert np.linalg.norm(dec.vectors.T @ dec.vectors - np.eye(n)) <= 1e-8


def test_rank_one_update_example():
    out = rank_one_inverse_update(np.eye(2), np.array([1.0, 0.0]), 1.0)
    assert np.allclose(out, [[0.5, 0], [0, 1]], atol=1e-15)


def test_rank_one_update_zero_weight_unchanged():
    inv = np.array([[2.0, 0.5], [0.5, 1.0]])
    assert np.array_equal(rank_one_inverse_update(inv, np.array([3.0, 1.0]), 0.0), inv)


def test_rank_one_update_does_not_mutate_input():
    inv = np.eye(3)
    rank_one_inverse_update(inv, np.ones(3), 2.0)
    assert np.array_equal(inv, np.eye(3))


def test_rank_one_update_100_steps(rng):
    A = random_spd(rng, 5)
    inv = np.linalg.inv(A)
    for _ in range(100):
        u = rng.standard_normal(5)
        c = float(rng.uniform(0.01, 1.0))
        A += c * np.outer(u, u)
        inv = rank_one_inverse_update(inv, u, c)
    assert relative_frobenius(inv, np.linalg.inv(A)) <= 1e-8


def test_rank_one_update_detects_lost_definiteness():
    # not an inverse of an SPD matrix, so the denominator goes negative
    with pytest.raises(NotSPDError):
        rank_one_inverse_update(-np.eye(2), np.array([1.0, 0.0]), 2.0)


def test_rank_one_update_rejects_negative_weight():
    with pytest.raises(InputError):
        rank_one_inverse_update(np.eye(2), np.ones(2), -1.0)


@settings(max_examples=10, deadline=None)
@given(k=st.integers(1, 1000), dim=st.integers(1, 50), seed=st.integers(0, 2**31))
def test_rank_one_composition_matches_fresh_inverse(k, dim, seed):
    rng = np.random.default_rng(seed)
    A = np.eye(dim)
    inv = np.eye(dim)
    for _ in range(k):
        u = rng.standard_normal(dim) / math.sqrt(dim)
        c = float(rng.uniform(0.0, 1.0))
        A += c * np.outer(u, u)
        inv = rank_one_inverse_update(inv, u, c)
    assert relative_frobenius(inv, np.linalg.inv(A)) <= 1e-6


def test_solve_identity():
    b = np.array([1.0, -2.0, 3.0])
    assert np.allclose(solve_spd(np.eye(3), b), b)


def test_solve_diagonal():
    assert np.allclose(solve_spd(np.diag([2.0, 4.0]), np.array([2.0, 4.0])), [1, 1])


def test_solve_residual(rng):
    A = random_spd(rng, 6)
    b = rng.standard_normal(6)
    assert np.linalg.norm(A @ solve_spd(A, b) - b) <= 1e-8


@settings(max_examples=25, deadline=None)
@given(log_cond=st.floats(0.0, 8.0), seed=st.integers(0, 2**31))
def test_solve_residual_up_to_condition_1e8(log_cond, seed):
    rng = np.random.default_rng(seed)
    n = 8
    Qm, _ = np.linalg.qr(rng.standard_normal((n, n)))
    lam = np.logspace(0, -log_cond, n)
    A = (Qm * lam) @ Qm.T
    A = 0.5 * (A + A.T)
    b = rng.standard_normal(n)
    x = solve_spd(A, b)
    assert np.linalg.norm(A @ x - b) <= 1e-8 * max(1.0, np.linalg.norm(b))


def test_solve_singular_beyond_jitter():
    with pytest.raises(SingularMatrixError):
        solve_spd(np.zeros((2, 2)), np.ones(2))


def test_solve_rank_deficient_gram_uses_jitter():
    G = np.ones((2, 2))
    x = solve_spd(G, np.ones(2))
    assert np.all(np.isfinite(x))


def test_solve_dimension_mismatch():
    with pytest.raises(InputError):
        solve_spd(np.eye(2), np.ones(3))


def test_log_det_identity():
    assert log_det_spd(np.eye(4)) == 0.0


def test_log_det_diagonal():
    assert log_det_spd(np.diag([2.0, 8.0])) == pytest.approx(math.log(16.0), abs=1e-14)


def test_log_det_determinant_lemma(rng):
    n, mu = 6, 3.0
    u = rng.standard_normal(n)
    expected = (n - 1) * math.log(mu) + math.log(mu + u @ u)
    assert log_det_spd(mu * np.eye(n) + np.outer(u, u)) == pytest.approx(expected, abs=1e-12)


def test_log_det_not_spd():
    with pytest.raises(NotSPDError):
        log_det_spd(np.diag([1.0, -1.0]))


def test_inverse_spd(rng):
    A = random_spd(rng, 7)
    inv = inverse_spd(A)
    assert np.array_equal(inv, inv.T)
    assert np.linalg.norm(A @ inv - np.eye(7)) <= 1e-10


def test_clamp_eigenvalues():
    vals, n = clamp_eigenvalues(np.array([1.0, 1e-3, 1e-15, -1e-14]))
    assert n == 2
    assert vals[2] == vals[3] == 1e-12


def test_norms():
    M = np.diag([3.0, -5.0])
    assert spectral_norm(M) == 5.0
    assert spectral_norm(np.array([[0.0, 2.0], [0.0, 0.0]])) == pytest.approx(2.0)
    assert relative_frobenius(M, M) == 0.0
