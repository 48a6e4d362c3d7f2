import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from okreg.dictionary import build_feature_map
from okreg.errors import InputError
from okreg.kernels import Kernel, gram
from okreg.nons import NonsAld, NonsConfig
from okreg.verify import (
    ReplayLog,
    global_spectral_check,
    inverse_drift,
    kogd_oracle,
    local_spectral_checks,
    projection_oracle,
    replay_A,
    tilde_matrix,
)

from conftest import random_spd, uniform_stream


def small_map(k, X):
    X = np.asarray(X, dtype=float)
    return build_feature_map(k, X, gram(k, X))


def test_replay_empty_log():
    fm = small_map(Kernel.gaussian(1.0), [[0.0], [1.0], [2.5]])
    assert np.array_equal(replay_A(ReplayLog(), fm, 5.0, 3), 5.0 * np.eye(3))


def test_replay_single_round_is_rank_one():
    k = Kernel.gaussian(1.0)
    fm = small_map(k, [[0.0], [1.0]])
    log = ReplayLog()
    beta = np.array([0.7])
    log.predicted(2, 1, 1, g=0.5, eta=0.1, beta=beta)
    A = replay_A(log, fm, 2.0, 2)
    phi = fm.tilde(beta)
    assert np.allclose(A, 2.0 * np.eye(2) + 0.1 * 0.25 * np.outer(phi, phi))
    assert np.linalg.matrix_rank(A - 2.0 * np.eye(2), tol=1e-12) == 1
    # rounds of the epoch being started are excluded
    assert np.array_equal(replay_A(log, fm, 2.0, 1), 2.0 * np.eye(2))


def test_replay_rejects_incomplete_records():
    fm = small_map(Kernel.gaussian(1.0), [[0.0]])
    log = ReplayLog()
    log.predicted(1, 1, 3, 1.0, 1.0, np.ones(3))
    with pytest.raises(InputError):
        replay_A(log, fm, 1.0, 2)


def test_replay_matches_learner_fuzz():
    X, y = uniform_stream(300, 2, 31)
    mu = 5.0
    learner = NonsAld(NonsConfig(Kernel.gaussian(0.5), mu=mu, alpha=0.02, verify=True))
    for x, t in zip(X, y):
        learner.step(x, t)
    assert len(learner.transitions) > 3
    for tr in learner.transitions:
        R = replay_A(learner.replay, tr.fmap, mu, tr.epoch)
        assert np.linalg.norm(R - tr.A_new) / np.linalg.norm(R) <= 1e-8


def test_projection_inside_slab():
    w = np.array([0.2, 0.3])
    assert np.array_equal(projection_oracle(w, np.eye(2), np.array([1.0, 1.0]), 1.0), w)


@settings(max_examples=50, deadline=None)
@given(j=st.integers(1, 6), U=st.floats(0.1, 2.0), seed=st.integers(0, 2**31))
def test_projection_euclidean_closed_form(j, U, seed):
    rng = np.random.default_rng(seed)
    w = 3.0 * rng.standard_normal(j)
    phi = rng.standard_normal(j)
    s = w @ phi
    expected = w if abs(s) <= U else w - (s - math.copysign(U, s)) * phi / (phi @ phi)
    got = projection_oracle(w, np.eye(j), phi, U)
    assert np.allclose(got, expected, atol=1e-8)


def test_projection_is_a_minimizer(rng):
    A = random_spd(rng, 4)
    w = 4.0 * rng.standard_normal(4)
    phi = rng.standard_normal(4)
    p = projection_oracle(w, A, phi, 0.5)
    dist = (p - w) @ A @ (p - w)
    for _ in range(200):
        q = p + 0.05 * rng.standard_normal(4)
        q -= max(abs(q @ phi) - 0.5, 0.0) * np.sign(q @ phi) * phi / (phi @ phi)
        assert (q - w) @ A @ (q - w) >= dist - 1e-9


def test_global_check_full_dictionary():
    X, y = uniform_stream(30, 2, 2)
    learner = NonsAld(NonsConfig(Kernel.gaussian(0.3), alpha=1e-12, verify=True))
    for x, t in zip(X, y):
        learner.step(x, t)
    fm = learner.dictionary.feature_map()
    lhs, bound = global_spectral_check(learner.replay, fm, X, 1e-12)
    assert lhs <= 1e-8
    assert bound == pytest.approx(30e-6)


def test_global_check_alpha_one_bound():
    X, y = uniform_stream(50, 2, 2)
    learner = NonsAld(NonsConfig(Kernel.gaussian(0.5), alpha=1.0, verify=True))
    for x, t in zip(X, y):
        learner.step(x, t)
    assert learner.size == 0 and learner.fmap is None
    assert all(r.branch == "predicted" for r in learner.replay.records)
    lhs, bound = global_spectral_check(learner.replay, learner.fmap, X, 1.0, kernel=learner.kernel)
    assert bound == 50.0
    assert lhs <= bound


def test_global_check_200_points():
    X, y = uniform_stream(200, 2, 40)
    alpha = 1e-3
    learner = NonsAld(NonsConfig(Kernel.gaussian(0.5), alpha=alpha, verify=True))
    for x, t in zip(X, y):
        learner.step(x, t)
    lhs, bound = global_spectral_check(learner.replay, learner.fmap, X, alpha)
    assert bound == pytest.approx(200 * math.sqrt(1e-3))
    assert lhs <= bound
    P = tilde_matrix(learner.replay, learner.fmap)
    assert P.shape == (learner.fmap.size, 200)


def test_global_check_guards():
    X, _ = uniform_stream(10, 2, 0)
    fm = small_map(Kernel.gaussian(1.0), X[:2])
    with pytest.raises(InputError):
        global_spectral_check(ReplayLog(), fm, X, 0.1)


def test_local_checks_within_bound():
    X, y = uniform_stream(200, 2, 41)
    alpha = 0.01
    learner = NonsAld(NonsConfig(Kernel.gaussian(0.5), alpha=alpha, verify=True))
    for x, t in zip(X, y):
        learner.step(x, t)
    checks = local_spectral_checks(learner.replay, learner.fmaps, X, alpha)
    assert checks
    assert all(c <= b + 1e-9 for _, c, b in checks)


def test_inverse_drift(rng):
    A = random_spd(rng, 5)
    assert inverse_drift(A, np.linalg.inv(A)) <= 1e-12
    assert inverse_drift(A, 2 * np.linalg.inv(A)) == pytest.approx(1.0)


def test_kogd_oracle_first_round():
    preds = kogd_oracle(Kernel.gaussian(1.0), [[0.0], [0.0]], [1.0, 1.0], 2.0)
    assert preds[0] == 0.0
    assert preds[1] == pytest.approx(4.0 / math.sqrt(5.0))


def test_oracles_do_not_touch_learner_state():
    X, y = uniform_stream(60, 2, 5)
    learner = NonsAld(NonsConfig(Kernel.gaussian(0.5), alpha=0.02, verify=True))
    for x, t in zip(X, y):
        learner.step(x, t)
    A, w, n = learner.A.copy(), learner.w.copy(), len(learner.replay)
    replay_A(learner.replay, learner.fmap, 1.0, learner.epoch)
    global_spectral_check(learner.replay, learner.fmap, X, 0.02)
    local_spectral_checks(learner.replay, learner.fmaps, X, 0.02)
    assert np.array_equal(A, learner.A) and np.array_equal(w, learner.w)
    assert len(learner.replay) == n
