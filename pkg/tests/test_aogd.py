import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from okreg.aogd import AogdAld, AogdConfig, StepTrace, capacity_formula, default_capacity, kogd
from okreg.errors import InputError
from okreg.harness.synthetic import realizable
from okreg.kernels import Kernel
from okreg.verify import kogd_oracle

from conftest import uniform_stream


def test_round_one_hand_trace():
    learner = AogdAld(AogdConfig(Kernel.gaussian(1.0), U=2.0, alpha=0.5, capacity=10))
    tr = learner.step([0.3, -0.2], 1.0)
    assert tr.y_hat == 0.0
    assert tr.branch == "exact"
    assert tr.alpha_t == 1.0
    assert tr.eta == pytest.approx(2.0 / math.sqrt(5.0), abs=1e-15)
    assert learner.coeffs[0] == pytest.approx(4.0 / math.sqrt(5.0), abs=1e-15)
    assert math.sqrt(learner.hyp_norm_sq) == pytest.approx(1.78885438, abs=1e-8)
    assert not tr.rescaled


def test_predict_empty():
    assert AogdAld(AogdConfig(Kernel.gaussian(1.0))).predict([1.0, 2.0]) == 0.0


def test_predict_single_atom():
    learner = AogdAld(AogdConfig(Kernel.gaussian(1.0)))
    x = np.array([0.2, 0.1])
    learner._grow(2)
    learner._X[0] = x
    learner._a[0] = 0.5
    learner.n = 1
    assert learner.predict(x) == 0.5


def test_predict_matches_direct_sum(rng):
    k = Kernel.gaussian(0.7)
    learner = kogd(k, 2.0)
    for x in rng.uniform(-1, 1, (5, 3)):
        learner.step(x, float(rng.uniform()))
    assert learner.size == 5
    for x in rng.uniform(-1, 1, (10, 3)):
        direct = sum(a * k.eval(s, x) for s, a in zip(learner.atoms, learner.coeffs))
        assert learner.predict(x) == pytest.approx(direct, abs=1e-12)


def test_zero_gradient_leaves_state():
    learner = AogdAld(AogdConfig(Kernel.gaussian(1.0), alpha=0.1, capacity=10))
    learner.step([0.0, 0.0], 0.5)
    before = (learner.coeffs.copy(), learner.hyp_norm_sq, learner.grad_norm_acc, learner.size, learner.eta)
    y = learner.predict([0.4, 0.1])
    tr = learner.step([0.4, 0.1], y)
    assert tr.branch == "zero"
    assert np.array_equal(learner.coeffs, before[0])
    assert (learner.hyp_norm_sq, learner.grad_norm_acc, learner.size, learner.eta) == before[1:]


def test_alpha_zero_equals_kogd_mode():
    X, y = uniform_stream(50, 2, 7)
    k = Kernel.gaussian(0.5)
    a = AogdAld(AogdConfig(k, 2.0, 0.0, 5))
    b = kogd(k, 2.0)
    pa = [a.step(x, t).y_hat for x, t in zip(X, y)]
    pb = [b.step(x, t).y_hat for x, t in zip(X, y)]
    assert np.max(np.abs(np.subtract(pa, pb))) <= 1e-10


def test_kogd_matches_dense_oracle():
    X, y = uniform_stream(120, 3, 11)
    k = Kernel.gaussian(0.8)
    learner = kogd(k, 1.0)
    preds = [learner.step(x, t).y_hat for x, t in zip(X, y)]
    assert np.max(np.abs(np.subtract(preds, kogd_oracle(k, X, y, 1.0)))) <= 1e-10


def test_ald_branch_matches_projected_gradient_oracle():
    # the ALD branch is OGD with the projected gradient g sum_i beta_i k(x_i, .)
    X, y = uniform_stream(150, 2, 5)
    k = Kernel.gaussian(1.0)
    learner = AogdAld(AogdConfig(k, 2.0, 0.05, 1000))
    atoms, coef, acc = [], np.zeros(0), 0.0
    for x, t in zip(X, y):
        tr = learner.step(x, t)
        A = np.array(atoms) if atoms else np.zeros((0, 2))
        kx = k.cross(A, x)
        y_hat = float(coef @ kx) if atoms else 0.0
        assert tr.y_hat == pytest.approx(y_hat, abs=1e-10)
        g = 2 * (y_hat - t)
        err = 1.0 - float(kx @ np.linalg.solve(k.matrix(A, A), kx)) if atoms else 1.0
        if atoms and err <= 0.05:
            beta = np.linalg.solve(k.matrix(A, A), kx)
            grad = g * beta
            acc += float(grad @ k.matrix(A, A) @ grad)
            coef = coef - learner.config.U / math.sqrt(1 + acc) * grad
        else:
            acc += g * g
            atoms.append(x)
            coef = np.append(coef, -learner.config.U / math.sqrt(1 + acc) * g)
        K = k.matrix(np.array(atoms), np.array(atoms))
        norm = math.sqrt(coef @ K @ coef)
        if norm > 2.0:
            coef *= 2.0 / norm
    assert learner.size == len(atoms) < 150


def test_norm_bound_and_eta_monotone():
    X, y = uniform_stream(400, 2, 3)
    y = 3.0 * y  # large targets force rescaling
    k = Kernel.gaussian(0.5)
    learner = AogdAld(AogdConfig(k, 1.0, 0.01, 200))
    prev_eta = learner.eta
    rescaled = 0
    for x, t in zip(X, y):
        tr = learner.step(x, t)
        rescaled += tr.rescaled
        A = learner.atoms
        norm = math.sqrt(learner.coeffs @ k.matrix(A, A) @ learner.coeffs)
        assert norm <= 1.0 + 1e-9
        if tr.branch == "zero":
            assert tr.eta == prev_eta
        else:
            assert tr.eta < prev_eta
        prev_eta = tr.eta
    assert rescaled > 0


def test_buffer_capacity_behaviour():
    X, y = uniform_stream(300, 2, 9)
    cap = 6
    learner = AogdAld(AogdConfig(Kernel.gaussian(0.3), 2.0, 0.05, cap))
    for x, t in zip(X, y):
        before = learner.size
        tr = learner.step(x, t)
        if before >= cap:
            assert tr.branch == "exact" and learner.size == before + 1
        if tr.branch == "approx":
            assert learner.size == before <= cap
    assert learner.size > cap
    assert learner.dictionary.size == cap


def test_audit_detects_drift():
    from okreg.errors import ConsistencyError

    learner = kogd(Kernel.gaussian(1.0))
    learner.step([0.0], 1.0)
    learner.hyp_norm_sq += 1.0
    with pytest.raises(ConsistencyError):
        learner.audit()


def test_non_finite_inputs():
    learner = kogd(Kernel.gaussian(1.0))
    with pytest.raises(InputError):
        learner.step([0.0], float("nan"))
    with pytest.raises(InputError):
        learner.step([float("inf")], 0.0)


def test_small_loss_on_realizable_data():
    data, _ = realizable(2000, d=3, n_centers=3, bandwidth=1.0, noise=0.0, seed=4, U=1.0)
    learner = AogdAld(AogdConfig.for_horizon(Kernel.gaussian(1.0), 3, 2000, U=2.0))
    losses = np.array([(learner.step(x, t).y_hat - t) ** 2 for x, t in zip(data.X, data.y)])
    L = np.cumsum(losses)
    assert L[1999] / L[999] < 1.8


def test_capacity_examples():
    assert default_capacity(10, 1000) == 95
    assert capacity_formula(1, 1) == 0
    assert default_capacity(1, 1) == 1
    for d in (1, 7, 100, 12345):
        assert capacity_formula(d, d) == math.floor((math.sqrt(5) - 1) * d / 2)


@settings(max_examples=200, deadline=None)
@given(d=st.integers(1, 10**6), T=st.integers(1, 10**9))
def test_capacity_formula_matches_real_arithmetic(d, T):
    val = capacity_formula(d, T)
    exact = (math.sqrt(d * d + 4 * d * T) - d) / 2
    assert abs(val - math.floor(exact)) <= 1
    # val is the largest integer with val^2 + d val <= d T
    assert val * val + d * val <= d * T < (val + 1) ** 2 + d * (val + 1)


def test_capacity_rejects_bad_input():
    for args in ((0, 5), (3, 0), (1.5, 10), (2**70, 1)):
        with pytest.raises(InputError):
            capacity_formula(*args)


def test_trace_json():
    tr = StepTrace(3, "approx", 0.01, 0.5, 0.2, 4)
    assert '"branch": "approx"' in tr.to_json()


def test_config_validation():
    with pytest.raises(InputError):
        AogdConfig(mode="other")
    with pytest.raises(InputError):
        AogdConfig(capacity=0)
