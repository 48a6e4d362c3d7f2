import numpy as np
import pytest

from okreg.baselines import Fogd, Kons, Nogd
from okreg.errors import InputError, ResourceCapError
from okreg.kernels import Kernel, gram

from conftest import uniform_stream


def dense_kons(kernel, X, y, mu, eta):
    """Kernel ONS with f_{t+1} = f_t - g_t A_t^{-1} k(x_t, .), A_t applied through Woodbury."""
    preds, gs, c = [], [], np.zeros(0)
    for t in range(len(X)):
        K = gram(kernel, X[: t + 1])
        y_hat = float(c @ K[:t, t]) if t else 0.0
        preds.append(y_hat)
        g = 2.0 * (y_hat - y[t])
        gs.append(g)
        s = np.sqrt(eta) * np.array(gs)
        M = mu * np.eye(t + 1) + s[:, None] * K * s[None, :]
        e = np.zeros(t + 1)
        e[t] = 1.0
        a = (e - s * np.linalg.solve(M, s * K[:, t])) / mu
        c = np.append(c, 0.0) - g * a
    return np.array(preds)


def test_kons_round_one():
    assert Kons(Kernel.gaussian(1.0)).step([0.3, 0.1], 0.9).y_hat == 0.0


def test_kons_matches_dense_oracle():
    X, y = uniform_stream(50, 2, 17)
    k = Kernel.gaussian(0.6)
    learner = Kons(k, mu=5.0)
    preds = [learner.step(x, t).y_hat for x, t in zip(X, y)]
    assert np.max(np.abs(np.subtract(preds, dense_kons(k, X, y, 5.0, learner.eta)))) <= 1e-10


def test_kons_implicit_equals_explicit_linear(rng):
    Z = rng.standard_normal((200, 2))
    Z /= np.linalg.norm(Z, axis=1, keepdims=True)
    y = rng.uniform(0, 1, 200)
    imp = Kons(Kernel.linear(), mu=1.0)
    exp_ = Kons(Kernel.linear(), mu=1.0, explicit=True)
    gap = max(abs(imp.step(z, t).y_hat - exp_.step(z, t).y_hat) for z, t in zip(Z, y))
    assert gap <= 1e-8
    assert exp_.size == 2 and imp.size == 200


def test_kons_with_ald_on_finite_span(rng):
    # with a 2-d linear kernel the dictionary saturates and every projection is exact
    Z = rng.standard_normal((150, 2))
    Z /= np.linalg.norm(Z, axis=1, keepdims=True)
    y = rng.uniform(0, 1, 150)
    ald = Kons(Kernel.linear(), mu=1.0, alpha=1e-8)
    exp_ = Kons(Kernel.linear(), mu=1.0, explicit=True)
    gap = max(abs(ald.step(z, t).y_hat - exp_.step(z, t).y_hat) for z, t in zip(Z, y))
    assert gap <= 1e-8
    assert ald.dictionary.size == 2
    assert ald.ald_rounds == 148


def test_kons_round_cap():
    learner = Kons(Kernel.gaussian(1.0), round_cap=3)
    for _ in range(3):
        learner.step([0.0], 0.5)
    with pytest.raises(ResourceCapError):
        learner.step([0.0], 0.5)


def test_kons_explicit_needs_linear():
    with pytest.raises(InputError):
        Kons(Kernel.gaussian(1.0), explicit=True)


def test_fogd_zero_weights():
    assert Fogd(Kernel.gaussian(1.0), D=16).step([0.1, 0.2], 1.0).y_hat == 0.0


def test_fogd_large_D_approximates_kernel():
    k = Kernel.gaussian(1.0)
    f = Fogd(k, D=4096, seed=3)
    x, v = np.array([0.2, -0.1, 0.5]), np.array([-0.4, 0.3, 0.0])
    assert abs(f.features(x) @ f.features(v) - k.eval(x, v)) <= 0.05
    assert f.features(x) @ f.features(x) == pytest.approx(1.0)


def test_fogd_unbiased_over_seeds(rng):
    k = Kernel.gaussian(0.8)
    pairs = rng.uniform(-1, 1, (10, 2, 3))
    for x, v in pairs:
        est = np.mean([Fogd(k, D=1024, seed=s).features(x) @ Fogd(k, D=1024, seed=s).features(v)
                       for s in range(20)])
        assert abs(est - k.eval(x, v)) <= 0.02


def test_fogd_step_reduces_loss():
    f = Fogd(Kernel.gaussian(1.0), D=64, eta=0.05, seed=1)
    x, y = np.array([0.3, 0.3]), 0.8
    f.step(x, 0.1)
    before = (f.predict(x) - y) ** 2
    f.step(x, y)
    assert (f.predict(x) - y) ** 2 < before


def test_fogd_needs_gaussian():
    with pytest.raises(InputError):
        Fogd(Kernel.linear())


def test_nogd_single_atom_map():
    k = Kernel.gaussian(1.0)
    n = Nogd(k, J=1, eta=0.1)
    atom = np.array([0.2, 0.4])
    n.step(atom, 1.0)
    assert n.frozen
    x = np.array([-0.3, 0.1])
    assert abs(n.fmap.apply(x)[0]) == pytest.approx(k.eval(atom, x), abs=1e-15)


def test_nogd_freeze_preserves_function_and_size():
    X, y = uniform_stream(60, 2, 3)
    k = Kernel.gaussian(0.6)
    n = Nogd(k, J=20, eta=0.2)
    for x, t in zip(X[:19], y[:19]):
        n.step(x, t)
    n.step(X[19], y[19])
    assert n.frozen
    probe = X[40]
    expansion = float(np.dot(n.a, k.cross(np.array(n.atoms), probe)))
    assert float(n.w @ n.fmap.apply(probe)) == pytest.approx(expansion, abs=1e-8)
    sizes = {n.step(x, t).size for x, t in zip(X[20:], y[20:])}
    assert sizes == {20} and n.size == 20


def test_nogd_full_budget_reproduces_gram():
    X, y = uniform_stream(30, 2, 8)
    k = Kernel.gaussian(0.5)
    n = Nogd(k, J=30, eta=0.1)
    for x, t in zip(X, y):
        n.step(x, t)
    G = n.fmap.apply_many(X)
    assert np.max(np.abs(G.T @ G - gram(k, X))) <= 1e-8


def test_one_prediction_per_round():
    X, y = uniform_stream(40, 2, 1)
    k = Kernel.gaussian(0.5)
    for learner in (Kons(k), Fogd(k, D=32), Nogd(k, J=10, eta=0.1)):
        traces = [learner.step(x, t) for x, t in zip(X, y)]
        assert [tr.round for tr in traces] == list(range(1, 41))
        assert all(np.isfinite(tr.y_hat) for tr in traces)
