"""Certificate battery run by ``okreg selftest``.

Each check builds a small synthetic problem, runs the fast path and
compares it with a brute-force oracle from :mod:`okreg.verify` or a
closed form. Sizes are chosen so the whole battery finishes in seconds.
"""

import math
from dataclasses import dataclass

import numpy as np

from .aogd import AogdAld, AogdConfig, kogd
from .baselines import Kons
from .kernels import Kernel
from .nons import NonsAld, NonsConfig, project_W
from .numerics import rank_one_inverse_update, relative_frobenius
from .verify import (
    global_spectral_check,
    kogd_oracle,
    local_spectral_checks,
    projection_oracle,
    replay_A,
)


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str


def _stream(T, d, seed):
    rng = np.random.default_rng(seed)
    X = rng.uniform(-1.0, 1.0, (T, d))
    y = 0.5 + 0.4 * np.sin(2.0 * X[:, 0]) * np.cos(X[:, 1])
    return X, y


def _nons(X, y, mu=5.0, alpha=0.01, bandwidth=0.7):
    learner = NonsAld(NonsConfig(Kernel.gaussian(bandwidth), mu=mu, alpha=alpha, verify=True))
    for x, t in zip(X, y):
        learner.step(x, t)
    return learner


def check_pointwise(seed):
    X, y = _stream(300, 2, seed)
    alpha = 0.01
    learner = _nons(X, y, alpha=alpha)
    worst_lo, worst_hi = math.inf, -math.inf
    for rec in learner.replay.records:
        if rec.branch != "predicted":
            continue
        fm = learner.fmaps[rec.epoch]
        phi = fm.apply(X[rec.round - 1])
        gap = 1.0 - float(phi @ phi)
        worst_lo, worst_hi = min(worst_lo, gap), max(worst_hi, gap)
    ok = worst_lo >= -1e-9 and worst_hi <= alpha + 1e-9
    return CheckResult("pointwise ALD gap", ok, f"gap in [{worst_lo:.2e}, {worst_hi:.2e}], alpha={alpha}")


def check_spectral(seed):
    X, y = _stream(200, 2, seed)
    alpha = 0.01
    learner = _nons(X, y, alpha=alpha)
    local = local_spectral_checks(learner.replay, learner.fmaps, X, alpha)
    local_ok = all(c <= b + 1e-9 for _, c, b in local)
    lhs, bound = global_spectral_check(learner.replay, learner.fmap, X, alpha)
    return CheckResult("spectral error bounds", local_ok and lhs <= bound,
                       f"{len(local)} epochs within |T_j| alpha; global {lhs:.3f} <= {bound:.3f}")


def check_transitions(seed):
    X, y = _stream(500, 2, seed)
    worst = {"replay": 0.0, "logdet": 0.0, "orth": 0.0, "preserve": 0.0}
    n = 0
    for mu in (1.0, 5.0, 15.0):
        learner = _nons(X, y, mu=mu)
        for tr in learner.transitions:
            n += 1
            R = replay_A(learner.replay, tr.fmap, mu, tr.epoch)
            worst["replay"] = max(worst["replay"], relative_frobenius(tr.A_new, R))
            worst["logdet"] = max(worst["logdet"], abs(tr.logdet_change - tr.atoms_added * math.log(mu)))
            k = tr.Q.shape[1]
            worst["orth"] = max(worst["orth"], float(np.linalg.norm(tr.Q.T @ tr.Q - np.eye(k))))
            if k:
                worst["preserve"] = max(worst["preserve"], abs(tr.w_new @ tr.phi_new - tr.w_prev @ tr.phi_old))
    ok = worst["replay"] <= 1e-8 and worst["logdet"] <= 1e-6 and worst["orth"] <= 1e-8 and worst["preserve"] <= 1e-8
    detail = f"{n} transitions; " + ", ".join(f"{k} {v:.1e}" for k, v in worst.items())
    return CheckResult("epoch transitions", ok, detail)


def check_projection(seed):
    rng = np.random.default_rng(seed)
    worst, viol = 0.0, 0.0
    for _ in range(200):
        j = int(rng.integers(1, 8))
        B = rng.standard_normal((j, j))
        A = B @ B.T + 0.1 * np.eye(j)
        w = rng.standard_normal(j) * 2.0
        phi = rng.standard_normal(j)
        U = float(rng.uniform(0.1, 2.0))
        fast = project_W(w, np.linalg.inv(A), phi, U)
        slow = projection_oracle(w, A, phi, U)
        worst = max(worst, float(np.max(np.abs(fast - slow))))
        viol = max(viol, abs(float(fast @ phi)) - U)
    return CheckResult("slab projection", worst <= 1e-6 and viol <= 1e-8,
                       f"max deviation {worst:.1e}, max violation {viol:.1e}")


def check_exact_modes(seed):
    X, y = _stream(150, 2, seed)
    k = Kernel.gaussian(0.7)
    a = AogdAld(AogdConfig(k, 2.0, 0.0, 10))
    b = kogd(k, 2.0)
    pa = np.array([a.step(x, t).y_hat for x, t in zip(X, y)])
    pb = np.array([b.step(x, t).y_hat for x, t in zip(X, y)])
    gap_kogd = float(max(np.max(np.abs(pa - pb)), np.max(np.abs(pa - kogd_oracle(k, X, y, 2.0)))))
    rng = np.random.default_rng(seed)
    Z = rng.standard_normal((150, 2))
    Z /= np.linalg.norm(Z, axis=1, keepdims=True)
    imp = Kons(Kernel.linear(), mu=1.0)
    exp_ = Kons(Kernel.linear(), mu=1.0, explicit=True)
    gap_kons = max(abs(imp.step(z, t).y_hat - exp_.step(z, t).y_hat) for z, t in zip(Z, y))
    return CheckResult("exact-mode equivalences", gap_kogd <= 1e-10 and gap_kons <= 1e-8,
                       f"AOGD(alpha=0) vs KOGD and dense oracle {gap_kogd:.1e}; implicit vs explicit KONS {gap_kons:.1e}")


def check_sherman_morrison(seed):
    rng = np.random.default_rng(seed)
    dim = 50
    A = np.eye(dim)
    inv = np.eye(dim)
    for _ in range(1000):
        u = rng.standard_normal(dim) / math.sqrt(dim)
        c = float(rng.uniform(0.0, 1.0))
        A += c * np.outer(u, u)
        inv = rank_one_inverse_update(inv, u, c)
    drift = relative_frobenius(inv, np.linalg.inv(A))
    return CheckResult("Sherman-Morrison drift", drift <= 1e-6, f"{drift:.1e} after 1000 updates at dim {dim}")


CHECKS = (check_pointwise, check_spectral, check_transitions, check_projection,
          check_exact_modes, check_sherman_morrison)


def run_battery(seed=0):
    return [check(seed) for check in CHECKS]
