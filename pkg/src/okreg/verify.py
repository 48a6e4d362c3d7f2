"""Brute-force oracles and certificates for the budgeted learners.

Everything here is read-only with respect to learner state and is meant
for verification runs and tests, not for timed experiments: the oracles
cost O(T^2) to O(T^3).
"""

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .dictionary import spectral_error_certificate
from .errors import ConvergenceError, InputError
from .kernels import gram
from .numerics import relative_frobenius, spectral_norm

DENSE_CAP = 500
BISECT_ITERS = 200
BISECT_TOL = 1e-10


@dataclass(slots=True)
class RoundRecord:
    round: int
    branch: str  # "predicted" or "expanded"
    epoch: int  # 1-based count of feature maps in use; 0 before the first
    size: int  # dictionary size the record is indexed against
    g: float = 0.0
    eta: float = 0.0
    beta: Optional[np.ndarray] = None  # predicted rounds
    atom: int = -1  # expanded rounds: index of the atom added


@dataclass
class ReplayLog:
    """Per-round history sufficient to rebuild the covariance and feature matrices."""

    records: list = field(default_factory=list)

    def predicted(self, x_round, epoch, size, g, eta, beta):
        self.records.append(RoundRecord(x_round, "predicted", epoch, size, g, eta, np.array(beta, copy=True)))

    def expanded(self, x_round, epoch, size, atom):
        self.records.append(RoundRecord(x_round, "expanded", epoch, size, atom=atom))

    def __len__(self):
        return len(self.records)

    def epoch_rounds(self, epoch):
        return [r for r in self.records if r.branch == "predicted" and r.epoch == epoch]


def replay_A(log, fm, mu, epoch):
    """mu I + sum of eta g^2 phi~ phi~^T over predicted rounds of epochs before ``epoch``.

    ``phi~`` is each round's recorded projection coefficients mapped
    through ``fm`` (the feature map that starts ``epoch``).
    """
    j = fm.size
    A = mu * np.eye(j)
    for rec in log.records:
        if rec.branch != "predicted" or rec.epoch >= epoch:
            continue
        if rec.beta is None:
            raise InputError(f"round {rec.round} has no recorded projection coefficients")
        if rec.size > j:
            raise InputError(f"round {rec.round} is indexed against {rec.size} atoms; map has {j}")
        phi = fm.tilde(rec.beta)
        A += rec.eta * rec.g * rec.g * np.outer(phi, phi)
    return A


def tilde_matrix(log, fm):
    """Columns are the current-map images of every logged round, in order.

    Expanded rounds contribute the image of the atom they added, which the
    final map reproduces exactly.
    """
    cols = []
    for rec in log.records:
        if rec.branch == "predicted":
            cols.append(fm.tilde(rec.beta))
        else:
            e = np.zeros(rec.atom + 1)
            e[rec.atom] = 1.0
            cols.append(fm.tilde(e))
    return np.column_stack(cols) if cols else np.zeros((fm.size, 0))


def global_spectral_check(log, fm, X, alpha, kernel=None):
    """Return ``(||K_T - Phi~^T Phi~||_2, T sqrt(alpha))`` for the logged stream ``X``.

    ``fm`` may be None when no atom was ever stored; ``kernel`` is then
    required and every feature is zero.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    T = X.shape[0]
    if T != len(log):
        raise InputError(f"log has {len(log)} rounds but {T} points were given")
    if T > DENSE_CAP:
        raise InputError(f"dense check limited to {DENSE_CAP} rounds")
    if fm is None:
        if kernel is None:
            raise InputError("need a kernel when there is no feature map")
        return spectral_norm(gram(kernel, X)), T * math.sqrt(alpha)
    K = gram(fm.kernel, X)
    P = tilde_matrix(log, fm)
    return spectral_norm(K - P.T @ P), T * math.sqrt(alpha)


def local_spectral_checks(log, fm_by_epoch, X, alpha):
    """Per epoch: ``(epoch, ||K_Tj - G^T G||_2, |T_j| alpha)``."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    out = []
    for epoch, fm in fm_by_epoch.items():
        rows = [r.round - 1 for r in log.epoch_rounds(epoch)]
        if not rows:
            continue
        cert = spectral_error_certificate(fm, X[rows])
        out.append((epoch, cert, len(rows) * alpha))
    return out


def projection_oracle(w_tilde, A, phi, U):
    """argmin ||w - w_tilde||_A^2 subject to |w^T phi| <= U, by bisection on the multiplier.

    Stationarity gives ``w(lam) = w_tilde - lam s A^{-1} phi`` with ``s`` the
    sign of the violated side; ``lam`` is bisected until the constraint is
    active.
    """
    w_tilde = np.asarray(w_tilde, dtype=np.float64)
    phi = np.asarray(phi, dtype=np.float64)
    y0 = float(w_tilde @ phi)
    if abs(y0) <= U:
        return w_tilde.copy()
    s = 1.0 if y0 > 0 else -1.0
    d = np.linalg.solve(A, phi)
    q = float(phi @ d)
    if not q > 0:
        raise InputError("constraint direction is degenerate")

    def excess(lam):
        return s * float((w_tilde - lam * s * d) @ phi) - U

    lo, hi = 0.0, 1.0
    while excess(hi) > 0:
        hi *= 2.0
        if hi > 1e300:
            raise ConvergenceError("could not bracket the multiplier")
    for _ in range(BISECT_ITERS):
        mid = 0.5 * (lo + hi)
        val = excess(mid)
        if abs(val) <= BISECT_TOL:
            return w_tilde - mid * s * d
        if val > 0:
            lo = mid
        else:
            hi = mid
    raise ConvergenceError(f"multiplier bisection did not converge in {BISECT_ITERS} iterations")


def inverse_drift(A, A_inv):
    """||A_inv - A^{-1}||_F / ||A^{-1}||_F with a fresh inverse."""
    fresh = np.linalg.inv(A)
    return relative_frobenius(A_inv, 0.5 * (fresh + fresh.T))


def kogd_oracle(kernel, X, y, U):
    """Predictions of exact kernel OGD recomputed densely every round.

    Each round evaluates the expansion directly, forms the full Gram of
    the stored points to get the RKHS norm, and rescales onto the ball.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    stored, coef = [], np.zeros(0)
    acc = 0.0
    preds = []
    for x, t in zip(X, y):
        y_hat = sum(c * kernel.eval(s, x) for s, c in zip(stored, coef))
        preds.append(y_hat)
        g = 2.0 * (y_hat - t)
        if g == 0.0:
            continue
        acc += g * g * kernel.eval(x, x)
        eta = U / math.sqrt(1.0 + acc)
        stored.append(x)
        coef = np.append(coef, -eta * g)
        K = kernel.matrix(np.array(stored), np.array(stored))
        norm = math.sqrt(max(float(coef @ K @ coef), 0.0))
        if norm > U:
            coef *= U / norm
    return np.array(preds)


def explicit_ons_oracle(Phi, y, mu, eta, U):
    """ONS on explicit features with the slab projection deferred to the next round.

    Uses dense solves and the bisection projection, no rank-one updates.
    """
    Phi = np.atleast_2d(np.asarray(Phi, dtype=np.float64))
    j = Phi.shape[1]
    A = mu * np.eye(j)
    w = np.zeros(j)
    w_tilde = None
    preds = []
    for phi, t in zip(Phi, y):
        if w_tilde is not None:
            w = projection_oracle(w_tilde, A, phi, U)
        y_hat = float(w @ phi)
        preds.append(y_hat)
        g = 2.0 * (y_hat - t)
        A = A + eta * g * g * np.outer(phi, phi)
        w_tilde = w - g * np.linalg.solve(A, phi)
    return np.array(preds)
