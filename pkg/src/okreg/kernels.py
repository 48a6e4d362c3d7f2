"""Kernel functions, Gram matrices and spectrum diagnostics."""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ._backend import core
from .errors import InputError, InsufficientDataError
from .numerics import EIG_FLOOR, eigh

DECAY_FIT_TOP = 200


@dataclass(frozen=True)
class Kernel:
    """A normalized Gaussian kernel or the linear kernel.

    The Gaussian form is ``exp(-||x - v||^2 / (2 * bandwidth^2))`` so that
    ``k(x, x) = 1``.
    """

    kind: str = "gaussian"
    bandwidth: Optional[float] = 1.0

    def __post_init__(self):
        if self.kind not in ("gaussian", "linear"):
            raise InputError(f"unknown kernel kind {self.kind!r}")
        if self.kind == "gaussian":
            if self.bandwidth is None or not self.bandwidth > 0 or not np.isfinite(self.bandwidth):
                raise InputError("gaussian bandwidth must be a positive finite number")

    @classmethod
    def gaussian(cls, bandwidth):
        return cls("gaussian", float(bandwidth))

    @classmethod
    def linear(cls):
        return cls("linear", None)

    @property
    def normalized(self):
        return self.kind == "gaussian"

    @property
    def gamma(self):
        return 1.0 / (2.0 * self.bandwidth**2)

    def eval(self, x, v):
        x = np.asarray(x, dtype=np.float64).ravel()
        v = np.asarray(v, dtype=np.float64).ravel()
        if x.shape != v.shape:
            raise InputError(f"dimension mismatch: {x.shape[0]} vs {v.shape[0]}")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(v))):
            raise InputError("kernel arguments must be finite")
        if self.kind == "gaussian":
            d = x - v
            return float(np.exp(-self.gamma * float(d @ d)))
        return float(x @ v)

    def diag(self, x):
        """k(x, x)."""
        if self.kind == "gaussian":
            return 1.0
        x = np.asarray(x, dtype=np.float64).ravel()
        return float(x @ x)

    def cross(self, X, x):
        """Vector of k(X_i, x) over the rows of ``X``."""
        X = np.ascontiguousarray(X, dtype=np.float64)
        x = np.ascontiguousarray(x, dtype=np.float64).ravel()
        if X.shape[0] == 0:
            return np.empty(0)
        if X.shape[1] != x.shape[0]:
            raise InputError(f"dimension mismatch: {X.shape[1]} vs {x.shape[0]}")
        if self.kind == "gaussian":
            return core.gaussian_cross(X, x, self.gamma)
        return X @ x

    def matrix(self, X, Y):
        """Cross-Gram matrix with entries k(X_i, Y_j)."""
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        Y = np.atleast_2d(np.asarray(Y, dtype=np.float64))
        if X.shape[1] != Y.shape[1]:
            raise InputError(f"dimension mismatch: {X.shape[1]} vs {Y.shape[1]}")
        if self.kind == "linear":
            return X @ Y.T
        sq = (
            np.einsum("ij,ij->i", X, X)[:, None]
            + np.einsum("ij,ij->i", Y, Y)[None, :]
            - 2.0 * (X @ Y.T)
        )
        return np.exp(-self.gamma * np.maximum(sq, 0.0))

    def to_dict(self):
        return {"kind": self.kind, "bandwidth": self.bandwidth}

    @classmethod
    def from_dict(cls, data):
        return cls(data["kind"], data.get("bandwidth"))


def gram(k, xs):
    """Gram matrix of ``xs`` under kernel ``k``, exactly symmetric."""
    X = np.asarray(xs, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[0] == 0:
        raise InputError("gram of an empty point set")
    if not np.all(np.isfinite(X)):
        raise InputError("points must be finite")
    G = k.matrix(X, X)
    G = 0.5 * (G + G.T)
    if k.kind == "gaussian":
        np.fill_diagonal(G, 1.0)
    return G


def effective_dimension(gram_matrix, mu):
    """sum_i lambda_i / (lambda_i + mu) over the eigenvalues of the Gram matrix."""
    if not mu > 0:
        raise InputError("mu must be positive")
    lam = np.maximum(eigh(gram_matrix).values, 0.0)
    return float(np.sum(lam / (lam + mu)))


@dataclass
class LineFit:
    R0: float
    rate: float  # r for exponential, p for polynomial
    rss: float
    r_squared: float


@dataclass
class DecayFit:
    model: str  # "exponential" or "polynomial"
    exponential: LineFit
    polynomial: LineFit
    n_used: int
    poor_fit: bool

    @property
    def best(self):
        return self.exponential if self.model == "exponential" else self.polynomial

    def to_dict(self):
        return {
            "model": self.model,
            "exponential": vars(self.exponential).copy(),
            "polynomial": vars(self.polynomial).copy(),
            "n_used": self.n_used,
            "poor_fit": self.poor_fit,
        }


def _line_fit(t, logs):
    A = np.column_stack([np.ones_like(t), t])
    coef, *_ = np.linalg.lstsq(A, logs, rcond=None)
    resid = logs - A @ coef
    rss = float(resid @ resid)
    tss = float(np.sum((logs - logs.mean()) ** 2))
    r2 = 1.0 - rss / tss if tss > 1e-300 else float("nan")
    return coef, rss, r2


def fit_decay(eigs):
    """Fit exponential and polynomial decay envelopes to a descending spectrum.

    ``log lambda_i`` is regressed on ``i`` (``lambda_i = R0 r^i``) and on
    ``log i`` (``lambda_i = R0 i^-p``), 1-based. Only the top 200 values
    above ``1e-12 * lambda_max`` enter the fits.
    """
    lam = np.sort(np.asarray(eigs, dtype=np.float64).ravel())[::-1][:DECAY_FIT_TOP]
    if lam.size == 0 or lam[0] <= 0:
        raise InsufficientDataError("need at least 5 positive eigenvalues")
    lam = lam[lam >= EIG_FLOOR * lam[0]]
    if lam.size < 5:
        raise InsufficientDataError(f"need at least 5 positive eigenvalues, got {lam.size}")
    idx = np.arange(1, lam.size + 1, dtype=np.float64)
    logs = np.log(lam)

    (c0, c1), rss_e, r2_e = _line_fit(idx, logs)
    expo = LineFit(R0=float(np.exp(c0)), rate=float(np.exp(c1)), rss=rss_e, r_squared=r2_e)
    (d0, d1), rss_p, r2_p = _line_fit(np.log(idx), logs)
    poly = LineFit(R0=float(np.exp(d0)), rate=float(-d1), rss=rss_p, r_squared=r2_p)

    tie = 1e-12 * max(1.0, float(np.sum(logs**2)))
    model = "exponential" if rss_e < rss_p - tie else "polynomial"
    best = expo if model == "exponential" else poly
    decays = best.rate < 1.0 - 1e-6 if model == "exponential" else best.rate > 1e-6
    poor = (not decays) or not (best.r_squared >= 0.9)
    return DecayFit(model=model, exponential=expo, polynomial=poly, n_used=int(lam.size), poor_fit=bool(poor))


@dataclass
class SpectrumDiagnostics:
    eigenvalues: np.ndarray
    d_eff: dict = field(default_factory=dict)
    decay_fit: Optional[DecayFit] = None

    def to_dict(self):
        return {
            "eigenvalues": [float(v) for v in self.eigenvalues],
            "d_eff": {str(k): float(v) for k, v in self.d_eff.items()},
            "decay_fit": self.decay_fit.to_dict() if self.decay_fit else None,
        }


def spectrum_diagnostics(gram_matrix, mus=(0.1, 1.0, 10.0, 100.0)):
    """Eigenvalues, effective dimensions on a mu grid and a decay fit."""
    lam = np.maximum(eigh(gram_matrix).values, 0.0)
    d_eff = {float(mu): float(np.sum(lam / (lam + mu))) for mu in mus}
    try:
        fit = fit_decay(lam)
    except InsufficientDataError:
        fit = None
    return SpectrumDiagnostics(eigenvalues=lam, d_eff=d_eff, decay_fit=fit)
