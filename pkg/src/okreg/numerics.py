"""Dense symmetric linear algebra used by the learners and the oracles.

Every routine is a pure function of its inputs. Kernel Gram matrices can
be numerically rank deficient, so factorizations fall back to a single
diagonal jitter of ``JITTER_SCALE * trace / dim`` before giving up.
"""

from typing import NamedTuple

import numpy as np
import scipy.linalg

from ._backend import core
from .errors import InputError, NotSPDError, NumericError, SingularMatrixError

JITTER_SCALE = 1e-10
EIG_FLOOR = 1e-12
SYMMETRY_TOL = 1e-10


class EigenDecomp(NamedTuple):
    values: np.ndarray  # descending
    vectors: np.ndarray  # columns are eigenvectors

    def reconstruct(self):
        return (self.vectors * self.values) @ self.vectors.T


def as_symmetric(m, name="matrix"):
    """Validate a square finite matrix and return an exactly symmetric copy."""
    m = np.array(m, dtype=np.float64, copy=True)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
        raise InputError(f"{name} must be a non-empty square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise InputError(f"{name} has non-finite entries")
    scale = max(1.0, float(np.max(np.abs(m))))
    if np.max(np.abs(m - m.T)) > SYMMETRY_TOL * scale * m.shape[0]:
        raise InputError(f"{name} is not symmetric")
    return 0.5 * (m + m.T)


def jitter(m):
    """Diagonal jitter applied once to a rank-deficient Gram matrix."""
    n = m.shape[0]
    return JITTER_SCALE * max(float(np.trace(m)), 0.0) / n


def eigh(m):
    """Eigendecomposition of a symmetric matrix, eigenvalues descending."""
    m = as_symmetric(m)
    values, vectors = np.linalg.eigh(m)
    return EigenDecomp(values[::-1].copy(), np.ascontiguousarray(vectors[:, ::-1]))


def clamp_eigenvalues(values, floor=EIG_FLOOR):
    """Clamp eigenvalues below ``floor * lambda_max`` to that floor."""
    top = float(np.max(values)) if values.size else 0.0
    if top <= 0.0:
        raise NumericError("matrix has no positive eigenvalue")
    lo = floor * top
    clamped = values < lo
    return np.where(clamped, lo, values), int(np.count_nonzero(clamped))


def rank_one_inverse_update(inv, u, c):
    """Return ``(B + c u u^T)^{-1}`` given ``inv = B^{-1}``, by Sherman-Morrison."""
    if c < 0:
        raise InputError("rank-one update weight must be nonnegative")
    out = np.array(inv, dtype=np.float64, order="C", copy=True)
    if c == 0:
        return out
    u = np.ascontiguousarray(u, dtype=np.float64)
    denom = core.sm_update(out, u, float(c))
    if not denom > 0.0:
        raise NotSPDError(
            f"Sherman-Morrison denominator {denom:.3e} <= 0: positive definiteness lost"
        )
    return out


def _cholesky(m):
    try:
        return scipy.linalg.cho_factor(m, lower=True, check_finite=False)
    except np.linalg.LinAlgError:
        return None


def cholesky_with_jitter(m):
    """Cholesky factor of ``m``, retrying once with diagonal jitter."""
    factor = _cholesky(m)
    if factor is None or not np.all(np.diag(factor[0]) > 0):
        eps = jitter(m)
        if eps > 0:
            factor = _cholesky(m + eps * np.eye(m.shape[0]))
        if factor is None or not np.all(np.diag(factor[0]) > 0):
            raise SingularMatrixError("matrix is singular beyond the jitter policy")
    return factor


def solve_spd(m, rhs):
    """Solve ``m x = rhs`` for SPD ``m`` with one step of iterative refinement."""
    m = as_symmetric(m)
    rhs = np.asarray(rhs, dtype=np.float64)
    if rhs.shape[0] != m.shape[0]:
        raise InputError("dimension mismatch between matrix and right-hand side")
    factor = cholesky_with_jitter(m)
    x = scipy.linalg.cho_solve(factor, rhs, check_finite=False)
    x += scipy.linalg.cho_solve(factor, rhs - m @ x, check_finite=False)
    return x


def inverse_spd(m):
    """Fresh inverse of an SPD matrix via Cholesky, symmetrized."""
    m = as_symmetric(m)
    factor = cholesky_with_jitter(m)
    inv = scipy.linalg.cho_solve(factor, np.eye(m.shape[0]), check_finite=False)
    return 0.5 * (inv + inv.T)


def log_det_spd(m):
    """log det of an SPD matrix from its Cholesky diagonal."""
    m = as_symmetric(m)
    try:
        chol = np.linalg.cholesky(m)
    except np.linalg.LinAlgError as exc:
        raise NotSPDError("matrix is not positive definite") from exc
    diag = np.diag(chol)
    if not np.all(diag > 0):
        raise NotSPDError("non-positive Cholesky pivot")
    return 2.0 * float(np.sum(np.log(diag)))


def spectral_norm(m):
    """Largest singular value (largest |eigenvalue| for symmetric input)."""
    m = np.asarray(m, dtype=np.float64)
    if m.size == 0:
        return 0.0
    if m.shape[0] == m.shape[1] and np.allclose(m, m.T, rtol=0, atol=1e-12):
        return float(np.max(np.abs(np.linalg.eigvalsh(0.5 * (m + m.T)))))
    return float(np.linalg.norm(m, 2))


def frobenius(m):
    return float(np.linalg.norm(m, "fro"))


def relative_frobenius(a, b):
    """||a - b||_F / max(||b||_F, tiny)."""
    denom = max(frobenius(b), np.finfo(float).tiny)
    return frobenius(np.asarray(a) - np.asarray(b)) / denom
