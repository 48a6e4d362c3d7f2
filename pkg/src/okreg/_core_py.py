"""Pure numpy implementation of the per-round kernels.

Mirrors ``_core.pyx`` function for function; used when the compiled
extension is unavailable or ``OKREG_PURE_PYTHON`` is set.
"""

import numpy as np

NAME = "python"


def gaussian_cross(X, x, gamma):
    """exp(-gamma * ||X_i - x||^2) for every row of ``X``."""
    diff = X - x
    return np.exp(-gamma * np.einsum("ij,ij->i", diff, diff))


def sm_update(inv, u, c):
    """In-place ``inv <- (inv^{-1} + c u u^T)^{-1}``; returns the denominator.

    The matrix is left untouched when the denominator is not positive.
    """
    v = inv @ u
    denom = 1.0 + c * float(u @ v)
    if denom <= 0.0:
        return denom
    inv -= np.outer(v, v) * (c / denom)
    return denom


def slab_project(w_tilde, A_inv, phi, U):
    """Return ``(w, m)``: the A-norm projection of ``w_tilde`` onto |w.phi| <= U."""
    y_tilde = float(w_tilde @ phi)
    m = np.sign(y_tilde) * max(abs(y_tilde) - U, 0.0)
    if m == 0.0:
        return w_tilde.copy(), 0.0
    v = A_inv @ phi
    q = float(phi @ v)
    if q <= 0.0:
        return w_tilde.copy(), np.nan
    return w_tilde - (m / q) * v, m


def ons_round(A, A_inv, w, w_pending, has_pending, phi, y, eta, U):
    """One ONS prediction round in place.

    Resolves the pending projection against ``phi`` (writing the result
    into ``w``), predicts, applies the rank-one update to ``A`` and
    ``A_inv`` and writes the unprojected next iterate into ``w_pending``.
    Returns ``(y_hat, g, denom, m)``; a non-positive ``denom`` means
    ``A_inv`` was left unchanged because definiteness was lost.
    """
    m = 0.0
    if has_pending:
        w_new, m = slab_project(w_pending, A_inv, phi, U)
        w[:] = w_new
    y_hat = float(w @ phi)
    g = 2.0 * (y_hat - y)
    c = eta * g * g
    A += c * np.outer(phi, phi)
    denom = sm_update(A_inv, phi, c)
    if denom <= 0.0:
        return y_hat, g, denom, m
    w_pending[:] = w - g * (A_inv @ phi)
    return y_hat, g, denom, m
