"""Adaptive online functional gradient descent with ALD-approximated gradients.

The hypothesis is a kernel expansion ``f = sum_i a_i k(x_i, .)`` over a
buffer of stored instances. While the buffer is smaller than the capacity
``B0`` and the new instance is approximately linearly dependent on it, the
gradient ``g k(x, .)`` is replaced by its projection ``g sum_i beta_i
k(x_i, .)`` and nothing is stored. Otherwise the exact gradient is used and
the instance is appended. After every step the hypothesis is radially
projected back onto the RKHS ball of radius ``U``.
"""

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .dictionary import Dictionary
from .errors import ConsistencyError, InputError
from .kernels import Kernel

AUDIT_EVERY = 100
AUDIT_TOL = 1e-4
_MAX_FORMULA_ARG = 2**62


def capacity_formula(d, T):
    """floor((sqrt(d^2 + 4 d T) - d) / 2), computed in exact integer arithmetic."""
    if int(d) != d or int(T) != T or d < 1 or T < 1:
        raise InputError("d and T must be positive integers")
    d, T = int(d), int(T)
    if d > _MAX_FORMULA_ARG or T > _MAX_FORMULA_ARG:
        raise InputError("d or T too large for the capacity formula")
    # floor((sqrt(n) - d) / 2) == floor((isqrt(n) - d) / 2) for integer d
    return (math.isqrt(d * d + 4 * d * T) - d) // 2


def default_capacity(d, T):
    """Buffer capacity for dimension ``d`` and horizon ``T``, floored at 1."""
    return max(1, capacity_formula(d, T))


@dataclass
class AogdConfig:
    kernel: Kernel = field(default_factory=Kernel)
    U: float = 2.0
    alpha: float = 0.0
    capacity: int = 1
    mode: str = "ald"  # "ald" or "exact_kogd"

    def __post_init__(self):
        if self.mode not in ("ald", "exact_kogd"):
            raise InputError(f"unknown mode {self.mode!r}")
        if not self.U > 0:
            raise InputError("U must be positive")
        if not 0.0 <= self.alpha <= 1.0:
            raise InputError("alpha must lie in [0, 1]")
        if int(self.capacity) != self.capacity or self.capacity < 1:
            raise InputError("capacity must be a positive integer")

    @classmethod
    def for_horizon(cls, kernel, d, T, U=2.0, alpha=None, mode="ald"):
        """Capacity from ``default_capacity(d, T)`` and alpha = 1/T unless given."""
        return cls(kernel, U, 1.0 / T if alpha is None else alpha, default_capacity(d, T), mode)


@dataclass(slots=True)
class StepTrace:
    round: int
    branch: str  # "approx", "exact" or "zero" (no gradient)
    alpha_t: float
    eta: float
    y_hat: float
    size: int
    rescaled: bool = False

    def to_dict(self):
        return asdict(self)

    def to_json(self):
        return json.dumps(self.to_dict())


class AogdAld:
    """Online learner over a growing kernel-expansion buffer.

    Call :meth:`step` once per round with the labeled instance; it returns
    the prediction made before the label was used.
    """

    name = "aogd_ald"

    def __init__(self, config):
        self.config = config
        self.name = "aogd_ald" if config.mode == "ald" else "kogd"
        self.kernel = config.kernel
        self.t = 0
        self.n = 0  # buffer size
        self.grad_norm_acc = 0.0
        self.hyp_norm_sq = 0.0
        self.eta = config.U  # U / sqrt(1 + 0)
        self._X = None
        self._a = np.empty(0)
        self._evals = np.empty(0)
        self._use_ald = config.mode == "ald" and config.alpha > 0.0
        self.dictionary = Dictionary(self.kernel, config.alpha, capacity=config.capacity)

    # buffer views

    @property
    def atoms(self):
        return np.empty((0, 0)) if self._X is None else self._X[: self.n]

    @property
    def coeffs(self):
        return self._a[: self.n]

    @property
    def dict_evals(self):
        """f_t evaluated at each buffered instance."""
        return self._evals[: self.n]

    @property
    def size(self):
        return self.n

    def _grow(self, dim):
        if self._X is None:
            self._X = np.zeros((16, dim))
            self._a = np.zeros(16)
            self._evals = np.zeros(16)
        elif self._X.shape[1] != dim:
            raise InputError(f"dimension mismatch: buffer holds {self._X.shape[1]}-d instances, got {dim}")
        if self.n < self._X.shape[0]:
            return
        cap = 2 * self._X.shape[0]
        X = np.zeros((cap, dim))
        a = np.zeros(cap)
        ev = np.zeros(cap)
        X[: self.n] = self._X[: self.n]
        a[: self.n] = self._a[: self.n]
        ev[: self.n] = self._evals[: self.n]
        self._X, self._a, self._evals = X, a, ev

    def nbytes(self):
        total = self._a.nbytes + self._evals.nbytes
        if self._X is not None:
            total += self._X.nbytes
        d = self.dictionary
        if d._atoms is not None:
            total += d._atoms.nbytes + d._gram.nbytes + d._inv.nbytes
        return total

    # learning

    def _cross(self, x):
        if self.n == 0:
            return np.empty(0)
        return self.kernel.cross(self.atoms, x)

    def predict(self, x):
        x = _as_instance(x)
        return float(self.coeffs @ self._cross(x)) if self.n else 0.0

    def step(self, x, y):
        x = _as_instance(x)
        y = float(y)
        if not math.isfinite(y):
            raise InputError("target must be finite")
        self.t += 1
        cfg = self.config
        n = self.n
        k = self._cross(x)
        y_hat = float(self._a[:n] @ k) if n else 0.0
        g = 2.0 * (y_hat - y)

        res = None
        if self._use_ald and n < cfg.capacity:
            res = self.dictionary.ald_test(x, cross=k)
        approx = res is not None and res.holds
        alpha_t = res.error if res is not None else float("nan")

        if g == 0.0:
            trace = StepTrace(self.t, "zero", alpha_t, self.eta, y_hat, n)
            self._maybe_audit()
            return trace

        kxx = self.kernel.diag(x)
        if approx:
            beta = res.beta
            Kb = self.dictionary.gram @ beta
            grad_sq = g * g * float(beta @ Kb)
            inner = float(beta @ self._evals[:n])
        else:
            grad_sq = g * g * kxx
            inner = y_hat
        self.grad_norm_acc += grad_sq
        eta = cfg.U / math.sqrt(1.0 + self.grad_norm_acc)
        self.eta = eta
        step = eta * g
        norm_sq = max(self.hyp_norm_sq - 2.0 * step * inner + eta * eta * grad_sq, 0.0)

        if approx:
            # while the ALD branch is reachable the buffer and dictionary coincide
            self._a[:n] -= step * beta
            self._evals[:n] -= step * Kb
        else:
            self._grow(x.shape[0])
            self._X[n] = x
            self._a[n] = -step
            self._evals[:n] -= step * k
            self._evals[n] = y_hat - step * kxx
            if res is not None:
                self.dictionary.add_atom(x, y, res)
            self.n = n + 1

        rescaled = False
        if norm_sq > cfg.U * cfg.U:
            scale = cfg.U / math.sqrt(norm_sq)
            self._a[: self.n] *= scale
            self._evals[: self.n] *= scale
            norm_sq *= scale * scale
            rescaled = True
        self.hyp_norm_sq = norm_sq
        self._maybe_audit()
        return StepTrace(self.t, "approx" if approx else "exact", alpha_t, eta, y_hat, self.n, rescaled)

    def _maybe_audit(self):
        if self.t % AUDIT_EVERY == 0:
            self.audit()

    def audit(self):
        """Recompute the cached norm and evaluations; raise if they drifted."""
        n = self.n
        if n == 0:
            return 0.0
        K = self.kernel.matrix(self.atoms, self.atoms)
        evals = K @ self._a[:n]
        norm_sq = float(self._a[:n] @ evals)
        drift = abs(norm_sq - self.hyp_norm_sq) / max(1.0, abs(norm_sq))
        ev_drift = float(np.max(np.abs(evals - self._evals[:n])))
        if drift > AUDIT_TOL or ev_drift > AUDIT_TOL * max(1.0, math.sqrt(abs(norm_sq))):
            raise ConsistencyError(
                f"cached hypothesis drifted at round {self.t}: norm {drift:.3e}, evaluations {ev_drift:.3e}"
            )
        self.hyp_norm_sq = norm_sq
        self._evals[:n] = evals
        return drift


def _as_instance(x):
    x = np.asarray(x, dtype=np.float64).ravel()
    if not np.all(np.isfinite(x)):
        raise InputError("instance must be finite")
    return x


def kogd(kernel, U=2.0):
    """Exact kernel online gradient descent: every gradient is exact and stored."""
    return AogdAld(AogdConfig(kernel, U, 0.0, 1, "exact_kogd"))
