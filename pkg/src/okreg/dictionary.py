"""ALD-maintained dictionary of kernel atoms and its Nystrom feature maps.

A :class:`Dictionary` stores the atoms, their Gram matrix and an
incrementally maintained inverse. Feature maps are snapshots: they copy
the atoms and Gram matrix they were built from, so a transition operator
between two epochs can be formed after the dictionary has grown.
"""

import json
import logging
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConsistencyError, InputError, NearSingularWarning, ResourceCapError
from .kernels import Kernel, gram
from .numerics import JITTER_SCALE, clamp_eigenvalues, eigh, inverse_spd, spectral_norm

log = logging.getLogger(__name__)

NEGATIVE_ERROR_TOL = 1e-10
REFRESH_EVERY = 64


@dataclass
class AldResult:
    """Outcome of projecting k(x, .) onto the span of the atoms."""

    beta: np.ndarray
    error: float
    holds: bool
    cross: np.ndarray
    self_value: float = 1.0


@dataclass
class FeatureMap:
    """Explicit map x -> Sigma^{-1/2} U^T (k(atom_i, x))_i for a fixed atom set."""

    kernel: Kernel
    atoms: np.ndarray
    gram: np.ndarray
    operator: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    n_clamped: int = 0

    @property
    def size(self):
        return self.atoms.shape[0]

    def apply(self, x):
        return self.operator @ self.kernel.cross(self.atoms, x)

    def apply_cross(self, k):
        """Map from a precomputed cross-kernel vector (its first ``size`` entries)."""
        return self.operator @ k[: self.size]

    def apply_many(self, X):
        """Columns are the mapped rows of ``X``."""
        return self.operator @ self.kernel.matrix(self.atoms, X)

    def tilde(self, beta):
        """Map of the atom combination ``sum_i beta_i k(atom_i, .)`` over the first len(beta) atoms."""
        beta = np.asarray(beta, dtype=np.float64)
        r = beta.shape[0]
        if r > self.size:
            raise InputError(f"history indexes {r} atoms but the map has {self.size}")
        return self.operator @ (self.gram[:, :r] @ beta)


def build_feature_map(kernel, atoms, gram_matrix):
    dec = eigh(gram_matrix)
    values, n_clamped = clamp_eigenvalues(dec.values)
    if n_clamped:
        log.info("feature map: clamped %d eigenvalue(s) of a %d-atom Gram", n_clamped, len(values))
    operator = dec.vectors.T / np.sqrt(values)[:, None]
    return FeatureMap(
        kernel=kernel,
        atoms=np.array(atoms, copy=True),
        gram=np.array(gram_matrix, copy=True),
        operator=np.ascontiguousarray(operator),
        eigenvalues=values,
        eigenvectors=dec.vectors,
        n_clamped=n_clamped,
    )


def transition_operator(new, old):
    """Matrix carrying coordinates under ``old``'s map into ``new``'s map.

    ``old``'s atoms must be a prefix of ``new``'s. The result has
    orthonormal columns in exact arithmetic.
    """
    if old is None or old.size == 0:
        return np.zeros((new.size, 0))
    j_old = old.size
    if j_old > new.size or not np.array_equal(new.atoms[:j_old], old.atoms):
        raise InputError("old dictionary is not a prefix of the new one")
    return new.operator @ new.gram[:, :j_old] @ old.operator.T


def tilde_feature(fm, historical):
    """Current-map image of a point's recorded approximation from an earlier epoch."""
    beta = historical.beta if isinstance(historical, AldResult) else historical
    return fm.tilde(beta)


def spectral_error_certificate(fm, epoch_points):
    """||K - G^T G||_2 for the points' exact Gram K and mapped features G."""
    X = np.atleast_2d(np.asarray(epoch_points, dtype=np.float64))
    if X.shape[0] == 0:
        return 0.0
    K = gram(fm.kernel, X)
    G = fm.apply_many(X)
    return spectral_norm(K - G.T @ G)


class Dictionary:
    """Atoms selected by the ALD condition with their Gram matrix and inverse.

    Single writer: exactly one learner calls :meth:`add_atom`.
    """

    def __init__(self, kernel, alpha, capacity=None, refresh_every=REFRESH_EVERY):
        if not 0.0 <= alpha <= 1.0:
            raise InputError("ALD threshold must lie in [0, 1]")
        if capacity is not None and capacity < 1:
            raise InputError("capacity must be a positive integer")
        self.kernel = kernel
        self.alpha = float(alpha)
        self.capacity = capacity
        self.refresh_every = refresh_every
        self.size = 0
        self.insertions = 0
        self._atoms = None
        self._targets = np.empty(0)
        self._gram = np.empty((0, 0))
        self._inv = np.empty((0, 0))
        self._fmap: Optional[FeatureMap] = None

    # storage

    def _reserve(self, dim, n):
        cap = 0 if self._atoms is None else self._atoms.shape[0]
        if self._atoms is not None and self._atoms.shape[1] != dim:
            raise InputError(f"dimension mismatch: dictionary holds {self._atoms.shape[1]}-d atoms, got {dim}")
        if n <= cap:
            return
        new_cap = max(8, 2 * cap, n)
        atoms = np.zeros((new_cap, dim))
        targets = np.zeros(new_cap)
        G = np.zeros((new_cap, new_cap))
        inv = np.zeros((new_cap, new_cap))
        m = self.size
        if m:
            atoms[:m] = self._atoms[:m]
            targets[:m] = self._targets[:m]
            G[:m, :m] = self._gram[:m, :m]
            inv[:m, :m] = self._inv[:m, :m]
        self._atoms, self._targets, self._gram, self._inv = atoms, targets, G, inv

    @property
    def dim(self):
        return None if self._atoms is None else self._atoms.shape[1]

    @property
    def atoms(self):
        if self._atoms is None:
            return np.empty((0, 0))
        return self._atoms[: self.size]

    @property
    def targets(self):
        return self._targets[: self.size]

    @property
    def gram(self):
        return self._gram[: self.size, : self.size]

    @property
    def gram_inv(self):
        return self._inv[: self.size, : self.size]

    def __len__(self):
        return self.size

    # ALD

    def cross(self, x):
        if self.size == 0:
            return np.empty(0)
        return self.kernel.cross(self.atoms, x)

    def ald_test(self, x, cross=None):
        x = np.asarray(x, dtype=np.float64).ravel()
        kxx = self.kernel.diag(x)
        if self.size == 0:
            error = kxx
            return AldResult(np.empty(0), error, error <= self.alpha, np.empty(0), kxx)
        k = self.cross(x) if cross is None else np.asarray(cross, dtype=np.float64)[: self.size]
        beta = self.gram_inv @ k
        error = kxx - float(k @ beta)
        if error < -NEGATIVE_ERROR_TOL * max(1.0, kxx):
            raise ConsistencyError(f"negative ALD projection error {error:.3e}")
        error = max(error, 0.0)
        return AldResult(beta, error, error <= self.alpha, k, kxx)

    def add_atom(self, x, y=0.0, res=None):
        """Append ``x`` and update the inverse by the block formula."""
        x = np.asarray(x, dtype=np.float64).ravel()
        if self.capacity is not None and self.size >= self.capacity:
            raise ResourceCapError(f"dictionary capacity {self.capacity} reached")
        if res is None:
            res = self.ald_test(x)
        n = self.size
        if res.cross.shape[0] != n:
            raise InputError("ALD result was computed against a different dictionary")
        self._reserve(x.shape[0], n + 1)
        kxx = res.self_value
        floor = JITTER_SCALE * (float(np.trace(self.gram)) + kxx) / (n + 1)
        delta = res.error
        if delta < floor:
            warnings.warn(
                f"atom {n} is numerically dependent (projection error {delta:.3e}); "
                f"using jittered Schur complement {floor:.3e}",
                NearSingularWarning,
                stacklevel=2,
            )
            delta = floor

        self._atoms[n] = x
        self._targets[n] = y
        self._gram[n, :n] = res.cross
        self._gram[:n, n] = res.cross
        self._gram[n, n] = kxx
        b = res.beta
        inv = self._inv
        if n:
            inv[:n, :n] += np.outer(b, b) / delta
            inv[:n, n] = -b / delta
            inv[n, :n] = -b / delta
        inv[n, n] = 1.0 / delta
        self.size = n + 1
        self.insertions += 1
        if self.refresh_every and self.insertions % self.refresh_every == 0:
            self.refresh_inverse()

    def refresh_inverse(self):
        n = self.size
        if n:
            self._inv[:n, :n] = inverse_spd(self.gram)

    def inverse_residual(self):
        """||K K^{-1} - I||_F."""
        n = self.size
        if n == 0:
            return 0.0
        return float(np.linalg.norm(self.gram @ self.gram_inv - np.eye(n)))

    # Nystrom

    def feature_map(self):
        """Feature map for the current atoms; cached until the next insertion."""
        if self.size == 0:
            raise InputError("feature map of an empty dictionary")
        if self._fmap is None or self._fmap.size != self.size:
            self._fmap = build_feature_map(self.kernel, self.atoms, self.gram)
        return self._fmap

    def snapshot(self):
        """Independent copy safe to read while the original keeps growing."""
        other = Dictionary(self.kernel, self.alpha, self.capacity, self.refresh_every)
        other.size = self.size
        other.insertions = self.insertions
        if self._atoms is not None:
            other._atoms = self._atoms.copy()
            other._targets = self._targets.copy()
            other._gram = self._gram.copy()
            other._inv = self._inv.copy()
        other._fmap = self._fmap
        return other

    # serialization

    def to_dict(self):
        return {
            "kernel": self.kernel.to_dict(),
            "alpha": self.alpha,
            "capacity": self.capacity,
            "atoms": self.atoms.tolist(),
            "targets": self.targets.tolist(),
            "gram": self.gram.tolist(),
        }

    def to_json(self):
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data):
        d = cls(Kernel.from_dict(data["kernel"]), data["alpha"], data.get("capacity"))
        atoms = np.asarray(data["atoms"], dtype=np.float64)
        n = atoms.shape[0]
        if n:
            d._reserve(atoms.shape[1], n)
            d._atoms[:n] = atoms
            d._targets[:n] = np.asarray(data["targets"], dtype=np.float64)
            d._gram[:n, :n] = np.asarray(data["gram"], dtype=np.float64)
            d.size = n
            d.insertions = n
            d.refresh_inverse()
        return d

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))
