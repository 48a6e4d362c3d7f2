"""Reference learners: kernel ONS, random Fourier feature OGD, Nystrom OGD."""

import json
import math
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .dictionary import Dictionary, build_feature_map
from .errors import InputError, ResourceCapError
from .nons import default_eta

KONS_ROUND_CAP = 3000


@dataclass(slots=True)
class BaselineTrace:
    round: int
    y_hat: float
    size: int
    branch: str = "predicted"

    def to_dict(self):
        return asdict(self)

    def to_json(self):
        return json.dumps(self.to_dict())


def _check(x, y):
    x = np.asarray(x, dtype=np.float64).ravel()
    y = float(y)
    if not (np.all(np.isfinite(x)) and math.isfinite(y)):
        raise InputError("instance and target must be finite")
    return x, y


class Kons:
    """Kernel online Newton step evaluated implicitly through a Gram-space inverse.

    The covariance is ``mu I + sum_i eta g_i^2 phi^_i phi^_i^T`` where
    ``phi^_i`` is either ``k(x_i, .)`` or, when ``alpha`` is given and the
    ALD condition holds, its projection onto the dictionary. The hypothesis
    is kept as ``sum_i coef_i phi^_i``; each ``phi^_i`` is stored as a row
    of coefficients over the dictionary atoms. The inverse of
    ``Phi^^T Phi^ + mu I`` grows by one row and column per round.

    With ``explicit=True`` (linear kernel only) the same recursion runs on
    the raw inputs with an explicit ``d x d`` covariance.
    """

    name = "kons"

    def __init__(self, kernel, mu=1.0, U=1.0, Y=1.0, eta=None, alpha=None,
                 explicit=False, round_cap=KONS_ROUND_CAP):
        if not mu > 0:
            raise InputError("mu must be positive")
        if explicit and kernel.kind != "linear":
            raise InputError("explicit mode needs a finite feature map (linear kernel)")
        self.kernel = kernel
        self.mu = float(mu)
        self.eta = default_eta(U, Y) if eta is None else float(eta)
        self.alpha = alpha
        self.explicit = explicit
        self.round_cap = round_cap
        self.t = 0
        self.dictionary = Dictionary(kernel, 0.0 if alpha is None else alpha)
        self._C = np.zeros((0, 0))  # rows: phi^_i over atoms
        self._s = np.zeros(0)  # sqrt(eta) g_i
        self._g = np.zeros(0)
        self._c = np.zeros(0)
        self._Ginv = np.zeros((0, 0))
        self.ald_rounds = 0
        self._X = None
        self._w = None
        self._A_inv = None

    @property
    def size(self):
        if self.explicit:
            return 0 if self._w is None else self._w.shape[0]
        return self.t

    def nbytes(self):
        if self.explicit:
            return 0 if self._w is None else self._w.nbytes + self._A_inv.nbytes
        d = self.dictionary
        total = self._C.nbytes + self._Ginv.nbytes + 3 * self._s.nbytes
        if self._X is not None:
            total += self._X.nbytes
        if d._atoms is not None:
            total += d._atoms.nbytes + d._gram.nbytes + d._inv.nbytes
        return total

    def coefficients(self):
        """coef_i with f = sum_i coef_i phi^_i."""
        return (-self._g + self._s * self._c) / self.mu

    def step(self, x, y):
        x, y = _check(x, y)
        if self.t >= self.round_cap:
            raise ResourceCapError(f"kernel ONS is capped at {self.round_cap} rounds")
        self.t += 1
        if self.explicit:
            return self._step_explicit(x, y)

        if self.alpha is None:
            # every phi^_i is k(x_i, .), so the coefficient rows are the identity
            k = self._store(x)
            h = k[: self.t - 1]
            y_hat = float(self.coefficients() @ h) if self.t > 1 else 0.0
            g = 2.0 * (y_hat - y)
            inner = h
            self_sq = self.kernel.diag(x)
        else:
            d = self.dictionary
            m = d.size
            k = d.cross(x)
            h = self._C[:, :m] @ k if m else np.zeros(self.t - 1)
            y_hat = float(self.coefficients() @ h) if self.t > 1 else 0.0
            g = 2.0 * (y_hat - y)
            res = d.ald_test(x, cross=k)
            if res.holds:
                self.ald_rounds += 1
                Kb = d.gram @ res.beta
                row = res.beta
                inner = self._C[:, :m] @ Kb
                self_sq = float(res.beta @ Kb)
            else:
                d.add_atom(x, y, res)
                row = np.zeros(m + 1)
                row[m] = 1.0
                inner = h
                self_sq = self.kernel.diag(x)
            self._append_row(row)

        s_t = math.sqrt(self.eta) * g
        b = self._s * s_t * inner
        self._grow_inverse(b, s_t * s_t * self_sq + self.mu)
        self._s = np.append(self._s, s_t)
        self._g = np.append(self._g, g)
        r = np.append(self._s[:-1] * inner, s_t * self_sq)
        v = self._Ginv @ r * g
        self._c = np.append(self._c, 0.0) + v
        return BaselineTrace(self.t, y_hat, self.t)

    def _store(self, x):
        """Append ``x`` to the exact-mode atom store; return k(atoms, x) including itself."""
        n = self.t - 1
        if self._X is None:
            self._X = np.zeros((64, x.shape[0]))
        elif n == self._X.shape[0]:
            self._X = np.vstack([self._X, np.zeros_like(self._X)])
        self._X[n] = x
        return self.kernel.cross(self._X[: n + 1], x)

    def _append_row(self, row):
        rows, cols = self._C.shape
        need = max(cols, row.shape[0])
        C = np.zeros((rows + 1, need))
        C[:rows, :cols] = self._C
        C[rows, : row.shape[0]] = row
        self._C = C

    def _grow_inverse(self, b, d):
        n = self._Ginv.shape[0]
        if n == 0:
            self._Ginv = np.array([[1.0 / d]])
            return
        u = self._Ginv @ b
        schur = d - float(b @ u)
        G = np.empty((n + 1, n + 1))
        G[:n, :n] = self._Ginv + np.outer(u, u) / schur
        G[:n, n] = -u / schur
        G[n, :n] = -u / schur
        G[n, n] = 1.0 / schur
        self._Ginv = G

    def _step_explicit(self, x, y):
        if self._w is None:
            self._w = np.zeros(x.shape[0])
            self._A_inv = np.eye(x.shape[0]) / self.mu
        y_hat = float(self._w @ x)
        g = 2.0 * (y_hat - y)
        v = self._A_inv @ x
        c = self.eta * g * g
        self._A_inv -= np.outer(v, v) * (c / (1.0 + c * float(x @ v)))
        self._w -= g * (self._A_inv @ x)
        return BaselineTrace(self.t, y_hat, x.shape[0])


class Fogd:
    """OGD on paired cos/sin random Fourier features of a Gaussian kernel."""

    name = "fogd"

    def __init__(self, kernel, D=400, eta=0.01, seed=0):
        if kernel.kind != "gaussian":
            raise InputError("random Fourier features need the Gaussian kernel")
        if D < 1 or not eta > 0:
            raise InputError("D must be positive and eta positive")
        self.kernel = kernel
        self.D = int(D)
        self.eta = float(eta)
        self.seed = seed
        self.t = 0
        self.omega = None
        self.w = np.zeros(2 * self.D)

    @property
    def size(self):
        return self.D

    def nbytes(self):
        return self.w.nbytes + (0 if self.omega is None else self.omega.nbytes)

    def _init(self, dim):
        rng = np.random.default_rng(self.seed)
        self.omega = rng.standard_normal((self.D, dim)) / self.kernel.bandwidth

    def features(self, x):
        x = np.asarray(x, dtype=np.float64).ravel()
        if self.omega is None:
            self._init(x.shape[0])
        p = self.omega @ x
        return np.concatenate([np.cos(p), np.sin(p)]) / math.sqrt(self.D)

    def predict(self, x):
        return float(self.w @ self.features(x))

    def step(self, x, y):
        x, y = _check(x, y)
        self.t += 1
        z = self.features(x)
        y_hat = float(self.w @ z)
        self.w -= self.eta * 2.0 * (y_hat - y) * z
        return BaselineTrace(self.t, y_hat, self.D)


class Nogd:
    """OGD on a Nystrom map built from the first ``J`` instances.

    Until the budget fills, the model is a kernel expansion over the
    absorbed instances (OGD in the span of the growing dictionary). When
    the ``J``-th instance arrives the map is frozen and the expansion is
    converted to feature coordinates.
    """

    name = "nogd"

    def __init__(self, kernel, J=400, eta=0.01):
        if J < 1 or not eta > 0:
            raise InputError("J must be positive and eta positive")
        self.kernel = kernel
        self.J = int(J)
        self.eta = float(eta)
        self.t = 0
        self.atoms = []
        self.a = []
        self.fmap = None
        self.w: Optional[np.ndarray] = None

    @property
    def size(self):
        return len(self.atoms)

    @property
    def frozen(self):
        return self.fmap is not None

    def nbytes(self):
        if self.fmap is None:
            return 8 * (len(self.a) + sum(np.size(v) for v in self.atoms))
        return self.w.nbytes + self.fmap.operator.nbytes + self.fmap.atoms.nbytes + self.fmap.gram.nbytes

    def feature_map(self):
        if self.fmap is not None:
            return self.fmap
        X = np.array(self.atoms)
        return build_feature_map(self.kernel, X, self.kernel.matrix(X, X))

    def _freeze(self):
        X = np.array(self.atoms)
        K = self.kernel.matrix(X, X)
        K = 0.5 * (K + K.T)
        self.fmap = build_feature_map(self.kernel, X, K)
        self.w = self.fmap.operator @ (K @ np.array(self.a))

    def step(self, x, y):
        x, y = _check(x, y)
        self.t += 1
        if self.fmap is None:
            X = np.array(self.atoms) if self.atoms else None
            k = self.kernel.cross(X, x) if X is not None else np.zeros(0)
            y_hat = float(np.dot(self.a, k)) if self.a else 0.0
            g = 2.0 * (y_hat - y)
            self.atoms.append(x)
            self.a.append(-self.eta * g)
            if len(self.atoms) == self.J:
                self._freeze()
            return BaselineTrace(self.t, y_hat, len(self.atoms))
        phi = self.fmap.apply(x)
        y_hat = float(self.w @ phi)
        self.w -= self.eta * 2.0 * (y_hat - y) * phi
        return BaselineTrace(self.t, y_hat, self.J)
