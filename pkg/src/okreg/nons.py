"""Online Newton step over Nystrom features that grow with an ALD dictionary.

Rounds whose instance fails the ALD test only add an atom; the model is
not updated. The first ALD-holding round after one or more additions
starts a new epoch: a fresh feature map is built, the covariance and the
weight vector are carried into the new coordinates by the transition
operator ``Q``, and the round then proceeds as an ordinary ONS round.

Projection onto ``{w : |w^T phi(x_{t+1})| <= U}`` needs the next
instance, so the unprojected iterate is kept as pending and projected at
the start of the next round that uses it.
"""

import json
import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from ._backend import core
from .dictionary import Dictionary, transition_operator
from .errors import InputError, NotSPDError, NumericError, ResourceCapError
from .kernels import Kernel
from .numerics import inverse_spd, log_det_spd
from .verify import ReplayLog

log = logging.getLogger(__name__)

VARIANTS = ("nons_ald", "con_kons")


def default_eta(U, Y):
    return 1.0 / (4.0 * (U * U + Y * Y))


def exponential_decay_schedule(T):
    """(mu, alpha) for exponentially decaying kernel spectra: mu = 1, alpha = ln^4 T / T^4."""
    if T < 2:
        raise InputError("horizon must be at least 2")
    return 1.0, math.log(T) ** 4 / float(T) ** 4


def polynomial_decay_schedule(T, p):
    """(mu, alpha) for spectra decaying like i^-p: mu = T^(1/(1+p)), alpha = T^(-4p/(1+p))."""
    if T < 2 or not p > 0:
        raise InputError("need T >= 2 and p > 0")
    return float(T) ** (1.0 / (1.0 + p)), float(T) ** (-4.0 * p / (1.0 + p))


@dataclass
class NonsConfig:
    kernel: Kernel = field(default_factory=Kernel)
    mu: float = 1.0
    alpha: float = 0.01
    U: float = 1.0
    Y: float = 1.0
    eta: Optional[float] = None
    init_variant: str = "nons_ald"
    max_size: Optional[int] = None
    verify: bool = False

    def __post_init__(self):
        if self.init_variant not in VARIANTS:
            raise InputError(f"unknown init variant {self.init_variant!r}")
        if not self.mu > 0:
            raise InputError("mu must be positive")
        if not 0.0 <= self.alpha <= 1.0:
            raise InputError("alpha must lie in [0, 1]")
        if not (self.U > 0 and self.Y > 0):
            raise InputError("U and Y must be positive")
        if self.eta is None:
            self.eta = default_eta(self.U, self.Y)
        if not self.eta > 0:
            raise InputError("eta must be positive")
        if self.max_size is not None and self.max_size < 1:
            raise InputError("max_size must be a positive integer")


@dataclass(slots=True)
class StepTraceNons:
    round: int
    epoch: int  # feature dimension in use when the prediction was made
    branch: str  # "expanded" or "predicted"
    alpha_t: float
    y_hat: float
    size: int

    def to_dict(self):
        return asdict(self)

    def to_json(self):
        return json.dumps(self.to_dict())


@dataclass
class Transition:
    """Everything the verification oracles need about one epoch change."""

    round: int
    epoch: int
    Q: np.ndarray
    A_prev: np.ndarray
    A_new: np.ndarray
    w_prev: np.ndarray
    w_new: np.ndarray
    phi_old: np.ndarray
    phi_new: np.ndarray
    fmap: object
    logdet_change: float
    atoms_added: int


def epoch_init_A(A_prev, Q, mu, variant="nons_ald"):
    """Covariance at the start of an epoch, in the new feature coordinates."""
    j, j_old = Q.shape
    A_prev = np.asarray(A_prev, dtype=np.float64)
    if j_old == 0 and A_prev.size == 0:
        A_prev = np.zeros((0, 0))
    if A_prev.shape != (j_old, j_old):
        raise InputError(f"covariance of shape {A_prev.shape} does not match Q of shape {Q.shape}")
    if variant == "nons_ald":
        A = mu * np.eye(j) + Q @ (A_prev - mu * np.eye(j_old)) @ Q.T
    elif variant == "con_kons":
        # Q A Q^T alone is singular on the new directions; they get mu I
        A = Q @ A_prev @ Q.T + mu * (np.eye(j) - Q @ Q.T)
    else:
        raise InputError(f"unknown init variant {variant!r}")
    return 0.5 * (A + A.T)


def epoch_init_w(w_prev, Q, variant="nons_ald"):
    """Weights carried into the new coordinates.

    For ``nons_ald`` pass the projected weight at the epoch's first round;
    for ``con_kons`` the weight used at the last prediction round.
    """
    if variant not in VARIANTS:
        raise InputError(f"unknown init variant {variant!r}")
    w_prev = np.asarray(w_prev, dtype=np.float64).ravel()
    if w_prev.shape[0] != Q.shape[1]:
        raise InputError(f"weight of length {w_prev.shape[0]} does not match Q of shape {Q.shape}")
    return Q @ w_prev


def project_W(w_tilde, A_inv, phi, U):
    """A-norm projection of ``w_tilde`` onto the slab ``|w^T phi| <= U``."""
    w_tilde = np.ascontiguousarray(w_tilde, dtype=np.float64)
    w, m = core.slab_project(w_tilde, np.ascontiguousarray(A_inv, dtype=np.float64),
                             np.ascontiguousarray(phi, dtype=np.float64), float(U))
    if math.isnan(m):
        raise NumericError("projection direction is degenerate (phi^T A^-1 phi = 0)")
    return np.asarray(w)


class NonsAld:
    """Epoch-structured online Newton step with an ALD-grown Nystrom feature map."""

    def __init__(self, config):
        self.config = config
        self.name = config.init_variant
        self.kernel = config.kernel
        self.dictionary = Dictionary(config.kernel, config.alpha)
        self.t = 0
        self.epoch = 0
        self.fmap = None
        self.w = np.zeros(0)
        self.A = np.zeros((0, 0))
        self.A_inv = np.zeros((0, 0))
        self._pending = np.zeros(0)
        self._has_pending = False
        self.flag = False
        self.epoch_starts = []
        self.replay = ReplayLog() if config.verify else None
        self.transitions = []
        self.fmaps = {}
        self.max_violation = 0.0

    @property
    def size(self):
        return self.dictionary.size

    def nbytes(self):
        d = self.dictionary
        total = self.w.nbytes + self.A.nbytes + self.A_inv.nbytes + self._pending.nbytes
        if d._atoms is not None:
            total += d._atoms.nbytes + d._gram.nbytes + d._inv.nbytes
        if self.fmap is not None:
            total += self.fmap.operator.nbytes + self.fmap.gram.nbytes + self.fmap.atoms.nbytes
        return total

    def _resolve(self, phi):
        """Projected weight for ``phi`` without committing it."""
        if not self._has_pending:
            return self.w
        return project_W(self._pending, self.A_inv, phi, self.config.U)

    def step(self, x, y):
        x = np.asarray(x, dtype=np.float64).ravel()
        y = float(y)
        if not (np.all(np.isfinite(x)) and math.isfinite(y)):
            raise InputError("instance and target must be finite")
        cfg = self.config
        self.t += 1
        res = self.dictionary.ald_test(x)

        if not res.holds:
            if self.fmap is None:
                y_hat = 0.0
            else:
                phi_old = self.fmap.apply_cross(res.cross)
                y_hat = float(self._resolve(phi_old) @ phi_old)
            self.dictionary.add_atom(x, y, res)
            if cfg.max_size is not None and self.dictionary.size > cfg.max_size:
                raise ResourceCapError(
                    f"dictionary grew past the safety cap of {cfg.max_size} atoms at round {self.t}"
                )
            self.flag = True
            if self.replay is not None:
                self.replay.expanded(self.t, self.epoch, self.dictionary.size, self.dictionary.size - 1)
            return StepTraceNons(self.t, self.w.shape[0], "expanded", res.error, y_hat, self.dictionary.size)

        if self.flag:
            self._start_epoch(res)
        elif self.fmap is None:
            # alpha >= k(x, x) lets the empty dictionary pass: the model has no features yet
            if self.replay is not None:
                self.replay.predicted(self.t, self.epoch, 0, -2.0 * y, cfg.eta, res.beta)
            return StepTraceNons(self.t, 0, "predicted", res.error, 0.0, 0)

        phi = self.fmap.apply_cross(res.cross)
        y_hat, g, denom, m = core.ons_round(
            self.A, self.A_inv, self.w, self._pending, self._has_pending, phi, y, cfg.eta, cfg.U
        )
        if math.isnan(m):
            raise NumericError("projection direction is degenerate (phi^T A^-1 phi = 0)")
        if not denom > 0:
            raise NotSPDError(f"covariance lost positive definiteness at round {self.t}")
        self._has_pending = True
        self.max_violation = max(self.max_violation, abs(y_hat) - cfg.U)
        if self.replay is not None:
            self.replay.predicted(self.t, self.epoch, self.dictionary.size, g, cfg.eta, res.beta)
        return StepTraceNons(self.t, self.w.shape[0], "predicted", res.error, y_hat, self.dictionary.size)

    def _start_epoch(self, res):
        cfg = self.config
        old = self.fmap
        new = self.dictionary.feature_map()
        Q = transition_operator(new, old)

        phi_old = old.apply_cross(res.cross) if old is not None else np.zeros(0)
        if cfg.init_variant == "nons_ald":
            w_prev = self._resolve(phi_old) if old is not None else self.w
        else:
            w_prev = self.w
        A_prev = self.A
        A_new = epoch_init_A(A_prev, Q, cfg.mu, cfg.init_variant)
        w_new = epoch_init_w(w_prev, Q, cfg.init_variant)

        self.epoch += 1
        if cfg.verify:
            j_old, j = Q.shape[1], Q.shape[0]
            prev_logdet = log_det_spd(A_prev) if j_old else 0.0
            self.transitions.append(
                Transition(
                    round=self.t,
                    epoch=self.epoch,
                    Q=Q,
                    A_prev=A_prev.copy(),
                    A_new=A_new.copy(),
                    w_prev=np.array(w_prev, copy=True),
                    w_new=w_new.copy(),
                    phi_old=phi_old,
                    phi_new=new.apply_cross(res.cross),
                    fmap=new,
                    logdet_change=log_det_spd(A_new) - prev_logdet,
                    atoms_added=j - j_old,
                )
            )
            self.fmaps[self.epoch] = new
        self.fmap = new
        self.A = np.ascontiguousarray(A_new)
        self.A_inv = np.ascontiguousarray(inverse_spd(A_new))
        self.w = np.ascontiguousarray(w_new)
        self._pending = np.zeros_like(self.w)
        self._has_pending = False
        self.flag = False
        self.epoch_starts.append(self.t)
        log.debug("epoch %d starts at round %d with %d atoms", self.epoch, self.t, new.size)

    def covariance_drift(self):
        """||A_inv - fresh inverse(A)||_F relative to the fresh inverse."""
        if self.A.shape[0] == 0:
            return 0.0
        fresh = inverse_spd(self.A)
        return float(np.linalg.norm(self.A_inv - fresh) / np.linalg.norm(fresh))


def con_kons(kernel, **kwargs):
    return NonsAld(NonsConfig(kernel=kernel, init_variant="con_kons", **kwargs))
