"""Multi-permutation experiments with grid tuning and per-round metrics."""

import itertools
import json
import math
import random
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from typing import Optional

import numpy as np

from ..aogd import AogdAld, AogdConfig, default_capacity, kogd
from ..baselines import Fogd, Kons, Nogd
from ..errors import InputError, NumericError, OkregError
from ..kernels import Kernel
from ..nons import NonsAld, NonsConfig

LEARNERS = ("aogd_ald", "nons_ald", "con_kons", "kogd", "kons", "fogd", "nogd")
DEFAULT_U = {"aogd_ald": 2.0, "kogd": 2.0, "nons_ald": 1.0, "con_kons": 1.0, "kons": 1.0}
ETA_MULTIPLIERS = (1.0, 10.0, 100.0, 1000.0)
MU_GRID = (1.0, 5.0, 15.0)
VERIFY_CAP = 500


def fisher_yates(n, seed):
    """Permutation of range(n) by Fisher-Yates driven by Python's Mersenne Twister.

    Only ``random.Random.random`` is used, whose output for a given seed is
    fixed across platforms and Python versions.
    """
    rng = random.Random(seed)
    p = list(range(n))
    for i in range(n - 1, 0, -1):
        j = int(rng.random() * (i + 1))
        p[i], p[j] = p[j], p[i]
    return p


def permutation_seed(base_seed, index):
    return base_seed * 1_000_003 + index


@dataclass
class ExperimentConfig:
    learner: str
    bandwidth: list = field(default_factory=lambda: [1.0])
    U: Optional[float] = None
    Y: float = 1.0
    alpha: Optional[float] = None  # None: 25 / T
    mu: list = field(default_factory=lambda: list(MU_GRID))
    eta: Optional[list] = None  # None: ETA_MULTIPLIERS / sqrt(T) for fogd and nogd
    capacity: Optional[int] = None  # None: default_capacity(d, T)
    D: int = 400
    J: int = 400
    max_size: Optional[int] = None
    permutations: int = 10
    seed: int = 0
    verify: bool = False
    metrics: bool = True
    series: bool = True
    workers: int = 1

    def __post_init__(self):
        if self.learner not in LEARNERS:
            raise InputError(f"unknown learner {self.learner!r}; choose from {', '.join(LEARNERS)}")
        if isinstance(self.bandwidth, (int, float)):
            self.bandwidth = [float(self.bandwidth)]
        if isinstance(self.mu, (int, float)):
            self.mu = [float(self.mu)]
        if isinstance(self.eta, (int, float)):
            self.eta = [float(self.eta)]
        if not self.bandwidth or not self.mu or (self.eta is not None and not self.eta):
            raise InputError("parameter grids must be nonempty")
        if self.permutations < 1:
            raise InputError("permutations must be at least 1")
        if self.U is None:
            self.U = DEFAULT_U.get(self.learner, 1.0)

    def grid(self, T):
        """Tuning points as dicts of learner parameters."""
        if self.learner in ("nons_ald", "con_kons", "kons"):
            tuned = [("mu", list(self.mu))]
        elif self.learner in ("fogd", "nogd"):
            etas = self.eta if self.eta is not None else [m / math.sqrt(T) for m in ETA_MULTIPLIERS]
            tuned = [("eta", list(etas))]
        else:
            tuned = []
        keys = ["bandwidth"] + [k for k, _ in tuned]
        values = [self.bandwidth] + [v for _, v in tuned]
        return [dict(zip(keys, combo)) for combo in itertools.product(*values)]

    def to_dict(self):
        return asdict(self)


def make_learner(cfg, params, T, d, seed, verify=False):
    kernel = Kernel.gaussian(params["bandwidth"])
    alpha = cfg.alpha if cfg.alpha is not None else min(1.0, 25.0 / T)
    name = cfg.learner
    if name == "aogd_ald":
        cap = cfg.capacity if cfg.capacity is not None else default_capacity(d, T)
        return AogdAld(AogdConfig(kernel, cfg.U, alpha, cap))
    if name == "kogd":
        return kogd(kernel, cfg.U)
    if name in ("nons_ald", "con_kons"):
        return NonsAld(NonsConfig(kernel, params["mu"], alpha, cfg.U, cfg.Y, init_variant=name,
                                  max_size=cfg.max_size, verify=verify))
    if name == "kons":
        return Kons(kernel, params["mu"], cfg.U, cfg.Y)
    if name == "fogd":
        return Fogd(kernel, cfg.D, params["eta"], seed)
    return Nogd(kernel, cfg.J, params["eta"])


@dataclass
class PermutationResult:
    index: int
    seed: int
    mse: float
    mse_prediction_rounds: Optional[float]
    prediction_rounds: int
    cumulative_loss: float
    final_size: int
    total_time: float
    mean_round_time: float
    memory_bytes: int
    residuals: list = field(default_factory=list)
    size_trajectory: list = field(default_factory=list)
    checks: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, data):
        return cls(**{f.name: data[f.name] for f in fields(cls) if f.name in data})


@dataclass
class RunReport:
    dataset: str
    learner: str
    config: dict
    T: int = 0
    d: int = 0
    params: dict = field(default_factory=dict)
    grid: list = field(default_factory=list)  # [{"params": ..., "mse_mean": ...}]
    permutations: list = field(default_factory=list)
    aggregates: dict = field(default_factory=dict)

    def to_dict(self):
        out = {"dataset": self.dataset, "learner": self.learner, "config": self.config}
        if not self.config.get("metrics", True):
            return out
        out.update(
            T=self.T,
            d=self.d,
            params=self.params,
            grid=self.grid,
            permutations=[asdict(p) for p in self.permutations],
            aggregates=self.aggregates,
        )
        return out

    def to_json(self, indent=None):
        return json.dumps(self.to_dict(), indent=indent, sort_keys=True, allow_nan=False)

    @classmethod
    def from_dict(cls, data):
        report = cls(data["dataset"], data["learner"], data["config"])
        if "permutations" in data:
            report.T = data["T"]
            report.d = data["d"]
            report.params = data["params"]
            report.grid = data["grid"]
            report.permutations = [PermutationResult.from_dict(p) for p in data["permutations"]]
            report.aggregates = data["aggregates"]
        return report

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))

    def without_timing(self):
        """Dict view with wall-clock fields removed, for determinism comparisons."""
        d = self.to_dict()
        for p in d.get("permutations", []):
            for key in ("total_time", "mean_round_time"):
                p.pop(key, None)
        for key in ("total_time", "mean_round_time"):
            d.get("aggregates", {}).pop(key, None)
        return d


def _mean_sd(values):
    v = np.asarray([x for x in values if x is not None], dtype=np.float64)
    if v.size == 0:
        return {"mean": None, "sd": None}
    sd = float(v.std(ddof=1)) if v.size > 1 else 0.0
    return {"mean": float(v.mean()), "sd": sd}


AGGREGATED = ("mse", "mse_prediction_rounds", "cumulative_loss", "final_size",
              "total_time", "mean_round_time", "memory_bytes")


def aggregate(perms):
    return {key: _mean_sd([getattr(p, key) for p in perms]) for key in AGGREGATED}


def stream(learner, X, y):
    """Feed the stream through ``learner``; return predictions, branches, sizes and step times."""
    T = X.shape[0]
    preds = np.empty(T)
    expanded = np.zeros(T, dtype=bool)
    sizes = np.empty(T, dtype=np.int64)
    times = np.empty(T)
    clock = time.perf_counter
    # a first-order learner with too large a step size may diverge; that is
    # reported through a non-finite MSE rather than numpy warnings
    with np.errstate(over="ignore", invalid="ignore"):
        for t in range(T):
            start = clock()
            tr = learner.step(X[t], y[t])
            times[t] = clock() - start
            preds[t] = tr.y_hat
            expanded[t] = tr.branch == "expanded"
            sizes[t] = tr.size
    return preds, expanded, sizes, times


def run_permutation(cfg, params, X, y, index):
    seed = permutation_seed(cfg.seed, index)
    order = fisher_yates(X.shape[0], seed)
    Xp, yp = X[order], y[order]
    T, d = X.shape
    learner = make_learner(cfg, params, T, d, seed)
    try:
        preds, expanded, sizes, times = stream(learner, Xp, yp)
    except OkregError as exc:
        exc.permutation = index
        raise
    pred_mask = ~expanded
    # diverged grid points overflow here; the grid search discards them by MSE
    with np.errstate(over="ignore", invalid="ignore"):
        resid = preds - yp
        sq = resid * resid
        mse = float(sq.mean())
        mse_pred = float(sq[pred_mask].mean()) if pred_mask.any() else None
        cum = float(sq.sum())
    checks = {}
    if cfg.verify and cfg.learner in ("nons_ald", "con_kons"):
        checks = verify_nons_run(cfg, params, Xp, yp, preds)
    return PermutationResult(
        index=index,
        seed=seed,
        mse=mse,
        mse_prediction_rounds=mse_pred,
        prediction_rounds=int(pred_mask.sum()),
        cumulative_loss=cum,
        final_size=int(learner.size),
        total_time=float(times.sum()),
        mean_round_time=float(times.mean()),
        memory_bytes=int(learner.nbytes()),
        residuals=resid.tolist() if cfg.series else [],
        size_trajectory=sizes.tolist() if cfg.series else [],
        checks=checks,
    )


def verify_nons_run(cfg, params, X, y, timed_preds):
    """Rerun with replay recording and evaluate the certificates (untimed)."""
    from ..verify import global_spectral_check, local_spectral_checks, replay_A

    T, d = X.shape
    if T > VERIFY_CAP:
        raise InputError(f"verification mode is limited to {VERIFY_CAP} rounds")
    learner = make_learner(cfg, params, T, d, 0, verify=True)
    preds = np.array([learner.step(x, t).y_hat for x, t in zip(X, y)])
    mu = params["mu"]
    alpha = learner.config.alpha
    replay_gap = max((np.linalg.norm(replay_A(learner.replay, tr.fmap, mu, tr.epoch) - tr.A_new)
                  / np.linalg.norm(tr.A_new) for tr in learner.transitions), default=0.0)
    logdet = max((abs(tr.logdet_change - tr.atoms_added * math.log(mu)) for tr in learner.transitions),
                 default=0.0)
    orth = max((float(np.linalg.norm(tr.Q.T @ tr.Q - np.eye(tr.Q.shape[1]))) for tr in learner.transitions),
               default=0.0)
    local = local_spectral_checks(learner.replay, learner.fmaps, X, alpha)
    glob, bound = global_spectral_check(learner.replay, learner.fmap, X, alpha, kernel=learner.kernel)
    return {
        "rerun_prediction_gap": float(np.max(np.abs(preds - timed_preds))),
        "replay_rel_frobenius": float(replay_gap),
        "logdet_ratio_error": float(logdet) if cfg.learner == "nons_ald" else None,
        "transition_orthonormality": orth,
        "local_spectral_ok": all(c <= b + 1e-9 for _, c, b in local),
        "global_spectral": float(glob),
        "global_bound": float(bound),
    }


def _run_point(args):
    cfg, params, X, y = args
    return [run_permutation(cfg, params, X, y, i) for i in range(cfg.permutations)]


def run_experiment(cfg, data):
    """Tune over the grid, each point averaged over all permutations; report the best."""
    X, y = data.X, data.y
    T, d = X.shape
    if T < 1:
        raise InputError("empty dataset")
    if not cfg.metrics:
        return RunReport(data.name, cfg.learner, cfg.to_dict())
    points = cfg.grid(T)
    jobs = [(cfg, p, X, y) for p in points]
    if cfg.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(_run_point, jobs))
    else:
        results = [_run_point(j) for j in jobs]
    grid = []
    best = None
    for params, perms in zip(points, results):
        with np.errstate(over="ignore", invalid="ignore"):
            mse_mean = float(np.mean([p.mse for p in perms]))
        if not math.isfinite(mse_mean):
            grid.append({"params": params, "mse_mean": None, "diverged": True})
            continue
        grid.append({"params": params, "mse_mean": mse_mean, "diverged": False})
        if best is None or mse_mean < best[0]:
            best = (mse_mean, params, perms)
    if best is None:
        raise NumericError("every grid point diverged")
    _, params, perms = best
    return RunReport(
        dataset=data.name,
        learner=cfg.learner,
        config=cfg.to_dict(),
        T=T,
        d=d,
        params=params,
        grid=grid,
        permutations=perms,
        aggregates=aggregate(perms),
    )
