"""Time the compiled per-round kernels against the numpy fallback.

Usage: python3 benchmarks/bench_core.py [--repeat N] [--rounds T]

The kernel-level timings call both backends in-process. The end-to-end
NONS-ALD run is timed in a subprocess per backend so that the import-time
selection (``OKREG_PURE_PYTHON``) is exercised exactly as users see it.
"""

import argparse
import json
import os
import subprocess
import sys
import timeit

import numpy as np

from okreg._backend import available_backends

END_TO_END = """
import json, time
import numpy as np
from okreg._backend import BACKEND
from okreg.kernels import Kernel
from okreg.nons import NonsAld, NonsConfig
rng = np.random.default_rng(0)
T = {rounds}
X = rng.uniform(-1, 1, (T, 4))
y = 0.5 + 0.4 * np.sin(2 * X[:, 0]) * np.cos(X[:, 3])
learner = NonsAld(NonsConfig(Kernel.gaussian(1.0), mu=1.0, alpha=25.0 / T))
start = time.perf_counter()
for x, t in zip(X, y):
    learner.step(x, t)
print(json.dumps({{"backend": BACKEND, "seconds": time.perf_counter() - start, "size": learner.size}}))
"""


def _cases(dim, rng):
    X = np.ascontiguousarray(rng.standard_normal((dim, 8)))
    x = rng.standard_normal(8)
    B = rng.standard_normal((dim, dim))
    A = B @ B.T + dim * np.eye(dim)
    A_inv = np.linalg.inv(A)
    phi = rng.standard_normal(dim) / np.sqrt(dim)
    w = rng.standard_normal(dim)
    return {
        "gaussian_cross": lambda core: core.gaussian_cross(X, x, 0.5),
        "sm_update": lambda core: core.sm_update(A_inv.copy(), phi, 0.1),
        "slab_project": lambda core: core.slab_project(w * 10.0, A_inv, phi, 1.0),
        "ons_round": lambda core: core.ons_round(A.copy(), A_inv.copy(), w.copy(), w.copy(), True,
                                                 phi, 0.3, 0.125, 1.0),
    }


def bench_kernels(repeat, dims=(8, 32, 128)):
    backends = available_backends()
    rng = np.random.default_rng(0)
    rows = []
    for dim in dims:
        for name, fn in _cases(dim, rng).items():
            row = {"kernel": name, "dim": dim}
            for label, core in backends.items():
                number = 2000
                row[label] = min(timeit.repeat(lambda: fn(core), number=number, repeat=repeat)) / number
            rows.append(row)
    return rows


def bench_end_to_end(rounds):
    out = []
    for pure in ("1", "0"):
        env = {**os.environ, "OKREG_PURE_PYTHON": pure}
        res = subprocess.run([sys.executable, "-c", END_TO_END.format(rounds=rounds)],
                             env=env, capture_output=True, text=True, check=True)
        out.append(json.loads(res.stdout))
    return out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--rounds", type=int, default=4000)
    args = ap.parse_args(argv)

    rows = bench_kernels(args.repeat)
    labels = [k for k in ("python", "cython") if k in rows[0]]
    print(f"{'kernel':<16}{'dim':>5}" + "".join(f"{lb + ' (us)':>15}" for lb in labels) + f"{'speedup':>10}")
    for r in rows:
        line = f"{r['kernel']:<16}{r['dim']:>5}" + "".join(f"{r[lb] * 1e6:>15.2f}" for lb in labels)
        if "cython" in r:
            line += f"{r['python'] / r['cython']:>10.1f}x"
        print(line)
    if "cython" not in labels:
        print("compiled extension not built; only the fallback was timed")

    print(f"\nNONS-ALD, {args.rounds} rounds")
    for r in bench_end_to_end(args.rounds):
        print(f"  {r['backend']:<8}{r['seconds']:8.3f} s  (dictionary size {r['size']})")


if __name__ == "__main__":
    main()
