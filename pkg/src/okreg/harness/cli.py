"""Command-line entry point: ``okreg run | diagnose | selftest``."""

import argparse
import json
import logging
import sys
from pathlib import Path

from ..errors import InputError, OkregError
from ..kernels import Kernel
from . import synthetic
from .data import DatasetSpec, load_and_preprocess, preprocess
from .diagnose import diagnose_spectrum
from .emit import emit
from .experiment import LEARNERS, ExperimentConfig, run_experiment


def _add_data_args(p):
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--data", help="path to a CSV or LIBSVM file")
    src.add_argument("--synthetic", choices=sorted(synthetic.GENERATORS),
                     help="use a built-in synthetic stream instead of a file")
    p.add_argument("--format", choices=("csv", "libsvm"), default="csv")
    p.add_argument("--target-column", default="-1",
                   help="CSV target column: index (negative counts from the end) or header name")
    p.add_argument("--header", choices=("auto", "yes", "no"), default="auto")
    p.add_argument("--rounds", type=int, default=1000, help="length of a synthetic stream")


def _load(args):
    if args.synthetic:
        return preprocess(synthetic.GENERATORS[args.synthetic](args.rounds, args.seed))
    header = {"auto": None, "yes": True, "no": False}[args.header]
    spec = DatasetSpec(args.data, args.format, args.target_column, header)
    return load_and_preprocess(spec)


def build_parser():
    parser = argparse.ArgumentParser(prog="okreg", description="Online kernel regression experiments")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one learner over permuted streams")
    _add_data_args(run)
    run.add_argument("--learner", choices=LEARNERS, required=True)
    run.add_argument("--kernel-bandwidth", type=float, nargs="+", default=[1.0])
    run.add_argument("--alpha", type=float, help="ALD threshold (default 25/T)")
    run.add_argument("--mu", type=float, nargs="+", default=[1.0, 5.0, 15.0])
    run.add_argument("--eta", type=float, nargs="+", help="step-size grid for fogd/nogd (default {1,10,100,1000}/sqrt(T))")
    run.add_argument("--U", type=float, help="prediction / norm bound (default 2 for aogd_ald, 1 otherwise)")
    run.add_argument("--capacity", type=int, help="AOGD-ALD buffer capacity (default from d and T)")
    run.add_argument("--features", type=int, default=400, dest="D", help="random features for fogd")
    run.add_argument("--budget", type=int, default=400, dest="J", help="Nystrom budget for nogd")
    run.add_argument("--max-size", type=int, help="abort if the dictionary grows past this size")
    run.add_argument("--permutations", type=int, default=10)
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--workers", type=int, default=1)
    run.add_argument("--no-metrics", action="store_true", help="emit the configuration only")
    run.add_argument("--verify", action="store_true", help="evaluate certificates (at most 500 rounds)")
    run.add_argument("--out", default="results", help="output directory")

    diag = sub.add_parser("diagnose", help="kernel spectrum diagnostics and suggested mu, alpha")
    _add_data_args(diag)
    diag.add_argument("--kernel-bandwidth", type=float, default=1.0)
    diag.add_argument("--sample", type=int, help="subsample size (default: all instances)")
    diag.add_argument("--seed", type=int, default=0)
    diag.add_argument("--out", help="write the diagnostics JSON here")

    st = sub.add_parser("selftest", help="run the certificate battery")
    st.add_argument("--seed", type=int, default=0)
    return parser


def cmd_run(args):
    data = _load(args)
    cfg = ExperimentConfig(
        learner=args.learner,
        bandwidth=args.kernel_bandwidth,
        U=args.U,
        alpha=args.alpha,
        mu=args.mu,
        eta=args.eta,
        capacity=args.capacity,
        D=args.D,
        J=args.J,
        max_size=args.max_size,
        permutations=args.permutations,
        seed=args.seed,
        verify=args.verify,
        metrics=not args.no_metrics,
        workers=args.workers,
    )
    report = run_experiment(cfg, data)
    paths = emit(report, args.out)
    if report.aggregates:
        a = report.aggregates
        print(f"{report.dataset} {report.learner} params={report.params} "
              f"MSE={a['mse']['mean']:.5f}+-{a['mse']['sd']:.5f} size={a['final_size']['mean']:.1f} "
              f"time={a['total_time']['mean']:.3f}s")
    for kind, path in paths.items():
        print(f"wrote {kind}: {path}")
    return 0


def cmd_diagnose(args):
    data = _load(args)
    res = diagnose_spectrum(data, Kernel.gaussian(args.kernel_bandwidth), args.sample, args.seed)
    text = json.dumps(res.to_dict(), indent=2, sort_keys=True)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    fit = res.diagnostics.decay_fit
    if fit is not None:
        print(f"decay: {fit.model} (poor fit: {fit.poor_fit})")
    for mu, d in res.diagnostics.d_eff.items():
        print(f"d_eff(mu={mu:g}) = {d:.3f}")
    if res.suggestion:
        s = res.suggestion
        print(f"suggested mu = {s.mu:.6g}, alpha = {s.alpha:.6g} for T = {s.T}")
    return 0


def cmd_selftest(args):
    from ..selftest import run_battery

    results = run_battery(seed=args.seed)
    width = max(len(r.name) for r in results)
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.name.ljust(width)}  {r.detail}")
    failed = sum(not r.passed for r in results)
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return 0 if failed == 0 else 2


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handlers = {"run": cmd_run, "diagnose": cmd_diagnose, "selftest": cmd_selftest}
    try:
        return handlers[args.command](args)
    except OkregError as exc:
        where = f" (permutation {exc.permutation})" if hasattr(exc, "permutation") else ""
        print(f"error{where}: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return InputError.exit_code


if __name__ == "__main__":
    sys.exit(main())
