"""Write run reports as JSON, summary CSV, results-table CSV and plot series."""

import csv
from pathlib import Path

import numpy as np

SUMMARY_COLUMNS = (
    "dataset", "learner", "mse_mean", "mse_sd", "mse_prediction_rounds_mean",
    "mse_prediction_rounds_sd", "size", "time_total_s", "time_total_sd", "time_per_round_s",
)
TABLE_COLUMNS = ("MSE", "J|D", "Time (s)")
SERIES_COLUMNS = ("dataset", "learner", "permutation", "round", "size", "cumulative_loss")


def write_json(report, path):
    path = Path(path)
    path.write_text(report.to_json(indent=2) + "\n", encoding="utf-8")
    return path


def _agg(report, key, stat="mean"):
    return report.aggregates.get(key, {}).get(stat)


def summary_row(report):
    return {
        "dataset": report.dataset,
        "learner": report.learner,
        "mse_mean": _agg(report, "mse"),
        "mse_sd": _agg(report, "mse", "sd"),
        "mse_prediction_rounds_mean": _agg(report, "mse_prediction_rounds"),
        "mse_prediction_rounds_sd": _agg(report, "mse_prediction_rounds", "sd"),
        "size": _agg(report, "final_size"),
        "time_total_s": _agg(report, "total_time"),
        "time_total_sd": _agg(report, "total_time", "sd"),
        "time_per_round_s": _agg(report, "mean_round_time"),
    }


def write_summary_csv(reports, path):
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=SUMMARY_COLUMNS)
        w.writeheader()
        for r in reports:
            if r.aggregates:
                w.writerow(summary_row(r))
    return path


def table_row(report):
    """One row shaped like the published results table: MSE and time as mean +- sd."""
    mse, mse_sd = _agg(report, "mse"), _agg(report, "mse", "sd")
    tt, tt_sd = _agg(report, "total_time"), _agg(report, "total_time", "sd")
    size = _agg(report, "final_size")
    return {
        "MSE": f"{mse:.5f} ± {mse_sd:.5f}",
        "J|D": str(int(round(size))),
        "Time (s)": f"{tt:.2f} ± {tt_sd:.2f}",
    }


def write_table_csv(reports, path):
    """Rows follow the order of ``reports``; labels live in the summary CSV."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=TABLE_COLUMNS)
        w.writeheader()
        for r in reports:
            if r.aggregates:
                w.writerow(table_row(r))
    return path


def write_series_csv(reports, path):
    """Per-round dictionary size and cumulative loss for every permutation."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(SERIES_COLUMNS)
        for r in reports:
            for p in r.permutations:
                if not p.residuals:
                    continue
                cum = np.cumsum(np.square(p.residuals))
                for t, (size, loss) in enumerate(zip(p.size_trajectory, cum), start=1):
                    w.writerow((r.dataset, r.learner, p.index, t, size, repr(float(loss))))
    return path


def emit(report, out_dir, stem=None):
    """Write every artifact for one report into ``out_dir``; return the paths written."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = stem or f"{report.dataset}_{report.learner}"
    paths = {"json": write_json(report, out / f"{stem}.json")}
    if report.aggregates:
        paths["summary"] = write_summary_csv([report], out / f"{stem}_summary.csv")
        paths["table"] = write_table_csv([report], out / f"{stem}_table.csv")
        if any(p.residuals for p in report.permutations):
            paths["series"] = write_series_csv([report], out / f"{stem}_series.csv")
    return paths
