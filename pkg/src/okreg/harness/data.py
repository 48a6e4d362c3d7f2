"""Dataset reading (CSV and LIBSVM) and min-max preprocessing."""

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import numpy as np

from ..errors import InputError, ParseError


@dataclass
class DatasetSpec:
    path: Union[str, Path]
    format: str = "csv"  # "csv" or "libsvm"
    target_column: Union[int, str] = -1  # csv only: index (negative from the end) or header name
    header: Optional[bool] = None  # csv only: None detects a non-numeric first row
    n_features: Optional[int] = None  # libsvm only: defaults to the largest index seen
    name: Optional[str] = None

    def __post_init__(self):
        if self.format not in ("csv", "libsvm"):
            raise InputError(f"unknown data format {self.format!r}")
        if self.name is None:
            self.name = Path(self.path).stem


@dataclass
class Dataset:
    X: np.ndarray
    y: np.ndarray
    name: str = "data"
    feature_names: list = field(default_factory=list)

    def __post_init__(self):
        self.X = np.atleast_2d(np.asarray(self.X, dtype=np.float64))
        self.y = np.asarray(self.y, dtype=np.float64).ravel()
        if self.X.shape[0] != self.y.shape[0]:
            raise InputError(f"{self.X.shape[0]} instances but {self.y.shape[0]} targets")
        if not (np.all(np.isfinite(self.X)) and np.all(np.isfinite(self.y))):
            raise InputError("dataset contains non-finite values")

    @property
    def T(self):
        return self.X.shape[0]

    @property
    def d(self):
        return self.X.shape[1]

    def subset(self, idx):
        return Dataset(self.X[idx], self.y[idx], self.name, list(self.feature_names))


def _number(token, line, what):
    try:
        v = float(token)
    except ValueError:
        raise ParseError(f"cannot parse {what} {token!r} as a number", line) from None
    if not math.isfinite(v):
        raise ParseError(f"{what} {token!r} is not finite", line)
    return v


def _is_number(token):
    try:
        float(token)
        return True
    except ValueError:
        return False


def read_csv(spec):
    path = Path(spec.path)
    with path.open(newline="", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    first = next((ln for ln in lines if ln.strip()), "")
    delim = next((c for c in ",\t;" if c in first), None)
    if delim is None:
        split = [ln.split() for ln in lines]
    else:
        split = list(csv.reader(lines, delimiter=delim))
    rows = [(i + 1, r) for i, r in enumerate(split) if any(c.strip() for c in r)]
    if not rows:
        raise InputError(f"{path}: no data rows")
    header = spec.header
    if header is None:
        header = not all(_is_number(c) for c in rows[0][1] if c.strip())
    names = [c.strip() for c in rows[0][1]] if header else []
    body = rows[1:] if header else rows
    if not body:
        raise InputError(f"{path}: no data rows")
    width = len(body[0][1])
    tc = spec.target_column
    if isinstance(tc, str) and not _is_int(tc):
        if tc not in names:
            raise InputError(f"target column {tc!r} not found in header")
        tc = names.index(tc)
    tc = int(tc)
    if not -width <= tc < width:
        raise InputError(f"target column {tc} out of range for {width} columns")
    tc %= width
    X, y = [], []
    for line, r in body:
        if len(r) != width:
            raise ParseError(f"expected {width} fields, found {len(r)}", line)
        vals = [_number(c.strip(), line, "field") for c in r]
        y.append(vals[tc])
        X.append(vals[:tc] + vals[tc + 1:])
    feature_names = names[:tc] + names[tc + 1:] if names else []
    return Dataset(np.array(X), np.array(y), spec.name, feature_names)


def _is_int(s):
    try:
        int(s)
        return True
    except (TypeError, ValueError):
        return False


def read_libsvm(spec):
    path = Path(spec.path)
    labels, entries = [], []
    max_idx = 0
    with path.open(encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            text = raw.split("#", 1)[0].strip()
            if not text:
                continue
            parts = text.split()
            labels.append(_number(parts[0], line_no, "label"))
            row = {}
            for tok in parts[1:]:
                idx, sep, val = tok.partition(":")
                if not sep or not _is_int(idx) or int(idx) < 1:
                    raise ParseError(f"malformed feature {tok!r}", line_no)
                i = int(idx)
                row[i] = _number(val, line_no, "feature value")
                max_idx = max(max_idx, i)
            entries.append(row)
    if not labels:
        raise InputError(f"{path}: no data rows")
    d = spec.n_features or max_idx
    if max_idx > d:
        raise InputError(f"feature index {max_idx} exceeds the declared {d} features")
    X = np.zeros((len(labels), d))
    for r, row in enumerate(entries):
        for i, v in row.items():
            X[r, i - 1] = v
    return Dataset(X, np.array(labels), spec.name)


def load(spec):
    if not Path(spec.path).is_file():
        raise InputError(f"{spec.path}: no such file")
    return read_csv(spec) if spec.format == "csv" else read_libsvm(spec)


def rescale(values, lo, hi):
    """Column-wise affine map of ``values`` onto [lo, hi]; constant columns map to 0."""
    v = np.asarray(values, dtype=np.float64)
    vmin = v.min(axis=0)
    span = v.max(axis=0) - vmin
    safe = np.where(span > 0, span, 1.0)
    out = lo + (hi - lo) * (v - vmin) / safe
    return np.where(span > 0, out, 0.0)


def preprocess(data):
    """Features to [-1, 1] and targets to [0, 1], with statistics over the whole set."""
    return Dataset(rescale(data.X, -1.0, 1.0), rescale(data.y, 0.0, 1.0), data.name, list(data.feature_names))


def load_and_preprocess(spec):
    return preprocess(load(spec))
