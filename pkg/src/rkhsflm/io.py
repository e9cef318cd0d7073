"""
Dataset CSV format.

One header row ``t_<time>,...,t_<time>,y`` where each time is written with at
most 12 significant digits, then one row per observation holding the
trajectory values followed by the response. Numbers use Python's shortest
round-trip ``repr``. Grids that fall outside [0, 1] are mapped affinely onto
[0, 1] on reading; the original labels are kept in ``metadata`` so that
writing the dataset back reproduces the input byte for byte.
"""

from __future__ import annotations

import csv
import math

import numpy as np

from .errors import ParseError
from .estimators import FunctionalDataset
from .kernels import Grid


def format_time(t: float) -> str:
    return f"t_{float(t):.12g}"


def dumps_dataset(data: FunctionalDataset) -> str:
    labels = data.metadata.get("time_labels")
    if labels is None or len(labels) != data.m:
        labels = [format_time(t) for t in data.grid.points]
    lines = [",".join(list(labels) + ["y"])]
    for x, y in zip(data.X, data.Y):
        lines.append(",".join(repr(float(v)) for v in x) + "," + repr(float(y)))
    return "\n".join(lines) + "\n"


def write_dataset(data: FunctionalDataset, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(dumps_dataset(data))


def _parse_float(text, line, col):
    try:
        v = float(text)
    except ValueError:
        raise ParseError(f"column {col}: non-numeric value {text!r}", line) from None
    if not math.isfinite(v):
        raise ParseError(f"column {col}: non-finite value {text!r}", line)
    return v


def parse_dataset(lines) -> FunctionalDataset:
    reader = csv.reader(lines)
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError("empty file", 1) from None
    header = [h.strip() for h in header]
    if len(header) < 2 or header[-1] != "y":
        raise ParseError("header must end with a 'y' column after at least one time column", 1)
    times = []
    for col, name in enumerate(header[:-1], start=1):
        if not name.startswith("t_"):
            raise ParseError(f"column {col}: expected a 't_<time>' header, got {name!r}", 1)
        times.append(_parse_float(name[2:], 1, col))
    times = np.array(times)
    if times.size > 1 and np.any(np.diff(times) <= 0):
        bad = int(np.argmax(np.diff(times) <= 0)) + 2
        raise ParseError(f"column {bad}: grid times are not strictly increasing", 1)

    rows = []
    width = len(header)
    for line_no, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != width:
            raise ParseError(f"expected {width} fields, found {len(row)}", line_no)
        rows.append([_parse_float(c, line_no, j) for j, c in enumerate(row, start=1)])
    arr = np.array(rows, dtype=float).reshape(len(rows), width)

    meta = {}
    lo, hi = float(times[0]), float(times[-1])
    if lo < 0.0 or hi > 1.0:
        span = hi - lo if hi > lo else 1.0
        grid_pts = (times - lo) / span
        meta["time_range"] = (lo, hi)
        meta["time_labels"] = header[:-1]
    else:
        grid_pts = times
    return FunctionalDataset(Grid(grid_pts), arr[:, :-1], arr[:, -1], meta)


def read_dataset(path) -> FunctionalDataset:
    """Read a dataset file; raises ParseError with the offending line number."""
    with open(path, encoding="utf-8", newline="") as fh:
        return parse_dataset(fh)


ingest_csv = read_dataset
