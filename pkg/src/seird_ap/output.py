"""CSV writers.  Every file starts with its column header; floats use 17
significant digits so 64-bit values round-trip exactly."""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .grid import SpatialGrid
from .macroscale import MacroState
from .model import COMPARTMENTS

SNAPSHOT_COLUMNS = ("t", "x", "S", "E", "I", "R", "D")
SWEEP_COLUMNS = ("eps", "t", "species", "l1", "linf")
SERIES_COLUMNS = ("beta", "t", "S", "E", "I", "R", "D")


def fmt(value) -> str:
    if isinstance(value, str):
        return value
    return format(float(value), ".17g")


def _write(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])
    return path


def write_snapshots(path, states: Iterable[MacroState], grid: SpatialGrid) -> Path:
    """Long format: one row per (time, node)."""
    def rows():
        for s in states:
            fields = s.fields()
            for j, x in enumerate(grid.nodes):
                yield (s.t, x, *fields[:, j])
    return _write(path, SNAPSHOT_COLUMNS, rows())


def write_comparison(path, reports) -> Path:
    def rows():
        for r in reports:
            for name in COMPARTMENTS:
                yield (r.eps, r.t, name, r.l1[name], r.linf[name])
    return _write(path, SWEEP_COLUMNS, rows())


def write_series(path, series) -> Path:
    """Probe time series; the beta column holds beta(t) for piecewise schedules."""
    def rows():
        for t, values in zip(series.times, series.values):
            beta = series.rate(t) if series.rate is not None else series.beta
            yield (beta, t, *values)
    return _write(path, SERIES_COLUMNS, rows())


def read_csv(path) -> tuple:
    """(header, rows) with numeric cells parsed as floats."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[_parse(c) for c in row] for row in reader]
    return header, rows


def _parse(cell: str):
    try:
        return float(cell)
    except ValueError:
        return cell


def series_to_array(rows) -> np.ndarray:
    return np.array([[float(c) for c in row] for row in rows])
