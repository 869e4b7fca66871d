"""CSV / JSON artifact formats."""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Iterable, List, Sequence

from .coupling import DensitySeries
from .dynamics import Configuration
from .geometry import Window
from .randomness import KIND_INITIAL, EventId


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_snapshot_csv(path, c: Configuration) -> None:
    d = c.window.d
    header = ["id", "kind"] + [f"x{i + 1}" for i in range(d)] + ["birth_time"]
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(header)
        for pid in c.sorted_ids():
            x = c.points[pid]
            kind = "initial" if pid.kind == KIND_INITIAL else "rain"
            wr.writerow([pid.label(), kind, *(fmt(v) for v in x), fmt(c.birth[pid])])


def read_snapshot_csv(path, window: Window, now: float = 0.0) -> Configuration:
    c = Configuration(window, now)
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            x = tuple(float(row[f"x{i + 1}"]) for i in range(window.d))
            c.add(EventId.parse(row["id"]), x, float(row["birth_time"]))
    return c


def write_series_csv(path, series: DensitySeries) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["t", "beta_R", "beta_A", "beta_Z", "beta_S"])
        for row in series.rows:
            wr.writerow([fmt(v) for v in row])


def read_series_csv(path) -> DensitySeries:
    with open(path, newline="") as fh:
        rd = csv.reader(fh)
        next(rd)
        return DensitySeries([tuple(float(v) for v in row) for row in rd])


def write_table_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(header)
        for row in rows:
            wr.writerow([fmt(v) if isinstance(v, float) else v for v in row])


def _clean(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None if math.isnan(obj) else ("inf" if obj > 0 else "-inf")
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if hasattr(obj, "item"):
        return _clean(obj.item())
    return obj


def write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n")
