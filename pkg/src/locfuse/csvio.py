"""Dataset CSV format.

Header: ``sample_id,x_m,y_m,zone,rssi_<ap_id>...,range_<ap_id>...`` with AP
columns in roster order.  An empty cell is an absent measurement.  UTF-8,
LF line endings, ``.`` decimal separator, numbers written with 9 significant
digits (or the shortest exact form when 9 digits would lose information).
"""

from __future__ import annotations

import csv
import io
import math
from pathlib import Path
from typing import Iterable, Sequence

from .model import AccessPoint, Dataset, LocfuseError, Position, Sample, Zone

BASE_COLUMNS = ("sample_id", "x_m", "y_m", "zone")


class DatasetParseError(LocfuseError):
    def __init__(self, line: int, message: str):
        self.line = line
        super().__init__("parse-error", f"line {line}: {message}")


def fmt_number(v: float) -> str:
    s = format(float(v), ".9g")
    if float(s) != float(v):
        s = repr(float(v))
    return s


def header(roster: Sequence[AccessPoint]) -> list[str]:
    return [*BASE_COLUMNS, *(f"rssi_{ap.ap_id}" for ap in roster), *(f"range_{ap.ap_id}" for ap in roster)]


def sample_row(s: Sample, roster: Sequence[AccessPoint]) -> list[str]:
    row = [s.sample_id, fmt_number(s.truth.x), fmt_number(s.truth.y), s.zone_label]
    for ap in roster:
        v = s.rssi.get(ap.ap_id)
        row.append("" if v is None else fmt_number(v))
    ranges = s.ranges or {}
    for ap in roster:
        v = ranges.get(ap.ap_id)
        row.append("" if v is None else fmt_number(v))
    return row


def dumps_samples(samples: Iterable[Sample], roster: Sequence[AccessPoint]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header(roster))
    for s in samples:
        w.writerow(sample_row(s, roster))
    return buf.getvalue()


def save_dataset_csv(dataset: Dataset, path) -> None:
    Path(path).write_text(dumps_samples(dataset.samples, dataset.roster), encoding="utf-8", newline="")


def _number(cell: str, line: int, column: str) -> float:
    try:
        v = float(cell)
    except ValueError:
        raise DatasetParseError(line, f"non-numeric cell {cell!r} in column {column}") from None
    if not math.isfinite(v):
        raise DatasetParseError(line, f"non-finite value in column {column}")
    return v


def loads_dataset(text: str, roster: Sequence[AccessPoint], zones: Sequence[Zone] = ()) -> Dataset:
    reader = csv.reader(io.StringIO(text, newline=""))
    try:
        head = next(reader)
    except StopIteration:
        raise DatasetParseError(1, "empty file") from None
    if tuple(head[:4]) != BASE_COLUMNS:
        raise DatasetParseError(1, f"header must start with {','.join(BASE_COLUMNS)}")
    known = {ap.ap_id for ap in roster}
    cols: list[tuple[str, str]] = []
    seen = set()
    for name in head[4:]:
        kind, _, ap_id = name.partition("_")
        if kind not in ("rssi", "range") or not ap_id:
            raise DatasetParseError(1, f"malformed column {name!r}")
        if ap_id not in known:
            raise DatasetParseError(1, f"unknown ap column {name!r}")
        if name in seen:
            raise DatasetParseError(1, f"duplicate column {name!r}")
        seen.add(name)
        cols.append((kind, ap_id))

    samples = []
    for row in reader:
        line = reader.line_num
        if not row:
            continue
        if len(row) != len(head):
            raise DatasetParseError(line, f"expected {len(head)} cells, got {len(row)}")
        sample_id, xs, ys, zone = row[:4]
        if not sample_id:
            raise DatasetParseError(line, "empty sample_id")
        rssi: dict[str, float] = {}
        ranges: dict[str, float] = {}
        for (kind, ap_id), cell, name in zip(cols, row[4:], head[4:]):
            if cell == "":
                continue
            (rssi if kind == "rssi" else ranges)[ap_id] = _number(cell, line, name)
        # keep roster order in the maps regardless of column order
        rssi = {ap.ap_id: rssi[ap.ap_id] for ap in roster if ap.ap_id in rssi}
        ranges = {ap.ap_id: ranges[ap.ap_id] for ap in roster if ap.ap_id in ranges}
        try:
            truth = Position(_number(xs, line, "x_m"), _number(ys, line, "y_m"))
        except LocfuseError as exc:
            if isinstance(exc, DatasetParseError):
                raise
            raise DatasetParseError(line, str(exc)) from None
        samples.append(Sample(sample_id, rssi, truth, zone, ranges or None))
    return Dataset(tuple(roster), tuple(zones), tuple(samples))


def load_dataset_csv(path, roster: Sequence[AccessPoint], zones: Sequence[Zone] = ()) -> Dataset:
    """Read a dataset CSV; the roster (and zones) come from the scenario."""
    return loads_dataset(Path(path).read_text(encoding="utf-8"), roster, zones)
