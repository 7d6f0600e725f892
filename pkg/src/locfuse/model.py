"""Domain types, dataset validation, zone geometry and feature matrices."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

RSSI_FLOOR = -120.0
OUTSIDE = "outside"


class LocfuseError(Exception):
    """Base error. ``code`` is a short machine-readable rule name."""

    def __init__(self, code: str, message: str | None = None):
        self.code = code
        super().__init__(f"{code}: {message}" if message else code)


class RadioTechnology(enum.Enum):
    FIVE_G = "5g"
    WIFI = "wifi"

    @classmethod
    def parse(cls, text: str) -> "RadioTechnology":
        key = text.strip().lower()
        for tech in cls:
            if tech.value == key:
                return tech
        raise ValueError(f"unknown radio technology {text!r}")


class Selector(enum.Enum):
    """Which technology columns a feature matrix keeps."""

    FIVE_G = "5g"
    WIFI = "wifi"
    FUSION = "fusion"

    @classmethod
    def parse(cls, text: str) -> "Selector":
        key = text.strip().lower()
        for sel in cls:
            if sel.value == key:
                return sel
        raise ValueError(f"unknown technology selector {text!r}")

    def accepts(self, tech: RadioTechnology) -> bool:
        return self is Selector.FUSION or self.value == tech.value


@dataclass(frozen=True)
class Position:
    x: float
    y: float
    z: float = 0.0

    def __post_init__(self):
        for name in ("x", "y", "z"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise LocfuseError("non-finite-position", f"{name}={v}")
            object.__setattr__(self, name, float(v))

    def xy(self) -> tuple[float, float]:
        return (self.x, self.y)


@dataclass(frozen=True)
class AccessPoint:
    ap_id: str
    tech: RadioTechnology
    position: Position
    tx_power: float = 20.0

    def __post_init__(self):
        if not self.ap_id or any(c.isspace() or c == "," for c in self.ap_id):
            raise LocfuseError("bad-ap-id", repr(self.ap_id))
        if not math.isfinite(self.tx_power):
            raise LocfuseError("non-finite-tx-power", self.ap_id)


@dataclass(frozen=True)
class Zone:
    zone_id: str
    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def __post_init__(self):
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise LocfuseError("bad-zone", f"{self.zone_id} has an empty rectangle")
        if not self.zone_id or self.zone_id == OUTSIDE or any(c.isspace() or c == "," for c in self.zone_id):
            raise LocfuseError("bad-zone", f"invalid zone id {self.zone_id!r}")

    @property
    def rect(self) -> tuple[float, float, float, float]:
        return (self.x_min, self.y_min, self.x_max, self.y_max)

    @property
    def area(self) -> float:
        return (self.x_max - self.x_min) * (self.y_max - self.y_min)

    def contains(self, x: float, y: float) -> bool:
        # closed rectangle: boundary belongs to the zone
        return self.x_min <= x <= self.x_max and self.y_min <= y <= self.y_max

    def overlaps(self, other: "Zone") -> bool:
        # interiors intersect; shared edges are allowed
        return (
            self.x_min < other.x_max
            and other.x_min < self.x_max
            and self.y_min < other.y_max
            and other.y_min < self.y_max
        )


@dataclass(frozen=True)
class Sample:
    sample_id: str
    rssi: Mapping[str, float]
    truth: Position
    zone_label: str
    ranges: Mapping[str, float] | None = None


@dataclass(frozen=True)
class Dataset:
    roster: tuple[AccessPoint, ...]
    zones: tuple[Zone, ...]
    samples: tuple[Sample, ...]

    def __post_init__(self):
        object.__setattr__(self, "roster", tuple(self.roster))
        object.__setattr__(self, "zones", tuple(self.zones))
        object.__setattr__(self, "samples", tuple(self.samples))

    def __len__(self) -> int:
        return len(self.samples)

    def ap(self, ap_id: str) -> AccessPoint:
        for ap in self.roster:
            if ap.ap_id == ap_id:
                return ap
        raise KeyError(ap_id)

    def subset(self, indices: Sequence[int]) -> "Dataset":
        return Dataset(self.roster, self.zones, tuple(self.samples[i] for i in indices))

    def labels(self) -> list[str]:
        return [s.zone_label for s in self.samples]

    def positions(self) -> np.ndarray:
        return np.array([[s.truth.x, s.truth.y] for s in self.samples], dtype=float).reshape(-1, 2)


@dataclass(frozen=True)
class FeatureMatrix:
    columns: tuple[str, ...]
    rows: np.ndarray = field(repr=False)

    @property
    def width(self) -> int:
        return len(self.columns)


@dataclass(frozen=True)
class Violation:
    rule: str
    sample_id: str | None = None
    detail: str = ""

    def __str__(self) -> str:
        where = f", sample {self.sample_id}" if self.sample_id is not None else ""
        extra = f" ({self.detail})" if self.detail else ""
        return f"{self.rule}{where}{extra}"


def check_zones(zones: Sequence[Zone]) -> None:
    seen = set()
    for z in zones:
        if z.zone_id in seen:
            raise LocfuseError("duplicate-zone", z.zone_id)
        seen.add(z.zone_id)
    for i, a in enumerate(zones):
        for b in zones[i + 1 :]:
            if a.overlaps(b):
                raise LocfuseError("ambiguous-zones", f"{a.zone_id} overlaps {b.zone_id}")


def zone_of(p: Position, zones: Sequence[Zone]) -> str:
    """Label of the closed zone rectangle containing ``(p.x, p.y)``, else ``"outside"``.

    Two zones may share an edge; a point on the shared edge belongs to the
    first one in ``zones``.
    """
    check_zones(zones)
    return _zone_of_xy(p.x, p.y, zones)


def _zone_of_xy(x: float, y: float, zones: Sequence[Zone]) -> str:
    for z in zones:
        if z.contains(x, y):
            return z.zone_id
    return OUTSIDE


def zones_of(xy: np.ndarray, zones: Sequence[Zone]) -> list[str]:
    """Vectorised ``zone_of`` over an ``(n, 2)`` array of horizontal positions."""
    check_zones(zones)
    return [_zone_of_xy(float(x), float(y), zones) for x, y in np.asarray(xy, dtype=float).reshape(-1, 2)]


def validate_dataset(dataset: Dataset) -> list[Violation]:
    """Every invariant violation in ``dataset``; an empty list means valid."""
    out: list[Violation] = []
    if not dataset.roster:
        out.append(Violation("empty-roster"))
    ids = [ap.ap_id for ap in dataset.roster]
    if len(set(ids)) != len(ids):
        out.append(Violation("duplicate-ap", detail=",".join(sorted({i for i in ids if ids.count(i) > 1}))))
    known = set(ids)

    zones_ok = True
    try:
        check_zones(dataset.zones)
    except LocfuseError as exc:
        zones_ok = False
        out.append(Violation(exc.code, detail=str(exc)))
    zone_ids = {z.zone_id for z in dataset.zones}

    seen_ids: set[str] = set()
    for s in dataset.samples:
        if s.sample_id in seen_ids:
            out.append(Violation("duplicate-sample", s.sample_id))
        seen_ids.add(s.sample_id)
        for ap_id, v in s.rssi.items():
            if ap_id not in known:
                out.append(Violation("unknown-ap", s.sample_id, ap_id))
            elif not (math.isfinite(v) and RSSI_FLOOR <= v <= 0.0):
                out.append(Violation("rssi-out-of-range", s.sample_id, f"{ap_id}={v}"))
        for ap_id, d in (s.ranges or {}).items():
            if ap_id not in known:
                out.append(Violation("unknown-ap", s.sample_id, ap_id))
            elif not (math.isfinite(d) and d >= 0.0):
                out.append(Violation("negative-range", s.sample_id, f"{ap_id}={d}"))
        if s.zone_label != OUTSIDE and s.zone_label not in zone_ids:
            out.append(Violation("unknown-zone", s.sample_id, s.zone_label))
        elif zones_ok:
            expected = _zone_of_xy(s.truth.x, s.truth.y, dataset.zones)
            if s.zone_label != expected:
                out.append(Violation("label-mismatch", s.sample_id, f"truth in {expected}, labelled {s.zone_label}"))
    return out


def select_columns(roster: Sequence[AccessPoint], selector: Selector) -> tuple[str, ...]:
    cols = tuple(ap.ap_id for ap in roster if selector.accepts(ap.tech))
    if not cols:
        raise LocfuseError("empty-selector", f"no {selector.value} access points in roster")
    return cols


def feature_rows(samples: Sequence[Sample], columns: Sequence[str]) -> np.ndarray:
    rows = np.full((len(samples), len(columns)), RSSI_FLOOR, dtype=float)
    for i, s in enumerate(samples):
        for j, ap_id in enumerate(columns):
            v = s.rssi.get(ap_id)
            if v is not None:
                rows[i, j] = v
    return rows


def feature_matrix(dataset: Dataset, selector: Selector) -> FeatureMatrix:
    cols = select_columns(dataset.roster, selector)
    return FeatureMatrix(cols, feature_rows(dataset.samples, cols))
