"""Log-distance path-loss simulator with shadowing and wall attenuation.

The measurement campaign this toolkit evaluates is not public, so datasets
are synthesised from a replica of the two-laboratory deployment: three
ceiling-mounted gNBs (3774.990 MHz, 20 dBm) and three shelf-mounted WiFi
mesh APs at 2 m.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .model import (
    RSSI_FLOOR,
    AccessPoint,
    Dataset,
    LocfuseError,
    Position,
    RadioTechnology,
    Sample,
    Zone,
    _zone_of_xy,
    check_zones,
)
from .seeding import derive_rng

GNB_FREQUENCY_MHZ = 3774.990
WIFI_FREQUENCY_MHZ = 5180.0
GNB_TX_POWER_DBM = 20.0
UE_HEIGHT_M = 1.5

Segment = tuple[float, float, float, float]


def fspl_db(distance_m: float, frequency_mhz: float) -> float:
    """Free-space path loss in dB (distance in m, frequency in MHz)."""
    return 20.0 * math.log10(distance_m) + 20.0 * math.log10(frequency_mhz) - 27.55


@dataclass(frozen=True)
class PropagationParams:
    pl0: float
    n: float
    sigma_shadow: float = 4.0
    wall_loss: float = 8.0
    range_noise_sigma: float = 1.0

    def __post_init__(self):
        if not (self.n > 0):
            raise LocfuseError("bad-params", f"path-loss exponent must be > 0, got {self.n}")
        for name in ("sigma_shadow", "wall_loss", "range_noise_sigma"):
            if not getattr(self, name) >= 0:
                raise LocfuseError("bad-params", f"{name} must be >= 0")
        if not math.isfinite(self.pl0):
            raise LocfuseError("bad-params", "pl0 must be finite")


@dataclass(frozen=True)
class Scenario:
    roster: tuple[AccessPoint, ...]
    zones: tuple[Zone, ...]
    walls: tuple[Segment, ...]
    params: Mapping[RadioTechnology, PropagationParams]
    sampling_region: tuple[float, float, float, float]
    ue_height: float = UE_HEIGHT_M
    name: str = field(default="custom", compare=False)

    def __post_init__(self):
        object.__setattr__(self, "roster", tuple(self.roster))
        object.__setattr__(self, "zones", tuple(self.zones))
        object.__setattr__(self, "walls", tuple(tuple(float(v) for v in w) for w in self.walls))
        if not self.roster:
            raise LocfuseError("empty-roster")
        ids = [ap.ap_id for ap in self.roster]
        if len(set(ids)) != len(ids):
            raise LocfuseError("duplicate-ap")
        for ap in self.roster:
            if ap.tech not in self.params:
                raise LocfuseError("missing-params", f"no propagation params for {ap.tech.value}")
        check_zones(self.zones)


def path_loss_db(distance: float, params: PropagationParams) -> float:
    if not distance > 0:
        raise LocfuseError("non-positive-distance", f"d={distance}")
    return params.pl0 + 10.0 * params.n * math.log10(distance)


def _orient(ax, ay, bx, by, cx, cy) -> float:
    return (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)


def segments_cross(p: Segment, q: Segment) -> bool:
    """True if the closed 2D segments ``p`` and ``q`` share a point."""
    x1, y1, x2, y2 = p
    x3, y3, x4, y4 = q
    d1 = _orient(x3, y3, x4, y4, x1, y1)
    d2 = _orient(x3, y3, x4, y4, x2, y2)
    d3 = _orient(x1, y1, x2, y2, x3, y3)
    d4 = _orient(x1, y1, x2, y2, x4, y4)
    if ((d1 > 0 and d2 < 0) or (d1 < 0 and d2 > 0)) and ((d3 > 0 and d4 < 0) or (d3 < 0 and d4 > 0)):
        return True

    def on_seg(ax, ay, bx, by, cx, cy):
        return min(ax, bx) <= cx <= max(ax, bx) and min(ay, by) <= cy <= max(ay, by)

    return (
        (d1 == 0 and on_seg(x3, y3, x4, y4, x1, y1))
        or (d2 == 0 and on_seg(x3, y3, x4, y4, x2, y2))
        or (d3 == 0 and on_seg(x1, y1, x2, y2, x3, y3))
        or (d4 == 0 and on_seg(x1, y1, x2, y2, x4, y4))
    )


def walls_crossed(a: Position, b: Position, walls: Sequence[Segment]) -> int:
    link = (a.x, a.y, b.x, b.y)
    return sum(1 for w in walls if segments_cross(link, w))


def distance_3d(a: Position, b: Position) -> float:
    return math.sqrt((a.x - b.x) ** 2 + (a.y - b.y) ** 2 + (a.z - b.z) ** 2)


def mean_rssi(ap: AccessPoint, ue: Position, scenario: Scenario) -> float:
    """Deterministic part of the received power (no shadowing, no clipping)."""
    d = distance_3d(ap.position, ue)
    if d == 0:
        raise LocfuseError("degenerate-geometry", f"UE coincides with {ap.ap_id}")
    params = scenario.params[ap.tech]
    return ap.tx_power - path_loss_db(d, params) - params.wall_loss * walls_crossed(ap.position, ue, scenario.walls)


def simulate_rssi(ap: AccessPoint, ue: Position, scenario: Scenario, rng: np.random.Generator) -> float:
    """Received power in dBm, with log-normal shadowing, clipped to the RSSI floor.

    Values above 0 dBm are also clipped so every output is a valid sample
    reading.
    """
    params = scenario.params[ap.tech]
    rssi = mean_rssi(ap, ue, scenario) - rng.normal(0.0, params.sigma_shadow)
    return float(min(0.0, max(RSSI_FLOOR, rssi)))


def simulate_range(ap: AccessPoint, ue: Position, params: PropagationParams, rng: np.random.Generator) -> float:
    d = distance_3d(ap.position, ue)
    return float(max(0.0, d + rng.normal(0.0, params.range_noise_sigma)))


def generate_dataset(scenario: Scenario, n_samples: int, seed: int, with_ranges: bool = False) -> Dataset:
    """Draw ``n_samples`` UE positions uniformly over the sampling region.

    Sample ``i`` uses its own generator derived from ``(seed, i)``, so the
    output does not depend on how the index range is partitioned.  Truth
    positions are stored in 2D (z = 0) and rounded to the millimetre; the UE
    is held at ``scenario.ue_height`` for the radio links.  RSSI is rounded to
    0.1 dB and ranges to the millimetre so datasets survive CSV round-trips.
    """
    if n_samples < 1:
        raise LocfuseError("bad-sample-count", str(n_samples))
    x0, y0, x1, y1 = scenario.sampling_region
    if not (x0 < x1 and y0 < y1):
        raise LocfuseError("empty-sampling-region", str(scenario.sampling_region))
    width = len(str(n_samples - 1))
    samples = []
    for i in range(n_samples):
        rng = derive_rng(seed, i)
        x = round(float(rng.uniform(x0, x1)), 3)
        y = round(float(rng.uniform(y0, y1)), 3)
        ue = Position(x, y, scenario.ue_height)
        rssi = {ap.ap_id: round(simulate_rssi(ap, ue, scenario, rng), 1) for ap in scenario.roster}
        ranges = None
        if with_ranges:
            ranges = {
                ap.ap_id: round(simulate_range(ap, ue, scenario.params[ap.tech], rng), 3) for ap in scenario.roster
            }
        samples.append(
            Sample(
                sample_id=f"s{i:0{width}d}",
                rssi=rssi,
                truth=Position(x, y),
                zone_label=_zone_of_xy(x, y, scenario.zones),
                ranges=ranges,
            )
        )
    return Dataset(scenario.roster, scenario.zones, tuple(samples))


def reference_scenario() -> Scenario:
    """Replica of the two-laboratory deployment.

    Two adjacent 7 m x 5 m laboratories share one interior wall; a 2 m
    corridor runs along their north side, closed by a wall at y = 7.  One gNB
    is in lab1, one in the neighbouring laboratory across the corridor and
    one on the corridor ceiling.  Two WiFi mesh points sit on corridor
    shelves and one in lab2.  AP coordinates were chosen once by a small
    placement search and are fixed; they stand in for the undimensioned
    floor plan.
    """
    fiveg = PropagationParams(pl0=fspl_db(1.0, GNB_FREQUENCY_MHZ), n=2.2, sigma_shadow=4.0, wall_loss=8.0)
    wifi = PropagationParams(pl0=fspl_db(1.0, WIFI_FREQUENCY_MHZ), n=2.5, sigma_shadow=4.0, wall_loss=8.0)
    g, w = RadioTechnology.FIVE_G, RadioTechnology.WIFI
    roster = (
        AccessPoint("g1", g, Position(3.0, 0.75, 2.5), GNB_TX_POWER_DBM),
        AccessPoint("g2", g, Position(6.5, 7.25, 3.5), GNB_TX_POWER_DBM),
        AccessPoint("g3", g, Position(12.5, 6.25, 3.5), GNB_TX_POWER_DBM),
        AccessPoint("w1", w, Position(12.75, 5.5, 2.0), 20.0),
        AccessPoint("w2", w, Position(3.75, 5.5, 2.0), 20.0),
        AccessPoint("w3", w, Position(10.25, 2.0, 2.0), 20.0),
    )
    zones = (Zone("lab1", 0.0, 0.0, 7.0, 5.0), Zone("lab2", 7.0, 0.0, 14.0, 5.0))
    walls = (
        (7.0, 0.0, 7.0, 5.0),
        (0.0, 5.0, 14.0, 5.0),
        (0.0, 7.0, 14.0, 7.0),
    )
    return Scenario(
        roster=roster,
        zones=zones,
        walls=walls,
        params={g: fiveg, w: wifi},
        sampling_region=(0.0, 0.0, 14.0, 7.0),
        name="reference",
    )
