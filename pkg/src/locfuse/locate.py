"""Localization techniques: proximity, RSSI ranging, least-squares
multilateration, kNN fingerprinting, and the two forest pipelines."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .forest import Forest, predict_class, predict_position
from .model import RSSI_FLOOR, AccessPoint, LocfuseError, Position, Zone, zone_of
from .propagation import PropagationParams

GN_STEP_TOL = 1e-6
GN_MAX_ITER = 50


@dataclass(frozen=True)
class RangeObservation:
    ap_position: Position
    distance: float

    def __post_init__(self):
        if not (math.isfinite(self.distance) and self.distance >= 0):
            raise LocfuseError("negative-range", str(self.distance))


@dataclass(frozen=True)
class FingerprintDb:
    vectors: np.ndarray
    positions: tuple[Position, ...]
    columns: tuple[str, ...]

    def __post_init__(self):
        vecs = np.atleast_2d(np.asarray(self.vectors, dtype=float))
        object.__setattr__(self, "vectors", vecs)
        object.__setattr__(self, "positions", tuple(self.positions))
        object.__setattr__(self, "columns", tuple(self.columns))
        if len(self.positions) and vecs.shape != (len(self.positions), len(self.columns)):
            raise LocfuseError("width-mismatch", f"fingerprints {vecs.shape} vs {len(self.positions)} x {len(self.columns)}")

    def __len__(self) -> int:
        return len(self.positions)


def proximity_locate(x, roster: Sequence[AccessPoint], columns: Sequence[str]) -> Position:
    """Position of the loudest AP; equal readings resolve to the smallest ap_id."""
    x = np.asarray(x, dtype=float)
    if x.shape != (len(columns),):
        raise LocfuseError("width-mismatch", f"expected {len(columns)} features, got {x.shape}")
    by_id = {ap.ap_id: ap for ap in roster}
    best = None
    for ap_id, v in zip(columns, x):
        if v <= RSSI_FLOOR:
            continue
        if best is None or v > best[0] or (v == best[0] and ap_id < best[1]):
            best = (v, ap_id)
    if best is None:
        raise LocfuseError("no-coverage", "every AP is at the RSSI floor")
    return by_id[best[1]].position


def rssi_to_range(rssi: float, tx_power: float, params: PropagationParams) -> float:
    """Invert the log-distance model (shadowing and walls ignored)."""
    if not rssi > RSSI_FLOOR:
        raise LocfuseError("unrangeable", f"rssi {rssi} at or below the floor")
    return 10.0 ** ((tx_power - params.pl0 - rssi) / (10.0 * params.n))


def _linear_ls(anchors: np.ndarray, d: np.ndarray) -> np.ndarray:
    # subtract the first circle equation from the others
    a0, d0 = anchors[0], d[0]
    A = 2.0 * (anchors[1:] - a0)
    b = d0**2 - d[1:] ** 2 + (anchors[1:] ** 2).sum(axis=1) - (a0**2).sum()
    sol, *_ = np.linalg.lstsq(A, b, rcond=None)
    return sol


def _cost(p: np.ndarray, anchors: np.ndarray, d: np.ndarray) -> float:
    r = np.linalg.norm(anchors - p, axis=1) - d
    return float(r @ r)


def multilaterate(obs: Sequence[RangeObservation], initial_guess: Position | None = None) -> Position:
    """Least-squares 2D position from ranges to known anchors.

    Minimises the sum of squared range residuals by Gauss-Newton, starting
    from the linearised closed-form solution (or ``initial_guess``).  Anchor
    heights are ignored.  The best iterate seen is returned.
    """
    if len(obs) < 3:
        raise LocfuseError("underdetermined", f"{len(obs)} observations, need >= 3")
    anchors = np.array([[o.ap_position.x, o.ap_position.y] for o in obs], dtype=float)
    d = np.array([o.distance for o in obs], dtype=float)
    spread = anchors[1:] - anchors[0]
    sv = np.linalg.svd(spread, compute_uv=False)
    scale = max(1.0, float(np.abs(spread).max()))
    if len(sv) < 2 or sv[1] <= 1e-9 * scale:
        raise LocfuseError("degenerate-geometry", "anchors are collinear")

    p = np.array(initial_guess.xy()) if initial_guess is not None else _linear_ls(anchors, d)
    if not np.all(np.isfinite(p)):
        raise LocfuseError("diverged", "non-finite initial estimate")
    best_p, best_cost = p.copy(), _cost(p, anchors, d)
    for _ in range(GN_MAX_ITER):
        if best_cost == 0.0:
            break
        diff = p - anchors
        est = np.linalg.norm(diff, axis=1)
        J = np.zeros_like(diff)
        nz = est > 0
        J[nz] = diff[nz] / est[nz, None]
        r = est - d
        step, *_ = np.linalg.lstsq(J, -r, rcond=None)
        p = p + step
        if not np.all(np.isfinite(p)):
            raise LocfuseError("diverged", "non-finite Gauss-Newton iterate")
        c = _cost(p, anchors, d)
        if c < best_cost:
            best_p, best_cost = p.copy(), c
        if np.linalg.norm(step) < GN_STEP_TOL:
            break
    return Position(float(best_p[0]), float(best_p[1]), 0.0)


def knn_locate(db: FingerprintDb, x, k: int) -> Position:
    """Mean position of the ``k`` nearest fingerprints (Euclidean, stable on ties)."""
    if len(db) == 0:
        raise LocfuseError("empty-db")
    if not 1 <= k <= len(db):
        raise LocfuseError("bad-k", f"k={k} outside [1, {len(db)}]")
    x = np.asarray(x, dtype=float)
    if x.shape != (len(db.columns),):
        raise LocfuseError("width-mismatch", f"expected {len(db.columns)} features, got {x.shape}")
    dist = np.sqrt(((db.vectors - x) ** 2).sum(axis=1))
    nearest = np.argsort(dist, kind="stable")[:k]
    xs = [db.positions[i].x for i in nearest]
    ys = [db.positions[i].y for i in nearest]
    return Position(sum(xs) / k, sum(ys) / k, 0.0)


def classify_pipeline(forest: Forest, x) -> str:
    return predict_class(forest, x)


def regress_then_classify(forest: Forest, x, zones: Sequence[Zone]) -> str:
    return zone_of(predict_position(forest, x), zones)
