"""Model files: a serialized forest followed by the zone table it classifies into.

Zone lines come after the last tree, one per zone::

    Z <zone_id> <x_min> <y_min> <x_max> <y_max>
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

from .forest import Forest, dumps_forest, loads_forest
from .model import LocfuseError, Zone


def dumps_model(forest: Forest, zones: Sequence[Zone] = ()) -> str:
    lines = [f"Z {z.zone_id} {z.x_min!r} {z.y_min!r} {z.x_max!r} {z.y_max!r}" for z in zones]
    return dumps_forest(forest) + "".join(line + "\n" for line in lines)


def loads_model(text: str) -> tuple[Forest, tuple[Zone, ...]]:
    forest, rest = loads_forest(text)
    zones = []
    for line in rest:
        parts = line.split()
        if not parts:
            continue
        if parts[0] != "Z" or len(parts) != 6:
            raise LocfuseError("bad-forest-file", f"unexpected trailing line {line!r}")
        try:
            zones.append(Zone(parts[1], *(float(v) for v in parts[2:])))
        except ValueError as exc:
            raise LocfuseError("bad-forest-file", str(exc)) from None
    return forest, tuple(zones)


def save_model(path, forest: Forest, zones: Sequence[Zone] = ()) -> None:
    Path(path).write_text(dumps_model(forest, zones), encoding="utf-8", newline="")


def load_model(path) -> tuple[Forest, tuple[Zone, ...]]:
    return loads_model(Path(path).read_text(encoding="utf-8"))
