"""Sample ingestion service.

Clients POST one JSON record per request to ``/samples``::

    {"sample_id": "s1", "x": 1.0, "y": 2.0, "z": 0.0, "zone": "lab1",
     "rssi": {"g1": -61.0, "w1": -70.5}, "ranges": {"g1": 4.2}}

``z`` and ``ranges`` are optional.  Accepted records are appended to a
newline-delimited JSON log (one record per line) through a single writer;
``GET /samples/count`` and ``GET /dataset`` read a consistent prefix.
"""

from __future__ import annotations

import json
import logging
import math
import os
import threading
from http import HTTPStatus
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Sequence

from .csvio import dumps_samples
from .model import AccessPoint, Dataset, Position, Sample, Violation, Zone, validate_dataset

log = logging.getLogger(__name__)

MAX_BODY = 1 << 20


class InvalidRecord(Exception):
    def __init__(self, violations: list[Violation]):
        self.violations = violations
        super().__init__("; ".join(map(str, violations)))


class StorageError(Exception):
    pass


def _num(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)


def parse_record(obj, roster: Sequence[AccessPoint], zones: Sequence[Zone] = ()) -> Sample:
    """Turn a wire record into a Sample, or raise InvalidRecord."""
    if not isinstance(obj, dict):
        raise InvalidRecord([Violation("malformed-record", detail="body must be a JSON object")])
    sid = obj.get("sample_id")
    bad = []
    if not isinstance(sid, str) or not sid or "," in sid or "\n" in sid:
        bad.append(Violation("malformed-record", None, "sample_id must be a non-empty string without commas"))
        sid = None
    for key in ("x", "y"):
        if not _num(obj.get(key)):
            bad.append(Violation("malformed-record", sid, f"{key} must be a finite number"))
    if "z" in obj and obj["z"] is not None and not _num(obj["z"]):
        bad.append(Violation("malformed-record", sid, "z must be a finite number"))
    zone = obj.get("zone")
    if not isinstance(zone, str) or not zone:
        bad.append(Violation("malformed-record", sid, "zone must be a non-empty string"))
    maps = {}
    for key, required in (("rssi", True), ("ranges", False)):
        m = obj.get(key)
        if m is None and not required:
            continue
        if not isinstance(m, dict) or not all(isinstance(k, str) and _num(v) for k, v in m.items()):
            bad.append(Violation("malformed-record", sid, f"{key} must map ap_id to a number"))
            continue
        maps[key] = {k: float(v) for k, v in m.items()}
    unknown = set(obj) - {"sample_id", "x", "y", "z", "zone", "rssi", "ranges"}
    if unknown:
        bad.append(Violation("malformed-record", sid, f"unexpected fields {sorted(unknown)}"))
    if bad:
        raise InvalidRecord(bad)
    sample = Sample(
        sample_id=sid,
        rssi=maps["rssi"],
        truth=Position(float(obj["x"]), float(obj["y"]), float(obj.get("z") or 0.0)),
        zone_label=zone,
        ranges=maps.get("ranges") or None,
    )
    violations = validate_dataset(Dataset(tuple(roster), tuple(zones), (sample,)))
    if violations:
        raise InvalidRecord(violations)
    return sample


def record_of(sample: Sample) -> dict:
    rec = {
        "sample_id": sample.sample_id,
        "x": sample.truth.x,
        "y": sample.truth.y,
        "zone": sample.zone_label,
        "rssi": dict(sample.rssi),
    }
    if sample.truth.z:
        rec["z"] = sample.truth.z
    if sample.ranges:
        rec["ranges"] = dict(sample.ranges)
    return rec


class SampleStore:
    """Append-only record log with an in-memory index of accepted samples.

    A failed append truncates the log back to its previous length, so the
    file always holds exactly the accepted records.
    """

    def __init__(self, path, roster: Sequence[AccessPoint], zones: Sequence[Zone] = ()):
        self.path = Path(path)
        self.roster = tuple(roster)
        self.zones = tuple(zones)
        self._lock = threading.Lock()
        self._samples: list[Sample] = []
        self._ids: set[str] = set()
        if self.path.exists():
            self._replay()
        else:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self.path.touch()

    def _replay(self):
        with self.path.open("r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                if not line.strip():
                    continue
                try:
                    sample = parse_record(json.loads(line), self.roster, self.zones)
                except (ValueError, InvalidRecord) as exc:
                    raise StorageError(f"{self.path}:{lineno}: unreadable record: {exc}") from None
                self._samples.append(sample)
                self._ids.add(sample.sample_id)

    def append(self, obj) -> Sample:
        sample = parse_record(obj, self.roster, self.zones)
        line = json.dumps(record_of(sample), sort_keys=True) + "\n"
        with self._lock:
            if sample.sample_id in self._ids:
                raise InvalidRecord([Violation("duplicate-sample", sample.sample_id)])
            size = self.path.stat().st_size
            try:
                with self.path.open("a", encoding="utf-8") as fh:
                    fh.write(line)
                    fh.flush()
                    os.fsync(fh.fileno())
            except OSError as exc:
                with self.path.open("r+b") as fh:
                    fh.truncate(size)
                raise StorageError(str(exc)) from exc
            self._samples.append(sample)
            self._ids.add(sample.sample_id)
        return sample

    def count(self) -> int:
        with self._lock:
            return len(self._samples)

    def snapshot(self) -> Dataset:
        with self._lock:
            samples = tuple(self._samples)
        return Dataset(self.roster, self.zones, samples)

    def export_csv(self) -> str:
        snap = self.snapshot()
        return dumps_samples(snap.samples, snap.roster)


class IngestHandler(BaseHTTPRequestHandler):
    store: SampleStore  # set on the subclass made by make_server

    def log_message(self, format, *args):
        log.info("%s - %s", self.address_string(), format % args)

    def _send(self, status: int, body: str, content_type: str = "application/json", extra: dict | None = None):
        data = body.encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(data)))
        for k, v in (extra or {}).items():
            self.send_header(k, v)
        self.end_headers()
        self.wfile.write(data)

    def do_GET(self):
        if self.path == "/samples/count":
            self._send(200, f"{self.store.count()}\n", "text/plain; charset=utf-8")
        elif self.path == "/dataset":
            self._send(
                200,
                self.store.export_csv(),
                "text/csv; charset=utf-8",
                {"Content-Disposition": 'attachment; filename="dataset.csv"'},
            )
        else:
            self._send(404, json.dumps({"error": "not found"}))

    def do_POST(self):
        if self.path != "/samples":
            self._send(404, json.dumps({"error": "not found"}))
            return
        length = int(self.headers.get("Content-Length") or 0)
        if length > MAX_BODY:
            self._send(413, json.dumps({"error": "record too large"}))
            return
        raw = self.rfile.read(length)
        try:
            obj = json.loads(raw.decode("utf-8"))
        except (UnicodeDecodeError, ValueError) as exc:
            self._send(422, json.dumps({"violations": [f"malformed-record ({exc})"]}))
            return
        try:
            sample = self.store.append(obj)
        except InvalidRecord as exc:
            self._send(422, json.dumps({"violations": [str(v) for v in exc.violations]}))
        except StorageError as exc:
            log.error("append failed: %s", exc)
            self._send(500, json.dumps({"error": "storage failure"}))
        else:
            self._send(HTTPStatus.CREATED, json.dumps({"sample_id": sample.sample_id, "count": self.store.count()}))


def make_server(host: str, port: int, store: SampleStore) -> ThreadingHTTPServer:
    handler = type("BoundIngestHandler", (IngestHandler,), {"store": store})
    return ThreadingHTTPServer((host, port), handler)
