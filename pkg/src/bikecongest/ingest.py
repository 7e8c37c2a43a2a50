"""CSV and GeoJSON loaders for every input the pipeline reads.

Every loader returns ``(records, report)``. Bad rows never abort a load; they
are tallied in the :class:`RejectReport` by reason, and only an input with no
usable rows at all is an error.
"""

import csv
import json
import math
from collections import Counter
from dataclasses import dataclass, field
from datetime import datetime
from enum import Enum, IntEnum
from pathlib import Path

from . import geo
from .errors import (
    DegeneratePolygon, EmptyInput, InputError, MissingColumn, MissingFile, ZeroArea,
)
from .validation import parse_timestamp, valid_lonlat

DEFAULT_SLOT_AREA_M2 = 1.2

EVENT_COLUMNS = {
    "bicycle_id": "bicycle_id",
    "timestamp": "update_time",
    "longitude": "longitude",
    "latitude": "latitude",
    "lock_status": "lock_status",
}
POI_COLUMNS = {
    "name": "name",
    "address": "address",
    "district": "district",
    "category": "type",
    "longitude": "longitude",
    "latitude": "latitude",
}
TRANSIT_COLUMNS = {
    "kind": "kind",
    "name": "name",
    "line": "line",
    "longitude": "longitude",
    "latitude": "latitude",
}
FENCE_COLUMNS = {"fence_id": "fence_id", "vertices": "vertices"}
TRAJECTORY_COLUMNS = {
    "bicycle_id": "bicycle_id",
    "timestamp": "timestamp",
    "longitude": "longitude",
    "latitude": "latitude",
}


class LockStatus(IntEnum):
    UNLOCKED = 0
    LOCKED = 1


class PoiCategory(str, Enum):
    TRANSPORT = "Transport"
    SHOPPING = "Shopping"
    CULTURE = "Culture"
    SPORTS = "Sports"
    LIFE = "Life"
    LANDSCAPE = "Landscape"
    RESTAURANT = "Restaurant"
    MEDICAL = "Medical"
    COMPANY = "Company"

    @classmethod
    def parse(cls, text):
        wanted = text.strip().lower()
        for member in cls:
            if member.value.lower() == wanted:
                return member
        raise ValueError(f"unknown category {text!r}")


class TransitKind(str, Enum):
    SUBWAY = "Subway"
    BUS = "Bus"

    @classmethod
    def parse(cls, text):
        wanted = text.strip().lower()
        for member in cls:
            if member.value.lower() == wanted:
                return member
        raise ValueError(f"unknown transit kind {text!r}")


@dataclass(frozen=True)
class BikeEvent:
    bicycle_id: str
    timestamp: datetime
    position: tuple
    lock_status: LockStatus


@dataclass(frozen=True)
class Fence:
    fence_id: str
    polygon: tuple
    area_m2: float
    capacity_pc: int
    centroid: tuple


@dataclass(frozen=True)
class Poi:
    name: str
    category: PoiCategory
    position: tuple
    district: str = ""
    address: str = ""


@dataclass(frozen=True)
class TransitStation:
    kind: TransitKind
    name: str
    position: tuple
    line: str = ""


@dataclass(frozen=True)
class TrajectoryPoint:
    bicycle_id: str
    timestamp: datetime
    position: tuple


@dataclass
class RejectReport:
    """Row accounting for one loader call.

    ``total_rows == valid_rows + rejected_rows`` always holds; repairs are
    fixes applied to rows that were then accepted.
    """

    source: str
    total_rows: int = 0
    valid_rows: int = 0
    reasons: Counter = field(default_factory=Counter)
    repairs: Counter = field(default_factory=Counter)
    samples: list = field(default_factory=list)

    max_samples = 20

    @property
    def rejected_rows(self):
        return sum(self.reasons.values())

    def reject(self, row_number, reason):
        self.reasons[reason] += 1
        if len(self.samples) < self.max_samples:
            self.samples.append({"row": row_number, "reason": reason})

    def to_dict(self):
        return {
            "source": self.source,
            "total_rows": self.total_rows,
            "valid_rows": self.valid_rows,
            "rejected_rows": self.rejected_rows,
            "reasons": dict(sorted(self.reasons.items())),
            "repairs": dict(sorted(self.repairs.items())),
            "samples": list(self.samples),
        }


def capacity_for_area(area_m2, slot_area_m2=DEFAULT_SLOT_AREA_M2):
    return max(1, math.floor(area_m2 / slot_area_m2))


def make_fence(fence_id, ring, slot_area_m2=DEFAULT_SLOT_AREA_M2):
    """Build a :class:`Fence` from a closed ring; raises on degenerate rings."""
    ring = tuple(geo.close_ring(ring))
    if len(ring) < 4:
        raise DegeneratePolygon(f"fence {fence_id!r}: ring needs at least 3 vertices")
    area = geo.polygon_area_m2(ring)
    return Fence(
        fence_id=str(fence_id),
        polygon=ring,
        area_m2=area,
        capacity_pc=capacity_for_area(area, slot_area_m2),
        centroid=tuple(geo.polygon_centroid(ring)),
    )


# -- CSV plumbing ------------------------------------------------------------


def _open_checked(path):
    path = Path(path)
    if not path.is_file():
        raise MissingFile(path)
    return path


def _csv_rows(path, columns, required):
    """Yield ``(row_number, row_dict)`` after verifying the header."""
    path = _open_checked(path)
    with open(path, newline="", encoding="utf-8-sig") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise EmptyInput(f"{path} is empty (no header)")
        header = [h.strip() for h in header]
        positions = {}
        for logical, column in columns.items():
            if column in header:
                positions[logical] = header.index(column)
            elif logical in required:
                raise MissingColumn(column, path)
        rows = []
        for number, raw in enumerate(reader, start=2):
            if not raw or all(not cell.strip() for cell in raw):
                continue
            if len(raw) != len(header):
                rows.append((number, None))
                continue
            rows.append((number, {k: raw[i] for k, i in positions.items()}))
    return rows


def _parse_position(row):
    lon = float(row["longitude"])
    lat = float(row["latitude"])
    if not valid_lonlat(lon, lat):
        raise ValueError("out-of-range coordinate")
    return (lon, lat)


def _position_or_reason(row):
    try:
        return _parse_position(row), None
    except ValueError as exc:
        if "out-of-range" in str(exc):
            return None, "out-of-range coordinate"
        return None, "bad coordinate"


def _finish(report, records, allow_empty, path):
    report.valid_rows = len(records)
    if not records and not allow_empty:
        raise EmptyInput(f"{path}: no valid rows ({report.total_rows} data rows read)")
    return tuple(records), report


# -- loaders -----------------------------------------------------------------


def load_events(path, schema_config=None, allow_empty=False):
    """Read lock/unlock events in file order."""
    columns = {**EVENT_COLUMNS, **(schema_config or {})}
    rows = _csv_rows(path, columns, required=set(EVENT_COLUMNS))
    report = RejectReport(source=str(path), total_rows=len(rows))
    events = []
    for number, row in rows:
        if row is None:
            report.reject(number, "malformed row")
            continue
        bicycle_id = row["bicycle_id"].strip()
        if not bicycle_id:
            report.reject(number, "missing bicycle id")
            continue
        try:
            ts = parse_timestamp(row["timestamp"])
        except ValueError:
            report.reject(number, "bad timestamp")
            continue
        position, reason = _position_or_reason(row)
        if reason:
            report.reject(number, reason)
            continue
        flag = row["lock_status"].strip()
        if flag not in ("0", "1"):
            report.reject(number, "bad lock flag")
            continue
        events.append(BikeEvent(bicycle_id, ts, position, LockStatus(int(flag))))
    return _finish(report, events, allow_empty, path)


def _fence_from_ring(fence_id, ring, slot_area_m2, report, number, seen):
    if not fence_id:
        report.reject(number, "missing fence id")
        return None
    if fence_id in seen:
        report.reject(number, "duplicate fence id")
        return None
    try:
        ring = [(float(v[0]), float(v[1])) for v in ring]
    except (TypeError, ValueError, IndexError):
        report.reject(number, "bad vertices")
        return None
    if not ring or not all(valid_lonlat(*v) for v in ring):
        report.reject(number, "bad vertices" if not ring else "out-of-range coordinate")
        return None
    if len(set(ring)) < 3:
        report.reject(number, "degenerate polygon")
        return None
    if ring[0] != ring[-1]:
        report.repairs["closed ring"] += 1
    try:
        fence = make_fence(fence_id, ring, slot_area_m2)
    except ZeroArea:
        report.reject(number, "zero area")
        return None
    except DegeneratePolygon:
        report.reject(number, "degenerate polygon")
        return None
    seen.add(fence_id)
    return fence


def _is_geojson(path):
    if path.suffix.lower() in (".geojson", ".json"):
        return True
    with open(path, encoding="utf-8-sig") as fh:
        head = fh.read(64).lstrip()
    return head.startswith("{")


def load_fences(path, slot_area_m2=DEFAULT_SLOT_AREA_M2, allow_empty=False, columns=None):
    """Read fence polygons from a GeoJSON FeatureCollection or a CSV whose
    ``vertices`` column holds a JSON ``[[lon, lat], ...]`` array."""
    path = _open_checked(path)
    seen = set()
    fences = []
    if _is_geojson(path):
        with open(path, encoding="utf-8-sig") as fh:
            text = fh.read()
        if not text.strip():
            raise EmptyInput(f"{path} is empty")
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InputError(f"{path} is not valid JSON: {exc}") from exc
        features = doc.get("features", []) if isinstance(doc, dict) else []
        report = RejectReport(source=str(path), total_rows=len(features))
        for number, feature in enumerate(features, start=1):
            props = feature.get("properties") or {}
            geometry = feature.get("geometry") or {}
            if geometry.get("type") != "Polygon" or not geometry.get("coordinates"):
                report.reject(number, "unsupported geometry")
                continue
            fence_id = props.get("fence_id")
            fence_id = str(fence_id).strip() if fence_id is not None else ""
            fence = _fence_from_ring(
                fence_id, geometry["coordinates"][0], slot_area_m2, report, number, seen
            )
            if fence is not None:
                fences.append(fence)
        return _finish(report, fences, allow_empty, path)

    columns = {**FENCE_COLUMNS, **(columns or {})}
    rows = _csv_rows(path, columns, required=set(FENCE_COLUMNS))
    report = RejectReport(source=str(path), total_rows=len(rows))
    for number, row in rows:
        if row is None:
            report.reject(number, "malformed row")
            continue
        try:
            ring = json.loads(row["vertices"])
        except json.JSONDecodeError:
            report.reject(number, "bad vertices")
            continue
        if not isinstance(ring, list):
            report.reject(number, "bad vertices")
            continue
        fence = _fence_from_ring(row["fence_id"].strip(), ring, slot_area_m2, report, number, seen)
        if fence is not None:
            fences.append(fence)
    return _finish(report, fences, allow_empty, path)


def load_pois(path, columns=None, allow_empty=False):
    columns = {**POI_COLUMNS, **(columns or {})}
    rows = _csv_rows(path, columns, required={"name", "category", "longitude", "latitude"})
    report = RejectReport(source=str(path), total_rows=len(rows))
    pois = []
    for number, row in rows:
        if row is None:
            report.reject(number, "malformed row")
            continue
        try:
            category = PoiCategory.parse(row["category"])
        except ValueError:
            report.reject(number, "unknown category")
            continue
        position, reason = _position_or_reason(row)
        if reason:
            report.reject(number, reason)
            continue
        pois.append(
            Poi(
                name=row["name"].strip(),
                category=category,
                position=position,
                district=row.get("district", "").strip(),
                address=row.get("address", "").strip(),
            )
        )
    return _finish(report, pois, allow_empty, path)


def load_transit(path, kind=None, columns=None, allow_empty=False):
    """Read subway/bus stations. Files without a ``kind`` column need ``kind``."""
    columns = {**TRANSIT_COLUMNS, **(columns or {})}
    required = {"name", "longitude", "latitude"}
    if kind is None:
        required.add("kind")
    rows = _csv_rows(path, columns, required=required)
    fixed_kind = TransitKind.parse(kind) if isinstance(kind, str) else kind
    report = RejectReport(source=str(path), total_rows=len(rows))
    stations = []
    for number, row in rows:
        if row is None:
            report.reject(number, "malformed row")
            continue
        row_kind = fixed_kind
        if "kind" in row and row["kind"].strip():
            try:
                row_kind = TransitKind.parse(row["kind"])
            except ValueError:
                report.reject(number, "unknown kind")
                continue
        if row_kind is None:
            report.reject(number, "unknown kind")
            continue
        position, reason = _position_or_reason(row)
        if reason:
            report.reject(number, reason)
            continue
        line = row.get("line", "").strip() if row_kind is TransitKind.SUBWAY else ""
        stations.append(TransitStation(row_kind, row["name"].strip(), position, line))
    return _finish(report, stations, allow_empty, path)


def load_trajectories(path, columns=None, allow_empty=True):
    columns = {**TRAJECTORY_COLUMNS, **(columns or {})}
    rows = _csv_rows(path, columns, required=set(TRAJECTORY_COLUMNS))
    report = RejectReport(source=str(path), total_rows=len(rows))
    points = []
    for number, row in rows:
        if row is None:
            report.reject(number, "malformed row")
            continue
        try:
            ts = parse_timestamp(row["timestamp"])
        except ValueError:
            report.reject(number, "bad timestamp")
            continue
        position, reason = _position_or_reason(row)
        if reason:
            report.reject(number, reason)
            continue
        points.append(TrajectoryPoint(row["bicycle_id"].strip(), ts, position))
    return _finish(report, points, allow_empty, path)
