"""Serialization of pipeline results and atomic file output."""

import csv
import hashlib
import io
import json
import os
import tempfile
from pathlib import Path

from .clustering.features import FEATURE_NAMES
from .congestion import heatmap_rows
from .validation import format_timestamp


def _csv_bytes(header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue().encode("utf-8")


def json_bytes(obj):
    return (json.dumps(obj, indent=2, sort_keys=True, default=str) + "\n").encode("utf-8")


def _opt(value):
    if value is None:
        return ""
    return getattr(value, "value", value)


def trips_csv(trips):
    header = [
        "bicycle_id", "start_time", "end_time", "origin_lon", "origin_lat", "dest_lon",
        "dest_lat", "distance_m", "duration_s", "origin_fence", "dest_fence",
        "origin_poi_cat", "dest_poi_cat",
    ]
    rows = [
        [
            t.bicycle_id, format_timestamp(t.start_time), format_timestamp(t.end_time),
            repr(t.origin[0]), repr(t.origin[1]), repr(t.destination[0]), repr(t.destination[1]),
            repr(t.distance_m), t.duration_s, _opt(t.origin_fence), _opt(t.dest_fence),
            _opt(t.origin_poi_cat), _opt(t.dest_poi_cat),
        ]
        for t in trips
    ]
    return _csv_bytes(header, rows)


def flows_csv(grids):
    header = ["fence_id", "bin_start", "width_s", "inflow", "outflow", "net", "congestion"]
    rows = []
    for width in sorted(grids):
        for cell in grids[width].cells():
            rows.append([
                cell.fence_id, format_timestamp(cell.bin.start), width, cell.inflow,
                cell.outflow, cell.net_p, repr(cell.congestion_c),
            ])
    return _csv_bytes(header, rows)


def congested_spots_csv(spots_by_width):
    header = [
        "fence_id", "width_s", "mean_congestion", "n_bins", "peak_congestion", "peak_bin",
        "order_count",
    ]
    rows = []
    for width in sorted(spots_by_width):
        for s in spots_by_width[width]:
            rows.append([
                s.fence_id, width, repr(s.mean_congestion), s.congested_bin_count,
                repr(s.peak_congestion), format_timestamp(s.peak_bin), s.order_count,
            ])
    return _csv_bytes(header, rows)


def heatmap_csv(grids):
    header = ["fence_id", "bin_start", "width_s", "congestion"]
    rows = []
    for width in sorted(grids):
        for fence_id, start, c in heatmap_rows(grids[width]):
            rows.append([fence_id, format_timestamp(start), width, repr(c)])
    return _csv_bytes(header, rows)


def occupancy_csv(cells_by_width):
    header = ["fence_id", "bin_start", "width_s", "occupancy", "congestion"]
    rows = []
    for width in sorted(cells_by_width):
        for c in cells_by_width[width]:
            rows.append([c.fence_id, format_timestamp(c.bin.start), width, c.occupancy,
                         repr(c.congestion_c)])
    return _csv_bytes(header, rows)


def features_csv(features):
    header = ["fence_id", *FEATURE_NAMES, *(f"z_{n}" for n in FEATURE_NAMES)]
    z = features.standardized_full()
    rows = [
        [spot.fence_id, *(repr(float(v)) for v in features.raw[i]), *(repr(float(v)) for v in z[i])]
        for i, spot in enumerate(features.spots)
    ]
    return _csv_bytes(header, rows)


def clusters_csv(assignments):
    header = ["fence_id", "cluster", "label", "silhouette"]
    rows = [[a.fence_id, a.cluster, a.label, repr(a.point_silhouette)] for a in assignments]
    return _csv_bytes(header, rows)


def clusters_geojson(assignments, features, fences):
    by_id = {a.fence_id: a for a in assignments}
    feats = []
    for spot in features.spots:
        fence = fences[spot.fence_id]
        a = by_id[spot.fence_id]
        feats.append({
            "type": "Feature",
            "geometry": {"type": "Polygon", "coordinates": [[list(v) for v in fence.polygon]]},
            "properties": {
                "fence_id": spot.fence_id,
                "mean_congestion": spot.mean_congestion,
                "capacity_pc": spot.capacity_pc,
                "order_count": spot.order_count,
                "poi_index": spot.poi_index,
                "label": a.label,
            },
        })
    return json_bytes({"type": "FeatureCollection", "features": feats})


def file_digest(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return "sha256:" + h.hexdigest()


def write_atomic(path, data):
    """Write bytes via a temp file in the same directory plus ``os.replace``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
