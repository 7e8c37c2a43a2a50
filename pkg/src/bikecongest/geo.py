"""Distances and small-polygon geometry, plus a uniform-grid spatial index.

Polygons here are parking fences a few meters across, so area and centroid
are computed in a local equirectangular frame around the ring; containment is
tested directly in degrees.
"""

import math
from dataclasses import dataclass, field

from .errors import DegeneratePolygon, ZeroArea

EARTH_RADIUS_M = 6_371_008.8
BOUNDARY_TOL_DEG = 1e-12
_MIN_AREA_M2 = 1e-9


def haversine_m(a, b):
    """Great-circle distance in meters between two ``(lon, lat)`` points."""
    lon1, lat1 = math.radians(a[0]), math.radians(a[1])
    lon2, lat2 = math.radians(b[0]), math.radians(b[1])
    h = (
        math.sin((lat2 - lat1) / 2.0) ** 2
        + math.cos(lat1) * math.cos(lat2) * math.sin((lon2 - lon1) / 2.0) ** 2
    )
    return 2.0 * EARTH_RADIUS_M * math.asin(min(1.0, math.sqrt(h)))


def polyline_length_m(points):
    return sum(haversine_m(p, q) for p, q in zip(points, points[1:]))


# -- local planar frame ------------------------------------------------------


def to_local(points, origin):
    """Project ``(lon, lat)`` points to meters east/north of ``origin``."""
    lon0, lat0 = origin
    kx = math.radians(1.0) * EARTH_RADIUS_M * math.cos(math.radians(lat0))
    ky = math.radians(1.0) * EARTH_RADIUS_M
    return [((lon - lon0) * kx, (lat - lat0) * ky) for lon, lat in points]


def from_local(points, origin):
    """Inverse of :func:`to_local`."""
    lon0, lat0 = origin
    kx = math.radians(1.0) * EARTH_RADIUS_M * math.cos(math.radians(lat0))
    ky = math.radians(1.0) * EARTH_RADIUS_M
    return [(lon0 + x / kx, lat0 + y / ky) for x, y in points]


def close_ring(ring):
    ring = [(float(x), float(y)) for x, y in ring]
    if ring and ring[0] != ring[-1]:
        ring.append(ring[0])
    return ring


def open_vertices(ring):
    """Vertices without the closing duplicate."""
    ring = list(ring)
    if len(ring) > 1 and tuple(ring[0]) == tuple(ring[-1]):
        ring = ring[:-1]
    return [tuple(v) for v in ring]


def _vertex_mean(vertices):
    n = len(vertices)
    return (sum(v[0] for v in vertices) / n, sum(v[1] for v in vertices) / n)


def _signed_area(xy):
    s = 0.0
    n = len(xy)
    for i in range(n):
        x1, y1 = xy[i]
        x2, y2 = xy[(i + 1) % n]
        s += x1 * y2 - x2 * y1
    return s / 2.0


def _check_distinct(vertices):
    if len(set(vertices)) < 3:
        raise DegeneratePolygon(
            f"ring has {len(set(vertices))} distinct vertices, need at least 3"
        )


def polygon_area_m2(ring):
    """Area in square meters of a small lon/lat ring (orientation-free)."""
    vertices = open_vertices(ring)
    _check_distinct(vertices)
    xy = to_local(vertices, _vertex_mean(vertices))
    area = abs(_signed_area(xy))
    if area < _MIN_AREA_M2:
        raise ZeroArea("ring vertices are collinear (zero area)")
    return area


def polygon_centroid(ring):
    """Area-weighted centroid, back-projected to ``(lon, lat)``."""
    vertices = open_vertices(ring)
    _check_distinct(vertices)
    origin = _vertex_mean(vertices)
    xy = to_local(vertices, origin)
    a = _signed_area(xy)
    if abs(a) < _MIN_AREA_M2:
        return origin
    cx = cy = 0.0
    n = len(xy)
    for i in range(n):
        x1, y1 = xy[i]
        x2, y2 = xy[(i + 1) % n]
        cross = x1 * y2 - x2 * y1
        cx += (x1 + x2) * cross
        cy += (y1 + y2) * cross
    return from_local([(cx / (6.0 * a), cy / (6.0 * a))], origin)[0]


def _on_segment(p, a, b, tol):
    px, py = p
    ax, ay = a
    bx, by = b
    if not (
        min(ax, bx) - tol <= px <= max(ax, bx) + tol
        and min(ay, by) - tol <= py <= max(ay, by) + tol
    ):
        return False
    dx, dy = bx - ax, by - ay
    length = math.hypot(dx, dy)
    if length == 0.0:
        return math.hypot(px - ax, py - ay) <= tol
    return abs(dx * (py - ay) - dy * (px - ax)) / length <= tol


def point_in_polygon(p, ring, tol=BOUNDARY_TOL_DEG):
    """Even-odd containment; points within ``tol`` degrees of an edge are inside."""
    ring = close_ring(ring)
    for a, b in zip(ring, ring[1:]):
        if _on_segment(p, a, b, tol):
            return True
    x, y = p
    inside = False
    for (x1, y1), (x2, y2) in zip(ring, ring[1:]):
        if (y1 > y) != (y2 > y):
            x_cross = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
            if x < x_cross:
                inside = not inside
    return inside


def bbox_of(points):
    xs = [p[0] for p in points]
    ys = [p[1] for p in points]
    return (min(xs), min(ys), max(xs), max(ys))


# -- grid index --------------------------------------------------------------


@dataclass(frozen=True)
class IndexedItem:
    key: object
    point: tuple
    bbox: tuple
    ring: tuple = None
    obj: object = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class GridIndex:
    """Uniform lon/lat grid over fences or point items.

    ``cell_size_deg`` is ``(dlon, dlat)``, derived from a size in meters at
    the mean latitude of the indexed items.
    """

    cell_size_deg: tuple
    origin: tuple
    bounds: tuple
    cells: dict
    items: dict = field(repr=False)

    def __len__(self):
        return len(self.items)

    def cell_of(self, lon, lat):
        return (
            math.floor((lon - self.origin[0]) / self.cell_size_deg[0]),
            math.floor((lat - self.origin[1]) / self.cell_size_deg[1]),
        )

    def candidates(self, bbox):
        c0, r0 = self.cell_of(bbox[0], bbox[1])
        c1, r1 = self.cell_of(bbox[2], bbox[3])
        found = set()
        # clamp to the indexed extent so huge query boxes stay cheap
        b0, b1 = self.cell_of(self.bounds[0], self.bounds[1])
        b2, b3 = self.cell_of(self.bounds[2], self.bounds[3])
        c0, c1 = max(c0, b0), min(c1, b2)
        r0, r1 = max(r0, b1), min(r1, b3)
        for col in range(c0, c1 + 1):
            for row in range(r0, r1 + 1):
                found.update(self.cells.get((col, row), ()))
        return found

    def get(self, key):
        return self.items[key]


def _as_indexed(item, position):
    polygon = getattr(item, "polygon", None)
    if polygon is not None:
        return IndexedItem(
            item.fence_id, tuple(item.centroid), bbox_of(polygon), tuple(polygon), item
        )
    point = getattr(item, "position", None)
    if point is not None:
        return IndexedItem(
            position, tuple(point), (point[0], point[1], point[0], point[1]), None, item
        )
    key, point = item
    return IndexedItem(key, tuple(point), (point[0], point[1], point[0], point[1]))


def build_index(items, cell_size_m=250.0):
    """Index fences (keyed by ``fence_id``), POIs/stations (keyed by position
    in ``items``) or raw ``(key, (lon, lat))`` pairs."""
    if cell_size_m <= 0:
        raise ValueError("cell_size_m must be positive")
    indexed = {}
    for pos, item in enumerate(items):
        entry = _as_indexed(item, pos)
        if entry.key in indexed:
            raise ValueError(f"duplicate index key {entry.key!r}")
        indexed[entry.key] = entry
    if indexed:
        bounds = (
            min(e.bbox[0] for e in indexed.values()),
            min(e.bbox[1] for e in indexed.values()),
            max(e.bbox[2] for e in indexed.values()),
            max(e.bbox[3] for e in indexed.values()),
        )
        mean_lat = sum(e.point[1] for e in indexed.values()) / len(indexed)
    else:
        bounds = (0.0, 0.0, 0.0, 0.0)
        mean_lat = 0.0
    dlat = math.degrees(cell_size_m / EARTH_RADIUS_M)
    dlon = dlat / max(math.cos(math.radians(mean_lat)), 1e-6)
    index = GridIndex((dlon, dlat), (bounds[0], bounds[1]), bounds, {}, indexed)
    cells = {}
    for entry in indexed.values():
        c0, r0 = index.cell_of(entry.bbox[0], entry.bbox[1])
        c1, r1 = index.cell_of(entry.bbox[2], entry.bbox[3])
        for col in range(c0, c1 + 1):
            for row in range(r0, r1 + 1):
                cells.setdefault((col, row), []).append(entry.key)
    frozen = {cell: tuple(sorted(keys, key=_sort_key)) for cell, keys in cells.items()}
    return GridIndex((dlon, dlat), (bounds[0], bounds[1]), bounds, frozen, indexed)


def _sort_key(key):
    return (type(key).__name__, key)


def _query_bbox(center, radius_m):
    lon, lat = center
    dlat = math.degrees(radius_m / EARTH_RADIUS_M)
    lat_lo, lat_hi = lat - dlat, lat + dlat
    if lat_lo <= -90.0 or lat_hi >= 90.0:
        return (-180.0, max(lat_lo, -90.0), 180.0, min(lat_hi, 90.0))
    # hav(d) >= cos(lat1) cos(lat2) hav(dlon) bounds the longitude span
    cos_min = math.cos(math.radians(max(abs(lat_lo), abs(lat_hi))))
    h = math.sin(radius_m / EARTH_RADIUS_M / 2.0) ** 2
    ratio = h / (math.cos(math.radians(lat)) * cos_min)
    if ratio >= 1.0:
        return (-180.0, lat_lo, 180.0, lat_hi)
    dlon = math.degrees(2.0 * math.asin(math.sqrt(ratio))) + 1e-9
    return (lon - dlon, lat_lo - 1e-9, lon + dlon, lat_hi + 1e-9)


def radius_hits(index, center, radius_m):
    """``[(distance_m, key)]`` for items whose reference point is within
    ``radius_m`` of ``center``, nearest first."""
    hits = []
    for key in index.candidates(_query_bbox(center, radius_m)):
        d = haversine_m(center, index.items[key].point)
        if d <= radius_m:
            hits.append((d, key))
    hits.sort(key=lambda h: (h[0], _sort_key(h[1])))
    return hits


def radius_query(index, center, radius_m):
    """Keys of items within ``radius_m`` of ``center``, sorted by key."""
    return sorted((key for _, key in radius_hits(index, center, radius_m)), key=_sort_key)


def _in_bbox(p, bbox, tol=BOUNDARY_TOL_DEG):
    return bbox[0] - tol <= p[0] <= bbox[2] + tol and bbox[1] - tol <= p[1] <= bbox[3] + tol


def containing_fences(index, p):
    col_row = index.cell_of(p[0], p[1])
    hits = []
    for key in index.cells.get(col_row, ()):
        item = index.items[key]
        if item.ring is not None and _in_bbox(p, item.bbox) and point_in_polygon(p, item.ring):
            hits.append(key)
    return sorted(hits, key=_sort_key)


def nearest_fence(index, p, max_snap_m=50.0):
    """Fence containing ``p``; else the nearest centroid within ``max_snap_m``;
    else ``None``. Ties go to the smallest fence id."""
    inside = containing_fences(index, p)
    if inside:
        return inside[0]
    hits = radius_hits(index, p, max_snap_m)
    return hits[0][1] if hits else None
