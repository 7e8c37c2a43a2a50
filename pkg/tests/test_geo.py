import math
import random

import pytest
from geographiclib.geodesic import Geodesic
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from bikecongest import geo
from bikecongest.errors import DegeneratePolygon, ZeroArea
from bikecongest.ingest import make_fence

lon = st.floats(117.9, 118.3)
lat = st.floats(24.3, 24.7)
points = st.tuples(lon, lat)


def test_haversine_against_geodesic():
    d = geo.haversine_m((118.0, 24.5), (118.01, 24.5))
    ref = Geodesic.WGS84.Inverse(24.5, 118.0, 24.5, 118.01)["s12"]
    assert abs(d - 1013) <= 10.13
    assert abs(ref - 1013) <= 10.13
    # sphere vs ellipsoid differ by well under one percent at this latitude
    assert abs(d - ref) / ref < 0.005


@settings(max_examples=200)
@given(points, points)
def test_haversine_symmetric_and_close_to_ellipsoid(a, b):
    d = geo.haversine_m(a, b)
    assert d == geo.haversine_m(b, a) and d >= 0
    ref = Geodesic.WGS84.Inverse(a[1], a[0], b[1], b[0])["s12"]
    assert abs(d - ref) <= 0.006 * ref + 1e-6


@given(points, points, points)
def test_haversine_triangle_inequality(a, b, c):
    assert geo.haversine_m(a, c) <= geo.haversine_m(a, b) + geo.haversine_m(b, c) + 1e-6


def test_identity_and_polyline():
    p = (118.0, 24.5)
    assert geo.haversine_m(p, p) == 0.0
    q, r = (118.01, 24.5), (118.01, 24.51)
    assert geo.polyline_length_m([p, q, r]) == geo.haversine_m(p, q) + geo.haversine_m(q, r)
    assert geo.polyline_length_m([p]) == 0.0


def _square(center, side):
    h = side / 2
    ring = geo.from_local([(-h, -h), (h, -h), (h, h), (-h, h)], center)
    return ring + [ring[0]]


def test_area_orientation_and_degenerate():
    ring = _square((118.1, 24.48), 10)
    assert geo.polygon_area_m2(ring) == pytest.approx(geo.polygon_area_m2(ring[::-1]), rel=1e-12)
    collinear = [(118.1, 24.48), (118.1001, 24.48), (118.1002, 24.48), (118.1, 24.48)]
    with pytest.raises(ZeroArea):
        geo.polygon_area_m2(collinear)
    with pytest.raises(DegeneratePolygon):
        geo.polygon_area_m2([(118.1, 24.48), (118.1001, 24.48), (118.1, 24.48)])


def test_area_of_larger_polygon_matches_ellipsoid():
    ring = oracles.convex_polygon(random.Random(3), n=9, radius_deg=0.002)
    poly = Geodesic.WGS84.Polygon()
    for x, y in ring[:-1]:
        poly.AddPoint(y, x)
    _, _, ref = poly.Compute(False, True)
    assert geo.polygon_area_m2(ring) == pytest.approx(abs(ref), rel=5e-3)


@settings(max_examples=100)
@given(st.integers(0, 2**32 - 1))
def test_area_equals_triangulation_sum(seed):
    ring = oracles.convex_polygon(random.Random(seed), n=7, radius_deg=0.001)
    verts = ring[:-1]
    fan = sum(
        geo.polygon_area_m2([verts[0], verts[i], verts[i + 1], verts[0]])
        for i in range(1, len(verts) - 1)
        if len({verts[0], verts[i], verts[i + 1]}) == 3
        and abs((verts[i][0] - verts[0][0]) * (verts[i + 1][1] - verts[0][1])
                - (verts[i][1] - verts[0][1]) * (verts[i + 1][0] - verts[0][0])) > 1e-14
    )
    assert geo.polygon_area_m2(ring) == pytest.approx(fan, rel=1e-3)


def test_point_in_polygon_basic_and_boundary():
    ring = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0), (0.0, 0.0)]
    assert geo.point_in_polygon((0.5, 0.5), ring)
    assert not geo.point_in_polygon((2.5, 0.5), ring)
    assert geo.point_in_polygon((1.0, 0.5), ring)
    assert geo.point_in_polygon((0.0, 0.0), ring)
    assert geo.point_in_polygon((1.0 + 5e-13, 0.5), ring)
    assert not geo.point_in_polygon((1.0 + 1e-9, 0.5), ring)


def test_point_in_concave_polygon():
    # U shape: the notch is outside
    ring = [(0, 0), (3, 0), (3, 3), (2, 3), (2, 1), (1, 1), (1, 3), (0, 3), (0, 0)]
    assert geo.point_in_polygon((0.5, 2.0), ring)
    assert not geo.point_in_polygon((1.5, 2.0), ring)
    assert geo.point_in_polygon((2.5, 2.0), ring)


def test_centroid_of_rectangle():
    center = (118.1, 24.48)
    c = geo.polygon_centroid(_square(center, 20))
    assert geo.haversine_m(c, center) < 1e-3


def _fence(fid, center, side=10.0):
    return make_fence(fid, _square(center, side))


def test_nearest_fence_rules():
    base = (118.1, 24.48)
    a = _fence("A", base)
    far = geo.from_local([(200, 0)], base)[0]
    b = _fence("B", far)
    index = geo.build_index([a, b])
    assert geo.nearest_fence(index, base) == "A"
    p30 = geo.from_local([(30, 0)], base)[0]
    assert geo.nearest_fence(index, p30) == "A"
    p80 = geo.from_local([(0, 80)], base)[0]
    assert geo.nearest_fence(index, p80) is None
    assert geo.nearest_fence(index, p80, max_snap_m=100) == "A"


def test_containment_beats_nearer_centroid():
    base = (118.1, 24.48)
    big = make_fence("Z", _square(base, 60))
    inner_center = geo.from_local([(25, 0)], base)[0]
    small_center = geo.from_local([(40, 0)], base)[0]
    small = _fence("A", small_center, side=4)
    index = geo.build_index([big, small])
    # inside Z, closer to A's centroid than Z's
    p = geo.from_local([(29, 0)], base)[0]
    assert geo.haversine_m(p, small.centroid) < geo.haversine_m(p, big.centroid)
    assert geo.nearest_fence(index, p) == "Z"
    assert geo.nearest_fence(index, inner_center) == "Z"


def test_snap_ties_go_to_smallest_id():
    base = (118.1, 24.48)
    left = _fence("B", geo.from_local([(-20, 0)], base)[0], side=2)
    right = _fence("A", geo.from_local([(20, 0)], base)[0], side=2)
    index = geo.build_index([left, right])
    d_l = geo.haversine_m(base, left.centroid)
    d_r = geo.haversine_m(base, right.centroid)
    if d_l == d_r:
        assert geo.nearest_fence(index, base) == "A"
    else:
        assert geo.nearest_fence(index, base) == ("B" if d_l < d_r else "A")


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_nearest_fence_independent_of_insertion_order(seed):
    rng = random.Random(seed)
    fences, _ = oracles.grid_fences(rng, rng.randrange(1, 30), spacing_m=25.0)
    shuffled = fences[:]
    rng.shuffle(shuffled)
    i1, i2 = geo.build_index(fences), geo.build_index(shuffled, cell_size_m=80.0)
    for _ in range(50):
        p = (oracles.ORIGIN[0] + rng.uniform(-0.0005, 0.002),
             oracles.ORIGIN[1] + rng.uniform(-0.0005, 0.002))
        assert geo.nearest_fence(i1, p) == geo.nearest_fence(i2, p)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_every_item_is_in_each_cell_its_bbox_touches(seed):
    rng = random.Random(seed)
    fences, _ = oracles.grid_fences(rng, rng.randrange(1, 40), spacing_m=30.0)
    index = geo.build_index(fences, cell_size_m=rng.choice([5.0, 20.0, 250.0]))
    for key, item in index.items.items():
        c0, r0 = index.cell_of(item.bbox[0], item.bbox[1])
        c1, r1 = index.cell_of(item.bbox[2], item.bbox[3])
        expected = {(c, r) for c in range(c0, c1 + 1) for r in range(r0, r1 + 1)}
        actual = {cell for cell, keys in index.cells.items() if key in keys}
        assert actual == expected


@settings(max_examples=50, deadline=None)
@given(st.lists(points, min_size=1, max_size=60), points, st.floats(1.0, 5000.0))
def test_radius_query_property(pts, center, r):
    items = list(enumerate(pts))
    index = geo.build_index(items, cell_size_m=100.0)
    assert geo.radius_query(index, center, r) == oracles.brute_radius(items, center, r)
    hits = geo.radius_hits(index, center, r)
    assert [d for d, _ in hits] == sorted(d for d, _ in hits)


def test_radius_query_near_pole_and_empty_index():
    items = [(0, (10.0, 89.9999)), (1, (-170.0, 89.9999))]
    index = geo.build_index(items)
    assert geo.radius_query(index, (100.0, 89.9999), 100.0) == [0, 1]
    empty = geo.build_index([])
    assert geo.radius_query(empty, (118.1, 24.48), 1000.0) == []
    assert geo.nearest_fence(empty, (118.1, 24.48)) is None


def test_local_projection_round_trip():
    origin = (118.1, 24.48)
    pts = [(118.1012, 24.4799), (118.0991, 24.4811)]
    back = geo.from_local(geo.to_local(pts, origin), origin)
    for p, q in zip(pts, back):
        assert math.isclose(p[0], q[0], abs_tol=1e-12) and math.isclose(p[1], q[1], abs_tol=1e-12)
