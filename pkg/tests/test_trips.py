from dataclasses import replace
from datetime import datetime, time, timedelta

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from bikecongest import geo
from bikecongest.ingest import (
    BikeEvent, LockStatus, Poi, PoiCategory, TrajectoryPoint, make_fence,
)
from bikecongest.trips import (
    PairingConfig,
    TrajectoryDistance,
    assign_od_context,
    collapse_duplicates,
    filter_trips,
    reconstruct_trips,
    summarize,
    trips_overlap,
)

U, L = LockStatus.UNLOCKED, LockStatus.LOCKED
T0 = datetime(2020, 12, 21, 7, 0, 0)
P = (118.1, 24.48)


def ev(bike, minutes, status, pos=P):
    return BikeEvent(bike, T0 + timedelta(minutes=minutes), pos, status)


def east(m):
    return geo.from_local([(m, 0)], P)[0]


def test_duplicate_runs_keep_first_unlock_and_last_lock():
    evs = [ev("b", 0, U), ev("b", 1, U), ev("b", 5, L), ev("b", 6, L), ev("b", 7, L)]
    kept = collapse_duplicates(evs)
    assert kept == [evs[0], evs[4]]
    trips, report = reconstruct_trips(evs)
    assert len(trips) == 1 and trips[0].duration_s == 7 * 60
    assert report.duplicates_collapsed == 3


def test_discard_reasons():
    evs = [
        ev("a", 0, L),                      # leading lock
        ev("a", 10, U), ev("a", 10, L),     # zero duration
        ev("a", 20, U), ev("a", 20 + 241, L),  # > 4 h
        ev("a", 300, U),                    # trailing unlock
        BikeEvent("n", datetime(2020, 12, 21, 23, 50), P, U),
        BikeEvent("n", datetime(2020, 12, 22, 0, 10), P, L),  # crosses midnight
    ]
    trips, report = reconstruct_trips(evs)
    assert trips == []
    assert dict(report.discarded) == {
        "unpaired lock": 1,
        "non-positive duration": 2,
        "exceeds max duration": 2,
        "unpaired unlock": 1,
        "crosses day boundary": 2,
    }
    # exactly four hours is still a trip
    trips, _ = reconstruct_trips([ev("a", 0, U), ev("a", 240, L)])
    assert [t.duration_s for t in trips] == [4 * 3600]
    # with the day-boundary rule off the midnight trip survives
    trips, _ = reconstruct_trips(evs[-2:], PairingConfig(same_day=False))
    assert len(trips) == 1


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_pairing_properties(seed):
    rng = oracles.seeded(seed)
    events = oracles.random_event_soup(rng)
    trips, report = reconstruct_trips(events)
    assert [oracles.trip_key(t) for t in trips] == oracles.pair_oracle(events)
    assert not trips_overlap(trips)
    assert all(0 < t.duration_s <= 4 * 3600 for t in trips)
    assert all(t.start_time.date() == t.end_time.date() for t in trips)
    threaded, threaded_report = reconstruct_trips(events, threads=4)
    assert threaded == trips and threaded_report == report
    # a trip consumes two events; the rest are collapsed or discarded
    assert 2 * len(trips) + report.discarded_events + report.duplicates_collapsed == len(events)


def test_filter_window_is_half_open():
    def trip_at(hour, minute):
        start = T0.replace(hour=hour, minute=minute)
        return reconstruct_trips([BikeEvent("b", start, P, U),
                                  BikeEvent("b", start + timedelta(minutes=5), east(500), L)])[0][0]

    start_6, start_559, start_959, start_10 = (
        trip_at(6, 0), trip_at(5, 59), trip_at(9, 59), trip_at(10, 0)
    )
    kept = filter_trips([start_6, start_559, start_959, start_10])
    assert kept == [start_6, start_959]
    assert filter_trips([start_6], excluded_dates=[T0.date()]) == []
    assert filter_trips([start_10], window=None) == [start_10]


def test_filter_inclusive_on_exact_distances():
    base = reconstruct_trips([ev("b", 0, U), ev("b", 5, L)])[0][0]
    exact = [replace(base, distance_m=d) for d in (99.999, 100.0, 10_000.0, 10_000.001)]
    assert [t.distance_m for t in filter_trips(exact)] == [100.0, 10_000.0]


def test_summary_histograms_and_share():
    evs = []
    for i, d in enumerate([150.0, 999.0, 1000.0, 2500.0]):
        evs += [ev(f"b{i}", 0, U), ev(f"b{i}", 3 + i, L, east(d))]
    trips, _ = reconstruct_trips(evs)
    s = summarize(trips, (time(6), time(10)))
    assert s.n_trips == 4
    assert s.share_within_1000m == 0.75
    assert sum(s.distance_histogram) == sum(s.duration_histogram) == 4
    assert s.daily_counts == {"2020-12-21": 4}
    assert list(s.bin_counts_15min)[:2] == ["06:00", "06:15"]
    assert s.bin_counts_15min["07:00"] == 4
    assert len(s.bin_counts_15min) == 16
    assert summarize([], None).share_within_1000m == 0.0


def test_trajectory_distance_and_fallback():
    a, b = ev("b", 0, U, P), ev("b", 10, L, east(200))
    detour = geo.from_local([(100, 50)], P)[0]
    track = [TrajectoryPoint("b", T0 + timedelta(minutes=5), detour),
             TrajectoryPoint("b", T0 + timedelta(minutes=30), east(900))]
    fn = TrajectoryDistance(track)
    assert fn(a, b) == pytest.approx(geo.polyline_length_m([P, detour, east(200)]))
    assert fn(a, b) > geo.haversine_m(P, east(200))
    other = ev("c", 0, U), ev("c", 10, L, east(200))
    assert fn(*other) == geo.haversine_m(P, east(200))


def test_od_context():
    ring = geo.from_local([(-5, -5), (5, -5), (5, 5), (-5, 5)], P)
    fence = make_fence("F1", ring + [ring[0]])
    pois = [Poi("near", PoiCategory.COMPANY, east(50)), Poi("far", PoiCategory.LIFE, east(250))]
    trips, _ = reconstruct_trips([ev("b", 0, U, P), ev("b", 10, L, east(400))])
    (t,) = assign_od_context(trips, geo.build_index([fence]), geo.build_index(pois), pois)
    assert (t.origin_fence, t.dest_fence) == ("F1", None)
    assert (t.origin_poi_cat, t.dest_poi_cat) == (PoiCategory.COMPANY, PoiCategory.LIFE)
