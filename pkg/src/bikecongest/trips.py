"""Trip reconstruction from lock events, plus trip filters and summaries."""

from bisect import bisect_left, bisect_right
from collections import Counter, defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from datetime import datetime, time

from . import geo
from .ingest import LockStatus, PoiCategory
from .validation import seconds_of_day

DEFAULT_MAX_TRIP_S = 4 * 3600
DEFAULT_WINDOW = (time(6, 0), time(10, 0))
DISTANCE_BIN_M = 100
DISTANCE_MAX_M = 10_000
DURATION_BIN_S = 60
DURATION_MAX_S = 3600
SUMMARY_BIN_S = 900


@dataclass(frozen=True)
class Trip:
    bicycle_id: str
    start_time: datetime
    end_time: datetime
    origin: tuple
    destination: tuple
    distance_m: float
    duration_s: int
    origin_fence: str = None
    dest_fence: str = None
    origin_poi_cat: PoiCategory = None
    dest_poi_cat: PoiCategory = None


@dataclass
class PairingReport:
    events_in: int = 0
    duplicates_collapsed: int = 0
    trips: int = 0
    discarded: Counter = field(default_factory=Counter)

    @property
    def deduplicated_events(self):
        return self.events_in - self.duplicates_collapsed

    @property
    def discarded_events(self):
        return sum(self.discarded.values())

    def merge(self, other):
        self.events_in += other.events_in
        self.duplicates_collapsed += other.duplicates_collapsed
        self.trips += other.trips
        self.discarded.update(other.discarded)

    def to_dict(self):
        return {
            "events_in": self.events_in,
            "duplicates_collapsed": self.duplicates_collapsed,
            "deduplicated_events": self.deduplicated_events,
            "trips": self.trips,
            "discarded_events": self.discarded_events,
            "discarded": dict(sorted(self.discarded.items())),
        }


@dataclass(frozen=True)
class PairingConfig:
    max_trip_duration_s: int = DEFAULT_MAX_TRIP_S
    same_day: bool = True


def collapse_duplicates(events):
    """Keep the first of each run of unlocks and the last of each run of locks.

    ``events`` must already be time-ordered for a single bicycle.
    """
    kept = []
    for ev in events:
        if kept and kept[-1].lock_status == ev.lock_status:
            if ev.lock_status == LockStatus.LOCKED:
                kept[-1] = ev
            continue
        kept.append(ev)
    return kept


def _pair_one_bike(events, config, distance_fn):
    report = PairingReport(events_in=len(events))
    kept = collapse_duplicates(events)
    report.duplicates_collapsed = len(events) - len(kept)
    trips = []
    i = 0
    while i < len(kept):
        ev = kept[i]
        if ev.lock_status == LockStatus.LOCKED:
            report.discarded["unpaired lock"] += 1
            i += 1
            continue
        if i + 1 == len(kept):
            report.discarded["unpaired unlock"] += 1
            break
        end = kept[i + 1]
        duration = (end.timestamp - ev.timestamp).total_seconds()
        if duration <= 0:
            reason = "non-positive duration"
        elif duration > config.max_trip_duration_s:
            reason = "exceeds max duration"
        elif config.same_day and end.timestamp.date() != ev.timestamp.date():
            reason = "crosses day boundary"
        else:
            reason = None
        if reason:
            report.discarded[reason] += 2
        else:
            trips.append(
                Trip(
                    bicycle_id=ev.bicycle_id,
                    start_time=ev.timestamp,
                    end_time=end.timestamp,
                    origin=ev.position,
                    destination=end.position,
                    distance_m=distance_fn(ev, end),
                    duration_s=int(duration),
                )
            )
        i += 2
    report.trips = len(trips)
    return trips, report


def _od_distance(start, end):
    return geo.haversine_m(start.position, end.position)


def group_by_bike(events):
    """Per-bicycle event lists ordered by time; equal timestamps keep file order."""
    groups = defaultdict(list)
    for ev in events:
        groups[ev.bicycle_id].append(ev)
    for evs in groups.values():
        evs.sort(key=lambda e: e.timestamp)
    return dict(sorted(groups.items()))


def reconstruct_trips(events, pairing_config=None, distance_fn=None, threads=1):
    """Pair each unlock with the next lock of the same bicycle.

    Returns ``(trips, report)``; trips are sorted by ``(bicycle_id, start_time)``.
    """
    config = pairing_config or PairingConfig()
    distance_fn = distance_fn or _od_distance
    groups = list(group_by_bike(events).values())

    def work(evs):
        return _pair_one_bike(evs, config, distance_fn)

    if threads > 1 and len(groups) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(work, groups))
    else:
        results = [work(evs) for evs in groups]

    trips = []
    report = PairingReport()
    for bike_trips, bike_report in results:
        trips.extend(bike_trips)
        report.merge(bike_report)
    return trips, report


class TrajectoryDistance:
    """Trip distance along a supplied GPS polyline instead of the OD chord.

    Falls back to the OD haversine when the bicycle has no trajectory points
    inside the trip's time span.
    """

    def __init__(self, points):
        tracks = defaultdict(list)
        for p in points:
            tracks[p.bicycle_id].append(p)
        self._tracks = {}
        for bike, pts in tracks.items():
            pts.sort(key=lambda p: p.timestamp)
            self._tracks[bike] = ([p.timestamp for p in pts], [p.position for p in pts])

    def __call__(self, start, end):
        times, positions = self._tracks.get(start.bicycle_id, ((), ()))
        lo = bisect_left(times, start.timestamp)
        hi = bisect_right(times, end.timestamp)
        path = [start.position, *positions[lo:hi], end.position]
        return geo.polyline_length_m(path)


def in_window(ts, window):
    s = seconds_of_day(ts.time())
    return seconds_of_day(window[0]) <= s < seconds_of_day(window[1])


def filter_trips(trips, min_m=100.0, max_m=10_000.0, window=DEFAULT_WINDOW, excluded_dates=()):
    """Distance bounds are inclusive; the start-time window is half-open."""
    excluded = set(excluded_dates)
    return [
        t
        for t in trips
        if min_m <= t.distance_m <= max_m
        and (window is None or in_window(t.start_time, window))
        and t.start_time.date() not in excluded
    ]


def nearest_poi_category(poi_index, pois, point, radius_m=300.0):
    hits = geo.radius_hits(poi_index, point, radius_m)
    if not hits:
        return None
    best = min(hits, key=lambda h: (h[0], pois[h[1]].name))
    return pois[best[1]].category


def assign_od_context(trips, fence_index, poi_index=None, pois=(), poi_radius_m=300.0, snap_m=50.0):
    """Attach origin/destination fence ids and nearest-POI categories."""
    out = []
    for t in trips:
        updates = {}
        if fence_index is not None:
            updates["origin_fence"] = geo.nearest_fence(fence_index, t.origin, snap_m)
            updates["dest_fence"] = geo.nearest_fence(fence_index, t.destination, snap_m)
        if poi_index is not None:
            updates["origin_poi_cat"] = nearest_poi_category(poi_index, pois, t.origin, poi_radius_m)
            updates["dest_poi_cat"] = nearest_poi_category(poi_index, pois, t.destination, poi_radius_m)
        out.append(replace(t, **updates))
    return out


# -- summaries ---------------------------------------------------------------


@dataclass
class MobilitySummary:
    daily_counts: dict
    bin_counts_15min: dict
    distance_histogram: list
    duration_histogram: list
    poi_transition: list
    n_trips: int = 0
    n_within_1000m: int = 0

    @property
    def share_within_1000m(self):
        """Share of trips no longer than 1,000 m."""
        if not self.n_trips:
            return 0.0
        return self.n_within_1000m / self.n_trips

    def to_dict(self):
        cats = [c.value for c in PoiCategory]
        return {
            "n_trips": self.n_trips,
            "daily_counts": self.daily_counts,
            "bin_counts_15min": self.bin_counts_15min,
            "distance_histogram": {
                "bin_m": DISTANCE_BIN_M,
                "max_m": DISTANCE_MAX_M,
                "counts": self.distance_histogram,
            },
            "duration_histogram": {
                "bin_s": DURATION_BIN_S,
                "max_s": DURATION_MAX_S,
                "counts": self.duration_histogram,
            },
            "share_within_1000m": self.share_within_1000m,
            "poi_transition": {"categories": cats, "counts": self.poi_transition},
        }


def _clock_label(seconds):
    return f"{seconds // 3600:02d}:{seconds % 3600 // 60:02d}"


def summarize(trips, window=DEFAULT_WINDOW):
    """Descriptive counts and histograms for a set of trips, together with
    the origin x destination POI category matrix.

    The last distance and duration bins absorb anything beyond their range.
    """
    n_dist = DISTANCE_MAX_M // DISTANCE_BIN_M
    n_dur = DURATION_MAX_S // DURATION_BIN_S
    cats = list(PoiCategory)
    cat_pos = {c: i for i, c in enumerate(cats)}

    daily = Counter()
    bins = Counter()
    dist_hist = [0] * n_dist
    dur_hist = [0] * n_dur
    transition = [[0] * len(cats) for _ in cats]
    short = 0

    for t in trips:
        short += t.distance_m <= 1000.0
        daily[t.start_time.date().isoformat()] += 1
        s = seconds_of_day(t.start_time.time())
        bins[s - s % SUMMARY_BIN_S] += 1
        dist_hist[min(int(t.distance_m // DISTANCE_BIN_M), n_dist - 1)] += 1
        dur_hist[min(int(t.duration_s // DURATION_BIN_S), n_dur - 1)] += 1
        if t.origin_poi_cat is not None and t.dest_poi_cat is not None:
            transition[cat_pos[t.origin_poi_cat]][cat_pos[t.dest_poi_cat]] += 1

    if window is not None:
        start, end = seconds_of_day(window[0]), seconds_of_day(window[1])
        for s in range(start - start % SUMMARY_BIN_S, end, SUMMARY_BIN_S):
            bins.setdefault(s, 0)

    return MobilitySummary(
        daily_counts=dict(sorted(daily.items())),
        bin_counts_15min={_clock_label(s): bins[s] for s in sorted(bins)},
        distance_histogram=dist_hist,
        duration_histogram=dur_hist,
        poi_transition=transition,
        n_trips=len(trips),
        n_within_1000m=short,
    )


def trips_overlap(trips):
    """True if any two trips of one bicycle overlap in time."""
    by_bike = defaultdict(list)
    for t in trips:
        by_bike[t.bicycle_id].append(t)
    for ts in by_bike.values():
        ts.sort(key=lambda t: t.start_time)
        for a, b in zip(ts, ts[1:]):
            if b.start_time < a.end_time:
                return True
    return False


__all__ = [
    "PairingConfig",
    "PairingReport",
    "Trip",
    "MobilitySummary",
    "TrajectoryDistance",
    "assign_od_context",
    "collapse_duplicates",
    "filter_trips",
    "reconstruct_trips",
    "summarize",
]
