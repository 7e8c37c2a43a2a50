"""Slow reference implementations that are easy to check by eye, plus random
instance builders shared by the test modules. Nothing here calls the code under test
except to construct inputs."""

import math
import random
from collections import defaultdict
from datetime import date, datetime, timedelta

from bikecongest import geo
from bikecongest.ingest import BikeEvent, LockStatus, make_fence

ORIGIN = (118.10, 24.48)
WINDOW_START_S = 6 * 3600
WINDOW_END_S = 10 * 3600


# -- pairing ---------------------------------------------------------------


def pair_oracle(events, max_duration_s=4 * 3600):
    """O(n^2) scan: each unlock that opens a run of unlocks is paired with
    the last lock of the lock run that follows it."""
    by_bike = defaultdict(list)
    for pos, ev in enumerate(events):
        by_bike[ev.bicycle_id].append((ev.timestamp, pos, ev))
    out = []
    for bike in sorted(by_bike):
        evs = [e for _, _, e in sorted(by_bike[bike], key=lambda t: (t[0], t[1]))]
        for i, ev in enumerate(evs):
            if ev.lock_status != LockStatus.UNLOCKED:
                continue
            if i > 0 and evs[i - 1].lock_status == LockStatus.UNLOCKED:
                continue
            j = i
            while j < len(evs) and evs[j].lock_status == LockStatus.UNLOCKED:
                j += 1
            if j == len(evs):
                continue
            k = j
            while k + 1 < len(evs) and evs[k + 1].lock_status == LockStatus.LOCKED:
                k += 1
            end = evs[k]
            seconds = (end.timestamp - ev.timestamp).total_seconds()
            if seconds <= 0 or seconds > max_duration_s:
                continue
            if end.timestamp.date() != ev.timestamp.date():
                continue
            out.append((bike, ev.timestamp, end.timestamp, ev.position, end.position, int(seconds)))
    return out


def trip_key(t):
    return (t.bicycle_id, t.start_time, t.end_time, t.origin, t.destination, t.duration_s)


def random_event_soup(rng, n_bikes=6, max_events=40, start=date(2020, 12, 21)):
    """Events with duplicate runs, leading locks, trailing unlocks, equal
    timestamps and spans that cross midnight or exceed four hours."""
    events = []
    for b in range(n_bikes):
        clock = datetime.combine(start, datetime.min.time()) + timedelta(
            seconds=rng.randrange(0, 86400)
        )
        for _ in range(rng.randrange(0, max_events)):
            step = rng.choice([0, 0, 30, 600, 1800, 3 * 3600, 5 * 3600, 20 * 3600])
            clock += timedelta(seconds=step + rng.randrange(0, 120))
            status = LockStatus(rng.random() < 0.5)
            pos = (ORIGIN[0] + rng.uniform(-0.05, 0.05), ORIGIN[1] + rng.uniform(-0.05, 0.05))
            events.append(BikeEvent(f"b{b}", clock, pos, status))
    rng.shuffle(events)
    return events


# -- fences and flows --------------------------------------------------------


def grid_fences(rng, n, spacing_m=60.0):
    """Axis-aligned rectangles on a grid (never overlapping) with the interior
    half-size of each, in meters, for drawing points inside."""
    side = max(1, math.ceil(math.sqrt(n)))
    fences, shapes = [], {}
    for i in range(n):
        cx, cy = (i % side) * spacing_m, (i // side) * spacing_m
        w, h = rng.uniform(2.0, 20.0), rng.uniform(2.0, 20.0)
        center = geo.from_local([(cx, cy)], ORIGIN)[0]
        xy = [(-w / 2, -h / 2), (w / 2, -h / 2), (w / 2, h / 2), (-w / 2, h / 2)]
        ring = geo.from_local(xy, center)
        fid = f"F{i:03d}"
        fences.append(make_fence(fid, ring + [ring[0]]))
        shapes[fid] = (center, w, h)
    return fences, shapes


def random_stream(rng, n_fences=None, n_events=None, days=None):
    """Events strictly inside known fences; returns ``(fences, events, truth)``
    where ``truth`` is the fence id of every event."""
    n_fences = n_fences or rng.randrange(1, 51)
    n_events = n_events if n_events is not None else rng.randrange(0, 2001)
    days = days or rng.randrange(1, 4)
    fences, shapes = grid_fences(rng, n_fences)
    ids = sorted(shapes)
    day0 = datetime(2020, 12, 21)
    events, truth = [], []
    for _ in range(n_events):
        fid = rng.choice(ids)
        center, w, h = shapes[fid]
        p = geo.from_local([(rng.uniform(-0.4, 0.4) * w, rng.uniform(-0.4, 0.4) * h)], center)[0]
        # a little spill outside the window on both sides
        s = rng.randrange(WINDOW_START_S - 1800, WINDOW_END_S + 1800)
        ts = day0 + timedelta(days=rng.randrange(days), seconds=s)
        events.append(BikeEvent(f"b{rng.randrange(300)}", ts, p, LockStatus(rng.random() < 0.55)))
        truth.append(fid)
    return fences, events, truth


def flow_oracle(fences, events, truth, width_s):
    """Triple loop over fences x bins x events; only nonzero cells kept."""
    days = sorted({e.timestamp.date() for e in events})
    caps = {f.fence_id: f.capacity_pc for f in fences}
    by_fence = defaultdict(list)
    for ev, fid in zip(events, truth):
        by_fence[fid].append(ev)
    out = {}
    for fid in sorted(caps):
        for day in days:
            base = datetime.combine(day, datetime.min.time())
            for s in range(WINDOW_START_S, WINDOW_END_S, width_s):
                lo = base + timedelta(seconds=s)
                hi = lo + timedelta(seconds=width_s)
                inflow = outflow = 0
                for ev in by_fence[fid]:
                    if lo <= ev.timestamp < hi:
                        if ev.lock_status == LockStatus.LOCKED:
                            inflow += 1
                        else:
                            outflow += 1
                if inflow or outflow:
                    out[(fid, lo)] = (inflow, outflow, (inflow - outflow) / caps[fid])
    return out


# -- geometry ----------------------------------------------------------------


def convex_polygon(rng, n=8, center=ORIGIN, radius_deg=0.01):
    """Counter-clockwise convex ring from sorted angles on a circle."""
    angles = sorted(rng.uniform(0, 2 * math.pi) for _ in range(n))
    ring = [(center[0] + radius_deg * math.cos(a), center[1] + radius_deg * math.sin(a))
            for a in angles]
    return ring + [ring[0]]


def convex_contains(p, ring):
    """Inside iff ``p`` is left of (or on) every counter-clockwise edge."""
    for a, b in zip(ring, ring[1:]):
        cross = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])
        if cross < 0:
            return False
    return True


def brute_radius(points, center, radius_m):
    return sorted(k for k, p in points if geo.haversine_m(center, p) <= radius_m)


# -- clustering --------------------------------------------------------------


def silhouette_brute(X, labels):
    n = len(X)
    dist = [[math.dist(X[i], X[j]) for j in range(n)] for i in range(n)]
    clusters = sorted(set(labels))
    out = []
    for i in range(n):
        own = [j for j in range(n) if labels[j] == labels[i] and j != i]
        if not own:
            out.append(0.0)
            continue
        a = sum(dist[i][j] for j in own) / len(own)
        b = min(
            sum(dist[i][j] for j in range(n) if labels[j] == c)
            / sum(1 for j in range(n) if labels[j] == c)
            for c in clusters
            if c != labels[i]
        )
        out.append(0.0 if max(a, b) == 0 else (b - a) / max(a, b))
    return out


def gaussian_mle_loglik(X):
    """Closed-form log-likelihood of one full-covariance Gaussian at its MLE."""
    import numpy as np

    n, d = X.shape
    cov = np.cov(X, rowvar=False, bias=True).reshape(d, d)
    _, logdet = np.linalg.slogdet(cov)
    return -0.5 * n * (d * math.log(2 * math.pi) + logdet + d)


def blobs(rng, centers, n_per, sigma):
    import numpy as np

    X = np.vstack([c + rng.normal(0, sigma, size=(n_per, len(c))) for c in centers])
    y = np.repeat(np.arange(len(centers)), n_per)
    return X, y


def seeded(seed):
    return random.Random(seed)
