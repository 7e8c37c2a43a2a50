"""Synthetic inputs with known ground truth.

Fences sit on a jittered grid (default 150 m spacing) so every generated
event falls strictly inside exactly one fence. Each fence belongs to a demand
tier; higher tiers attract more trip destinations and have smaller
capacities, which produces congested spots at known places.
"""

import json
import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from datetime import date, datetime, timedelta
from pathlib import Path

import numpy as np

from . import geo
from .ingest import PoiCategory
from .outputs import _csv_bytes, json_bytes, write_atomic
from .validation import format_timestamp

TIERS = ("over", "semi", "light")
_TIER_SHARE = (0.1, 0.2, 0.7)
_TIER_WEIGHT = {"over": 10.0, "semi": 3.0, "light": 1.0}
_TIER_CAPACITY = {"over": (2, 4), "semi": (4, 8), "light": (8, 16)}
_ORIGIN = (118.10, 24.48)
_DECIMALS = 7


@dataclass
class SynthSpec:
    n_fences: int = 20
    n_bikes: int = 50
    n_trips: int = 200
    n_pois: int = 120
    days: int = 1
    start_date: str = "2020-12-21"
    spacing_m: float = 150.0
    seed: int = 7


@dataclass
class SynthDataset:
    spec: SynthSpec
    fences: list = field(default_factory=list)
    events: list = field(default_factory=list)
    pois: list = field(default_factory=list)
    transit: list = field(default_factory=list)
    trips: list = field(default_factory=list)
    tiers: dict = field(default_factory=dict)
    capacities: dict = field(default_factory=dict)

    def flows(self, width_s, window=("06:00", "10:00")):
        """Ground-truth ``{(fence_id, bin_start): (inflow, outflow)}``."""
        w0 = datetime.strptime(window[0], "%H:%M")
        w1 = datetime.strptime(window[1], "%H:%M")
        start_s = w0.hour * 3600 + w0.minute * 60
        end_s = w1.hour * 3600 + w1.minute * 60
        counts = defaultdict(lambda: [0, 0])
        for ev in self.events:
            ts = ev["timestamp"]
            s = ts.hour * 3600 + ts.minute * 60 + ts.second
            if not start_s <= s < end_s:
                continue
            off = s - start_s
            b = datetime.combine(ts.date(), w0.time()) + timedelta(seconds=off - off % width_s)
            counts[(ev["fence_id"], b)][0 if ev["lock_status"] == 1 else 1] += 1
        return {k: tuple(v) for k, v in sorted(counts.items())}


def _round(x):
    return round(x, _DECIMALS)


def _rect_ring(center, w, h):
    xy = [(-w / 2, -h / 2), (w / 2, -h / 2), (w / 2, h / 2), (-w / 2, h / 2)]
    ring = [(_round(lon), _round(lat)) for lon, lat in geo.from_local(xy, center)]
    return ring + [ring[0]]


def _interior_point(rng, center, w, h):
    x = rng.uniform(-0.3, 0.3) * w
    y = rng.uniform(-0.3, 0.3) * h
    lon, lat = geo.from_local([(x, y)], center)[0]
    return (_round(lon), _round(lat))


def generate(spec=None):
    spec = spec or SynthSpec()
    rng = np.random.default_rng(spec.seed)
    ds = SynthDataset(spec)

    side = max(1, math.ceil(math.sqrt(spec.n_fences)))
    geometry = {}
    tier_draw = rng.choice(len(TIERS), size=spec.n_fences, p=_TIER_SHARE)
    for i in range(spec.n_fences):
        gx, gy = i % side, i // side
        jitter = rng.uniform(-0.1, 0.1, size=2) * spec.spacing_m
        x, y = gx * spec.spacing_m + jitter[0], gy * spec.spacing_m + jitter[1]
        center = geo.from_local([(x, y)], _ORIGIN)[0]
        tier = TIERS[tier_draw[i]]
        lo, hi = _TIER_CAPACITY[tier]
        capacity = int(rng.integers(lo, hi + 1))
        # half-slot margin keeps floor(area / 1.2) robust to coordinate rounding
        area = (capacity + 0.5) * 1.2
        w = float(rng.uniform(1.5, 3.0))
        h = area / w
        fence_id = f"F{i:04d}"
        geometry[fence_id] = (center, w, h)
        ds.fences.append({"fence_id": fence_id, "ring": _rect_ring(center, w, h)})
        ds.tiers[fence_id] = tier
        ds.capacities[fence_id] = capacity

    fence_ids = [f["fence_id"] for f in ds.fences]
    weights = np.array([_TIER_WEIGHT[ds.tiers[f]] for f in fence_ids])
    day0 = date.fromisoformat(spec.start_date)

    residential = [f for f in fence_ids if ds.tiers[f] == "light"] or fence_ids
    if spec.n_trips > 0 and spec.n_bikes > 0 and len(fence_ids) >= 2:
        bikes = [f"bike{b:05d}" for b in range(spec.n_bikes)]
        per_bike = Counter(int(b) for b in rng.integers(0, spec.n_bikes, size=spec.n_trips))
        for b, bike in enumerate(bikes):
            n = per_bike.get(b, 0)
            if not n:
                continue
            day_of = sorted(int(d) for d in rng.integers(0, spec.days, size=n))
            for d in range(spec.days):
                k = day_of.count(d)
                if not k:
                    continue
                # every morning starts from a low-demand (residential) fence
                location = residential[int(rng.integers(len(residential)))]
                day = day0 + timedelta(days=d)
                clock = datetime.combine(day, datetime.min.time()) + timedelta(hours=6)
                starts = sorted(
                    float(np.clip(rng.normal(8 * 3600, 1500), 6 * 3600, 9.6 * 3600))
                    for _ in range(k)
                )
                for s in starts:
                    start = max(
                        datetime.combine(day, datetime.min.time()) + timedelta(seconds=int(s)),
                        clock + timedelta(seconds=60),
                    )
                    duration = int(rng.integers(180, 1500))
                    end = start + timedelta(seconds=duration)
                    if end.time() >= datetime.strptime("10:00", "%H:%M").time() or end.date() != day:
                        break
                    w = weights.copy()
                    w[fence_ids.index(location)] = 0.0
                    dest = fence_ids[int(rng.choice(len(fence_ids), p=w / w.sum()))]
                    p_from = _interior_point(rng, *geometry[location])
                    p_to = _interior_point(rng, *geometry[dest])
                    ds.events.append({
                        "bicycle_id": bike, "timestamp": start, "position": p_from,
                        "lock_status": 0, "fence_id": location,
                    })
                    ds.events.append({
                        "bicycle_id": bike, "timestamp": end, "position": p_to,
                        "lock_status": 1, "fence_id": dest,
                    })
                    ds.trips.append({
                        "bicycle_id": bike,
                        "start_time": format_timestamp(start),
                        "end_time": format_timestamp(end),
                        "origin_fence": location,
                        "dest_fence": dest,
                    })
                    location = dest
                    clock = end
                    if ds.tiers[dest] != "light":
                        break  # commuters leave the bike at work for the day
    ds.events.sort(key=lambda e: (e["timestamp"], e["bicycle_id"], e["lock_status"]))
    ds.trips.sort(key=lambda t: (t["bicycle_id"], t["start_time"]))

    cats = list(PoiCategory)
    span = side * spec.spacing_m
    for i in range(spec.n_pois):
        if fence_ids and rng.random() < 0.5:
            hot = [f for f in fence_ids if ds.tiers[f] != "light"] or fence_ids
            anchor = geometry[hot[int(rng.integers(len(hot)))]][0]
            offset = rng.normal(0, 80, size=2)
            category = cats[int(rng.choice([0, 8, 4, 1]))]
        else:
            anchor = _ORIGIN
            offset = rng.uniform(-100, span + 100, size=2)
            category = cats[int(rng.integers(len(cats)))]
        lon, lat = geo.from_local([tuple(offset)], anchor)[0]
        ds.pois.append({"name": f"POI {i:04d}", "category": category.value,
                        "position": (_round(lon), _round(lat))})

    for i in range(max(1, spec.n_fences // 10)):
        offset = rng.uniform(0, span, size=2)
        lon, lat = geo.from_local([tuple(offset)], _ORIGIN)[0]
        kind = "Subway" if i % 2 == 0 else "Bus"
        ds.transit.append({"kind": kind, "name": f"Station {i}",
                           "line": "Line 1" if kind == "Subway" else "",
                           "position": (_round(lon), _round(lat))})
    return ds


def _fmt(x):
    return f"{x:.{_DECIMALS}f}"


def write(ds, out_dir):
    """Write the dataset in the loader formats plus ``ground_truth.json`` and
    a ready-to-use ``config.json``."""
    out = Path(out_dir)
    files = {}
    files["events.csv"] = _csv_bytes(
        ["bicycle_id", "update_time", "longitude", "latitude", "lock_status"],
        [
            [e["bicycle_id"], format_timestamp(e["timestamp"]), _fmt(e["position"][0]),
             _fmt(e["position"][1]), e["lock_status"]]
            for e in ds.events
        ],
    )
    files["fences.geojson"] = json_bytes({
        "type": "FeatureCollection",
        "features": [
            {
                "type": "Feature",
                "properties": {"fence_id": f["fence_id"]},
                "geometry": {"type": "Polygon", "coordinates": [[list(v) for v in f["ring"]]]},
            }
            for f in ds.fences
        ],
    })
    files["pois.csv"] = _csv_bytes(
        ["name", "address", "district", "type", "longitude", "latitude"],
        [[p["name"], "", "Synthetic", p["category"], _fmt(p["position"][0]),
          _fmt(p["position"][1])] for p in ds.pois],
    )
    files["transit.csv"] = _csv_bytes(
        ["kind", "name", "line", "longitude", "latitude"],
        [[t["kind"], t["name"], t["line"], _fmt(t["position"][0]), _fmt(t["position"][1])]
         for t in ds.transit],
    )
    widths = (300, 900, 1800)
    files["ground_truth.json"] = json_bytes({
        "spec": ds.spec.__dict__,
        "trips": ds.trips,
        "fence_tiers": ds.tiers,
        "capacities": ds.capacities,
        "flows": {
            str(w): [[f, format_timestamp(b), i, o] for (f, b), (i, o) in ds.flows(w).items()]
            for w in widths
        },
    })
    files["config.json"] = json_bytes({
        "events": "events.csv",
        "fences": "fences.geojson",
        "pois": "pois.csv",
        "transit": ["transit.csv"],
        "seed": ds.spec.seed,
    })
    for name, data in files.items():
        write_atomic(out / name, data)
    return sorted(files)


def load_ground_truth(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)
