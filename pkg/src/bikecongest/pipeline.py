"""End-to-end stages shared by the CLI subcommands.

Each ``run_*`` function returns ``{filename: bytes}`` plus fills in the
manifest; nothing touches the filesystem except input reads.
"""

import time
from contextlib import contextmanager
from dataclasses import dataclass, field

from . import __version__, geo, ingest, trips
from .clustering import build_features, classify
from .congestion import CongestionAnalyzer, occupancy_mode
from .ingest import PoiCategory
from .outputs import (
    clusters_csv, clusters_geojson, congested_spots_csv, features_csv, file_digest, flows_csv,
    heatmap_csv, json_bytes, occupancy_csv, trips_csv,
)

STAGE_INPUTS = {
    "validate": ("events", "fences", "pois"),
    "trips": ("events",),
    "congestion": ("events", "fences"),
    "classify": ("events", "fences", "pois"),
}


@dataclass
class Manifest:
    command: str
    config: dict
    version: str = __version__
    status: str = "running"
    inputs: dict = field(default_factory=dict)
    loaders: dict = field(default_factory=dict)
    reports: dict = field(default_factory=dict)
    stage_seconds: dict = field(default_factory=dict)
    outputs: list = field(default_factory=list)
    warnings: list = field(default_factory=list)
    error: dict = None
    current_stage: str = None

    @contextmanager
    def stage(self, name):
        self.current_stage = name
        t0 = time.perf_counter()
        try:
            yield
        finally:
            self.stage_seconds[name] = round(time.perf_counter() - t0, 6)

    def to_dict(self):
        return {
            "command": self.command,
            "version": self.version,
            "status": self.status,
            "config": self.config,
            "inputs": self.inputs,
            "loaders": self.loaders,
            "reports": self.reports,
            "stage_seconds": self.stage_seconds,
            "outputs": self.outputs,
            "warnings": self.warnings,
            "error": self.error,
        }


@dataclass
class Inputs:
    events: tuple = ()
    fences: tuple = ()
    pois: tuple = ()
    transit: tuple = ()
    trajectories: tuple = ()

    def fence_map(self):
        return {f.fence_id: f for f in self.fences}


def load_inputs(cfg, manifest, need):
    """Load every configured input; ``need`` lists the ones that must exist."""
    data = Inputs()

    def record(name, path, report):
        manifest.inputs[name if name != "transit" else f"transit:{path}"] = {
            "path": str(path), "digest": file_digest(path),
        }
        manifest.loaders[name if name != "transit" else f"transit:{path}"] = report.to_dict()

    with manifest.stage("load"):
        if cfg.events:
            data.events, rep = ingest.load_events(cfg.events, cfg.event_columns, allow_empty=True)
            record("events", cfg.events, rep)
            if not data.events:
                manifest.warnings.append("events file has no valid rows")
        if cfg.fences:
            data.fences, rep = ingest.load_fences(cfg.fences, cfg.slot_area_m2)
            record("fences", cfg.fences, rep)
        if cfg.pois:
            data.pois, rep = ingest.load_pois(cfg.pois)
            record("pois", cfg.pois, rep)
        stations = []
        for path in cfg.transit:
            loaded, rep = ingest.load_transit(path, allow_empty=True)
            stations.extend(loaded)
            record("transit", path, rep)
        data.transit = tuple(stations)
        if cfg.trajectories:
            data.trajectories, rep = ingest.load_trajectories(cfg.trajectories)
            record("trajectories", cfg.trajectories, rep)
    return data


def _kept_events(events, excluded):
    excluded = set(excluded)
    return [e for e in events if e.timestamp.date() not in excluded]


def run_trips(cfg, data, manifest, fence_index=None, poi_index=None):
    with manifest.stage("trips"):
        distance_fn = None
        if cfg.distance_mode == "trajectory":
            distance_fn = trips.TrajectoryDistance(data.trajectories)
        pairing = trips.PairingConfig(max_trip_duration_s=cfg.max_trip_duration_s)
        reconstructed, pairing_report = trips.reconstruct_trips(
            data.events, pairing, distance_fn=distance_fn, threads=cfg.threads
        )
        kept = trips.filter_trips(
            reconstructed, cfg.min_trip_m, cfg.max_trip_m, cfg.window_times, cfg.excluded
        )
        kept = trips.assign_od_context(
            kept, fence_index, poi_index, data.pois, cfg.poi_radius_m, cfg.snap_m
        )
        summary = trips.summarize(kept, cfg.window_times)
        manifest.reports["pairing"] = pairing_report.to_dict()
        manifest.reports["trip_filter"] = {"reconstructed": len(reconstructed), "kept": len(kept)}
        summary_doc = {
            "pairing": pairing_report.to_dict(),
            "filter": {
                "reconstructed": len(reconstructed),
                "kept": len(kept),
                "min_m": cfg.min_trip_m,
                "max_m": cfg.max_trip_m,
                "window": cfg.window,
                "excluded_dates": list(cfg.excluded_dates),
            },
            "summary": summary.to_dict(),
        }
    return {"trips.csv": trips_csv(kept), "summary.json": json_bytes(summary_doc)}


def run_congestion(cfg, data, manifest, fence_index):
    with manifest.stage("congestion"):
        events = _kept_events(data.events, cfg.excluded)
        analyzer = CongestionAnalyzer(
            widths=tuple(cfg.widths), window=cfg.window_times,
            threshold=cfg.congestion_threshold, snap_m=cfg.snap_m,
        ).fit(events, fence_index)
        manifest.reports["binning"] = {
            str(w): g.report.to_dict() for w, g in sorted(analyzer.grids_.items())
        }
        manifest.reports["congested_spots"] = {
            str(w): len(s) for w, s in sorted(analyzer.spots_.items())
        }
        out = {
            "flows.csv": flows_csv(analyzer.grids_),
            "congested_spots.csv": congested_spots_csv(analyzer.spots_),
        }
        if cfg.emit_heatmap:
            out["heatmap.csv"] = heatmap_csv(analyzer.grids_)
        if cfg.emit_occupancy:
            out["occupancy.csv"] = occupancy_csv(
                {w: occupancy_mode(g) for w, g in analyzer.grids_.items()}
            )
    return out, analyzer


def _transit_share(assignments, fences, transit_index, radius_m):
    if transit_index is None or not len(transit_index):
        return {}
    near = {}
    for a in assignments:
        hits = geo.radius_hits(transit_index, fences[a.fence_id].centroid, radius_m)
        near.setdefault(a.label, []).append(bool(hits))
    return {label: sum(v) / len(v) for label, v in sorted(near.items())}


def run_classify(cfg, data, manifest, analyzer, poi_index, transit_index):
    with manifest.stage("classify"):
        fences = data.fence_map()
        spots = analyzer.spots_[int(cfg.cluster_width_s)]
        categories = [PoiCategory.parse(c) for c in cfg.poi_categories]
        features = build_features(
            spots, fences, poi_index, categories, cfg.poi_radius_m, int(cfg.cluster_width_s)
        )
        for name in features.dropped:
            manifest.warnings.append(f"feature column dropped (constant): {name}")
        assignments, report = classify(
            features, seed=cfg.seed, k_range=tuple(cfg.k_range), n_clusters=cfg.n_clusters,
            n_init=cfg.n_init, reg_eps=cfg.reg_eps, threads=cfg.threads,
            silhouette_raw=cfg.silhouette_raw,
        )
        report["cluster_width_s"] = int(cfg.cluster_width_s)
        report["poi_categories"] = [c.value for c in categories]
        report["transit_within_radius_share"] = _transit_share(
            assignments, fences, transit_index, cfg.poi_radius_m
        )
        # output location and thread count never change results
        report["config"] = {
            k: v for k, v in cfg.to_dict().items() if k not in ("out", "threads")
        }
        manifest.reports["classify"] = {
            "n_spots": report["n_spots"], "k_selected": report["k_selected"],
            "chosen_model": report["chosen_model"],
        }
    return {
        "features.csv": features_csv(features),
        "clusters.csv": clusters_csv(assignments),
        "clusters.geojson": clusters_geojson(assignments, features, fences),
        "model_report.json": json_bytes(report),
    }


def run(command, cfg, manifest):
    """Run ``command`` and return ``{filename: bytes}``."""
    data = load_inputs(cfg, manifest, STAGE_INPUTS.get(command, ()))
    if command == "validate":
        return {}
    with manifest.stage("index"):
        fence_index = geo.build_index(data.fences, cfg.cell_size_m) if data.fences else None
        poi_index = geo.build_index(data.pois, cfg.cell_size_m) if data.pois else None
        transit_index = geo.build_index(data.transit, cfg.cell_size_m) if data.transit else None
    outputs = run_trips(cfg, data, manifest, fence_index, poi_index)
    if command == "trips":
        return outputs
    more, analyzer = run_congestion(cfg, data, manifest, fence_index)
    outputs.update(more)
    if command == "congestion":
        return outputs
    outputs.update(run_classify(cfg, data, manifest, analyzer, poi_index, transit_index))
    return outputs
