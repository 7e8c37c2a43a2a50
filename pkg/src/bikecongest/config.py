"""Run configuration: one JSON document, every default spelled out."""

import json
from dataclasses import asdict, dataclass, field, fields
from datetime import date
from pathlib import Path

from .clustering.features import DEFAULT_POI_CATEGORIES
from .errors import ConfigError
from .ingest import PoiCategory
from .validation import check_seed, check_width, parse_window


@dataclass
class RunConfig:
    events: str = None
    fences: str = None
    pois: str = None
    transit: list = field(default_factory=list)
    trajectories: str = None
    out: str = "out"
    window: str = "06:00-10:00"
    widths: list = field(default_factory=lambda: [300, 900, 1800])
    excluded_dates: list = field(default_factory=list)
    slot_area_m2: float = 1.2
    snap_m: float = 50.0
    cell_size_m: float = 250.0
    min_trip_m: float = 100.0
    max_trip_m: float = 10_000.0
    max_trip_duration_s: int = 4 * 3600
    distance_mode: str = "od"
    congestion_threshold: float = 1.0
    poi_radius_m: float = 300.0
    poi_categories: list = field(default_factory=lambda: [c.value for c in DEFAULT_POI_CATEGORIES])
    cluster_width_s: int = 900
    k_range: list = field(default_factory=lambda: [2, 10])
    n_clusters: int = None
    n_init: int = 10
    reg_eps: float = 1e-6
    seed: int = 0
    threads: int = 1
    emit_heatmap: bool = False
    emit_occupancy: bool = False
    silhouette_raw: bool = False
    event_columns: dict = field(default_factory=dict)

    def to_dict(self):
        return asdict(self)

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @property
    def window_times(self):
        return parse_window(self.window)

    @property
    def excluded(self):
        try:
            return [date.fromisoformat(d) for d in self.excluded_dates]
        except ValueError as exc:
            raise ConfigError(f"bad excluded date: {exc}") from exc

    def validate(self, required_inputs=()):
        """Check value ranges and that the named inputs exist."""
        window = self.window_times
        if not self.widths:
            raise ConfigError("at least one bin width is required")
        self.widths = [check_width(w, window) for w in self.widths]
        if int(self.cluster_width_s) not in self.widths:
            raise ConfigError(
                f"cluster_width_s={self.cluster_width_s} is not one of the widths {self.widths}"
            )
        self.seed = check_seed(self.seed)
        _ = self.excluded
        if self.slot_area_m2 <= 0:
            raise ConfigError("slot_area_m2 must be positive")
        if self.min_trip_m > self.max_trip_m:
            raise ConfigError("min_trip_m exceeds max_trip_m")
        if self.distance_mode not in ("od", "trajectory"):
            raise ConfigError("distance_mode must be 'od' or 'trajectory'")
        if self.distance_mode == "trajectory" and not self.trajectories:
            raise ConfigError("distance_mode 'trajectory' needs a trajectories file")
        if len(self.k_range) != 2 or not 1 <= self.k_range[0] <= self.k_range[1]:
            raise ConfigError(f"bad k_range {self.k_range}")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        try:
            [PoiCategory.parse(c) for c in self.poi_categories]
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if not self.poi_categories:
            raise ConfigError("poi_categories must not be empty")
        for name in required_inputs:
            value = getattr(self, name)
            paths = value if isinstance(value, list) else [value]
            if not value:
                raise ConfigError(f"input '{name}' is required for this command")
            for p in paths:
                if not Path(p).is_file():
                    raise ConfigError(f"input '{name}' not found: {p}")
        return self


def config_from_mapping(mapping):
    known = {f.name for f in fields(RunConfig)}
    unknown = sorted(set(mapping) - known)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    values = dict(mapping)
    if isinstance(values.get("transit"), str):
        values["transit"] = [values["transit"]]
    return RunConfig(**values)


def load_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            mapping = json.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file is not valid JSON: {exc}") from exc
    if not isinstance(mapping, dict):
        raise ConfigError("config must be a JSON object")
    base = Path(path).parent
    for key in ("events", "fences", "pois", "trajectories"):
        if mapping.get(key):
            mapping[key] = str(_resolve(base, mapping[key]))
    if mapping.get("transit"):
        transit = mapping["transit"]
        transit = [transit] if isinstance(transit, str) else transit
        mapping["transit"] = [str(_resolve(base, p)) for p in transit]
    return config_from_mapping(mapping)


def _resolve(base, p):
    p = Path(p)
    return p if p.is_absolute() else base / p
