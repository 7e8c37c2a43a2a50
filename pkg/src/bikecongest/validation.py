"""Input validation helpers shared across the package."""

import math
import re
from datetime import datetime, time

import numpy as np
from sklearn.utils.validation import check_array

from .errors import ConfigError, KTooLarge, WindowMisaligned

TIMESTAMP_FORMAT = "%Y-%m-%d %H:%M:%S"
_TIMESTAMP_RE = re.compile(r"\d{4}-\d{2}-\d{2} \d{2}:\d{2}:\d{2}")
_UINT64_MAX = 2**64 - 1


def parse_timestamp(text):
    """Parse ``YYYY-MM-DD HH:MM:SS`` exactly; anything else raises ValueError."""
    text = text.strip()
    if not _TIMESTAMP_RE.fullmatch(text):
        raise ValueError(f"bad timestamp {text!r}")
    return datetime.strptime(text, TIMESTAMP_FORMAT)


def format_timestamp(ts):
    return ts.strftime(TIMESTAMP_FORMAT)


def valid_lonlat(lon, lat):
    return (
        math.isfinite(lon)
        and math.isfinite(lat)
        and -180.0 <= lon <= 180.0
        and -90.0 <= lat <= 90.0
    )


def check_lonlat(point):
    lon, lat = float(point[0]), float(point[1])
    if not valid_lonlat(lon, lat):
        raise ValueError(f"coordinate out of range: ({lon}, {lat})")
    return lon, lat


def check_seed(seed):
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)):
        raise ConfigError(f"seed must be an integer, got {seed!r}")
    seed = int(seed)
    if not 0 <= seed <= _UINT64_MAX:
        raise ConfigError(f"seed must be an unsigned 64-bit integer, got {seed}")
    return seed


def parse_clock(text):
    try:
        return datetime.strptime(text.strip(), "%H:%M").time()
    except ValueError as exc:
        raise ConfigError(f"bad time of day {text!r}, expected HH:MM") from exc


def parse_window(text):
    """``"06:00-10:00"`` -> ``(time(6), time(10))``."""
    try:
        start, end = text.split("-")
    except ValueError as exc:
        raise ConfigError(f"bad window {text!r}, expected HH:MM-HH:MM") from exc
    return check_window((parse_clock(start), parse_clock(end)))


def check_window(window):
    start, end = window
    if not isinstance(start, time) or not isinstance(end, time):
        raise ConfigError("window bounds must be datetime.time values")
    if window_seconds(window) <= 0:
        raise ConfigError(f"window end {end} must be after start {start}")
    return start, end


def seconds_of_day(t):
    return t.hour * 3600 + t.minute * 60 + t.second


def window_seconds(window):
    return seconds_of_day(window[1]) - seconds_of_day(window[0])


def check_width(width_s, window):
    width_s = int(width_s)
    if width_s <= 0:
        raise ConfigError(f"bin width must be positive, got {width_s}")
    length = window_seconds(window)
    if length % width_s:
        raise WindowMisaligned(
            f"bin width {width_s}s does not divide the {length}s window"
        )
    return width_s


def check_features(X, min_samples=1):
    """Finite 2-D float array with at least ``min_samples`` rows."""
    return check_array(
        X, dtype=np.float64, ensure_min_samples=min_samples, ensure_all_finite=True
    )


def check_n_clusters(k, n_samples):
    if k < 1:
        raise ConfigError(f"number of clusters must be >= 1, got {k}")
    if k > n_samples:
        raise KTooLarge(f"k={k} exceeds the number of samples ({n_samples})")
    return int(k)
