"""Feature vectors for congested spots: mean congestion, capacity, order count
and the share of nearby POIs in a chosen set of categories."""

import warnings
from dataclasses import dataclass

import numpy as np

from .. import geo
from ..errors import EmptyPoiDataset
from ..ingest import PoiCategory

FEATURE_NAMES = ("mean_congestion", "capacity_pc", "order_count", "poi_index")
DEFAULT_POI_CATEGORIES = (
    PoiCategory.TRANSPORT,
    PoiCategory.COMPANY,
    PoiCategory.LIFE,
    PoiCategory.SHOPPING,
)
_MIN_STD = 1e-12


@dataclass(frozen=True)
class SpotFeatures:
    fence_id: str
    mean_congestion: float
    capacity_pc: int
    order_count: int
    poi_index: float

    def as_row(self):
        return [float(getattr(self, name)) for name in FEATURE_NAMES]


def poi_index(fence, poi_grid_index, categories=DEFAULT_POI_CATEGORIES, radius_m=300.0):
    """POIs of ``categories`` within ``radius_m`` of the fence centroid, as a
    fraction of every POI in the index."""
    categories = frozenset(PoiCategory(c) for c in categories)
    if not categories:
        raise ValueError("at least one POI category is required")
    total = len(poi_grid_index)
    if total == 0:
        raise EmptyPoiDataset("POI dataset is empty")
    near = geo.radius_hits(poi_grid_index, fence.centroid, radius_m)
    count = sum(1 for _, key in near if poi_grid_index.items[key].obj.category in categories)
    return count / total


@dataclass
class FeatureSet:
    spots: list
    raw: np.ndarray
    X: np.ndarray
    columns: tuple
    means: np.ndarray
    stds: np.ndarray
    dropped: tuple

    @property
    def fence_ids(self):
        return [s.fence_id for s in self.spots]

    def standardized_full(self):
        """z-scores for all four columns; dropped columns are reported as 0."""
        out = np.zeros_like(self.raw)
        keep = [FEATURE_NAMES.index(c) for c in self.columns]
        out[:, keep] = self.X
        return out


def standardize(raw, names=FEATURE_NAMES):
    """Column z-scores (population std); near-constant columns are dropped."""
    raw = np.asarray(raw, dtype=float)
    if raw.shape[0] == 0:
        return np.zeros((0, len(names))), tuple(names), np.zeros(len(names)), np.ones(len(names)), ()
    means = raw.mean(axis=0)
    stds = raw.std(axis=0)
    keep = stds >= _MIN_STD
    dropped = tuple(n for n, k in zip(names, keep) if not k)
    if dropped and raw.shape[0] > 1:
        warnings.warn(f"dropping constant feature columns: {', '.join(dropped)}", stacklevel=2)
    X = (raw[:, keep] - means[keep]) / stds[keep]
    return X, tuple(n for n, k in zip(names, keep) if k), means, stds, dropped


def build_features(congested_spots, fences, poi_grid_index, categories=DEFAULT_POI_CATEGORIES,
                   radius_m=300.0, width_s=900):
    """One row per congested fence at ``width_s``, ordered by fence id.

    ``fences`` maps fence id to :class:`~bikecongest.ingest.Fence`.
    """
    spots = sorted((s for s in congested_spots if s.width_s == width_s), key=lambda s: s.fence_id)
    rows = []
    for spot in spots:
        fence = fences[spot.fence_id]
        rows.append(
            SpotFeatures(
                fence_id=spot.fence_id,
                mean_congestion=spot.mean_congestion,
                capacity_pc=fence.capacity_pc,
                order_count=spot.order_count,
                poi_index=poi_index(fence, poi_grid_index, categories, radius_m),
            )
        )
    raw = np.array([r.as_row() for r in rows], dtype=float).reshape(len(rows), len(FEATURE_NAMES))
    X, columns, means, stds, dropped = standardize(raw)
    return FeatureSet(rows, raw, X, columns, means, stds, dropped)
