"""Per-fence inflow/outflow binning and congestion density.

Congestion density of fence ``i`` in bin ``j`` is the bin's net inflow
(locks minus unlocks) divided by the fence's parking capacity. A bin is
congested when that ratio is strictly above the threshold (1.0 by default);
a fence's mean congestion averages only its congested bins.
"""

import math
from collections import defaultdict
from dataclasses import dataclass, field
from datetime import datetime, timedelta

from sklearn.base import BaseEstimator

from . import geo
from .ingest import LockStatus
from .trips import DEFAULT_WINDOW
from .validation import check_width, check_window, seconds_of_day

DEFAULT_WIDTHS = (300, 900, 1800)


@dataclass(frozen=True, order=True)
class TimeBin:
    start: datetime
    width_s: int

    @property
    def end(self):
        return self.start + timedelta(seconds=self.width_s)


@dataclass(frozen=True)
class FlowCell:
    fence_id: str
    bin: TimeBin
    inflow: int
    outflow: int
    capacity_pc: int

    @property
    def net_p(self):
        return self.inflow - self.outflow

    @property
    def congestion_c(self):
        return congestion_of(self)


def congestion_of(cell, fence=None):
    """``(inflow - outflow) / capacity``; negative values mean net pickups."""
    capacity = fence.capacity_pc if fence is not None else cell.capacity_pc
    return (cell.inflow - cell.outflow) / capacity


@dataclass
class BinningReport:
    events_in: int = 0
    assigned: int = 0
    unassigned: int = 0
    out_of_window: int = 0

    def to_dict(self):
        return {
            "events_in": self.events_in,
            "assigned": self.assigned,
            "unassigned": self.unassigned,
            "out_of_window": self.out_of_window,
        }


@dataclass
class FlowGrid:
    """Sparse (fence x bin) counts for one bin width; absent cells are zero."""

    width_s: int
    window: tuple
    capacities: dict
    counts: dict = field(default_factory=dict)
    days: tuple = ()
    report: BinningReport = field(default_factory=BinningReport)

    def cell(self, fence_id, bin_start):
        inflow, outflow = self.counts.get((fence_id, bin_start), (0, 0))
        return FlowCell(
            fence_id, TimeBin(bin_start, self.width_s), inflow, outflow,
            self.capacities[fence_id],
        )

    def cells(self):
        """Non-empty cells ordered by ``(fence_id, bin_start)``."""
        return [self.cell(f, b) for f, b in sorted(self.counts)]

    def bin_starts(self, day):
        start = datetime.combine(day, self.window[0])
        n = _window_len(self.window) // self.width_s
        return [start + timedelta(seconds=i * self.width_s) for i in range(n)]

    def all_bin_starts(self):
        return [b for day in self.days for b in self.bin_starts(day)]

    def active_fences(self):
        return sorted({f for f, _ in self.counts})

    def totals(self, fence_id):
        inflow = outflow = 0
        for (f, _), (i, o) in self.counts.items():
            if f == fence_id:
                inflow += i
                outflow += o
        return inflow, outflow

    def coarsen(self, factor):
        """Merge ``factor`` consecutive bins into one of width ``factor * width_s``."""
        width = check_width(self.width_s * factor, self.window)
        merged = defaultdict(lambda: [0, 0])
        for (fence_id, start), (i, o) in self.counts.items():
            merged[(fence_id, _bin_start(start, self.window, width))][0] += i
            merged[(fence_id, _bin_start(start, self.window, width))][1] += o
        return FlowGrid(
            width, self.window, self.capacities,
            {k: tuple(v) for k, v in sorted(merged.items())}, self.days, self.report,
        )


def _window_len(window):
    return seconds_of_day(window[1]) - seconds_of_day(window[0])


def _bin_start(ts, window, width_s):
    """Aligned bin start for ``ts``, or ``None`` outside the daily window."""
    s = seconds_of_day(ts.time())
    w0 = seconds_of_day(window[0])
    if not w0 <= s < seconds_of_day(window[1]):
        return None
    offset = s - w0
    return datetime.combine(ts.date(), window[0]) + timedelta(seconds=offset - offset % width_s)


def assign_events(events, fence_index, snap_m=50.0):
    """Fence id (or ``None``) for every event, in input order."""
    return [geo.nearest_fence(fence_index, ev.position, snap_m) for ev in events]


def fence_capacities(fence_index):
    return {key: item.obj.capacity_pc for key, item in fence_index.items.items()}


def bin_events(events, fence_index, window=DEFAULT_WINDOW, width_s=900, snap_m=50.0,
               assignments=None):
    """Count locks (inflow) and unlocks (outflow) per fence and time bin.

    ``assignments`` may carry precomputed fence ids from :func:`assign_events`
    so several widths can share one spatial pass.
    """
    window = check_window(window)
    width_s = check_width(width_s, window)
    if assignments is None:
        assignments = assign_events(events, fence_index, snap_m)
    report = BinningReport(events_in=len(events))
    counts = defaultdict(lambda: [0, 0])
    days = set()
    for ev, fence_id in zip(events, assignments):
        start = _bin_start(ev.timestamp, window, width_s)
        if start is None:
            report.out_of_window += 1
            continue
        if fence_id is None:
            report.unassigned += 1
            continue
        report.assigned += 1
        days.add(ev.timestamp.date())
        slot = 0 if ev.lock_status == LockStatus.LOCKED else 1
        counts[(fence_id, start)][slot] += 1
    return FlowGrid(
        width_s=width_s,
        window=window,
        capacities=fence_capacities(fence_index),
        counts={k: tuple(v) for k, v in sorted(counts.items())},
        days=tuple(sorted(days)),
        report=report,
    )


@dataclass(frozen=True)
class CongestedSpot:
    fence_id: str
    width_s: int
    mean_congestion: float
    congested_bin_count: int
    peak_congestion: float
    peak_bin: datetime
    order_count: int
    capacity_pc: int


def average_congestion(values, threshold=1.0):
    """Mean of the values strictly above ``threshold`` and how many there were."""
    congested = [c for c in values if c > threshold]
    if not congested:
        return None, 0
    return math.fsum(congested) / len(congested), len(congested)


def identify_congested(grid, threshold=1.0):
    """Fences with at least one bin strictly above ``threshold``.

    Sorted by mean congestion (descending), then fence id.
    """
    per_fence = defaultdict(list)
    orders = defaultdict(int)
    for (fence_id, start), (i, o) in grid.counts.items():
        orders[fence_id] += i + o
        per_fence[fence_id].append((start, (i - o) / grid.capacities[fence_id]))
    spots = []
    for fence_id, values in per_fence.items():
        mean, n = average_congestion([c for _, c in values], threshold)
        if not n:
            continue
        peak_start, peak = min(values, key=lambda v: (-v[1], v[0]))
        spots.append(
            CongestedSpot(
                fence_id=fence_id,
                width_s=grid.width_s,
                mean_congestion=mean,
                congested_bin_count=n,
                peak_congestion=peak,
                peak_bin=peak_start,
                order_count=orders[fence_id],
                capacity_pc=grid.capacities[fence_id],
            )
        )
    spots.sort(key=lambda s: (-s.mean_congestion, s.fence_id))
    return spots


@dataclass(frozen=True)
class OccupancyCell:
    fence_id: str
    bin: TimeBin
    occupancy: int
    congestion_c: float


def occupancy_mode(grid, initial_stock=None):
    """Cumulative alternative to per-bin net flow.

    Occupancy carries over between bins of one day
    (``P[j] = max(0, P[j-1] + in[j] - out[j])``) and restarts from
    ``initial_stock`` (default 0) each day.
    """
    initial_stock = initial_stock or {}
    fences = sorted(set(grid.active_fences()) | {f for f, v in initial_stock.items() if v})
    cells = []
    for fence_id in fences:
        capacity = grid.capacities[fence_id]
        for day in grid.days:
            stock = initial_stock.get(fence_id, 0)
            for start in grid.bin_starts(day):
                i, o = grid.counts.get((fence_id, start), (0, 0))
                stock = max(0, stock + i - o)
                cells.append(
                    OccupancyCell(fence_id, TimeBin(start, grid.width_s), stock, stock / capacity)
                )
    return cells


def heatmap_rows(grid):
    """Long-form ``(fence_id, bin_start, congestion)`` over every bin of every
    observed day, for fences with any activity."""
    rows = []
    for fence_id in grid.active_fences():
        capacity = grid.capacities[fence_id]
        for start in grid.all_bin_starts():
            i, o = grid.counts.get((fence_id, start), (0, 0))
            rows.append((fence_id, start, (i - o) / capacity))
    return rows


class CongestionAnalyzer(BaseEstimator):
    """Bin events at several widths and pick out congested fences.

    After ``fit``: ``grids_`` maps width -> :class:`FlowGrid` and ``spots_``
    maps width -> list of :class:`CongestedSpot`.
    """

    def __init__(self, widths=DEFAULT_WIDTHS, window=DEFAULT_WINDOW, threshold=1.0, snap_m=50.0):
        self.widths = widths
        self.window = window
        self.threshold = threshold
        self.snap_m = snap_m

    def fit(self, events, fence_index):
        window = check_window(self.window)
        widths = [check_width(w, window) for w in self.widths]
        assignments = assign_events(events, fence_index, self.snap_m)
        self.grids_ = {
            w: bin_events(events, fence_index, window, w, assignments=assignments)
            for w in widths
        }
        self.spots_ = {w: identify_congested(g, self.threshold) for w, g in self.grids_.items()}
        return self
