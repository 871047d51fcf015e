"""Per-cell counters, blocking estimates, and time-series snapshots.

Counters come in two flavors, because admitted-call totals serve two jobs:
cumulative admission/rejection counts feed the reported blocking ratios,
while active-call gauges (calls currently holding a channel, by how they
entered the cell) only back the occupancy bookkeeping invariant.
"""

from dataclasses import dataclass, field
from enum import Enum


class Tally(Enum):
    """Counter-relevant outcomes the engine reports, one per call event."""

    NEW_ADMIT = "new_admit"
    NEW_REJECT = "new_reject"
    HANDOFF_ADMIT = "handoff_admit"
    HANDOFF_REJECT = "handoff_reject"
    DEPART_NEW = "depart_new"          # completion or handoff-out of a new call
    DEPART_HANDOFF = "depart_handoff"  # same for a call that entered by handoff


@dataclass
class CellCounters:
    new_admitted: int = 0       # cumulative admitted new calls
    handoff_admitted: int = 0   # cumulative admitted handoffs
    new_rejected: int = 0
    handoff_rejected: int = 0
    handoff_attempts: int = 0   # admitted + rejected
    busy_time: float = 0.0      # integral of occupancy over time, channel-seconds
    last_update: float = 0.0
    active_new: int = 0         # gauges; active_new + active_handoff == occupancy
    active_handoff: int = 0

    def record(self, tally: Tally, occupancy_before: int, time: float) -> None:
        """Advance the busy-time integral to `time`, then apply one outcome."""
        if time < self.last_update:
            raise RuntimeError(
                f"time went backwards: {time} < {self.last_update}")
        self.busy_time += occupancy_before * (time - self.last_update)
        self.last_update = time

        if tally is Tally.NEW_ADMIT:
            self.new_admitted += 1
            self.active_new += 1
        elif tally is Tally.NEW_REJECT:
            self.new_rejected += 1
        elif tally is Tally.HANDOFF_ADMIT:
            self.handoff_admitted += 1
            self.handoff_attempts += 1
            self.active_handoff += 1
        elif tally is Tally.HANDOFF_REJECT:
            self.handoff_rejected += 1
            self.handoff_attempts += 1
        elif tally is Tally.DEPART_NEW:
            self.active_new -= 1
        elif tally is Tally.DEPART_HANDOFF:
            self.active_handoff -= 1

    def snapshot(self, time: float, cell, guard: int, occupancy: int,
                 capacity: int) -> "Snapshot":
        """Freeze current cumulative estimates at `time` (> 0)."""
        if time < self.last_update:
            raise RuntimeError(
                f"time went backwards: {time} < {self.last_update}")
        self.busy_time += occupancy * (time - self.last_update)
        self.last_update = time
        return Snapshot(
            time=time,
            cell=cell,
            occupancy=occupancy,
            guard=guard,
            capacity=capacity,
            new_admitted=self.new_admitted,
            handoff_admitted=self.handoff_admitted,
            new_rejected=self.new_rejected,
            handoff_rejected=self.handoff_rejected,
            handoff_attempts=self.handoff_attempts,
            new_blocking=_ratio(self.new_rejected,
                                self.new_admitted + self.new_rejected),
            handoff_blocking=_ratio(self.handoff_rejected, self.handoff_attempts),
            utilization=_ratio(self.busy_time, capacity * time),
        )


def _ratio(num, den):
    return num / den if den > 0 else 0.0


@dataclass(frozen=True)
class Snapshot:
    """One time-series row: cumulative state of a cell (or the whole network)."""

    time: float
    cell: int | None          # None marks the all-cells aggregate
    occupancy: int
    guard: float
    capacity: int
    new_admitted: int
    handoff_admitted: int
    new_rejected: int
    handoff_rejected: int
    handoff_attempts: int
    new_blocking: float
    handoff_blocking: float
    utilization: float


def aggregate(snapshots) -> Snapshot:
    """Pool per-cell snapshots taken at one instant into a network row.

    Counters are summed and the ratios recomputed from the sums; averaging
    the per-cell ratios would weight cells by themselves rather than by
    traffic.  The guard column becomes the mean reserved count per cell.
    """
    snapshots = list(snapshots)
    if not snapshots:
        raise ValueError("nothing to aggregate")
    t = snapshots[0].time
    if any(s.time != t for s in snapshots):
        raise ValueError("snapshots span different times")

    new_admitted = sum(s.new_admitted for s in snapshots)
    handoff_admitted = sum(s.handoff_admitted for s in snapshots)
    new_rejected = sum(s.new_rejected for s in snapshots)
    handoff_rejected = sum(s.handoff_rejected for s in snapshots)
    handoff_attempts = sum(s.handoff_attempts for s in snapshots)
    capacity = sum(s.capacity for s in snapshots)
    # utilization recomputed from summed busy time: each cell's busy integral
    # is utilization * capacity * time, so the pooled value is the
    # capacity-weighted mean.
    busy_time = sum(s.utilization * s.capacity * s.time for s in snapshots)
    return Snapshot(
        time=t,
        cell=None,
        occupancy=sum(s.occupancy for s in snapshots),
        guard=sum(s.guard for s in snapshots) / len(snapshots),
        capacity=capacity,
        new_admitted=new_admitted,
        handoff_admitted=handoff_admitted,
        new_rejected=new_rejected,
        handoff_rejected=handoff_rejected,
        handoff_attempts=handoff_attempts,
        new_blocking=_ratio(new_rejected, new_admitted + new_rejected),
        handoff_blocking=_ratio(handoff_rejected, handoff_attempts),
        utilization=_ratio(busy_time, capacity * t) if t > 0 else 0.0,
    )


@dataclass
class IntervalTotals:
    """Counter deltas over a reporting interval (for post-warm-up estimates)."""

    new_admitted: int = 0
    new_rejected: int = 0
    handoff_admitted: int = 0
    handoff_rejected: int = 0
    handoff_attempts: int = 0
    busy_time: float = 0.0
    channel_time: float = 0.0  # capacity * interval length, channel-seconds

    @property
    def new_blocking(self):
        return _ratio(self.new_rejected, self.new_admitted + self.new_rejected)

    @property
    def handoff_blocking(self):
        return _ratio(self.handoff_rejected, self.handoff_attempts)

    @property
    def utilization(self):
        return _ratio(self.busy_time, self.channel_time)

    def add(self, other: "IntervalTotals") -> None:
        self.new_admitted += other.new_admitted
        self.new_rejected += other.new_rejected
        self.handoff_admitted += other.handoff_admitted
        self.handoff_rejected += other.handoff_rejected
        self.handoff_attempts += other.handoff_attempts
        self.busy_time += other.busy_time
        self.channel_time += other.channel_time


def interval_totals(end: CellCounters, start: CellCounters, capacity: int,
                    elapsed: float) -> IntervalTotals:
    """Counter deltas between two states of the same cell's counters."""
    return IntervalTotals(
        new_admitted=end.new_admitted - start.new_admitted,
        new_rejected=end.new_rejected - start.new_rejected,
        handoff_admitted=end.handoff_admitted - start.handoff_admitted,
        handoff_rejected=end.handoff_rejected - start.handoff_rejected,
        handoff_attempts=end.handoff_attempts - start.handoff_attempts,
        busy_time=end.busy_time - start.busy_time,
        channel_time=capacity * elapsed,
    )
