"""Deterministic discrete-event simulation of a multi-cell network.

Poisson new-call arrivals, exponential call durations, and exponential
cell-residence times that push active calls to uniformly chosen neighbor
cells, where the target's admission policy decides their fate.  Every
random draw comes from a dedicated per-cell, per-purpose stream derived
from the run seed, so a given (config, seed) pair always produces the
same event sequence, and compared policies can share their traffic.
"""

import hashlib
import heapq
from dataclasses import dataclass
from typing import NamedTuple, Optional
from random import Random

from .metrics import (CellCounters, IntervalTotals, Snapshot, Tally, aggregate,
                      interval_totals)
from .policy import Decision, PolicyParams, PolicyState

# event codes, ordered only for readability; ties break on insertion sequence
NEW_ARRIVAL = 0
COMPLETION = 1
RESIDENCE_EXPIRY = 2
MEASURE_TICK = 3
HANDOFF_ARRIVAL = 4  # exogenous handoff traffic, used when mobility is off

_EVENT_NAMES = {
    NEW_ARRIVAL: "new_arrival",
    COMPLETION: "completion",
    RESIDENCE_EXPIRY: "residence_expiry",
    MEASURE_TICK: "measure_tick",
    HANDOFF_ARRIVAL: "handoff_arrival",
}

# random-stream purposes, one independent generator per cell and purpose
_ARRIVALS, _DURATIONS, _RESIDENCE, _NEIGHBOR, _HANDOFF_IN = range(5)


class SimulationError(RuntimeError):
    """Internal consistency violation; the run cannot be trusted."""


class ConfigError(ValueError):
    """A configuration field failed validation."""


@dataclass(frozen=True)
class TrafficConfig:
    """Traffic and mobility rates, all per cell.

    new_rate         new-call arrivals per second (Poisson)
    service_rate     call completions per second per call; mean duration is
                     its reciprocal
    residence_rate   cell departures per second per call; zero disables
                     mobility entirely
    handoff_in_rate  exogenous Poisson handoff arrivals per second, for
                     validation runs that replace mobility with a direct
                     handoff stream
    residence_step_time / residence_step_factor
                     optional one-off change of the residence rate: dwell
                     times drawn at or after the step time use
                     residence_rate * factor
    """

    new_rate: float
    service_rate: float
    residence_rate: float = 0.0
    handoff_in_rate: float = 0.0
    residence_step_time: Optional[float] = None
    residence_step_factor: float = 1.0

    def __post_init__(self):
        if not self.new_rate >= 0:
            raise ConfigError(f"new_rate must be >= 0, got {self.new_rate}")
        if not self.service_rate > 0:
            raise ConfigError(f"service_rate must be > 0, got {self.service_rate}")
        if not self.residence_rate >= 0:
            raise ConfigError(
                f"residence_rate must be >= 0, got {self.residence_rate}")
        if not self.handoff_in_rate >= 0:
            raise ConfigError(
                f"handoff_in_rate must be >= 0, got {self.handoff_in_rate}")
        if self.residence_step_time is not None and not self.residence_step_time > 0:
            raise ConfigError("residence_step_time must be > 0 when set")
        if not self.residence_step_factor > 0:
            raise ConfigError("residence_step_factor must be > 0")


@dataclass(frozen=True)
class Topology:
    """Cell adjacency.  Neighbor lists may only be empty while mobility is off."""

    num_cells: int
    neighbors: tuple

    def __post_init__(self):
        if self.num_cells < 1:
            raise ConfigError(f"num_cells must be >= 1, got {self.num_cells}")
        if len(self.neighbors) != self.num_cells:
            raise ConfigError(
                f"neighbors lists {len(self.neighbors)} cells, "
                f"topology has {self.num_cells}")
        object.__setattr__(
            self, "neighbors", tuple(tuple(n) for n in self.neighbors))
        for cell, nbrs in enumerate(self.neighbors):
            for n in nbrs:
                if not 0 <= n < self.num_cells:
                    raise ConfigError(f"neighbors[{cell}]: {n} is not a cell index")
                if n == cell:
                    raise ConfigError(f"neighbors[{cell}]: self-loop")
            if len(set(nbrs)) != len(nbrs):
                raise ConfigError(f"neighbors[{cell}]: duplicate entries")

    @classmethod
    def ring(cls, num_cells: int) -> "Topology":
        """Cells on a closed ring, each adjacent to its two neighbors."""
        if num_cells == 1:
            nbrs = [()]
        elif num_cells == 2:
            nbrs = [(1,), (0,)]
        else:
            nbrs = [((i - 1) % num_cells, (i + 1) % num_cells)
                    for i in range(num_cells)]
        return cls(num_cells=num_cells, neighbors=tuple(nbrs))


@dataclass(frozen=True)
class SimConfig:
    topology: Topology
    traffic: TrafficConfig
    policy: PolicyParams
    duration: float
    seed: int
    warmup_fraction: float = 0.1
    snapshot_period: Optional[float] = None  # defaults to the policy window

    def __post_init__(self):
        if not self.duration > 0:
            raise ConfigError(f"duration must be > 0, got {self.duration}")
        if not 0 <= self.warmup_fraction < 1:
            raise ConfigError(
                f"warmup_fraction must be in [0, 1), got {self.warmup_fraction}")
        if self.snapshot_period is not None and not self.snapshot_period > 0:
            raise ConfigError("snapshot_period must be > 0 when set")
        if self.traffic.residence_rate > 0:
            for cell, nbrs in enumerate(self.topology.neighbors):
                if not nbrs:
                    raise ConfigError(
                        f"neighbors[{cell}] is empty but mobility is on "
                        "(residence_rate > 0)")


@dataclass(slots=True)
class Call:
    """One admitted call.  `handoff` says how it entered its current cell."""

    id: int
    cell: int
    handoff: bool
    completion_time: float
    alive: bool
    pending: int  # queued events still referencing this call


class EventRecord(NamedTuple):
    """What one processed event did, for traces and debugging."""

    time: float
    kind: str
    cell: Optional[int]
    call: Optional[int]
    decision: Optional[str]
    guard: Optional[int]


@dataclass
class RunResult:
    """Everything a finished run reports."""

    rows: list                 # Snapshot time series, per cell plus aggregate
    final_cells: list          # per-cell Snapshot at the end of the run
    final_aggregate: Snapshot
    post_warmup_cells: list    # per-cell IntervalTotals after warm-up
    post_warmup: IntervalTotals  # pooled across cells
    final_guards: list


def _stream_seed(seed: int, cell: int, purpose: int) -> int:
    digest = hashlib.sha256(f"guardsim:{seed}:{cell}:{purpose}".encode()).digest()
    return int.from_bytes(digest[:16], "big")


class Engine:
    """Event loop owning all per-cell state for one replication."""

    def __init__(self, config: SimConfig, trace: bool = False):
        self.config = config
        n = config.topology.num_cells
        cap = config.policy.capacity
        self.clock = 0.0
        self.busy = [0] * n
        self.policies = [PolicyState(config.policy) for _ in range(n)]
        self.counters = [CellCounters() for _ in range(n)]
        self.calls: dict[int, Call] = {}
        self.next_call_id = 0
        self.queue: list = []  # heap of (time, seq, code, arg)
        self.seq = 0
        self.trace: Optional[list] = [] if trace else None
        self.capacity = cap
        self._rng = [[Random(_stream_seed(config.seed, cell, p))
                      for p in range(5)] for cell in range(n)]

        traffic = config.traffic
        window = config.policy.window
        for cell in range(n):
            if traffic.new_rate > 0:
                self._push(self._rng[cell][_ARRIVALS].expovariate(traffic.new_rate),
                           NEW_ARRIVAL, cell)
            if traffic.handoff_in_rate > 0:
                self._push(
                    self._rng[cell][_HANDOFF_IN].expovariate(traffic.handoff_in_rate),
                    HANDOFF_ARRIVAL, cell)
            self._push(window, MEASURE_TICK, cell)

    # -- scheduling ------------------------------------------------------

    def _push(self, time: float, code: int, arg: int) -> None:
        heapq.heappush(self.queue, (time, self.seq, code, arg))
        self.seq += 1

    def _residence_rate_at(self, time: float) -> float:
        traffic = self.config.traffic
        rate = traffic.residence_rate
        if traffic.residence_step_time is not None and time >= traffic.residence_step_time:
            rate *= traffic.residence_step_factor
        return rate

    def _admit_call(self, cell: int, time: float, handoff: bool) -> Call:
        """Create a call in `cell`, scheduling its completion and next move."""
        duration = self._rng[cell][_DURATIONS].expovariate(
            self.config.traffic.service_rate)
        call = Call(self.next_call_id, cell, handoff, time + duration, True, 1)
        self.next_call_id += 1
        self.calls[call.id] = call
        self._push(call.completion_time, COMPLETION, call.id)
        self._schedule_move(call, time)
        return call

    def _schedule_move(self, call: Call, time: float) -> None:
        rate = self._residence_rate_at(time)
        if rate > 0:
            dwell = self._rng[call.cell][_RESIDENCE].expovariate(rate)
            self._push(time + dwell, RESIDENCE_EXPIRY, call.id)
            call.pending += 1

    def _drop_reference(self, call: Call) -> None:
        call.pending -= 1
        if call.pending == 0 and not call.alive:
            del self.calls[call.id]

    # -- event processing ------------------------------------------------

    def step(self) -> Optional[EventRecord]:
        """Process the next event at or before the configured end time."""
        if not self.queue or self.queue[0][0] > self.config.duration:
            return None
        time, _, code, arg = heapq.heappop(self.queue)
        self.clock = time
        record = self._process(time, code, arg)
        if self.trace is not None:
            self.trace.append(record)
        return record

    def _process(self, time: float, code: int, arg: int) -> EventRecord:
        traffic = self.config.traffic

        if code == NEW_ARRIVAL:
            cell = arg
            self._push(time + self._rng[cell][_ARRIVALS].expovariate(traffic.new_rate),
                       NEW_ARRIVAL, cell)
            policy = self.policies[cell]
            occupancy = self.busy[cell]
            decision = policy.admit_new(occupancy)
            if decision is Decision.ADMIT:
                call = self._admit_call(cell, time, handoff=False)
                self.counters[cell].record(Tally.NEW_ADMIT, occupancy, time)
                self.busy[cell] = occupancy + 1
                call_id = call.id
            else:
                self.counters[cell].record(Tally.NEW_REJECT, occupancy, time)
                call_id = None
            return EventRecord(time, "new_arrival", cell, call_id,
                               decision.value, policy.guard)

        if code == COMPLETION:
            call = self.calls.get(arg)
            if call is None:
                raise SimulationError(f"completion for unknown call {arg}")
            self._drop_reference(call)
            if not call.alive:
                return EventRecord(time, "completion", None, arg, None, None)
            cell = call.cell
            occupancy = self.busy[cell]
            self.counters[cell].record(
                Tally.DEPART_HANDOFF if call.handoff else Tally.DEPART_NEW,
                occupancy, time)
            self.busy[cell] = occupancy - 1
            call.alive = False
            if call.pending == 0:
                del self.calls[call.id]
            return EventRecord(time, "completion", cell, arg, None, None)

        if code == RESIDENCE_EXPIRY:
            call = self.calls.get(arg)
            if call is None:
                raise SimulationError(f"residence expiry for unknown call {arg}")
            self._drop_reference(call)
            if not call.alive:
                return EventRecord(time, "residence_expiry", None, arg, None, None)
            source = call.cell
            nbrs = self.config.topology.neighbors[source]
            target = nbrs[self._rng[source][_NEIGHBOR].randrange(len(nbrs))]
            policy = self.policies[target]
            target_occ = self.busy[target]
            decision = policy.admit_handoff(target_occ)
            policy.on_handoff_event(decision)

            source_occ = self.busy[source]
            self.counters[source].record(
                Tally.DEPART_HANDOFF if call.handoff else Tally.DEPART_NEW,
                source_occ, time)
            self.busy[source] = source_occ - 1
            if decision is Decision.ADMIT:
                self.counters[target].record(Tally.HANDOFF_ADMIT, target_occ, time)
                self.busy[target] = target_occ + 1
                call.cell = target
                call.handoff = True
                self._schedule_move(call, time)
            else:
                # dropped mid-conversation; its completion event goes stale
                self.counters[target].record(Tally.HANDOFF_REJECT, target_occ, time)
                call.alive = False
            return EventRecord(time, "residence_expiry", target, arg,
                               decision.value, policy.guard)

        if code == MEASURE_TICK:
            cell = arg
            policy = self.policies[cell]
            policy.on_measure_tick()
            self._push(time + self.config.policy.window, MEASURE_TICK, cell)
            return EventRecord(time, "measure_tick", cell, None, None, policy.guard)

        if code == HANDOFF_ARRIVAL:
            cell = arg
            self._push(
                time + self._rng[cell][_HANDOFF_IN].expovariate(traffic.handoff_in_rate),
                HANDOFF_ARRIVAL, cell)
            policy = self.policies[cell]
            occupancy = self.busy[cell]
            decision = policy.admit_handoff(occupancy)
            policy.on_handoff_event(decision)
            if decision is Decision.ADMIT:
                call = self._admit_call(cell, time, handoff=True)
                self.counters[cell].record(Tally.HANDOFF_ADMIT, occupancy, time)
                self.busy[cell] = occupancy + 1
                call_id = call.id
            else:
                self.counters[cell].record(Tally.HANDOFF_REJECT, occupancy, time)
                call_id = None
            return EventRecord(time, "handoff_arrival", cell, call_id,
                               decision.value, policy.guard)

        raise SimulationError(f"unknown event code {code}")

    # -- snapshots and the full run --------------------------------------

    def _snapshot_all(self, time: float) -> list:
        cells = [self.counters[i].snapshot(time, i, self.policies[i].guard,
                                           self.busy[i], self.capacity)
                 for i in range(self.config.topology.num_cells)]
        cells.append(aggregate(cells))
        return cells

    def _snapshot_times(self):
        period = self.config.snapshot_period or self.config.policy.window
        duration = self.config.duration
        times = []
        k = 1
        eps = 1e-9 * max(1.0, duration)
        while True:
            t = k * period
            if t > duration + eps:
                break
            times.append(min(t, duration))
            k += 1
        if not times or abs(times[-1] - duration) > eps:
            times.append(duration)
        return times

    def run(self) -> RunResult:
        """Step to the configured end, collecting rows and summary estimates."""
        duration = self.config.duration
        warm_time = self.config.warmup_fraction * duration
        # boundaries in time order; warm-up capture sorts before a snapshot
        # at the same instant but neither disturbs the other
        boundaries = [(t, "snap") for t in self._snapshot_times() if t > self.clock]
        if warm_time > self.clock:
            boundaries.append((warm_time, "warm"))
        boundaries.sort(key=lambda b: (b[0], 0 if b[1] == "warm" else 1))

        warm_counters = None
        warm_at = None
        if warm_time <= self.clock:
            warm_counters = self._copy_counters(self.clock)
            warm_at = self.clock
        rows = []
        finals = None

        bi = 0
        nb = len(boundaries)
        while self.queue and self.queue[0][0] <= duration:
            t_next = self.queue[0][0]
            while bi < nb and boundaries[bi][0] < t_next:
                b_time, b_kind = boundaries[bi]
                if b_kind == "warm":
                    warm_counters = self._copy_counters(b_time)
                    warm_at = b_time
                else:
                    finals = self._snapshot_all(b_time)
                    rows.extend(finals)
                bi += 1
            self.step()
        while bi < nb:
            b_time, b_kind = boundaries[bi]
            if b_kind == "warm":
                warm_counters = self._copy_counters(b_time)
                warm_at = b_time
            else:
                finals = self._snapshot_all(b_time)
                rows.extend(finals)
            bi += 1

        if finals is None:  # engine was already stepped past every boundary
            finals = self._snapshot_all(max(self.clock, duration))
            rows.extend(finals)
        final_cells = finals[:-1]
        final_aggregate = finals[-1]
        per_cell = [interval_totals(end, start, self.capacity, duration - warm_at)
                    for end, start in zip(self.counters, warm_counters)]
        pooled = IntervalTotals()
        for tot in per_cell:
            pooled.add(tot)
        return RunResult(
            rows=rows,
            final_cells=final_cells,
            final_aggregate=final_aggregate,
            post_warmup_cells=per_cell,
            post_warmup=pooled,
            final_guards=[p.guard for p in self.policies],
        )

    def _copy_counters(self, time: float) -> list:
        """Freeze counter values at `time`, advancing busy-time integrals first."""
        copies = []
        for i, c in enumerate(self.counters):
            c.busy_time += self.busy[i] * (time - c.last_update)
            c.last_update = time
            copies.append(CellCounters(**vars(c)))
        return copies
