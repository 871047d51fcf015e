"""Per-cell admission control: fixed, static guard channel, and adaptive guard channel.

Each base station runs one PolicyState.  Admission checks are pure reads;
the adaptive variant additionally adjusts its guard-channel count from the
handoff rejection ratio observed in a tumbling measurement window.
"""

from dataclasses import dataclass
from enum import Enum


class PolicyKind(Enum):
    FIXED = "fca"          # every channel shared, first come first served
    STATIC = "static"      # fixed number of channels reserved for handoffs
    ADAPTIVE = "acas"      # reserved count tracks recent handoff rejections


class Decision(Enum):
    ADMIT = "admit"
    REJECT = "reject"


@dataclass(frozen=True)
class PolicyParams:
    """Admission policy configuration for one cell.

    capacity         total channels at the base station
    initial_guard    channels initially reserved for handoffs
    threshold        target ceiling on the handoff rejection ratio
    increase_factor  guard count grows once the window ratio reaches
                     increase_factor * threshold (0 < increase_factor <= 1)
    decrease_factor  window ratio at or below decrease_factor * threshold
                     counts toward releasing a guard channel
    decrease_after   consecutive qualifying handoff events needed to release one
    min_guard        lower clamp on the adaptive guard count
    max_guard        upper clamp (at most capacity - 1, so new calls always
                     have at least one admissible channel)
    window           measurement window length, seconds
    """

    kind: PolicyKind
    capacity: int
    initial_guard: int = 0
    threshold: float = 0.2
    increase_factor: float = 0.9
    decrease_factor: float = 0.6
    decrease_after: int = 10
    min_guard: int | None = None
    max_guard: int | None = None
    window: float = 10.0

    def __post_init__(self):
        # Omitted clamps widen to [0, capacity-1] for the adaptive policy and
        # collapse onto initial_guard for the non-adapting ones.
        adaptive = self.kind is PolicyKind.ADAPTIVE
        if self.min_guard is None:
            object.__setattr__(self, "min_guard", 0 if adaptive else self.initial_guard)
        if self.max_guard is None:
            object.__setattr__(
                self, "max_guard",
                self.capacity - 1 if adaptive else self.initial_guard)
        max_guard = self.max_guard
        if self.capacity < 1:
            raise ValueError(f"capacity must be >= 1, got {self.capacity}")
        if not 0.0 < self.threshold <= 1.0:
            raise ValueError(f"threshold must be in (0, 1], got {self.threshold}")
        if not 0.0 < self.increase_factor <= 1.0:
            raise ValueError(
                f"increase_factor must be in (0, 1], got {self.increase_factor}")
        if not 0.0 < self.decrease_factor <= self.increase_factor:
            raise ValueError(
                "decrease_factor must be in (0, increase_factor], got "
                f"{self.decrease_factor}")
        if self.decrease_after < 1:
            raise ValueError(f"decrease_after must be >= 1, got {self.decrease_after}")
        if self.window <= 0:
            raise ValueError(f"window must be > 0, got {self.window}")
        if not 0 <= self.min_guard <= self.initial_guard:
            raise ValueError(
                f"need 0 <= min_guard <= initial_guard, got {self.min_guard} "
                f"and {self.initial_guard}")
        if not self.initial_guard <= max_guard <= self.capacity - 1:
            raise ValueError(
                f"need initial_guard <= max_guard <= capacity-1, got "
                f"{self.initial_guard}, {max_guard}, {self.capacity - 1}")
        if self.kind is PolicyKind.FIXED and self.initial_guard != 0:
            raise ValueError("fixed assignment reserves no guard channels")
        if self.kind is not PolicyKind.ADAPTIVE and not (
                self.min_guard == self.initial_guard == max_guard):
            raise ValueError(
                f"{self.kind.value} policy cannot adapt: min_guard and max_guard "
                "must equal initial_guard")


@dataclass(frozen=True)
class AdaptationReport:
    old_guard: int
    new_guard: int
    reason: str | None  # "increase", "decrease", or None


class PolicyState:
    """Admission decisions plus guard-count adaptation for one base station.

    Pure state machine: nothing here knows about simulated time except that
    on_measure_tick() is called once per measurement window.
    """

    def __init__(self, params: PolicyParams):
        self.params = params
        self.guard = params.initial_guard
        self.window_rejected = 0   # handoff rejections in the current window
        self.window_handoffs = 0   # handoff attempts in the current window
        self.consecutive_quiet = 0  # events in a row below the release ratio

    def admit_new(self, occupancy: int) -> Decision:
        """A new call only gets one of the open-access channels."""
        if not 0 <= occupancy <= self.params.capacity:
            raise ValueError(f"occupancy {occupancy} outside [0, {self.params.capacity}]")
        if occupancy < self.params.capacity - self.guard:
            return Decision.ADMIT
        return Decision.REJECT

    def admit_handoff(self, occupancy: int) -> Decision:
        """A handoff may take any free channel, guard or not."""
        if not 0 <= occupancy <= self.params.capacity:
            raise ValueError(f"occupancy {occupancy} outside [0, {self.params.capacity}]")
        if occupancy < self.params.capacity:
            return Decision.ADMIT
        return Decision.REJECT

    def on_handoff_event(self, outcome: Decision) -> AdaptationReport:
        """Update window counters and, for the adaptive policy, the guard count.

        Called exactly once per handoff admission attempt, after the decision.
        A rejection pushing the window ratio to increase_factor * threshold or
        beyond claims one more guard channel immediately; decrease_after
        consecutive events at or below decrease_factor * threshold release one.
        At most one of the two rules fires per event.
        """
        p = self.params
        self.window_handoffs += 1
        if outcome is Decision.REJECT:
            self.window_rejected += 1

        old = self.guard
        if p.kind is not PolicyKind.ADAPTIVE:
            return AdaptationReport(old, old, None)

        reason = None
        if self.window_handoffs > 0:
            ratio = self.window_rejected / self.window_handoffs
            if outcome is Decision.REJECT and ratio >= p.increase_factor * p.threshold:
                self.guard = min(self.guard + 1, p.max_guard)
                self.consecutive_quiet = 0
                reason = "increase"
            elif ratio <= p.decrease_factor * p.threshold:
                self.consecutive_quiet += 1
                if self.consecutive_quiet >= p.decrease_after:
                    self.guard = max(self.guard - 1, p.min_guard)
                    self.consecutive_quiet = 0
                    reason = "decrease"
            else:
                self.consecutive_quiet = 0
        return AdaptationReport(old, self.guard, reason)

    def on_measure_tick(self) -> None:
        """Start a fresh measurement window; the quiet-event run survives."""
        self.window_rejected = 0
        self.window_handoffs = 0
