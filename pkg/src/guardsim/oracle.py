"""Closed-form blocking probabilities for loss systems with and without guard channels.

These are the exact stationary results the simulator is validated against:
the Erlang-B formula for a plain C-server loss system, and the stationary
distribution of the occupancy birth-death chain for a cell that reserves
guard channels for handoff traffic.
"""

from dataclasses import dataclass


@dataclass(frozen=True)
class OracleResult:
    """Stationary occupancy distribution and the blocking probabilities it implies.

    state_probs[n] is the long-run fraction of time the cell holds n calls,
    for n = 0..C.  new_blocking is the probability an arriving new call is
    refused (all open-access channels busy), handoff_blocking the probability
    an arriving handoff is refused (every channel busy).
    """

    state_probs: tuple
    new_blocking: float
    handoff_blocking: float


def erlang_b(servers: int, load: float) -> float:
    """Blocking probability of an M/M/c/c loss system.

    Uses the stable recurrence B(0) = 1, B(k) = a*B(k-1) / (k + a*B(k-1)),
    which avoids the factorials of the direct formula.

    Parameters
    ----------
    servers : number of channels (c >= 0)
    load : offered load in erlangs (arrival rate / service rate, >= 0)
    """
    if servers < 0:
        raise ValueError(f"servers must be >= 0, got {servers}")
    if load < 0:
        raise ValueError(f"load must be >= 0, got {load}")
    b = 1.0
    for k in range(1, servers + 1):
        b = load * b / (k + load * b)
    return b


def guard_channel_stationary(capacity: int, guard: int, new_rate: float,
                             handoff_rate: float, service_rate: float) -> OracleResult:
    """Solve the occupancy birth-death chain of a single guard-channel cell.

    With n calls in progress, arrivals occur at rate new_rate + handoff_rate
    while n is below the open-access limit Co = capacity - guard, and at
    handoff_rate alone once only guard channels remain; departures occur at
    n * service_rate.  The stationary distribution gives the exact blocking
    probabilities: handoffs are blocked only in state C, new calls in every
    state at or above Co.
    """
    if capacity < 1:
        raise ValueError(f"capacity must be >= 1, got {capacity}")
    if not 0 <= guard <= capacity - 1:
        raise ValueError(f"guard must be in [0, capacity-1], got {guard}")
    if new_rate < 0 or handoff_rate < 0:
        raise ValueError("arrival rates must be >= 0")
    if service_rate <= 0:
        raise ValueError(f"service_rate must be > 0, got {service_rate}")
    if new_rate == 0 and handoff_rate == 0:
        raise ValueError("at least one arrival rate must be positive")

    open_access = capacity - guard
    # Unnormalized pi(n) via the product of birth/death rate ratios, with
    # running rescaling so large capacities cannot overflow.
    weights = [1.0]
    w = 1.0
    scale = 1.0
    for n in range(1, capacity + 1):
        birth = new_rate + handoff_rate if n - 1 < open_access else handoff_rate
        w = w * birth / (n * service_rate)
        if w > 1e100:
            weights = [x / w for x in weights]
            scale /= w
            w = 1.0
        weights.append(w)
    total = sum(weights)
    probs = tuple(w / total for w in weights)

    handoff_blocking = probs[capacity]
    new_blocking = sum(probs[open_access:])
    return OracleResult(state_probs=probs, new_blocking=new_blocking,
                        handoff_blocking=handoff_blocking)
