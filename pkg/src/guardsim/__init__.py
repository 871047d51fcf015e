"""Discrete-event simulator of channel allocation in a cellular network.

Three admission policies (shared channels, static guard channels, adaptive
guard channels) run over identical random streams; closed-form occupancy
oracles back the validation suite.  `python -m guardsim --help` for the CLI.
"""

from .engine import (ConfigError, Engine, RunResult, SimConfig,
                     SimulationError, Topology, TrafficConfig)
from .metrics import IntervalTotals, Snapshot
from .oracle import OracleResult, erlang_b, guard_channel_stationary
from .policy import (AdaptationReport, Decision, PolicyKind, PolicyParams,
                     PolicyState)

__version__ = "0.1.0"

__all__ = [
    "AdaptationReport",
    "ConfigError",
    "Decision",
    "Engine",
    "IntervalTotals",
    "OracleResult",
    "PolicyKind",
    "PolicyParams",
    "PolicyState",
    "RunResult",
    "SimConfig",
    "SimulationError",
    "Snapshot",
    "Topology",
    "TrafficConfig",
    "erlang_b",
    "guard_channel_stationary",
    "__version__",
]
