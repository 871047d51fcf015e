"""Command-line entry point: scenario files in, CSV out.

Subcommands:
  run      simulate one scenario, write time-series and summary CSVs
  compare  run the same traffic under fca, static, and acas policies
  oracle   print closed-form blocking probabilities

Scenario files are strict JSON: every field is checked and unknown keys
are rejected, so a typo fails loudly instead of silently using a default.
"""

import argparse
import json
import os
import statistics
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

from .engine import Engine, RunResult, SimConfig, Topology, TrafficConfig
from .metrics import IntervalTotals, Snapshot
from .oracle import erlang_b, guard_channel_stationary
from .policy import PolicyKind, PolicyParams

TIMESERIES_HEADER = "time,cell,policy,Oc,GCh,Nc,Hc,Rn,Rh,H,Pb,Ph,utilization"
SUMMARY_HEADER = "policy,rep,Pb,Ph,utilization,final_GCh"

_POLICY_KINDS = {"fca": PolicyKind.FIXED, "static": PolicyKind.STATIC,
                 "acas": PolicyKind.ADAPTIVE}


class ScenarioError(ValueError):
    """A scenario file failed validation; the message names the JSON path."""


# -- scenario loading --------------------------------------------------------

_REQUIRED = object()


def _field(block: dict, path: str, key: str, kind, default=_REQUIRED):
    """Pop one typed value out of a JSON block, or fail naming the path."""
    if key not in block:
        if default is _REQUIRED:
            raise ScenarioError(f"{path}.{key}: required field is missing")
        return default
    value = block.pop(key)
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ScenarioError(f"{path}.{key}: expected a number, got {value!r}")
        return float(value)
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ScenarioError(f"{path}.{key}: expected an integer, got {value!r}")
        return value
    if kind is str:
        if not isinstance(value, str):
            raise ScenarioError(f"{path}.{key}: expected a string, got {value!r}")
        return value
    raise AssertionError(kind)


def _no_leftovers(block: dict, path: str):
    if block:
        key = sorted(block)[0]
        raise ScenarioError(f"{path}.{key}: unknown key")


def _section(data: dict, name: str) -> dict:
    if name not in data:
        raise ScenarioError(f"{name}: required section is missing")
    value = data.pop(name)
    if not isinstance(value, dict):
        raise ScenarioError(f"{name}: expected an object")
    return dict(value)


@dataclass(frozen=True)
class RunSettings:
    duration: float
    seed: int
    replications: int
    warmup_fraction: float
    snapshot_period: Optional[float]


@dataclass(frozen=True)
class Scenario:
    topology: Topology
    traffic: TrafficConfig
    policy: PolicyParams
    run: RunSettings

    def sim_config(self, rep: int = 0, base_seed: Optional[int] = None) -> SimConfig:
        seed = self.run.seed if base_seed is None else base_seed
        return SimConfig(
            topology=self.topology,
            traffic=self.traffic,
            policy=self.policy,
            duration=self.run.duration,
            seed=seed + rep,
            warmup_fraction=self.run.warmup_fraction,
            snapshot_period=self.run.snapshot_period,
        )


def _parse_topology(block: dict) -> Topology:
    num_cells = _field(block, "topology", "num_cells", int)
    if num_cells < 1:
        raise ScenarioError(f"topology.num_cells: must be >= 1, got {num_cells}")
    neighbors = block.pop("neighbors", None)
    _no_leftovers(block, "topology")
    if neighbors is None:
        return Topology.ring(num_cells)
    if (not isinstance(neighbors, list)
            or any(not isinstance(n, list) for n in neighbors)
            or any(not isinstance(c, int) or isinstance(c, bool)
                   for n in neighbors for c in n)):
        raise ScenarioError("topology.neighbors: expected a list of integer lists")
    try:
        return Topology(num_cells=num_cells,
                        neighbors=tuple(tuple(n) for n in neighbors))
    except ValueError as exc:
        raise ScenarioError(f"topology.{exc}") from exc


def _parse_traffic(block: dict) -> TrafficConfig:
    lambda_new = _field(block, "traffic", "lambda_new", float)
    mu = _field(block, "traffic", "mu", float)
    eta = _field(block, "traffic", "eta", float, default=0.0)
    lambda_handoff = _field(block, "traffic", "lambda_handoff", float, default=0.0)
    step_time = _field(block, "traffic", "eta_step_time", float, default=None)
    step_factor = _field(block, "traffic", "eta_step_factor", float, default=1.0)
    _no_leftovers(block, "traffic")
    if lambda_new < 0:
        raise ScenarioError(f"traffic.lambda_new: must be >= 0, got {lambda_new}")
    if mu <= 0:
        raise ScenarioError(f"traffic.mu: must be > 0, got {mu}")
    if eta < 0:
        raise ScenarioError(f"traffic.eta: must be >= 0, got {eta}")
    if lambda_handoff < 0:
        raise ScenarioError(
            f"traffic.lambda_handoff: must be >= 0, got {lambda_handoff}")
    if step_time is not None and step_time <= 0:
        raise ScenarioError(f"traffic.eta_step_time: must be > 0, got {step_time}")
    if step_factor <= 0:
        raise ScenarioError(
            f"traffic.eta_step_factor: must be > 0, got {step_factor}")
    return TrafficConfig(
        new_rate=lambda_new, service_rate=mu, residence_rate=eta,
        handoff_in_rate=lambda_handoff, residence_step_time=step_time,
        residence_step_factor=step_factor)


def _parse_policy(block: dict) -> PolicyParams:
    kind_label = _field(block, "policy", "kind", str)
    if kind_label not in _POLICY_KINDS:
        raise ScenarioError(
            f"policy.kind: expected one of {sorted(_POLICY_KINDS)}, "
            f"got {kind_label!r}")
    kind = _POLICY_KINDS[kind_label]
    capacity = _field(block, "policy", "C", int)
    guard0 = _field(block, "policy", "GCh0", int, default=0)
    threshold = _field(block, "policy", "Th", float, default=0.2)
    a_up = _field(block, "policy", "A_u", float, default=0.9)
    a_down = _field(block, "policy", "A_d", float, default=0.6)
    patience = _field(block, "policy", "N", int, default=10)
    guard_min = _field(block, "policy", "Cmin", int, default=None)
    guard_max = _field(block, "policy", "Cmax", int, default=None)
    window = _field(block, "policy", "t", float, default=10.0)
    _no_leftovers(block, "policy")

    if capacity < 1:
        raise ScenarioError(f"policy.C: must be >= 1, got {capacity}")
    if not 0 <= guard0 <= capacity - 1:
        raise ScenarioError(
            f"policy.GCh0: must be in [0, C-1] = [0, {capacity - 1}], got {guard0}")
    if kind is PolicyKind.FIXED and guard0 != 0:
        raise ScenarioError(f"policy.GCh0: must be 0 for kind 'fca', got {guard0}")
    if not 0 < threshold <= 1:
        raise ScenarioError(f"policy.Th: must be in (0, 1], got {threshold}")
    if not 0 < a_up <= 1:
        raise ScenarioError(f"policy.A_u: must be in (0, 1], got {a_up}")
    if not 0 < a_down <= a_up:
        raise ScenarioError(
            f"policy.A_d: must be in (0, A_u] = (0, {a_up}], got {a_down}")
    if patience < 1:
        raise ScenarioError(f"policy.N: must be >= 1, got {patience}")
    if window <= 0:
        raise ScenarioError(f"policy.t: must be > 0, got {window}")
    if kind is PolicyKind.ADAPTIVE:
        if guard_min is not None and not 0 <= guard_min <= guard0:
            raise ScenarioError(
                f"policy.Cmin: must be in [0, GCh0] = [0, {guard0}], got {guard_min}")
        if guard_max is not None and not guard0 <= guard_max <= capacity - 1:
            raise ScenarioError(
                f"policy.Cmax: must be in [GCh0, C-1] = [{guard0}, {capacity - 1}], "
                f"got {guard_max}")
    else:
        if guard_min is not None and guard_min != guard0:
            raise ScenarioError(
                f"policy.Cmin: only kind 'acas' adapts; must equal GCh0, "
                f"got {guard_min}")
        if guard_max is not None and guard_max != guard0:
            raise ScenarioError(
                f"policy.Cmax: only kind 'acas' adapts; must equal GCh0, "
                f"got {guard_max}")
        guard_min = guard_max = None

    try:
        return PolicyParams(
            kind=kind, capacity=capacity, initial_guard=guard0,
            threshold=threshold, increase_factor=a_up, decrease_factor=a_down,
            decrease_after=patience, min_guard=guard_min, max_guard=guard_max,
            window=window)
    except ValueError as exc:
        raise ScenarioError(f"policy: {exc}") from exc


def _parse_run(block: dict) -> RunSettings:
    duration = _field(block, "run", "duration_s", float)
    seed = _field(block, "run", "seed", int, default=0)
    replications = _field(block, "run", "replications", int, default=1)
    warmup = _field(block, "run", "warmup_fraction", float, default=0.1)
    period = _field(block, "run", "snapshot_period_s", float, default=None)
    _no_leftovers(block, "run")
    if duration <= 0:
        raise ScenarioError(f"run.duration_s: must be > 0, got {duration}")
    if replications < 1:
        raise ScenarioError(f"run.replications: must be >= 1, got {replications}")
    if not 0 <= warmup < 1:
        raise ScenarioError(
            f"run.warmup_fraction: must be in [0, 1), got {warmup}")
    if period is not None and period <= 0:
        raise ScenarioError(f"run.snapshot_period_s: must be > 0, got {period}")
    return RunSettings(duration=duration, seed=seed, replications=replications,
                       warmup_fraction=warmup, snapshot_period=period)


def parse_scenario(data) -> Scenario:
    if not isinstance(data, dict):
        raise ScenarioError("top level: expected a JSON object")
    data = dict(data)
    topology = _parse_topology(_section(data, "topology"))
    traffic = _parse_traffic(_section(data, "traffic"))
    policy = _parse_policy(_section(data, "policy"))
    run = _parse_run(_section(data, "run"))
    if data:
        raise ScenarioError(f"{sorted(data)[0]}: unknown key")
    scenario = Scenario(topology=topology, traffic=traffic, policy=policy, run=run)
    try:
        scenario.sim_config()  # surfaces cross-section problems at load time
    except ValueError as exc:
        raise ScenarioError(str(exc)) from exc
    return scenario


def load_scenario(path) -> Scenario:
    try:
        with open(path, encoding="utf-8") as f:
            data = json.load(f)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: not valid JSON: {exc}") from exc
    return parse_scenario(data)


# -- replication running -----------------------------------------------------


def _run_config(config: SimConfig) -> RunResult:
    return Engine(config).run()


def _worker_cap() -> int:
    raw = os.environ.get("GUARDSIM_THREADS")
    if raw is None:
        return os.cpu_count() or 1
    try:
        return max(1, int(raw))
    except ValueError:
        print(f"warning: ignoring GUARDSIM_THREADS={raw!r} (not an integer)",
              file=sys.stderr)
        return 1


def run_replications(scenario: Scenario, base_seed: Optional[int] = None):
    """One RunResult per replication, always in replication order."""
    configs = [scenario.sim_config(rep, base_seed)
               for rep in range(scenario.run.replications)]
    workers = min(len(configs), _worker_cap())
    if workers <= 1:
        return [_run_config(c) for c in configs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_config, configs))


def compare_variants(base: PolicyParams):
    """The three policies sharing one scenario's capacity and guard setting."""
    adaptive = base.kind is PolicyKind.ADAPTIVE
    return [
        ("fca", PolicyParams(kind=PolicyKind.FIXED, capacity=base.capacity,
                             window=base.window)),
        ("static", PolicyParams(kind=PolicyKind.STATIC, capacity=base.capacity,
                                initial_guard=base.initial_guard,
                                window=base.window)),
        ("acas", PolicyParams(
            kind=PolicyKind.ADAPTIVE, capacity=base.capacity,
            initial_guard=base.initial_guard, threshold=base.threshold,
            increase_factor=base.increase_factor,
            decrease_factor=base.decrease_factor,
            decrease_after=base.decrease_after,
            min_guard=base.min_guard if adaptive else None,
            max_guard=base.max_guard if adaptive else None,
            window=base.window)),
    ]


# -- CSV emission ------------------------------------------------------------


def _fmt_count(value: float) -> str:
    # guard column: integer per cell, possibly fractional in aggregate rows
    if value == int(value):
        return str(int(value))
    return f"{value:.6f}"


def _timeseries_line(policy: str, row: Snapshot) -> str:
    cell = "all" if row.cell is None else str(row.cell)
    return ",".join([
        str(row.time), cell, policy, str(row.occupancy), _fmt_count(row.guard),
        str(row.new_admitted), str(row.handoff_admitted),
        str(row.new_rejected), str(row.handoff_rejected),
        str(row.handoff_attempts), f"{row.new_blocking:.6f}",
        f"{row.handoff_blocking:.6f}", f"{row.utilization:.6f}",
    ])


def write_timeseries(path, labeled_results) -> None:
    """`labeled_results` pairs a policy label with one replication's result."""
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(TIMESERIES_HEADER + "\n")
        for label, result in labeled_results:
            for row in result.rows:
                f.write(_timeseries_line(label, row) + "\n")


def _rep_stats(result: RunResult):
    totals = result.post_warmup
    mean_guard = sum(result.final_guards) / len(result.final_guards)
    return (round(totals.new_blocking, 6), round(totals.handoff_blocking, 6),
            round(totals.utilization, 6), round(mean_guard, 6))


def write_summary(path, labeled_runs) -> None:
    """`labeled_runs` pairs a policy label with all its replication results.

    Mean and stddev rows are computed from the per-replication values as
    printed (6 fractional digits), so re-parsing the file reproduces them
    exactly; the pooled row sums counters across replications instead of
    averaging the per-replication ratios.
    """
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(SUMMARY_HEADER + "\n")
        for label, results in labeled_runs:
            per_rep = [_rep_stats(r) for r in results]
            for rep, stats in enumerate(per_rep):
                pb, ph, util, guard = stats
                f.write(f"{label},{rep},{pb:.6f},{ph:.6f},{util:.6f},"
                        f"{_fmt_count(guard)}\n")
            columns = list(zip(*per_rep))
            means = [statistics.fmean(col) for col in columns]
            devs = [statistics.stdev(col) if len(results) > 1 else 0.0
                    for col in columns]
            pooled = IntervalTotals()
            for r in results:
                pooled.add(r.post_warmup)
            pooled_guard = statistics.fmean(s[3] for s in per_rep)
            f.write(f"{label},mean,{means[0]:.6f},{means[1]:.6f},"
                    f"{means[2]:.6f},{_fmt_count(round(means[3], 6))}\n")
            f.write(f"{label},stddev,{devs[0]:.6f},{devs[1]:.6f},"
                    f"{devs[2]:.6f},{_fmt_count(round(devs[3], 6))}\n")
            f.write(f"{label},pooled,{pooled.new_blocking:.6f},"
                    f"{pooled.handoff_blocking:.6f},{pooled.utilization:.6f},"
                    f"{_fmt_count(round(pooled_guard, 6))}\n")


def _report(label: str, results) -> str:
    pooled = IntervalTotals()
    for r in results:
        pooled.add(r.post_warmup)
    return (f"{label}: Pb={pooled.new_blocking:.6f} "
            f"Ph={pooled.handoff_blocking:.6f} "
            f"utilization={pooled.utilization:.6f} ({len(results)} reps)")


# -- subcommands -------------------------------------------------------------


def cmd_run(args) -> int:
    scenario = load_scenario(args.config)
    base_seed = args.seed if args.seed is not None else scenario.run.seed
    results = run_replications(scenario, base_seed)
    outdir = Path(args.output)
    outdir.mkdir(parents=True, exist_ok=True)
    label = scenario.policy.kind.value
    write_timeseries(outdir / "timeseries.csv", [(label, results[0])])
    write_summary(outdir / "summary.csv", [(label, results)])
    print(_report(label, results))
    print(f"wrote {outdir / 'timeseries.csv'} and {outdir / 'summary.csv'}")
    return 0


def cmd_compare(args) -> int:
    scenario = load_scenario(args.config)
    labeled_runs = []
    for label, params in compare_variants(scenario.policy):
        # same seeds for every policy: common random numbers
        variant = replace(scenario, policy=params)
        labeled_runs.append((label, run_replications(variant)))
    outdir = Path(args.output)
    outdir.mkdir(parents=True, exist_ok=True)
    write_timeseries(outdir / "timeseries.csv",
                     [(label, results[0]) for label, results in labeled_runs])
    write_summary(outdir / "summary.csv", labeled_runs)
    for label, results in labeled_runs:
        print(_report(label, results))
    print(f"wrote {outdir / 'timeseries.csv'} and {outdir / 'summary.csv'}")
    return 0


def _print_states(probs) -> None:
    print()
    print("state,probability")
    for state, p in enumerate(probs):
        print(f"{state},{p:.6f}")


def cmd_oracle(args) -> int:
    if args.model == "erlang-b":
        print("Pb")
        print(f"{erlang_b(args.C, args.a):.6f}")
        if args.states:
            # the zero-guard chain is the same M/M/C/C system
            chain = guard_channel_stationary(args.C, 0, args.a, 0.0, 1.0)
            _print_states(chain.state_probs)
    else:
        result = guard_channel_stationary(args.C, args.GCh, args.lambda_n,
                                          args.lambda_h, args.mu)
        print("Pb,Ph")
        print(f"{result.new_blocking:.6f},{result.handoff_blocking:.6f}")
        if args.states:
            _print_states(result.state_probs)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="guardsim",
        description="Guard-channel cellular network simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="simulate one scenario file")
    p_run.add_argument("--config", required=True, help="scenario JSON path")
    p_run.add_argument("--seed", type=int, default=None,
                       help="override the scenario's base seed")
    p_run.add_argument("--output", default="out",
                       help="directory for timeseries.csv and summary.csv")
    p_run.set_defaults(func=cmd_run)

    p_cmp = sub.add_parser(
        "compare", help="run fca, static, and acas on the same traffic")
    p_cmp.add_argument("--config", required=True, help="scenario JSON path")
    p_cmp.add_argument("--output", default="out",
                       help="directory for timeseries.csv and summary.csv")
    p_cmp.set_defaults(func=cmd_compare)

    p_oracle = sub.add_parser(
        "oracle", help="closed-form blocking probabilities")
    oracle_sub = p_oracle.add_subparsers(dest="model", required=True)
    p_eb = oracle_sub.add_parser("erlang-b", help="M/M/C/C blocking")
    p_eb.add_argument("C", type=int, help="number of channels")
    p_eb.add_argument("a", type=float, help="offered load in erlangs")
    p_eb.add_argument("--states", action="store_true",
                      help="also print the state distribution")
    p_eb.set_defaults(func=cmd_oracle)
    p_g = oracle_sub.add_parser("guard", help="static guard-channel blocking")
    p_g.add_argument("C", type=int, help="number of channels")
    p_g.add_argument("GCh", type=int, help="reserved guard channels")
    p_g.add_argument("lambda_n", type=float, help="new-call arrival rate")
    p_g.add_argument("lambda_h", type=float, help="handoff arrival rate")
    p_g.add_argument("mu", type=float, help="service rate")
    p_g.add_argument("--states", action="store_true",
                     help="also print the state distribution")
    p_g.set_defaults(func=cmd_oracle)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
