#!/usr/bin/env python3
"""Render channel-allocation comparison figures from a simulator time series.

Reads the CSV that `guardsim compare` (or `guardsim run`) writes and turns
the network-wide rows into figures:

    python render.py --input timeseries.csv --outdir figures --panels all

Panels: `fca`, `static`, or `acas` plot that policy's new-call and handoff
rejection rates over time; `gch` plots the adaptive policy's reserved-channel
trajectory; `all` renders the combined rejection-rate figure, an end-of-run
comparison bar chart, and the trajectory (three files).  The script only
displays columns from the CSV; it never recomputes simulation statistics.
"""

import argparse
import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import pandas as pd

REQUIRED_COLUMNS = ["time", "cell", "policy", "Oc", "GCh", "Nc", "Hc",
                    "Rn", "Rh", "H", "Pb", "Ph", "utilization"]
NUMERIC_COLUMNS = [c for c in REQUIRED_COLUMNS if c not in ("cell", "policy")]
POLICIES = ("fca", "static", "acas")
PANEL_CHOICES = ("all", "fca", "static", "acas", "gch")


class RenderError(Exception):
    """Input unusable; the message says why."""


def load_series(path) -> pd.DataFrame:
    try:
        frame = pd.read_csv(path, dtype={"cell": str, "policy": str})
    except FileNotFoundError:
        raise RenderError(f"cannot read {path}: no such file")
    except (pd.errors.EmptyDataError, pd.errors.ParserError) as exc:
        raise RenderError(f"{path} is not a parseable CSV: {exc}")

    missing = [c for c in REQUIRED_COLUMNS if c not in frame.columns]
    if missing:
        raise RenderError(
            f"{path} is missing required column(s): {', '.join(missing)}")
    if frame.empty:
        raise RenderError(f"{path} has a header but no rows")
    for column in NUMERIC_COLUMNS:
        values = pd.to_numeric(frame[column], errors="coerce")
        if values.isna().any():
            # a mid-row cut or hand-edited file shows up as unparseable cells
            raise RenderError(
                f"{path} looks truncated or corrupt: non-numeric value in "
                f"column {column}")
        frame[column] = values
    return frame


def _network_rows(frame: pd.DataFrame, policy: str) -> pd.DataFrame:
    rows = frame[(frame["policy"] == policy) & (frame["cell"] == "all")]
    if rows.empty:
        raise RenderError(f"input has no network-wide rows for policy {policy}")
    return rows.sort_values("time")


def render_rejection_rates(frame, outdir: Path, policies) -> Path:
    fig, axes = plt.subplots(1, len(policies), figsize=(4.2 * len(policies), 3.4),
                             sharey=True, squeeze=False)
    for axis, policy in zip(axes[0], policies):
        rows = _network_rows(frame, policy)
        axis.plot(rows["time"], rows["Pb"], label="new-call rejection (Pb)")
        axis.plot(rows["time"], rows["Ph"], label="handoff rejection (Ph)")
        axis.set_title(policy)
        axis.set_xlabel("time (s)")
    axes[0][0].set_ylabel("probability")
    axes[0][0].legend(fontsize="small")
    fig.tight_layout()
    name = "rejection_rates.png" if len(policies) > 1 \
        else f"rejection_rates_{policies[0]}.png"
    target = outdir / name
    fig.savefig(target)
    plt.close(fig)
    return target


def render_comparison_bars(frame, outdir: Path) -> Path:
    # final cumulative values, one bar group per metric
    metrics = ("Pb", "Ph", "utilization")
    finals = {p: _network_rows(frame, p).iloc[-1] for p in POLICIES}
    fig, axis = plt.subplots(figsize=(6.0, 3.4))
    width = 0.8 / len(POLICIES)
    for slot, policy in enumerate(POLICIES):
        positions = [i + slot * width for i in range(len(metrics))]
        axis.bar(positions, [finals[policy][m] for m in metrics],
                 width=width, label=policy)
    axis.set_xticks([i + width for i in range(len(metrics))])
    axis.set_xticklabels(metrics)
    axis.set_ylabel("probability")
    axis.set_title("end of run")
    axis.legend(fontsize="small")
    fig.tight_layout()
    target = outdir / "policy_comparison.png"
    fig.savefig(target)
    plt.close(fig)
    return target


def render_gch_trajectory(frame, outdir: Path) -> Path:
    network = _network_rows(frame, "acas")
    acas = frame[frame["policy"] == "acas"]
    fig, axis = plt.subplots(figsize=(6.0, 3.4))
    for cell in sorted(c for c in acas["cell"].unique() if c != "all"):
        rows = acas[acas["cell"] == cell].sort_values("time")
        axis.step(rows["time"], rows["GCh"], where="post",
                  color="tab:gray", alpha=0.4, linewidth=0.9)
    axis.step(network["time"], network["GCh"], where="post",
              color="tab:blue", linewidth=2.0, label="mean over cells")
    axis.set_xlabel("time (s)")
    axis.set_ylabel("reserved channels (GCh)")
    axis.set_title("acas guard-channel trajectory")
    axis.legend(fontsize="small")
    fig.tight_layout()
    target = outdir / "gch_trajectory.png"
    fig.savefig(target)
    plt.close(fig)
    return target


def render(input_path, outdir: Path, panels: str) -> list:
    frame = load_series(input_path)
    outdir.mkdir(parents=True, exist_ok=True)
    if panels == "all":
        return [render_rejection_rates(frame, outdir, POLICIES),
                render_comparison_bars(frame, outdir),
                render_gch_trajectory(frame, outdir)]
    if panels == "gch":
        return [render_gch_trajectory(frame, outdir)]
    return [render_rejection_rates(frame, outdir, (panels,))]


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        description="plot policy-comparison figures from a time-series CSV")
    parser.add_argument("--input", required=True, help="time-series CSV")
    parser.add_argument("--outdir", required=True, help="directory for images")
    parser.add_argument("--panels", required=True, choices=PANEL_CHOICES)
    args = parser.parse_args(argv)
    try:
        written = render(args.input, Path(args.outdir), args.panels)
    except RenderError as exc:
        print(f"render.py: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"render.py: {exc}", file=sys.stderr)
        return 1
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
