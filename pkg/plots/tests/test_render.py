"""End-to-end checks for the figure renderer.

The fixture CSV comes from the simulator's own compare command run as a
subprocess, so these tests exercise exactly the bytes a user would feed in.
"""

import json
import subprocess
import sys
from pathlib import Path

import pytest

import render

RENDER = Path(__file__).resolve().parents[1] / "render.py"

SCENARIO = {
    "topology": {"num_cells": 6},
    "traffic": {"lambda_new": 30.0, "mu": 1.0, "eta": 1.0},
    "policy": {"kind": "acas", "C": 20, "GCh0": 10, "Th": 0.2, "A_u": 0.9,
               "A_d": 0.6, "N": 10, "Cmin": 0, "Cmax": 19, "t": 10.0},
    "run": {"duration_s": 120.0, "seed": 42, "replications": 1,
            "warmup_fraction": 0.1, "snapshot_period_s": 10.0},
}


def _run(*argv):
    return subprocess.run([sys.executable, *argv],
                          capture_output=True, text=True)


@pytest.fixture(scope="session")
def compare_csv(tmp_path_factory) -> Path:
    workdir = tmp_path_factory.mktemp("compare")
    config = workdir / "scenario.json"
    config.write_text(json.dumps(SCENARIO), encoding="utf-8")
    proc = _run("-m", "guardsim", "compare", "--config", str(config),
                "--output", str(workdir / "out"))
    assert proc.returncode == 0, proc.stderr
    return workdir / "out" / "timeseries.csv"


def test_release_checks(compare_csv, tmp_path):
    # all panels from a three-policy comparison: exactly three image files
    outdir = tmp_path / "figures"
    proc = _run(str(RENDER), "--input", str(compare_csv),
                "--outdir", str(outdir), "--panels", "all")
    images = sorted(outdir.glob("*.png")) if outdir.is_dir() else []
    all_ok = (proc.returncode == 0 and len(images) == 3
              and all(p.stat().st_size > 0 for p in images))

    # a cut-off download must fail with a message, not a traceback
    data = compare_csv.read_bytes()
    cut = data.rfind(b"\n", 0, len(data) // 2) + 8  # lands mid-row
    clipped = tmp_path / "clipped.csv"
    clipped.write_bytes(data[:cut])
    proc = _run(str(RENDER), "--input", str(clipped),
                "--outdir", str(tmp_path / "clipped_out"), "--panels", "all")
    truncated_ok = (proc.returncode != 0 and "render.py:" in proc.stderr
                    and "Traceback" not in proc.stderr)

    # the guard-count series the renderer would draw stays inside the clamps
    # configured for the generating scenario
    frame = render.load_series(compare_csv)
    guards = frame[frame["policy"] == "acas"]["GCh"]
    low, high = SCENARIO["policy"]["Cmin"], SCENARIO["policy"]["Cmax"]
    bounds_ok = (not guards.empty and guards.min() >= low
                 and guards.max() <= high)

    ok = all_ok and truncated_ok and bounds_ok
    print(f"[criterion 7] {'PASS' if ok else 'FAIL'}: all-panels images={len(images)}, "
          f"truncated input rejected: {truncated_ok}, "
          f"GCh within [{low}, {high}]: {bounds_ok}")
    assert ok


def test_missing_column_is_named(compare_csv, tmp_path):
    lines = compare_csv.read_text(encoding="utf-8").splitlines()
    header = lines[0].split(",")
    keep = [i for i, name in enumerate(header) if name != "Ph"]
    stripped = tmp_path / "no_ph.csv"
    stripped.write_text(
        "\n".join(",".join(row.split(",")[i] for i in keep) for row in lines)
        + "\n", encoding="utf-8")
    proc = _run(str(RENDER), "--input", str(stripped),
                "--outdir", str(tmp_path / "out"), "--panels", "all")
    assert proc.returncode == 2
    assert "Ph" in proc.stderr


def test_single_policy_panel(compare_csv, tmp_path):
    proc = _run(str(RENDER), "--input", str(compare_csv),
                "--outdir", str(tmp_path), "--panels", "fca")
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "rejection_rates_fca.png").stat().st_size > 0
    assert len(list(tmp_path.glob("*.png"))) == 1


def test_trajectory_panel_alone(compare_csv, tmp_path):
    proc = _run(str(RENDER), "--input", str(compare_csv),
                "--outdir", str(tmp_path), "--panels", "gch")
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "gch_trajectory.png").stat().st_size > 0


def test_missing_input_file(tmp_path):
    proc = _run(str(RENDER), "--input", str(tmp_path / "absent.csv"),
                "--outdir", str(tmp_path), "--panels", "all")
    assert proc.returncode == 2
    assert "no such file" in proc.stderr


def test_per_cell_guard_series_is_integer_steps(compare_csv):
    frame = render.load_series(compare_csv)
    per_cell = frame[(frame["policy"] == "acas") & (frame["cell"] != "all")]
    assert not per_cell.empty
    assert (per_cell["GCh"] == per_cell["GCh"].round()).all()
