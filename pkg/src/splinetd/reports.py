"""Run artifacts: delimited outputs, the run manifest, and rendered figures.

The CSV files are the canonical interface (byte-reproducible for a fixed
master seed: floats are serialized with 17 significant digits); the PNG
figures rendered next to them are a convenience for eyeballing runs.
"""

from __future__ import annotations

import csv
import json
import time
from pathlib import Path
from typing import Sequence

import matplotlib
import numpy as np

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .harness import ExperimentResult, TrialRecord, moving_average  # noqa: E402

TRIAL_FIELDS = ("trial", "theta0_rad", "t_up_s", "total_reward", "clamp_count", "diverged")


def fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{float(value):.17g}"


def write_trials_csv(path, records: Sequence[TrialRecord]) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(TRIAL_FIELDS)
        for r in records:
            writer.writerow([fmt(r.trial_index), fmt(r.theta0), fmt(r.t_up),
                             fmt(r.total_reward), fmt(r.clamp_count), fmt(r.diverged)])


def read_trials_csv(path) -> list[TrialRecord]:
    records = []
    with open(path, newline="") as handle:
        reader = csv.DictReader(handle)
        if tuple(reader.fieldnames or ()) != TRIAL_FIELDS:
            raise ValueError(f"{path} is not a trial CSV (header {reader.fieldnames})")
        for row in reader:
            records.append(TrialRecord(
                trial_index=int(row["trial"]),
                theta0=float(row["theta0_rad"]),
                t_up=float(row["t_up_s"]),
                total_reward=float(row["total_reward"]),
                clamp_count=int(row["clamp_count"]),
                diverged=row["diverged"] == "1",
            ))
    return records


def write_trajectory_csv(path, trajectory: np.ndarray) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(("t", "theta", "thetadot", "u", "reward"))
        for row in trajectory:
            writer.writerow([fmt(v) for v in row])


def write_summary_json(path, summary: dict, config_dict: dict) -> None:
    with open(path, "w") as handle:
        json.dump({"config": config_dict, "summary": summary}, handle, indent=2)
        handle.write("\n")


def write_manifest(path, config_path, config_digest: str, out_dir, version: str) -> None:
    manifest = {
        "config_path": str(config_path) if config_path else None,
        "config_hash": config_digest,
        "output_directory": str(out_dir),
        "created_unix": time.time(),
        "created_iso": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
        "tool_version": version,
    }
    with open(path, "w") as handle:
        json.dump(manifest, handle, indent=2)
        handle.write("\n")


def write_matrix_csv(path, matrix: np.ndarray) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        for row in np.atleast_2d(matrix):
            writer.writerow([fmt(v) for v in row])


def write_bnet_csv(path, rows: Sequence[tuple]) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(("simplex", "kappa0", "kappa1", "kappa2", "x1", "x2", "coefficient"))
        for row in rows:
            writer.writerow([fmt(v) for v in row])


def write_value_grid_csv(path, rows: Sequence[tuple]) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(("theta", "thetadot", "V", "dV_dtheta", "dV_dthetadot"))
        for row in rows:
            writer.writerow([fmt(v) for v in row])


# -- figures -----------------------------------------------------------------


def plot_learning_curve(path, records: Sequence[TrialRecord], title: str) -> None:
    values = [r.t_up for r in records]
    fig, ax = plt.subplots(figsize=(7, 3.5))
    ax.plot(range(len(values)), values, "o", ms=3, alpha=0.6, label="per trial")
    if len(values) >= 2:
        ax.plot(range(len(values)), moving_average(values, 5), "-", lw=1.8,
                label="5-point moving average")
    ax.set_xlabel("trial")
    ax.set_ylabel("time upright [s]")
    ax.set_title(title)
    ax.grid(True, alpha=0.3)
    ax.legend(loc="lower right")
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def plot_value_surface(path, value_fn, bounds, title: str, resolution: int = 80) -> None:
    (lo_t, lo_d), (hi_t, hi_d) = bounds[0], bounds[1]
    thetas = np.linspace(lo_t, hi_t, resolution)
    rates = np.linspace(lo_d, hi_d, resolution)
    grid = np.full((resolution, resolution), np.nan)
    for i, td in enumerate(rates):
        for j, th in enumerate(thetas):
            grid[i, j] = value_fn((th, td))
    fig, ax = plt.subplots(figsize=(6, 4))
    mesh = ax.pcolormesh(thetas, rates, grid, shading="auto", cmap="viridis")
    fig.colorbar(mesh, ax=ax, label="V")
    ax.set_xlabel("theta [rad]")
    ax.set_ylabel("thetadot [rad/s]")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def write_run_outputs(out_dir, result: ExperimentResult, config_dict: dict,
                      config_path, config_digest: str, version: str,
                      value_fn=None, bounds=None, trajectories=None,
                      render_figures: bool = True) -> None:
    """Write the standard artifact set for one experiment run."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_trials_csv(out / "trials.csv", result.records)
    write_summary_json(out / "summary.json", result.summary, config_dict)
    write_manifest(out / "manifest.json", config_path, config_digest, out, version)
    if trajectories:
        traj_dir = out / "trajectories"
        traj_dir.mkdir(exist_ok=True)
        for record, traj in zip(result.records, trajectories):
            write_trajectory_csv(traj_dir / f"trial_{record.trial_index:05d}.csv", traj)
    if render_figures:
        label = (f"experiment {result.summary.get('experiment', '?')}, "
                 f"{result.summary.get('variant', '?')}, "
                 f"seed {result.summary.get('master_seed', '?')}")
        plot_learning_curve(out / "learning_curve.png", result.records, label)
        if value_fn is not None and bounds is not None:
            plot_value_surface(out / "value_surface.png", value_fn, bounds,
                               f"value function, {label}")
