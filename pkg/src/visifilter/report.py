"""Figure rendering for completed runs.

Reads a run directory (trace.csv + resolved_scenario.json) and drops PNG
figures next to them: the top-down trajectory through the landmark field, the
score curves against the required threshold, and the per-family constraint
minima with the deviation cost.
"""

from __future__ import annotations

import json
import os
from typing import List

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
from matplotlib.patches import Circle

from .scenario_io import build_scenario, resolve_scenario
from .trace_io import read_csv

__all__ = ["render_report"]


def _plot_world(ax, scenario):
    pts = scenario.store.positions
    ax.scatter(pts[:, 0], pts[:, 1], s=12, c="tab:gray", marker=".",
               label="landmarks", zorder=2)
    for obstacle in scenario.world.obstacles:
        if hasattr(obstacle, "radius"):
            ax.add_patch(Circle(obstacle.center, obstacle.radius,
                                facecolor="lightcoral", edgecolor="firebrick",
                                alpha=0.7, zorder=1))
        else:
            (x0, y0), (x1, y1) = obstacle.start, obstacle.end
            ax.plot([x0, x1], [y0, y1], color="firebrick",
                    linewidth=2 + 40 * obstacle.thickness, alpha=0.7,
                    solid_capstyle="round", zorder=1)
    for wall in scenario.world.walls:
        (x0, y0), (x1, y1) = wall.start, wall.end
        ax.plot([x0, x1], [y0, y1], color="dimgray", linewidth=2,
                linestyle="--", zorder=1)


def _trajectory_figure(cols, scenario, path):
    fig, ax = plt.subplots(figsize=(6.0, 6.0))
    _plot_world(ax, scenario)
    names = scenario.model.coord_names
    x, y = cols[names[0]], cols[names[1]]
    ax.plot(x, y, color="tab:blue", linewidth=1.5, label="trajectory", zorder=3)
    ax.plot(x[0], y[0], "o", color="tab:green", label="start", zorder=4)
    ax.plot(x[-1], y[-1], "s", color="tab:red", label="end", zorder=4)
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.set_title(f"{scenario.name}: trajectory ({scenario.mode})")
    ax.set_aspect("equal", adjustable="datalim")
    ax.legend(loc="best", fontsize=8)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def _scores_figure(cols, scenario, path):
    fig, ax = plt.subplots(figsize=(8.0, 4.0))
    t = cols["t"]
    ax.plot(t, cols["w"], color="tab:blue", label="w (visible score)")
    if np.any(np.isfinite(cols["w_hat"])):
        ax.plot(t, cols["w_hat"], color="tab:orange", label="ŵ (smoothed)")
    threshold = scenario.filter_cfg.constraints.required_score
    ax.axhline(threshold, color="tab:red", linestyle="--",
               label=f"W = {threshold:g}")
    ax.set_xlabel("t [s]")
    ax.set_ylabel("score")
    ax.set_title(f"{scenario.name}: visibility score")
    ax.legend(loc="best", fontsize=8)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def _constraints_figure(cols, scenario, path):
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(8.0, 6.0), sharex=True)
    t = cols["t"]
    families = [("h1_min", "h1 (score)"), ("h2_min", "h2 (credit cap)"),
                ("h3_min", "h3 (view blend)"), ("h4_min", "h4 (blend floor)"),
                ("h5_min", "h5 (blend cap)"), ("h6", "h6 (clearance)")]
    for key, label in families:
        if np.any(np.isfinite(cols[key])):
            ax1.plot(t, cols[key], label=label, linewidth=1.0)
    ax1.axhline(0.0, color="black", linewidth=0.8)
    ax1.set_ylabel("family minimum")
    ax1.set_title(f"{scenario.name}: constraint margins")
    ax1.legend(loc="best", fontsize=7, ncol=3)
    ax1.grid(True, alpha=0.3)
    ax2.plot(t, cols["deviation"], color="tab:purple")
    ax2.set_xlabel("t [s]")
    ax2.set_ylabel("deviation cost")
    ax2.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_report(run_dir: str) -> List[str]:
    """Render figures for a run directory; returns the paths written."""
    trace_path = os.path.join(run_dir, "trace.csv")
    resolved_path = os.path.join(run_dir, "resolved_scenario.json")
    for required in (trace_path, resolved_path):
        if not os.path.isfile(required):
            raise FileNotFoundError(f"{run_dir}: missing {os.path.basename(required)}")
    cols = read_csv(trace_path)
    with open(resolved_path) as fh:
        resolved = resolve_scenario(json.load(fh))
    scenario = build_scenario(resolved)
    outputs = []
    for name, renderer in (("trajectory.png", _trajectory_figure),
                           ("scores.png", _scores_figure),
                           ("constraints.png", _constraints_figure)):
        target = os.path.join(run_dir, name)
        renderer(cols, scenario, target)
        outputs.append(target)
    return outputs
