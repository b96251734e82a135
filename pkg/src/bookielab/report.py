"""Figure rendering for simulation output.

Figures are written next to the delimited output: a log-log regret curve
and the price trajectory for single runs, and a per-config regret summary
for sweeps.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

__all__ = ["render_run_figures", "render_sweep_figure"]


def render_run_figures(out_dir, result, prefix: str = "run") -> list[Path]:
    """Write regret and price-trajectory figures for one run; returns paths."""
    from .harness import trajectory_checkpoints  # avoid import cycle

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    traj = result.trajectory
    ts = trajectory_checkpoints(result.summary.horizon)
    idx = ts - 1
    paths = []

    fig, ax = plt.subplots(figsize=(6, 4))
    regret = result.regret_series[idx]
    positive = regret > 0
    ax.plot(ts[positive], regret[positive], lw=1.2)
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("bettors observed")
    ax.set_ylabel("cumulative regret")
    ax.set_title(f"{result.summary.policy_kind} regret "
                 f"(seed {result.summary.seed})")
    path = out_dir / f"{prefix}_regret.png"
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)
    paths.append(path)

    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(ts, traj.a[idx], lw=1.2, label="a (price for R)")
    ax.plot(ts, traj.b[idx], lw=1.2, label="b (price for L)")
    ax.axhline(result.summary.benchmark_a, ls="--", lw=0.8, color="C0",
               label="benchmark a")
    ax.axhline(result.summary.benchmark_b, ls="--", lw=0.8, color="C1",
               label="benchmark b")
    ax.set_xscale("log")
    ax.set_xlabel("bettors observed")
    ax.set_ylabel("price")
    ax.legend(fontsize=8)
    path = out_dir / f"{prefix}_prices.png"
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)
    paths.append(path)
    return paths


def render_sweep_figure(out_dir, rows, prefix: str = "sweep") -> Path:
    """Bar chart of mean final regret (min/max whiskers) per sweep config."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    x = np.arange(len(rows))
    means = np.array([r["regret_mean"] for r in rows])
    lo = np.array([r["regret_min"] for r in rows])
    hi = np.array([r["regret_max"] for r in rows])

    fig, ax = plt.subplots(figsize=(6, 4))
    ax.bar(x, means)
    ax.vlines(x, lo, hi, color="k", lw=1.0)
    ax.set_xticks(x)
    ax.set_xticklabels([f'{r["config_index"]}:{r["policy_kind"]}'
                        for r in rows], rotation=45, ha="right", fontsize=8)
    ax.set_ylabel("final stochastic regret")
    path = out_dir / f"{prefix}_regret.png"
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)
    return path
