"""Figure rendering for run reports.

Renders the per-cycle metric trajectories (with confidence bands where
available) to image files next to the delimited report output.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .stats import CycleStats

_FIGSIZE = (7.0, 4.0)


def _ci_band(ax, cycles, cis, color):
    los = [ci[0] for ci in cis]
    his = [ci[1] for ci in cis]
    ax.fill_between(cycles, los, his, alpha=0.2, color=color, linewidth=0)


def render_figures(stats: list[CycleStats], out_dir: str | Path) -> list[Path]:
    """Write one PNG per metric family; returns the written paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    cycles = [s.cycle for s in stats]

    fig, ax = plt.subplots(figsize=_FIGSIZE)
    ax.plot(cycles, [s.valid_rate * 100 for s in stats], marker="o", color="tab:blue")
    _ci_band(
        ax,
        cycles,
        [(ci[0] * 100, ci[1] * 100) for ci in (s.valid_rate_ci for s in stats)],
        "tab:blue",
    )
    ax.set_xlabel("Cycle")
    ax.set_ylabel("Valid generation rate (%)")
    ax.set_title("Valid generation rate per cycle (Wilson 95% CI)")
    ax.grid(alpha=0.3)
    path = out / "valid_rate.png"
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    written.append(path)

    with_acc = [s for s in stats if s.mean_acc is not None]
    if with_acc:
        acc_cycles = [s.cycle for s in with_acc]
        fig, ax = plt.subplots(figsize=_FIGSIZE)
        ax.plot(acc_cycles, [s.best_acc * 100 for s in with_acc], marker="^",
                label="best", color="tab:green")
        ax.plot(acc_cycles, [s.mean_acc * 100 for s in with_acc], marker="o",
                label="mean", color="tab:blue")
        ax.plot(acc_cycles, [s.median_acc * 100 for s in with_acc], marker="s",
                label="median", color="tab:orange")
        ci_pts = [s for s in with_acc if s.mean_acc_ci is not None]
        if ci_pts:
            _ci_band(
                ax,
                [s.cycle for s in ci_pts],
                [(s.mean_acc_ci[0] * 100, s.mean_acc_ci[1] * 100) for s in ci_pts],
                "tab:blue",
            )
        ax.set_xlabel("Cycle")
        ax.set_ylabel("First-epoch accuracy (%)")
        ax.set_title("Proxy accuracy per cycle")
        ax.legend()
        ax.grid(alpha=0.3)
        path = out / "accuracy.png"
        fig.savefig(path, dpi=150, bbox_inches="tight")
        plt.close(fig)
        written.append(path)

        fig, ax = plt.subplots(figsize=_FIGSIZE)
        frac_pts = [s for s in with_acc if s.frac_above_threshold is not None]
        ax.plot(
            [s.cycle for s in frac_pts],
            [s.frac_above_threshold * 100 for s in frac_pts],
            marker="o",
            color="tab:red",
        )
        ci_pts = [s for s in frac_pts if s.frac_above_threshold_ci is not None]
        if ci_pts:
            _ci_band(
                ax,
                [s.cycle for s in ci_pts],
                [
                    (s.frac_above_threshold_ci[0] * 100, s.frac_above_threshold_ci[1] * 100)
                    for s in ci_pts
                ],
                "tab:red",
            )
        ax.set_xlabel("Cycle")
        ax.set_ylabel("Models above threshold (%)")
        ax.set_title("Above-threshold fraction per cycle (Wilson 95% CI)")
        ax.grid(alpha=0.3)
        path = out / "above_threshold.png"
        fig.savefig(path, dpi=150, bbox_inches="tight")
        plt.close(fig)
        written.append(path)

    fig, ax = plt.subplots(figsize=_FIGSIZE)
    ax.plot(cycles, [s.corpus_size_after for s in stats], marker="o", color="tab:purple")
    ax.set_xlabel("Cycle")
    ax.set_ylabel("Training pairs")
    ax.set_title("Training-corpus growth")
    ax.grid(alpha=0.3)
    path = out / "corpus_growth.png"
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    written.append(path)

    return written
