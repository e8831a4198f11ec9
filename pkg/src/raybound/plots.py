"""Matplotlib figure rendering for bench and demo artifacts.

Figures are written next to the delimited outputs; nothing here is needed
for the numerical results.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .constraints import ConstraintSet
from .net import eval_objective_batch


def _set_boundary_mask(omega: ConstraintSet, xs, ys):
    grid = np.stack(np.meshgrid(xs, ys), axis=-1).reshape(-1, 2)
    vals = omega.values_batch(grid).max(axis=1)
    return vals.reshape(len(ys), len(xs))


def _frame(omega: ConstraintSet, pts, pad: float = 0.15):
    lo = pts.reshape(-1, 2).min(axis=0)
    hi = pts.reshape(-1, 2).max(axis=0)
    span = np.maximum(hi - lo, 1e-6)
    return lo - pad * span, hi + pad * span


def save_trajectory_figure(path, problem, trajectory, title: str) -> None:
    """Objective contours, feasible-set boundary, and iterate paths."""
    omega = problem.omega
    lo, hi = _frame(omega, trajectory)
    xs = np.linspace(lo[0], hi[0], 300)
    ys = np.linspace(lo[1], hi[1], 300)
    grid = np.stack(np.meshgrid(xs, ys), axis=-1).reshape(-1, 2)
    F = eval_objective_batch(problem.objective, grid)[0].reshape(300, 300)
    H = _set_boundary_mask(omega, xs, ys)

    fig, ax = plt.subplots(figsize=(5, 4.2))
    levels = np.quantile(F, np.linspace(0.02, 0.98, 18))
    ax.contour(xs, ys, F, levels=np.unique(levels), linewidths=0.6, cmap="viridis")
    ax.contour(xs, ys, H, levels=[0.0], colors="black", linewidths=1.6)
    for k in range(trajectory.shape[1]):
        ax.plot(trajectory[:, k, 0], trajectory[:, k, 1], lw=0.9, alpha=0.85)
        ax.plot(trajectory[0, k, 0], trajectory[0, k, 1], "o", ms=4, color="tab:gray")
        ax.plot(trajectory[-1, k, 0], trajectory[-1, k, 1], "*", ms=11,
                markerfacecolor="white", markeredgecolor="black")
    ax.set_title(title)
    ax.set_xlabel("x1")
    ax.set_ylabel("x2")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_quiver_figure(path, omega: ConstraintSet, Z, PX, title: str) -> None:
    """Arrows from sample points to their images, over the set boundary."""
    lo, hi = _frame(omega, np.vstack([Z, PX]))
    xs = np.linspace(lo[0], hi[0], 300)
    ys = np.linspace(lo[1], hi[1], 300)
    H = _set_boundary_mask(omega, xs, ys)
    fig, ax = plt.subplots(figsize=(5, 4.6))
    ax.contourf(xs, ys, H, levels=[-1e18, 0.0], colors=["#dfe8f3"])
    ax.contour(xs, ys, H, levels=[0.0], colors="black", linewidths=1.4)
    D = PX - Z
    ax.quiver(Z[:, 0], Z[:, 1], D[:, 0], D[:, 1], angles="xy", scale_units="xy",
              scale=1.0, width=0.0035, color="tab:blue", alpha=0.85)
    ax.plot(PX[:, 0], PX[:, 1], ".", ms=2.5, color="tab:red")
    ax.set_title(title)
    ax.set_aspect("equal")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_loss_curves_figure(path, variants: dict, metric: str) -> None:
    """Train/test curves of one metric for every head variant."""
    fig, axes = plt.subplots(1, 2, figsize=(8, 3.4), sharey=True)
    for split, ax in zip(("train", "test"), axes):
        key = f"{split}_{metric}"
        for variant, info in variants.items():
            ax.plot(info[key], label=variant, lw=1.2)
        ax.set_title(f"{split} {metric}")
        ax.set_xlabel("epoch")
        ax.grid(alpha=0.3)
    axes[0].legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_table_figure(path, table) -> None:
    """Median relative error against the constraint count, one line per n."""
    fig, ax = plt.subplots(figsize=(5, 3.6))
    ns = sorted({n for (_, n) in table.rows})
    for n in ns:
        ms = sorted(m for (m, nn) in table.rows if nn == n)
        med = [max(table.rows[(m, n)][50], 1e-12) for m in ms]
        ax.plot(ms, med, "o-", label=f"n={n}")
    ax.set_yscale("log")
    ax.set_xlabel("constraints m")
    ax.set_ylabel("median RE %")
    ax.set_title(f"{table.loss_kind} loss, {table.constraint_kind} constraints")
    ax.grid(alpha=0.3, which="both")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
