"""Experiment demos: optimization trajectories, projections, classification.

Each demo writes plottable CSV artifacts (and figures, via the plots module)
under an output directory and returns a summary dict for programmatic use.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from ..constraints import (ConstraintSet, LinearConstraint, QuadraticConstraint,
                           find_interior_point)
from ..layer import HardLayer, central_project_batch
from ..net import Objective
from .generators import BenchProblem
from .iris import iris_simplex_demo
from .projection import (apply_projection, sample_box, train_boundary_projection,
                         train_orthogonal_projection)
from .solve import central_solve, layer_solve

ROSENBROCK_TARGET = np.array([1.0, 1.0])


def rosenbrock_problem() -> BenchProblem:
    """Rosenbrock objective on the disk of radius sqrt(2) about the origin.

    The ray anchor sits off the curved valley floor x2 = x1**2: anchoring on
    the valley would park a zero-gradient point exactly where trajectories
    need to pass.
    """
    omega = ConstraintSet(2, quadratic=[QuadraticConstraint(2.0 * np.eye(2),
                                                            np.zeros(2), 2.0)],
                          interior_point=np.array([-0.3, 0.9]))
    return BenchProblem(objective=Objective.rosenbrock(), omega=omega, seed=0)


def bird_problem() -> BenchProblem:
    """Bird objective on the disk of radius 5 about (-5, -5)."""
    omega = ConstraintSet(2, quadratic=[QuadraticConstraint(
        2.0 * np.eye(2), np.array([10.0, 10.0]), -25.0)],
        interior_point=np.array([-5.0, -5.0]))
    return BenchProblem(objective=Objective.bird(), omega=omega, seed=0)


def grid_starts(center, half_width: float) -> np.ndarray:
    """Uniform 3x3 grid of starting points."""
    offs = np.array([-half_width, 0.0, half_width])
    return np.array([[center[0] + dx, center[1] + dy] for dy in offs for dx in offs])


def _write_trajectories(out_dir: Path, stem: str, traj: np.ndarray) -> list[Path]:
    paths = []
    for k in range(traj.shape[1]):
        path = out_dir / f"{stem}_start{k}.csv"
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("x1,x2,iter\n")
            for i in range(traj.shape[0]):
                fh.write(f"{traj[i, k, 0]:.12g},{traj[i, k, 1]:.12g},{i}\n")
        paths.append(path)
    return paths


# Momentum horizons for the demo trajectories: the valley floors of the
# demo objectives oscillate Adam across steep walls, and longer first-moment
# averaging with a shorter second-moment memory roughly triples the
# along-valley drift per iteration at the paper's step count.
DEMO_BETAS = {"beta1": 0.985, "beta2": 0.985}


def _trajectory_demo(problem: BenchProblem, starts, name: str, out_dir,
                     iters: int, lr: float, seed: int, make_figures: bool) -> dict:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    runs = {}
    runs["central"] = central_solve(problem, iters=iters, lr=lr, init_points=starts,
                                    seed=seed, record_trajectory=True)
    runs["hidden"] = layer_solve(problem, mode="raw_inputs", iters=iters, lr=lr,
                                 init_points=starts, seed=seed, schedule="constant",
                                 record_trajectory=True, **DEMO_BETAS)
    runs["net"] = layer_solve(problem, mode="net", iters=iters, lr=lr,
                              init_points=starts, seed=seed, schedule="constant",
                              record_trajectory=True, **DEMO_BETAS)
    summary = {"name": name, "files": [], "endpoints": {}, "best": {}}
    for mode, result in runs.items():
        summary["files"] += _write_trajectories(out_dir, f"{name}_{mode}",
                                                result.trajectory)
        summary["endpoints"][mode] = result.trajectory[-1]
        summary["best"][mode] = (result.starts_x, result.starts_value)
    if make_figures:
        from ..plots import save_trajectory_figure
        for mode, result in runs.items():
            save_trajectory_figure(out_dir / f"{name}_{mode}.png", problem,
                                   result.trajectory, f"{name} ({mode})")
            summary["files"].append(out_dir / f"{name}_{mode}.png")
    return summary


def demo_rosenbrock(out_dir, seed: int = 0, iters: int = 2000, lr: float = 0.1,
                    make_figures: bool = True) -> dict:
    starts = grid_starts((0.0, 0.0), 0.75)
    return _trajectory_demo(rosenbrock_problem(), starts, "rosenbrock", out_dir,
                            iters, lr, seed, make_figures)


def demo_bird(out_dir, seed: int = 0, iters: int = 2000, lr: float = 0.1,
              make_figures: bool = True) -> dict:
    starts = grid_starts((-5.0, -5.0), 2.5)
    return _trajectory_demo(bird_problem(), starts, "bird", out_dir,
                            iters, lr, seed, make_figures)


def pentagon_set(irregular: bool = False) -> ConstraintSet:
    """Five halfspaces around the origin; optionally with uneven offsets."""
    angles = 2.0 * np.pi * np.arange(5) / 5.0 + 0.3
    offsets = np.array([1.0, 1.4, 0.8, 1.2, 1.0]) if irregular else np.ones(5)
    linear = [LinearConstraint(np.array([np.cos(t), np.sin(t)]), b)
              for t, b in zip(angles, offsets)]
    return ConstraintSet(2, linear, interior_point=np.zeros(2))


def _quiver_grid(omega: ConstraintSet, per_axis: int = 15) -> np.ndarray:
    lo, hi = sample_box(omega, scale=1.0)
    span = hi - lo
    lo, hi = lo - 0.5 * span, hi + 0.5 * span
    xs = np.linspace(lo[0], hi[0], per_axis)
    ys = np.linspace(lo[1], hi[1], per_axis)
    return np.stack(np.meshgrid(xs, ys), axis=-1).reshape(-1, 2)


def _write_quiver(path, Z, PX) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("x1,x2,px1,px2\n")
        for z, px in zip(Z, PX):
            fh.write(f"{z[0]:.12g},{z[1]:.12g},{px[0]:.12g},{px[1]:.12g}\n")


def demo_project(out_dir, seed: int = 0, iters: int = 1000, lr: float = 1e-2,
                 make_figures: bool = True) -> dict:
    """Approximate orthogonal projection (trained) vs exact central projection."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    omega = pentagon_set()
    Z = _quiver_grid(omega)
    net, layer, metrics = train_orthogonal_projection(omega, p_norm=2, iters=iters,
                                                      lr=lr, seed=seed)
    PX_trained = apply_projection(net, layer, Z)
    PX_central, _ = central_project_batch(layer, Z)
    files = [out_dir / "project_trained.csv", out_dir / "project_central.csv"]
    _write_quiver(files[0], Z, PX_trained)
    _write_quiver(files[1], Z, PX_central)
    if make_figures:
        from ..plots import save_quiver_figure
        for path, PX, title in ((out_dir / "project_trained.png", PX_trained,
                                 "trained orthogonal projection"),
                                (out_dir / "project_central.png", PX_central,
                                 "central projection")):
            save_quiver_figure(path, omega, Z, PX, title)
            files.append(path)
    return {"files": files, "metrics": metrics}


def demo_boundary(out_dir, seed: int = 0, iters: int = 1000, lr: float = 1e-2,
                  make_figures: bool = True) -> dict:
    """Trained projections onto the boundary for the L1 and L2 norms."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    omega = pentagon_set(irregular=True)
    Z = _quiver_grid(omega)
    files, metrics = [], {}
    images = {}
    for p_norm in (1, 2):
        net, layer, m = train_boundary_projection(omega, p_norm=p_norm,
                                                  iters=iters, lr=lr, seed=seed)
        PX = apply_projection(net, layer, Z, boundary=True)
        images[p_norm] = PX
        path = out_dir / f"boundary_l{p_norm}.csv"
        _write_quiver(path, Z, PX)
        files.append(path)
        metrics[f"l{p_norm}"] = m
        if make_figures:
            from ..plots import save_quiver_figure
            fig_path = out_dir / f"boundary_l{p_norm}.png"
            save_quiver_figure(fig_path, omega, Z, PX, f"boundary projection (L{p_norm})")
            files.append(fig_path)
    metrics["l1_l2_mean_gap"] = float(np.linalg.norm(images[1] - images[2], axis=1).mean())
    return {"files": files, "metrics": metrics}


def demo_iris(out_dir, seed: int = 0, epochs: int = 400, lr: float = 1e-2,
              upper_bound: float = 0.75, data_path=None,
              make_figures: bool = True) -> dict:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    result = iris_simplex_demo(upper_bound=upper_bound, epochs=epochs, lr=lr,
                               seed=seed, data_path=data_path)
    files = []
    keys = ("train_ce", "test_ce", "train_hinge", "test_hinge", "train_acc", "test_acc")
    for variant, info in result["variants"].items():
        path = out_dir / f"iris_{variant}.csv"
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("epoch," + ",".join(keys) + "\n")
            for i in range(len(info["train_ce"])):
                fh.write(f"{i}," + ",".join(f"{info[k][i]:.8g}" for k in keys) + "\n")
        files.append(path)
    if make_figures:
        from ..plots import save_loss_curves_figure
        for metric in ("ce", "hinge"):
            path = out_dir / f"iris_{metric}.png"
            save_loss_curves_figure(path, result["variants"], metric)
            files.append(path)
    result["files"] = files
    return result


DEMOS = {
    "rosenbrock": demo_rosenbrock,
    "bird": demo_bird,
    "project": demo_project,
    "boundary": demo_boundary,
    "iris": demo_iris,
}


def run_demo(name: str, out_dir, **kwargs) -> dict:
    if name not in DEMOS:
        raise ValueError(f"unknown demo {name!r}; pick one of {sorted(DEMOS)}")
    return DEMOS[name](out_dir, **kwargs)
