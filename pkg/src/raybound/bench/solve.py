"""Solve constrained problems by optimizing the inputs of the hard layer.

Every iterate is a layer output and therefore feasible; the solver simply
runs Adam on the layer inputs and keeps the best value seen.  Alongside each
iterate, the exact boundary point of the current ray is scored as a free
extra candidate, which pins down boundary optima far more precisely than
the sigmoid-scaled iterate alone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..constraints import find_interior_point
from ..exceptions import DivergenceError
from ..layer import (HardLayer, backward_batch, central_project_backward,
                     central_project_batch, forward_batch)
from ..net import (AdamState, DenseNet, adam_step, eval_objective_batch,
                   net_backward, net_forward)
from .generators import BenchProblem


@dataclass
class SolveResult:
    x: np.ndarray
    value: float
    iters_used: int
    starts_x: np.ndarray          # best point per start, (K, n)
    starts_value: np.ndarray      # (K,)
    trajectory: np.ndarray | None = None   # (iters + 1, K, n) when recorded


def _lr_at(t: int, iters: int, lr: float, schedule: str) -> float:
    if schedule == "constant":
        return lr
    if schedule == "two_phase":
        # Constant exploration, then exponential decay over six decades to
        # pin the final iterate onto the optimum.
        half = iters // 2
        if t < half:
            return lr
        return lr * 10.0 ** (-6.0 * (t - half) / max(iters - half, 1))
    raise ValueError(f"unknown schedule {schedule!r}")


def _logit(v):
    return math.log(v / (1.0 - v))


def _initial_inputs(layer: HardLayer, problem: BenchProblem, restarts: int,
                    seed: int, init_points) -> tuple[np.ndarray, np.ndarray]:
    """Starting rays and scales; init_points pins the initial outputs.

    Rays are unit-normalized: the layer output only depends on the ray
    direction, and a unit gauge keeps Adam's angular step size tied to the
    learning rate.
    """
    n = layer.dim
    p = layer.p
    if init_points is not None:
        X0 = np.atleast_2d(np.asarray(init_points, dtype=float))
        offs = X0 - p
        norms = np.linalg.norm(offs, axis=1)
        R0 = np.where(norms[:, None] > 0, offs / np.where(norms > 0, norms, 1.0)[:, None],
                      np.eye(n)[0])
        alpha, _ = layer.omega.ray_bounds_batch(p, R0)
        s0 = np.zeros(len(X0))
        for i, a in enumerate(alpha):
            if norms[i] == 0.0 or not math.isfinite(a):
                s0[i] = 0.0          # output is p (or direction is unbounded)
                continue
            frac = norms[i] / a      # required sigmoid value
            s0[i] = max(_logit(frac), -30.0) if frac < 1.0 - 1e-12 else 30.0
        return R0, s0
    rng = np.random.default_rng(np.random.SeedSequence([0x50, seed, problem.seed]))
    g0 = eval_objective_batch(problem.objective, p[None, :])[1][0]
    gn = float(np.linalg.norm(g0))
    lead = -g0 / gn if gn > 0 else np.eye(n)[0]
    rand = rng.standard_normal((max(restarts - 1, 0), n))
    rand /= np.linalg.norm(rand, axis=1, keepdims=True)
    R0 = np.vstack([lead[None, :], rand])
    return R0, np.zeros(R0.shape[0])


def layer_solve(problem: BenchProblem, mode: str = "raw_inputs",
                iters: int = 2000, lr: float = 0.1, restarts: int = 3,
                seed: int = 0, schedule: str = "two_phase",
                record_trajectory: bool = False, init_points=None,
                alpha_max: float = 1e8, beta1: float = 0.9,
                beta2: float = 0.999) -> SolveResult:
    """Minimize the problem objective over layer inputs with Adam.

    mode "raw_inputs" optimizes the (ray, scale) pair directly; mode "net"
    optimizes the inputs of a fixed random 5x100 trunk feeding the layer.
    The result is the best feasible point over all starts and iterations.
    On non-finite losses the run restarts with a 10x smaller rate.
    """
    if problem.omega.interior_point is None:
        find_interior_point(problem.omega)
    layer = HardLayer(problem.omega, bound_policy="cap", alpha_max=alpha_max)
    rate = lr
    for attempt in range(3):
        try:
            if mode == "raw_inputs":
                return _solve_raw(layer, problem, iters, rate, restarts, seed,
                                  schedule, record_trajectory, init_points,
                                  beta1, beta2)
            if mode == "net":
                return _solve_net(layer, problem, iters, rate, restarts, seed,
                                  schedule, record_trajectory, init_points,
                                  beta1, beta2)
            raise ValueError(f"unknown mode {mode!r}")
        except DivergenceError:
            if attempt == 2:
                raise
            rate /= 10.0
    raise AssertionError("unreachable")


class _BestTracker:
    def __init__(self, K, n, p):
        self.value = np.full(K, np.inf)
        self.x = np.tile(p, (K, 1))

    def update(self, X, vals):
        better = np.isfinite(vals) & (vals < self.value)
        if better.any():
            self.value[better] = vals[better]
            self.x[better] = X[better]


def _score(problem, X):
    return eval_objective_batch(problem.objective, X)


def _solve_raw(layer, problem, iters, lr, restarts, seed, schedule,
               record_trajectory, init_points, beta1=0.9, beta2=0.999):
    R, s = _initial_inputs(layer, problem, restarts, seed, init_points)
    K, n = R.shape
    best = _BestTracker(K, n, layer.p)
    state = AdamState(lr=lr, beta1=beta1, beta2=beta2)
    traj = [] if record_trajectory else None
    for t in range(iters):
        X, cache = forward_batch(layer, R, s)
        vals, grads = _score(problem, X)
        best.update(X, vals)
        free = np.nonzero(~cache.capped)[0]
        if free.size:
            Xb = layer.p + cache.alpha[free, None] * R[free]
            vb, _ = _score(problem, Xb)
            better = np.isfinite(vb) & (vb < best.value[free])
            if better.any():
                rows = free[better]
                best.value[rows] = vb[better]
                best.x[rows] = Xb[better]
        if traj is not None:
            traj.append(X.copy())
        gR, gs = backward_batch(layer, cache, grads)
        if not (np.all(np.isfinite(gR)) and np.all(np.isfinite(gs))):
            raise DivergenceError("non-finite gradients")
        adam_step(state, [R, s], [gR, gs], lr=_lr_at(t, iters, lr, schedule))
    X, _ = forward_batch(layer, R, s)
    vals, _ = _score(problem, X)
    best.update(X, vals)
    if traj is not None:
        traj.append(X.copy())
    if not np.isfinite(best.value).any():
        raise DivergenceError("no finite objective value reached")
    k = int(np.argmin(best.value))
    return SolveResult(x=best.x[k].copy(), value=float(best.value[k]),
                       iters_used=iters, starts_x=best.x, starts_value=best.value,
                       trajectory=np.stack(traj) if traj is not None else None)


def _solve_net(layer, problem, iters, lr, restarts, seed, schedule,
               record_trajectory, init_points, beta1=0.9, beta2=0.999):
    n = layer.dim
    net = DenseNet.create([n] + [100] * 5 + [n + 1], seed=seed)
    if init_points is not None:
        Z = np.atleast_2d(np.asarray(init_points, dtype=float)).copy()
    else:
        rng = np.random.default_rng(np.random.SeedSequence([0x51, seed, problem.seed]))
        Z = rng.standard_normal((restarts, n))
    K = Z.shape[0]
    best = _BestTracker(K, n, layer.p)
    state = AdamState(lr=lr, beta1=beta1, beta2=beta2)
    traj = [] if record_trajectory else None
    for t in range(iters):
        out, ncache = net_forward(net, Z)
        X, cache = forward_batch(layer, out[:, :n], out[:, n])
        vals, grads = _score(problem, X)
        best.update(X, vals)
        if traj is not None:
            traj.append(X.copy())
        gR, gs = backward_batch(layer, cache, grads)
        upstream = np.concatenate([gR, gs[:, None]], axis=1)
        gz = net_backward(net, ncache, upstream).input_grad
        if not np.all(np.isfinite(gz)):
            raise DivergenceError("non-finite gradients")
        adam_step(state, [Z], [gz], lr=_lr_at(t, iters, lr, schedule))
    out, _ = net_forward(net, Z)
    X, _ = forward_batch(layer, out[:, :n], out[:, n])
    vals, _ = _score(problem, X)
    best.update(X, vals)
    if traj is not None:
        traj.append(X.copy())
    if not np.isfinite(best.value).any():
        raise DivergenceError("no finite objective value reached")
    k = int(np.argmin(best.value))
    return SolveResult(x=best.x[k].copy(), value=float(best.value[k]),
                       iters_used=iters, starts_x=best.x, starts_value=best.value,
                       trajectory=np.stack(traj) if traj is not None else None)


def central_solve(problem: BenchProblem, iters: int = 2000, lr: float = 0.1,
                  init_points=None, seed: int = 0, schedule: str = "constant",
                  record_trajectory: bool = False) -> SolveResult:
    """Optimize a free point fed through the central projection.

    Used by the demo scenarios: inside the set the projection is the
    identity, outside it pins the point to the boundary.
    """
    if problem.omega.interior_point is None:
        find_interior_point(problem.omega)
    layer = HardLayer(problem.omega)
    n = layer.dim
    if init_points is not None:
        Y = np.atleast_2d(np.asarray(init_points, dtype=float)).copy()
    else:
        rng = np.random.default_rng(np.random.SeedSequence([0x52, seed, problem.seed]))
        Y = layer.p + 0.1 * rng.standard_normal((3, n))
    K = Y.shape[0]
    best = _BestTracker(K, n, layer.p)
    state = AdamState(lr=lr)
    traj = [] if record_trajectory else None
    for t in range(iters):
        X, cache = central_project_batch(layer, Y)
        vals, grads = _score(problem, X)
        best.update(X, vals)
        if traj is not None:
            traj.append(X.copy())
        gY = central_project_backward(layer, cache, grads)
        if not np.all(np.isfinite(gY)):
            raise DivergenceError("non-finite gradients")
        adam_step(state, [Y], [gY], lr=_lr_at(t, iters, lr, schedule))
    X, _ = central_project_batch(layer, Y)
    vals, _ = _score(problem, X)
    best.update(X, vals)
    if traj is not None:
        traj.append(X.copy())
    k = int(np.argmin(best.value))
    return SolveResult(x=best.x[k].copy(), value=float(best.value[k]),
                       iters_used=iters, starts_x=best.x, starts_value=best.value,
                       trajectory=np.stack(traj) if traj is not None else None)
