"""Log-barrier interior-point reference solver and a 2-D grid oracle.

The reference path minimizes t*f(x) - sum_i log(-h_i(x)) by Newton steps
along an increasing t-schedule; the returned value carries the classic
m/t suboptimality certificate.  The grid oracle brute-forces 2-D problems
on progressively zoomed uniform grids and is used to cross-check the
barrier solver.
"""

from __future__ import annotations

import math

import numpy as np

from ..constraints import ConstraintSet, find_interior_point
from ..exceptions import DivergenceError
from ..net import Objective, eval_objective_batch
from .generators import BenchProblem

GAP_TOL = 1e-6
T_FLOOR = 1e8
T_CEILING = 1e13


def _objective_terms(obj: Objective, x):
    if obj.kind == "linear":
        return float(obj.c @ x), obj.c, np.zeros((x.size, x.size))
    if obj.kind == "quadratic":
        Hx = obj.H @ x
        return float(0.5 * x @ Hx + obj.c @ x), Hx + obj.c, obj.H
    raise ValueError("reference solver supports linear and quadratic objectives")


def _constraint_terms(omega: ConstraintSet, x):
    """Values h_i(x) and gradient rows for every constraint."""
    vals = omega.values(x)
    grads = []
    if len(omega.linear):
        grads.append(omega._A)
    if len(omega.quadratic):
        grads.append(np.einsum("kij,j->ki", omega._P, x) + omega._q)
    G = np.vstack(grads)
    return vals, G


def _barrier_value(omega, obj, x, t):
    vals = omega.values(x)
    if vals.max() >= 0:
        return math.inf
    return t * _objective_terms(obj, x)[0] - np.log(-vals).sum()


def _centering(omega: ConstraintSet, obj: Objective, x, t,
               lambda_tol=1e-10, max_steps=80):
    """Newton minimization of the barrier-augmented objective at fixed t."""
    ml = len(omega.linear)
    for _ in range(max_steps):
        vals, G = _constraint_terms(omega, x)
        f_val, f_grad, f_hess = _objective_terms(obj, x)
        inv = -1.0 / vals                                   # positive
        grad = t * f_grad + G.T @ inv
        H = t * f_hess + (G * (inv ** 2)[:, None]).T @ G
        if len(omega.quadratic):
            H = H + np.einsum("k,kij->ij", inv[ml:], omega._P)
        try:
            d = np.linalg.solve(H, -grad)
            decrement = float(-grad @ d)
            if decrement < 0:                               # not a descent direction
                raise np.linalg.LinAlgError
        except np.linalg.LinAlgError:
            d = -grad / max(np.linalg.norm(grad), 1.0)
            decrement = float(-grad @ d)
        if decrement / 2.0 <= lambda_tol * (1.0 + abs(t * f_val)):
            break
        base = t * f_val - np.log(-vals).sum()
        step = 1.0
        accepted = False
        for _ in range(70):
            cand = x + step * d
            cand_vals = omega.values(cand)
            if cand_vals.max() < 0:
                cand_obj = t * _objective_terms(obj, cand)[0] - np.log(-cand_vals).sum()
                if cand_obj <= base - 0.25 * step * decrement:
                    x = cand
                    accepted = True
                    break
            step *= 0.5
        if not accepted:
            break
    return x


def barrier_reference_solve(problem: BenchProblem, gap_tol: float = GAP_TOL,
                            t_init: float = 1.0, mu: float = 10.0
                            ) -> tuple[np.ndarray, float]:
    """Feasible minimizer with certificate m/t <= gap_tol * (1 + |value|).

    The t-schedule multiplies by mu from t_init up to at least 1e8 and keeps
    going until the certificate holds (there is no point stopping earlier
    when the optimal value is small).
    """
    omega = problem.omega
    if omega.interior_point is None:
        find_interior_point(omega)
    x = omega.interior_point
    m = omega.n_constraints
    t = t_init
    while True:
        x = _centering(omega, problem.objective, x, t)
        value = _objective_terms(problem.objective, x)[0]
        if t >= T_FLOOR and m / t <= gap_tol * (1.0 + abs(value)):
            break
        if t > T_CEILING:
            raise DivergenceError(
                f"barrier certificate unreachable (t={t:.1e}, gap {m / t:.3e})")
        t *= mu
    problem.reference_solution = x.copy()
    problem.reference_value = float(value)
    return x, float(value)


# -- brute-force grid oracle ---------------------------------------------------


def _probe_box(omega: ConstraintSet, n_dirs: int = 720):
    """Axis-aligned box around boundary points probed from the interior point."""
    p = omega.interior_point
    angles = np.linspace(0.0, 2.0 * math.pi, n_dirs, endpoint=False)
    dirs = np.stack([np.cos(angles), np.sin(angles)], axis=1)
    alpha, _ = omega.ray_bounds_batch(p, dirs)
    if not np.all(np.isfinite(alpha)):
        raise ValueError("grid oracle needs a bounded set")
    pts = p + alpha[:, None] * dirs
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    pad = 0.05 * (hi - lo) + 1e-9
    return lo - pad, hi + pad


def grid_reference_2d(problem: BenchProblem, points: int = 2001, stages: int = 3,
                      feas_tol: float = 1e-9, chunk: int = 250_000
                      ) -> tuple[np.ndarray, float]:
    """Minimum over feasible grid points, zoomed over `stages` rounds.

    Each round lays a points x points uniform grid over the current box,
    keeps the feasible points whose value is within one grid-cell worth of
    objective variation of the incumbent, and shrinks the box onto them.
    """
    omega = problem.omega
    if omega.dim != 2:
        raise ValueError("grid oracle is 2-D only")
    if omega.interior_point is None:
        find_interior_point(omega)
    lo, hi = _probe_box(omega)
    best_x, best_v = omega.interior_point, math.inf
    for _ in range(stages):
        xs = np.linspace(lo[0], hi[0], points)
        ys = np.linspace(lo[1], hi[1], points)
        h = max(xs[1] - xs[0], ys[1] - ys[0])
        vmin, argmin_pt = math.inf, None
        kept_lo = np.array([math.inf, math.inf])
        kept_hi = np.array([-math.inf, -math.inf])
        vals_rows = []
        feas_rows = []
        # Chunk so the (points, m)-sized scratch arrays stay small.
        rows_per_chunk = max(1, chunk // max(points * omega.n_constraints, points))
        for start in range(0, points, rows_per_chunk):
            yy = ys[start:start + rows_per_chunk]
            X = np.stack(np.meshgrid(xs, yy, indexing="xy"), axis=-1).reshape(-1, 2)
            feas = omega.values_batch(X).max(axis=1) <= feas_tol
            vals = np.where(feas, eval_objective_batch(problem.objective, X)[0], math.inf)
            vals_rows.append(vals)
            feas_rows.append(feas)
            i = int(np.argmin(vals))
            if vals[i] < vmin:
                vmin, argmin_pt = float(vals[i]), X[i]
        if argmin_pt is None or not math.isfinite(vmin):
            raise ValueError("no feasible grid point; grid too coarse or set too thin")
        grad_norm = float(np.linalg.norm(
            eval_objective_batch(problem.objective, argmin_pt[None, :])[1][0]))
        keep_slack = max(grad_norm, 1.0) * h * 8.0
        for start, vals, feas in zip(range(0, points, rows_per_chunk),
                                     vals_rows, feas_rows):
            yy = ys[start:start + rows_per_chunk]
            keep = feas & (vals <= vmin + keep_slack)
            if keep.any():
                X = np.stack(np.meshgrid(xs, yy, indexing="xy"), axis=-1).reshape(-1, 2)
                pts = X[keep]
                kept_lo = np.minimum(kept_lo, pts.min(axis=0))
                kept_hi = np.maximum(kept_hi, pts.max(axis=0))
        if vmin < best_v:
            best_v, best_x = vmin, argmin_pt
        lo = kept_lo - 2.0 * h
        hi = kept_hi + 2.0 * h
    return best_x, best_v
