"""Independent test oracles: bisection, finite differences, brute force.

These deliberately avoid the closed forms and analytic gradients they are
used to check.
"""

from __future__ import annotations

import math

import numpy as np

from raybound.constraints import ConstraintSet


def bisect_ray_bound(omega: ConstraintSet, p, r, t_cap: float = 1e9,
                     iters: int = 100) -> float:
    """Feasibility boundary along p + t*r found by doubling and bisection."""
    p = np.asarray(p, dtype=float)
    r = np.asarray(r, dtype=float)

    def feasible(t):
        return omega.values(p + t * r).max() <= 0.0

    hi = 1.0
    while feasible(hi):
        hi *= 2.0
        if hi > t_cap:
            return math.inf
    lo = 0.0
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if feasible(mid):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def central_diff_gradient(f, x, step: float = 1e-6) -> np.ndarray:
    """Central finite-difference gradient of a scalar function."""
    x = np.asarray(x, dtype=float)
    g = np.zeros_like(x)
    for j in range(x.size):
        xp, xm = x.copy(), x.copy()
        xp[j] += step
        xm[j] -= step
        g[j] = (f(xp) - f(xm)) / (2.0 * step)
    return g


def central_diff_jacobian(f, x, m: int, step: float = 1e-6) -> np.ndarray:
    """Central finite-difference Jacobian of a vector function (m outputs)."""
    x = np.asarray(x, dtype=float)
    J = np.zeros((m, x.size))
    for j in range(x.size):
        xp, xm = x.copy(), x.copy()
        xp[j] += step
        xm[j] -= step
        J[:, j] = (np.asarray(f(xp)) - np.asarray(f(xm))) / (2.0 * step)
    return J


def rel_gap(analytic, numeric, floor: float = 1e-8) -> float:
    """Max-norm relative disagreement between two gradient arrays."""
    analytic = np.asarray(analytic, dtype=float)
    numeric = np.asarray(numeric, dtype=float)
    denom = max(float(np.abs(numeric).max(initial=0.0)), floor)
    return float(np.abs(analytic - numeric).max(initial=0.0)) / denom


def projected_gradient_norm(problem, x, active_tol: float = 1e-2) -> float:
    """Norm of the gradient minus its blocked outward-normal component.

    Zero at constrained stationary points; constraints within active_tol of
    zero count as active (single active constraint assumed).
    """
    from raybound.net import eval_objective_batch

    omega = problem.omega
    vals = omega.values(x)
    g = eval_objective_batch(problem.objective, x[None, :])[1][0]
    idx = int(np.argmax(vals))
    if vals[idx] < -active_tol:
        return float(np.linalg.norm(g))
    ml = len(omega.linear)
    if idx < ml:
        nu = omega.linear[idx].a.copy()
    else:
        c = omega.quadratic[idx - ml]
        nu = c.P @ x + c.q
    nu = nu / np.linalg.norm(nu)
    gn = float(g @ nu)
    if gn < 0:
        g = g - gn * nu
    return float(np.linalg.norm(g))


def random_mixed_set(rng, n: int, m: int) -> ConstraintSet:
    """Bounded mixed set: random halfspaces plus random PD quadrics.

    Every constraint holds strictly at the origin, and the full-rank
    quadratic part guarantees boundedness whatever the halfspaces do.
    """
    from raybound.constraints import LinearConstraint, QuadraticConstraint

    m_lin = m // 2
    m_quad = max(m - m_lin, 1)
    linear = []
    for _ in range(m_lin):
        a = rng.standard_normal(n)
        linear.append(LinearConstraint(a, float(a @ a) + 1e-3))
    quadratic = []
    for _ in range(m_quad):
        M = rng.standard_normal((n, n)) + 0.3 * np.eye(n)
        quadratic.append(QuadraticConstraint(2.0 * (M.T @ M + 1e-3 * np.eye(n)) / np.sqrt(n),
                                             rng.standard_normal(n),
                                             float(rng.uniform(0.5, 2.0))))
    return ConstraintSet(n, linear, quadratic, interior_point=np.zeros(n))
