"""Random constrained-problem generation with verified boundedness.

Linear sets take normals a_i from a standard normal and offsets b_i = a_i.a_i,
so each hyperplane passes through its own normal and the origin is strictly
interior.  Quadratic sets draw PSD matrices and a positive feasibility margin
at the origin.  Boundedness is enforced by probing rays from the origin and
regenerating on failure.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from ..constraints import (ConstraintSet, LinearConstraint, QuadraticConstraint,
                           constraint_set_from_dict, constraint_set_to_dict)
from ..exceptions import InfeasibleSetError
from ..net import Objective


@dataclass
class BenchProblem:
    objective: Objective
    omega: ConstraintSet
    seed: int
    reference_solution: np.ndarray | None = None
    reference_value: float | None = None


def _probe_bounded(omega: ConstraintSet, rng, n_random: int) -> bool:
    """True iff every probe ray from the interior point has a finite bound."""
    n = omega.dim
    dirs = rng.standard_normal((n_random, n))
    dirs = np.vstack([dirs, np.eye(n), -np.eye(n)])
    alpha, _ = omega.ray_bounds_batch(omega.interior_point, dirs)
    return bool(np.all(np.isfinite(alpha)))


def _gen_objective(loss_kind: str, n: int, rng) -> Objective:
    if loss_kind == "linear":
        return Objective.linear(rng.standard_normal(n))
    if loss_kind == "quadratic":
        G = rng.standard_normal((n, n))
        return Objective.quadratic(G.T @ G / np.sqrt(n), rng.standard_normal(n))
    raise ValueError(f"unknown loss kind {loss_kind!r}")


def gen_linear_problem(n: int, m: int, seed: int,
                       loss_kind: str = "linear") -> BenchProblem:
    """Random problem over a bounded polytope containing the origin."""
    if n < 1 or m < 1:
        raise ValueError("n and m must be positive")
    for attempt in range(10):
        rng = np.random.default_rng(np.random.SeedSequence([0x11, seed, attempt]))
        A = rng.standard_normal((m, n))
        b = np.einsum("ij,ij->i", A, A)
        omega = ConstraintSet(n, [LinearConstraint(A[i], b[i]) for i in range(m)],
                              interior_point=np.zeros(n))
        objective = _gen_objective(loss_kind, n, rng)
        if _probe_bounded(omega, rng, 100 * n):
            return BenchProblem(objective=objective, omega=omega, seed=seed)
    raise InfeasibleSetError(
        f"could not generate a bounded polytope with n={n}, m={m} after 10 tries")


def gen_quadratic_problem(n: int, m: int, seed: int,
                          loss_kind: str = "linear") -> BenchProblem:
    """Random problem over an intersection of PSD quadratic regions.

    Constraints are generated as x'Px + q.x <= b (margin b drawn from
    U(0.5, 2) so the origin is strictly inside) and stored in the canonical
    half-quadratic form.
    """
    if n < 1 or m < 1:
        raise ValueError("n and m must be positive")
    for attempt in range(10):
        rng = np.random.default_rng(np.random.SeedSequence([0x22, seed, attempt]))
        quads = []
        for _ in range(m):
            M = rng.standard_normal((n, n))
            P = M.T @ M / np.sqrt(n)
            q = rng.standard_normal(n)
            margin = rng.uniform(0.5, 2.0)
            quads.append(QuadraticConstraint(2.0 * P, q, margin))
        omega = ConstraintSet(n, quadratic=quads, interior_point=np.zeros(n))
        objective = _gen_objective(loss_kind, n, rng)
        bounded = any(np.linalg.eigvalsh(c.P)[0] > 1e-10 for c in quads[:8])
        if bounded or _probe_bounded(omega, rng, 100 * n):
            return BenchProblem(objective=objective, omega=omega, seed=seed)
    raise InfeasibleSetError(
        f"could not generate a bounded quadratic set with n={n}, m={m} after 10 tries")


def generate(constraint_kind: str, n: int, m: int, seed: int,
             loss_kind: str = "linear") -> BenchProblem:
    if constraint_kind == "linear":
        return gen_linear_problem(n, m, seed, loss_kind)
    if constraint_kind == "quadratic":
        return gen_quadratic_problem(n, m, seed, loss_kind)
    raise ValueError(f"unknown constraint kind {constraint_kind!r}")


# -- problem files -------------------------------------------------------------


def objective_to_dict(obj: Objective) -> dict:
    d: dict = {"kind": obj.kind}
    if obj.c is not None:
        d["c"] = obj.c.tolist()
    if obj.H is not None:
        d["H"] = obj.H.tolist()
    if obj.target is not None:
        d["target"] = obj.target.tolist()
    if obj.kind == "lp_distance":
        d["p_norm"] = obj.p_norm
    if obj.kind == "hinge":
        d["margin"] = obj.margin
    return d


def objective_from_dict(d: dict) -> Objective:
    kind = d["kind"]
    if kind == "linear":
        return Objective.linear(d["c"])
    if kind == "quadratic":
        return Objective.quadratic(d["H"], d["c"])
    if kind == "rosenbrock":
        return Objective.rosenbrock()
    if kind == "bird":
        return Objective.bird()
    if kind == "cross_entropy":
        return Objective.cross_entropy()
    if kind == "hinge":
        return Objective.hinge(d.get("margin", 1.0))
    if kind == "lp_distance":
        return Objective.lp_distance(d["p_norm"], d["target"])
    raise ValueError(f"unknown objective kind {kind!r}")


def problem_to_dict(problem: BenchProblem) -> dict:
    d = constraint_set_to_dict(problem.omega)
    d["objective"] = objective_to_dict(problem.objective)
    d["seed"] = problem.seed
    return d


def problem_from_dict(d: dict) -> BenchProblem:
    return BenchProblem(objective=objective_from_dict(d["objective"]),
                        omega=constraint_set_from_dict(d),
                        seed=int(d.get("seed", 0)))


def save_problem(path, problem: BenchProblem) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(problem_to_dict(problem), fh, indent=2)
        fh.write("\n")


def load_problem(path) -> BenchProblem:
    with open(path, encoding="utf-8") as fh:
        return problem_from_dict(json.load(fh))
