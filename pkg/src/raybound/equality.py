"""Elimination of linear equality constraints by variable substitution.

Given Qx = e, every solution is x = Rw + u where u is a particular solution
and the columns of R span the null space of Q.  Inequality constraints are
rewritten over the reduced variable w; solutions are lifted back with the
same (R, u) pair.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .constraints import (ConstraintSet, LinearConstraint, QuadraticConstraint,
                          constraint_set_from_dict, constraint_set_to_dict)
from .exceptions import InfeasibleSetError

DEFAULT_RANK_TOL = 1e-10
_ZERO_ROW_TOL = 1e-10


@dataclass(frozen=True)
class EqualitySystem:
    """Linear equalities Qx = e."""

    Q: np.ndarray
    e: np.ndarray

    def __post_init__(self):
        Q = np.atleast_2d(np.asarray(self.Q, dtype=float))
        e = np.asarray(self.e, dtype=float).reshape(-1)
        if Q.shape[0] != e.shape[0]:
            raise ValueError("Q and e disagree on the number of equations")
        if Q.shape[0] < 1:
            raise ValueError("need at least one equality")
        if not (np.all(np.isfinite(Q)) and np.all(np.isfinite(e))):
            raise ValueError("equality system has non-finite entries")
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "e", e)

    @property
    def dim(self) -> int:
        return self.Q.shape[1]


@dataclass(frozen=True)
class EqualityReduction:
    """Substitution x = Rw + u with orthonormal kernel basis R."""

    R: np.ndarray
    u: np.ndarray
    delta: int
    residual: float

    @property
    def dim(self) -> int:
        return self.u.shape[0]


def particular_solution(sys: EqualitySystem) -> tuple[np.ndarray, float]:
    """Minimum-norm least-squares solution u of Qu = e, with its residual.

    A nonzero residual (relative to 1 + |e|) means the equalities are
    inconsistent and the feasible set is empty.
    """
    u = np.linalg.lstsq(sys.Q, sys.e, rcond=None)[0]
    residual = float(np.linalg.norm(sys.Q @ u - sys.e))
    return u, residual


def kernel_basis(sys: EqualitySystem, rank_tol: float = DEFAULT_RANK_TOL) -> np.ndarray:
    """Orthonormal basis of the null space of Q via SVD.

    Columns of V whose singular value is at most rank_tol * sigma_max are
    kept (all of them when Q = 0).
    """
    if rank_tol <= 0:
        raise ValueError("rank_tol must be positive")
    n = sys.dim
    _, s, Vt = np.linalg.svd(sys.Q)
    sv = np.zeros(n)
    sv[:s.shape[0]] = s
    smax = sv.max(initial=0.0)
    mask = sv <= rank_tol * smax if smax > 0 else np.ones(n, dtype=bool)
    return Vt.T[:, mask]


def reduce(sys: EqualitySystem, rank_tol: float = DEFAULT_RANK_TOL) -> EqualityReduction:
    """Build the (R, u) substitution for Qx = e.

    Raises InfeasibleSetError when the equalities are inconsistent.
    """
    u, residual = particular_solution(sys)
    if residual > 1e-8 * (1.0 + float(np.linalg.norm(sys.e))):
        raise InfeasibleSetError(
            f"equality system is inconsistent (residual {residual:.3e}); the set is empty")
    R = kernel_basis(sys, rank_tol)
    red = EqualityReduction(R=R, u=u, delta=R.shape[1], residual=residual)
    _validate(sys, red)
    return red


def _validate(sys, red):
    qscale = max(float(np.abs(sys.Q).max()), 1.0)
    if red.delta and np.abs(sys.Q @ red.R).max() > 1e-9 * qscale:
        raise ValueError("kernel basis does not annihilate Q")
    gram = red.R.T @ red.R
    if red.delta and np.abs(gram - np.eye(red.delta)).max() > 1e-10:
        raise ValueError("kernel basis is not orthonormal")


def reduce_linear(A, b, red: EqualityReduction) -> tuple[np.ndarray, np.ndarray]:
    """Transform Ax <= b into Bw <= t with B = AR, t = b - Au.

    Rows with numerically zero B are dropped when automatically satisfied
    (t >= 0), and signal infeasibility otherwise.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.asarray(b, dtype=float).reshape(-1)
    if A.shape[0] != b.shape[0] or A.shape[1] != red.dim:
        raise ValueError("inconsistent reduction dimensions")
    B = A @ red.R
    t = b - A @ red.u
    row_scale = np.maximum(np.abs(A).max(axis=1), 1.0)
    zero = (np.abs(B).max(axis=1, initial=0.0) <= _ZERO_ROW_TOL * row_scale)
    if np.any(zero & (t < 0)):
        worst = float(t[zero].min())
        raise InfeasibleSetError(
            f"constraint contradicts the equalities (reduced slack {worst:.3e})")
    keep = ~zero
    return B[keep], t[keep]


def reduce_quadratic(c: QuadraticConstraint, red: EqualityReduction) -> QuadraticConstraint | None:
    """Substitute x = Rw + u into 0.5 x'Px + q.x <= b.

    Returns the constraint over w, or None when it no longer involves w and
    holds automatically.  Raises InfeasibleSetError when it cannot hold.
    """
    if c.dim != red.dim:
        raise ValueError("inconsistent reduction dimensions")
    R, u = red.R, red.u
    Pu_q = c.P @ u + c.q
    P_new = R.T @ c.P @ R
    q_new = R.T @ Pu_q
    b_new = c.b - c.q @ u - 0.5 * u @ c.P @ u
    scale = max(float(np.abs(c.P).max(initial=0.0)), float(np.abs(c.q).max(initial=0.0)), 1.0)
    degenerate = (red.delta == 0
                  or (np.abs(P_new).max(initial=0.0) <= _ZERO_ROW_TOL * scale
                      and np.abs(q_new).max(initial=0.0) <= _ZERO_ROW_TOL * scale))
    if degenerate:
        if b_new < 0:
            raise InfeasibleSetError(
                f"quadratic constraint contradicts the equalities (slack {-b_new:.3e})")
        return None
    return QuadraticConstraint(P_new, q_new, b_new)


def lift(red: EqualityReduction, w) -> np.ndarray:
    """Map a reduced point back: x = Rw + u."""
    w = np.asarray(w, dtype=float)
    if w.shape[-1:] != (red.delta,) and not (red.delta == 0 and w.size == 0):
        raise ValueError(f"w must have dimension {red.delta}")
    if red.delta == 0:
        return red.u.copy()
    return w @ red.R.T + red.u


def reduce_constraint_set(omega: ConstraintSet, sys: EqualitySystem,
                          rank_tol: float = DEFAULT_RANK_TOL
                          ) -> tuple[ConstraintSet, EqualityReduction]:
    """Reduce a full constraint set against Qx = e.

    The reduced set lives in the kernel coordinates; no interior point is
    attached (callers search for one in the reduced space).
    """
    if omega.dim != sys.dim:
        raise ValueError("constraint set and equality system dimensions differ")
    red = reduce(sys, rank_tol)
    if red.delta == 0:
        raise InfeasibleSetError(
            "equalities pin a single point; nothing left to parameterize")
    linear = []
    if omega.linear:
        A = np.stack([c.a for c in omega.linear])
        b = np.array([c.b for c in omega.linear])
        B, t = reduce_linear(A, b, red)
        linear = [LinearConstraint(B[i], t[i]) for i in range(B.shape[0])]
    quadratic = []
    for c in omega.quadratic:
        rc = reduce_quadratic(c, red)
        if rc is not None:
            quadratic.append(rc)
    if not linear and not quadratic:
        raise ValueError("every constraint reduced away; the kernel space is unconstrained")
    return ConstraintSet(red.delta, linear, quadratic), red


# -- file interface ----------------------------------------------------------


def equality_system_from_dict(d: dict) -> EqualitySystem:
    return EqualitySystem(np.asarray(d["Q"], dtype=float), np.asarray(d["e"], dtype=float))


def reduce_constraint_file(in_path, out_path, sidecar_path,
                           rank_tol: float = DEFAULT_RANK_TOL) -> None:
    """Reduce a constraint-set JSON carrying an "equality" entry.

    Writes the reduced constraint-set JSON and a {"R", "u"} sidecar used to
    lift reduced solutions back to the original space.
    """
    with open(in_path, encoding="utf-8") as fh:
        payload = json.load(fh)
    if "equality" not in payload or payload["equality"] is None:
        raise ValueError("input file has no equality block")
    omega = constraint_set_from_dict(payload)
    sys = equality_system_from_dict(payload["equality"])
    reduced, red = reduce_constraint_set(omega, sys, rank_tol)
    with open(out_path, "w", encoding="utf-8") as fh:
        json.dump(constraint_set_to_dict(reduced), fh, indent=2)
        fh.write("\n")
    with open(sidecar_path, "w", encoding="utf-8") as fh:
        json.dump({"R": red.R.tolist(), "u": red.u.tolist()}, fh, indent=2)
        fh.write("\n")
