"""Convex constraint sets and exact ray-boundary intersection bounds.

A constraint set is an intersection of halfspaces a.x <= b and convex
quadratic regions 0.5 x'Px + q.x <= b (P symmetric PSD).  From a strictly
interior point p, the largest feasible step along any ray r has a closed
form per constraint; the set-level bound is the minimum over constraints.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .exceptions import InfeasibleSetError

# Feasibility tolerances: squared terms amplify roundoff, so sets with
# quadratic constraints get the looser default.
LINEAR_FEAS_TOL = 1e-9
QUAD_FEAS_TOL = 1e-7

# Slack required of a stored interior point.
INTERIOR_MARGIN = 1e-7

_SYM_RTOL = 1e-12
_PSD_RTOL = 1e-10


def _as_vector(x, dim=None, name="x"):
    v = np.asarray(x, dtype=float)
    if v.ndim != 1:
        raise ValueError(f"{name} must be a 1-D vector, got shape {v.shape}")
    if dim is not None and v.shape[0] != dim:
        raise ValueError(f"{name} has dimension {v.shape[0]}, expected {dim}")
    return v


@dataclass(frozen=True)
class LinearConstraint:
    """Halfspace a.x <= b."""

    a: np.ndarray
    b: float

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float)
        if a.ndim != 1:
            raise ValueError("normal vector must be 1-D")
        if not np.all(np.isfinite(a)) or not math.isfinite(self.b):
            raise ValueError("linear constraint has non-finite entries")
        if not np.any(a):
            raise ValueError("normal vector must be nonzero")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", float(self.b))

    @property
    def dim(self) -> int:
        return self.a.shape[0]

    def value(self, x) -> float:
        """h(x) = a.x - b; feasible iff <= 0."""
        return float(self.a @ _as_vector(x, self.dim) - self.b)


@dataclass(frozen=True)
class QuadraticConstraint:
    """Convex region 0.5 x'Px + q.x <= b with P symmetric positive semidefinite."""

    P: np.ndarray
    q: np.ndarray
    b: float

    def __post_init__(self):
        P = np.asarray(self.P, dtype=float)
        q = np.asarray(self.q, dtype=float)
        if P.ndim != 2 or P.shape[0] != P.shape[1]:
            raise ValueError("P must be square")
        if q.ndim != 1 or q.shape[0] != P.shape[0]:
            raise ValueError("q must match the dimension of P")
        if not (np.all(np.isfinite(P)) and np.all(np.isfinite(q)) and math.isfinite(self.b)):
            raise ValueError("quadratic constraint has non-finite entries")
        scale = np.abs(P).max() if P.size else 0.0
        if P.size and np.abs(P - P.T).max() > _SYM_RTOL * max(scale, 1.0):
            raise ValueError("P must be symmetric")
        P = 0.5 * (P + P.T)
        if P.size:
            eigs = np.linalg.eigvalsh(P)
            if eigs[0] < -_PSD_RTOL * max(eigs[-1], 0.0) and eigs[0] < -_PSD_RTOL:
                raise ValueError(f"P is not positive semidefinite (min eigenvalue {eigs[0]:.3e})")
        object.__setattr__(self, "P", P)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "b", float(self.b))

    @property
    def dim(self) -> int:
        return self.q.shape[0]

    def value(self, x) -> float:
        """h(x) = 0.5 x'Px + q.x - b; feasible iff <= 0."""
        xv = _as_vector(x, self.dim)
        return float(0.5 * xv @ self.P @ xv + self.q @ xv - self.b)


@dataclass(frozen=True)
class RayBound:
    """Largest feasible step along a ray; infinite when the ray never exits."""

    value: float
    active_index: int | None = None

    def __post_init__(self):
        if self.value < 0:
            raise ValueError("ray bound must be nonnegative")
        if math.isfinite(self.value) != (self.active_index is not None):
            raise ValueError("active_index must be set exactly for finite bounds")

    @property
    def finite(self) -> bool:
        return math.isfinite(self.value)


class ConstraintSet:
    """Intersection of linear and quadratic constraints, immutable once built.

    Constraint storage order is linear first, then quadratic; indices into
    that order identify active constraints.  An interior point, when present,
    must satisfy every constraint with slack at least INTERIOR_MARGIN.
    """

    def __init__(self, dim, linear=(), quadratic=(), interior_point=None):
        self._dim = int(dim)
        if self._dim < 1:
            raise ValueError("dimension must be positive")
        self._linear = tuple(linear)
        self._quadratic = tuple(quadratic)
        if not self._linear and not self._quadratic:
            raise ValueError("constraint set needs at least one constraint")
        for c in self._linear:
            if not isinstance(c, LinearConstraint) or c.dim != self._dim:
                raise ValueError("bad linear constraint")
        for c in self._quadratic:
            if not isinstance(c, QuadraticConstraint) or c.dim != self._dim:
                raise ValueError("bad quadratic constraint")

        n = self._dim
        self._A = (np.stack([c.a for c in self._linear])
                   if self._linear else np.zeros((0, n)))
        self._bl = np.array([c.b for c in self._linear], dtype=float)
        self._P = (np.stack([c.P for c in self._quadratic])
                   if self._quadratic else np.zeros((0, n, n)))
        self._q = (np.stack([c.q for c in self._quadratic])
                   if self._quadratic else np.zeros((0, n)))
        self._bq = np.array([c.b for c in self._quadratic], dtype=float)

        self._interior = None
        self._ray_cache = None
        if interior_point is not None:
            self._set_interior(interior_point)

    # -- basic introspection -------------------------------------------------

    @property
    def dim(self) -> int:
        return self._dim

    @property
    def linear(self) -> tuple[LinearConstraint, ...]:
        return self._linear

    @property
    def quadratic(self) -> tuple[QuadraticConstraint, ...]:
        return self._quadratic

    @property
    def n_constraints(self) -> int:
        return len(self._linear) + len(self._quadratic)

    @property
    def interior_point(self) -> np.ndarray | None:
        return None if self._interior is None else self._interior.copy()

    @property
    def default_tol(self) -> float:
        return QUAD_FEAS_TOL if self._quadratic else LINEAR_FEAS_TOL

    def constraint(self, index: int):
        """Constraint by flat index (linear block first)."""
        ml = len(self._linear)
        return self._linear[index] if index < ml else self._quadratic[index - ml]

    def _set_interior(self, p):
        p = _as_vector(p, self._dim, "interior_point")
        worst = float(self.values(p).max())
        if worst > -INTERIOR_MARGIN:
            raise InfeasibleSetError(
                f"interior point violates the margin: max constraint value {worst:.3e}")
        self._interior = p.copy()
        self._ray_cache = None

    # -- evaluation ----------------------------------------------------------

    def values(self, x) -> np.ndarray:
        """All constraint values h_i(x), linear block first."""
        return self.values_batch(_as_vector(x, self._dim)[None, :])[0]

    def values_batch(self, X) -> np.ndarray:
        """Constraint values for rows of X; returns (batch, m)."""
        X = np.asarray(X, dtype=float)
        parts = []
        if len(self._linear):
            parts.append(X @ self._A.T - self._bl)
        if len(self._quadratic):
            PX = np.einsum("kij,bj->bki", self._P, X)
            quad = 0.5 * np.einsum("bki,bi->bk", PX, X)
            parts.append(quad + X @ self._q.T - self._bq)
        return np.concatenate(parts, axis=1) if len(parts) > 1 else parts[0]

    # -- ray bounds ----------------------------------------------------------

    def _ray_terms(self, p):
        """Cache the p-dependent pieces of the per-constraint bound formulas."""
        if self._ray_cache is not None and np.array_equal(self._ray_cache[0], p):
            return self._ray_cache[1]
        slack_lin = self._bl - self._A @ p                      # b - a.p > 0
        Pp = np.einsum("kij,j->ki", self._P, p)
        Pp_q = Pp + self._q                                     # P p + q
        kappa = self._q @ p + 0.5 * Pp @ p - self._bq           # h_quad(p) < 0
        terms = (slack_lin, Pp_q, kappa)
        self._ray_cache = (p.copy(), terms)
        return terms

    def ray_bounds_batch(self, p, R):
        """Largest feasible steps from p along each row of R.

        Returns (alpha, active) with alpha (batch,) possibly infinite and
        active (batch,) the first argmin constraint index (-1 when infinite).
        """
        p = _as_vector(p, self._dim, "p")
        R = np.asarray(R, dtype=float)
        squeeze = R.ndim == 1
        if squeeze:
            R = R[None, :]
        slack_lin, Pp_q, kappa = self._ray_terms(p)
        if (slack_lin <= 0).any() or (kappa >= 0).any():
            raise InfeasibleSetError("p is not strictly inside every constraint")

        cols = []
        if len(self._linear):
            denom = R @ self._A.T                               # (B, mL)
            with np.errstate(divide="ignore"):
                alpha_lin = np.where(denom > 0.0, slack_lin / np.where(denom > 0, denom, 1.0),
                                     np.inf)
            cols.append(alpha_lin)
        if len(self._quadratic):
            PR = np.einsum("kij,bj->bki", self._P, R)
            gamma = np.einsum("bki,bi->bk", PR, R)              # r'Pr >= 0
            scale = (np.abs(self._P).max(axis=(1, 2)) if self._P.size else 0.0)
            floor = -_PSD_RTOL * np.maximum(scale * (R ** 2).sum(axis=1)[:, None], 1.0)
            if (gamma < floor).any():
                raise ValueError("negative ray curvature: quadratic constraint is not PSD")
            gamma = np.maximum(gamma, 0.0)
            beta = R @ Pp_q.T                                   # p'Pr + q.r
            disc = np.sqrt(beta ** 2 - 2.0 * gamma * kappa)
            # Larger root of gamma a^2 + 2 beta a + 2 kappa = 0.  For beta > 0
            # use the cancellation-free form -2 kappa / (beta + sqrt(D/4)),
            # which also covers the degenerate linear case gamma = 0.
            with np.errstate(divide="ignore", invalid="ignore"):
                stable = -2.0 * kappa / (beta + disc)
                direct = (disc - beta) / gamma
            alpha_quad = np.where(beta > 0.0, stable,
                                  np.where(gamma > 0.0, direct, np.inf))
            cols.append(alpha_quad)

        alphas = np.concatenate(cols, axis=1) if len(cols) > 1 else cols[0]
        alpha = alphas.min(axis=1)
        active = np.where(np.isfinite(alpha), np.argmin(alphas, axis=1), -1)
        if squeeze:
            return alpha[0], active[0]
        return alpha, active


# -- module-level operations ------------------------------------------------


def eval_constraint(c, x) -> float:
    """Value h(x) of a single constraint; satisfied iff <= 0."""
    return c.value(x)


def ray_bound_linear(c: LinearConstraint, p, r) -> RayBound:
    """Step from p along r to the hyperplane a.x = b, or infinity.

    The ray only meets the boundary when a.r > 0; otherwise it runs parallel
    or inward and the bound is infinite.
    """
    p = _as_vector(p, c.dim, "p")
    r = _as_vector(r, c.dim, "r")
    slack = c.b - c.a @ p
    if slack <= 0:
        raise InfeasibleSetError("p is not strictly inside the constraint")
    denom = c.a @ r
    if denom <= 0:
        return RayBound(math.inf)
    return RayBound(float(slack / denom), active_index=0)


def ray_bound_quadratic(c: QuadraticConstraint, p, r) -> RayBound:
    """Step from p along r to the quadric boundary, or infinity.

    Solves gamma a^2 + 2 beta a + 2 kappa = 0 for the larger root, where
    gamma = r'Pr, beta = p'Pr + q.r and kappa = h(p) < 0.  When gamma = 0 the
    equation is linear with root -kappa/beta, infinite unless beta > 0.
    """
    p = _as_vector(p, c.dim, "p")
    r = _as_vector(r, c.dim, "r")
    kappa = c.value(p)
    if kappa >= 0:
        raise InfeasibleSetError("p is not strictly inside the constraint")
    Pr = c.P @ r
    gamma = float(r @ Pr)
    scale = max(float(np.abs(c.P).max()) * float(r @ r), 1.0) if c.P.size else 1.0
    if gamma < -_PSD_RTOL * scale:
        raise ValueError("negative ray curvature: quadratic constraint is not PSD")
    gamma = max(gamma, 0.0)
    beta = float(p @ Pr + c.q @ r)
    disc = math.sqrt(beta * beta - 2.0 * gamma * kappa)
    if beta > 0:
        return RayBound(-2.0 * kappa / (beta + disc), active_index=0)
    if gamma > 0:
        return RayBound((disc - beta) / gamma, active_index=0)
    return RayBound(math.inf)


def system_ray_bound(omega: ConstraintSet, p, r) -> RayBound:
    """Minimum per-constraint bound; ties go to the lowest storage index."""
    alpha, active = omega.ray_bounds_batch(p, _as_vector(r, omega.dim, "r"))
    if not math.isfinite(alpha):
        return RayBound(math.inf)
    return RayBound(float(alpha), active_index=int(active))


def is_feasible(omega: ConstraintSet, x, tol: float | None = None) -> bool:
    """True iff every constraint value at x is <= tol."""
    if tol is None:
        tol = omega.default_tol
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    return bool(omega.values(x).max() <= tol)


def find_interior_point(omega: ConstraintSet, margin: float = 1e-6,
                        max_iters: int = 10_000) -> np.ndarray:
    """Find p with max_i h_i(p) <= -margin and store it on the set.

    Subgradient descent on the convex function phi(x) = max_i h_i(x),
    starting from the origin with step 1/sqrt(t).  Each step is backtracked
    while it fails to decrease phi; if backtracking stalls (a kink), the
    plain diminishing step is taken anyway and the best iterate is kept.
    """
    if margin <= 0:
        raise ValueError("margin must be positive")
    n = omega.dim
    x = np.zeros(n)
    phi, idx = _max_constraint(omega, x)
    best_x, best_phi = x.copy(), phi
    t = 0
    while best_phi > -margin and t < max_iters:
        t += 1
        g = _constraint_gradient(omega, x, idx)
        gn = float(np.linalg.norm(g))
        if gn == 0.0:
            # Stationary for the worst constraint alone; nudge off the kink.
            g = np.cos(1.0 + t + np.arange(n))
            gn = float(np.linalg.norm(g))
        d = -g / gn
        step = 1.0 / math.sqrt(t)
        accepted = False
        s = step
        for _ in range(30):
            cand = x + s * d
            phi_c, idx_c = _max_constraint(omega, cand)
            if phi_c < phi:
                x, phi, idx = cand, phi_c, idx_c
                accepted = True
                break
            s *= 0.5
        if not accepted:
            x = x + step * d
            phi, idx = _max_constraint(omega, x)
        if phi < best_phi:
            best_phi, best_x = phi, x.copy()
    if best_phi > -margin:
        raise InfeasibleSetError(
            f"no interior point with margin {margin:g} found in {max_iters} iterations "
            f"(best slack {-best_phi:.3e}); the set may be empty or too thin")
    omega._set_interior(best_x)
    return best_x


def _max_constraint(omega, x):
    vals = omega.values(x)
    idx = int(np.argmax(vals))
    return float(vals[idx]), idx


def _constraint_gradient(omega, x, index):
    ml = len(omega.linear)
    if index < ml:
        return omega.linear[index].a.copy()
    c = omega.quadratic[index - ml]
    return c.P @ x + c.q


# -- JSON schema -------------------------------------------------------------


def constraint_set_to_dict(omega: ConstraintSet) -> dict:
    p = omega.interior_point
    return {
        "dim": omega.dim,
        "linear": [{"a": c.a.tolist(), "b": c.b} for c in omega.linear],
        "quadratic": [{"P": c.P.tolist(), "q": c.q.tolist(), "b": c.b}
                      for c in omega.quadratic],
        "interior_point": None if p is None else p.tolist(),
    }


def constraint_set_from_dict(d: dict) -> ConstraintSet:
    linear = [LinearConstraint(np.asarray(e["a"], dtype=float), float(e["b"]))
              for e in d.get("linear", [])]
    quadratic = [QuadraticConstraint(np.asarray(e["P"], dtype=float),
                                     np.asarray(e["q"], dtype=float), float(e["b"]))
                 for e in d.get("quadratic", [])]
    return ConstraintSet(d["dim"], linear, quadratic,
                         interior_point=d.get("interior_point"))


def save_constraint_set(path, omega: ConstraintSet) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(constraint_set_to_dict(omega), fh, indent=2)
        fh.write("\n")


def load_constraint_set(path) -> ConstraintSet:
    with open(path, encoding="utf-8") as fh:
        return constraint_set_from_dict(json.load(fh))
