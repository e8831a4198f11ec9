"""Output layer that maps any (ray, scale) pair to a point of a convex set.

The layer emits x = p + sigmoid(s) * alpha_bar(p, r) * r, where alpha_bar is
the exact step from the interior point p to the boundary along r.  Because
sigmoid(s) stays in [0, 1], the output cannot leave the set, whatever the
inputs.  Gradients with respect to r and s are analytic: the active
constraint's bound formula is differentiated directly (linear case) or via
the implicit function theorem (quadratic case).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constraints import (ConstraintSet, LinearConstraint, QuadraticConstraint,
                          find_interior_point, _as_vector)
from .exceptions import InfeasibleSetError, UnboundedRayError

_TANGENT_RTOL = 1e-12
_BLOCK_ZERO_TOL = 1e-12


def sigmoid(s):
    """Logistic function, stable for large |s|."""
    s = np.asarray(s, dtype=float)
    out = np.empty_like(s)
    pos = s >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-s[pos]))
    es = np.exp(s[~pos])
    out[~pos] = es / (1.0 + es)
    return out if out.ndim else float(out)


class HardLayer:
    """Constrained output layer over a set with a strictly interior point.

    bound_policy "cap" replaces an infinite ray bound with alpha_max (the ray
    never exits the set, so the output stays feasible); "strict" raises
    instead.
    """

    def __init__(self, omega: ConstraintSet, bound_policy: str = "cap",
                 alpha_max: float = 1e8):
        if bound_policy not in ("cap", "strict"):
            raise ValueError("bound_policy must be 'cap' or 'strict'")
        if alpha_max <= 0:
            raise ValueError("alpha_max must be positive")
        if omega.interior_point is None:
            raise ValueError("constraint set has no interior point; "
                             "call find_interior_point first")
        self.omega = omega
        self.p = omega.interior_point
        self.bound_policy = bound_policy
        self.alpha_max = float(alpha_max)

    @property
    def dim(self) -> int:
        return self.omega.dim


@dataclass
class LayerGradients:
    """d_r is (n, n) and d_s is (n,) for a full Jacobian; contracted against
    an upstream vector they collapse to (n,) and a scalar."""

    d_r: np.ndarray
    d_s: np.ndarray | float


@dataclass
class ForwardCache:
    """Per-ray quantities saved by forward for the backward pass."""

    R: np.ndarray          # rays, (B, n)
    s: np.ndarray          # (B,)
    sig: np.ndarray        # sigmoid(s), (B,)
    alpha: np.ndarray      # bound actually used (capped where infinite), (B,)
    capped: np.ndarray     # (B,) bool
    active: np.ndarray     # flat constraint index, -1 where capped, (B,)


def forward_batch(layer: HardLayer, R, s) -> tuple[np.ndarray, ForwardCache]:
    """Layer outputs for rows of R with matching scale parameters s."""
    R = np.atleast_2d(np.asarray(R, dtype=float))
    s = np.asarray(s, dtype=float).reshape(-1)
    if R.shape[0] != s.shape[0]:
        raise ValueError("R and s disagree on batch size")
    if not (np.all(np.isfinite(R)) and np.all(np.isfinite(s))):
        raise ValueError("non-finite layer inputs")
    alpha, active = layer.omega.ray_bounds_batch(layer.p, R)
    capped = ~np.isfinite(alpha)
    if capped.any():
        if layer.bound_policy == "strict":
            raise UnboundedRayError("ray never exits the feasible set")
        alpha = np.where(capped, layer.alpha_max, alpha)
    sig = sigmoid(s)
    X = layer.p + (sig * alpha)[:, None] * R
    return X, ForwardCache(R=R, s=s, sig=np.atleast_1d(sig), alpha=alpha,
                           capped=capped, active=active)


def backward_batch(layer: HardLayer, cache: ForwardCache, upstream
                   ) -> tuple[np.ndarray, np.ndarray]:
    """Gradients of sum(upstream * x) with respect to each ray and scale.

    upstream has shape (B, n); returns (grad_R (B, n), grad_s (B,)).
    """
    U = np.atleast_2d(np.asarray(upstream, dtype=float))
    R, sig, alpha = cache.R, cache.sig, cache.alpha
    u_dot_r = np.einsum("bi,bi->b", U, R)
    dsig = sig * (1.0 - sig)
    grad_s = dsig * alpha * u_dot_r
    grad_R = (sig * alpha)[:, None] * U
    grad_alpha_r = _alpha_gradients(layer, cache)
    grad_R += (sig * u_dot_r)[:, None] * grad_alpha_r
    return grad_R, grad_s


def _alpha_gradients(layer: HardLayer, cache: ForwardCache) -> np.ndarray:
    """d alpha_bar / d r per ray; zero where the bound was capped."""
    omega = layer.omega
    p = layer.p
    R, alpha, active = cache.R, cache.alpha, cache.active
    B, n = R.shape
    out = np.zeros((B, n))
    ml = len(omega.linear)

    lin_rows = np.nonzero((active >= 0) & (active < ml))[0]
    if lin_rows.size:
        A = omega._A[active[lin_rows]]
        a_dot_r = np.einsum("bi,bi->b", A, R[lin_rows])
        out[lin_rows] = -(alpha[lin_rows] / a_dot_r)[:, None] * A
    quad_rows = np.nonzero(active >= ml)[0]
    if quad_rows.size:
        k = active[quad_rows] - ml
        P = omega._P[k]
        q = omega._q[k]
        a = alpha[quad_rows]
        Pr = np.einsum("bij,bj->bi", P, R[quad_rows])
        Pp_q = np.einsum("bij,j->bi", P, p) + q
        gamma = np.einsum("bi,bi->b", Pr, R[quad_rows])
        beta = np.einsum("bi,bi->b", Pp_q, R[quad_rows])
        # Implicit differentiation of gamma a^2 + 2 beta a + 2 kappa = 0.
        denom = gamma * a + beta
        num = (a ** 2)[:, None] * Pr + a[:, None] * Pp_q
        scale = np.maximum.reduce([np.abs(gamma * a), np.abs(beta), np.ones_like(beta)])
        tangent = np.abs(denom) <= _TANGENT_RTOL * scale
        safe = np.where(tangent, 1.0, denom)
        grads = -num / safe[:, None]
        grads[tangent] = 0.0
        out[quad_rows] = grads
    return out


# -- single-ray wrappers -----------------------------------------------------


def forward(layer: HardLayer, r, s: float) -> tuple[np.ndarray, ForwardCache]:
    """Feasible output for one ray; the cache feeds backward/jacobian."""
    r = _as_vector(r, layer.dim, "r")
    X, cache = forward_batch(layer, r[None, :], [float(s)])
    return X[0], cache


def backward(layer: HardLayer, cache: ForwardCache, upstream) -> LayerGradients:
    """Upstream-contracted gradients for a single-ray cache."""
    u = _as_vector(upstream, layer.dim, "upstream")
    gR, gs = backward_batch(layer, cache, u[None, :])
    return LayerGradients(d_r=gR[0], d_s=float(gs[0]))


def jacobian(layer: HardLayer, cache: ForwardCache) -> LayerGradients:
    """Full Jacobian (d x / d r, d x / d s) for a single-ray cache."""
    n = layer.dim
    rep = ForwardCache(R=np.repeat(cache.R, n, axis=0),
                       s=np.repeat(cache.s, n),
                       sig=np.repeat(cache.sig, n),
                       alpha=np.repeat(cache.alpha, n),
                       capped=np.repeat(cache.capped, n),
                       active=np.repeat(cache.active, n))
    gR, gs = backward_batch(layer, rep, np.eye(n))
    return LayerGradients(d_r=gR, d_s=gs)


# -- projection and boundary operators ----------------------------------------


def central_project(layer: HardLayer, x) -> np.ndarray:
    """Scale x toward p just enough to land in the set.

    Points already inside are returned unchanged (making the operator exactly
    idempotent); outside points land on the boundary.
    """
    x = _as_vector(x, layer.dim, "x")
    r = x - layer.p
    if not np.any(r):
        return x.copy()
    alpha, _ = layer.omega.ray_bounds_batch(layer.p, r)
    if alpha >= 1.0:
        return x.copy()
    return layer.p + float(alpha) * r


def central_project_batch(layer: HardLayer, X) -> tuple[np.ndarray, dict]:
    """Batched central projection with a cache for gradient propagation."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    R = X - layer.p
    alpha, active = layer.omega.ray_bounds_batch(layer.p, R)
    inside = alpha >= 1.0
    factor = np.where(inside, 1.0, alpha)
    out = np.where(inside[:, None], X, layer.p + factor[:, None] * R)
    cache = {"R": R, "alpha": alpha, "active": np.where(inside, -1, active),
             "factor": factor}
    return out, cache


def central_project_backward(layer: HardLayer, cache: dict, upstream) -> np.ndarray:
    """Gradient of the central projection with respect to its input."""
    U = np.atleast_2d(np.asarray(upstream, dtype=float))
    R, factor = cache["R"], cache["factor"]
    fc = ForwardCache(R=R, s=np.zeros(R.shape[0]), sig=np.ones(R.shape[0]),
                      alpha=cache["alpha"], capped=cache["active"] < 0,
                      active=cache["active"])
    grad_alpha = _alpha_gradients(layer, fc)
    u_dot_r = np.einsum("bi,bi->b", U, R)
    return factor[:, None] * U + u_dot_r[:, None] * grad_alpha


def boundary_map(layer: HardLayer, r) -> np.ndarray:
    """Exact boundary point p + alpha_bar * r; needs r != 0 and a finite bound."""
    r = _as_vector(r, layer.dim, "r")
    if not np.any(r):
        raise ValueError("boundary map needs a nonzero ray")
    alpha, _ = layer.omega.ray_bounds_batch(layer.p, r)
    if not math.isfinite(alpha):
        raise UnboundedRayError("unbounded direction: boundary point undefined")
    return layer.p + float(alpha) * r


def boundary_map_batch(layer: HardLayer, R) -> tuple[np.ndarray, ForwardCache]:
    """Batched boundary map (scale factor pinned at 1) with gradient cache."""
    R = np.atleast_2d(np.asarray(R, dtype=float))
    alpha, active = layer.omega.ray_bounds_batch(layer.p, R)
    if not np.all(np.isfinite(alpha)):
        raise UnboundedRayError("unbounded direction: boundary point undefined")
    X = layer.p + alpha[:, None] * R
    cache = ForwardCache(R=R, s=np.zeros(R.shape[0]), sig=np.ones(R.shape[0]),
                         alpha=alpha, capped=np.zeros(R.shape[0], dtype=bool),
                         active=active)
    return X, cache


def boundary_map_backward(layer: HardLayer, cache: ForwardCache, upstream) -> np.ndarray:
    """Gradient of the boundary map with respect to the rays."""
    U = np.atleast_2d(np.asarray(upstream, dtype=float))
    grad_alpha = _alpha_gradients(layer, cache)
    u_dot_r = np.einsum("bi,bi->b", U, cache.R)
    return cache.alpha[:, None] * U + u_dot_r[:, None] * grad_alpha


# -- joint input-output constraints -------------------------------------------


class JointConstraintSet:
    """Constraints over the concatenation [x; z] of outputs and inputs.

    Substituting a concrete z yields an ordinary constraint set over x that
    can change from input to input.
    """

    def __init__(self, dim_x: int, dim_z: int, linear=(), quadratic=()):
        self.dim_x = int(dim_x)
        self.dim_z = int(dim_z)
        if self.dim_x < 1 or self.dim_z < 1:
            raise ValueError("dimensions must be positive")
        total = self.dim_x + self.dim_z
        self.linear = tuple(linear)
        self.quadratic = tuple(quadratic)
        for c in self.linear + self.quadratic:
            if c.dim != total:
                raise ValueError(f"joint constraint dimension must be {total}")
        if not self.linear and not self.quadratic:
            raise ValueError("joint set needs at least one constraint")


def specialize_joint(joint: JointConstraintSet, z, margin: float = 1e-6,
                     cache: dict | None = None) -> ConstraintSet:
    """Fix the input block of every joint constraint at z.

    Returns a constraint set over x with a freshly searched interior point
    (proving z admissible).  Constraints that lose every x term are checked
    and dropped.  An optional dict caches specialized sets by z.
    """
    z = _as_vector(z, joint.dim_z, "z")
    key = z.tobytes() if cache is not None else None
    if cache is not None and key in cache:
        return cache[key]
    nx = joint.dim_x
    linear, quadratic = [], []
    for c in joint.linear:
        a_x, a_z = c.a[:nx], c.a[nx:]
        b_new = c.b - float(a_z @ z)
        if np.abs(a_x).max() <= _BLOCK_ZERO_TOL * max(np.abs(c.a).max(), 1.0):
            if b_new < 0:
                raise InfeasibleSetError("input z violates a joint constraint")
            continue
        linear.append(LinearConstraint(a_x, b_new))
    for c in joint.quadratic:
        P_xx = c.P[:nx, :nx]
        P_xz = c.P[:nx, nx:]
        P_zz = c.P[nx:, nx:]
        q_new = c.q[:nx] + P_xz @ z
        b_new = c.b - float(c.q[nx:] @ z) - 0.5 * float(z @ P_zz @ z)
        scale = max(float(np.abs(c.P).max()), float(np.abs(c.q).max()), 1.0)
        if (np.abs(P_xx).max(initial=0.0) <= _BLOCK_ZERO_TOL * scale
                and np.abs(q_new).max(initial=0.0) <= _BLOCK_ZERO_TOL * scale):
            if b_new < 0:
                raise InfeasibleSetError("input z violates a joint constraint")
            continue
        quadratic.append(QuadraticConstraint(P_xx, q_new, b_new))
    if not linear and not quadratic:
        raise ValueError("no constraint involves the output block at this z")
    omega = ConstraintSet(nx, linear, quadratic)
    find_interior_point(omega, margin=margin)
    if cache is not None:
        cache[key] = omega
    return omega
