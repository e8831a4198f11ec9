"""Trained projection operators: approximate identity maps onto a set.

A trunk network feeds the hard layer, and the training loss penalizes the
distance between each sample point and its image.  Outputs are feasible by
construction whatever the training quality; with the layer in boundary mode
the images land on the boundary instead.
"""

from __future__ import annotations

import numpy as np

from ..constraints import ConstraintSet, find_interior_point
from ..exceptions import DivergenceError
from ..layer import (HardLayer, backward_batch, boundary_map_backward,
                     boundary_map_batch, forward_batch)
from ..net import (AdamState, DenseNet, Objective, adam_step,
                   eval_objective_batch, net_backward, net_forward)


def sample_box(omega: ConstraintSet, n_dirs: int = 256, scale: float = 2.0):
    """Axis box at `scale` times the extent of probed boundary points."""
    if omega.interior_point is None:
        find_interior_point(omega)
    p = omega.interior_point
    n = omega.dim
    rng = np.random.default_rng(np.random.SeedSequence([0xB0, n_dirs]))
    dirs = rng.standard_normal((n_dirs, n))
    dirs = np.vstack([dirs, np.eye(n), -np.eye(n)])
    alpha, _ = omega.ray_bounds_batch(p, dirs)
    alpha = np.where(np.isfinite(alpha), alpha, 0.0)
    pts = p + alpha[:, None] * dirs
    center = 0.5 * (pts.min(axis=0) + pts.max(axis=0))
    half = 0.5 * (pts.max(axis=0) - pts.min(axis=0))
    return center - scale * half, center + scale * half


def _lp_grad(D, p_norm):
    if p_norm == 1:
        return np.sign(D)
    norms = np.linalg.norm(D, axis=1, keepdims=True)
    return D / np.where(norms > 0, norms, 1.0)


def _lp_value(D, p_norm):
    if p_norm == 1:
        return np.abs(D).sum(axis=1)
    return np.linalg.norm(D, axis=1)


def train_orthogonal_projection(omega: ConstraintSet, net_spec=(5, 100),
                                p_norm: int = 2, iters: int = 1000,
                                lr: float = 1e-2, seed: int = 0,
                                batch: int = 256) -> tuple[DenseNet, HardLayer, dict]:
    """Train a net + layer to approximate the identity on box samples.

    Minimizes the mean Lp distance between samples and their images.  The
    returned metrics include the mean in-set displacement (how far interior
    points move) measured on held-out samples.
    """
    depth, width = net_spec
    n = omega.dim
    if omega.interior_point is None:
        find_interior_point(omega)
    layer = HardLayer(omega)
    net = DenseNet.create([n] + [width] * depth + [n + 1], seed=seed)
    lo, hi = sample_box(omega)
    rng = np.random.default_rng(np.random.SeedSequence([0xB1, seed]))
    params = net.parameters()
    state = AdamState(lr=lr)
    for t in range(iters):
        Z = rng.uniform(lo, hi, size=(batch, n))
        out, ncache = net_forward(net, Z)
        X, cache = forward_batch(layer, out[:, :n], out[:, n])
        D = X - Z
        upstream_x = _lp_grad(D, p_norm) / batch
        gR, gs = backward_batch(layer, cache, upstream_x)
        grads = net_backward(net, ncache, np.concatenate([gR, gs[:, None]], axis=1))
        gl = grads.as_list()
        if not all(np.all(np.isfinite(g)) for g in gl):
            raise DivergenceError("projection training diverged")
        adam_step(state, params, gl)
    metrics = _projection_metrics(net, layer, omega, lo, hi, p_norm, seed, boundary=False)
    return net, layer, metrics


def train_boundary_projection(omega: ConstraintSet, net_spec=(5, 100),
                              p_norm: int = 2, iters: int = 1000,
                              lr: float = 1e-2, seed: int = 0,
                              batch: int = 256) -> tuple[DenseNet, HardLayer, dict]:
    """Train a net whose outputs land on the boundary nearest each sample.

    The layer runs with the scale factor pinned at 1, so every output
    activates a constraint regardless of training quality.
    """
    depth, width = net_spec
    n = omega.dim
    if omega.interior_point is None:
        find_interior_point(omega)
    layer = HardLayer(omega, bound_policy="strict")
    net = DenseNet.create([n] + [width] * depth + [n], seed=seed)
    lo, hi = sample_box(omega)
    rng = np.random.default_rng(np.random.SeedSequence([0xB2, seed]))
    params = net.parameters()
    state = AdamState(lr=lr)
    for t in range(iters):
        Z = rng.uniform(lo, hi, size=(batch, n))
        out, ncache = net_forward(net, Z)
        rays = out + 1e-9  # keep rays off exact zero
        X, cache = boundary_map_batch(layer, rays)
        D = X - Z
        upstream_x = _lp_grad(D, p_norm) / batch
        gR = boundary_map_backward(layer, cache, upstream_x)
        grads = net_backward(net, ncache, gR)
        gl = grads.as_list()
        if not all(np.all(np.isfinite(g)) for g in gl):
            raise DivergenceError("boundary projection training diverged")
        adam_step(state, params, gl)
    metrics = _projection_metrics(net, layer, omega, lo, hi, p_norm, seed, boundary=True)
    return net, layer, metrics


def apply_projection(net: DenseNet, layer: HardLayer, Z, boundary: bool = False):
    """Images of rows of Z under the trained projection model."""
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    out, _ = net_forward(net, Z)
    if boundary:
        X, _ = boundary_map_batch(layer, out + 1e-9)
    else:
        n = layer.dim
        X, _ = forward_batch(layer, out[:, :n], out[:, n])
    return X


def _projection_metrics(net, layer, omega, lo, hi, p_norm, seed, boundary):
    rng = np.random.default_rng(np.random.SeedSequence([0xB3, seed]))
    Z = rng.uniform(lo, hi, size=(512, omega.dim))
    X = apply_projection(net, layer, Z, boundary=boundary)
    dist = _lp_value(X - Z, p_norm)
    inside = omega.values_batch(Z).max(axis=1) <= 0
    return {
        "mean_distance": float(dist.mean()),
        "mean_inset_displacement": float(dist[inside].mean()) if inside.any() else 0.0,
        "feasible_fraction": float((omega.values_batch(X).max(axis=1)
                                    <= omega.default_tol).mean()),
    }
