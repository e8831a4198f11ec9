"""Iris classification on a probability simplex with per-class upper bounds.

The output distribution must satisfy 0 <= x_i <= ub and sum(x) = 1.  The
equality is eliminated by substitution, the box constraints move to the
reduced plane, and the hard layer guarantees the bounds for two of the
three heads (the softmax baseline only sums to one).
"""

from __future__ import annotations

import csv
from importlib import resources
from pathlib import Path

import numpy as np

from ..constraints import ConstraintSet, LinearConstraint, find_interior_point
from ..equality import EqualitySystem, lift, reduce_constraint_set
from ..layer import (HardLayer, backward_batch, central_project_backward,
                     central_project_batch, forward_batch)
from ..net import (AdamState, DenseNet, Objective, adam_step,
                   eval_objective_batch, net_backward, net_forward)

HEAD_VARIANTS = ("constraints", "projection", "softmax")


def default_data_path() -> Path:
    return Path(resources.files("raybound").joinpath("data/iris.csv"))


def load_iris(path=None):
    """Features (150, 4), integer labels and class names from the bundled CSV."""
    path = default_data_path() if path is None else Path(path)
    if not path.exists():
        raise FileNotFoundError(f"iris dataset not found at {path}")
    feats, names = [], []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            feats.append([float(row[k]) for k in
                          ("sepal_length", "sepal_width", "petal_length", "petal_width")])
            names.append(row["species"])
    classes = sorted(set(names))
    y = np.array([classes.index(s) for s in names])
    return np.asarray(feats), y, classes


def bounded_simplex(n_classes: int, upper_bound: float):
    """Reduced-space layer machinery for {0 <= x <= ub, sum(x) = 1}.

    Returns (layer over the reduced plane, reduction) so that
    lift(reduction, w) is a probability vector honoring the bounds.
    """
    eye = np.eye(n_classes)
    linear = ([LinearConstraint(-eye[i], 0.0) for i in range(n_classes)]
              + [LinearConstraint(eye[i], upper_bound) for i in range(n_classes)])
    omega_x = ConstraintSet(n_classes, linear)
    sys = EqualitySystem(np.ones((1, n_classes)), np.ones(1))
    omega_w, red = reduce_constraint_set(omega_x, sys)
    find_interior_point(omega_w)
    return HardLayer(omega_w), red


def _split(n_rows: int, test_frac: float, seed: int):
    rng = np.random.default_rng(np.random.SeedSequence([0x1815, seed]))
    order = rng.permutation(n_rows)
    n_test = int(round(test_frac * n_rows))
    return order[n_test:], order[:n_test]


def _standardize(X, train_idx):
    mu = X[train_idx].mean(axis=0)
    sd = X[train_idx].std(axis=0)
    return (X - mu) / np.where(sd > 0, sd, 1.0)


def _softmax(logits):
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


class _Head:
    """Forward to class probabilities and backward to net outputs."""

    def __init__(self, variant, layer, red):
        self.variant = variant
        self.layer = layer
        self.red = red
        self.cache = None

    def probs(self, out):
        if self.variant == "softmax":
            self.cache = _softmax(out)
            return self.cache
        if self.variant == "constraints":
            delta = self.red.delta
            W, cache = forward_batch(self.layer, out[:, :delta], out[:, delta])
            self.cache = cache
            return lift(self.red, W)
        # projection: orthogonal drop onto the simplex plane, then central
        # projection inside the reduced polygon
        w_raw = (out - self.red.u) @ self.red.R
        W, cache = central_project_batch(self.layer, w_raw)
        self.cache = cache
        return lift(self.red, W)

    def backward(self, grad_probs, labels):
        if self.variant == "softmax":
            P = self.cache
            B = P.shape[0]
            onehot = np.zeros_like(P)
            onehot[np.arange(B), labels] = 1.0
            return (P - onehot) / B
        grad_w = grad_probs @ self.red.R
        if self.variant == "constraints":
            gR, gs = backward_batch(self.layer, self.cache, grad_w)
            return np.concatenate([gR, gs[:, None]], axis=1)
        grad_w_raw = central_project_backward(self.layer, self.cache, grad_w)
        return grad_w_raw @ self.red.R.T

    def output_dim(self, n_classes):
        return self.red.delta + 1 if self.variant == "constraints" else n_classes


def _metrics(probs, labels):
    ce = eval_objective_batch(Objective.cross_entropy(), probs, aux=labels)[0].mean()
    hinge = eval_objective_batch(Objective.hinge(), probs, aux=labels)[0].mean()
    acc = float((probs.argmax(axis=1) == labels).mean())
    return float(ce), float(hinge), acc


def _train_head(variant, layer, red, Xtr, ytr, Xte, yte, net_spec, epochs, lr, seed):
    depth, width = net_spec
    head = _Head(variant, layer, red)
    n_classes = int(ytr.max()) + 1
    net = DenseNet.create([Xtr.shape[1]] + [width] * depth + [head.output_dim(n_classes)],
                          seed=seed)
    params = net.parameters()
    state = AdamState(lr=lr)
    curves = {k: [] for k in ("train_ce", "test_ce", "train_hinge", "test_hinge",
                              "train_acc", "test_acc")}
    B = Xtr.shape[0]
    for _ in range(epochs):
        out, ncache = net_forward(net, Xtr)
        probs = head.probs(out)
        _, grad_probs = eval_objective_batch(Objective.cross_entropy(), probs, aux=ytr)
        upstream = head.backward(grad_probs / B, ytr)
        grads = net_backward(net, ncache, upstream)
        adam_step(state, params, grads.as_list())

        tr = _metrics(probs, ytr)
        te_out, _ = net_forward(net, Xte)
        te = _metrics(head.probs(te_out), yte)
        for key, val in zip(("train_ce", "train_hinge", "train_acc"), tr):
            curves[key].append(val)
        for key, val in zip(("test_ce", "test_hinge", "test_acc"), te):
            curves[key].append(val)
    return net, head, curves


def iris_simplex_demo(upper_bound: float = 0.75, epochs: int = 400,
                      net_spec=(5, 64), lr: float = 1e-2, seed: int = 0,
                      data_path=None, test_frac: float = 0.2) -> dict:
    """Train the three head variants and report curves, accuracy, feasibility.

    Raises InfeasibleSetError when upper_bound leaves no interior (for three
    classes that happens at upper_bound <= 1/3, where the feasible set
    degenerates to the centroid or vanishes).
    """
    X, y, classes = load_iris(data_path)
    n_classes = len(classes)
    train_idx, test_idx = _split(X.shape[0], test_frac, seed)
    Xs = _standardize(X, train_idx)
    layer, red = bounded_simplex(n_classes, upper_bound)

    result = {"classes": classes, "upper_bound": upper_bound,
              "variants": {}, "predictions": {}}
    for variant in HEAD_VARIANTS:
        net, head, curves = _train_head(variant, layer, red, Xs[train_idx],
                                        y[train_idx], Xs[test_idx], y[test_idx],
                                        net_spec, epochs, lr, seed)
        out, _ = net_forward(net, Xs)
        probs = head.probs(out)
        info = dict(curves)
        info["final_train_acc"] = curves["train_acc"][-1]
        info["final_test_acc"] = curves["test_acc"][-1]
        info["sum_error"] = float(np.abs(probs.sum(axis=1) - 1.0).max())
        info["max_prob"] = float(probs.max())
        info["min_prob"] = float(probs.min())
        result["variants"][variant] = info
        result["predictions"][variant] = probs
    return result
