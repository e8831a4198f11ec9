"""Minimal dense feed-forward network with reverse-mode gradients and Adam.

Just enough machinery to train trunks that feed the constrained output
layer: an affine/activation chain, exact backprop, a standard Adam update,
and the objective functions used by the benchmark experiments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DivergenceError

ACTIVATIONS = ("relu", "tanh", "identity")


@dataclass
class DenseLayer:
    W: np.ndarray          # (out, in)
    b: np.ndarray          # (out,)
    activation: str = "relu"

    def __post_init__(self):
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        if self.W.ndim != 2 or self.b.shape != (self.W.shape[0],):
            raise ValueError("layer shapes are inconsistent")


class DenseNet:
    """Plain fully connected chain; parameters are owned, caller-mutable."""

    def __init__(self, layers: list[DenseLayer]):
        if not layers:
            raise ValueError("need at least one layer")
        for prev, cur in zip(layers, layers[1:]):
            if cur.W.shape[1] != prev.W.shape[0]:
                raise ValueError("consecutive layer dimensions do not chain")
        self.layers = layers

    @property
    def input_dim(self) -> int:
        return self.layers[0].W.shape[1]

    @property
    def output_dim(self) -> int:
        return self.layers[-1].W.shape[0]

    def parameters(self) -> list[np.ndarray]:
        params = []
        for layer in self.layers:
            params.append(layer.W)
            params.append(layer.b)
        return params

    @classmethod
    def create(cls, sizes, hidden_activation: str = "relu",
               output_activation: str = "identity", seed: int = 0) -> "DenseNet":
        """Build a net with He-uniform init for relu layers, Xavier otherwise."""
        rng = np.random.default_rng(np.random.SeedSequence([0x6E65, seed]))
        layers = []
        for i, (fan_in, fan_out) in enumerate(zip(sizes, sizes[1:])):
            act = output_activation if i == len(sizes) - 2 else hidden_activation
            if act == "relu":
                limit = math.sqrt(6.0 / fan_in)
            else:
                limit = math.sqrt(6.0 / (fan_in + fan_out))
            W = rng.uniform(-limit, limit, size=(fan_out, fan_in))
            layers.append(DenseLayer(W=W, b=np.zeros(fan_out), activation=act))
        return cls(layers)


def _activate(pre, kind):
    if kind == "relu":
        return np.maximum(pre, 0.0)
    if kind == "tanh":
        return np.tanh(pre)
    return pre


def _activation_grad(pre, kind):
    if kind == "relu":
        return (pre > 0.0).astype(float)
    if kind == "tanh":
        t = np.tanh(pre)
        return 1.0 - t * t
    return np.ones_like(pre)


def net_forward(net: DenseNet, z) -> tuple[np.ndarray, list]:
    """Outputs for z of shape (d,) or (batch, d); cache feeds net_backward."""
    Z = np.asarray(z, dtype=float)
    squeeze = Z.ndim == 1
    if squeeze:
        Z = Z[None, :]
    if Z.shape[1] != net.input_dim:
        raise ValueError(f"input dimension {Z.shape[1]}, expected {net.input_dim}")
    cache = [("input", Z)]
    out = Z
    for layer in net.layers:
        pre = out @ layer.W.T + layer.b
        if not np.all(np.isfinite(pre)):
            raise DivergenceError("non-finite activation in forward pass")
        cache.append((out, pre))
        out = _activate(pre, layer.activation)
    cache = cache[1:]
    return (out[0] if squeeze else out), (cache, squeeze)


@dataclass
class NetGradients:
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    input_grad: np.ndarray

    def as_list(self) -> list[np.ndarray]:
        """Gradients ordered like DenseNet.parameters()."""
        out = []
        for W, b in zip(self.weights, self.biases):
            out.append(W)
            out.append(b)
        return out


def net_backward(net: DenseNet, cache, upstream) -> NetGradients:
    """Exact reverse-mode gradients for a previous net_forward call."""
    layer_cache, squeeze = cache
    U = np.asarray(upstream, dtype=float)
    if squeeze and U.ndim == 1:
        U = U[None, :]
    grads_W: list[np.ndarray] = [None] * len(net.layers)
    grads_b: list[np.ndarray] = [None] * len(net.layers)
    delta = U
    for i in range(len(net.layers) - 1, -1, -1):
        inp, pre = layer_cache[i]
        delta = delta * _activation_grad(pre, net.layers[i].activation)
        grads_W[i] = delta.T @ inp
        grads_b[i] = delta.sum(axis=0)
        delta = delta @ net.layers[i].W
    return NetGradients(weights=grads_W, biases=grads_b,
                        input_grad=delta[0] if squeeze else delta)


# -- Adam ---------------------------------------------------------------------


@dataclass
class AdamState:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step_count: int = 0
    first_moment: list = field(default_factory=list)
    second_moment: list = field(default_factory=list)


def adam_step(state: AdamState, params: list[np.ndarray], grads: list[np.ndarray],
              lr: float | None = None) -> None:
    """One bias-corrected Adam update, in place; lr overrides the stored rate."""
    if not state.first_moment:
        state.first_moment = [np.zeros_like(p) for p in params]
        state.second_moment = [np.zeros_like(p) for p in params]
    if len(params) != len(grads) or len(params) != len(state.first_moment):
        raise ValueError("params/grads/state lengths disagree")
    state.step_count += 1
    t = state.step_count
    rate = state.lr if lr is None else lr
    b1, b2 = state.beta1, state.beta2
    for p, g, m, v in zip(params, grads, state.first_moment, state.second_moment):
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        m_hat = m / (1.0 - b1 ** t)
        v_hat = v / (1.0 - b2 ** t)
        p -= rate * m_hat / (np.sqrt(v_hat) + state.eps)


# -- objectives ----------------------------------------------------------------


@dataclass(frozen=True)
class Objective:
    """Loss over an output vector; see the kind-specific constructors."""

    kind: str
    c: np.ndarray | None = None
    H: np.ndarray | None = None
    p_norm: int = 2
    target: np.ndarray | None = None
    margin: float = 1.0

    @classmethod
    def linear(cls, c) -> "Objective":
        return cls(kind="linear", c=np.asarray(c, dtype=float))

    @classmethod
    def quadratic(cls, H, c) -> "Objective":
        H = np.asarray(H, dtype=float)
        eigs = np.linalg.eigvalsh(0.5 * (H + H.T))
        if eigs[0] < -1e-10 * max(eigs[-1], 1.0):
            raise ValueError("quadratic objective needs a PSD matrix")
        return cls(kind="quadratic", H=0.5 * (H + H.T), c=np.asarray(c, dtype=float))

    @classmethod
    def rosenbrock(cls) -> "Objective":
        return cls(kind="rosenbrock")

    @classmethod
    def bird(cls) -> "Objective":
        return cls(kind="bird")

    @classmethod
    def cross_entropy(cls) -> "Objective":
        return cls(kind="cross_entropy")

    @classmethod
    def hinge(cls, margin: float = 1.0) -> "Objective":
        return cls(kind="hinge", margin=margin)

    @classmethod
    def lp_distance(cls, p_norm: int, target) -> "Objective":
        if p_norm not in (1, 2):
            raise ValueError("p_norm must be 1 or 2")
        return cls(kind="lp_distance", p_norm=p_norm,
                   target=np.asarray(target, dtype=float))


def eval_objective(obj: Objective, x, aux=None) -> tuple[float, np.ndarray]:
    """Value and exact gradient at a single point."""
    x = np.asarray(x, dtype=float)
    values, grads = eval_objective_batch(obj, x[None, :],
                                         aux=None if aux is None else np.asarray([aux]))
    return float(values[0]), grads[0]


def eval_objective_batch(obj: Objective, X, aux=None) -> tuple[np.ndarray, np.ndarray]:
    """Per-row values and gradients for X of shape (batch, n)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    kind = obj.kind
    if kind == "linear":
        return X @ obj.c, np.broadcast_to(obj.c, X.shape).copy()
    if kind == "quadratic":
        HX = X @ obj.H
        return 0.5 * np.einsum("bi,bi->b", HX, X) + X @ obj.c, HX + obj.c
    if kind == "rosenbrock":
        x1, x2 = X[:, 0], X[:, 1]
        res = x2 - x1 ** 2
        values = (1.0 - x1) ** 2 + 100.0 * res ** 2
        grads = np.stack([-2.0 * (1.0 - x1) - 400.0 * x1 * res, 200.0 * res], axis=1)
        return values, grads
    if kind == "bird":
        x1, x2 = X[:, 0], X[:, 1]
        e1 = np.exp((1.0 - np.cos(x1)) ** 2)
        e2 = np.exp((1.0 - np.sin(x2)) ** 2)
        values = np.sin(x2) * e1 + np.cos(x1) * e2 + (x1 - x2) ** 2
        d1 = (np.sin(x2) * e1 * 2.0 * (1.0 - np.cos(x1)) * np.sin(x1)
              - np.sin(x1) * e2 + 2.0 * (x1 - x2))
        d2 = (np.cos(x2) * e1
              - np.cos(x1) * e2 * 2.0 * (1.0 - np.sin(x2)) * np.cos(x2)
              - 2.0 * (x1 - x2))
        return values, np.stack([d1, d2], axis=1)
    if kind == "cross_entropy":
        return _cross_entropy(X, aux)
    if kind == "hinge":
        return _hinge(X, aux, obj.margin)
    if kind == "lp_distance":
        D = X - obj.target
        if obj.p_norm == 1:
            return np.abs(D).sum(axis=1), np.sign(D)
        norms = np.linalg.norm(D, axis=1)
        safe = np.where(norms > 0, norms, 1.0)
        return norms, D / safe[:, None]
    raise ValueError(f"unknown objective kind {kind!r}")


_PROB_CLAMP = 1e-12


def _cross_entropy(X, labels):
    """Negative log likelihood of probability rows; labels are class indices.

    The layer upstream already produces a distribution, so inputs are
    probabilities, not logits; they are clamped at 1e-12 before the log.
    """
    if labels is None:
        raise ValueError("cross_entropy needs labels")
    labels = np.asarray(labels, dtype=int)
    if (X < -1e-9).any() or (X > 1.0 + 1e-9).any():
        raise ValueError("cross_entropy input is not a probability vector")
    rows = np.arange(X.shape[0])
    picked = np.maximum(X[rows, labels], _PROB_CLAMP)
    values = -np.log(picked)
    grads = np.zeros_like(X)
    grads[rows, labels] = -1.0 / picked
    return values, grads


def _hinge(X, labels, margin):
    """Multiclass hinge: sum_j max(0, margin + x_j - x_y) over j != y."""
    if labels is None:
        raise ValueError("hinge needs labels")
    labels = np.asarray(labels, dtype=int)
    rows = np.arange(X.shape[0])
    correct = X[rows, labels]
    slack = margin + X - correct[:, None]
    slack[rows, labels] = 0.0
    active = slack > 0.0
    values = np.where(active, slack, 0.0).sum(axis=1)
    grads = active.astype(float)
    grads[rows, labels] = -active.sum(axis=1).astype(float)
    return values, grads
