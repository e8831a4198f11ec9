"""Forward-pass wall-clock scaling measurements.

The per-constraint intersection work is O(n) for halfspaces and O(n^2) for
quadrics, so a forward pass costs O(nm) / O(n^2 m).  Measurements run the
layer over a large ray batch so arithmetic dominates dispatch overhead, and
take the best of several repeats.
"""

from __future__ import annotations

import time

import numpy as np

from ..constraints import find_interior_point
from ..layer import HardLayer, forward_batch
from .generators import generate


def _timed_forward(layer: HardLayer, R, s, repeats: int) -> float:
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        forward_batch(layer, R, s)
        best = min(best, time.perf_counter() - t0)
    return best


def measure_forward_times(constraint_kind: str, n: int, ms, batch: int = 2000,
                          repeats: int = 5, seed: int = 0) -> list[float]:
    """Best-of-repeats forward time for a ray batch, per constraint count."""
    rng = np.random.default_rng(np.random.SeedSequence([0x71, seed]))
    R = rng.standard_normal((batch, n))
    s = rng.standard_normal(batch)
    times = []
    for m in ms:
        problem = generate(constraint_kind, n, m, seed)
        layer = HardLayer(problem.omega)
        forward_batch(layer, R, s)  # warm up caches and allocator
        times.append(_timed_forward(layer, R, s, repeats))
    return times


def measure_dim_times(constraint_kind: str, m: int, ns, batch: int = 2000,
                      repeats: int = 5, seed: int = 0) -> list[float]:
    """Forward times across output dimensions at a fixed constraint count."""
    times = []
    for n in ns:
        rng = np.random.default_rng(np.random.SeedSequence([0x72, seed, n]))
        R = rng.standard_normal((batch, n))
        s = rng.standard_normal(batch)
        problem = generate(constraint_kind, n, m, seed)
        layer = HardLayer(problem.omega)
        forward_batch(layer, R, s)
        times.append(_timed_forward(layer, R, s, repeats))
    return times


def linear_fit_r2(xs, ys) -> tuple[float, float, float]:
    """Least-squares line fit returning (slope, intercept, r^2)."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    slope, intercept = np.polyfit(xs, ys, 1)
    pred = slope * xs + intercept
    ss_res = float(((ys - pred) ** 2).sum())
    ss_tot = float(((ys - ys.mean()) ** 2).sum())
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(intercept), r2


def loglog_exponent(xs, ys) -> float:
    """Fitted exponent of ys ~ xs**e."""
    return float(np.polyfit(np.log(np.asarray(xs, dtype=float)),
                            np.log(np.asarray(ys, dtype=float)), 1)[0])
