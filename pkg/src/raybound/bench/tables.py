"""Relative-error benchmark tables over random problem families."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .barrier import barrier_reference_solve
from .generators import generate
from .solve import layer_solve

log = logging.getLogger(__name__)

PERCENTILES = (25, 50, 75, 100)


def relative_error(achieved: float, reference: float) -> float:
    """Percent excess of achieved over reference, clamped at zero.

    References within 1e-12 of zero make the ratio meaningless; the absolute
    excess is returned instead and a warning is logged.
    """
    excess = max(0.0, achieved - reference)
    if abs(reference) < 1e-12:
        log.warning("reference value %.3e is ~0; reporting absolute error", reference)
        return excess
    return 100.0 * excess / abs(reference)


def nearest_rank_percentile(values, pct: float) -> float:
    """Nearest-rank percentile; pct=100 is the maximum."""
    v = np.sort(np.asarray(values, dtype=float))
    if v.size == 0:
        raise ValueError("no values")
    rank = max(1, math.ceil(pct / 100.0 * v.size))
    return float(v[rank - 1])


@dataclass
class RelErrorTable:
    loss_kind: str
    constraint_kind: str
    rows: dict = field(default_factory=dict)   # (m, n) -> {pct: value}

    def add(self, m: int, n: int, errors) -> None:
        cell = {pct: nearest_rank_percentile(errors, pct) for pct in PERCENTILES}
        vals = [cell[p] for p in PERCENTILES]
        if any(b < a for a, b in zip(vals, vals[1:])):
            raise AssertionError("percentiles must be nondecreasing")
        self.rows[(m, n)] = cell

    def to_csv(self) -> str:
        lines = ["m,n,p25,p50,p75,p100"]
        for (m, n) in sorted(self.rows):
            cell = self.rows[(m, n)]
            lines.append(f"{m},{n}," + ",".join(f"{cell[p]:.6e}" for p in PERCENTILES))
        return "\n".join(lines) + "\n"

    def __str__(self) -> str:
        header = f"RE% ({self.loss_kind} loss, {self.constraint_kind} constraints)"
        lines = [header, f"{'m':>4} {'n':>3} " + " ".join(f"{p:>10}%" for p in PERCENTILES)]
        for (m, n) in sorted(self.rows):
            cell = self.rows[(m, n)]
            lines.append(f"{m:>4} {n:>3} "
                         + " ".join(f"{cell[p]:>11.3e}" for p in PERCENTILES))
        return "\n".join(lines)


def _instance_seed(seed: int, loss_kind: str, constraint_kind: str,
                   m: int, n: int, k: int) -> int:
    fam = {"linear": 1, "quadratic": 2}
    ss = np.random.SeedSequence([seed, fam[loss_kind], fam[constraint_kind], m, n, k])
    return int(ss.generate_state(1)[0])


def solve_instance(loss_kind: str, constraint_kind: str, m: int, n: int, k: int,
                   seed: int, iters: int, lr: float, restarts: int) -> float:
    """Generate instance k of a cell, solve both ways, return its RE%."""
    inst_seed = _instance_seed(seed, loss_kind, constraint_kind, m, n, k)
    problem = generate(constraint_kind, n, m, inst_seed, loss_kind=loss_kind)
    _, reference = barrier_reference_solve(problem)
    result = layer_solve(problem, iters=iters, lr=lr, restarts=restarts,
                         seed=inst_seed)
    return relative_error(result.value, reference)


def _cell_worker(args) -> tuple[tuple[int, int], list[float]]:
    loss_kind, constraint_kind, m, n, instances, seed, iters, lr, restarts = args
    errors = [solve_instance(loss_kind, constraint_kind, m, n, k, seed,
                             iters, lr, restarts)
              for k in range(instances)]
    return (m, n), errors


def run_table(loss_kind: str, constraint_kind: str, ns=(2, 5, 10),
              ms=(50, 100, 200), instances: int = 50, seed: int = 0,
              iters: int = 2000, lr: float = 0.1, restarts: int = 3,
              jobs: int = 1) -> RelErrorTable:
    """Percentiles of RE% per (m, n) cell over seeded random instances.

    Per-instance seeds depend only on (seed, family, m, n, k), so results do
    not depend on worker scheduling.
    """
    table = RelErrorTable(loss_kind=loss_kind, constraint_kind=constraint_kind)
    work = [(loss_kind, constraint_kind, m, n, instances, seed, iters, lr, restarts)
            for m in ms for n in ns]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_cell_worker, work))
    else:
        results = [_cell_worker(w) for w in work]
    for (m, n), errors in results:
        table.add(m, n, errors)
    return table
