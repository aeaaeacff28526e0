"""Capacity sweeps and kernel timings.

A capacity cell is a ``(N, D, F)`` triple: ``trials`` random exact products
of ``F`` factors drawn from fresh codebooks of ``D`` entries at dimension
``N``. Accuracy counts trials where every factor is decoded correctly. Every
trial derives its own seed from the base seed, so the accuracy columns do not
depend on ordering or on ``jobs``.
"""

from __future__ import annotations

import csv
import io
import json
import statistics
import time
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .codebook import build_codebook, cleanup
from .resonator import FactorizationProblem, ResonatorConfig, init, solve, step
from .vsa import bind, derive_seed, random_hypervector, superpose

__all__ = [
    "CapacityExperiment",
    "run_capacity",
    "capacity_summary",
    "kernel_timings",
    "rows_to_csv",
    "CAPACITY_COLUMNS",
    "TIMING_COLUMNS",
]

CAPACITY_COLUMNS = (
    "N",
    "D",
    "F",
    "trials",
    "accuracy",
    "mean_iterations",
    "min_residual",
    "mean_wall_time",
)
# excluded from reproducibility comparisons
TIMING_COLUMNS = ("mean_wall_time",)


@dataclass(frozen=True)
class CapacityExperiment:
    dims: tuple = (64, 128, 256, 512)
    # ints use the same size for every factor; a tuple gives per-factor sizes
    codebook_sizes: tuple = (5, 10, 20, 50, 100)
    factor_count: int = 3
    trials: int = 50
    seed: int = 0
    accuracy_threshold: float = 0.95
    max_iterations: int = 200

    def __post_init__(self):
        object.__setattr__(self, "dims", tuple(int(n) for n in self.dims))
        sizes = tuple(tuple(d) if isinstance(d, (list, tuple)) else int(d) for d in self.codebook_sizes)
        object.__setattr__(self, "codebook_sizes", sizes)
        if not self.dims or not sizes:
            raise ValueError("dims and codebook_sizes must be non-empty")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.factor_count < 2:
            raise ValueError("factor_count must be >= 2")

    def factor_sizes(self, d: Union[int, tuple]) -> tuple:
        return d if isinstance(d, tuple) else (d,) * self.factor_count

    def to_json(self) -> dict:
        out = asdict(self)
        out["codebook_sizes"] = [list(d) if isinstance(d, tuple) else d for d in self.codebook_sizes]
        out["dims"] = list(self.dims)
        return out

    @classmethod
    def from_json(cls, obj: Union[dict, str]) -> "CapacityExperiment":
        if isinstance(obj, str):
            obj = json.loads(obj)
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(obj) - known
        if unknown:
            raise ValueError(f"unknown experiment fields: {sorted(unknown)}")
        return cls(**obj)


def _run_cell(n: int, sizes: tuple, exp: CapacityExperiment) -> dict:
    config = ResonatorConfig(max_iterations=exp.max_iterations, record_trajectory=False)
    correct = 0
    iterations = []
    residuals = []
    elapsed = 0.0
    for t in range(exp.trials):
        base = derive_seed(exp.seed, n, sizes, t)
        cbs = tuple(
            build_codebook(f"factor{f}", [str(i) for i in range(d)], n, derive_seed(base, f))
            for f, d in enumerate(sizes)
        )
        rng = np.random.Generator(np.random.PCG64(derive_seed(base, "labels")))
        truth = tuple(int(rng.integers(d)) for d in sizes)
        s = cbs[0][truth[0]]
        for cb, i in zip(cbs[1:], truth[1:]):
            s = bind(s, cb[i])
        start = time.perf_counter()
        result, _ = solve(FactorizationProblem(s, cbs), config)
        elapsed += time.perf_counter() - start
        correct += result.indices == truth
        iterations.append(result.iterations_used)
        residuals.append(result.residual_similarity)
    return {
        "N": n,
        "D": "x".join(str(d) for d in sizes) if len(set(sizes)) > 1 else sizes[0],
        "F": len(sizes),
        "trials": exp.trials,
        "accuracy": correct / exp.trials,
        "mean_iterations": float(np.mean(iterations)),
        "min_residual": float(np.min(residuals)),
        "mean_wall_time": elapsed / exp.trials,
    }


def run_capacity(exp: CapacityExperiment, jobs: int = 1) -> list:
    """One row per ``(N, D)`` cell, in grid order."""
    cells = [(n, exp.factor_sizes(d)) for n in exp.dims for d in exp.codebook_sizes]
    if jobs == 1:
        return [_run_cell(n, sizes, exp) for n, sizes in cells]
    from joblib import Parallel, delayed

    return list(Parallel(n_jobs=jobs)(delayed(_run_cell)(n, sizes, exp) for n, sizes in cells))


def capacity_summary(rows: Sequence[dict], threshold: float = 0.95) -> dict:
    """Largest ``D`` per ``(N, F)`` whose accuracy reaches ``threshold``.

    ``None`` when no tested ``D`` qualifies. Mixed-size cells are skipped.
    """
    out: dict = {}
    for row in rows:
        if not isinstance(row["D"], int):
            continue
        key = (row["N"], row["F"])
        out.setdefault(key, None)
        if row["accuracy"] >= threshold and (out[key] is None or row["D"] > out[key]):
            out[key] = row["D"]
    return out


def rows_to_csv(rows: Sequence[dict], columns: Sequence[str] = CAPACITY_COLUMNS, drop: Sequence[str] = ()) -> str:
    cols = [c for c in columns if c not in drop]
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n", extrasaction="ignore")
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
    return buf.getvalue()


def _median_time(fn, repetitions: int) -> float:
    samples = []
    for _ in range(repetitions):
        start = time.perf_counter()
        fn()
        samples.append(time.perf_counter() - start)
    return statistics.median(samples)


def kernel_timings(dims: Sequence[int] = (1000, 10000), repetitions: int = 20, seed: int = 0) -> list:
    """Median wall time of bind, cleanup (D=100) and one resonator step (F=3, D=100)."""
    rows = []
    for n in dims:
        x = random_hypervector(n, derive_seed(seed, n, "x"))
        y = random_hypervector(n, derive_seed(seed, n, "y"))
        cbs = tuple(
            build_codebook(f"factor{f}", [str(i) for i in range(100)], n, derive_seed(seed, n, f))
            for f in range(3)
        )
        noisy = superpose([x, y, cbs[0][0]])
        problem = FactorizationProblem(bind(bind(cbs[0][1], cbs[1][2]), cbs[2][3]), cbs)
        config = ResonatorConfig(record_trajectory=False)
        state = init(problem, config)
        kernels = {
            "bind": lambda: bind(x, y),
            "cleanup": lambda: cleanup(cbs[0], noisy),
            "step": lambda: step(problem, state, config),
        }
        for name, fn in kernels.items():
            rows.append({"N": n, "kernel": name, "median_seconds": _median_time(fn, repetitions)})
    return rows
