"""Monte Carlo studies of the causality tests on simulated Markov models.

Every repetition draws from its own generator keyed by (seed, ...), so
results are reproducible and independent of batching or worker count.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from functools import partial
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .blocks import BlockCounts, block_shape, resolve_inputs, window_indices
from .causality import TestConfig, ccdi_plugin, degrees_of_freedom, result_from_counts
from .chi2 import ChiSquare, ks_distance
from .markov import exact_ccdi_rate, seed_for, simulate_many
from .parallel import chunked, map_batches

SCHEMA_VERSION = 1
ZERO_RATE_TOL = 1e-12
PAPER_SCALE = {"reps": 10000, "length": 30000}
DESK_SCALE = {"reps": 2000, "length": 30000}


class RegimeError(ValueError):
    """The model is in the wrong regime for the requested study."""


@dataclass(frozen=True)
class TrajectoryPoint:
    n: int
    estimate: float
    statistic: float
    p_value: float


@dataclass
class NullValidationReport:
    reps: int
    sample_length: int
    dof: int
    ks_distance: float
    ks_threshold: float
    passed: bool
    mean: float
    variance: float
    bin_edges: list[float]
    masses: list[float]
    density: list[float]
    statistics: list[float] = field(repr=False, default_factory=list)


@dataclass
class DichotomyReport:
    k: int
    mode: str
    exact_rate: float
    n_grid: list[int]
    reps: int
    mean_abs_error: list[float]
    slope: float
    intercept: float
    high_variance: bool


def record(obj, kind: str, drop: Iterable[str] = ()) -> dict:
    rec = {"schema": f"ccdi.{kind}/{SCHEMA_VERSION}"}
    rec.update({k: v for k, v in asdict(obj).items() if k not in set(drop)})
    return rec


def write_records(path, records: Iterable[dict]) -> None:
    """Write one JSON object per line, atomically."""
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")
    tmp.replace(path)


def _statistic_from_arrays(x, y, z, cfg: TestConfig) -> tuple[float, int]:
    zz = None if cfg.mode == "uc" else z
    xv, yv, zv, alphabet = resolve_inputs(x, y, zz, cfg.alphabet)
    idx = window_indices(xv, yv, zv, cfg.k, alphabet)
    shape = block_shape(cfg.k, alphabet)
    raw = np.bincount(idx, minlength=int(np.prod(shape))).reshape(shape)
    counts = BlockCounts(cfg.k, alphabet, int(idx.size), raw)
    return ccdi_plugin(counts), counts.n


def _estimates_batch(keys, model, cfg, length, seed):
    x, y, z = simulate_many(model, length, [seed_for(seed, *key) for key in keys])
    return [_statistic_from_arrays(x[i], y[i], z[i], cfg) for i in range(len(keys))]


def monte_carlo_estimates(model, cfg: TestConfig, length: int, keys: Sequence[tuple],
                          seed, workers: int = 1, batch: int = 32) -> list[tuple[float, int]]:
    """(estimate, n) for each simulation key, in key order."""
    fn = partial(_estimates_batch, model=model, cfg=cfg, length=length, seed=seed)
    parts = map_batches(fn, chunked(list(keys), batch), workers)
    return [row for part in parts for row in part]


def validate_null(model, cfg: TestConfig, length: int, reps: int, seed,
                  ks_threshold: float | None = None, workers: int = 1) -> NullValidationReport:
    """Compare the simulated law of 2 n I_hat with chi2(dof) under a zero-rate model.

    The default KS threshold is the asymptotic 1% critical value 1.63 / sqrt(reps).
    """
    if reps < 1:
        raise ValueError("reps must be positive")
    rate = exact_ccdi_rate(model, cfg.k, conditional=cfg.mode == "cc")
    if rate > ZERO_RATE_TOL:
        raise RegimeError(f"exact rate is {rate:.6g}, not zero; the chi-squared null does not apply")
    dof = degrees_of_freedom(cfg)
    rows = monte_carlo_estimates(model, cfg, length, [(r,) for r in range(reps)], seed, workers)
    stats = np.array([2.0 * n * est for est, n in rows])
    dist = ChiSquare(dof)
    ks = ks_distance(stats, dist)
    threshold = 1.63 / math.sqrt(reps) if ks_threshold is None else ks_threshold
    edges = np.histogram_bin_edges(stats, bins="fd") if reps > 1 else np.array([stats[0] - 0.5, stats[0] + 0.5])
    hist, edges = np.histogram(stats, bins=edges)
    centers = 0.5 * (edges[1:] + edges[:-1])
    return NullValidationReport(
        reps=reps,
        sample_length=length,
        dof=dof,
        ks_distance=ks,
        ks_threshold=threshold,
        passed=ks < threshold,
        mean=float(stats.mean()),
        variance=float(stats.var(ddof=1)) if reps > 1 else 0.0,
        bin_edges=edges.tolist(),
        masses=(hist / reps).tolist(),
        density=[dist.density(c) if c > 0 else 0.0 for c in centers.tolist()],
        statistics=stats.tolist(),
    )


def trajectory(x, y, z, cfg: TestConfig, n_grid: Sequence[int]) -> list[TrajectoryPoint]:
    """Test results on growing prefixes, with one incrementally updated count table."""
    if cfg.mode == "uc":
        z = None
    xv, yv, zv, alphabet = resolve_inputs(x, y, z, cfg.alphabet)
    idx = window_indices(xv, yv, zv, cfg.k, alphabet)
    grid = [int(n) for n in n_grid]
    if not grid or any(b <= a for a, b in zip(grid, grid[1:])) or grid[0] < 1:
        raise ValueError("n_grid must be a nonempty strictly increasing list of positive sizes")
    if grid[-1] > idx.size:
        raise ValueError(f"n_grid reaches {grid[-1]} but only {idx.size} windows are available")
    shape = block_shape(cfg.k, alphabet)
    size = int(np.prod(shape))
    counts = np.zeros(size, dtype=np.int64)
    points, prev = [], 0
    for n in grid:
        counts += np.bincount(idx[prev:n], minlength=size)
        prev = n
        res = result_from_counts(BlockCounts(cfg.k, alphabet, n, counts.reshape(shape)), cfg)
        points.append(TrajectoryPoint(n, res.estimate, res.statistic, res.p_value))
    return points


def fit_loglog(n_grid: Sequence[int], errors: Sequence[float]) -> tuple[float, float]:
    lx = np.log(np.asarray(n_grid, dtype=float))
    ly = np.log(np.asarray(errors, dtype=float))
    slope, intercept = np.polyfit(lx, ly, 1)
    return float(slope), float(intercept)


def rate_dichotomy_study(model, cfg: TestConfig, n_grid: Sequence[int], reps: int, seed,
                         workers: int = 1) -> DichotomyReport:
    """Mean |I_hat - I| per sample size and the slope of its log-log fit.

    ``n_grid`` holds window counts; each (grid point, rep) pair gets its own
    independent simulation of length n + k.
    """
    grid = [int(n) for n in n_grid]
    if len(grid) < 3 or any(b <= a for a, b in zip(grid, grid[1:])) or grid[0] < 1:
        raise ValueError("n_grid needs at least three strictly increasing positive sizes")
    if grid[-1] < 8 * grid[0]:
        raise ValueError("n_grid must span at least three octaves")
    if reps < 1:
        raise ValueError("reps must be positive")
    exact = exact_ccdi_rate(model, cfg.k, conditional=cfg.mode == "cc")
    if exact <= ZERO_RATE_TOL:
        exact = 0.0
    errors = []
    for gi, n in enumerate(grid):
        rows = monte_carlo_estimates(model, cfg, n + cfg.k, [(gi, r) for r in range(reps)], seed, workers)
        errors.append(float(np.mean([abs(est - exact) for est, _ in rows])))
    slope, intercept = fit_loglog(grid, errors)
    return DichotomyReport(
        k=cfg.k,
        mode=cfg.mode,
        exact_rate=exact,
        n_grid=grid,
        reps=reps,
        mean_abs_error=errors,
        slope=slope,
        intercept=intercept,
        high_variance=reps < 100,
    )
