"""Plug-in CCDI estimation and the likelihood-ratio causality tests.

The statistic 2 n I_hat is compared against a chi-squared law whose degrees of
freedom depend only on the alphabet sizes and the memory order k. UC mode is
the special case of a one-symbol confounder.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, replace
from functools import partial

import numpy as np

from .blocks import (
    AlphabetSpec,
    BlockCounts,
    block_shape,
    ccdi_axes,
    count_blocks,
    resolve_inputs,
    to_pmf,
    window_indices,
)
from .chi2 import ChiSquare, ks_normal
from .info import JointPmf, conditional_mutual_information
from .markov import exact_ccdi_rate, seed_for, simulate_many
from .parallel import chunked, map_batches

MIN_BATCHES = 100
MIN_BATCH_LENGTH = 30
_INT64_MAX = 2**63 - 1


@dataclass(frozen=True)
class TestConfig:
    k: int
    alphabet: AlphabetSpec
    significance: float = 0.05
    mode: str = "cc"

    __test__ = False

    def __post_init__(self):
        if self.k < 0:
            raise ValueError(f"k must be >= 0, got {self.k}")
        if self.mode not in ("uc", "cc"):
            raise ValueError(f"mode must be 'uc' or 'cc', got {self.mode!r}")
        if not 0.0 < self.significance < 1.0:
            raise ValueError(f"significance must lie in (0, 1), got {self.significance}")
        if self.mode == "uc" and self.alphabet.t != 1:
            object.__setattr__(self, "alphabet", replace(self.alphabet, t=1))


@dataclass(frozen=True)
class TestResult:
    estimate: float
    statistic: float
    n: int
    dof: int
    p_value: float
    reject: bool
    k: int
    mode: str
    significance: float
    small_sample: bool

    __test__ = False

    def to_record(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class VarianceEstimate:
    sigma2: float
    batch_length: int
    n_batches: int
    mean: float
    skipped: int = 0
    unreliable: bool = False


def degrees_of_freedom(cfg: TestConfig) -> int:
    """ell^k t^(k+1) (m^(k+1) - 1) (ell - 1)."""
    a, k = cfg.alphabet, cfg.k
    dof = a.ell**k * a.t ** (k + 1) * (a.m ** (k + 1) - 1) * (a.ell - 1)
    if dof > _INT64_MAX:
        raise OverflowError(f"degrees of freedom {dof} exceed a 64-bit integer")
    return dof


def ccdi_plugin(counts: BlockCounts) -> float:
    """Plug-in estimate I(Y_0; X_{-k}^0 | Y_{-k}^{-1}, Z_{-k}^0) of the empirical block law."""
    a, b, c = ccdi_axes(counts.k)
    return conditional_mutual_information(to_pmf(counts), a, b, c)


def result_from_counts(counts: BlockCounts, cfg: TestConfig) -> TestResult:
    estimate = ccdi_plugin(counts)
    statistic = 2.0 * counts.n * estimate
    dof = degrees_of_freedom(cfg)
    p = ChiSquare(dof).survival(statistic)
    return TestResult(
        estimate=estimate,
        statistic=statistic,
        n=counts.n,
        dof=dof,
        p_value=p,
        reject=p < cfg.significance,
        k=cfg.k,
        mode=cfg.mode,
        significance=cfg.significance,
        small_sample=counts.n < 10 * dof,
    )


def run_test(x, y, z=None, cfg: TestConfig | None = None, boundaries=None) -> TestResult:
    """UC or CC test of X -> Y; in UC mode ``z`` is ignored."""
    if cfg is None:
        raise ValueError("a TestConfig is required")
    if cfg.mode == "uc":
        z = None
    counts = count_blocks(x, y, z, k=cfg.k, alphabet=cfg.alphabet, boundaries=boundaries)
    return result_from_counts(counts, cfg)


def loglik_ratio_oracle(counts: BlockCounts) -> float:
    """2 {max over the full model - max over the null model} of the log-likelihood.

    Both maxima are evaluated at their closed-form transition estimates:
    Q = N(block) / N(context) for the full model, and the product of
    N(x-block, z-block, past y) / N(context) and N(y, z) / N(past y, z) for the
    null. Kept independent of the entropy route used by ``ccdi_plugin``.
    """
    k = counts.k
    N = counts.counts.astype(float)
    xs, ys, zs = counts.x_axes, counts.y_axes, counts.z_axes
    newest = (xs[-1], ys[-1], zs[-1])
    n_ctx = N.sum(axis=newest, keepdims=True)
    n_xz = N.sum(axis=ys[-1], keepdims=True)
    n_y = N.sum(axis=xs, keepdims=True)
    n_yctx = N.sum(axis=xs + (ys[-1],), keepdims=True)

    seen = N > 0
    with np.errstate(divide="ignore", invalid="ignore"):
        q_full = N / n_ctx
        q_xz = np.broadcast_to(n_xz, N.shape) / n_ctx
        q_y = np.broadcast_to(n_y / n_yctx, N.shape)
    w = N[seen]
    loglik_full = float(np.dot(w, np.log(q_full[seen])))
    loglik_null = float(np.dot(w, np.log(q_xz[seen])) + np.dot(w, np.log(q_y[seen])))
    return max(2.0 * (loglik_full - loglik_null), 0.0)


def _log_ratio_table(table: np.ndarray, k: int) -> np.ndarray:
    a, b, c = ccdi_axes(k)
    n_c = table.sum(axis=a + b, keepdims=True)
    n_ac = table.sum(axis=b, keepdims=True)
    n_bc = table.sum(axis=a, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        lr = np.log(table) + np.log(n_c) - np.log(n_ac) - np.log(n_bc)
    return lr


def _batch_means(terms: np.ndarray) -> tuple[float, int, int]:
    n = terms.size
    b = max(1, math.isqrt(n))
    nb = n // b
    if nb < 2:
        return 0.0, b, nb
    means = terms[: nb * b].reshape(nb, b).mean(axis=1)
    return float(b * means.var(ddof=1)), b, nb


def sigma2_batch_means(x, y, z=None, cfg: TestConfig | None = None, pmf: JointPmf | None = None) -> VarianceEstimate:
    """Long-run variance of the per-window log-ratio terms by non-overlapping batch means.

    The log-ratio of window i is log P(x-block, y_k | c) / (P(y_k | c) P(x-block | c)),
    c the past Y and the Z block, evaluated under the empirical block law
    (or under ``pmf`` when given). Batch length is floor(sqrt(n)). Windows whose
    cell has zero mass under ``pmf`` are skipped and counted.
    """
    if cfg is None:
        raise ValueError("a TestConfig is required")
    if cfg.mode == "uc":
        z = None
    xv, yv, zv, alphabet = resolve_inputs(x, y, z, cfg.alphabet)
    idx = window_indices(xv, yv, zv, cfg.k, alphabet)
    shape = block_shape(cfg.k, alphabet)
    if pmf is None:
        table = np.bincount(idx, minlength=int(np.prod(shape))).reshape(shape).astype(float)
    else:
        if pmf.axes != shape:
            raise ValueError(f"pmf axes {pmf.axes} do not match block shape {shape}")
        table = np.asarray(pmf.probs, dtype=float)
    return _variance_from_terms(_log_ratio_table(table, cfg.k).ravel()[idx])


def _variance_from_terms(terms: np.ndarray) -> VarianceEstimate:
    finite = np.isfinite(terms)
    skipped = int(terms.size - finite.sum())
    terms = terms[finite]
    sigma2, b, nb = _batch_means(terms)
    mean = float(terms.mean()) if terms.size else 0.0
    return VarianceEstimate(
        sigma2=max(sigma2, 0.0),
        batch_length=b,
        n_batches=nb,
        mean=mean,
        skipped=skipped,
        unreliable=nb < MIN_BATCHES or b < MIN_BATCH_LENGTH,
    )


def estimate_with_variance(x, y, z, cfg: TestConfig) -> tuple[float, VarianceEstimate, int]:
    """Plug-in estimate, its batch-means variance, and n, from one counting pass."""
    if cfg.mode == "uc":
        z = None
    xv, yv, zv, alphabet = resolve_inputs(x, y, z, cfg.alphabet)
    idx = window_indices(xv, yv, zv, cfg.k, alphabet)
    shape = block_shape(cfg.k, alphabet)
    raw = np.bincount(idx, minlength=int(np.prod(shape))).reshape(shape)
    counts = BlockCounts(cfg.k, alphabet, int(idx.size), raw)
    est = ccdi_plugin(counts)
    var = _variance_from_terms(_log_ratio_table(raw.astype(float), cfg.k).ravel()[idx])
    return est, var, counts.n


@dataclass(frozen=True)
class NormalityReport:
    reps: int
    length: int
    exact_rate: float
    ks_distance: float
    coverage: float
    mean_estimate: float
    mean_sigma2: float
    z_scores: tuple[float, ...]

    def to_record(self) -> dict:
        rec = asdict(self)
        rec.pop("z_scores")
        return rec


def _normality_batch(keys, model, cfg, length, seed):
    x, y, z = simulate_many(model, length, [seed_for(seed, r) for r in keys])
    out = []
    for i in range(len(keys)):
        est, var, n = estimate_with_variance(x[i], y[i], z[i], cfg)
        out.append((est, var.sigma2, n))
    return out


def normality_check(model, cfg: TestConfig, length: int, reps: int, seed, workers: int = 1,
                    batch: int = 32) -> NormalityReport:
    """Simulate ``reps`` runs and compare sqrt(n)(I_hat - I)/sigma_hat with N(0, 1).

    Also reports the fraction of runs whose interval I_hat +- 2 sigma_hat/sqrt(n)
    covers the exact rate. Refuses models whose exact rate is zero.
    """
    if reps < 2:
        raise ValueError("normality check needs at least two repetitions")
    exact = exact_ccdi_rate(model, cfg.k, conditional=cfg.mode == "cc")
    if exact <= 1e-12:
        raise ValueError(f"exact rate is {exact!r}; normality applies only when it is positive")
    fn = partial(_normality_batch, model=model, cfg=cfg, length=length, seed=seed)
    rows = [r for part in map_batches(fn, chunked(list(range(reps)), batch), workers) for r in part]
    est = np.array([r[0] for r in rows])
    s2 = np.array([r[1] for r in rows])
    n = np.array([r[2] for r in rows], dtype=float)
    sd = np.sqrt(s2)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.sqrt(n) * (est - exact) / sd
    z = z[np.isfinite(z)]
    covered = np.abs(est - exact) <= 2.0 * sd / np.sqrt(n)
    return NormalityReport(
        reps=reps,
        length=length,
        exact_rate=exact,
        ks_distance=ks_normal(z) if z.size else 1.0,
        coverage=float(covered.mean()),
        mean_estimate=float(est.mean()),
        mean_sigma2=float(s2.mean()),
        z_scores=tuple(z.tolist()),
    )
