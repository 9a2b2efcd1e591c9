"""Sliding-window block counts for aligned symbol series.

A window ending at position i covers x[i-k..i], y[i-k..i], z[i-k..i]. The
count table has 3(k+1) axes laid out as (x_0..x_k, y_0..y_k, z_0..z_k), with
index 0 the oldest symbol in each group, so the empirical block law can be
marginalized by axis number.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .info import JointPmf

DEFAULT_CELL_BUDGET = 10**8


class SeriesError(ValueError):
    """Invalid symbol series or incompatible series/alphabet combination."""


@dataclass(frozen=True)
class AlphabetSpec:
    """Alphabet sizes for X (m), Y (ell) and Z (t); t = 1 means no confounder."""

    m: int
    ell: int
    t: int = 1

    def __post_init__(self):
        if self.m < 2 or self.ell < 2:
            raise SeriesError(f"X and Y need at least two symbols, got m={self.m}, ell={self.ell}")
        if self.t < 1:
            raise SeriesError(f"Z alphabet size must be >= 1, got t={self.t}")

    @property
    def joint(self) -> int:
        return self.m * self.ell * self.t


@dataclass(frozen=True, eq=False)
class SymbolSeries:
    values: np.ndarray
    cardinality: int

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.ndim != 1 or v.size == 0:
            raise SeriesError("a symbol series must be a nonempty 1-d sequence")
        if not np.issubdtype(v.dtype, np.integer):
            if not np.all(np.mod(v, 1) == 0):
                raise SeriesError("symbols must be integers")
        v = v.astype(np.int64)
        if self.cardinality < 1:
            raise SeriesError(f"cardinality must be positive, got {self.cardinality}")
        if v.min() < 0 or v.max() >= self.cardinality:
            bad = int(np.flatnonzero((v < 0) | (v >= self.cardinality))[0])
            raise SeriesError(
                f"symbol {int(v[bad])} at index {bad} outside alphabet of size {self.cardinality}"
            )
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __len__(self):
        return self.values.size


def as_series(s, cardinality: int | None = None, min_cardinality: int = 1) -> SymbolSeries:
    """Wrap an array-like as a SymbolSeries, inferring the alphabet when not given."""
    if isinstance(s, SymbolSeries):
        if cardinality is not None and cardinality != s.cardinality:
            raise SeriesError(f"series has alphabet {s.cardinality}, expected {cardinality}")
        return s
    v = np.asarray(s)
    if cardinality is None:
        if v.size == 0:
            raise SeriesError("empty series")
        cardinality = max(int(v.max()) + 1, min_cardinality)
    return SymbolSeries(v, cardinality)


@dataclass(frozen=True, eq=False)
class BlockCounts:
    k: int
    alphabet: AlphabetSpec
    n: int
    counts: np.ndarray

    @property
    def x_axes(self) -> tuple[int, ...]:
        return tuple(range(0, self.k + 1))

    @property
    def y_axes(self) -> tuple[int, ...]:
        return tuple(range(self.k + 1, 2 * self.k + 2))

    @property
    def z_axes(self) -> tuple[int, ...]:
        return tuple(range(2 * self.k + 2, 3 * self.k + 3))


def block_shape(k: int, alphabet: AlphabetSpec) -> tuple[int, ...]:
    return (alphabet.m,) * (k + 1) + (alphabet.ell,) * (k + 1) + (alphabet.t,) * (k + 1)


def resolve_inputs(x, y, z=None, alphabet: AlphabetSpec | None = None):
    """Normalize (x, y, z) to int arrays plus an AlphabetSpec.

    ``z=None`` stands for a constant confounder with a one-symbol alphabet.
    """
    if alphabet is not None:
        xs = as_series(x, alphabet.m)
        ys = as_series(y, alphabet.ell)
        zs = as_series(np.zeros(len(xs), dtype=np.int64) if z is None else z, alphabet.t)
    else:
        xs = as_series(x, min_cardinality=2)
        ys = as_series(y, min_cardinality=2)
        zs = as_series(np.zeros(len(xs), dtype=np.int64), 1) if z is None else as_series(z)
        alphabet = AlphabetSpec(xs.cardinality, ys.cardinality, zs.cardinality)
    if not len(xs) == len(ys) == len(zs):
        raise SeriesError(f"series lengths differ: {len(xs)}, {len(ys)}, {len(zs)}")
    return xs.values, ys.values, zs.values, alphabet


def window_mask(length: int, k: int, boundaries: Iterable[int] | None) -> np.ndarray | None:
    """Mask over window ends k..length-1 that drops windows straddling a boundary.

    A boundary b is the index of the first symbol of a new segment; the window
    ending at i straddles it when i - k < b <= i.
    """
    if not boundaries:
        return None
    ends = np.arange(k, length)
    keep = np.ones(ends.size, dtype=bool)
    for b in boundaries:
        keep &= ~((ends - k < b) & (b <= ends))
    return keep


def window_indices(x, y, z, k: int, alphabet: AlphabetSpec) -> np.ndarray:
    """Flat cell index of every (k+1)-window, in window order."""
    length = len(x)
    n = length - k
    idx = np.zeros(n, dtype=np.int64)
    for s, radix in ((x, alphabet.m), (y, alphabet.ell), (z, alphabet.t)):
        for j in range(k + 1):
            idx *= radix
            idx += s[j:j + n]
    return idx


def count_blocks(
    x,
    y,
    z=None,
    k: int = 1,
    alphabet: AlphabetSpec | None = None,
    boundaries: Sequence[int] | None = None,
    cell_budget: int = DEFAULT_CELL_BUDGET,
) -> BlockCounts:
    """Count every (k+1)-block of the aligned series (x, y, z).

    The first k symbols are context only, so a length-L input yields
    n = L - k windows. Pass ``boundaries`` (start indices of later segments)
    to drop windows that straddle a segment boundary.
    """
    if k < 0:
        raise SeriesError(f"order k must be >= 0, got {k}")
    x, y, z, alphabet = resolve_inputs(x, y, z, alphabet)
    if len(x) <= k:
        raise SeriesError(f"series length {len(x)} must exceed k={k}")
    shape = block_shape(k, alphabet)
    size = int(np.prod(shape, dtype=object))
    if size > cell_budget:
        raise SeriesError(f"block table needs {size} cells, over the budget of {cell_budget}")
    idx = window_indices(x, y, z, k, alphabet)
    mask = window_mask(len(x), k, boundaries)
    if mask is not None:
        idx = idx[mask]
    counts = np.bincount(idx, minlength=size).reshape(shape)
    counts.setflags(write=False)
    return BlockCounts(k=k, alphabet=alphabet, n=int(idx.size), counts=counts)


def to_pmf(counts: BlockCounts) -> JointPmf:
    if counts.n <= 0:
        raise SeriesError("no windows counted")
    return JointPmf(counts.counts / counts.n)


def marginalize(counts: BlockCounts, keep: Iterable[int]) -> JointPmf:
    """Normalized marginal of the block counts over the axes in ``keep``."""
    keep = tuple(sorted(set(int(a) for a in keep)))
    if not keep:
        raise SeriesError("keep selects no axes")
    if counts.n <= 0:
        raise SeriesError("no windows counted")
    ndim = counts.counts.ndim
    if keep[0] < 0 or keep[-1] >= ndim:
        raise SeriesError(f"axes {keep} out of range for {ndim} axes")
    drop = tuple(i for i in range(ndim) if i not in keep)
    sub = counts.counts.sum(axis=drop) if drop else counts.counts
    return JointPmf(sub / counts.n)


def ccdi_axes(k: int) -> tuple[tuple[int, ...], tuple[int, ...], tuple[int, ...]]:
    """Axis roles (newest Y, all X, past Y plus all Z) for the CCDI functional."""
    y_new = (2 * k + 1,)
    xs = tuple(range(0, k + 1))
    given = tuple(range(k + 1, 2 * k + 1)) + tuple(range(2 * k + 2, 3 * k + 3))
    return y_new, xs, given
