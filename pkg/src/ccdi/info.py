"""Discrete information functionals over dense joint probability tables.

All quantities are in nats. Tables are numpy arrays with one axis per
variable; functions that take axis sets marginalize the table down to the
requested axes before evaluating entropies.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

PMF_ATOL = 1e-12
CMI_CLIP = 1e-12


class PmfError(ValueError):
    """Raised for invalid probability tables or axis selections."""


class SupportError(ValueError):
    """Raised when p puts mass where q has none."""


class ConsistencyError(ArithmeticError):
    """Raised when an identity that must hold up to rounding is violated."""


@dataclass(frozen=True, eq=False)
class JointPmf:
    """Dense probability table over a product of finite alphabets.

    ``probs`` has one axis per variable; ``axes`` is its shape.
    """

    probs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if p.ndim == 0:
            raise PmfError("a pmf needs at least one axis")
        if np.any(p < 0):
            raise PmfError("negative probability")
        total = p.sum()
        if abs(total - 1.0) > PMF_ATOL:
            raise PmfError(f"probabilities sum to {total!r}, not 1")
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    @property
    def axes(self) -> tuple[int, ...]:
        return self.probs.shape

    @property
    def ndim(self) -> int:
        return self.probs.ndim

    @classmethod
    def from_counts(cls, counts) -> "JointPmf":
        c = np.asarray(counts, dtype=float)
        n = c.sum()
        if n <= 0:
            raise PmfError("cannot normalize an all-zero table")
        return cls(c / n)

    def marginal(self, keep: Iterable[int]) -> np.ndarray:
        """Return the raw marginal table over ``keep`` (in ascending axis order)."""
        keep = _check_axes(keep, self.ndim)
        drop = tuple(i for i in range(self.ndim) if i not in keep)
        return self.probs.sum(axis=drop) if drop else self.probs


def as_pmf(p) -> JointPmf:
    return p if isinstance(p, JointPmf) else JointPmf(np.asarray(p, dtype=float))


def _check_axes(axes: Iterable[int], ndim: int) -> tuple[int, ...]:
    axes = tuple(sorted(int(a) for a in axes))
    if len(set(axes)) != len(axes):
        raise PmfError(f"repeated axis in {axes}")
    for a in axes:
        if not 0 <= a < ndim:
            raise PmfError(f"axis {a} out of range for a {ndim}-axis pmf")
    return axes


def _plogp_sum(p: np.ndarray) -> float:
    p = p[p > 0]
    return float(-np.dot(p, np.log(p)))


def entropy(p) -> float:
    """Shannon entropy of the full joint table, with 0 log 0 = 0."""
    return _plogp_sum(as_pmf(p).probs.ravel())


def _marginal_entropy(p: JointPmf, axes: Sequence[int]) -> float:
    if len(axes) == 0:
        return 0.0
    return _plogp_sum(p.marginal(axes).ravel())


def _disjoint(*sets: Iterable[int]) -> list[tuple[int, ...]]:
    out = [tuple(int(a) for a in s) for s in sets]
    seen: set[int] = set()
    for s in out:
        if len(set(s)) != len(s) or seen & set(s):
            raise PmfError(f"axis sets overlap: {out}")
        seen |= set(s)
    return out


def conditional_entropy(p, target_axes, given_axes=()) -> float:
    """H(target | given) = H(target, given) - H(given)."""
    p = as_pmf(p)
    target, given = _disjoint(target_axes, given_axes)
    _check_axes(target + given, p.ndim)
    h = _marginal_entropy(p, target + given) - _marginal_entropy(p, given)
    return max(h, 0.0) if h > -CMI_CLIP else h


def conditional_mutual_information(p, axes_a, axes_b, axes_c=()) -> float:
    """I(A; B | C) in nats; ``axes_c`` may be empty for plain mutual information.

    Rounding noise in [-1e-12, 0) is clipped to zero; anything more negative
    raises ConsistencyError.
    """
    p = as_pmf(p)
    a, b, c = _disjoint(axes_a, axes_b, axes_c)
    if not a or not b:
        raise PmfError("axes_a and axes_b must be nonempty")
    _check_axes(a + b + c, p.ndim)
    value = (
        _marginal_entropy(p, a + c)
        + _marginal_entropy(p, b + c)
        - _marginal_entropy(p, a + b + c)
        - _marginal_entropy(p, c)
    )
    if value < 0:
        if value < -CMI_CLIP:
            raise ConsistencyError(f"conditional mutual information {value!r} < 0")
        return 0.0
    return value


def mutual_information(p, axes_a, axes_b) -> float:
    return conditional_mutual_information(p, axes_a, axes_b, ())


def relative_entropy(p, q) -> float:
    """D(p || q); raises SupportError if p has mass on a cell where q is zero."""
    p, q = as_pmf(p), as_pmf(q)
    if p.axes != q.axes:
        raise PmfError(f"axis mismatch {p.axes} vs {q.axes}")
    pp, qq = p.probs, q.probs
    bad = (pp > 0) & (qq == 0)
    if bad.any():
        cell = tuple(int(i) for i in np.argwhere(bad)[0])
        raise SupportError(f"q is zero at cell {cell} where p = {pp[cell]!r}")
    mask = pp > 0
    d = float(np.dot(pp[mask], np.log(pp[mask] / qq[mask])))
    return max(d, 0.0)
