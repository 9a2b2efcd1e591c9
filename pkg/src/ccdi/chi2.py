"""Chi-squared tail probabilities via the regularized incomplete gamma function.

Series expansion below x = a + 1 and a Lentz continued fraction above, which
stays accurate from one degree of freedom up to a few hundred thousand.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

P_FLOOR = 1e-300
_EPS = 1e-15
_TINY = 1e-300
_MAX_ITER = 1_000_000


def _log_prefactor(a: float, x: float) -> float:
    # log(x^a e^-x / Gamma(a))
    return a * math.log(x) - x - math.lgamma(a)


def _lower_series(a: float, x: float) -> float:
    term = total = 1.0 / a
    ap = a
    for _ in range(_MAX_ITER):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _EPS:
            break
    else:
        raise ArithmeticError(f"incomplete gamma series did not converge (a={a}, x={x})")
    return total * math.exp(_log_prefactor(a, x))


def _upper_fraction(a: float, x: float) -> float:
    b = x + 1.0 - a
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    else:
        raise ArithmeticError(f"incomplete gamma fraction did not converge (a={a}, x={x})")
    return h * math.exp(_log_prefactor(a, x))


def gamma_q(a: float, x: float) -> float:
    """Regularized upper incomplete gamma Q(a, x)."""
    if a <= 0:
        raise ValueError(f"shape must be positive, got {a}")
    if x < 0:
        raise ValueError(f"x must be nonnegative, got {x}")
    if x == 0:
        return 1.0
    if x < a + 1.0:
        return 1.0 - _lower_series(a, x)
    return _upper_fraction(a, x)


def gamma_p(a: float, x: float) -> float:
    """Regularized lower incomplete gamma P(a, x)."""
    if a <= 0:
        raise ValueError(f"shape must be positive, got {a}")
    if x < 0:
        raise ValueError(f"x must be nonnegative, got {x}")
    if x == 0:
        return 0.0
    if x < a + 1.0:
        return _lower_series(a, x)
    return 1.0 - _upper_fraction(a, x)


def normal_cdf(x: float) -> float:
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


@dataclass(frozen=True)
class ChiSquare:
    dof: int

    def __post_init__(self):
        if int(self.dof) != self.dof or self.dof < 1:
            raise ValueError(f"degrees of freedom must be a positive integer, got {self.dof}")

    def survival(self, x: float) -> float:
        """P(chi2 >= x), floored at 1e-300 and clamped to [0, 1]."""
        if x < 0:
            raise ValueError(f"chi-squared statistic must be nonnegative, got {x}")
        q = gamma_q(self.dof / 2.0, x / 2.0)
        return min(1.0, max(q, P_FLOOR))

    def cdf(self, x: float) -> float:
        if x < 0:
            raise ValueError(f"chi-squared statistic must be nonnegative, got {x}")
        return min(1.0, max(gamma_p(self.dof / 2.0, x / 2.0), 0.0))

    def density(self, x: float) -> float:
        half = self.dof / 2.0
        if x < 0:
            raise ValueError(f"x must be nonnegative, got {x}")
        if x == 0:
            if self.dof == 1:
                raise ValueError("chi2(1) density is singular at 0")
            return 0.5 if self.dof == 2 else 0.0
        return math.exp((half - 1.0) * math.log(x) - x / 2.0 - half * math.log(2.0) - math.lgamma(half))

    def quantile(self, prob: float) -> float:
        """Inverse of the lower-tail CDF, by bracketed bisection."""
        if not 0.0 < prob < 1.0:
            raise ValueError(f"probability must lie in (0, 1), got {prob}")
        lo, hi = 0.0, max(1.0, float(self.dof))
        while self.cdf(hi) < prob:
            lo, hi = hi, 2.0 * hi
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if self.cdf(mid) < prob:
                lo = mid
            else:
                hi = mid
            if hi - lo <= 1e-13 * max(1.0, hi):
                break
        return 0.5 * (lo + hi)

    @property
    def mean(self) -> float:
        return float(self.dof)

    @property
    def variance(self) -> float:
        return 2.0 * self.dof


def ks_statistic(sample, cdf: Callable[[float], float]) -> float:
    """Two-sided Kolmogorov-Smirnov distance between a sample and a continuous CDF."""
    xs = np.sort(np.asarray(sample, dtype=float))
    n = xs.size
    if n == 0:
        raise ValueError("empty sample")
    f = np.array([cdf(v) for v in xs])
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - f), np.max(f - (i - 1) / n)))


def ks_distance(sample, dist: ChiSquare) -> float:
    return ks_statistic(sample, dist.cdf)


def ks_normal(sample) -> float:
    return ks_statistic(sample, normal_cdf)
