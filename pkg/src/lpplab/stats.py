"""Small statistics kit: KS distances, half-normal law, OLS, bootstrap."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import erf

__all__ = [
    "Sample",
    "ks_one_sample",
    "ks_two_sample",
    "half_normal_cdf",
    "half_normal_mean",
    "linear_fit",
    "bootstrap_ci",
]


@dataclass(frozen=True, eq=False)
class Sample:
    values: np.ndarray
    sorted: bool = False

    def __post_init__(self):
        v = np.array(self.values, dtype=float, ndmin=1).ravel()
        if self.sorted and np.any(np.diff(v) < 0):
            raise ValueError("sample flagged sorted but values decrease")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def of(cls, values):
        return cls(np.sort(np.asarray(values, dtype=float).ravel()), sorted=True)

    def __len__(self):
        return len(self.values)


def _sorted_values(s):
    if isinstance(s, Sample):
        v = s.values if s.sorted else np.sort(s.values)
    else:
        v = np.sort(np.asarray(s, dtype=float).ravel())
    if v.size == 0:
        raise ValueError("sample is empty")
    return v


def ks_one_sample(s, cdf):
    """Kolmogorov-Smirnov distance between the sample ECDF and ``cdf``.

    ``D_n = max_i max(i/n - F(x_(i)), F(x_(i)) - (i-1)/n)``. ``cdf`` must
    accept a numpy array.
    """
    x = _sorted_values(s)
    n = x.size
    F = np.asarray(cdf(x), dtype=float)
    i = np.arange(1, n + 1)
    d_plus = np.max(i / n - F)
    d_minus = np.max(F - (i - 1) / n)
    return float(max(d_plus, d_minus))


def ks_two_sample(s1, s2):
    """``sup |ECDF1 - ECDF2|`` over the pooled points."""
    a = _sorted_values(s1)
    b = _sorted_values(s2)
    pooled = np.concatenate([a, b])
    cdf_a = np.searchsorted(a, pooled, side="right") / a.size
    cdf_b = np.searchsorted(b, pooled, side="right") / b.size
    return float(np.max(np.abs(cdf_a - cdf_b)))


def half_normal_cdf(sigma, x):
    """CDF of ``|N(0, sigma^2)|``: ``erf(x / (sigma*sqrt 2))`` for x >= 0, else 0.

    ``sigma == 0`` is accepted as the point mass at 0.
    """
    x = np.asarray(x, dtype=float)
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    if sigma == 0:
        out = (x >= 0).astype(float)
    else:
        out = np.where(x > 0, erf(np.maximum(x, 0.0) / (sigma * np.sqrt(2.0))), 0.0)
    return out if out.ndim else float(out)


def half_normal_mean(sigma):
    return sigma * np.sqrt(2.0 / np.pi)


def linear_fit(xs, ys):
    """Ordinary least squares ``y = slope*x + intercept``; returns ``(slope, intercept, r2)``.

    ``r2`` is 1 when the data has no spread in ``y``.
    """
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("xs and ys must be 1-D and the same length")
    if np.unique(x).size < 2:
        raise ValueError("need at least two distinct x values")
    xm, ym = x.mean(), y.mean()
    dx, dy = x - xm, y - ym
    sxx = np.dot(dx, dx)
    slope = np.dot(dx, dy) / sxx
    intercept = ym - slope * xm
    ss_tot = np.dot(dy, dy)
    resid = y - (slope * x + intercept)
    ss_res = np.dot(resid, resid)
    r2 = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    return float(slope), float(intercept), float(r2)


def bootstrap_ci(s, statistic, level, resamples, rng):
    """Percentile bootstrap interval for ``statistic`` at confidence ``level``."""
    if not 0 < level < 1:
        raise ValueError("level must be in (0, 1)")
    if resamples < 200:
        raise ValueError("use at least 200 resamples")
    v = s.values if isinstance(s, Sample) else np.asarray(s, dtype=float).ravel()
    if v.size == 0:
        raise ValueError("sample is empty")
    gen = rng.generator()
    idx = gen.integers(0, v.size, size=(resamples, v.size))
    stats = np.array([statistic(v[row]) for row in idx])
    alpha = (1.0 - level) / 2.0
    lo, hi = np.quantile(stats, [alpha, 1.0 - alpha])
    return float(lo), float(hi)
