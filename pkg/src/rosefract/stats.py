"""Statistical utilities with fixed, test-pinned numerics.

Nothing here owns randomness: every routine takes explicit data or an
explicit seed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = [
    "RegressionResult",
    "ols",
    "ks_two_sample",
    "ks_critical_value",
    "bootstrap_ci",
]

# Asymptotic Kolmogorov quantiles c(alpha) = sqrt(-ln(alpha/2) / 2).
_KS_COEFF = {0.01: 1.6276236115189503, 0.05: 1.3581015157406195}


@dataclass(frozen=True)
class RegressionResult:
    slope: float
    intercept: float
    stderr_slope: float
    stderr_intercept: float
    r_squared: float


def ols(xs, ys) -> RegressionResult:
    """Ordinary least squares fit y = slope*x + intercept.

    Requires at least 3 points with non-degenerate abscissae; slope is exact
    for affine data.
    """
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.size != y.size:
        raise ValueError("xs and ys must have the same length")
    if x.size < 3:
        raise ValueError(f"regression needs >= 3 points, got {x.size}")
    sxx = float(np.sum((x - x.mean()) ** 2))
    if sxx == 0.0:
        raise ValueError("regression abscissae are all equal")
    n = x.size
    slope = float(np.sum((x - x.mean()) * (y - y.mean())) / sxx)
    intercept = float(y.mean() - slope * x.mean())
    resid = y - (slope * x + intercept)
    ss_res = float(np.sum(resid**2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    sigma2 = ss_res / (n - 2)
    stderr_slope = float(np.sqrt(sigma2 / sxx))
    stderr_intercept = float(np.sqrt(sigma2 * (1.0 / n + x.mean() ** 2 / sxx)))
    r_squared = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return RegressionResult(slope, intercept, stderr_slope, stderr_intercept, r_squared)


def ks_critical_value(m: int, n: int, alpha: float = 0.01) -> float:
    """Asymptotic two-sample KS critical value c(alpha)*sqrt((m+n)/(m*n))."""
    if alpha not in _KS_COEFF:
        raise ValueError(f"alpha must be one of {sorted(_KS_COEFF)}, got {alpha}")
    return _KS_COEFF[alpha] * np.sqrt((m + n) / (m * n))


def ks_two_sample(a, b) -> tuple[float, dict[float, float]]:
    """Two-sample Kolmogorov-Smirnov statistic and its 1%/5% critical values.

    Returns (statistic, {alpha: critical_value}).  Both samples must have at
    least 50 observations for the asymptotic critical values to make sense.
    """
    a = np.sort(np.asarray(a, dtype=float))
    b = np.sort(np.asarray(b, dtype=float))
    m, n = a.size, b.size
    if m < 50 or n < 50:
        raise ValueError(f"KS test needs >= 50 samples per side, got {m} and {n}")
    grid = np.concatenate([a, b])
    cdf_a = np.searchsorted(a, grid, side="right") / m
    cdf_b = np.searchsorted(b, grid, side="right") / n
    stat = float(np.max(np.abs(cdf_a - cdf_b)))
    crits = {alpha: float(ks_critical_value(m, n, alpha)) for alpha in _KS_COEFF}
    return stat, crits


def bootstrap_ci(
    values,
    statistic: Callable[[np.ndarray], float],
    B: int = 1000,
    level: float = 0.95,
    seed: int = 0,
) -> tuple[float, float]:
    """Percentile bootstrap confidence interval, deterministic given seed."""
    v = np.asarray(values, dtype=float)
    if v.size < 20:
        raise ValueError(f"bootstrap needs >= 20 values, got {v.size}")
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, v.size, size=(B, v.size))
    reps = np.array([statistic(v[row]) for row in idx])
    lo = float(np.quantile(reps, (1 - level) / 2))
    hi = float(np.quantile(reps, 1 - (1 - level) / 2))
    return lo, hi
