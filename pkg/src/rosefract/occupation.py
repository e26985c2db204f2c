"""Random sets carved from a sample path, and local time estimation.

Sets are extracted at cell resolution: a grid cell [t_i, t_{i+1}] enters the
set when the defining condition holds at an endpoint (plus a sign-change test
for level sets).  Sub-cell precision is noise below the scales any dimension
estimator can see, so no root-finding is attempted.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import IntervalSet, SamplePath

__all__ = [
    "SojournParams",
    "LevelParams",
    "LocalTimeEstimate",
    "default_level_band",
    "sojourn_set",
    "level_set",
    "local_time",
    "local_time_sup",
    "image_points",
    "node_times",
]


@dataclass(frozen=True)
class SojournParams:
    """Exponent for the moderate-deviation set {t : |Z(t)| <= t^gamma}.

    gamma ranges over [0, H]; the upper bound is checked against the path's
    H at extraction time.
    """

    gamma: float

    def __post_init__(self) -> None:
        if self.gamma < 0:
            raise ValueError(f"sojourn exponent must be >= 0, got {self.gamma}")


@dataclass(frozen=True)
class LevelParams:
    """Level x and band half-width delta for {t : Z(t) = x} at resolution dt."""

    x: float
    delta: float

    def __post_init__(self) -> None:
        if self.delta <= 0:
            raise ValueError(f"level band must be positive, got {self.delta}")


@dataclass(frozen=True)
class LocalTimeEstimate:
    """Occupation-density estimate (dt / 2 eps) * #{t_i in [a,b]: |Z(t_i)-x| <= eps}."""

    x: float
    a: float
    b: float
    eps: float
    value: float

    def __post_init__(self) -> None:
        if self.value < 0:
            raise ValueError("local time is non-negative")


def default_level_band(path: SamplePath, lam: float = 1.0) -> float:
    """Band matched to the path's one-step modulus: lam * sigma_hat * dt^H.

    sigma_hat is the unit-time scale estimated from one-step increments
    (std of dZ divided by dt^H), so the product is simply lam * std(dZ).
    The matched band keeps the discrete level set from either vanishing or
    fattening to dimension one.
    """
    if lam <= 0:
        raise ValueError("band multiplier must be positive")
    return lam * float(np.std(np.diff(path.values)))


def _cells_to_intervals(times: np.ndarray, included: np.ndarray) -> IntervalSet:
    # merge a boolean mask over grid cells into an IntervalSet
    if not np.any(included):
        return IntervalSet()
    padded = np.concatenate([[False], included, [False]])
    d = np.diff(padded.astype(np.int8))
    starts = np.flatnonzero(d == 1)
    ends = np.flatnonzero(d == -1)  # one past the last included cell
    return IntervalSet._from_sorted(times[starts], times[ends])


def sojourn_set(path: SamplePath, params: SojournParams) -> IntervalSet:
    """Union of grid cells where |Z| <= t^gamma holds at an endpoint.

    Uses the convention 0^0 = 1 so that gamma = 0 keeps the cell at t = 0.
    """
    if params.gamma > path.H:
        raise ValueError(
            f"sojourn exponent {params.gamma} exceeds the path's H = {path.H}"
        )
    t = path.times()
    with np.errstate(divide="ignore"):
        threshold = t**params.gamma if params.gamma > 0 else np.ones_like(t)
    ok = np.abs(path.values) <= threshold
    included = ok[:-1] | ok[1:]
    return _cells_to_intervals(t, included)


def level_set(path: SamplePath, params: LevelParams) -> IntervalSet:
    """Union of grid cells where Z is within delta of x or crosses x."""
    z = path.values - params.x
    near = np.abs(z) <= params.delta
    crosses = np.signbit(z[:-1]) != np.signbit(z[1:])
    included = near[:-1] | near[1:] | crosses
    return _cells_to_intervals(path.times(), included)


def _window_indices(path: SamplePath, a: float, b: float) -> tuple[int, int]:
    t = path.times()
    if a > b:
        raise ValueError(f"window requires a <= b, got [{a}, {b}]")
    if a < t[0] - 1e-12 or b > t[-1] + 1e-12:
        raise ValueError(f"window [{a}, {b}] is outside the path horizon")
    lo = int(np.searchsorted(t, a, side="left"))
    hi = int(np.searchsorted(t, b, side="right"))
    return lo, hi


def local_time(path: SamplePath, x: float, a: float, b: float, eps: float) -> LocalTimeEstimate:
    """Epsilon-band occupation estimate of the local time at level x on [a, b]."""
    if eps <= 0:
        raise ValueError(f"band must be positive, got {eps}")
    lo, hi = _window_indices(path, a, b)
    count = int(np.count_nonzero(np.abs(path.values[lo:hi] - x) <= eps))
    value = path.dt * count / (2.0 * eps)
    return LocalTimeEstimate(x=x, a=a, b=b, eps=eps, value=value)


def local_time_sup(
    path: SamplePath,
    a: float,
    b: float,
    r: float,
    eps: float | None = None,
    x_grid=None,
    num_centers: int = 65,
) -> float:
    """sup over levels x and window centers s of L(x, [s-r, s+r]).

    Windows stay inside [a, b]; centers are snapped to grid nodes.  When eps
    is omitted it is matched to the path modulus at the window scale,
    sigma_hat * (2r)^H, which keeps the band informative as r -> 0.  A
    supplied x-grid must span the path range over [a, b] with spacing <= eps.
    """
    if r <= 0 or a + r > b - r:
        raise ValueError("need r > 0 and [a + r, b - r] non-empty")
    dt = path.dt
    if eps is None:
        sigma_hat = float(np.std(np.diff(path.values))) / dt**path.H
        eps = sigma_hat * (2.0 * r) ** path.H
    lo, hi = _window_indices(path, a, b)
    t = path.times()[lo:hi]
    z = path.values[lo:hi]
    if x_grid is None:
        x_grid = np.arange(z.min() - eps, z.max() + eps, eps)
    else:
        x_grid = np.asarray(x_grid, dtype=float)
        if x_grid.size < 2 or np.max(np.diff(x_grid)) > eps * (1 + 1e-9):
            raise ValueError("x-grid must span the range with spacing <= eps")
        if x_grid[0] > z.min() or x_grid[-1] < z.max():
            raise ValueError("x-grid must span the path range over the window")
    centers = np.linspace(a + r, b - r, num_centers)
    c_idx = np.rint((centers - t[0]) / dt).astype(np.int64)
    w = int(np.floor(r / dt + 1e-9))
    lo_idx = np.clip(c_idx - w, 0, z.size)
    hi_idx = np.clip(c_idx + w + 1, 0, z.size)
    best = 0
    for x in x_grid:
        csum = np.concatenate([[0], np.cumsum(np.abs(z - x) <= eps)])
        best = max(best, int(np.max(csum[hi_idx] - csum[lo_idx])))
    return dt * best / (2.0 * eps)


def image_points(path: SamplePath, e: IntervalSet) -> np.ndarray:
    """Values Z(t_i) over the grid nodes t_i that fall in E."""
    t = path.times()
    if not e.is_empty and (e.a[0] < t[0] - 1e-12 or e.b[-1] > t[-1] + 1e-12):
        raise ValueError("E extends outside the path horizon")
    return path.values[_node_mask(t, e)]


def node_times(path: SamplePath, e: IntervalSet) -> np.ndarray:
    """Grid node times that fall in E (the point representation of E)."""
    t = path.times()
    return t[_node_mask(t, e)]


def _node_mask(t: np.ndarray, e: IntervalSet) -> np.ndarray:
    mask = np.zeros(t.size, dtype=bool)
    lo = np.searchsorted(t, e.a, side="left")
    hi = np.searchsorted(t, e.b, side="right")
    for i, j in zip(lo, hi):
        mask[i:j] = True
    return mask
