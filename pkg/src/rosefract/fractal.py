"""Scale-local dimension machinery.

Covers, packings and capacities are computed exactly at each scale (the
infima in the definitions are the objects of interest), then a windowed
regression replaces the r -> 0 limit.  Sets enter as point clouds; callers
collapse interval sets to points at their native resolution first.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import DimensionEstimate
from .stats import ols

__all__ = [
    "CoverProblem",
    "KernelParams",
    "CapacityProblem",
    "CapacitySolution",
    "collapse_points",
    "box_count",
    "box_dim_estimate",
    "constrained_cover_cost",
    "intermediate_dim_estimate",
    "phi_kernel",
    "capacity",
    "profile_dim_estimate",
    "packing_count",
    "packing_predim_estimate",
]


def collapse_points(points, resolution: float = 0.0) -> np.ndarray:
    """Sorted unique points, snapped to a grid of the given resolution."""
    pts = np.asarray(points, dtype=float)
    if resolution > 0:
        pts = np.round(pts / resolution) * resolution
    return np.unique(pts)


@dataclass(frozen=True)
class CoverProblem:
    """Cover a point set by intervals with lengths confined to [r, r^theta]."""

    points: np.ndarray
    r: float
    theta: float
    s: float

    def __post_init__(self) -> None:
        if not 0.0 < self.r < 1.0:
            raise ValueError(f"scale must lie in (0, 1), got {self.r}")
        if not 0.0 < self.theta <= 1.0:
            raise ValueError(f"theta must lie in (0, 1], got {self.theta}")
        if not 0.0 <= self.s <= 1.0:
            raise ValueError(f"exponent must lie in [0, 1], got {self.s}")
        pts = np.sort(np.asarray(self.points, dtype=float))
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)


def constrained_cover_cost(problem: CoverProblem) -> float:
    """Exact minimum of sum |U_i|^s over admissible covers, by DP.

    dp[i] = min over j with x_i - x_j <= r^theta of
            dp[j-1] + max(r, x_i - x_j)^s.
    Empty input costs 0 by convention.
    """
    x = problem.points
    k = x.size
    if k == 0:
        return 0.0
    r, s = problem.r, problem.s
    r_hi = r**problem.theta
    j_min = np.searchsorted(x, x - r_hi, side="left")
    dp = np.empty(k + 1)
    dp[0] = 0.0
    for i in range(1, k + 1):
        j0 = j_min[i - 1]
        spans = x[i - 1] - x[j0:i]
        dp[i] = np.min(dp[j0:i] + np.maximum(spans, r) ** s)
    return float(dp[k])


def box_count(points, delta: float) -> int:
    """Number of grid-aligned boxes [k*delta, (k+1)*delta) hit by the set."""
    if delta <= 0:
        raise ValueError(f"box size must be positive, got {delta}")
    pts = np.asarray(points, dtype=float)
    if pts.size == 0:
        return 0
    return int(np.unique(np.floor(pts / delta)).size)


def _dyadic_scales(lo: float, hi: float) -> np.ndarray:
    if not 0 < lo < hi:
        raise ValueError(f"need 0 < lo < hi, got [{lo}, {hi}]")
    count = int(np.floor(np.log2(hi / lo) * (1 + 1e-12))) + 1
    return hi / 2.0 ** np.arange(count)


def _count_slope_estimate(
    points, delta_lo: float, delta_hi: float, scales, counter, method: str
) -> DimensionEstimate:
    pts = np.asarray(points, dtype=float)
    if pts.size == 0:
        raise ValueError("cannot estimate a dimension for an empty set")
    scales = _dyadic_scales(delta_lo, delta_hi) if scales is None else np.asarray(scales, float)
    if scales.size < 4:
        raise ValueError(f"need >= 4 scales between {delta_lo} and {delta_hi}")
    counts = np.array([counter(pts, d) for d in scales])
    fit = ols(np.log(1.0 / scales), np.log(counts))
    diags = tuple({"delta": float(d), "count": int(c)} for d, c in zip(scales, counts))
    return DimensionEstimate(
        value=fit.slope,
        stderr=fit.stderr_slope,
        scale_lo=float(np.min(scales)),
        scale_hi=float(np.max(scales)),
        method=method,
        diagnostics=diags,
    )


def box_dim_estimate(
    points, delta_lo: float, delta_hi: float, scales=None
) -> DimensionEstimate:
    """Box dimension: OLS slope of log box_count against log(1/delta).

    Scales default to the dyadic sequence in [delta_lo, delta_hi]; at least
    4 are required.
    """
    return _count_slope_estimate(points, delta_lo, delta_hi, scales, box_count, "box")


def packing_count(points, delta: float) -> int:
    """Greedy left-to-right count of disjoint closed balls of radius delta.

    Greedy is optimal in one dimension for equal radii; closed balls are
    disjoint when centers are more than 2*delta apart.
    """
    if delta <= 0:
        raise ValueError(f"ball radius must be positive, got {delta}")
    pts = np.unique(np.asarray(points, dtype=float))
    if pts.size == 0:
        return 0
    count = 0
    i = 0
    while i < pts.size:
        count += 1
        i = int(np.searchsorted(pts, pts[i] + 2.0 * delta, side="right"))
    return count


def packing_predim_estimate(
    points, delta_lo: float, delta_hi: float, scales=None
) -> DimensionEstimate:
    """Packing pre-measure exponent: slope of log packing_count vs log(1/delta).

    This targets the upper box dimension (the outer inf over countable
    decompositions in the packing dimension is not computable from data);
    for the level sets both quantities coincide.
    """
    return _count_slope_estimate(
        points, delta_lo, delta_hi, scales, packing_count, "packing"
    )


@dataclass(frozen=True)
class KernelParams:
    r: float
    theta: float
    s: float
    m: float

    def __post_init__(self) -> None:
        if not 0.0 < self.r < 1.0:
            raise ValueError(f"scale must lie in (0, 1), got {self.r}")
        if not 0.0 < self.theta <= 1.0:
            raise ValueError(f"theta must lie in (0, 1], got {self.theta}")
        if not 0.0 < self.m <= 1.0:
            raise ValueError(f"m must lie in (0, 1], got {self.m}")
        if not 0.0 <= self.s <= self.m:
            raise ValueError(f"exponent must lie in [0, m], got {self.s}")


def phi_kernel(x, params: KernelParams):
    """Three-branch potential kernel, continuous and radially non-increasing.

    1 for |x| < r; (r/|x|)^s for r <= |x| < r^theta;
    r^{theta(m-s)+s} / |x|^m beyond.  Values lie in (0, 1].
    """
    ax = np.abs(np.asarray(x, dtype=float))
    scalar = ax.ndim == 0
    ax = np.atleast_1d(ax)
    r, s, m = params.r, params.s, params.m
    r_hi = r**params.theta
    out = np.ones_like(ax)
    mid = (ax >= r) & (ax < r_hi)
    far = ax >= r_hi
    out[mid] = (r / ax[mid]) ** s
    out[far] = r ** (params.theta * (m - s) + s) / ax[far] ** m
    return float(out[0]) if scalar else out


@dataclass(frozen=True)
class CapacityProblem:
    """Energy minimization over probability measures on a finite site set."""

    sites: np.ndarray
    params: KernelParams

    def __post_init__(self) -> None:
        sites = np.asarray(self.sites, dtype=float)
        if sites.size < 1:
            raise ValueError("capacity needs at least one site")
        sites.flags.writeable = False
        object.__setattr__(self, "sites", sites)


@dataclass(frozen=True)
class CapacitySolution:
    value: float
    energy: float
    weights: np.ndarray
    gap: float
    iterations: int
    converged: bool


def energy(problem: CapacityProblem, weights) -> float:
    """Quadratic energy of a weight vector on the problem's sites."""
    mu = np.asarray(weights, dtype=float)
    phi = phi_kernel(problem.sites[:, None] - problem.sites[None, :], problem.params)
    return float(mu @ phi @ mu)


def capacity(
    problem: CapacityProblem, tol: float = 1e-8, max_iter: int = 100_000
) -> CapacitySolution:
    """Reciprocal of the minimal energy, by Frank-Wolfe over the simplex.

    The linear subproblem is an argmin over coordinates; away steps are used
    so that boundary optima converge at a useful rate.  Stops at duality gap
    <= tol or at the iteration cap (the result is then flagged, not raised).
    """
    sites = problem.sites
    k = sites.size
    if k == 1:
        return CapacitySolution(1.0, 1.0, np.ones(1), 0.0, 0, True)
    phi = phi_kernel(sites[:, None] - sites[None, :], problem.params)
    mu = np.full(k, 1.0 / k)
    q = phi @ mu
    gap = np.inf
    it = 0
    for it in range(1, max_iter + 1):
        if it % 256 == 0:
            q = phi @ mu  # refresh against incremental drift
        e = float(mu @ q)
        j_fw = int(np.argmin(q))
        gap = 2.0 * (e - q[j_fw])
        if gap <= tol:
            break
        support = np.flatnonzero(mu > 0)
        j_aw = int(support[np.argmax(q[support])])
        gap_aw = 2.0 * (q[j_aw] - e)
        if gap >= gap_aw:
            # toward vertex: mu' = (1-g) mu + g e_fw
            curv = 1.0 - 2.0 * q[j_fw] + e
            g = 1.0 if curv <= 0 else min(1.0, gap / (2.0 * curv))
            mu *= 1.0 - g
            mu[j_fw] += g
            q = (1.0 - g) * q + g * phi[:, j_fw]
        else:
            # away from vertex: mu' = (1+g) mu - g e_aw
            g_max = mu[j_aw] / (1.0 - mu[j_aw]) if mu[j_aw] < 1.0 else 1.0
            curv = e - 2.0 * q[j_aw] + 1.0
            g = g_max if curv <= 0 else min(g_max, gap_aw / (2.0 * curv))
            mu *= 1.0 + g
            mu[j_aw] = max(mu[j_aw] - g, 0.0)
            q = (1.0 + g) * q - g * phi[:, j_aw]
    q = phi @ mu
    e = float(mu @ q)
    gap = 2.0 * (e - float(np.min(q)))
    return CapacitySolution(
        value=1.0 / e,
        energy=e,
        weights=mu,
        gap=float(gap),
        iterations=it,
        converged=gap <= tol,
    )


def _extrapolate(scales, values, method: str, diags, flags) -> DimensionEstimate:
    # replace the r -> 0 limit: regress s(r) on 1/log(1/r), report the intercept
    scales = np.asarray(scales, dtype=float)
    xs = 1.0 / np.log(1.0 / scales)
    fit = ols(xs, np.asarray(values, dtype=float))
    return DimensionEstimate(
        value=fit.intercept,
        stderr=fit.stderr_intercept,
        scale_lo=float(np.min(scales)),
        scale_hi=float(np.max(scales)),
        method=method,
        diagnostics=tuple(diags),
        flags=tuple(flags),
    )


def intermediate_dim_estimate(
    points,
    theta: float,
    r_grid,
    collapse_factor: float = 0.01,
    min_scales: int = 4,
) -> DimensionEstimate:
    """Theta-intermediate dimension from the constrained-cover cost.

    Per scale r, bisection solves cost(s) = 1 (the finite-scale surrogate of
    log H / -log r -> 0); the estimates s(r) are then extrapolated to r -> 0
    against 1/log(1/r).  Scales where the set is too sparse to bracket the
    root are dropped with a diagnostic.
    """
    pts = np.asarray(points, dtype=float)
    diags = []
    kept_r = []
    kept_s = []
    flags = []
    for r in sorted(np.asarray(r_grid, dtype=float), reverse=True):
        sub = collapse_points(pts, r * collapse_factor)
        cost = lambda s: constrained_cover_cost(CoverProblem(sub, r, theta, s))
        c0 = cost(0.0)
        if c0 < 1.0:
            diags.append({"r": r, "dropped": "sparse", "cost_at_0": c0})
            continue
        if cost(1.0) > 1.0:
            s_r = 1.0
            diags.append({"r": r, "s": s_r, "clamped": True})
        else:
            lo, hi = 0.0, 1.0
            for _ in range(40):
                mid = 0.5 * (lo + hi)
                if cost(mid) >= 1.0:
                    lo = mid
                else:
                    hi = mid
            s_r = 0.5 * (lo + hi)
            diags.append({"r": r, "s": s_r, "points": int(sub.size)})
        kept_r.append(r)
        kept_s.append(s_r)
    if len(kept_r) < min_scales:
        raise ValueError(
            f"only {len(kept_r)} usable scales (need {min_scales}) for theta={theta}"
        )
    return _extrapolate(kept_r, kept_s, f"intermediate-theta={theta:g}", diags, flags)


def profile_dim_estimate(
    points,
    theta: float,
    m: float,
    r_grid,
    max_sites: int = 512,
    collapse_factor: float = 0.01,
    min_scales: int = 4,
) -> DimensionEstimate:
    """Intermediate dimension profile via kernel capacities.

    Per scale r, bisection finds the fixed point s = log C(s) / (-log r) in
    [0, m] (at theta = 1 the kernel does not depend on s, so the fixed point
    is read off from a single capacity solve).  Site sets are collapsed and
    evenly subsampled to at most max_sites per scale.
    """
    pts = np.asarray(points, dtype=float)
    diags = []
    kept_r = []
    kept_s = []
    flags = set()
    for r in sorted(np.asarray(r_grid, dtype=float), reverse=True):
        sub = collapse_points(pts, r * collapse_factor)
        if sub.size > max_sites:
            sub = sub[np.unique(np.round(np.linspace(0, sub.size - 1, max_sites)).astype(int))]
        neg_log_r = -np.log(r)

        def s_from_capacity(s_val: float) -> tuple[float, bool]:
            sol = capacity(CapacityProblem(sub, KernelParams(r, theta, s_val, m)))
            if not sol.converged:
                flags.add("capacity-not-converged")
            return np.log(sol.value) / neg_log_r, sol.converged

        if theta == 1.0:
            s_r, _ = s_from_capacity(m)
            s_r = min(max(s_r, 0.0), m)
        else:
            g_m, _ = s_from_capacity(m)
            if g_m > m:
                diags.append({"r": r, "dropped": "bracket", "value_at_m": g_m})
                continue
            lo, hi = 0.0, m
            for _ in range(30):
                mid = 0.5 * (lo + hi)
                g_mid, _ = s_from_capacity(mid)
                if g_mid >= mid:
                    lo = mid
                else:
                    hi = mid
            s_r = 0.5 * (lo + hi)
        diags.append({"r": r, "s": s_r, "sites": int(sub.size)})
        kept_r.append(r)
        kept_s.append(s_r)
    if len(kept_r) < min_scales:
        raise ValueError(
            f"only {len(kept_r)} usable scales (need {min_scales}) for profile m={m}"
        )
    return _extrapolate(
        kept_r, kept_s, f"profile-theta={theta:g}-m={m:g}", diags, sorted(flags)
    )
