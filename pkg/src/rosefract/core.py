"""Shared domain types: grids, sample paths, interval/pixel sets, seeding.

Everything here is immutable after construction and safe to share across
concurrent workers; all operations are pure functions.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np

__all__ = [
    "validate_hurst",
    "PathGrid",
    "SamplePath",
    "IntervalSet",
    "PixelSet",
    "DimensionEstimate",
    "pixelize",
    "restrict",
    "measure_between",
    "derive_seed",
]

_MASK64 = (1 << 64) - 1


def validate_hurst(H: float) -> float:
    """Validate a self-similarity index: must lie in (1/2, 1)."""
    H = float(H)
    if not 0.5 < H < 1.0:
        raise ValueError(f"Hurst index must lie in (1/2, 1), got {H}")
    return H


@dataclass(frozen=True)
class PathGrid:
    """Time grid with n steps (n+1 nodes), uniform or geometric.

    Uniform: t_i = t0 + i*dt.  Geometric: t_i = t0 * q**i with q > 1.
    """

    t0: float
    dt: float
    n: int
    kind: str = "uniform"
    q: float = 0.0

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError(f"grid needs n >= 1 steps, got {self.n}")
        if self.kind == "uniform":
            if self.dt <= 0:
                raise ValueError(f"uniform grid needs dt > 0, got {self.dt}")
        elif self.kind == "geometric":
            if self.t0 <= 0:
                raise ValueError("geometric grid needs t0 > 0")
            if self.q <= 1:
                raise ValueError(f"geometric grid needs ratio q > 1, got {self.q}")
        else:
            raise ValueError(f"unknown grid kind {self.kind!r}")

    def times(self) -> np.ndarray:
        i = np.arange(self.n + 1)
        if self.kind == "uniform":
            return self.t0 + i * self.dt
        return self.t0 * self.q ** i

    @property
    def horizon(self) -> float:
        return float(self.times()[-1])


@dataclass(frozen=True)
class SamplePath:
    """A realization Z(t_i) on a grid, tagged with its Hurst index and seed."""

    grid: PathGrid
    values: np.ndarray
    H: float
    seed: int

    def __post_init__(self) -> None:
        validate_hurst(self.H)
        v = np.ascontiguousarray(self.values, dtype=float)
        if v.shape != (self.grid.n + 1,):
            raise ValueError(
                f"values length {v.shape} does not match grid with {self.grid.n} steps"
            )
        if not np.all(np.isfinite(v)):
            raise ValueError("path contains non-finite values")
        if self.grid.kind == "uniform" and self.grid.t0 == 0.0 and v[0] != 0.0:
            raise ValueError("a path started at t=0 must have Z(0) = 0")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    def times(self) -> np.ndarray:
        return self.grid.times()

    @property
    def dt(self) -> float:
        if self.grid.kind != "uniform":
            raise ValueError("dt is only defined for uniform grids")
        return self.grid.dt


class IntervalSet:
    """Finite union of closed intervals, stored sorted and disjoint.

    Overlapping or touching input intervals are merged on construction, so
    the invariant b_i < a_{i+1} always holds.
    """

    __slots__ = ("a", "b")

    def __init__(self, intervals: Iterable[tuple[float, float]] = ()) -> None:
        pairs = np.asarray(list(intervals), dtype=float)
        if pairs.size == 0:
            a = np.empty(0)
            b = np.empty(0)
        else:
            if pairs.ndim != 2 or pairs.shape[1] != 2:
                raise ValueError("intervals must be (a, b) pairs")
            if np.any(pairs[:, 0] > pairs[:, 1]):
                raise ValueError("intervals require a <= b")
            order = np.argsort(pairs[:, 0], kind="stable")
            lo = pairs[order, 0]
            hi = pairs[order, 1]
            reach = np.maximum.accumulate(hi)
            starts = np.empty(lo.size, dtype=bool)
            starts[0] = True
            starts[1:] = lo[1:] > reach[:-1]  # closed intervals: touching merges
            start_idx = np.flatnonzero(starts)
            end_idx = np.append(start_idx[1:] - 1, lo.size - 1)
            a = lo[start_idx]
            b = reach[end_idx]
        a.flags.writeable = False
        b.flags.writeable = False
        self.a = a
        self.b = b

    @classmethod
    def _from_sorted(cls, a: np.ndarray, b: np.ndarray) -> "IntervalSet":
        # internal fast path: inputs already sorted, disjoint and validated
        s = cls.__new__(cls)
        a = np.ascontiguousarray(a, dtype=float)
        b = np.ascontiguousarray(b, dtype=float)
        a.flags.writeable = False
        b.flags.writeable = False
        s.a = a
        s.b = b
        return s

    def __len__(self) -> int:
        return self.a.size

    def __iter__(self) -> Iterator[tuple[float, float]]:
        return iter(zip(self.a.tolist(), self.b.tolist()))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, IntervalSet):
            return NotImplemented
        return np.array_equal(self.a, other.a) and np.array_equal(self.b, other.b)

    def __repr__(self) -> str:
        if len(self) <= 4:
            body = ", ".join(f"[{lo:g}, {hi:g}]" for lo, hi in self)
        else:
            body = f"{len(self)} intervals, measure {self.measure:g}"
        return f"IntervalSet({body})"

    @property
    def measure(self) -> float:
        """Total Lebesgue measure."""
        return float(np.sum(self.b - self.a))

    @property
    def is_empty(self) -> bool:
        return self.a.size == 0

    def to_csv(self, path: str) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["a", "b"])
            for lo, hi in self:
                w.writerow([repr(lo), repr(hi)])

    @classmethod
    def from_csv(cls, path: str) -> "IntervalSet":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        if not rows or rows[0] != ["a", "b"]:
            raise ValueError(f"{path}: expected CSV header 'a,b'")
        return cls((float(r[0]), float(r[1])) for r in rows[1:])


class PixelSet:
    """Set of unit cells [k, k+1) indexed by non-negative integers k."""

    __slots__ = ("cells",)

    def __init__(self, cells: Iterable[int] = ()) -> None:
        c = np.unique(np.asarray(list(cells), dtype=np.int64))
        if c.size and c[0] < 0:
            raise ValueError("pixel cells must be non-negative")
        c.flags.writeable = False
        self.cells = c

    @classmethod
    def _from_sorted(cls, cells: np.ndarray) -> "PixelSet":
        s = cls.__new__(cls)
        c = np.ascontiguousarray(cells, dtype=np.int64)
        c.flags.writeable = False
        s.cells = c
        return s

    def __len__(self) -> int:
        return self.cells.size

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PixelSet):
            return NotImplemented
        return np.array_equal(self.cells, other.cells)

    def __repr__(self) -> str:
        return f"PixelSet({self.cells.tolist() if len(self) <= 8 else f'{len(self)} cells'})"

    def to_csv(self, path: str) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["cell"])
            for k in self.cells.tolist():
                w.writerow([k])

    @classmethod
    def from_csv(cls, path: str) -> "PixelSet":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        if not rows or rows[0] != ["cell"]:
            raise ValueError(f"{path}: expected CSV header 'cell'")
        return cls(int(r[0]) for r in rows[1:])


@dataclass(frozen=True)
class DimensionEstimate:
    """A dimension value with its regression window and per-scale diagnostics.

    All dimensions are limits; estimates replace the limit by a windowed
    regression, so the window [scale_lo, scale_hi] is part of the result.
    """

    value: float
    stderr: float
    scale_lo: float
    scale_hi: float
    method: str
    diagnostics: tuple = ()
    flags: tuple = ()

    def __post_init__(self) -> None:
        if not np.isfinite(self.value):
            raise ValueError("dimension estimate must be finite")
        if self.stderr < 0:
            raise ValueError("stderr must be >= 0")
        if not self.scale_lo < self.scale_hi:
            raise ValueError("scale window requires scale_lo < scale_hi")

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "stderr": self.stderr,
            "scales": [self.scale_lo, self.scale_hi],
            "method": self.method,
            "diagnostics": [dict(d) for d in self.diagnostics],
            "flags": list(self.flags),
        }


def pixelize(s: IntervalSet) -> PixelSet:
    """Mark every unit cell [k, k+1) that the set intersects.

    All interval endpoints must be >= 0.
    """
    if s.is_empty:
        return PixelSet()
    if s.a[0] < 0:
        raise ValueError("pixelize requires non-negative interval endpoints")
    starts = np.floor(s.a).astype(np.int64)
    ends = np.floor(s.b).astype(np.int64)  # cell [floor(b), ...) meets closed [a, b]
    lengths = ends - starts + 1
    offsets = np.cumsum(lengths)
    idx = np.arange(offsets[-1]) - np.repeat(offsets - lengths, lengths)
    cells = np.repeat(starts, lengths) + idx
    return PixelSet._from_sorted(np.unique(cells))


def restrict(s: IntervalSet, lo: float, hi: float) -> IntervalSet:
    """Intersect the set with the closed window [lo, hi]."""
    if lo > hi:
        raise ValueError(f"restrict window requires lo <= hi, got [{lo}, {hi}]")
    if s.is_empty:
        return s
    a = np.maximum(s.a, lo)
    b = np.minimum(s.b, hi)
    keep = a <= b
    return IntervalSet._from_sorted(a[keep], b[keep])


def measure_between(s: IntervalSet, lo: float, hi: float) -> float:
    """Lebesgue measure of s ∩ [lo, hi] without building the restriction."""
    if lo > hi:
        raise ValueError(f"window requires lo <= hi, got [{lo}, {hi}]")
    if s.is_empty:
        return 0.0
    clipped = np.minimum(s.b, hi) - np.maximum(s.a, lo)
    return float(np.sum(np.maximum(clipped, 0.0)))


def derive_seed(master: int, replica: int) -> int:
    """Derive a per-replica seed from a master seed.

    SplitMix64-style avalanche mixing on fixed-width 64-bit integers, so the
    result is identical on every platform.  Replica streams are reproducible:
    the same (master, replica) pair always yields the same seed.
    """
    if replica < 0:
        raise ValueError("replica index must be >= 0")
    z = (int(master) + (replica + 1) * 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)
