import numpy as np
import pytest

from rosefract.core import (
    DimensionEstimate,
    IntervalSet,
    PathGrid,
    PixelSet,
    SamplePath,
    derive_seed,
    measure_between,
    pixelize,
    restrict,
    validate_hurst,
)


class TestIntervalSet:
    def test_merges_overlapping_and_touching(self):
        s = IntervalSet([(0, 1), (1, 2), (5, 6), (5.5, 5.8)])
        assert list(s) == [(0, 2), (5, 6)]

    def test_rejects_inverted(self):
        with pytest.raises(ValueError):
            IntervalSet([(2, 1)])

    def test_measure_additive_and_split_invariant(self):
        s = IntervalSet([(0, 1), (3, 5)])
        assert s.measure == pytest.approx(3.0)
        split = IntervalSet([(0, 0.37), (0.37, 1), (3, 4.2), (4.2, 5)])
        assert split == s
        assert split.measure == pytest.approx(s.measure)

    def test_random_merge_matches_bruteforce(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            k = rng.integers(1, 12)
            a = rng.uniform(0, 10, k)
            b = a + rng.uniform(0, 2, k)
            s = IntervalSet(zip(a, b))
            # brute force membership on a fine probe grid
            probes = np.linspace(-1, 13, 2001)
            member = np.zeros(probes.size, dtype=bool)
            for lo, hi in zip(a, b):
                member |= (probes >= lo) & (probes <= hi)
            mine = np.zeros(probes.size, dtype=bool)
            for lo, hi in s:
                mine |= (probes >= lo) & (probes <= hi)
            assert np.array_equal(member, mine)
            assert np.all(s.b[:-1] < s.a[1:])

    def test_csv_round_trip(self, tmp_path):
        s = IntervalSet([(0.125, 0.25), (1.0, 2.5)])
        f = tmp_path / "set.csv"
        s.to_csv(str(f))
        assert IntervalSet.from_csv(str(f)) == s


class TestPixelize:
    def test_single_cell_overlap(self):
        assert pixelize(IntervalSet([(0.2, 0.4)])).cells.tolist() == [0]

    def test_three_cell_span(self):
        assert pixelize(IntervalSet([(1.5, 3.2)])).cells.tolist() == [1, 2, 3]

    def test_empty(self):
        assert len(pixelize(IntervalSet())) == 0

    def test_negative_endpoint_rejected(self):
        with pytest.raises(ValueError):
            pixelize(IntervalSet([(-0.5, 1)]))

    def test_integer_endpoint_includes_cell(self):
        # closed interval [1, 3] meets cell [3, 4) at the point 3
        assert pixelize(IntervalSet([(1.0, 3.0)])).cells.tolist() == [1, 2, 3]

    def test_commutes_with_cell_aligned_restriction(self):
        # cells strictly inside a cell-aligned window agree; the boundary
        # cell at hi is ambiguous because restrict produces closed sets
        rng = np.random.default_rng(11)
        for _ in range(25):
            a = rng.uniform(0, 20, 6)
            s = IntervalSet(zip(a, a + rng.uniform(0, 3, 6)))
            lo, hi = 2.0, 11.0
            direct = pixelize(restrict(s, lo, hi)).cells
            direct = direct[direct < hi]
            full = pixelize(s).cells
            windowed = full[(full >= lo) & (full < hi)]
            assert direct.tolist() == windowed.tolist()


class TestRestrict:
    def test_inner_window(self):
        assert restrict(IntervalSet([(0, 4)]), 1, 2) == IntervalSet([(1, 2)])

    def test_partial_overlap(self):
        s = IntervalSet([(0, 1), (3, 5)])
        assert restrict(s, 2, 3.5) == IntervalSet([(3, 3.5)])

    def test_disjoint_window(self):
        assert restrict(IntervalSet([(0, 1)]), 2, 3).is_empty

    def test_inverted_window_rejected(self):
        with pytest.raises(ValueError):
            restrict(IntervalSet([(0, 1)]), 3, 2)

    def test_measure_bound(self):
        s = IntervalSet([(0, 1), (2, 6)])
        out = restrict(s, 0.5, 4)
        assert out.measure <= min(3.5, s.measure) + 1e-12
        assert measure_between(s, 0.5, 4) == pytest.approx(out.measure)


class TestDeriveSeed:
    def test_deterministic(self):
        assert derive_seed(42, 3) == derive_seed(42, 3)

    def test_replicas_differ(self):
        assert derive_seed(42, 0) != derive_seed(42, 1)

    def test_64_bit_range(self):
        for i in range(100):
            v = derive_seed(12345, i)
            assert 0 <= v < 2**64

    def test_sequence_reproducible(self):
        seq1 = [derive_seed(7, i) for i in range(50)]
        seq2 = [derive_seed(7, i) for i in range(50)]
        assert seq1 == seq2
        assert len(set(seq1)) == 50

    def test_negative_replica_rejected(self):
        with pytest.raises(ValueError):
            derive_seed(1, -1)


class TestGridsAndPaths:
    def test_uniform_times(self):
        g = PathGrid(t0=0.0, dt=0.5, n=4)
        assert g.times().tolist() == [0.0, 0.5, 1.0, 1.5, 2.0]

    def test_geometric_times_increasing(self):
        g = PathGrid(t0=0.25, dt=1.0, n=8, kind="geometric", q=np.sqrt(2))
        t = g.times()
        assert np.all(np.diff(t) > 0)
        assert t[0] * t[-1] == pytest.approx(1.0)

    def test_bad_grids_rejected(self):
        with pytest.raises(ValueError):
            PathGrid(t0=0.0, dt=-1.0, n=4)
        with pytest.raises(ValueError):
            PathGrid(t0=0.0, dt=1.0, n=0)
        with pytest.raises(ValueError):
            PathGrid(t0=1.0, dt=1.0, n=4, kind="geometric", q=0.5)

    def test_path_validation(self):
        g = PathGrid(t0=0.0, dt=0.25, n=4)
        with pytest.raises(ValueError):
            SamplePath(grid=g, values=np.array([1.0, 0, 0, 0, 0]), H=0.7, seed=0)
        with pytest.raises(ValueError):
            SamplePath(grid=g, values=np.zeros(3), H=0.7, seed=0)
        with pytest.raises(ValueError):
            SamplePath(grid=g, values=np.full(5, np.nan), H=0.7, seed=0)
        SamplePath(grid=g, values=np.zeros(5), H=0.7, seed=0)

    def test_hurst_validation(self):
        for bad in (0.5, 1.0, 0.3, 1.2):
            with pytest.raises(ValueError):
                validate_hurst(bad)
        assert validate_hurst(0.7) == 0.7


class TestDimensionEstimate:
    def test_window_ordering_enforced(self):
        with pytest.raises(ValueError):
            DimensionEstimate(1.0, 0.1, scale_lo=1.0, scale_hi=0.5, method="box")

    def test_to_dict(self):
        est = DimensionEstimate(0.5, 0.01, 0.001, 0.1, "box", ({"delta": 0.1},))
        d = est.to_dict()
        assert d["value"] == 0.5
        assert d["scales"] == [0.001, 0.1]


class TestPixelSetCsv:
    def test_round_trip(self, tmp_path):
        p = PixelSet([3, 1, 7, 7])
        f = tmp_path / "cells.csv"
        p.to_csv(str(f))
        assert PixelSet.from_csv(str(f)).cells.tolist() == [1, 3, 7]

    def test_negative_cells_rejected(self):
        with pytest.raises(ValueError):
            PixelSet([-1, 2])
