import numpy as np
import pytest

from rosefract.stats import bootstrap_ci, ks_critical_value, ks_two_sample, ols


class TestOls:
    def test_exact_affine(self):
        xs = np.arange(10.0)
        fit = ols(xs, 2 * xs + 1)
        assert fit.slope == pytest.approx(2.0)
        assert fit.intercept == pytest.approx(1.0)
        assert fit.r_squared == pytest.approx(1.0)
        assert fit.stderr_slope == pytest.approx(0.0, abs=1e-12)

    def test_constant_ys(self):
        fit = ols([1, 2, 3, 4], [5, 5, 5, 5])
        assert fit.slope == pytest.approx(0.0)
        assert fit.r_squared == pytest.approx(1.0)

    def test_hand_evaluated_normal_equations(self):
        # Sxy = 1, Sxx = 2 for these three points
        fit = ols([1, 2, 3], [1, 3, 2])
        assert fit.slope == pytest.approx(0.5)

    def test_degenerate_rejected(self):
        with pytest.raises(ValueError):
            ols([1, 1, 1], [1, 2, 3])
        with pytest.raises(ValueError):
            ols([1, 2], [1, 2])


class TestKs:
    def test_identical_samples(self):
        a = np.random.default_rng(0).standard_normal(100)
        stat, _ = ks_two_sample(a, a)
        assert stat == pytest.approx(0.0)

    def test_disjoint_supports(self):
        a = np.random.default_rng(1).standard_normal(200)
        stat, _ = ks_two_sample(a, a + 10)
        assert stat == pytest.approx(1.0)

    def test_critical_value_formula(self):
        # c(alpha) * sqrt((m+n)/(m n)) with c(0.01) = sqrt(-ln(0.005)/2)
        m = n = 2000
        expected = np.sqrt(-np.log(0.005) / 2) * np.sqrt((m + n) / (m * n))
        assert ks_critical_value(m, n, 0.01) == pytest.approx(expected)
        stat, crits = ks_two_sample(np.arange(m), np.arange(n) + 0.5)
        assert crits[0.01] == pytest.approx(expected)

    def test_undersized_rejected(self):
        with pytest.raises(ValueError):
            ks_two_sample(np.arange(10), np.arange(100))

    def test_null_calibration(self):
        # independent same-law samples stay below the 1% critical value ~99% of the time
        rng = np.random.default_rng(42)
        crit = ks_critical_value(2000, 2000, 0.01)
        rejections = 0
        trials = 500
        for _ in range(trials):
            stat, _ = ks_two_sample(rng.standard_normal(2000), rng.standard_normal(2000))
            rejections += stat >= crit
        assert rejections <= 0.02 * trials  # >= 98% acceptance

    def test_statistic_matches_bruteforce(self):
        rng = np.random.default_rng(3)
        a = rng.standard_normal(60)
        b = rng.standard_normal(80) + 0.3
        stat, _ = ks_two_sample(a, b)
        grid = np.concatenate([a, b])
        brute = max(
            abs(np.mean(a <= x) - np.mean(b <= x)) for x in grid
        )
        assert stat == pytest.approx(brute)


class TestBootstrap:
    def test_constant_input_degenerate(self):
        lo, hi = bootstrap_ci(np.full(30, 2.5), np.mean, B=200, seed=1)
        assert lo == pytest.approx(2.5)
        assert hi == pytest.approx(2.5)

    def test_deterministic_given_seed(self):
        v = np.random.default_rng(9).uniform(size=50)
        assert bootstrap_ci(v, np.mean, seed=4) == bootstrap_ci(v, np.mean, seed=4)

    def test_coverage_calibration(self):
        # CI for the mean of Uniform(0,1) contains 0.5 in about 95% of trials
        rng = np.random.default_rng(7)
        hits = 0
        trials = 200
        for t in range(trials):
            v = rng.uniform(size=1000)
            lo, hi = bootstrap_ci(v, np.mean, B=300, seed=t)
            hits += lo <= 0.5 <= hi
        assert hits >= 0.90 * trials

    def test_undersized_rejected(self):
        with pytest.raises(ValueError):
            bootstrap_ci(np.arange(10), np.mean)
