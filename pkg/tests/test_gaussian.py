import mpmath
import numpy as np
import pytest

from rosefract.core import derive_seed
from rosefract.gaussian import (
    EmbeddingError,
    FgnParams,
    circulant_eigenvalues,
    fgn_autocovariance,
    fgn_sample,
)


class TestAutocovariance:
    def test_unit_variance(self):
        for h in (0.55, 0.76, 0.9):
            assert fgn_autocovariance(h, 0) == pytest.approx(1.0)

    def test_independent_at_half(self):
        for k in (1, 2, 10, 1000):
            assert fgn_autocovariance(0.5, k) == pytest.approx(0.0, abs=1e-12)

    def test_closed_form_at_085(self):
        assert fgn_autocovariance(0.85, 1) == pytest.approx(0.5 * (2**1.7 - 2))

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            fgn_autocovariance(1.0, 1)
        with pytest.raises(ValueError):
            fgn_autocovariance(0.8, -1)

    def test_matches_high_precision_closed_form(self):
        # 50-digit oracle across the series/direct crossover and large lags
        mpmath.mp.dps = 50
        for h in (0.55, 0.76, 0.85, 0.95):
            a = 2 * mpmath.mpf(h)
            for k in (1, 2, 63, 64, 65, 10**3, 10**6, 4 * 10**6):
                km = mpmath.mpf(k)
                ref = float(0.5 * ((km + 1) ** a - 2 * km**a + abs(km - 1) ** a))
                assert fgn_autocovariance(h, k) == pytest.approx(ref, rel=1e-9)


class TestSampling:
    def test_single_draw_is_standard_normal(self):
        vals = np.array(
            [fgn_sample(FgnParams(h=0.8, n=1), derive_seed(0, i))[0] for i in range(10**5)]
        )
        # unit variance => mean CI 0 +/- 4 * 10^-2.5
        assert abs(vals.mean()) <= 4 * 10**-2.5
        assert vals.std() == pytest.approx(1.0, abs=0.02)

    def test_lag1_autocovariance(self):
        params = FgnParams(h=0.85, n=2**12)
        acs = [
            np.mean((x := fgn_sample(params, derive_seed(1, i)))[:-1] * x[1:])
            for i in range(200)
        ]
        assert np.mean(acs) == pytest.approx(fgn_autocovariance(0.85, 1), abs=0.02)

    def test_deterministic(self):
        params = FgnParams(h=0.9, n=512)
        assert np.array_equal(fgn_sample(params, 77), fgn_sample(params, 77))

    def test_seeds_differ(self):
        params = FgnParams(h=0.9, n=512)
        assert not np.array_equal(fgn_sample(params, 1), fgn_sample(params, 2))

    def test_empirical_covariance_matrix(self):
        n, R = 16, 4000
        params = FgnParams(h=0.8, n=n)
        x = np.vstack([fgn_sample(params, derive_seed(2, i)) for i in range(R)])
        emp = x.T @ x / R
        lags = np.abs(np.subtract.outer(np.arange(n), np.arange(n)))
        exact = fgn_autocovariance(0.8, lags.ravel()).reshape(n, n)
        # max-abs deviation scales like O(R^{-1/2})
        assert np.abs(emp - exact).max() <= 5.0 / np.sqrt(R)

    def test_params_validation(self):
        with pytest.raises(ValueError):
            FgnParams(h=0.6, n=10)  # outside (3/4, 1)
        with pytest.raises(ValueError):
            FgnParams(h=0.8, n=0)


class TestEmbedding:
    def test_spectrum_nonnegative_across_sizes(self):
        for h in (0.76, 0.85, 0.9, 0.95):
            for m in (2**8, 2**12, 2**16, 2**20):
                assert circulant_eigenvalues(h, m).min() > 0

    def test_spectrum_stable_at_large_sizes(self):
        # catastrophic cancellation in the naive covariance would push the
        # minimum eigenvalue negative at this size for high h
        assert circulant_eigenvalues(0.9, 2**23).min() > 0.17

    def test_bad_size_rejected(self):
        with pytest.raises(ValueError):
            circulant_eigenvalues(0.8, 7)
