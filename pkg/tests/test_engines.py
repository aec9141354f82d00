import numpy as np
import pytest
from scipy import stats

from multiknockoffs.engines import (
    DirectZSpec,
    StatisticTensor,
    default_lambda,
    direct_z,
    lasso_statistics,
    marginal_statistics,
    standardize_columns,
)
from multiknockoffs.errors import DimensionMismatch, MultiplicityMismatch, ValidationError, ZeroVarianceColumn
from multiknockoffs.gaussian import (
    CovarianceModel,
    equicorrelated_s,
    equicorrelated_sigma,
    prepare_factors,
    sample_design,
    sample_knockoffs,
)


class TestDirectZ:
    def test_all_null_means(self):
        spec = DirectZSpec(mu=np.zeros(100_000), k=2)
        t = direct_z(spec, seed=0)
        se = 1 / np.sqrt(100_000)
        assert abs(t.z_original.mean()) <= 3 * se
        for col in t.z_knockoff.T:
            assert abs(col.mean()) <= 3 * se
        assert t.z_knockoff.shape == (100_000, 3)

    def test_signal_mean(self):
        spec = DirectZSpec.sparse(p=5000, n_signals=500, amplitude=2.0, k=3)
        assert spec.p == 5000 and spec.mu[:500].min() == 2.0 and spec.mu[500:].max() == 0.0
        t = direct_z(spec, seed=1)
        assert t.z_knockoff.shape == (5000, 5)
        assert abs(t.z_original[:500].mean() - 2.0) <= 3 / np.sqrt(500)

    def test_determinism(self):
        spec = DirectZSpec.sparse(p=50, n_signals=5, amplitude=1.0, k=4)
        a, b = direct_z(spec, seed=9), direct_z(spec, seed=9)
        assert np.array_equal(a.z_original, b.z_original)
        assert np.array_equal(a.z_knockoff, b.z_knockoff)

    def test_ref_size(self):
        spec = DirectZSpec(mu=np.zeros(4), k=3, ref_size=5)
        assert direct_z(spec, 0).z_knockoff.shape == (4, 8)

    def test_invalid_spec(self):
        with pytest.raises(ValidationError):
            DirectZSpec(mu=np.array([np.nan]), k=2)
        with pytest.raises(ValidationError):
            DirectZSpec(mu=np.zeros(3), k=1)
        with pytest.raises(ValidationError):
            DirectZSpec.sparse(p=3, n_signals=1, amplitude=-1.0, k=2)


class TestTensor:
    def test_column_count(self):
        with pytest.raises(MultiplicityMismatch):
            StatisticTensor(np.zeros(3), np.zeros((3, 4)), k=2, engine_id="x")

    def test_finite(self):
        with pytest.raises(ValidationError):
            StatisticTensor(np.array([np.inf]), np.zeros((1, 3)), k=2, engine_id="x")


def _gaussian_setup(n, p, rho, k, seed):
    model = CovarianceModel(equicorrelated_sigma(p, rho))
    model = model.with_s(equicorrelated_s(model))
    rng = np.random.default_rng(seed)
    X = sample_design(n, model.sigma, rng)
    kos = sample_knockoffs(X, prepare_factors(model, k), seed + 1)
    return X, kos, rng


class TestLassoStatistics:
    def test_zero_response(self):
        X, kos, _ = _gaussian_setup(40, 5, 0.2, 2, 0)
        t = lasso_statistics(X, kos, np.zeros(40), lam=0.1)
        assert np.all(t.z_original == 0) and np.all(t.z_knockoff == 0)
        t = lasso_statistics(X, kos, np.zeros(40))
        assert np.all(t.z_knockoff == 0)

    def test_huge_lambda(self):
        X, kos, rng = _gaussian_setup(40, 5, 0.2, 3, 1)
        y = X[:, 0] + rng.standard_normal(40)
        t = lasso_statistics(X, kos, y, lam=1e9)
        assert np.all(t.z_original_all == 0) and np.all(t.z_knockoff == 0)
        assert t.k == 3 and t.copies == 5

    def test_orthogonal_design_closed_form(self):
        n, p = 50, 2
        rng = np.random.default_rng(2)
        raw = rng.standard_normal((n, 4 * p))
        raw -= raw.mean(axis=0)
        cols = np.linalg.qr(raw)[0] * np.sqrt(n)  # centered, X^T X = n I
        X, kos = cols[:, :p], [cols[:, p * (i + 1):p * (i + 2)] for i in range(3)]
        y = 3.0 * X[:, 0] + 0.5 * rng.standard_normal(n)
        lam = 0.05
        t = lasso_statistics(X, kos, y, lam=lam)
        yc = y - y.mean()
        for i in range(3):
            aug = np.hstack([X, kos[i]])
            oracle = np.maximum(np.abs(aug.T @ yc) / n - lam, 0.0)
            got = np.concatenate([t.z_original_all[:, i], t.z_knockoff[:, i]])
            np.testing.assert_allclose(got, oracle, atol=1e-6)
        assert t.z_original[0] > t.z_knockoff[0, 0]

    def test_same_lambda_across_copies_and_standardization(self):
        X, kos, rng = _gaussian_setup(60, 4, 0.3, 2, 3)
        y = X[:, 0] + rng.standard_normal(60)
        lam = default_lambda(standardize_columns(X), y - y.mean())
        t_auto = lasso_statistics(X, kos, y)
        t_fixed = lasso_statistics(X, kos, y, lam=lam)
        np.testing.assert_array_equal(t_auto.z_knockoff, t_fixed.z_knockoff)
        # invariant to per-column affine rescaling of the inputs
        t_scaled = lasso_statistics(3 * X + 1, [2 * xk - 5 for xk in kos], y, lam=lam)
        np.testing.assert_allclose(t_scaled.z_knockoff, t_fixed.z_knockoff, atol=1e-6)

    def test_cv_policy(self):
        X, kos, rng = _gaussian_setup(80, 5, 0.0, 2, 4)
        y = 2 * X[:, 0] + rng.standard_normal(80)
        t = lasso_statistics(X, kos, y, lam="cv")
        assert t.z_original[0] > 1.0
        with pytest.raises(ValidationError):
            lasso_statistics(X, kos, y, lam="bogus")
        with pytest.raises(ValidationError):
            lasso_statistics(X, kos, y, lam=0.0)

    def test_dimension_errors(self):
        X, kos, _ = _gaussian_setup(30, 3, 0.0, 2, 5)
        with pytest.raises(DimensionMismatch):
            lasso_statistics(X, kos, np.zeros(29))
        with pytest.raises(DimensionMismatch):
            lasso_statistics(X, [kos[0][:, :2]] * 3, np.zeros(30))
        with pytest.raises(MultiplicityMismatch):
            lasso_statistics(X, kos[:2], np.zeros(30))

    def test_null_exchangeability_ks(self):
        # Z_{j,1} against Z~_{j,1} and Z~_{j,2} for a null feature j.  The swap
        # property holds over draws of X, so X is redrawn every replicate.
        n, p, reps, j = 60, 3, 10_000, 2
        model = CovarianceModel(equicorrelated_sigma(p, 0.3))
        model = model.with_s(equicorrelated_s(model))
        factors = prepare_factors(model, 2)
        orig, ko1, ko2 = np.empty(reps), np.empty(reps), np.empty(reps)
        root = np.random.SeedSequence(11)
        for r, ss in enumerate(root.spawn(reps)):
            rng = np.random.default_rng(ss)
            X = sample_design(n, model.sigma, rng)
            y = X[:, 0] + rng.standard_normal(n)
            kos = sample_knockoffs(X, factors, rng.integers(2**32))
            t = lasso_statistics(X, kos, y, lam=0.05)
            orig[r], ko1[r], ko2[r] = t.z_original[j], t.z_knockoff[j, 0], t.z_knockoff[j, 1]
        assert stats.ks_2samp(orig, ko1).pvalue > 0.01
        assert stats.ks_2samp(orig, ko2).pvalue > 0.01


class TestMarginal:
    def test_null_calibration(self):
        rng = np.random.default_rng(0)
        n, p, trials = 1000, 100, 200
        below = 0
        for _ in range(trials):
            X = rng.standard_normal((n, p))
            kos = [rng.standard_normal((n, p)) for _ in range(3)]
            t = marginal_statistics(X, kos, rng.standard_normal(n))
            below += max(t.z_original.max(), t.z_knockoff.max()) < 0.5
        assert below / trials > 0.99

    def test_perfect_correlation(self):
        rng = np.random.default_rng(1)
        X = rng.standard_normal((20, 3))
        kos = [rng.standard_normal((20, 3)) for _ in range(3)]
        t = marginal_statistics(X, kos, X[:, 1])
        assert t.z_original[1] == pytest.approx(1.0, abs=1e-12)
        assert all(v == pytest.approx(1.0) for v in t.z_original_all[1])

    def test_constant_column(self):
        X = np.random.default_rng(2).standard_normal((10, 2))
        X[:, 0] = 4.0
        with pytest.raises(ZeroVarianceColumn):
            marginal_statistics(X, [X + 1.0] * 3, np.arange(10.0))
        with pytest.raises(ZeroVarianceColumn):
            marginal_statistics(X[:, 1:], [X[:, 1:]] * 3, np.ones(10))
