import numpy as np
import pytest

from multiknockoffs.errors import DimensionMismatch, SolverNotConverged, ValidationError
from multiknockoffs.lasso import kkt_residual, lambda_max, lasso_cd, lasso_objective


def orthogonal_design(n, p, seed):
    """Columns with ``X^T X = n I``."""
    q, _ = np.linalg.qr(np.random.default_rng(seed).standard_normal((n, p)))
    return q * np.sqrt(n)


def soft_threshold_oracle(X, y, lam):
    c = X.T @ y / X.shape[0]
    return np.sign(c) * np.maximum(np.abs(c) - lam, 0.0)


@pytest.mark.parametrize("lam", [0.0, 0.01, 0.1, 0.5])
def test_orthogonal_closed_form(lam):
    X = orthogonal_design(64, 8, seed=0)
    rng = np.random.default_rng(1)
    y = X @ rng.normal(scale=0.5, size=8) + 0.3 * rng.standard_normal(64)
    beta = lasso_cd(X, y, lam)
    np.testing.assert_allclose(beta, soft_threshold_oracle(X, y, lam), atol=1e-6)


def test_kkt_on_random_dense():
    rng = np.random.default_rng(3)
    for _ in range(20):
        n, p = rng.integers(20, 80), rng.integers(5, 40)
        X = rng.standard_normal((n, p)) @ np.linalg.cholesky(0.5 * np.eye(p) + 0.5)
        y = X[:, :3] @ [1.0, -2.0, 0.5] + rng.standard_normal(n)
        lam = 0.1 * lambda_max(X, y)
        beta = lasso_cd(X, y, lam)
        assert kkt_residual(X, y, beta, lam) <= 1e-6


def test_objective_non_increasing():
    rng = np.random.default_rng(4)
    X = rng.standard_normal((40, 30))
    X[:, 1] = X[:, 0] + 0.1 * rng.standard_normal(40)
    y = X[:, 0] - X[:, 5] + rng.standard_normal(40)
    lam = 0.05
    beta, hist = lasso_cd(X, y, lam, return_history=True)
    assert hist.size >= 2
    assert np.all(np.diff(hist) <= 1e-12)
    assert hist[-1] == pytest.approx(lasso_objective(X, y, beta, lam), rel=1e-12)


def test_zero_response_and_large_penalty():
    X = np.random.default_rng(5).standard_normal((30, 6))
    np.testing.assert_array_equal(lasso_cd(X, np.zeros(30), 0.3), np.zeros(6))
    y = X[:, 0]
    np.testing.assert_array_equal(lasso_cd(X, y, lambda_max(X, y) * 1.0001), np.zeros(6))
    np.testing.assert_array_equal(lasso_cd(X, y, 1e12), np.zeros(6))


def test_lambda_max_is_sharp():
    X = np.random.default_rng(6).standard_normal((30, 6))
    y = X[:, 2] + 0.1
    lmax = lambda_max(X, y)
    assert np.count_nonzero(lasso_cd(X, y, 0.99 * lmax)) >= 1


def test_warm_start_same_solution():
    rng = np.random.default_rng(7)
    X = rng.standard_normal((50, 10))
    y = X[:, 0] + rng.standard_normal(50)
    cold = lasso_cd(X, y, 0.05)
    warm = lasso_cd(X, y, 0.05, beta0=lasso_cd(X, y, 0.2))
    np.testing.assert_allclose(cold, warm, atol=1e-6)


def test_not_converged():
    rng = np.random.default_rng(8)
    X = rng.standard_normal((30, 20))
    X[:, 1] = X[:, 0] + 1e-3 * rng.standard_normal(30)
    with pytest.raises(SolverNotConverged):
        lasso_cd(X, X[:, 0] + X[:, 1], 1e-4, max_iter=2)


def test_input_validation():
    with pytest.raises(DimensionMismatch):
        lasso_cd(np.zeros((4, 2)), np.zeros(3), 0.1)
    with pytest.raises(ValidationError):
        lasso_cd(np.zeros((4, 2)), np.zeros(4), -1.0)
    with pytest.raises(DimensionMismatch):
        lasso_cd(np.zeros((4, 2)), np.zeros(4), 0.1, beta0=np.zeros(3))


def test_zero_column_is_ignored():
    X = np.random.default_rng(9).standard_normal((20, 3))
    X[:, 1] = 0.0
    beta = lasso_cd(X, X[:, 0], 0.01)
    assert beta[1] == 0.0
