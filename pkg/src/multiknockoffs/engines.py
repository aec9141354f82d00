"""Feature-importance statistics for the original features and each knockoff copy.

Every engine returns a :class:`StatisticTensor`.  For regression engines,
copy ``i`` is scored by one fit on the augmented design ``(X, X_tilde_i)``;
the original-feature statistics used downstream come from copy 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, MultiplicityMismatch, ValidationError, ZeroVarianceColumn
from .lasso import lambda_max, lasso_cd


@dataclass(frozen=True)
class StatisticTensor:
    """Statistics ``Z_{j,1}`` (``z_original``) and ``Z~_{j,i}`` (``z_knockoff``).

    ``z_knockoff`` has ``k + ref_size`` columns, ``2k - 1`` by default.
    ``z_original_all`` keeps the original-feature statistics from every
    fit, when the engine produces them; they serve diagnostics only.
    """

    z_original: np.ndarray
    z_knockoff: np.ndarray
    k: int
    engine_id: str
    ref_size: int | None = None
    z_original_all: np.ndarray | None = None

    def __post_init__(self):
        if self.ref_size is None:
            object.__setattr__(self, "ref_size", self.k - 1)
        if self.k < 2:
            raise ValidationError("multiplicity k must be at least 2")
        z0 = np.asarray(self.z_original, dtype=float)
        zk = np.asarray(self.z_knockoff, dtype=float)
        if zk.ndim != 2 or zk.shape[0] != z0.shape[0]:
            raise DimensionMismatch("z_knockoff must be p x copies")
        if zk.shape[1] != self.k + self.ref_size:
            raise MultiplicityMismatch(
                f"expected {self.k + self.ref_size} knockoff columns, got {zk.shape[1]}"
            )
        if not (np.all(np.isfinite(z0)) and np.all(np.isfinite(zk))):
            raise ValidationError("statistics must be finite")
        object.__setattr__(self, "z_original", z0)
        object.__setattr__(self, "z_knockoff", zk)

    @property
    def p(self) -> int:
        return self.z_original.shape[0]

    @property
    def copies(self) -> int:
        return self.z_knockoff.shape[1]


@dataclass(frozen=True)
class DirectZSpec:
    mu: np.ndarray
    k: int
    ref_size: int | None = None

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=float)
        if mu.ndim != 1 or not np.all(np.isfinite(mu)):
            raise ValidationError("mu must be a finite vector")
        if self.k < 2:
            raise ValidationError("multiplicity k must be at least 2")
        if self.ref_size is None:
            object.__setattr__(self, "ref_size", self.k - 1)
        if self.ref_size < 1:
            raise ValidationError("ref_size must be at least 1")
        object.__setattr__(self, "mu", mu)

    @property
    def p(self) -> int:
        return self.mu.shape[0]

    @classmethod
    def sparse(cls, p, n_signals, amplitude, k, ref_size=None):
        """Mean vector with ``amplitude`` on the first ``n_signals`` features."""
        if not 0 <= n_signals <= p:
            raise ValidationError("n_signals must lie in [0, p]")
        if n_signals and amplitude <= 0:
            raise ValidationError("signal amplitude must be positive")
        mu = np.zeros(p)
        mu[:n_signals] = amplitude
        return cls(mu=mu, k=k, ref_size=ref_size)


def direct_z(spec: DirectZSpec, seed) -> StatisticTensor:
    """Draw ``Z_{j,1} ~ N(mu_j, 1)`` and independent ``N(0, 1)`` knockoff statistics."""
    rng = np.random.default_rng(seed)
    z0 = spec.mu + rng.standard_normal(spec.p)
    zk = rng.standard_normal((spec.p, spec.k + spec.ref_size))
    return StatisticTensor(z0, zk, k=spec.k, engine_id="direct", ref_size=spec.ref_size)


def _infer_k(m, k, ref_size):
    if k is None:
        if ref_size is None:
            if m % 2 == 0:
                raise MultiplicityMismatch(f"{m} copies is not of the form 2k - 1")
            return (m + 1) // 2, None
        k = m - ref_size
    if ref_size is None:
        ref_size = k - 1
    if k + ref_size != m:
        raise MultiplicityMismatch(f"expected {k + ref_size} copies, got {m}")
    return k, ref_size


def _check_inputs(X, knockoffs, y):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if X.ndim != 2:
        raise DimensionMismatch("X must be 2-d")
    if y.shape[0] != X.shape[0]:
        raise DimensionMismatch(f"X has {X.shape[0]} rows but y has {y.shape[0]}")
    if len(knockoffs) == 0:
        raise MultiplicityMismatch("no knockoff copies given")
    kos = [np.asarray(xk, dtype=float) for xk in knockoffs]
    for xk in kos:
        if xk.shape != X.shape:
            raise DimensionMismatch(f"knockoff shape {xk.shape} differs from X {X.shape}")
    return X, kos, y


def standardize_columns(A) -> np.ndarray:
    """Center each column and scale it to unit mean square (norm ``sqrt(n)``)."""
    A = np.asarray(A, dtype=float)
    A = A - A.mean(axis=0)
    rms = np.sqrt((A**2).mean(axis=0))
    if np.any(rms == 0):
        raise ZeroVarianceColumn(f"constant column(s) at {np.flatnonzero(rms == 0).tolist()}")
    return A / rms


def ridge_noise_sd(X, y, alpha=0.1) -> float:
    """Residual standard deviation of a ridge pilot fit (penalty ``n * alpha``)."""
    n = X.shape[0]
    u, d, _ = np.linalg.svd(X, full_matrices=False)
    shrink = d**2 / (d**2 + n * alpha)
    fitted = u @ (shrink * (u.T @ y))
    dof = max(n - shrink.sum(), 1.0)
    return float(np.sqrt(np.sum((y - fitted) ** 2) / dof))


def default_lambda(X, y) -> float:
    """Universal penalty ``sigma_hat * sqrt(2 log(2p) / n)``."""
    n, p = X.shape
    lam = ridge_noise_sd(X, y) * np.sqrt(2 * np.log(2 * p) / n)
    if lam <= 0:
        # Exact fit: a small fraction of lambda_max keeps the problem well posed.
        lam = 1e-3 * lambda_max(X, y)
    return float(lam)


def cv_lambda(A, y, n_folds=5, n_lambdas=30, ratio=1e-3) -> float:
    """K-fold cross-validated penalty on design ``A`` (folds by row index mod K)."""
    n = A.shape[0]
    lmax = lambda_max(A, y)
    if lmax == 0:
        return 0.0
    grid = lmax * np.geomspace(1.0, ratio, n_lambdas)
    folds = np.arange(n) % n_folds
    err = np.zeros(n_lambdas)
    for f in range(n_folds):
        train, test = folds != f, folds == f
        beta = np.zeros(A.shape[1])
        for i, lam in enumerate(grid):
            beta = lasso_cd(A[train], y[train], lam, beta0=beta)
            err[i] += np.sum((y[test] - A[test] @ beta) ** 2)
    return float(grid[np.argmin(err)])


def lasso_statistics(X, knockoffs, y, lam="auto", k=None, ref_size=None, tol=1e-7, max_iter=10000):
    """Absolute Lasso coefficients, one fit per knockoff copy.

    ``lam`` is a positive float, ``"auto"`` (universal penalty with a ridge
    noise estimate) or ``"cv"`` (5-fold CV on the first copy's design).
    The same penalty is used for every copy.
    """
    X, kos, y = _check_inputs(X, knockoffs, y)
    k, ref_size = _infer_k(len(kos), k, ref_size)
    p = X.shape[1]
    Xs = standardize_columns(X)
    yc = y - y.mean()
    designs = [np.hstack([Xs, standardize_columns(xk)]) for xk in kos]

    if isinstance(lam, str):
        if lam == "auto":
            lam = default_lambda(Xs, yc)
        elif lam == "cv":
            lam = cv_lambda(designs[0], yc)
        else:
            raise ValidationError(f"unknown lambda policy {lam!r}")
    elif not lam > 0:
        raise ValidationError("lambda must be positive")

    z_orig = np.empty((p, len(kos)))
    z_ko = np.empty((p, len(kos)))
    for i, A in enumerate(designs):
        beta = np.abs(lasso_cd(A, yc, lam, tol=tol, max_iter=max_iter))
        z_orig[:, i] = beta[:p]
        z_ko[:, i] = beta[p:]
    return StatisticTensor(z_orig[:, 0], z_ko, k=k, engine_id="lasso", ref_size=ref_size, z_original_all=z_orig)


def _abs_corr(A, yc):
    Ac = A - A.mean(axis=0)
    norms = np.sqrt((Ac**2).sum(axis=0))
    if np.any(norms == 0):
        raise ZeroVarianceColumn(f"constant column(s) at {np.flatnonzero(norms == 0).tolist()}")
    return np.abs(Ac.T @ yc) / (norms * np.sqrt(yc @ yc))


def marginal_statistics(X, knockoffs, y, k=None, ref_size=None) -> StatisticTensor:
    """Absolute Pearson correlation of every column with the response."""
    X, kos, y = _check_inputs(X, knockoffs, y)
    k, ref_size = _infer_k(len(kos), k, ref_size)
    yc = y - y.mean()
    if yc @ yc == 0:
        raise ZeroVarianceColumn("response is constant")
    z0 = np.clip(_abs_corr(X, yc), 0.0, 1.0)
    zk = np.column_stack([np.clip(_abs_corr(xk, yc), 0.0, 1.0) for xk in kos])
    return StatisticTensor(z0, zk, k=k, engine_id="marginal", ref_size=ref_size,
                           z_original_all=np.tile(z0[:, None], (1, len(kos))))
