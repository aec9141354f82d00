"""Gaussian model-X knockoffs with several independent copies.

For rows ``x ~ N(0, Sigma)`` (unit diagonal) and a knockoff gap vector ``s``,
each knockoff copy is drawn from the conditional law

    x_tilde | x ~ N(x - diag(s) Sigma^{-1} x,  2 diag(s) - diag(s) Sigma^{-1} diag(s))

which makes ``(x, x_tilde)`` jointly Gaussian with covariance

    G = [[Sigma, Sigma - diag(s)], [Sigma - diag(s), Sigma]].

The projection ``Sigma^{-1} diag(s)`` and the Cholesky factor of the
conditional covariance are computed once and shared by every copy.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import (
    CholeskyFailure,
    DimensionMismatch,
    EigenFailure,
    NonPositiveDiagonalError,
    NotPositiveDefiniteError,
    NotSymmetricError,
    ValidationError,
)

SYMMETRY_TOL = 1e-10
UNIT_DIAG_TOL = 1e-10
PSD_TOL = -1e-8
JITTER_START = 1e-12
JITTER_MAX = 1e-6


def _check_symmetric(a: np.ndarray, tol: float = SYMMETRY_TOL) -> None:
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {a.shape}")
    if not np.allclose(a, a.T, rtol=0.0, atol=tol):
        raise NotSymmetricError("matrix is not symmetric")


def _check_positive_definite(a: np.ndarray) -> None:
    try:
        np.linalg.cholesky(a)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError("matrix is not positive definite") from exc


def conditional_covariance(sigma: np.ndarray, s: np.ndarray) -> np.ndarray:
    """``2 diag(s) - diag(s) sigma^{-1} diag(s)``."""
    s = np.asarray(s, dtype=float)
    v = 2.0 * np.diag(s) - s[:, None] * np.linalg.solve(sigma, np.diag(s))
    return 0.5 * (v + v.T)


@dataclass(frozen=True)
class CovarianceModel:
    """Normalized covariance of one row of the design, plus the knockoff gap.

    ``scale`` holds the standard deviations removed by
    :func:`normalize_covariance`; data columns must be divided by it before
    sampling knockoffs.  ``s`` is ``None`` until a gap vector is chosen.
    """

    sigma: np.ndarray
    s: np.ndarray | None = None
    scale: np.ndarray | None = None

    def __post_init__(self):
        sigma = np.asarray(self.sigma, dtype=float)
        _check_symmetric(sigma)
        if not np.allclose(np.diag(sigma), 1.0, rtol=0.0, atol=UNIT_DIAG_TOL):
            raise ValidationError("sigma must have unit diagonal; use normalize_covariance")
        _check_positive_definite(sigma)
        object.__setattr__(self, "sigma", sigma)
        if self.scale is None:
            object.__setattr__(self, "scale", np.ones(sigma.shape[0]))
        if self.s is not None:
            s = np.asarray(self.s, dtype=float)
            if s.shape != (sigma.shape[0],):
                raise DimensionMismatch(f"s must have length {sigma.shape[0]}")
            if np.any(s <= 0) or not np.all(np.isfinite(s)):
                raise ValidationError("s must be positive and finite")
            lam_min = np.linalg.eigvalsh(conditional_covariance(sigma, s))[0]
            if lam_min < PSD_TOL:
                raise NotPositiveDefiniteError(
                    f"conditional covariance has eigenvalue {lam_min:.3g}; s is too large"
                )
            object.__setattr__(self, "s", s)

    @property
    def p(self) -> int:
        return self.sigma.shape[0]

    def with_s(self, s) -> CovarianceModel:
        return replace(self, s=np.asarray(s, dtype=float))

    def joint_covariance(self) -> np.ndarray:
        """The 2p x 2p covariance G of a row of ``(X, X_tilde)``."""
        if self.s is None:
            raise ValidationError("model has no knockoff gap s")
        off = self.sigma - np.diag(self.s)
        return np.block([[self.sigma, off], [off, self.sigma]])


@dataclass(frozen=True)
class KnockoffFactors:
    projection: np.ndarray  # sigma^{-1} diag(s)
    cond_chol: np.ndarray  # lower Cholesky factor of the conditional covariance
    copies: int
    jitter: float = 0.0

    @property
    def p(self) -> int:
        return self.projection.shape[0]


def normalize_covariance(raw) -> CovarianceModel:
    """Rescale a covariance matrix to a correlation matrix.

    Returns a :class:`CovarianceModel` without ``s`` whose ``scale`` is the
    vector of standard deviations ``sqrt(diag(raw))``.

    >>> normalize_covariance([[4.0, 1.0], [1.0, 1.0]]).sigma
    array([[1. , 0.5],
           [0.5, 1. ]])
    """
    raw = np.asarray(raw, dtype=float)
    _check_symmetric(raw)
    d = np.diag(raw)
    if np.any(d <= 0):
        raise NonPositiveDiagonalError("covariance must have a strictly positive diagonal")
    _check_positive_definite(raw)
    scale = np.sqrt(d)
    corr = raw / np.outer(scale, scale)
    corr = 0.5 * (corr + corr.T)
    np.fill_diagonal(corr, 1.0)
    return CovarianceModel(sigma=corr, scale=scale)


def equicorrelated_s(model: CovarianceModel, slack: float = 1 - 1e-6) -> np.ndarray:
    """Equicorrelated knockoff gap ``s_j = min(2 * lambda_min(sigma) * slack, 1)``."""
    if not 0 < slack <= 1:
        raise ValidationError("slack must lie in (0, 1]")
    try:
        lam_min = np.linalg.eigvalsh(model.sigma)[0]
    except np.linalg.LinAlgError as exc:
        raise EigenFailure("eigenvalue computation did not converge") from exc
    value = min(2.0 * lam_min * slack, 1.0)
    return np.full(model.p, value)


def prepare_factors(model: CovarianceModel, k: int, ref_size: int | None = None) -> KnockoffFactors:
    """Factor the conditional law once for ``k + ref_size`` copies (default ``2k - 1``).

    Diagonal jitter from 1e-12 up to 1e-6 is added when the conditional
    covariance is only semidefinite.
    """
    if k < 2:
        raise ValidationError("multiplicity k must be at least 2")
    if ref_size is None:
        ref_size = k - 1
    if ref_size < 1:
        raise ValidationError("ref_size must be at least 1")
    if model.s is None:
        raise ValidationError("model has no knockoff gap s")

    s = model.s
    projection = np.linalg.solve(model.sigma, np.diag(s))
    v = 2.0 * np.diag(s) - s[:, None] * projection
    v = 0.5 * (v + v.T)

    jitter = 0.0
    while True:
        try:
            chol = np.linalg.cholesky(v + jitter * np.eye(model.p))
            break
        except np.linalg.LinAlgError:
            jitter = JITTER_START if jitter == 0.0 else jitter * 10
            if jitter > JITTER_MAX * (1 + 1e-9):
                raise CholeskyFailure(
                    "conditional covariance is not positive semidefinite; s too aggressive"
                ) from None
    return KnockoffFactors(projection=projection, cond_chol=chol, copies=k + ref_size, jitter=jitter)


def sample_knockoffs(X, factors: KnockoffFactors, seed) -> list[np.ndarray]:
    """Draw ``factors.copies`` knockoff matrices, conditionally independent given X.

    Copy ``i`` uses the ``i``-th child of ``SeedSequence(seed)``, so the
    output depends only on ``(X, factors, seed)``.  ``seed`` may also be a
    ``SeedSequence``.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != factors.p:
        raise DimensionMismatch(f"X must have {factors.p} columns, got shape {X.shape}")
    n, p = X.shape
    mean = X - X @ factors.projection
    base = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    # Same children as base.spawn() on a fresh sequence, without mutating base.
    children = [
        np.random.SeedSequence(base.entropy, spawn_key=base.spawn_key + (i,), pool_size=base.pool_size)
        for i in range(factors.copies)
    ]
    out = []
    for child in children:
        noise = np.random.default_rng(child).standard_normal((n, p))
        out.append(mean + noise @ factors.cond_chol.T)
    return out


def equicorrelated_sigma(p: int, rho: float) -> np.ndarray:
    sigma = np.full((p, p), float(rho))
    np.fill_diagonal(sigma, 1.0)
    return sigma


def sample_design(n: int, sigma, rng: np.random.Generator) -> np.ndarray:
    """Rows drawn i.i.d. from ``N(0, sigma)``."""
    chol = np.linalg.cholesky(np.asarray(sigma, dtype=float))
    return rng.standard_normal((n, chol.shape[0])) @ chol.T


def estimate_covariance(X, shrinkage: float = 0.1) -> np.ndarray:
    """Sample covariance with its correlation part shrunk toward the identity.

    Best effort only: knockoff validity assumes the covariate law is known.
    The shrinkage weight keeps the estimate positive definite when n < p.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] < 2:
        raise DimensionMismatch("need a 2-d data matrix with at least two rows")
    if not 0 < shrinkage <= 1:
        raise ValidationError("shrinkage must lie in (0, 1]")
    cov = np.atleast_2d(np.cov(X, rowvar=False))
    sd = np.sqrt(np.diag(cov))
    if np.any(sd == 0):
        raise NonPositiveDiagonalError("constant column; covariance is undefined")
    corr = cov / np.outer(sd, sd)
    corr = (1 - shrinkage) * corr + shrinkage * np.eye(len(sd))
    return corr * np.outer(sd, sd)
