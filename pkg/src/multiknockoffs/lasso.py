"""Cyclic coordinate-descent Lasso.

Minimizes ``(1 / (2n)) * ||y - X b||^2 + lam * ||b||_1``.
"""

from __future__ import annotations

import numba
import numpy as np

from .errors import DimensionMismatch, SolverNotConverged, ValidationError


@numba.njit(cache=True)
def _soft(x, t):
    if x > t:
        return x - t
    if x < -t:
        return x + t
    return 0.0


@numba.njit(cache=True)
def _objective(X, y, beta, lam):
    r = y - X @ beta
    return 0.5 * (r @ r) / X.shape[0] + lam * np.abs(beta).sum()


@numba.njit(cache=True)
def _cd_kernel(X, y, lam, beta, max_iter, tol, track):
    n, p = X.shape
    col_sq = np.empty(p)
    for j in range(p):
        col_sq[j] = (X[:, j] @ X[:, j]) / n
    r = y - X @ beta
    history = np.empty(max_iter if track else 0)
    for sweep in range(max_iter):
        max_delta = 0.0
        for j in range(p):
            if col_sq[j] == 0.0:
                beta[j] = 0.0
                continue
            old = beta[j]
            rho = (X[:, j] @ r) / n + col_sq[j] * old
            new = _soft(rho, lam) / col_sq[j]
            if new != old:
                diff = new - old
                for i in range(n):
                    r[i] -= X[i, j] * diff
                d = abs(diff) * np.sqrt(col_sq[j])
                if d > max_delta:
                    max_delta = d
                beta[j] = new
        if track:
            history[sweep] = 0.5 * (r @ r) / n + lam * np.abs(beta).sum()
        if max_delta < tol:
            return beta, sweep + 1, True, history[: sweep + 1]
    return beta, max_iter, False, history


def lasso_cd(X, y, lam, beta0=None, max_iter=10000, tol=1e-7, return_history=False):
    """Fit the Lasso by cyclic coordinate descent.

    Convergence is declared when a full sweep moves no coefficient by more
    than ``tol`` (measured in units of the column's root-mean-square).

    Parameters
    ----------
    X : (n, p) array
    y : (n,) array
    lam : float
        Nonnegative penalty level.
    beta0 : (p,) array, optional
        Warm start.
    return_history : bool
        Also return the objective value after every sweep.

    Returns
    -------
    beta : (p,) array, or ``(beta, history)`` when ``return_history`` is set.

    Raises
    ------
    SolverNotConverged
        If ``max_iter`` sweeps do not reach ``tol``.
    """
    X = np.asfortranarray(X, dtype=float)  # column access in the inner loop
    y = np.ascontiguousarray(y, dtype=float)
    if X.ndim != 2 or y.shape != (X.shape[0],):
        raise DimensionMismatch(f"X {X.shape} and y {y.shape} are incompatible")
    if lam < 0 or not np.isfinite(lam):
        raise ValidationError("lam must be finite and nonnegative")
    if beta0 is None:
        beta = np.zeros(X.shape[1])
    else:
        beta = np.array(beta0, dtype=float)
        if beta.shape != (X.shape[1],):
            raise DimensionMismatch("beta0 has the wrong length")
    beta, sweeps, converged, history = _cd_kernel(X, y, float(lam), beta, int(max_iter), float(tol), return_history)
    if not converged:
        raise SolverNotConverged(f"no convergence after {sweeps} sweeps at tol={tol:g}")
    if return_history:
        return beta, history
    return beta


def lasso_objective(X, y, beta, lam) -> float:
    return float(_objective(np.asarray(X, float), np.asarray(y, float), np.asarray(beta, float), float(lam)))


def kkt_residual(X, y, beta, lam) -> float:
    """Largest violation of the Lasso optimality conditions.

    With ``g = X^T (y - X b) / n``: ``|g_j - lam * sign(b_j)|`` on the support
    and ``max(|g_j| - lam, 0)`` off it.
    """
    X = np.asarray(X, dtype=float)
    beta = np.asarray(beta, dtype=float)
    g = X.T @ (np.asarray(y, dtype=float) - X @ beta) / X.shape[0]
    active = beta != 0
    viol = np.where(active, np.abs(g - lam * np.sign(beta)), np.maximum(np.abs(g) - lam, 0.0))
    return float(viol.max()) if viol.size else 0.0


def lambda_max(X, y) -> float:
    """Smallest penalty at which the solution is identically zero."""
    X = np.asarray(X, dtype=float)
    return float(np.abs(X.T @ np.asarray(y, dtype=float)).max() / X.shape[0])
