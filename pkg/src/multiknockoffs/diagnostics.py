"""Monte Carlo checks of the exchangeability premise behind FDR control.

Two distinct quantities are estimated:

* :func:`check_assumption` compares, for null features ``u``,
  ``E[I(W_{u,1} >= T) / (D_T v 1)]`` against ``E[I(W_{u,i} >= T) / (D_T v 1)]``
  for each null column ``i``, with ``D_T`` the number of selections at the
  data-driven threshold.
* :func:`t_grid_diagnostic` evaluates ``I(W_{u,s} >= t) / (#{j: W_{j,v} >= t} v 1)``
  at fixed thresholds over pairs of null columns ``s, v >= 2``.

They use different denominators and answer different questions.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import EmptyInputError, NoNullFeatures, ValidationError
from .harness import ScenarioConfig, ScenarioRunner, _parallel_map
from .selection import WMatrix, threshold_scan

DEFAULT_GRID_QUANTILES = (0.5, 0.75, 0.9, 0.95, 0.99)
_CHUNK = 50


def permutation_ratio_sum(a, perm) -> float:
    """``sum_v a[perm[v]] / a[v]``; at least ``len(a)`` for positive ``a``."""
    a = np.asarray(a, dtype=float)
    return float(np.sum(a[np.asarray(perm)] / a))


@dataclass
class GridDiagnostic:
    """Fixed-threshold ratio table over null-column pairs ``(s, v)``.

    Columns are numbered as in the W matrix, 1-based, so ``s, v`` run over
    ``2..k``.  ``rows`` holds ``(t, s, v, estimate, se)``.  ``diagonal_ok[t]``
    records whether the ``s == v`` cells average no more than the
    ``s != v`` cells, up to two standard errors of the paired difference.
    """

    t_grid: np.ndarray
    k: int
    estimate: np.ndarray  # (len(t_grid), k-1, k-1)
    se: np.ndarray
    diag_minus_off: np.ndarray
    diag_minus_off_se: np.ndarray
    n_samples: int

    @property
    def diagonal_ok(self) -> np.ndarray:
        if self.k == 2:
            return np.ones(len(self.t_grid), dtype=bool)
        return self.diag_minus_off <= 2 * self.diag_minus_off_se

    @property
    def passed(self) -> bool:
        return bool(np.all(self.diagonal_ok))

    @property
    def rows(self) -> list:
        out = []
        for a, t in enumerate(self.t_grid):
            for s in range(self.k - 1):
                for v in range(self.k - 1):
                    out.append((float(t), s + 2, v + 2, float(self.estimate[a, s, v]), float(self.se[a, s, v])))
        return out


class _GridAccumulator:
    def __init__(self, t_grid, k, null_mask):
        self.t_grid = np.asarray(t_grid, dtype=float)
        self.k = k
        self.null_mask = null_mask
        shape = (self.t_grid.size, k - 1, k - 1)
        self.total = np.zeros(shape)
        self.total_sq = np.zeros(shape)
        self.diff = np.zeros(self.t_grid.size)
        self.diff_sq = np.zeros(self.t_grid.size)
        self.n = 0

    def contribution(self, w: np.ndarray):
        null_cols = w[:, 1:]
        hit = null_cols[None, :, :] >= self.t_grid[:, None, None]  # (T, p, k-1)
        den = np.maximum(hit.sum(axis=1), 1)  # over all features j
        mask = self.null_mask if self.null_mask is not None else np.ones(w.shape[0], dtype=bool)
        num = hit[:, mask, :].sum(axis=1) / mask.sum()
        ratio = num[:, :, None] / den[:, None, :]
        if self.k > 2:
            eye = np.eye(self.k - 1, dtype=bool)
            d = ratio[:, eye].mean(axis=1) - ratio[:, ~eye].mean(axis=1)
        else:
            d = np.zeros(self.t_grid.size)
        return ratio, d

    def add(self, ratio, d):
        self.total += ratio
        self.total_sq += ratio**2
        self.diff += d
        self.diff_sq += d**2
        self.n += 1

    def result(self) -> GridDiagnostic:
        n = self.n
        mean = self.total / n
        dmean = self.diff / n
        if n > 1:
            se = np.sqrt(np.maximum(self.total_sq / n - mean**2, 0) * n / (n - 1) / n)
            dse = np.sqrt(np.maximum(self.diff_sq / n - dmean**2, 0) * n / (n - 1) / n)
        else:
            se, dse = np.zeros_like(mean), np.zeros_like(dmean)
        return GridDiagnostic(self.t_grid, self.k, mean, se, dmean, dse, n)


def t_grid_diagnostic(w_samples, t_grid, null_mask=None) -> GridDiagnostic:
    """Average the fixed-threshold ratio over samples and null features.

    Parameters
    ----------
    w_samples : iterable of WMatrix (or p x k arrays), all with the same k
    t_grid : sequence of positive thresholds
    null_mask : boolean array of length p, optional
        Features to average over in the numerator; all by default.  Columns
        ``2..k`` are null by construction, so every feature qualifies.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.size == 0:
        raise EmptyInputError("t_grid is empty")
    if np.any(t_grid <= 0):
        raise ValidationError("thresholds must be positive")
    acc = None
    for w in w_samples:
        w = w.w if isinstance(w, WMatrix) else np.asarray(w, dtype=float)
        if acc is None:
            acc = _GridAccumulator(t_grid, w.shape[1], None if null_mask is None else np.asarray(null_mask, bool))
        acc.add(*acc.contribution(w))
    if acc is None:
        raise EmptyInputError("no W samples given")
    return acc.result()


def default_t_grid(w: WMatrix, quantiles=DEFAULT_GRID_QUANTILES) -> np.ndarray:
    vals = w.w[:, 1:].ravel()
    vals = vals[vals > 0]
    if vals.size == 0:
        return np.array([1.0])
    return np.unique(np.quantile(vals, quantiles))


@dataclass
class AssumptionReport:
    k: int
    lhs: float
    rhs_per_i: np.ndarray
    n_reps: int
    se_lhs: float
    se_rhs: np.ndarray
    se_diff: np.ndarray  # se of the paired per-replicate difference lhs - rhs_i
    worst_u_gap: float  # max over null u of (lhs_u - min_i rhs_{u,i})
    grid: GridDiagnostic | None = field(default=None, repr=False)

    @property
    def passed(self) -> bool:
        """``lhs <= rhs_i + 2 se`` for every null column ``i``."""
        return bool(np.all(self.lhs <= self.rhs_per_i + 2 * self.se_diff))

    @property
    def min_rhs(self) -> float:
        return float(np.min(self.rhs_per_i))

    @property
    def t_grid_table(self) -> list:
        return self.grid.rows if self.grid is not None else []


def _rep_terms(w: WMatrix, q, plus_one, null_idx):
    res = threshold_scan(w, q, plus_one=plus_one)
    denom = max(res.n_selected, 1)
    ind = (w.w[null_idx] >= res.threshold) / denom  # (n_null, k)
    return ind


def check_assumption(config: ScenarioConfig, n_reps: int, seed=None, k=None, t_grid=None,
                     threads=None) -> AssumptionReport:
    """Estimate both sides of the exchangeability premise by simulation.

    Replicates are generated exactly as by :func:`run_scenario` with
    ``replicates = n_reps`` (and ``seed``, if given).  ``k`` defaults to the
    first entry of the config's sweep.
    """
    if n_reps < 100:
        raise ValidationError("n_reps must be at least 100")
    if config.n_signals >= config.p:
        raise NoNullFeatures("scenario has no null features")
    k = config.k[0] if k is None else int(k)
    changes = {"replicates": n_reps, "k": (k,)}
    if seed is not None:
        changes["seed"] = int(seed)
    cfg = replace(config, **changes)
    runner = ScenarioRunner(cfg)
    null_idx = np.array(sorted(set(range(cfg.p)) - cfg.truth))
    null_mask = np.zeros(cfg.p, dtype=bool)
    null_mask[null_idx] = True

    first = runner.w_for(k, 0)
    grid = _GridAccumulator(default_t_grid(first) if t_grid is None else t_grid, k, null_mask)

    u_sum = np.zeros((null_idx.size, k))
    per_rep = np.empty((n_reps, k))

    def chunk(start):
        stop = min(start + _CHUNK, n_reps)
        local_u = np.zeros_like(u_sum)
        local_rep = np.empty((stop - start, k))
        grid_parts = []
        for rep in range(start, stop):
            w = first if rep == 0 else runner.w_for(k, rep)
            ind = _rep_terms(w, cfg.q, cfg.plus_one, null_idx)
            local_u += ind
            local_rep[rep - start] = ind.mean(axis=0)
            grid_parts.append(grid.contribution(w.w))
        return start, local_u, local_rep, grid_parts

    for start, local_u, local_rep, parts in _parallel_map(chunk, [(s,) for s in range(0, n_reps, _CHUNK)], threads):
        u_sum += local_u
        per_rep[start : start + len(local_rep)] = local_rep
        for ratio, d in parts:
            grid.add(ratio, d)

    lhs_rep, rhs_rep = per_rep[:, 0], per_rep[:, 1:]
    diff = lhs_rep[:, None] - rhs_rep
    sqrt_n = np.sqrt(n_reps)
    u_mean = u_sum / n_reps
    return AssumptionReport(
        k=k,
        lhs=float(lhs_rep.mean()),
        rhs_per_i=rhs_rep.mean(axis=0),
        n_reps=n_reps,
        se_lhs=float(lhs_rep.std(ddof=1) / sqrt_n),
        se_rhs=rhs_rep.std(axis=0, ddof=1) / sqrt_n,
        se_diff=diff.std(axis=0, ddof=1) / sqrt_n,
        worst_u_gap=float(np.max(u_mean[:, 0] - u_mean[:, 1:].min(axis=1))),
        grid=grid.result(),
    )
