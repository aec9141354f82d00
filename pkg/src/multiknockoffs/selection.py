"""W statistics, the data-driven threshold, and selection bookkeeping."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .engines import StatisticTensor
from .errors import EmptyInputError, MultiplicityMismatch, ValidationError


@dataclass(frozen=True)
class WMatrix:
    """p x k contrasts.  Column 0 scores the original features; columns
    1..k-1 are null reference columns built from knockoff copies only."""

    w: np.ndarray
    ref_size: int

    def __post_init__(self):
        w = np.asarray(self.w, dtype=float)
        if w.ndim != 2 or w.shape[1] < 2:
            raise ValidationError("W must be p x k with k >= 2")
        if not np.all(np.isfinite(w)):
            raise ValidationError("W entries must be finite")
        object.__setattr__(self, "w", w)

    @property
    def p(self) -> int:
        return self.w.shape[0]

    @property
    def k(self) -> int:
        return self.w.shape[1]


@dataclass(frozen=True)
class ScanCurve:
    """Threshold-scan curve over the candidate grid, stored column-wise."""

    t: np.ndarray
    k_t: np.ndarray
    d_t: np.ndarray
    ratio: np.ndarray

    def __len__(self):
        return self.t.size

    def rows(self):
        for t, a, b, c in zip(self.t, self.k_t, self.d_t, self.ratio):
            yield float(t), float(a), int(b), float(c)


@dataclass(frozen=True)
class SelectionResult:
    threshold: float
    selected: frozenset
    fdp_estimate: float
    q: float
    scan: ScanCurve | None = field(default=None, repr=False)

    @property
    def n_selected(self) -> int:
        return len(self.selected)


def build_w(tensor: StatisticTensor) -> WMatrix:
    """Contrast each statistic with the mean of the reference copies.

    With ``k`` and ``r = ref_size`` (``k - 1`` by default), and copies numbered
    from 1: ``ref_j`` averages copies ``k+1 .. k+r``, ``w[:, 0] = Z_j - ref_j``
    and ``w[:, i-1] = Z~_{j,i} - ref_j`` for copies ``i = 2..k``.  The first
    copy's knockoff statistics are not used.
    """
    k, r = tensor.k, tensor.ref_size
    zk = tensor.z_knockoff
    if zk.shape[1] != k + r:
        raise MultiplicityMismatch(f"expected {k + r} knockoff columns, got {zk.shape[1]}")
    ref = zk[:, k : k + r].mean(axis=1)
    w = np.empty((tensor.p, k))
    w[:, 0] = tensor.z_original - ref
    w[:, 1:] = zk[:, 1:k] - ref[:, None]
    return WMatrix(w=w, ref_size=r)


def scan_counts(w: WMatrix, candidates, plus_one=False):
    """K_t and D_t at each candidate threshold (counts use ``>=``)."""
    candidates = np.asarray(candidates, dtype=float)
    col1 = np.sort(w.w[:, 0])
    null = np.sort(w.w[:, 1:].ravel())
    d_t = col1.size - np.searchsorted(col1, candidates, side="left")
    null_count = null.size - np.searchsorted(null, candidates, side="left")
    if plus_one:
        null_count = null_count + 1
    k_t = null_count / (w.k - 1)
    return k_t, d_t, null_count


def _ratio_le(num, den, ratio, q):
    """``num / den <= q`` evaluated exactly against the binary value of q.

    Float division can round a ratio onto q (1/3 vs 0.333...), so entries
    within a few ulps of q are settled with rationals."""
    ok = ratio <= q
    near = np.flatnonzero(np.isfinite(ratio) & (np.abs(ratio - q) <= 8 * np.spacing(q)))
    qf = Fraction(q)
    for i in near:
        ok[i] = Fraction(int(round(num[i])), int(den[i])) <= qf
    return ok


def threshold_scan(w: WMatrix, q: float, plus_one: bool = False) -> SelectionResult:
    """Smallest positive t with ``K_t / D_t <= q``; infinity if there is none.

    ``K_t`` counts null-column entries ``>= t`` divided by ``k - 1`` and
    ``D_t`` counts first-column entries ``>= t``.  The ratio only changes at
    attained values, so the candidates are the distinct positive entries of
    ``w``.  ``plus_one`` adds one to the null count (knockoff+ style
    correction); it is off by default.
    """
    if not 0 < q < 1:
        raise ValidationError("q must lie in (0, 1)")
    if w.p == 0:
        raise EmptyInputError("W has no rows")
    vals = w.w.ravel()
    candidates = np.unique(vals[vals > 0])
    k_t, d_t, null_count = scan_counts(w, candidates, plus_one)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(d_t > 0, null_count / ((w.k - 1) * np.maximum(d_t, 1)), np.inf)
    scan = ScanCurve(candidates, k_t, d_t, ratio)

    hits = np.flatnonzero(_ratio_le(null_count, (w.k - 1) * d_t, ratio, q))
    if hits.size == 0:
        return SelectionResult(threshold=np.inf, selected=frozenset(), fdp_estimate=0.0, q=q, scan=scan)
    i = hits[0]
    threshold = float(candidates[i])
    selected = frozenset(np.flatnonzero(w.w[:, 0] >= threshold).tolist())
    fdp = float(ratio[i])
    return SelectionResult(threshold=threshold, selected=selected, fdp_estimate=fdp, q=q, scan=scan)


def evaluate_truth(result: SelectionResult, truth) -> tuple[float, float]:
    """Realized false-discovery and true-positive proportions.

    Both denominators are floored at one.
    """
    truth = set(truth)
    sel = set(result.selected)
    fdp = len(sel - truth) / max(len(sel), 1)
    tpp = len(sel & truth) / max(len(truth), 1)
    return fdp, tpp
