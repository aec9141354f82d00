"""Independent reference implementations used by the tests."""

from fractions import Fraction
import math

import numpy as np


def brute_force_threshold(w, q, plus_one=False):
    """Evaluate the threshold rule literally at every positive entry of ``w``.

    Loops over candidates and entries and compares exact rationals; returns
    ``(threshold, selected_set)``.
    """
    w = np.asarray(w, dtype=float)
    p, k = w.shape
    candidates = sorted({float(v) for v in w.ravel() if v > 0})
    qf = Fraction(float(q))
    for t in candidates:
        null = sum(1 for j in range(p) for i in range(1, k) if w[j, i] >= t) + (1 if plus_one else 0)
        d = sum(1 for j in range(p) if w[j, 0] >= t)
        if d == 0:
            continue
        if Fraction(null, (k - 1) * d) <= qf:
            return t, {j for j in range(p) if w[j, 0] >= t}
    return math.inf, set()
