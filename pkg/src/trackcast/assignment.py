"""Exact one-to-one assignment with forbidden pairs.

Thin wrapper over the Hungarian solver: forbidden pairs get a cost
large enough that the solver first maximizes the number of allowed
pairs, then minimizes their total cost.
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import linear_sum_assignment

FORBIDDEN_COST = 1e8


def solve_gated_assignment(
    cost: np.ndarray, allowed: np.ndarray
) -> list[tuple[int, int]]:
    """Minimum-cost one-to-one assignment restricted to allowed pairs.

    Among assignments with the maximum number of allowed pairs, returns
    the one with the smallest total cost. ``cost`` and ``allowed`` are
    (n_rows, n_cols); per-pair costs must be well below FORBIDDEN_COST.
    """
    cost = np.asarray(cost, dtype=float)
    allowed = np.asarray(allowed, dtype=bool)
    if cost.shape != allowed.shape:
        raise ValueError("cost and allowed must have the same shape")
    if cost.size == 0 or not allowed.any():
        return []
    padded = np.where(allowed, cost, FORBIDDEN_COST)
    rows, cols = linear_sum_assignment(padded)
    return [(int(r), int(c)) for r, c in zip(rows, cols) if allowed[r, c]]
