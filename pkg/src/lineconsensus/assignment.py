"""Rectangular linear assignment by shortest augmenting paths.

This is the Jonker-Volgenant style Hungarian method: rows are inserted one
at a time and each is joined to the current matching along a shortest
augmenting path found with a Dijkstra-like sweep over reduced costs, with
dual potentials kept feasible throughout.
"""

from __future__ import annotations

import math

import numpy as np


def linear_assignment(cost) -> tuple[np.ndarray, np.ndarray]:
    """Minimum-cost assignment for a rectangular cost matrix.

    Returns ``(row_ind, col_ind)`` with ``min(n_rows, n_cols)`` entries,
    rows in increasing order, the same convention as
    ``scipy.optimize.linear_sum_assignment``.
    """
    cost = np.asarray(cost, dtype=float)
    if cost.ndim != 2:
        raise ValueError(f"cost matrix must be 2-D, got shape {cost.shape}")
    if not np.all(np.isfinite(cost)):
        raise ValueError("cost matrix contains non-finite entries")
    n_rows, n_cols = cost.shape
    if n_rows == 0 or n_cols == 0:
        empty = np.zeros(0, dtype=int)
        return empty, empty.copy()

    transposed = n_rows > n_cols
    if transposed:
        cost = cost.T
        n_rows, n_cols = n_cols, n_rows
    c = cost.tolist()

    # 1-based arrays; column 0 is the virtual source of each augmentation.
    u = [0.0] * (n_rows + 1)
    v = [0.0] * (n_cols + 1)
    match_col = [0] * (n_cols + 1)  # row matched to each column, 0 = free
    way = [0] * (n_cols + 1)

    for i in range(1, n_rows + 1):
        match_col[0] = i
        j0 = 0
        minv = [math.inf] * (n_cols + 1)
        used = [False] * (n_cols + 1)
        while True:
            used[j0] = True
            i0 = match_col[j0]
            row = c[i0 - 1]
            ui0 = u[i0]
            delta = math.inf
            j1 = 0
            for j in range(1, n_cols + 1):
                if used[j]:
                    continue
                cur = row[j - 1] - ui0 - v[j]
                if cur < minv[j]:
                    minv[j] = cur
                    way[j] = j0
                if minv[j] < delta:
                    delta = minv[j]
                    j1 = j
            for j in range(n_cols + 1):
                if used[j]:
                    u[match_col[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if match_col[j0] == 0:
                break
        # augment along the recorded path
        while j0:
            j1 = way[j0]
            match_col[j0] = match_col[j1]
            j0 = j1

    pairs = sorted((match_col[j] - 1, j - 1) for j in range(1, n_cols + 1) if match_col[j])
    rows = np.array([p[0] for p in pairs], dtype=int)
    cols = np.array([p[1] for p in pairs], dtype=int)
    if transposed:
        order = np.argsort(cols, kind="stable")
        rows, cols = cols[order], rows[order]
    return rows, cols
