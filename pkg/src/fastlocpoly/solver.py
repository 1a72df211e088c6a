"""Small dense solver for the local normal equations ``G theta = r``.

Both the fast pipeline and the naive reference call :func:`solve_normal_equations`
so any disagreement between them comes from the statistics, not the solve.
"""

from __future__ import annotations

import numpy as np
from numba import njit

RIDGE = 1e-10
# Smallest admissible reciprocal 1-norm condition number of the unit-diagonal
# (equilibrated) Gram matrix; below this the window is treated as rank deficient.
RCOND_MIN = 1e-7


@njit(cache=True)
def _rcond(R):
    """Reciprocal 1-norm condition number of ``R R^T`` from its lower factor ``R``."""
    D = R.shape[0]
    inv = np.zeros((D, D))
    for j in range(D):
        inv[j, j] = 1.0 / R[j, j]
        for i in range(j + 1, D):
            s = 0.0
            for p in range(j, i):
                s -= R[i, p] * inv[p, j]
            inv[i, j] = s / R[i, i]
    norm_a = 0.0
    norm_inv = 0.0
    for j in range(D):
        ca = 0.0
        ci = 0.0
        for i in range(D):
            a = 0.0
            b = 0.0
            for p in range(min(i, j) + 1):
                a += R[i, p] * R[j, p]
            for p in range(max(i, j), D):
                b += inv[p, i] * inv[p, j]
            ca += abs(a)
            ci += abs(b)
        norm_a = max(norm_a, ca)
        norm_inv = max(norm_inv, ci)
    return 1.0 / (norm_a * norm_inv)


@njit(cache=True)
def _cholesky_solve(G, r, ridge, rcond_min, theta):
    D = G.shape[0]
    scale = np.empty(D)
    for i in range(D):
        g = G[i, i] + ridge
        if not g > 0.0:
            return False
        scale[i] = 1.0 / np.sqrt(g)
    A = np.empty((D, D))
    for i in range(D):
        for j in range(D):
            A[i, j] = scale[i] * G[i, j] * scale[j]
        A[i, i] = scale[i] * (G[i, i] + ridge) * scale[i]
    # in-place lower factor
    for j in range(D):
        s = A[j, j]
        for p in range(j):
            s -= A[j, p] * A[j, p]
        if not s > 0.0:
            return False
        A[j, j] = np.sqrt(s)
        for i in range(j + 1, D):
            s = A[i, j]
            for p in range(j):
                s -= A[i, p] * A[j, p]
            A[i, j] = s / A[j, j]
    if rcond_min > 0.0 and _rcond(A) < rcond_min:
        return False
    w = np.empty(D)
    for i in range(D):
        s = scale[i] * r[i]
        for p in range(i):
            s -= A[i, p] * w[p]
        w[i] = s / A[i, i]
    for i in range(D - 1, -1, -1):
        s = w[i]
        for p in range(i + 1, D):
            s -= A[p, i] * w[p]
        w[i] = s / A[i, i]
    for i in range(D):
        theta[i] = scale[i] * w[i]
    return True


@njit(cache=True)
def solve_into(G, r, count, theta):
    """Solve in place; returns True when the window is degenerate.

    Windows with fewer than ``D`` points, or whose equilibrated Gram matrix
    is not positive definite with reciprocal condition at least ``RCOND_MIN``, are retried once with a ``RIDGE * trace(G) / D`` ridge and
    flagged. Empty windows leave ``theta`` as NaN.
    """
    D = G.shape[0]
    theta[:] = np.nan
    if count == 0:
        return True
    if count >= D and _cholesky_solve(G, r, 0.0, RCOND_MIN, theta):
        return False
    tr = 0.0
    for i in range(D):
        tr += G[i, i]
    if not _cholesky_solve(G, r, RIDGE * tr / D, 0.0, theta):
        theta[:] = np.nan
    return True


def solve_normal_equations(G, r, count):
    """Return ``(theta, degenerate)`` for the system ``G theta = r``."""
    G = np.ascontiguousarray(G, dtype=np.float64)
    r = np.ascontiguousarray(r, dtype=np.float64)
    theta = np.empty(G.shape[0])
    degenerate = solve_into(G, r, int(count), theta)
    return theta, bool(degenerate)
