"""Quadratic-time reference estimators.

These scan every training point for every query and build the normal
equations directly from centred monomials, with no shared statistics
machinery. They define ground truth in tests and the baseline in benchmarks.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from .model import BasisSpec, ConfigurationError, LocalFit, Query, TrainingSet
from .solver import solve_into, solve_normal_equations


def _basis_exponents(spec: BasisSpec) -> np.ndarray:
    return np.array([m.exponents for m in spec.basis], dtype=np.int64)


def naive_fit(ts: TrainingSet, spec: BasisSpec, q: Query, responses=None) -> LocalFit:
    """Least-squares polynomial fit over the points inside the box around ``q.z``.

    A point is inside when ``z_j - h/2 <= x_j <= z_j + h/2`` in every dimension.
    """
    y = ts.responses if responses is None else np.asarray(responses, dtype=np.float64)
    if y is None:
        raise ConfigurationError("naive fit needs responses")
    lo = q.z - 0.5 * q.h
    hi = q.z + 0.5 * q.h
    inside = np.all((ts.points >= lo) & (ts.points <= hi), axis=1)
    dx = ts.points[inside] - q.z
    exps = _basis_exponents(spec)
    psi = np.prod(dx[:, None, :] ** exps[None, :, :], axis=2)
    G = psi.T @ psi
    r = psi.T @ y[inside]
    theta, degenerate = solve_normal_equations(G, r, int(inside.sum()))
    return LocalFit(theta=theta, window_count=int(inside.sum()), degenerate=degenerate)


def naive_cdf(ts: TrainingSet) -> np.ndarray:
    X = ts.points
    n = ts.n
    out = np.empty(n)
    for i in range(n):
        c = 0
        for j in range(n):
            if np.all(X[j] <= X[i]):
                c += 1
        out[i] = c / n
    return out


@njit(cache=True)
def _naive_many(X, y, exps, lo, hi, Z):
    n, d = X.shape
    s = Z.shape[0]
    D = exps.shape[0]
    theta = np.empty((s, D))
    counts = np.zeros(s, dtype=np.int64)
    degenerate = np.empty(s, dtype=np.bool_)
    G = np.empty((D, D))
    r = np.empty(D)
    psi = np.empty(D)
    for q in range(s):
        G[:, :] = 0.0
        r[:] = 0.0
        c = 0
        for i in range(n):
            inside = True
            for j in range(d):
                if X[i, j] < lo[q, j] or X[i, j] > hi[q, j]:
                    inside = False
                    break
            if not inside:
                continue
            c += 1
            for a in range(D):
                v = 1.0
                for j in range(d):
                    for _ in range(exps[a, j]):
                        v *= X[i, j] - Z[q, j]
                psi[a] = v
            for a in range(D):
                r[a] += y[i] * psi[a]
                for b in range(D):
                    G[a, b] += psi[a] * psi[b]
        counts[q] = c
        degenerate[q] = solve_into(G, r, c, theta[q])
    return theta, counts, degenerate


def naive_fit_many(ts: TrainingSet, spec: BasisSpec, Z, H, responses=None):
    """Batch form of :func:`naive_fit`; returns ``(theta, window_count, degenerate)``."""
    y = ts.responses if responses is None else np.asarray(responses, dtype=np.float64)
    if y is None:
        raise ConfigurationError("naive fit needs responses")
    Z = np.ascontiguousarray(Z, dtype=np.float64).reshape(-1, spec.d)
    half = 0.5 * np.broadcast_to(np.asarray(H, dtype=np.float64), (Z.shape[0],))[:, None]
    return _naive_many(ts.points, np.ascontiguousarray(y, dtype=np.float64),
                       _basis_exponents(spec), Z - half, Z + half, Z)
