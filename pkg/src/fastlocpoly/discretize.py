"""Per-dimension coordinate compression and query-box rank bounds."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import ContractError, Query, TrainingSet


@dataclass(frozen=True)
class DiscretizationIndex:
    """Sorted coordinates per dimension plus the rank tuple of every training point.

    ``lam`` has shape ``(d, m)`` where ``m`` is the rank-space size; ``ranks``
    has shape ``(n, d)`` and is 1-based, so ``lam[j, ranks[i, j] - 1] == X[i, j]``.
    ``m`` exceeds ``n`` only when extra coordinate values were reserved.
    """

    lam: np.ndarray
    ranks: np.ndarray

    @property
    def d(self) -> int:
        return self.lam.shape[0]

    @property
    def size(self) -> int:
        return self.lam.shape[1]

    def rank_of_value(self, j: int, value: float) -> int | None:
        """First 1-based rank in dimension ``j`` holding exactly ``value``, or None."""
        pos = int(np.searchsorted(self.lam[j], value, side="left"))
        if pos < self.size and self.lam[j, pos] == value:
            return pos + 1
        return None


def compress(ts: TrainingSet, reserve=None) -> DiscretizationIndex:
    """Sort every dimension independently and assign each point its rank tuple.

    Ties get distinct consecutive ranks, ordered by original point index
    (stable sort). ``reserve`` optionally pre-extends the sorted arrays with
    anticipated coordinates: either an ``(m, d)`` array of points or ``d``
    sequences of values. Reserved slots carry no point until one is added.
    """
    X = ts.points
    n, d = X.shape
    extra = _reserve_columns(reserve, d)
    size = n + max((len(e) for e in extra), default=0)
    lam = np.empty((d, size))
    ranks = np.empty((n, d), dtype=np.int64)
    for j in range(d):
        col = np.concatenate([X[:, j], extra[j]]) if extra else X[:, j]
        order = np.argsort(col, kind="stable")
        inv = np.empty(len(col), dtype=np.int64)
        inv[order] = np.arange(1, len(col) + 1)
        ranks[:, j] = inv[:n]
        srt = col[order]
        # Dimensions with fewer reserved values are padded on the right; padding
        # never falls inside a finite window.
        lam[j, : len(srt)] = srt
        lam[j, len(srt):] = np.inf
    return DiscretizationIndex(lam=lam, ranks=ranks)


def _reserve_columns(reserve, d):
    if reserve is None:
        return []
    if isinstance(reserve, np.ndarray) and reserve.ndim == 2:
        if reserve.shape[1] != d:
            raise ContractError(f"reserve has {reserve.shape[1]} columns, expected {d}")
        return [np.asarray(reserve[:, j], dtype=np.float64) for j in range(d)]
    cols = [np.asarray(c, dtype=np.float64).reshape(-1) for c in reserve]
    if len(cols) != d:
        raise ContractError(f"reserve has {len(cols)} dimensions, expected {d}")
    if any(not np.all(np.isfinite(c)) for c in cols):
        raise ContractError("reserved coordinates must be finite")
    return cols


def window_bounds(idx: DiscretizationIndex, q: Query) -> np.ndarray:
    """Rank bounds ``(L_j, U_j)`` of the box of side ``h`` centred at ``z``.

    ``L_j`` counts values strictly below ``z_j - h/2`` and ``U_j`` counts values
    at most ``z_j + h/2``, so point ``i`` is in the box iff
    ``L_j < rank_ij <= U_j`` for all ``j``. Returns an ``(d, 2)`` int array.
    """
    if q.z.shape[0] != idx.d:
        raise ContractError(f"query has dimension {q.z.shape[0]}, index has {idx.d}")
    lower, upper = window_bounds_many(idx, q.z[None, :], np.array([q.h]))
    return np.stack([lower[0], upper[0]], axis=1)


def window_bounds_many(idx: DiscretizationIndex, Z: np.ndarray, H: np.ndarray):
    """Vectorised :func:`window_bounds`; returns ``(lower, upper)``, each ``(s, d)``."""
    Z = np.asarray(Z, dtype=np.float64)
    half = 0.5 * np.asarray(H, dtype=np.float64)
    lower = np.empty(Z.shape, dtype=np.int64)
    upper = np.empty(Z.shape, dtype=np.int64)
    for j in range(idx.d):
        lower[:, j] = np.searchsorted(idx.lam[j], Z[:, j] - half, side="left")
        upper[:, j] = np.searchsorted(idx.lam[j], Z[:, j] + half, side="right")
    return lower, upper
