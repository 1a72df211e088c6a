"""Sparse d-dimensional binary indexed tree over moment vectors.

Nodes live in an open-addressing hash table (linear probing) keyed by the
full rank tuple, so collisions are always resolved exactly. The bucket of a
tuple is the composite hash ``(h_1(i_1) + ... + h_d(i_d)) mod b`` of
independent per-dimension polynomial hashes. Only touched nodes are stored.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from ._dd import dd_add
from .model import ContractError

EMPTY = -1
MERSENNE_31 = (1 << 31) - 1


def lsb(i: int) -> int:
    return i & -i


def interrogation_path(i: int) -> list[int]:
    """Nodes summed by a prefix query at ``i``: strip the lowest set bit until 0."""
    out = []
    while i > 0:
        out.append(i)
        i -= lsb(i)
    return out


def update_path(i: int, n: int) -> list[int]:
    """Nodes touched when adding a point at rank ``i`` (1-based) in a tree of size ``n``."""
    if not 1 <= i <= n:
        raise ContractError(f"rank {i} outside 1..{n}")
    out = []
    while i <= n:
        out.append(i)
        i += lsb(i)
    return out


class PolynomialHash:
    """Random polynomial of degree ``t - 1`` over GF(2^31 - 1).

    Evaluating at distinct keys gives ``t``-wise independent values in
    ``[0, 2^31 - 1)``.
    """

    def __init__(self, t: int, rng: np.random.Generator):
        self.coefficients = [int(c) for c in rng.integers(0, MERSENNE_31, size=t)]

    def __call__(self, i):
        x = np.asarray(i, dtype=np.int64) % MERSENNE_31
        acc = np.zeros_like(x)
        for c in self.coefficients:
            acc = (acc * x + c) % MERSENNE_31
        return acc if acc.ndim else int(acc)


def composite_hash(tup, b: int, hashes) -> int:
    """Bucket of rank tuple ``tup`` in a table of ``b`` slots."""
    if b < 1:
        raise ContractError("capacity must be at least 1")
    return sum(h(i) % b for h, i in zip(hashes, tup)) % b


# ---------------------------------------------------------------------------
# compiled kernels
# ---------------------------------------------------------------------------


@njit(cache=True, inline="always")
def _fill_update_path(i, n, out):
    m = 0
    while i <= n:
        out[m] = i
        m += 1
        i += i & -i
    return m


@njit(cache=True, inline="always")
def _fill_interrogation_path(i, out):
    m = 0
    while i > 0:
        out[m] = i
        m += 1
        i -= i & -i
    return m


@njit(cache=True, inline="always")
def _probe(keys, hsum, key):
    mask = keys.shape[0] - 1
    pos = hsum & mask
    while True:
        k = keys[pos]
        if k == key or k == EMPTY:
            return pos
        pos = (pos + 1) & mask


@njit(cache=True, inline="always")
def _advance(ctr, lens):
    d = ctr.shape[0]
    j = 0
    while j < d:
        ctr[j] += 1
        if ctr[j] < lens[j]:
            return True
        ctr[j] = 0
        j += 1
    return False


@njit(cache=True)
def _insert_many(keys, hi, lo, count, hbar, strides, n, chis, Th, Tl, start,
                 max_count, max_nodes):
    """Add rows of ``Th + Tl`` at rank tuples ``chis`` from ``start`` on.

    Stops before a point could push the entry count past ``max_count`` and
    returns the index of the first point not inserted.
    """
    d = chis.shape[1]
    L = Th.shape[1]
    paths = np.empty((d, 64), dtype=np.int64)
    lens = np.empty(d, dtype=np.int64)
    ctr = np.zeros(d, dtype=np.int64)
    for p in range(start, chis.shape[0]):
        if count[0] + max_nodes > max_count:
            return p
        for j in range(d):
            lens[j] = _fill_update_path(chis[p, j], n, paths[j])
        ctr[:] = 0
        while True:
            key = 0
            hs = 0
            for j in range(d):
                v = paths[j, ctr[j]]
                key += v * strides[j]
                hs += hbar[j, v]
            pos = _probe(keys, hs, key)
            if keys[pos] == EMPTY:
                keys[pos] = key
                count[0] += 1
            for l in range(L):
                hi[pos, l], lo[pos, l] = dd_add(hi[pos, l], lo[pos, l], Th[p, l], Tl[p, l])
            if not _advance(ctr, lens):
                break
    return chis.shape[0]


@njit(cache=True)
def _rehash(keys, hi, lo, new_keys, new_hi, new_lo, hbar, base):
    d = hbar.shape[0]
    for pos in range(keys.shape[0]):
        key = keys[pos]
        if key == EMPTY:
            continue
        hs = 0
        rem = key
        for j in range(d):
            hs += hbar[j, rem % base]
            rem //= base
        q = _probe(new_keys, hs, key)
        new_keys[q] = key
        new_hi[q, :] = hi[pos, :]
        new_lo[q, :] = lo[pos, :]


@njit(cache=True)
def _prefix_into(keys, hi, lo, hbar, strides, idx, acc_h, acc_l, paths, lens, ctr):
    d = idx.shape[0]
    L = hi.shape[1]
    for j in range(d):
        lens[j] = _fill_interrogation_path(idx[j], paths[j])
        if lens[j] == 0:
            return
    ctr[:] = 0
    while True:
        key = 0
        hs = 0
        for j in range(d):
            v = paths[j, ctr[j]]
            key += v * strides[j]
            hs += hbar[j, v]
        pos = _probe(keys, hs, key)
        if keys[pos] != EMPTY:
            for l in range(L):
                acc_h[l], acc_l[l] = dd_add(acc_h[l], acc_l[l], hi[pos, l], lo[pos, l])
        if not _advance(ctr, lens):
            break


@njit(cache=True)
def _prefix_many(keys, hi, lo, hbar, strides, idx):
    s, d = idx.shape
    L = hi.shape[1]
    out_h = np.zeros((s, L))
    out_l = np.zeros((s, L))
    paths = np.empty((d, 64), dtype=np.int64)
    lens = np.empty(d, dtype=np.int64)
    ctr = np.zeros(d, dtype=np.int64)
    for q in range(s):
        _prefix_into(keys, hi, lo, hbar, strides, idx[q], out_h[q], out_l[q], paths, lens, ctr)
    return out_h, out_l


@njit(cache=True)
def _box_many(keys, hi, lo, hbar, strides, lower, upper):
    """Inclusion-exclusion over the 2^d corners of every box."""
    s, d = lower.shape
    L = hi.shape[1]
    out_h = np.zeros((s, L))
    out_l = np.zeros((s, L))
    corner = np.empty(d, dtype=np.int64)
    part_h = np.empty(L)
    part_l = np.empty(L)
    paths = np.empty((d, 64), dtype=np.int64)
    lens = np.empty(d, dtype=np.int64)
    ctr = np.zeros(d, dtype=np.int64)
    for q in range(s):
        empty = False
        for j in range(d):
            if lower[q, j] >= upper[q, j]:
                empty = True
        if empty:
            continue
        for nu in range(1 << d):
            sign = 1.0
            for j in range(d):
                if (nu >> j) & 1:
                    corner[j] = lower[q, j]
                    sign = -sign
                else:
                    corner[j] = upper[q, j]
            part_h[:] = 0.0
            part_l[:] = 0.0
            _prefix_into(keys, hi, lo, hbar, strides, corner, part_h, part_l, paths, lens, ctr)
            for l in range(L):
                out_h[q, l], out_l[q, l] = dd_add(out_h[q, l], out_l[q, l],
                                                  sign * part_h[l], sign * part_l[l])
    return out_h, out_l


# ---------------------------------------------------------------------------


def _next_pow2(x: int) -> int:
    return 1 << max(4, int(x - 1).bit_length())


class FenwickGrid:
    """Binary indexed tree over ``[1..n]^d`` holding length-``L`` vectors.

    Node values are kept in double-double precision; queries return the
    rounded double unless the ``*_dd`` variants are used.

    Parameters
    ----------
    n : int
        Rank-space size per dimension.
    d : int
        Number of dimensions.
    L : int
        Length of the stored vectors.
    capacity : int, optional
        Expected number of nodes; the table doubles whenever it would exceed
        ``max_load``.
    seed : int
        Seed for the per-dimension hash functions.
    independence : int
        Target independence ``t`` of the composite hash; each per-dimension
        hash is ``t * d``-wise independent.
    """

    def __init__(self, n: int, d: int, L: int, *, capacity: int | None = None,
                 seed: int = 0, independence: int = 5, max_load: float = 0.5):
        if n < 1 or d < 1 or L < 1:
            raise ContractError(f"invalid grid shape n={n}, d={d}, L={L}")
        if d * np.log2(n + 1.0) >= 62:
            raise ContractError(f"rank space {n}^{d} too large for 64-bit keys")
        self.n, self.d, self.L = int(n), int(d), int(L)
        self.max_load = max_load
        rng = np.random.default_rng(seed)
        self.hashes = [PolynomialHash(independence * d, rng) for _ in range(d)]
        ranks = np.arange(self.n + 1, dtype=np.int64)
        self._hbar = np.stack([h(ranks) for h in self.hashes])
        self._strides = (self.n + 1) ** np.arange(d, dtype=np.int64)
        self.max_nodes = self.n.bit_length() ** d
        self._allocate(_next_pow2(int((capacity or 16) / max_load)))
        self._count = np.zeros(1, dtype=np.int64)

    def _allocate(self, cap):
        self._keys = np.full(cap, EMPTY, dtype=np.int64)
        self._hi = np.zeros((cap, self.L))
        self._lo = np.zeros((cap, self.L))

    @property
    def capacity(self) -> int:
        return self._keys.shape[0]

    @property
    def entry_count(self) -> int:
        return int(self._count[0])

    def _grow(self):
        old = self._keys, self._hi, self._lo
        self._allocate(2 * self.capacity)
        _rehash(*old, self._keys, self._hi, self._lo, self._hbar, self.n + 1)

    def update_many(self, chis, values, values_lo=None) -> None:
        """Add ``values[p]`` at rank tuple ``chis[p]`` for every row, in row order."""
        chis = np.ascontiguousarray(chis, dtype=np.int64)
        Th = np.ascontiguousarray(values, dtype=np.float64)
        Tl = np.zeros_like(Th) if values_lo is None else np.ascontiguousarray(values_lo, dtype=np.float64)
        if chis.ndim != 2 or chis.shape[1] != self.d:
            raise ContractError(f"rank tuples must have {self.d} components")
        if chis.size and (chis.min() < 1 or chis.max() > self.n):
            raise ContractError(f"rank outside 1..{self.n}")
        if Th.shape != (chis.shape[0], self.L) or Tl.shape != Th.shape:
            raise ContractError(f"expected values of shape ({chis.shape[0]}, {self.L})")
        start = 0
        while start < chis.shape[0]:
            limit = int(self.max_load * self.capacity)
            if self.entry_count + self.max_nodes > limit:
                self._grow()
                continue
            start = _insert_many(self._keys, self._hi, self._lo, self._count, self._hbar,
                                 self._strides, self.n, chis, Th, Tl, start, limit,
                                 self.max_nodes)

    def point_update(self, chi, t) -> None:
        self.update_many(np.asarray(chi, dtype=np.int64).reshape(1, -1),
                         np.asarray(t, dtype=np.float64).reshape(1, -1))

    def prefix_query_dd(self, idx):
        idx = np.ascontiguousarray(idx, dtype=np.int64)
        if idx.ndim != 2 or idx.shape[1] != self.d:
            raise ContractError(f"prefix indices must be (s, {self.d})")
        if idx.size and (idx.min() < 0 or idx.max() > self.n):
            raise ContractError(f"prefix index outside 0..{self.n}")
        return _prefix_many(self._keys, self._hi, self._lo, self._hbar, self._strides, idx)

    def prefix_query_many(self, idx) -> np.ndarray:
        hi, lo = self.prefix_query_dd(idx)
        return hi + lo

    def prefix_query(self, i) -> np.ndarray:
        """Sum of everything inserted at rank tuples ``<= i`` componentwise."""
        return self.prefix_query_many(np.asarray(i, dtype=np.int64).reshape(1, -1))[0]

    def box_query_dd(self, lower, upper):
        lower = np.ascontiguousarray(lower, dtype=np.int64)
        upper = np.ascontiguousarray(upper, dtype=np.int64)
        if lower.shape != upper.shape or lower.ndim != 2 or lower.shape[1] != self.d:
            raise ContractError("box bounds must be two (s, d) arrays")
        if lower.size and (lower.min() < 0 or upper.max() > self.n or np.any(lower > upper)):
            raise ContractError(f"box bounds must satisfy 0 <= L_j <= U_j <= {self.n}")
        return _box_many(self._keys, self._hi, self._lo, self._hbar, self._strides, lower, upper)

    def box_query_many(self, lower, upper) -> np.ndarray:
        hi, lo = self.box_query_dd(lower, upper)
        return hi + lo

    def box_query(self, bounds) -> np.ndarray:
        """Sum over points with ``L_j < rank_j <= U_j``; ``bounds`` is ``(d, 2)``."""
        b = np.asarray(bounds, dtype=np.int64).reshape(self.d, 2)
        return self.box_query_many(b[None, :, 0], b[None, :, 1])[0]

    def bucket(self, tup) -> int:
        """Home slot of ``tup`` before probing."""
        return int(sum(int(self._hbar[j, i]) for j, i in enumerate(tup)) % self.capacity)

    def node(self, tup) -> np.ndarray:
        """Stored vector at ``tup`` (zeros when never touched)."""
        key = int(np.dot(np.asarray(tup, dtype=np.int64), self._strides))
        pos = self.bucket(tup)
        while self._keys[pos] != EMPTY:
            if self._keys[pos] == key:
                return self._hi[pos] + self._lo[pos]
            pos = (pos + 1) % self.capacity
        return np.zeros(self.L)

    def items(self):
        """Yield ``(rank_tuple, vector)`` for every materialised node."""
        base = self.n + 1
        for pos in np.flatnonzero(self._keys != EMPTY):
            key = int(self._keys[pos])
            yield (tuple((key // base**j) % base for j in range(self.d)),
                   self._hi[pos] + self._lo[pos])
