"""Domain types shared across the package.

Notation follows the usual local polynomial setup: ``n`` training points in
``d`` dimensions, a polynomial degree ``k``, a basis of ``D`` monomials and
``L`` sufficient statistics per point.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from math import comb
from typing import Optional

import numpy as np

# A moment vector is a float64 array of length ``BasisSpec.L``, laid out as
# ``BasisSpec.stat_index`` (unweighted block first, response-weighted second).
MomentVector = np.ndarray


class ContractError(ValueError):
    """An argument violates an operation's preconditions."""


class ConfigurationError(ValueError):
    """The requested estimator configuration is not valid."""


class CapacityError(ValueError):
    """A point falls outside the rank space fixed at build time."""


@dataclass(frozen=True)
class TrainingSet:
    points: np.ndarray
    responses: Optional[np.ndarray] = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim == 1:
            pts = pts.reshape(-1, 1)
        if pts.ndim != 2 or pts.shape[0] < 1 or pts.shape[1] < 1:
            raise ContractError(f"points must be a non-empty (n, d) array, got shape {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise ContractError("points must be finite")
        object.__setattr__(self, "points", pts)
        if self.responses is not None:
            y = np.asarray(self.responses, dtype=np.float64).reshape(-1)
            if y.shape[0] != pts.shape[0]:
                raise ContractError(
                    f"got {y.shape[0]} responses for {pts.shape[0]} points"
                )
            object.__setattr__(self, "responses", y)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]


@dataclass(frozen=True)
class Query:
    z: np.ndarray
    h: float

    def __post_init__(self):
        z = np.atleast_1d(np.asarray(self.z, dtype=np.float64))
        if z.ndim != 1:
            raise ContractError("query point must be a coordinate vector")
        if not (self.h > 0):
            raise ContractError(f"bandwidth must be positive, got {self.h}")
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "h", float(self.h))


@dataclass(frozen=True, order=True)
class MultiIndex:
    exponents: tuple

    def __post_init__(self):
        exps = tuple(int(e) for e in self.exponents)
        if any(e < 0 for e in exps):
            raise ContractError(f"exponents must be non-negative, got {exps}")
        object.__setattr__(self, "exponents", exps)

    @property
    def total_degree(self) -> int:
        return sum(self.exponents)

    def __add__(self, other: "MultiIndex") -> "MultiIndex":
        return MultiIndex(tuple(a + b for a, b in zip(self.exponents, other.exponents)))


def multi_indices(d: int, max_degree: int) -> list[MultiIndex]:
    """All exponent tuples of length ``d`` with total degree <= ``max_degree``.

    Graded lexicographic order: by total degree, then with larger leading
    exponents first, so ``(1, 0)`` precedes ``(0, 1)``.
    """
    out = []
    for deg in range(max_degree + 1):
        level = [
            e for e in itertools.product(range(deg + 1), repeat=d) if sum(e) == deg
        ]
        level.sort(reverse=True)
        out.extend(MultiIndex(e) for e in level)
    return out


@dataclass(frozen=True)
class BasisSpec:
    """Monomial basis of degree ``k`` in ``d`` variables and its statistic layout."""

    d: int
    k: int
    basis: tuple
    unweighted: tuple
    weighted: tuple
    _position: dict = field(repr=False, compare=False)

    @property
    def D(self) -> int:
        return len(self.basis)

    @property
    def L(self) -> int:
        return len(self.unweighted) + len(self.weighted)

    @property
    def stat_index(self) -> tuple:
        """``(kind, MultiIndex)`` pairs, kind ``"x"`` for plain sums and ``"yx"`` for weighted."""
        return tuple(("x", m) for m in self.unweighted) + tuple(("yx", m) for m in self.weighted)

    def unweighted_position(self, m: MultiIndex) -> int:
        return self._position[m]

    def weighted_position(self, m: MultiIndex) -> int:
        return len(self.unweighted) + self.basis.index(m)

    def basis_position(self, m: MultiIndex) -> int:
        return self.basis.index(m)


def make_basis_spec(d: int, k: int) -> BasisSpec:
    if int(d) != d or int(k) != k or d < 1 or k < 0:
        raise ContractError(f"need integers d >= 1 and k >= 0, got d={d}, k={k}")
    d, k = int(d), int(k)
    basis = tuple(multi_indices(d, k))
    unweighted = tuple(multi_indices(d, 2 * k))
    spec = BasisSpec(
        d=d,
        k=k,
        basis=basis,
        unweighted=unweighted,
        weighted=basis,
        _position={m: i for i, m in enumerate(unweighted)},
    )
    assert spec.D == comb(d + k, k)
    assert spec.L == comb(d + 2 * k, 2 * k) + comb(d + k, k)
    return spec


@dataclass(frozen=True)
class LocalFit:
    theta: np.ndarray
    window_count: int
    degenerate: bool

    @property
    def estimate(self) -> float:
        """Fitted value at the query point, NaN for degenerate windows."""
        return float("nan") if self.degenerate else float(self.theta[0])
