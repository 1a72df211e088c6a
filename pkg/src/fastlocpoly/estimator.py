"""Local polynomial regression and density estimation backed by a Fenwick grid.

Typical use::

    spec = make_basis_spec(d=1, k=1)
    model = build(TrainingSet(X, y), spec)
    yhat = estimate_regression(model, Z, h=0.1)
"""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial
from typing import Optional

import numpy as np
from numba import njit

from .discretize import DiscretizationIndex, compress, window_bounds_many
from .fenwick import FenwickGrid
from .model import (
    BasisSpec,
    CapacityError,
    ConfigurationError,
    ContractError,
    LocalFit,
    MultiIndex,
    Query,
    TrainingSet,
)
from .moments import (
    _apply_shift,
    _assemble,
    _powers,
    moment_plan,
    raw_statistics_many,
    split_difference,
)
from .solver import solve_into

REGRESSION = "regression"
DENSITY = "density"
DENSITY_FACTORS = ("taylor", "paper")


@dataclass
class FittedModel:
    spec: BasisSpec
    idx: DiscretizationIndex
    grid: FenwickGrid
    mode: str
    global_shift: np.ndarray
    cdf_values: Optional[np.ndarray] = None
    density_factor: str = "taylor"
    n_points: int = 0

    @property
    def d(self) -> int:
        return self.spec.d


def _rank_space_mean(idx: DiscretizationIndex) -> np.ndarray:
    # Mean of the sorted coordinate arrays (finite entries), so a model built
    # with reserved values and one built on the full data share one shift.
    return np.array([np.mean(row[np.isfinite(row)]) for row in idx.lam])


def build(ts: TrainingSet, spec: BasisSpec, mode: str = REGRESSION, *,
          reserve=None, recenter: bool = True, density_factor: str = "taylor",
          seed: int = 0) -> FittedModel:
    """Discretise the training set and load every point's statistics into the grid.

    In density mode the responses are replaced by the empirical CDF at each
    training point and ``spec.k >= spec.d`` is required.
    """
    if ts.d != spec.d:
        raise ContractError(f"training data has dimension {ts.d}, basis has {spec.d}")
    if density_factor not in DENSITY_FACTORS:
        raise ConfigurationError(f"density factor must be one of {DENSITY_FACTORS}")
    cdf = None
    if mode == DENSITY:
        if spec.k < spec.d:
            raise ConfigurationError(
                f"density estimation needs degree k >= d, got k={spec.k}, d={spec.d}"
            )
        if reserve is not None:
            raise ConfigurationError("density models do not accept new points")
        cdf = empirical_cdf(ts)
        y = cdf
    elif mode == REGRESSION:
        if ts.responses is None:
            raise ConfigurationError("regression needs responses")
        y = ts.responses
    else:
        raise ConfigurationError(f"unknown mode {mode!r}")

    idx = compress(ts, reserve)
    shift = _rank_space_mean(idx) if recenter else np.zeros(spec.d)
    bitlen = idx.size.bit_length()
    grid = FenwickGrid(idx.size, spec.d, spec.L, seed=seed,
                       capacity=ts.n * bitlen ** (spec.d - 1))
    Xh, Xl = split_difference(ts.points, shift)
    grid.update_many(idx.ranks, *raw_statistics_many(spec, Xh, y, X_lo=Xl))
    return FittedModel(spec=spec, idx=idx, grid=grid, mode=mode, global_shift=shift,
                       cdf_values=cdf, density_factor=density_factor, n_points=ts.n)


def empirical_cdf(ts: TrainingSet) -> np.ndarray:
    """Fraction of training points dominated componentwise by each training point.

    Dominance counting with a count-only grid: every point is inserted at its
    rank tuple, then each point queries the prefix ending at the last rank
    that still shares its coordinate value, so ties count as dominated.
    """
    idx = compress(ts)
    grid = FenwickGrid(ts.n, ts.d, 1, capacity=ts.n * ts.n.bit_length() ** (ts.d - 1))
    grid.update_many(idx.ranks, np.ones((ts.n, 1)))
    upper = np.empty_like(idx.ranks)
    for j in range(ts.d):
        upper[:, j] = np.searchsorted(idx.lam[j], ts.points[:, j], side="right")
    return grid.prefix_query_many(upper)[:, 0] / ts.n


@njit(cache=True)
def _fit_from_raw(raw_h, raw_l, zh, zl, max_power, Lu, ut, us, uc, ux, wt, ws, wc, wx,
                  gram_idx, rhs_idx):
    s, d = zh.shape
    D = gram_idx.shape[0]
    Lw = raw_h.shape[1] - Lu
    theta = np.empty((s, D))
    counts = np.empty(s, dtype=np.int64)
    degenerate = np.empty(s, dtype=np.bool_)
    cu = np.empty(Lu)
    cw = np.empty(Lw)
    acc_h = np.empty(Lu)
    acc_l = np.empty(Lu)
    pwz_h = np.empty((d, max_power + 1))
    pwz_l = np.empty((d, max_power + 1))
    G = np.empty((D, D))
    r = np.empty(D)
    for q in range(s):
        c = int(np.rint(raw_h[q, 0] + raw_l[q, 0]))
        if c <= 0:
            counts[q] = 0
            theta[q, :] = np.nan
            degenerate[q] = True
            continue
        counts[q] = c
        _powers(-zh[q], -zl[q], max_power, pwz_h, pwz_l)
        _apply_shift(raw_h[q], raw_l[q], 0, pwz_h, pwz_l, ut, us, uc, ux, acc_h, acc_l, cu)
        _apply_shift(raw_h[q], raw_l[q], Lu, pwz_h, pwz_l, wt, ws, wc, wx,
                     acc_h[:Lw], acc_l[:Lw], cw)
        _assemble(cu, cw, gram_idx, rhs_idx, G, r)
        degenerate[q] = solve_into(G, r, c, theta[q])
    return theta, counts, degenerate


def _as_queries(d: int, queries, h):
    if h is None:
        if not len(queries):
            return np.empty((0, d)), np.empty(0)
        Z = np.array([q.z for q in queries], dtype=np.float64)
        H = np.array([q.h for q in queries], dtype=np.float64)
    else:
        Z = np.asarray(queries, dtype=np.float64)
        if Z.ndim == 1:
            Z = Z.reshape(-1, d) if d > 1 else Z.reshape(-1, 1)
        H = np.broadcast_to(np.asarray(h, dtype=np.float64), (Z.shape[0],)).copy()
    if Z.ndim != 2 or Z.shape[1] != d:
        raise ContractError(f"queries must have dimension {d}")
    if not np.all(H > 0):
        raise ContractError("bandwidths must be positive")
    return np.ascontiguousarray(Z), H


def fit_many(model: FittedModel, queries, h=None):
    """Fit at many test points at once.

    ``queries`` is a sequence of :class:`Query`, or an ``(s, d)`` array of test
    points with ``h`` a scalar or per-point bandwidths. Returns
    ``(theta, window_count, degenerate)`` with shapes ``(s, D)``, ``(s,)``, ``(s,)``.
    """
    Z, H = _as_queries(model.d, queries, h)
    lower, upper = window_bounds_many(model.idx, Z, H)
    raw_h, raw_l = model.grid.box_query_dd(lower, upper)
    zh, zl = split_difference(Z, model.global_shift)
    plan = moment_plan(model.spec)
    return _fit_from_raw(raw_h, raw_l, zh, zl, plan.max_power,
                         plan.u_exp.shape[0], *plan.u_terms, *plan.w_terms,
                         plan.gram_idx, plan.rhs_idx)


def fit_at(model: FittedModel, q: Query) -> LocalFit:
    theta, counts, degenerate = fit_many(model, [q])
    return LocalFit(theta=theta[0], window_count=int(counts[0]), degenerate=bool(degenerate[0]))


def estimate_regression(model: FittedModel, queries, h=None) -> np.ndarray:
    """Fitted values at the test points; NaN marks degenerate windows."""
    if model.mode != REGRESSION:
        raise ConfigurationError("model was not built for regression")
    theta, _, degenerate = fit_many(model, queries, h)
    out = theta[:, 0].copy()
    out[degenerate] = np.nan
    return out


def density_coefficient(spec: BasisSpec) -> int:
    """Basis position of the mixed monomial ``prod_j (x_j - z_j)``."""
    return spec.basis_position(MultiIndex((1,) * spec.d))


def density_scale(d: int, factor: str) -> float:
    return float(factorial(d)) if factor == "paper" else 1.0


def estimate_density(model: FittedModel, queries, h=None) -> np.ndarray:
    """Mixed-partial coefficient of the local fit to the empirical CDF."""
    if model.mode != DENSITY:
        raise ConfigurationError("model was not built for density estimation")
    theta, _, degenerate = fit_many(model, queries, h)
    out = density_scale(model.d, model.density_factor) * theta[:, density_coefficient(model.spec)]
    out[degenerate] = np.nan
    return out


def add_training_point(model: FittedModel, x, y) -> FittedModel:
    """Insert one more observation into a regression model, in place.

    Every coordinate must already appear in the model's sorted arrays, either
    as a training value or as a value reserved at build time.
    """
    if model.mode != REGRESSION:
        raise ConfigurationError("only regression models accept new points")
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    if x.shape != (model.d,):
        raise ContractError(f"point has dimension {x.shape[0]}, model has {model.d}")
    chi = np.empty((1, model.d), dtype=np.int64)
    for j in range(model.d):
        r = model.idx.rank_of_value(j, x[j])
        if r is None:
            raise CapacityError(
                f"coordinate {x[j]!r} in dimension {j} has no rank; reserve it at build time"
            )
        chi[0, j] = r
    xh, xl = split_difference(x[None, :], model.global_shift)
    model.grid.update_many(chi, *raw_statistics_many(model.spec, xh, [float(y)], X_lo=xl))
    model.n_points += 1
    return model
