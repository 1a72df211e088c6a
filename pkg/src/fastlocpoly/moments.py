"""Sufficient statistics of a local polynomial fit.

The tree stores raw monomial sums ``sum X^a``; a fit at ``z`` needs sums of
``(X - z)^b``. These are related by the multivariate binomial theorem,

    sum (X - z)^b = sum_{g <= b} prod_j C(b_j, g_j) (-z_j)^(b_j - g_j) * sum X^g,

which costs O(L^2) per query and is independent of ``n``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from math import comb

import numpy as np
from numba import njit

from ._dd import dd_add, dd_mul
from .model import BasisSpec, ContractError, MultiIndex, make_basis_spec


@dataclass(frozen=True)
class MomentPlan:
    """Integer tables that drive the compiled kernels for one ``BasisSpec``."""

    u_exp: np.ndarray  # (Lu, d) exponents of the plain sums
    w_exp: np.ndarray  # (Lw, d) exponents of the response-weighted sums
    u_terms: tuple  # (target, source, coefficient, exponent-shift) arrays
    w_terms: tuple
    gram_idx: np.ndarray  # (D, D) position of basis[a] + basis[b] in the plain block
    rhs_idx: np.ndarray  # (D,) position of basis[a] in the weighted block
    max_power: int


def _shift_terms(indices):
    pos = {m: i for i, m in enumerate(indices)}
    tgt, src, coef, shift = [], [], [], []
    for t, beta in enumerate(indices):
        for gamma in itertools.product(*(range(b + 1) for b in beta.exponents)):
            c = 1
            for b, g in zip(beta.exponents, gamma):
                c *= comb(b, g)
            tgt.append(t)
            src.append(pos[MultiIndex(gamma)])
            coef.append(float(c))
            shift.append([b - g for b, g in zip(beta.exponents, gamma)])
    d = len(indices[0].exponents)
    return (
        np.array(tgt, dtype=np.int64),
        np.array(src, dtype=np.int64),
        np.array(coef),
        np.array(shift, dtype=np.int64).reshape(-1, d),
    )


@lru_cache(maxsize=None)
def _plan_for(d: int, k: int) -> MomentPlan:
    spec = make_basis_spec(d, k)
    gram = np.empty((spec.D, spec.D), dtype=np.int64)
    for a, ma in enumerate(spec.basis):
        for b, mb in enumerate(spec.basis):
            gram[a, b] = spec.unweighted_position(ma + mb)
    return MomentPlan(
        u_exp=np.array([m.exponents for m in spec.unweighted], dtype=np.int64),
        w_exp=np.array([m.exponents for m in spec.weighted], dtype=np.int64),
        u_terms=_shift_terms(spec.unweighted),
        w_terms=_shift_terms(spec.weighted),
        gram_idx=gram,
        rhs_idx=np.arange(spec.D, dtype=np.int64),
        max_power=2 * k,
    )


def moment_plan(spec: BasisSpec) -> MomentPlan:
    return _plan_for(spec.d, spec.k)


# ---------------------------------------------------------------------------
# compiled kernels
# ---------------------------------------------------------------------------


@njit(cache=True, inline="always")
def _powers(xh, xl, max_power, out_h, out_l):
    for j in range(xh.shape[0]):
        out_h[j, 0] = 1.0
        out_l[j, 0] = 0.0
        for p in range(1, max_power + 1):
            out_h[j, p], out_l[j, p] = dd_mul(out_h[j, p - 1], out_l[j, p - 1], xh[j], xl[j])


@njit(cache=True, inline="always")
def _monomial(pw_h, pw_l, exps):
    vh = 1.0
    vl = 0.0
    for j in range(exps.shape[0]):
        vh, vl = dd_mul(vh, vl, pw_h[j, exps[j]], pw_l[j, exps[j]])
    return vh, vl


@njit(cache=True)
def _raw_stats_many(Xh, Xl, y, u_exp, w_exp, max_power):
    n, d = Xh.shape
    Lu = u_exp.shape[0]
    Lw = w_exp.shape[0]
    out_h = np.empty((n, Lu + Lw))
    out_l = np.empty((n, Lu + Lw))
    pw_h = np.empty((d, max_power + 1))
    pw_l = np.empty((d, max_power + 1))
    for i in range(n):
        _powers(Xh[i], Xl[i], max_power, pw_h, pw_l)
        for l in range(Lu):
            out_h[i, l], out_l[i, l] = _monomial(pw_h, pw_l, u_exp[l])
        for l in range(Lw):
            mh, ml = _monomial(pw_h, pw_l, w_exp[l])
            out_h[i, Lu + l], out_l[i, Lu + l] = dd_mul(mh, ml, y[i], 0.0)
    return out_h, out_l


@njit(cache=True, inline="always")
def _apply_shift(raw_h, raw_l, offset, pwz_h, pwz_l, tgt, src, coef, shift, acc_h, acc_l, out):
    acc_h[:] = 0.0
    acc_l[:] = 0.0
    for t in range(tgt.shape[0]):
        mh, ml = _monomial(pwz_h, pwz_l, shift[t])
        mh, ml = dd_mul(mh, ml, coef[t], 0.0)
        mh, ml = dd_mul(mh, ml, raw_h[offset + src[t]], raw_l[offset + src[t]])
        acc_h[tgt[t]], acc_l[tgt[t]] = dd_add(acc_h[tgt[t]], acc_l[tgt[t]], mh, ml)
    for t in range(out.shape[0]):
        out[t] = acc_h[t] + acc_l[t]


@njit(cache=True)
def _shift_one(raw_h, raw_l, zh, zl, max_power, Lu, ut, us, uc, ux, wt, ws, wc, wx, cu, cw):
    d = zh.shape[0]
    pwz_h = np.empty((d, max_power + 1))
    pwz_l = np.empty((d, max_power + 1))
    _powers(-zh, -zl, max_power, pwz_h, pwz_l)
    acc_h = np.empty(max(cu.shape[0], cw.shape[0]))
    acc_l = np.empty_like(acc_h)
    _apply_shift(raw_h, raw_l, 0, pwz_h, pwz_l, ut, us, uc, ux, acc_h[:cu.shape[0]], acc_l[:cu.shape[0]], cu)
    _apply_shift(raw_h, raw_l, Lu, pwz_h, pwz_l, wt, ws, wc, wx, acc_h[:cw.shape[0]], acc_l[:cw.shape[0]], cw)


@njit(cache=True, inline="always")
def _assemble(cu, cw, gram_idx, rhs_idx, G, r):
    D = gram_idx.shape[0]
    for a in range(D):
        r[a] = cw[rhs_idx[a]]
        for b in range(D):
            G[a, b] = cu[gram_idx[a, b]]


def split_difference(X, mu):
    """``X - mu`` as an exact double-double pair ``(hi, lo)``."""
    X = np.asarray(X, dtype=np.float64)
    b = -np.asarray(mu, dtype=np.float64)
    hi = X + b
    bb = hi - X
    lo = (X - (hi - bb)) + (b - bb)
    return np.ascontiguousarray(hi), np.ascontiguousarray(lo)


# ---------------------------------------------------------------------------


def raw_statistics(spec: BasisSpec, x, y=None) -> np.ndarray:
    """Moment vector of one point: plain monomials, then ``y`` times monomials."""
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    if x.shape != (spec.d,):
        raise ContractError(f"point has dimension {x.shape[0]}, basis has {spec.d}")
    return raw_statistics_many(spec, x[None, :], None if y is None else [y])[0]


def raw_statistics_many(spec: BasisSpec, X, y=None, X_lo=None):
    """Moment vectors of many points, rounded to double.

    With ``X_lo`` (the low part of double-double coordinates) the unrounded
    ``(hi, lo)`` pair is returned instead.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != spec.d:
        raise ContractError(f"points must be (n, {spec.d})")
    yy = np.zeros(X.shape[0]) if y is None else np.ascontiguousarray(y, dtype=np.float64)
    plan = moment_plan(spec)
    lo = np.zeros_like(X) if X_lo is None else np.ascontiguousarray(X_lo, dtype=np.float64)
    th, tl = _raw_stats_many(X, lo, yy, plan.u_exp, plan.w_exp, plan.max_power)
    return th + tl if X_lo is None else (th, tl)


def shift_moments(spec: BasisSpec, raw, z):
    """Re-centre raw sums at ``z``.

    Returns ``(centered, weighted)``: sums of ``prod (x_j - z_j)^b`` over
    ``spec.unweighted`` and of ``y * prod (x_j - z_j)^b`` over ``spec.weighted``.
    """
    raw = np.ascontiguousarray(raw, dtype=np.float64)
    z = np.atleast_1d(np.asarray(z, dtype=np.float64))
    if raw.shape != (spec.L,) or z.shape != (spec.d,):
        raise ContractError("moment vector or centre does not match the basis")
    plan = moment_plan(spec)
    Lu = len(spec.unweighted)
    cu = np.empty(Lu)
    cw = np.empty(len(spec.weighted))
    _shift_one(raw, np.zeros_like(raw), z, np.zeros_like(z), plan.max_power, Lu,
               *plan.u_terms, *plan.w_terms, cu, cw)
    return cu, cw


def assemble_system(spec: BasisSpec, centered):
    """Normal equations ``(G, r)`` from centred sums."""
    cu, cw = centered
    plan = moment_plan(spec)
    G = np.empty((spec.D, spec.D))
    r = np.empty(spec.D)
    _assemble(np.asarray(cu, dtype=np.float64), np.asarray(cw, dtype=np.float64),
              plan.gram_idx, plan.rhs_idx, G, r)
    return G, r
