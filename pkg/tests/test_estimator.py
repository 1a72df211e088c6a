import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import rel_err
from fastlocpoly import (
    CapacityError,
    ConfigurationError,
    ContractError,
    Query,
    TrainingSet,
    add_training_point,
    build,
    empirical_cdf,
    estimate_density,
    estimate_regression,
    fit_at,
    fit_many,
    make_basis_spec,
    naive_cdf,
)
from fastlocpoly.estimator import density_coefficient
from fastlocpoly.oracle import naive_fit_many


def test_single_point_model():
    model = build(TrainingSet([[0.3, 0.6]], [4.5]), make_basis_spec(2, 0))
    fit = fit_at(model, Query([0.35, 0.62], 0.2))
    assert fit.window_count == 1 and not fit.degenerate and fit.estimate == 4.5


def test_constant_fit_is_mean(rng):
    X = rng.uniform(size=40)
    y = rng.normal(size=40)
    model = build(TrainingSet(X, y), make_basis_spec(1, 0))
    fit = fit_at(model, Query([0.5], 0.3))
    inside = np.abs(X - 0.5) <= 0.15
    assert fit.window_count == inside.sum()
    assert abs(fit.estimate - y[inside].mean()) < 1e-12


def test_two_point_line():
    model = build(TrainingSet([0.2, 0.6, 5.0], [1.0, 3.0, 9.0]), make_basis_spec(1, 1))
    z = np.array([0.25, 0.4, 0.55])
    est = estimate_regression(model, z, h=1.0)
    np.testing.assert_allclose(est, 1.0 + 2.0 * (z - 0.2) / 0.4, rtol=1e-12)


def test_empty_window_is_missing():
    model = build(TrainingSet([0.1, 0.2], [1.0, 2.0]), make_basis_spec(1, 1))
    fit = fit_at(model, Query([0.8], 0.1))
    assert fit.window_count == 0 and fit.degenerate and np.all(np.isnan(fit.theta))
    assert np.isnan(estimate_regression(model, [0.8], 0.1)[0])


def test_build_is_deterministic(rng):
    ts = TrainingSet(rng.uniform(size=(100, 2)), rng.normal(size=100))
    spec = make_basis_spec(2, 1)
    Z = rng.uniform(size=(30, 2))
    a = fit_many(build(ts, spec), Z, 0.3)
    b = fit_many(build(ts, spec), Z, 0.3)
    for u, v in zip(a, b):
        assert np.array_equal(u, v, equal_nan=True)


def test_query_forms_agree(rng):
    ts = TrainingSet(rng.uniform(size=(50, 2)), rng.normal(size=50))
    model = build(ts, make_basis_spec(2, 1))
    Z = rng.uniform(size=(5, 2))
    H = rng.uniform(0.3, 0.8, size=5)
    by_obj = fit_many(model, [Query(z, h) for z, h in zip(Z, H)])
    by_arr = fit_many(model, Z, H)
    assert np.array_equal(by_obj[0], by_arr[0], equal_nan=True)
    with pytest.raises(ContractError):
        fit_many(model, Z, -1.0)
    with pytest.raises(ContractError):
        fit_many(model, rng.uniform(size=(5, 3)), 0.5)


@pytest.mark.parametrize("k", [0, 1, 2, 3])
def test_constant_responses_reproduced(rng, k):
    ts = TrainingSet(rng.uniform(size=(300, 2)), np.full(300, 2.75))
    est = estimate_regression(build(ts, make_basis_spec(2, k)), rng.uniform(size=(50, 2)), 0.4)
    ok = np.isfinite(est)
    assert ok.any()
    assert np.max(np.abs(est[ok] - 2.75)) <= 1e-9 * 2.75


def test_linear_responses_reproduced(rng):
    X = rng.uniform(size=200)
    model = build(TrainingSet(X, 1.5 - 4.0 * X), make_basis_spec(1, 1))
    z = rng.uniform(0.1, 0.9, size=40)
    est = estimate_regression(model, z, 0.2)
    ok = np.isfinite(est)
    assert np.max(rel_err(est[ok], 1.5 - 4.0 * z[ok])) <= 1e-9


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 200), st.integers(1, 3), st.integers(0, 2), st.integers(0, 2**31))
def test_matches_naive(n, d, k, seed):
    rng = np.random.default_rng(seed)
    ts = TrainingSet(rng.uniform(size=(n, d)), rng.normal(size=n))
    spec = make_basis_spec(d, k)
    Z = rng.uniform(size=(20, d))
    H = rng.uniform(0.05, 1.5, size=20)
    t_fast, c_fast, d_fast = fit_many(build(ts, spec), Z, H)
    t_naive, c_naive, d_naive = naive_fit_many(ts, spec, Z, H)
    assert np.array_equal(c_fast, c_naive)
    assert np.array_equal(d_fast, d_naive)
    ok = ~d_fast
    assert np.all(rel_err(t_fast[ok, 0], t_naive[ok, 0]) <= 1e-8)


@settings(max_examples=25, deadline=None)
@given(st.integers(5, 150), st.integers(1, 3), st.integers(0, 2), st.integers(0, 2**31),
       st.floats(-1e3, 1e3))
def test_translation_equivariance(n, d, k, seed, offset):
    rng = np.random.default_rng(seed)
    X = rng.uniform(size=(n, d))
    y = rng.normal(size=n)
    Z = rng.uniform(size=(15, d))
    spec = make_basis_spec(d, k)
    a = fit_many(build(TrainingSet(X, y), spec), Z, 0.5)
    shifted = X + offset
    if not np.array_equal(compress_ranks(X), compress_ranks(shifted)):
        return  # rounding merged or reordered coordinates
    b = fit_many(build(TrainingSet(shifted, y), spec), Z + offset, 0.5)
    same = (a[1] == b[1]) & ~a[2] & ~b[2]
    assert np.all(rel_err(a[0][same, 0], b[0][same, 0]) <= 1e-9)


def compress_ranks(X):
    return np.argsort(X, axis=0, kind="stable")


def test_no_recenter_matches_on_unit_cube(rng):
    ts = TrainingSet(rng.uniform(size=(200, 2)), rng.normal(size=200))
    spec = make_basis_spec(2, 1)
    Z = rng.uniform(size=(20, 2))
    a = estimate_regression(build(ts, spec), Z, 0.4)
    b = estimate_regression(build(ts, spec, recenter=False), Z, 0.4)
    assert np.all(rel_err(a, b) <= 1e-9)


def test_mode_errors(rng):
    ts = TrainingSet(rng.uniform(size=(20, 2)), rng.normal(size=20))
    with pytest.raises(ConfigurationError):
        build(ts, make_basis_spec(2, 1), "density")
    with pytest.raises(ConfigurationError):
        build(TrainingSet(rng.uniform(size=(5, 1))), make_basis_spec(1, 1))
    with pytest.raises(ConfigurationError):
        build(ts, make_basis_spec(2, 1), "classification")
    with pytest.raises(ContractError):
        build(ts, make_basis_spec(1, 1))
    reg = build(ts, make_basis_spec(2, 2))
    den = build(ts, make_basis_spec(2, 2), "density")
    with pytest.raises(ConfigurationError):
        estimate_density(reg, [[0.5, 0.5]], 0.3)
    with pytest.raises(ConfigurationError):
        estimate_regression(den, [[0.5, 0.5]], 0.3)
    with pytest.raises(ConfigurationError):
        add_training_point(den, [0.5, 0.5], 1.0)
    with pytest.raises(ConfigurationError):
        build(ts, make_basis_spec(2, 2), "density", reserve=[[0.5], [0.5]])


def test_empirical_cdf_examples():
    assert empirical_cdf(TrainingSet([[0.2, 0.3]])).tolist() == [1.0]
    X = np.array([0.9, 0.1, 0.5, 0.3])
    np.testing.assert_array_equal(empirical_cdf(TrainingSet(X)), [1.0, 0.25, 0.75, 0.5])


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 200), st.integers(1, 3), st.integers(0, 2**31))
def test_empirical_cdf_matches_double_loop(n, d, seed):
    rng = np.random.default_rng(seed)
    X = rng.integers(0, 6, size=(n, d)) / 5.0
    ts = TrainingSet(X)
    F = empirical_cdf(ts)
    assert np.array_equal(F, naive_cdf(ts))
    assert F.min() >= 1.0 / n and F.max() <= 1.0
    dom = np.all(X[:, None, :] <= X[None, :, :], axis=2)
    a, b = np.nonzero(dom)
    assert np.all(F[a] <= F[b])


def test_density_slope_of_cdf_fit(rng):
    X = rng.uniform(size=300)
    spec = make_basis_spec(1, 1)
    model = build(TrainingSet(X), spec, "density")
    z = np.array([0.3, 0.5, 0.7])
    dens = estimate_density(model, z, 0.2)
    theta, _, _ = naive_fit_many(TrainingSet(X), spec, z, 0.2, responses=naive_cdf(TrainingSet(X)))
    assert density_coefficient(spec) == 1
    assert np.all(rel_err(dens, theta[:, 1]) <= 1e-8)


def test_density_uniform_grid():
    n = 2000
    X = np.arange(1, n + 1) / n
    model = build(TrainingSet(X), make_basis_spec(1, 1), "density")
    h = 0.1
    dens = estimate_density(model, np.linspace(0.2, 0.8, 13), h)
    assert np.max(np.abs(dens - 1.0)) <= 2.0 / (n * h) + h


def test_density_factor_switch(rng):
    X = rng.uniform(size=(400, 2))
    spec = make_basis_spec(2, 2)
    Z = rng.uniform(0.3, 0.7, size=(10, 2))
    taylor = estimate_density(build(TrainingSet(X), spec, "density"), Z, 0.4)
    paper = estimate_density(build(TrainingSet(X), spec, "density", density_factor="paper"), Z, 0.4)
    np.testing.assert_allclose(paper, 2.0 * taylor, rtol=1e-14)
    with pytest.raises(ConfigurationError):
        build(TrainingSet(X), spec, "density", density_factor="other")


def test_density_matches_naive_2d(rng):
    ts = TrainingSet(rng.uniform(size=(300, 2)))
    spec = make_basis_spec(2, 2)
    Z = rng.uniform(size=(30, 2))
    dens = estimate_density(build(ts, spec, "density"), Z, 0.5)
    theta, _, deg = naive_fit_many(ts, spec, Z, 0.5, responses=naive_cdf(ts))
    ref = np.where(deg, np.nan, theta[:, density_coefficient(spec)])
    assert np.all(rel_err(dens, ref) <= 1e-8)


def test_add_point_increments_window_count(rng):
    X = rng.uniform(size=(30, 2))
    model = build(TrainingSet(X, rng.normal(size=30)), make_basis_spec(2, 1),
                  reserve=np.array([[0.5, 0.5]]))
    before = fit_at(model, Query([0.5, 0.5], 0.3)).window_count
    add_training_point(model, [0.5, 0.5], 1.0)
    assert fit_at(model, Query([0.5, 0.5], 0.3)).window_count == before + 1
    assert model.n_points == 31


def test_add_point_outside_windows_is_local(rng):
    X = np.concatenate([rng.uniform(size=(40, 1)), [[3.0]]])
    y = rng.normal(size=41)
    model = build(TrainingSet(X[:40], y[:40]), make_basis_spec(1, 1), reserve=[[3.0]])
    Z = rng.uniform(size=20)
    before = fit_many(model, Z, 0.3)
    add_training_point(model, [3.0], 5.0)
    after = fit_many(model, Z, 0.3)
    for u, v in zip(before, after):
        assert np.array_equal(u, v, equal_nan=True)


def test_add_point_existing_value_and_capacity_error(rng):
    X = rng.uniform(size=(10, 1))
    model = build(TrainingSet(X, np.ones(10)), make_basis_spec(1, 0))
    add_training_point(model, X[3], 2.0)
    assert model.n_points == 11
    with pytest.raises(CapacityError):
        add_training_point(model, [0.123456789], 1.0)
    with pytest.raises(ContractError):
        add_training_point(model, [0.1, 0.2], 1.0)


@settings(max_examples=20, deadline=None)
@given(st.integers(2, 80), st.integers(1, 3), st.integers(0, 2), st.integers(0, 2**31))
def test_incremental_equals_batch(n, d, k, seed):
    rng = np.random.default_rng(seed)
    X = rng.uniform(size=(n, d))
    y = rng.normal(size=n)
    spec = make_basis_spec(d, k)
    Z = rng.uniform(size=(20, d))
    H = rng.uniform(0.1, 1.2, size=20)
    batch = fit_many(build(TrainingSet(X, y), spec), Z, H)
    inc = build(TrainingSet(X[:1], y[:1]), spec, reserve=X[1:])
    for i in range(1, n):
        add_training_point(inc, X[i], y[i])
    got = fit_many(inc, Z, H)
    for u, v in zip(batch, got):
        assert np.array_equal(u, v, equal_nan=True)
