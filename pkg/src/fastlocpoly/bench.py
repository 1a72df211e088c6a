"""Timing harness comparing the tree-backed estimator with the quadratic scan."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass

import numpy as np

from .estimator import build, fit_many
from .model import TrainingSet, make_basis_spec
from .oracle import naive_fit_many

log = logging.getLogger(__name__)

NOISE_SD = 0.1
BANDWIDTH_RULES = ("n^-1/3", "n^-1/4", "n^-1/5")
ENGINES = ("fast", "naive")
COLUMNS = ("engine", "n", "s", "d", "k", "h", "build_secs", "query_secs",
           "total_secs", "peak_entry_count", "mse")


def bench_function(X: np.ndarray) -> np.ndarray:
    """``sin(2 pi x_1) * prod_{j >= 2} cos(2 pi x_j)``."""
    X = np.atleast_2d(X)
    out = np.sin(2 * np.pi * X[:, 0])
    for j in range(1, X.shape[1]):
        out = out * np.cos(2 * np.pi * X[:, j])
    return out


def make_bench_data(n: int, s: int, d: int, seed: int):
    """Uniform design on the unit cube with Gaussian noise; returns ``(ts, Z)``."""
    rng = np.random.default_rng([seed, n, s, d])
    X = rng.uniform(size=(n, d))
    y = bench_function(X) + NOISE_SD * rng.standard_normal(n)
    Z = rng.uniform(size=(s, d))
    return TrainingSet(X, y), Z


def parse_bandwidth_rule(rule: str):
    """Map a rule name to a function of ``n``; ``fixed:<v>`` gives a constant."""
    if rule.startswith("fixed:"):
        v = float(rule.split(":", 1)[1])
        if not v > 0:
            raise ValueError(f"bandwidth must be positive, got {v}")
        return lambda n: v
    if rule not in BANDWIDTH_RULES:
        raise ValueError(f"unknown bandwidth rule {rule!r}")
    p = int(rule[-1])
    return lambda n: float(n) ** (-1.0 / p)


@dataclass
class BenchRow:
    engine: str
    n: int
    s: int
    d: int
    k: int
    h: float
    build_secs: float
    query_secs: float
    total_secs: float
    peak_entry_count: int
    mse: float

    def as_tuple(self):
        return tuple(getattr(self, c) for c in COLUMNS)


def time_engine(engine: str, ts: TrainingSet, Z: np.ndarray, k: int, h: float):
    """Run one engine once; returns ``(build_secs, query_secs, entry_count, estimates)``."""
    spec = make_basis_spec(ts.d, k)
    if engine == "fast":
        t0 = time.perf_counter()
        model = build(ts, spec)
        t1 = time.perf_counter()
        theta, _, degenerate = fit_many(model, Z, h)
        t2 = time.perf_counter()
        entries = model.grid.entry_count
    elif engine == "naive":
        t1 = t0 = time.perf_counter()
        theta, _, degenerate = naive_fit_many(ts, spec, Z, h)
        t2 = time.perf_counter()
        entries = 0
    else:
        raise ValueError(f"unknown engine {engine!r}")
    est = np.where(degenerate, np.nan, theta[:, 0])
    return t1 - t0, t2 - t1, entries, est


def warm_up(engines, d: int, k: int) -> None:
    """Trigger JIT compilation so it is not charged to the first timed run."""
    ts, Z = make_bench_data(64, 8, d, 0)
    for e in engines:
        time_engine(e, ts, Z, k, 0.5)


def run_bench(d: int, k: int, n_list, s_list, rule: str = "n^-1/3", engines=ENGINES,
              seed: int = 0, naive_max_cells: int | None = None, repeats: int = 1):
    """Yield one :class:`BenchRow` per engine and ``(n, s)`` cell, best of ``repeats``."""
    bandwidth = parse_bandwidth_rule(rule)
    warm_up(engines, d, k)
    for n in n_list:
        for s in s_list:
            ts, Z = make_bench_data(n, s, d, seed)
            h = bandwidth(n)
            truth = bench_function(Z)
            for engine in engines:
                if engine == "naive" and naive_max_cells is not None and n * s > naive_max_cells:
                    log.info("skipping naive engine at n=%d s=%d", n, s)
                    continue
                best = None
                for _ in range(repeats):
                    b, q, entries, est = time_engine(engine, ts, Z, k, h)
                    if best is None or b + q < best[0] + best[1]:
                        best = (b, q, entries, est)
                b, q, entries, est = best
                ok = np.isfinite(est)
                mse = float(np.mean((est[ok] - truth[ok]) ** 2)) if ok.any() else float("nan")
                yield BenchRow(engine, n, s, d, k, h, b, q, b + q, entries, mse)
