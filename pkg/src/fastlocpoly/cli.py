"""Command-line front end.

    fastlocpoly fit --train train.csv --test test.csv --degree 1 --bandwidth 0.1 --out fit.csv
    fastlocpoly bench --d 1 --k 1 --n-list 16000,32000 --s-list 16000 --out bench.csv

Exit codes: 0 success, 2 usage or data error, 1 internal error.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys

import numpy as np

from . import bench
from .estimator import DENSITY, REGRESSION, build, density_coefficient, density_scale, fit_many
from .model import ConfigurationError, ContractError, TrainingSet, make_basis_spec
from .oracle import naive_cdf, naive_fit_many

log = logging.getLogger("fastlocpoly")

SIG_DIGITS = 12


class DataError(Exception):
    """Bad input file or incompatible arguments (exit code 2)."""


def read_table(path: str, extra: str):
    """Read an ``x1..xd[,<extra>]`` CSV; returns ``(X, extra_column or None)``."""
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as e:
        raise DataError(f"{path}: {e.strerror}") from None
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise DataError(f"{path}:1: missing header row")
        header = [c.strip() for c in header]
        d = 0
        while d < len(header) and header[d] == f"x{d + 1}":
            d += 1
        rest = header[d:]
        if d == 0 or rest not in ([], [extra]):
            raise DataError(
                f"{path}:1: expected header x1,...,xd[,{extra}], got {','.join(header)}"
            )
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise DataError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            try:
                vals = [float(c) for c in row]
            except ValueError:
                raise DataError(f"{path}:{lineno}: non-numeric field in {row!r}") from None
            if not all(np.isfinite(vals)):
                raise DataError(f"{path}:{lineno}: non-finite value")
            rows.append(vals)
    if not rows:
        raise DataError(f"{path}: no data rows")
    table = np.array(rows)
    return table[:, :d], (table[:, d] if rest else None)


def format_value(v: float) -> str:
    return "" if not np.isfinite(v) else f"{v:.{SIG_DIGITS}g}"


def cmd_fit(args) -> int:
    X, y = read_table(args.train, "y")
    Z, H = read_table(args.test, "h")
    d = X.shape[1]
    if Z.shape[1] != d:
        raise DataError(f"training data has {d} dimensions, test data has {Z.shape[1]}")
    if H is None:
        if args.bandwidth is None:
            raise DataError("no --bandwidth given and the test file has no h column")
        H = np.full(Z.shape[0], args.bandwidth)
    if not np.all(H > 0):
        raise DataError("bandwidths must be positive")
    if args.mode == REGRESSION and y is None:
        raise DataError(f"{args.train}: regression needs a y column")
    if args.mode == DENSITY and args.degree < d:
        raise DataError(f"density estimation needs --degree >= {d}")
    reserve = None
    if args.reserve:
        reserve, _ = read_table(args.reserve, "y")
        if reserve.shape[1] != d:
            raise DataError(f"{args.reserve}: expected {d} coordinate columns")

    spec = make_basis_spec(d, args.degree)
    ts = TrainingSet(X, y if args.mode == REGRESSION else None)
    if args.engine == "fast":
        model = build(ts, spec, args.mode, reserve=reserve, recenter=not args.no_recenter,
                      density_factor=args.density_factor)
        theta, counts, degenerate = fit_many(model, Z, H)
    else:
        responses = naive_cdf(ts) if args.mode == DENSITY else None
        theta, counts, degenerate = naive_fit_many(ts, spec, Z, H, responses)
    if args.mode == DENSITY:
        est = density_scale(d, args.density_factor) * theta[:, density_coefficient(spec)]
    else:
        est = theta[:, 0].copy()
    est[degenerate] = np.nan

    out = open(args.out, "w", newline="", encoding="utf-8") if args.out != "-" else sys.stdout
    try:
        w = csv.writer(out, lineterminator="\n")
        w.writerow([f"x{j + 1}" for j in range(d)] + ["estimate", "window_count", "degenerate"])
        for i in range(Z.shape[0]):
            w.writerow([repr(float(v)) for v in Z[i]]
                       + [format_value(est[i]), int(counts[i]), int(degenerate[i])])
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def _int_list(text: str):
    try:
        vals = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise DataError(f"expected comma-separated integers, got {text!r}") from None
    if not vals or min(vals) < 1:
        raise DataError(f"expected positive integers, got {text!r}")
    return vals


def cmd_bench(args) -> int:
    n_list = _int_list(args.n_list)
    s_list = _int_list(args.s_list)
    engines = [e.strip() for e in args.engines.split(",") if e.strip()]
    if not engines or any(e not in bench.ENGINES for e in engines):
        raise DataError(f"engines must be drawn from {','.join(bench.ENGINES)}")
    if args.d < 1 or args.k < 0:
        raise DataError("need --d >= 1 and --k >= 0")
    try:
        bench.parse_bandwidth_rule(args.bandwidth_rule)
    except ValueError as e:
        raise DataError(str(e)) from None

    out = open(args.out, "w", newline="", encoding="utf-8") if args.out != "-" else sys.stdout
    try:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(bench.COLUMNS)
        for row in bench.run_bench(args.d, args.k, n_list, s_list, args.bandwidth_rule,
                                   engines, args.seed, args.naive_max_cells, args.repeats):
            w.writerow([format_value(v) if isinstance(v, float) else v for v in row.as_tuple()])
            out.flush()
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fastlocpoly",
                                description="Local polynomial regression and density estimation "
                                            "with box kernels in near-linear time.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    f = sub.add_parser("fit", help="fit a training CSV and evaluate at test points",
                       description="Training CSV columns: x1..xd[,y]. Test CSV columns: "
                                   "x1..xd[,h]. Output: x1..xd,estimate,window_count,degenerate; "
                                   "degenerate windows leave the estimate empty.")
    f.add_argument("--train", required=True)
    f.add_argument("--test", required=True)
    f.add_argument("--degree", "-k", type=int, required=True)
    f.add_argument("--bandwidth", type=float, help="global box side length (overridden by an h column)")
    f.add_argument("--mode", choices=(REGRESSION, DENSITY), default=REGRESSION)
    f.add_argument("--out", default="-")
    f.add_argument("--engine", choices=bench.ENGINES, default="fast")
    f.add_argument("--no-recenter", action="store_true",
                   help="do not translate coordinates by their mean before accumulating moments")
    f.add_argument("--density-factor", choices=("taylor", "paper"), default="taylor",
                   help="scale of the mixed coefficient: 1 (taylor) or d! (paper)")
    f.add_argument("--reserve", help="CSV of extra coordinates (x1..xd) to add to the rank space")
    f.set_defaults(func=cmd_fit)

    b = sub.add_parser("bench", help="time fast and naive engines on synthetic data",
                       description="Data: X uniform on [0,1]^d, y = sin(2 pi x1) * "
                                   "prod_{j>=2} cos(2 pi xj) + N(0, 0.1^2); test points uniform. "
                                   "The mse column compares estimates with the noiseless function.")
    b.add_argument("--d", type=int, default=1)
    b.add_argument("--k", type=int, default=0)
    b.add_argument("--n-list", default="4000,16000")
    b.add_argument("--s-list", default="4000")
    b.add_argument("--bandwidth-rule", default="n^-1/3",
                   help="n^-1/3, n^-1/4, n^-1/5 or fixed:<value>")
    b.add_argument("--engines", default="fast,naive")
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--naive-max-cells", type=int, default=None,
                   help="skip the naive engine when n * s exceeds this")
    b.add_argument("--repeats", type=int, default=1, help="report the fastest of this many runs")
    b.add_argument("--out", default="-")
    b.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 2 if e.code else 0
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    try:
        return args.func(args)
    except (DataError, ConfigurationError, ContractError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except Exception:
        log.exception("internal error")
        return 1


if __name__ == "__main__":
    sys.exit(main())
