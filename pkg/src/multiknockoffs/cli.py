"""Command-line interface: ``simulate``, ``select`` and ``check-assumption``.

Exit status is 0 on success, 2 for configuration or validation errors and
3 for numerical failures.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
from dataclasses import asdict, replace
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .config import load_config
from .diagnostics import check_assumption
from .engines import lasso_statistics, marginal_statistics
from .errors import DimensionMismatch, NonNumericCell, NumericalError, ValidationError
from .gaussian import equicorrelated_s, estimate_covariance, normalize_covariance, prepare_factors, sample_knockoffs
from .harness import MonteCarloReport, run_scenario
from .selection import build_w, threshold_scan

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERIC = 0, 2, 3


def fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    return obj


def write_manifest(out_dir: Path, command: str, args, extra: dict) -> None:
    record = {
        "command": command,
        "config_path": getattr(args, "config", None),
        "output_dir": str(out_dir),
        "seed_override": args.seed,
        "version": __version__,
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }
    record.update(extra)
    with open(out_dir / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(_jsonable(record), fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_numeric_csv(path, header="auto"):
    """Parse a numeric CSV; returns ``(names or None, 2-d array)``.

    With ``header="auto"`` the first row is a header when any of its cells
    is non-numeric.  Rows and columns in error messages are 1-based file
    positions.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if not rows:
        raise ValidationError(f"{path}: empty file")

    def numeric(cell):
        try:
            float(cell)
            return True
        except ValueError:
            return False

    names, start = None, 0
    if header is True or (header == "auto" and not all(numeric(c) for c in rows[0])):
        names, start = [c.strip() for c in rows[0]], 1
    width = len(rows[start]) if start < len(rows) else 0
    data = np.empty((len(rows) - start, width))
    for i, row in enumerate(rows[start:], start=start + 1):
        if len(row) != width:
            raise DimensionMismatch(f"{path}: row {i} has {len(row)} cells, expected {width}")
        for j, cell in enumerate(row, start=1):
            try:
                data[i - start - 1, j - 1] = float(cell)
            except ValueError:
                raise NonNumericCell(path, i, j, cell) from None
    if names is not None and len(names) != width:
        raise DimensionMismatch(f"{path}: header has {len(names)} names but rows have {width} cells")
    return names, data


def _scenario_overrides(scenario, args):
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.k is not None:
        changes["k"] = tuple(args.k)
    if args.q is not None:
        changes["q"] = args.q
    if args.engine is not None:
        changes["engine"] = args.engine
    if args.plus_one:
        changes["plus_one"] = True
    return replace(scenario, **changes) if changes else scenario


def cmd_simulate(args) -> int:
    loaded = load_config(args.config)
    scenario = _scenario_overrides(loaded.scenario, args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    report = run_scenario(scenario, threads=args.threads)
    write_report(report, out)
    write_manifest(out, "simulate", args, {
        "config_source": loaded.source,
        "config_hash": loaded.digest,
        "seed": scenario.seed,
        "scenario": asdict(scenario),
    })
    return EXIT_OK


def write_report(report: MonteCarloReport, out: Path) -> None:
    cols = MonteCarloReport.PER_REPLICATE_COLUMNS
    write_csv(out / "replicates.csv", cols, ([r[c] for c in cols] for r in report.per_replicate))
    cols = MonteCarloReport.AGGREGATE_COLUMNS
    write_csv(out / "aggregate.csv", cols, ([r[c] for c in cols] for r in report.aggregate))
    write_csv(out / "power_vs_k.csv", ("k", "mean_power", "se_power"),
              ([r["k"], r["mean_power"], r["se_power"]] for r in report.aggregate))


def cmd_check_assumption(args) -> int:
    loaded = load_config(args.config)
    scenario = _scenario_overrides(loaded.scenario, args)
    n_reps = args.n_reps if args.n_reps is not None else loaded.extras.get("n_reps", scenario.replicates)
    t_grid = loaded.extras.get("t_grid")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    summary, per_column, grid_rows = [], [], []
    for k in scenario.k:
        rep = check_assumption(scenario, n_reps, k=k, t_grid=t_grid, threads=args.threads)
        i_min = int(np.argmin(rep.rhs_per_i))
        summary.append([k, rep.n_reps, rep.lhs, rep.se_lhs, rep.min_rhs, rep.se_rhs[i_min],
                        rep.se_diff[i_min], rep.worst_u_gap, rep.grid.passed,
                        "PASS" if rep.passed else "FAIL"])
        for i, (r, se, sd) in enumerate(zip(rep.rhs_per_i, rep.se_rhs, rep.se_diff), start=2):
            per_column.append([k, i, r, se, sd])
        grid_rows.extend([k, *row] for row in rep.t_grid_table)

    write_csv(out / "assumption.csv",
              ("k", "n_reps", "lhs", "se_lhs", "min_rhs", "se_rhs", "se_diff", "worst_u_gap",
               "grid_diagonal_ok", "status"), summary)
    write_csv(out / "assumption_rhs.csv", ("k", "i", "rhs", "se_rhs", "se_diff"), per_column)
    write_csv(out / "assumption_grid.csv", ("k", "t", "s", "v", "estimate", "se"), grid_rows)
    write_manifest(out, "check-assumption", args, {
        "config_source": loaded.source,
        "config_hash": loaded.digest,
        "seed": scenario.seed,
        "n_reps": n_reps,
        "scenario": asdict(scenario),
    })
    return EXIT_OK


def _file_digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def cmd_select(args) -> int:
    names, X = read_numeric_csv(args.X, header=True)
    n, p = X.shape
    if names is None:
        names = [f"x{j + 1}" for j in range(p)]
    _, y = read_numeric_csv(args.y)
    if y.ndim != 2 or y.shape[1] != 1:
        raise DimensionMismatch("y must be a single column")
    y = y[:, 0]
    if y.shape[0] != n:
        raise DimensionMismatch(f"X has {n} rows but y has {y.shape[0]}")

    if args.sigma == "estimate":
        print("warning: estimating the covariate covariance from the data; FDR control "
              "assumes the covariate distribution is known", file=sys.stderr)
        raw = estimate_covariance(X)
    else:
        _, raw = read_numeric_csv(args.sigma)
        if raw.shape != (p, p):
            raise DimensionMismatch(f"sigma must be {p} x {p}, got {raw.shape}")
    model = normalize_covariance(raw)
    model = model.with_s(equicorrelated_s(model))
    Xs = (X - X.mean(axis=0)) / model.scale

    k = args.k[0] if args.k else 3
    if args.k and len(args.k) > 1:
        raise ValidationError("select takes a single --k")
    q = 0.1 if args.q is None else args.q
    seed = 0 if args.seed is None else args.seed
    engine = args.engine or "lasso"
    factors = prepare_factors(model, k)
    kos = sample_knockoffs(Xs, factors, seed)
    if engine == "lasso":
        lam = args.lam if args.lam in ("auto", "cv") else float(args.lam)
        tensor = lasso_statistics(Xs, kos, y, lam=lam, k=k)
    elif engine == "marginal":
        tensor = marginal_statistics(Xs, kos, y, k=k)
    else:
        raise ValidationError("select supports the lasso and marginal engines")
    w = build_w(tensor)
    result = threshold_scan(w, q, plus_one=args.plus_one)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(out / "selection.csv", ("feature", "w1", "selected"),
              ([names[j], w.w[j, 0], j in result.selected] for j in range(p)))
    write_csv(out / "summary.csv", ("threshold", "fdp_estimate", "q", "k", "seed"),
              [[result.threshold, result.fdp_estimate, q, k, seed]])
    write_manifest(out, "select", args, {
        "inputs": {"X": _file_digest(args.X), "y": _file_digest(args.y),
                   "sigma": "estimate" if args.sigma == "estimate" else _file_digest(args.sigma)},
        "seed": seed, "k": k, "q": q, "engine": engine, "plus_one": args.plus_one,
    })
    return EXIT_OK


def _common(sub):
    sub.add_argument("--out", required=True, help="output directory")
    sub.add_argument("--seed", type=int, default=None)
    sub.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    sub.add_argument("--k", type=lambda s: [int(v) for v in s.split(",")], default=None,
                     help="multiplicity, or a comma-separated sweep")
    sub.add_argument("--q", type=float, default=None, help="target FDR level")
    sub.add_argument("--engine", choices=("direct", "lasso", "marginal"), default=None)
    sub.add_argument("--plus-one", action="store_true",
                     help="add one to the knockoff count in the threshold rule (not the default rule)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="multiknockoffs", description="FDR-controlled variable selection with multiple knockoff copies.")
    parser.add_argument("--version", action="version", version=__version__)
    subs = parser.add_subparsers(dest="command", required=True)

    sim = subs.add_parser("simulate", help="run a Monte Carlo scenario")
    sim.add_argument("--config", required=True, help="config file or bundled name (e.g. test1)")
    _common(sim)
    sim.set_defaults(func=cmd_simulate)

    sel = subs.add_parser("select", help="select variables from data")
    sel.add_argument("--X", required=True, help="n x p CSV with a header of feature names")
    sel.add_argument("--y", required=True, help="single-column response CSV")
    sel.add_argument("--sigma", required=True, help="p x p covariance CSV, or 'estimate'")
    sel.add_argument("--lam", default="auto", help="Lasso penalty: a number, 'auto' or 'cv'")
    _common(sel)
    sel.set_defaults(func=cmd_select)

    chk = subs.add_parser("check-assumption", help="estimate both sides of the exchangeability premise")
    chk.add_argument("--config", required=True)
    chk.add_argument("--n-reps", type=int, default=None)
    _common(chk)
    chk.set_defaults(func=cmd_check_assumption)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValidationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
