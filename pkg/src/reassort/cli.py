"""Command-line entry points.

Subcommands:

* ``run --config exp.json``: sweep (scenario, kappa) cells of the
  benchmark family; per cell solve the LP, prepare the requested
  policies, run the Monte-Carlo batch, and write runs.csv plus
  summary.csv (the LP objective appears as policy "Expected-LP").
* ``curve --min 0 --max 100 --step 1``: CSV of the guarantee curve,
  rows (c, 1 - eps*(c), max(0.5, 1 - eps*(c))), to stdout.
* ``validate path.json``: load an instance file and print one PASS or
  FAIL line per model invariant.
* ``canonical``: solve the two closed-form fixtures with both LP
  solvers and assert their known optima.

The output directory is taken from REASSORT_OUTPUT_DIR when set,
falling back to the config's output_dir, then the working directory.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from pathlib import Path

from . import bench, model
from .dp import build_tables, epsilon_star
from .lp import full_enumeration_lp, solve_expected_lp
from .policies import prepare
from .sim import monte_carlo

RUN_COLUMNS = ("scenario", "kappa", "policy", "run_id", "revenue")
SUMMARY_COLUMNS = ("scenario", "kappa", "policy", "mean", "se", "median", "q1", "q3", "min", "max")


def _output_dir(config: dict) -> Path:
    out = os.environ.get("REASSORT_OUTPUT_DIR") or config.get("output_dir") or "."
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def run_experiment(config: dict) -> Path:
    """Execute one config; returns the directory the CSVs landed in."""
    for key in ("scenario", "kappas", "policies", "seeds"):
        if key not in config:
            raise KeyError(f"config missing required key {key!r}")
    scenario = config["scenario"]
    kappas = config["kappas"]
    n_runs = int(config.get("n_runs", 50))
    seeds = config["seeds"]
    hybrid = {"switch_period": 10, "mc_iters": 20}
    hybrid.update(config.get("hybrid", {}))
    base_cfg = dict(hybrid)
    if "gamma" in config:
        base_cfg["gamma"] = config["gamma"]

    out = _output_dir(config)
    run_rows = []
    summary_rows = []
    for kappa in kappas:
        instance = bench.gen_ec8(
            kappa, scenario, seeds["instance"], T=config.get("T", 300), c=config.get("c")
        )
        lp = solve_expected_lp(instance)
        tables = build_tables(instance, lp)
        print(f"[{scenario} kappa={kappa}] LP objective {lp.objective:.4f}")
        obj = lp.objective
        summary_rows.append((scenario, kappa, "Expected-LP", obj, 0.0, obj, obj, obj, obj, obj))
        for spec_entry in config["policies"]:
            kind = spec_entry["kind"]
            cfg = dict(base_cfg)
            cfg.update(spec_entry.get("params", {}))
            policy = prepare(kind, instance, lp, tables, cfg)
            stats = monte_carlo(instance, policy, n_runs, seeds["mc"])
            print(f"  {kind}: mean {stats.mean:.4f} (se {stats.se:.4f})")
            for run_id, rev in enumerate(stats.revenues):
                run_rows.append((scenario, kappa, kind, run_id, float(rev)))
            summary_rows.append(
                (scenario, kappa, kind, stats.mean, stats.se, stats.median,
                 stats.q1, stats.q3, stats.min, stats.max)
            )

    with open(out / "runs.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(RUN_COLUMNS)
        w.writerows(run_rows)
    with open(out / "summary.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SUMMARY_COLUMNS)
        w.writerows(summary_rows)
    print(f"wrote {out / 'runs.csv'} and {out / 'summary.csv'}")
    return out


def emit_ratio_curve(c_min: float, c_max: float, step: float, fh=None) -> None:
    """CSV rows (c, coin-rule ratio, best-of-both ratio) on [c_min, c_max]."""
    if step <= 0:
        raise ValueError("step must be positive")
    fh = fh or sys.stdout
    w = csv.writer(fh)
    w.writerow(("c", "coin_discard_ratio", "best_ratio"))
    count = int(math.floor((c_max - c_min) / step + 1e-9)) + 1
    for k in range(count):
        c = c_min + k * step
        eps, _gamma = epsilon_star(c)
        w.writerow((c, 1.0 - eps, max(0.5, 1.0 - eps)))


def validate_instance(path: str) -> bool:
    """Run every model invariant on a JSON instance; True iff all pass."""
    results = []

    def check(name, fn):
        try:
            fn()
            results.append((name, None))
        except Exception as exc:
            results.append((name, f"{type(exc).__name__}: {exc}"))

    doc = None
    try:
        with open(path) as handle:
            doc = json.load(handle)
        results.append(("json parses", None))
    except json.JSONDecodeError as exc:
        results.append(("json parses", f"line {exc.lineno} column {exc.colno}: {exc.msg}"))
    except OSError as exc:
        results.append(("json parses", str(exc)))

    if doc is not None:
        def schema():
            missing = [k for k in ("n", "T", "c", "types", "arrival") if k not in doc]
            if missing:
                raise ValueError(f"missing keys {missing}")

        def arrival_rows():
            for t, row in enumerate(doc["arrival"], start=1):
                total = sum(row)
                if abs(total - 1.0) > 1e-12:
                    raise ValueError(f"row {t} sums to {total}")
                if any(p < 0 for p in row):
                    raise ValueError(f"row {t} has a negative probability")

        def fees():
            for td in doc["types"]:
                if any(f < 0 for f in td["fees"]):
                    raise ValueError(f"type {td['id']} has a negative fee")

        def durations():
            for td in doc["types"]:
                for pairs in td["durations"]:
                    model.DurationDist(
                        [(model.INFINITE if d == "inf" else int(d), float(p)) for d, p in pairs]
                    )

        def choice_models():
            for td in doc["types"]:
                if "table" in td:
                    model.ExplicitTable(
                        int(doc["n"]),
                        {frozenset(S): {int(i): float(p) for i, p in row.items()}
                         for S, row in td["table"]},
                    )
                else:
                    model.MNL(float(td["alpha0"]), td["alpha"])

        check("required keys present", schema)
        check("arrival rows normalized", arrival_rows)
        check("fees non-negative", fees)
        check("duration pmfs valid", durations)
        check("choice model substitutable", choice_models)
        check("instance constructs", lambda: model.instance_from_json(doc))

    ok = True
    for name, err in results:
        if err is None:
            print(f"PASS {name}")
        else:
            print(f"FAIL {name}: {err}")
            ok = False
    return ok


def run_canonical() -> bool:
    """Solve the closed-form fixtures and assert their optima."""
    checks = []

    inst = bench.gen_footnote9(0.5)
    checks.append(("two-period fixture, generated LP = 1.5",
                   abs(solve_expected_lp(inst).objective - 1.5) <= 1e-6))
    checks.append(("two-period fixture, enumerated LP = 1.5",
                   abs(full_enumeration_lp(inst).objective - 1.5) <= 1e-6))
    inst = bench.gen_footnote9(1.0)
    checks.append(("degenerate two-period fixture, LP = 1.0",
                   abs(solve_expected_lp(inst).objective - 1.0) <= 1e-6))

    want = bench.ec21_lp_value(20)
    inst = bench.gen_ec21(20)
    checks.append((f"unit-rental fixture T=20, generated LP = {want:.6f}",
                   abs(solve_expected_lp(inst).objective - want) <= 1e-6))
    checks.append((f"unit-rental fixture T=20, enumerated LP = {want:.6f}",
                   abs(full_enumeration_lp(inst).objective - want) <= 1e-6))
    checks.append(("unit-rental fixture T=1, LP = 1.0",
                   abs(solve_expected_lp(bench.gen_ec21(1)).objective - 1.0) <= 1e-6))
    checks.append(("unit-rental fixture T=50, LP < 2",
                   solve_expected_lp(bench.gen_ec21(50)).objective < 2.0))

    ok = True
    for name, passed in checks:
        print(f"{'PASS' if passed else 'FAIL'} {name}")
        ok = ok and passed
    return ok


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="reassort")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute an experiment config")
    p_run.add_argument("--config", required=True, help="path to the JSON config")

    p_curve = sub.add_parser("curve", help="emit the guarantee-curve CSV")
    p_curve.add_argument("--min", type=float, default=0.0)
    p_curve.add_argument("--max", type=float, default=100.0)
    p_curve.add_argument("--step", type=float, default=1.0)

    p_val = sub.add_parser("validate", help="check a JSON instance file")
    p_val.add_argument("path")

    sub.add_parser("canonical", help="run the closed-form fixture suite")

    args = parser.parse_args(argv)
    if args.command == "run":
        try:
            with open(args.config) as fh:
                config = json.load(fh)
            run_experiment(config)
        except (KeyError, ValueError, OSError, json.JSONDecodeError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
        return 0
    if args.command == "curve":
        emit_ratio_curve(args.min, args.max, args.step)
        return 0
    if args.command == "validate":
        return 0 if validate_instance(args.path) else 1
    if args.command == "canonical":
        return 0 if run_canonical() else 1
    return 2


if __name__ == "__main__":
    sys.exit(main())
