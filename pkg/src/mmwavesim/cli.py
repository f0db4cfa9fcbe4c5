"""Command-line front end: scenario sweeps, config validation, oracles.

    mmwavesim run --config exp.cfg --out results/ [--jobs N] [--seed S]
    mmwavesim validate --config exp.cfg
    mmwavesim oracle mc-distance --center X Y --radius R --point X Y

Exit codes: 0 success, 1 configuration error, 2 runtime failure.
`run` writes, per sweep cell, a per-TTI report CSV and a summary CSV,
plus one combined `sweep_summary.csv`; all writes are atomic so
parallel cells never interleave file contents.
"""

from __future__ import annotations

import argparse
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace

from .config import SweepSpec, emit_config, parse_config
from .engine import (
    SUMMARY_METRICS,
    run_scenario,
    write_per_tti_csv,
    write_summary_csv,
)
from .errors import ConfigError
from .geometry import Point2D, UncertainPoint, UniformDisk, expected_sq_distance, mc_expected_sq_distance
from .seeding import make_rng


def _atomic_write(path: str, text: str) -> None:
    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(path) or ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _cell_paths(out_dir: str, scenario_name: str, variable: str, value_index: int):
    stem = f"{scenario_name}_{variable}_{value_index}"
    return (
        os.path.join(out_dir, f"report_{stem}.csv"),
        os.path.join(out_dir, f"summary_{stem}.csv"),
    )


def _run_cell(args):
    """Worker for one (scenario, sweep value) cell; returns summary rows."""
    cfg, variable, value, value_index, out_dir = args
    report = run_scenario(cfg)
    report_path, summary_path = _cell_paths(out_dir, cfg.scenario.value, variable, value_index)
    tmp_report = report_path + ".part"
    write_per_tti_csv(report, tmp_report)
    os.replace(tmp_report, report_path)
    tmp_summary = summary_path + ".part"
    write_summary_csv(report, tmp_summary)
    os.replace(tmp_summary, summary_path)
    rows = []
    for metric in SUMMARY_METRICS:
        mean, hw = report.aggregate[metric]
        rows.append(
            f"{variable},{_fmt(value)},{cfg.scenario.value},{metric},{_fmt(mean)},{_fmt(hw)}"
        )
    return rows


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def run_sweep(spec: SweepSpec, out_dir: str, jobs: int = 1) -> int:
    """Run every sweep cell and write the CSV outputs.

    Returns the process exit code: 0 if every cell completed, 2 if any
    failed (completed cells are still written).
    """
    os.makedirs(out_dir, exist_ok=True)
    cells = []
    for value_index, value in enumerate(spec.values):
        for cfg in spec.base:
            cells.append(
                (replace(cfg, **{spec.variable: value}), spec.variable, value, value_index, out_dir)
            )

    results = [None] * len(cells)
    failures = []
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = {i: pool.submit(_run_cell, cell) for i, cell in enumerate(cells)}
            for i, fut in futures.items():
                try:
                    results[i] = fut.result()
                except Exception as exc:  # noqa: BLE001 - cell isolation
                    failures.append((cells[i], exc))
    else:
        for i, cell in enumerate(cells):
            try:
                results[i] = _run_cell(cell)
            except Exception as exc:  # noqa: BLE001 - cell isolation
                failures.append((cell, exc))

    lines = ["sweep_variable,value,scenario,metric,mean,ci95_halfwidth"]
    for rows in results:
        if rows is not None:
            lines.extend(rows)
    _atomic_write(os.path.join(out_dir, "sweep_summary.csv"), "\n".join(lines) + "\n")

    if failures:
        for (cfg, _, value, _, _), exc in failures:
            print(
                f"cell failed: scenario={cfg.scenario.value} {spec.variable}={value}: {exc}",
                file=sys.stderr,
            )
        return 2
    return 0


def _cmd_run(args) -> int:
    try:
        spec = parse_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    if args.seed is not None:
        spec = SweepSpec(
            variable=spec.variable,
            values=spec.values,
            base=tuple(replace(cfg, master_seed=args.seed) for cfg in spec.base),
        )
    return run_sweep(spec, args.out, jobs=args.jobs)


def _cmd_validate(args) -> int:
    try:
        spec = parse_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    sys.stdout.write(emit_config(spec))
    return 0


def _cmd_oracle_mc_distance(args) -> int:
    point = UncertainPoint(
        pdf=UniformDisk(Point2D(args.center[0], args.center[1]), args.radius)
    )
    target = Point2D(args.point[0], args.point[1])
    closed = expected_sq_distance(point, target)
    estimate = mc_expected_sq_distance(point, target, args.samples, make_rng(args.seed))
    rel = abs(closed - estimate) / closed if closed else abs(estimate)
    print(f"closed_form = {closed!r}")
    print(f"monte_carlo = {estimate!r}  (n={args.samples}, seed={args.seed})")
    print(f"relative_difference = {rel!r}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mmwavesim", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run the configured scenario sweep")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--out", required=True)
    p_run.add_argument("--jobs", type=int, default=1)
    p_run.add_argument("--seed", type=int, default=None, help="override master_seed")
    p_run.set_defaults(func=_cmd_run)

    p_val = sub.add_parser("validate", help="check a config and print the effective values")
    p_val.add_argument("--config", required=True)
    p_val.set_defaults(func=_cmd_validate)

    p_oracle = sub.add_parser("oracle", help="independent numeric spot checks")
    oracle_sub = p_oracle.add_subparsers(dest="oracle_command", required=True)
    p_mc = oracle_sub.add_parser(
        "mc-distance", help="Monte Carlo vs closed-form expected squared distance"
    )
    p_mc.add_argument("--center", nargs=2, type=float, required=True, metavar=("X", "Y"))
    p_mc.add_argument("--radius", type=float, required=True)
    p_mc.add_argument("--point", nargs=2, type=float, required=True, metavar=("X", "Y"))
    p_mc.add_argument("--samples", type=int, default=1_000_000)
    p_mc.add_argument("--seed", type=int, default=0)
    p_mc.set_defaults(func=_cmd_oracle_mc_distance)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
