"""Command-line harness: ``boggn run|compare|ratio-demo|list-benchmarks``.

Exit codes: 0 success, 1 configuration or input error, 2 runtime failure.
The ``BOGGN_OUTPUT_DIR`` environment variable overrides ``output_dir`` from
the config file (``--output-dir`` overrides both).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .blackbox import BENCHMARKS, get_benchmark
from .config import ConfigError, RunConfig, parse_config
from .optimizer import RunAborted, run
from .ratio import ratio_demo_table
from .results import (
    COMPARE_COLUMNS,
    RATIO_COLUMNS,
    SUMMARY_COLUMNS,
    TIMING_COLUMNS,
    aggregate_regret,
    atomic_write_text,
    csv_text,
    read_jsonl,
    records_to_jsonl,
    write_csv,
)

log = logging.getLogger("boggn")

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2
OUTPUT_DIR_ENV = "BOGGN_OUTPUT_DIR"


def run_path(output_dir, seed) -> Path:
    return Path(output_dir) / f"run_{seed:04d}.jsonl"


def _run_one(config: RunConfig, seed: int):
    bench = get_benchmark(config.benchmark, config.noise_sigma)
    try:
        records = run(bench, config.strategy, config.budget, config.n_init, seed)
        error = None
    except RunAborted as exc:
        records, error = exc.records, str(exc)
    atomic_write_text(run_path(config.output_dir, seed), records_to_jsonl(records))
    wall = sum(r.wall_time for r in records)
    if error is not None:
        return seed, None, wall, error
    final = records[-1]
    row = (seed, config.strategy.kind, config.benchmark, final.regret, final.best_so_far)
    return seed, row, wall, None


def cmd_run(config: RunConfig) -> int:
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    atomic_write_text(out / "config.ini", config.source_text)
    meta = {
        "benchmark": config.benchmark,
        "strategy": config.strategy.kind,
        "budget": config.budget,
        "n_init": config.n_init,
        "seeds": config.seeds,
        "known_minimum_value": get_benchmark(config.benchmark).known_minimum_value,
    }
    atomic_write_text(out / "meta.json", json.dumps(meta, indent=2) + "\n")
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            results = list(pool.map(_run_one, [config] * len(config.seeds), config.seeds))
    else:
        results = [_run_one(config, seed) for seed in config.seeds]
    results.sort(key=lambda r: r[0])
    failures = [(seed, err) for seed, _, _, err in results if err is not None]
    write_csv(out / "summary.csv", SUMMARY_COLUMNS, [row for _, row, _, _ in results if row])
    write_csv(out / "timings.csv", TIMING_COLUMNS, [(seed, wall) for seed, _, wall, _ in results])
    for seed, err in failures:
        log.error("seed %d aborted: %s", seed, err)
    return EXIT_RUNTIME if failures else EXIT_OK


def load_run_dir(path) -> tuple:
    """``(meta, regret_sequences)`` for a directory written by ``cmd_run``."""
    path = Path(path)
    meta = json.loads((path / "meta.json").read_text())
    runs = []
    for seed in meta["seeds"]:
        f = run_path(path, seed)
        if f.exists():
            runs.append([rec["regret"] for rec in read_jsonl(f)])
    runs = [r for r in runs if r]
    if not runs:
        raise ValueError(f"{path} holds no completed runs")
    return meta, runs


def compare_rows(run_dirs) -> list:
    by_strategy = {}
    benchmarks = set()
    for d in run_dirs:
        meta, runs = load_run_dir(d)
        benchmarks.add(meta["benchmark"])
        by_strategy.setdefault(meta["strategy"], []).extend(runs)
    if len(benchmarks) > 1:
        raise ValueError(f"run directories mix benchmarks: {sorted(benchmarks)}")
    return aggregate_regret(by_strategy)


def cmd_compare(run_dirs, output=None) -> int:
    rows = compare_rows(run_dirs)
    if output is None:
        sys.stdout.write(csv_text(COMPARE_COLUMNS, rows))
    else:
        write_csv(output, COMPARE_COLUMNS, rows)
    return EXIT_OK


def cmd_ratio_demo(gamma: float, n_samples: int, seed: int, output=None) -> int:
    table = ratio_demo_table(gamma, n_samples, seed)
    rows = zip(*(table[c] for c in RATIO_COLUMNS))
    if output is None:
        sys.stdout.write(csv_text(RATIO_COLUMNS, rows))
    else:
        write_csv(output, RATIO_COLUMNS, rows)
    return EXIT_OK


def cmd_list_benchmarks() -> int:
    for name in sorted(BENCHMARKS):
        b = BENCHMARKS[name]()
        bounds = ", ".join(f"[{lo:g}, {hi:g}]" for lo, hi in zip(b.domain.lower, b.domain.upper))
        print(f"{name}\tdim={b.dim}\tf*={b.known_minimum_value:.6f}\t{bounds}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="boggn", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run replicated optimizations from a config file")
    p.add_argument("config", type=Path)
    p.add_argument("--output-dir", type=Path)

    p = sub.add_parser("compare", help="per-iteration regret quartiles across run directories")
    p.add_argument("run_dirs", nargs="+", type=Path)
    p.add_argument("-o", "--output", type=Path)

    p = sub.add_parser("ratio-demo", help="true vs CPE vs KDE relative density ratio")
    p.add_argument("--gamma", type=float, default=1.0 / 3.0)
    p.add_argument("--n-samples", type=int, default=5000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", type=Path)

    sub.add_parser("list-benchmarks", help="list the registered benchmark functions")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "run":
            try:
                text = args.config.read_text()
            except OSError as exc:
                raise ConfigError(f"cannot read config: {exc}") from None
            config = parse_config(text)
            override = args.output_dir or os.environ.get(OUTPUT_DIR_ENV)
            if override:
                config = dataclasses.replace(config, output_dir=str(override))
            return cmd_run(config)
        if args.command == "compare":
            return cmd_compare(args.run_dirs, args.output)
        if args.command == "ratio-demo":
            if not 0.0 < args.gamma < 1.0 or args.n_samples < 2:
                raise ConfigError("need 0 < gamma < 1 and n-samples >= 2")
            return cmd_ratio_demo(args.gamma, args.n_samples, args.seed, args.output)
        return cmd_list_benchmarks()
    except (ConfigError, ValueError, FileNotFoundError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001
        print(f"runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
