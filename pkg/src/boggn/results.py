"""Persistence of run traces, summaries and comparison tables."""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from pathlib import Path

import numpy as np

__all__ = [
    "COMPARE_COLUMNS",
    "RATIO_COLUMNS",
    "SUMMARY_COLUMNS",
    "TIMING_COLUMNS",
    "aggregate_regret",
    "atomic_write_text",
    "load_schema",
    "read_csv",
    "read_jsonl",
    "records_to_jsonl",
    "write_csv",
]

SUMMARY_COLUMNS = ("seed", "strategy", "benchmark", "final_regret", "best_y")
TIMING_COLUMNS = ("seed", "wall_time")
COMPARE_COLUMNS = ("iteration", "strategy", "median_regret", "q25", "q75")
RATIO_COLUMNS = ("x", "true_r_gamma", "cpe_r_gamma", "kde_r_gamma")


def atomic_write_text(path, text: str) -> None:
    """Write ``text`` to a temporary sibling, then rename it over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def records_to_jsonl(records) -> str:
    return "".join(json.dumps(r.to_dict()) + "\n" for r in records)


def read_jsonl(path) -> list:
    with open(path) as fh:
        return [json.loads(line) for line in fh if line.strip()]


def csv_text(columns, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def write_csv(path, columns, rows) -> None:
    atomic_write_text(path, csv_text(columns, rows))


def read_csv(path) -> list:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def aggregate_regret(runs_by_strategy: dict) -> list:
    """Per-iteration median and quartiles of regret for each strategy.

    ``runs_by_strategy`` maps a strategy name to a list of regret sequences.
    Sequences are truncated to the shortest one of their strategy.
    """
    rows = []
    for strategy in sorted(runs_by_strategy):
        runs = runs_by_strategy[strategy]
        length = min(len(r) for r in runs)
        R = np.array([r[:length] for r in runs], dtype=float)
        q25, med, q75 = np.percentile(R, [25, 50, 75], axis=0)
        for it in range(length):
            rows.append((it, strategy, float(med[it]), float(q25[it]), float(q75[it])))
    return rows


def load_schema() -> dict:
    """The documented field schema for every file the package writes."""
    return json.loads((Path(__file__).parent / "schema.json").read_text())
