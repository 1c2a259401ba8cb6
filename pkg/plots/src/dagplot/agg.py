"""Reading and aggregating sweep CSVs.

The input contract is the sweep CSV schema frozen below. Repetitions of the
same configuration differ only in seed/rep, so curves are group means over
every row sharing the x value (b/n) and the requested group-by columns.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass

log = logging.getLogger(__name__)

# Frozen input schema (schema version 1). Header must match exactly.
SWEEP_COLUMNS = (
    "schema", "seed", "rep",
    "n", "f", "b", "m", "policy", "profile", "fanout",
    "puzzles", "puzzle_period", "third_party_rate", "pariah_depth",
    "target_client", "tick_ceiling",
    "ticks", "partial", "solved_puzzles", "score_target", "scores",
    "of_fin_snd", "of_fin_rec", "of_fin_ini", "of_fin_dlv",
    "of_wav_snd", "of_wav_rec", "of_wav_ini", "of_wav_dlv",
    "examined_pairs", "duplications", "waves_formed", "waves_skipped",
    "tx_wave_q1", "tx_wave_med", "tx_wave_q3",
    "vertices", "columns",
    "brb_init_sent", "brb_echo_sent", "brb_ready_sent", "events",
)

# Columns that never make sense as a y-axis metric.
NON_METRIC = {"schema", "seed", "rep", "policy", "profile", "scores", "partial"}


class SchemaError(Exception):
    pass


def metric_columns() -> list[str]:
    return [c for c in SWEEP_COLUMNS if c not in NON_METRIC]


def read_rows(path: str) -> list[dict[str, str]]:
    """Reads a sweep CSV, insisting on the frozen header."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file, expected sweep CSV header")
        if tuple(header) != SWEEP_COLUMNS:
            raise SchemaError(
                f"{path}: header does not match the sweep schema "
                f"(got {len(header)} columns, expected {len(SWEEP_COLUMNS)})")
        rows = []
        for line in reader:
            if len(line) != len(SWEEP_COLUMNS):
                raise SchemaError(f"{path}: row with {len(line)} cells")
            rows.append(dict(zip(SWEEP_COLUMNS, line)))
    return rows


@dataclass(frozen=True)
class Group:
    """One aggregated point: a curve key, an x position, and group means."""
    key: tuple[str, ...]
    x: float
    count: int
    means: tuple[float, ...]


def check_metric(metric: str) -> None:
    if metric not in SWEEP_COLUMNS or metric in NON_METRIC:
        usable = ", ".join(metric_columns())
        raise ValueError(f"unknown metric {metric!r}; available: {usable}")


def check_group_by(group_by: list[str]) -> None:
    for col in group_by:
        if col not in SWEEP_COLUMNS:
            usable = ", ".join(SWEEP_COLUMNS)
            raise ValueError(f"unknown group-by column {col!r}; available: {usable}")


def aggregate(rows: list[dict[str, str]], metrics: list[str],
              group_by: list[str]) -> list[Group]:
    """Group means of `metrics` per (group_by values, b/n), x ascending."""
    buckets: dict[tuple[tuple[str, ...], float], list[list[float]]] = {}
    for row in rows:
        x = int(row["b"]) / int(row["n"])
        key = tuple(row[c] for c in group_by)
        vals = [float(row[m]) for m in metrics]
        buckets.setdefault((key, x), []).append(vals)
    out = []
    for (key, x), vals in sorted(buckets.items()):
        count = len(vals)
        means = tuple(sum(column) / count for column in zip(*vals))
        out.append(Group(key=key, x=x, count=count, means=means))
    return out


def write_table(groups: list[Group], metrics: list[str], group_by: list[str],
                path: str) -> None:
    """Aggregated table as CSV, for diffing against a recomputation."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(group_by) + ["x", "count"]
                        + [f"mean_{m}" for m in metrics])
        for g in groups:
            writer.writerow(list(g.key) + [f"{g.x:.6g}", g.count]
                            + [f"{m:.6g}" for m in g.means])
    log.info("wrote %d aggregated rows to %s", len(groups), path)


def dump_table(groups: list[Group], metrics: list[str],
               group_by: list[str]) -> str:
    head = "\t".join(list(group_by) + ["x", "count"]
                     + [f"mean_{m}" for m in metrics])
    lines = [head]
    for g in groups:
        lines.append("\t".join(list(g.key) + [f"{g.x:.6g}", str(g.count)]
                               + [f"{m:.6g}" for m in g.means]))
    return "\n".join(lines)
