"""Command line front end.

Commands: `run` (one simulation, writes CSV row + JSONL log + per-node DOT),
`sweep` (resumable grid of runs into one CSV), `audit` (recompute metrics
from an existing JSONL log), `export-dot` (print one run's reference DAG),
`probe` (executable worked examples). Exit codes: 0 success, 1 validation,
2 runtime failure.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

from .config import ConfigError, SimConfig, load_config, load_sweep
from .dot import export_dot
from .metrics import (CSV_COLUMNS, KIND_IDS, OF_KEYS, build_tables, csv_header,
                      csv_line, count_violations, format_cell, read_jsonl,
                      scores, write_jsonl)
from .ordering import POLICIES
from .probes import (probe_bracha_sabotage, probe_fig5_fig7_fixtures,
                     probe_weak_edge_scenario)
from .sim import REFERENCE, run, summarize
from .workload import tx_name

log = logging.getLogger(__name__)

# Columns that identify a sweep point; used for resume and final sort.
KEY_COLUMNS = ("n", "b", "m", "policy", "profile", "fanout", "puzzles",
               "puzzle_period", "third_party_rate", "pariah_depth",
               "target_client", "seed", "rep")


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # usage problems are validation
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key=value config file")
    p.add_argument("--n", type=int, help="number of nodes (3f+1)")
    p.add_argument("--order", choices=POLICIES, dest="policy",
                   help="in-wave ordering policy")
    p.add_argument("--profile", choices=("perfect", "quick", "slow"))
    p.add_argument("--byzantine", type=int, dest="b",
                   help="number of infected nodes (<= f)")
    p.add_argument("--clients", type=int, dest="m")
    p.add_argument("--puzzles", type=int)
    p.add_argument("--fanout", type=int, help="nodes per submission, 0 = all")
    p.add_argument("--third-party-rate", type=float, dest="third_party_rate")
    p.add_argument("--target-client", type=int, dest="target_client")
    p.add_argument("--pariah-depth", type=int, dest="pariah_depth")
    p.add_argument("--seed", type=int)
    p.add_argument("--tick-ceiling", type=int, dest="tick_ceiling")
    p.add_argument("--out", dest="out_dir", help="artifact directory")


def _config_from_args(args: argparse.Namespace) -> SimConfig:
    overrides = {}
    for key in ("n", "policy", "profile", "b", "m", "puzzles", "fanout",
                "third_party_rate", "target_client", "pariah_depth", "seed",
                "tick_ceiling", "out_dir"):
        value = getattr(args, key, None)
        if value is not None:
            overrides[key] = str(value)
    return load_config(args.config, overrides)


def cmd_run(args: argparse.Namespace) -> int:
    cfg = _config_from_args(args)
    res = run(cfg)
    row = summarize(res)
    os.makedirs(cfg.out_dir, exist_ok=True)
    csv_path = os.path.join(cfg.out_dir, "metrics.csv")
    fresh = not os.path.exists(csv_path)
    with open(csv_path, "a") as fh:
        if fresh:
            fh.write(csv_header() + "\n")
        fh.write(csv_line(row) + "\n")
    log_path = os.path.join(cfg.out_dir, "events.jsonl")
    write_jsonl(res.log, log_path, lambda tx: tx_name(tx, cfg.m))
    for nd in res.nodes:
        dot_path = os.path.join(cfg.out_dir, f"dag_node{nd.row}.dot")
        with open(dot_path, "w") as fh:
            fh.write(export_dot(nd.dag, nd.wave_log))
    print(f"run seed={cfg.seed} ticks={row['ticks']} partial={int(row['partial'])} "
          f"waves={row['waves_formed']} score_target={row['score_target']:.4f}")
    print(f"artifacts: {csv_path}, {log_path}, {cfg.out_dir}/dag_node*.dot")
    return 0


def _row_key(row: dict) -> tuple[str, ...]:
    return tuple(format_cell(row[c]) for c in KEY_COLUMNS)


def _config_key(cfg: SimConfig) -> tuple[str, ...]:
    values = {c: getattr(cfg, c) for c in KEY_COLUMNS}
    values["fanout"] = cfg.resolved_fanout
    return tuple(format_cell(values[c]) for c in KEY_COLUMNS)


def _sweep_point(cfg: SimConfig) -> tuple[tuple[str, ...], str]:
    cfg.validate()
    row = summarize(run(cfg))
    return _row_key(row), csv_line(row)


def cmd_sweep(args: argparse.Namespace) -> int:
    spec = load_sweep(args.spec)
    points = spec.points()
    done: dict[tuple[str, ...], str] = {}
    header = csv_header()
    if os.path.exists(args.out):
        with open(args.out) as fh:
            lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
        if lines and lines[0] != header:
            print(f"{args.out}: header does not match schema", file=sys.stderr)
            return 1
        idx = {c: i for i, c in enumerate(CSV_COLUMNS)}
        for ln in lines[1:]:
            cells = ln.split(",")
            done[tuple(cells[idx[c]] for c in KEY_COLUMNS)] = ln
    todo = []
    for cfg in points:
        key = _config_key(cfg)
        if key not in done:
            todo.append((key, cfg))
    print(f"sweep: {len(points)} points, {len(done)} done, {len(todo)} to run")

    errors_path = args.out + ".errors.log"
    os.makedirs(os.path.dirname(os.path.abspath(args.out)), exist_ok=True)
    if not os.path.exists(args.out) or os.path.getsize(args.out) == 0:
        with open(args.out, "w") as fh:
            fh.write(header + "\n")

    def record(key: tuple[str, ...], line: str) -> None:
        done[key] = line
        with open(args.out, "a") as fh:
            fh.write(line + "\n")
            fh.flush()

    failures = 0
    if args.jobs > 1:
        from concurrent.futures import ProcessPoolExecutor, as_completed
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            futures = {pool.submit(_sweep_point, cfg): key for key, cfg in todo}
            for fut in as_completed(futures):
                key = futures[fut]
                try:
                    got_key, line = fut.result()
                    record(got_key, line)
                except Exception as exc:
                    failures += 1
                    with open(errors_path, "a") as fh:
                        fh.write(f"{','.join(key)}: {exc}\n")
    else:
        for key, cfg in todo:
            try:
                got_key, line = _sweep_point(cfg)
                record(got_key, line)
            except Exception as exc:
                failures += 1
                with open(errors_path, "a") as fh:
                    fh.write(f"{','.join(key)}: {exc}\n")

    def sort_key(item):
        def num(s):
            try:
                return (0, float(s), "")
            except ValueError:
                return (1, 0.0, s)
        return tuple(num(part) for part in item[0])

    with open(args.out, "w") as fh:
        fh.write(header + "\n")
        for _, line in sorted(done.items(), key=sort_key):
            fh.write(line + "\n")
    print(f"sweep: {len(done)} rows written, {failures} failures")
    return 0 if failures == 0 else 2


def cmd_audit(args: argparse.Namespace) -> int:
    records = read_jsonl(args.log)
    nodes = {r[2] for r in records if r[2] is not None}
    n = args.n if args.n else max(nodes) + 1
    game_txs = {r[3] for r in records
                if r[1] != KIND_IDS["WAVE_FORMED"] and isinstance(r[3], str)
                and ":" in r[3] and not r[3].startswith("tp:")}
    pairs = sorted((int(p), int(c)) for c, p in
                   (name.split(":") for name in game_txs))
    m = args.m if args.m else (max(c for _, c in pairs) + 1 if pairs else 0)
    puzzles = max((p for p, _ in pairs), default=-1) + 1
    games = [[f"{c}:{p}" for c in range(m)] for p in range(puzzles)]
    tables = build_tables(records, n, REFERENCE)
    per_client, decided = scores(tables, games)
    counts = count_violations(tables, games)
    print(f"n={n} m={m} puzzles_revealed={puzzles} decided={decided}")
    print("scores=" + "|".join(f"{s:.6f}" for s in per_client))
    for key in OF_KEYS:
        print(f"{key}={counts[key]}")
    print(f"examined_pairs={counts['examined_pairs']}")
    return 0


def cmd_export_dot(args: argparse.Namespace) -> int:
    cfg = _config_from_args(args)
    res = run(cfg)
    ref = res.nodes[REFERENCE]
    text = export_dot(ref.dag, ref.wave_log)
    if args.dot_out:
        with open(args.dot_out, "w") as fh:
            fh.write(text)
        print(f"wrote {args.dot_out}")
    else:
        sys.stdout.write(text)
    return 0


def cmd_probe(args: argparse.Namespace) -> int:
    name = args.name
    if name in ("fixtures", "all"):
        probe_fig5_fig7_fixtures()
        print("fixtures: vote tables and cycle match the worked examples")
    if name in ("weak-edge", "all"):
        probe_weak_edge_scenario()
        print("weak-edge: cap of f honored, lowest column rescued first")
    if name in ("bracha", "all"):
        rows = probe_bracha_sabotage(args.probe_n, (args.probe_n - 1) // 3,
                                     args.b_values, args.x_grid, args.trials)
        print("b,x,empirical,analytic")
        for b, x, emp, ana in rows:
            print(f"{b},{x:.3f},{emp:.4f},{ana:.4f}")
    return 0


def _float_list(raw: str) -> list[float]:
    return [float(p) for p in raw.split(",") if p.strip()]


def _int_list(raw: str) -> list[int]:
    return [int(p) for p in raw.split(",") if p.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dagsim", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="single simulation with artifacts")
    _add_run_flags(p_run)
    p_run.set_defaults(fn=cmd_run)

    p_sweep = sub.add_parser("sweep", help="grid of runs into one CSV")
    p_sweep.add_argument("--spec", required=True, help="sweep spec file")
    p_sweep.add_argument("--out", required=True, help="output CSV path")
    p_sweep.add_argument("--jobs", type=int, default=1)
    p_sweep.set_defaults(fn=cmd_sweep)

    p_audit = sub.add_parser("audit", help="recompute metrics from a JSONL log")
    p_audit.add_argument("log")
    p_audit.add_argument("--n", type=int, default=0)
    p_audit.add_argument("--m", type=int, default=0)
    p_audit.set_defaults(fn=cmd_audit)

    p_dot = sub.add_parser("export-dot", help="run and print the reference DAG")
    _add_run_flags(p_dot)
    p_dot.add_argument("--dot-out", help="write DOT here instead of stdout")
    p_dot.set_defaults(fn=cmd_export_dot)

    p_probe = sub.add_parser("probe", help="executable worked examples")
    p_probe.add_argument("name", nargs="?", default="all",
                         choices=("all", "fixtures", "weak-edge", "bracha"))
    p_probe.add_argument("--probe-n", type=int, default=25)
    p_probe.add_argument("--b-values", type=_int_list, default=[0, 4, 8])
    p_probe.add_argument("--x-grid", type=_float_list,
                         default=[0.5, 0.7, 0.8, 0.9, 0.95, 1.0])
    p_probe.add_argument("--trials", type=int, default=100_000)
    p_probe.set_defaults(fn=cmd_probe)
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # runtime failure
        log.exception("command failed")
        return 2


if __name__ == "__main__":
    sys.exit(main())
