"""Command line entry point: sweep CSV in, figure plus aggregated table out."""

from __future__ import annotations

import argparse
import logging
import sys

from .agg import SchemaError, aggregate, check_group_by, check_metric, \
    dump_table, read_rows
from .figure import RIBBON_PARTS, plot_sweep

log = logging.getLogger(__name__)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="dagplot",
        description="Plot a dagsim sweep CSV: group-mean metric vs b/n.")
    p.add_argument("csv", help="sweep CSV written by `dagsim sweep`")
    p.add_argument("--metric", default="score_target",
                   help="y-axis column (default score_target)")
    p.add_argument("--group-by", default="policy",
                   help="comma-separated curve key columns (default policy)")
    p.add_argument("--out", default="sweep.png", help="figure output path")
    p.add_argument("--table", default=None,
                   help="also write the aggregated table CSV here")
    p.add_argument("--ribbon", action="store_true",
                   help="treat metric as a quartile triple and shade q1..q3")
    p.add_argument("--dump", action="store_true",
                   help="print the aggregated numbers, write nothing")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    group_by = [c.strip() for c in args.group_by.split(",") if c.strip()]
    try:
        if args.dump:
            check_group_by(group_by)
            metrics = ([args.metric + part for part in RIBBON_PARTS]
                       if args.ribbon else [args.metric])
            for m in metrics:
                check_metric(m)
            rows = read_rows(args.csv)
            if not rows:
                raise ValueError(f"{args.csv}: no data rows")
            print(dump_table(aggregate(rows, metrics, group_by), metrics,
                             group_by))
        else:
            plot_sweep(args.csv, args.metric, group_by, args.out,
                       ribbon=args.ribbon, table_path=args.table)
    except (SchemaError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
