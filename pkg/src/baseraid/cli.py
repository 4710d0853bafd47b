"""Command-line entry points: run plans, pit snapshots, merge stats, serve.

Exit codes: 0 ok, 2 configuration or plan error, 3 numeric fault during
training, 4 I/O failure.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace

from .errors import ConfigError, ContractViolation, NumericFault, PlanError
from .harness import (
    StatsRow, cross_evaluate, export_csv, format_pit_table, load_plan,
    read_stats_csv, rows_to_csv, run_plan,
)


def _cmd_run(args: argparse.Namespace) -> int:
    batches = load_plan(args.plan)
    if args.seed is not None:
        batches = [replace(b, rng_seed=args.seed) for b in batches]
    results = run_plan(batches, args.out)
    rows: list[StatsRow] = []
    for spec_id in sorted(results):
        rows.extend(results[spec_id].rows)
    sys.stdout.write(rows_to_csv(rows))
    return 0


def _cmd_pit(args: argparse.Namespace) -> int:
    report = cross_evaluate(
        args.white, args.black, args.games,
        learn=not args.frozen, rng_seed=args.seed, label=args.label,
    )
    print(format_pit_table([report]))
    return 0


def _cmd_stats(args: argparse.Namespace) -> int:
    rows: list[StatsRow] = []
    root = args.dir
    combined = os.path.join(root, "stats.csv")
    if os.path.exists(combined):
        rows = read_stats_csv(combined)
    else:
        for name in sorted(os.listdir(root)):
            per_batch = os.path.join(root, name, "stats.csv")
            if os.path.isfile(per_batch):
                rows.extend(read_stats_csv(per_batch))
    if args.csv:
        export_csv(rows, args.csv)
    else:
        sys.stdout.write(rows_to_csv(rows))
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(plan_path=args.plan, out_dir=args.out, ui_dir=args.serve_ui)
    uvicorn.run(app, host="127.0.0.1", port=args.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="baseraid",
        description="Corner-base board game: TD(lambda) self-play training workbench",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a batch plan")
    p_run.add_argument("--plan", required=True, help="plan JSON file")
    p_run.add_argument("--out", required=True, help="output directory (the store)")
    p_run.add_argument("--seed", type=int, default=None,
                       help="override every batch's rng_seed")
    p_run.set_defaults(func=_cmd_run)

    p_pit = sub.add_parser("pit", help="cross-evaluate two snapshots")
    p_pit.add_argument("--white", required=True, help="white snapshot file")
    p_pit.add_argument("--black", required=True, help="black snapshot file")
    p_pit.add_argument("--games", type=int, default=1000)
    p_pit.add_argument("--frozen", action="store_true",
                       help="disable learning during the pit")
    p_pit.add_argument("--seed", type=int, default=0)
    p_pit.add_argument("--label", default=None, help='e.g. "W5 - B8"')
    p_pit.set_defaults(func=_cmd_pit)

    p_stats = sub.add_parser("stats", help="merge and print stage statistics")
    p_stats.add_argument("--dir", required=True, help="results directory")
    p_stats.add_argument("--csv", default=None, help="write merged CSV here")
    p_stats.set_defaults(func=_cmd_stats)

    p_serve = sub.add_parser("serve", help="serve interactive HC sessions")
    p_serve.add_argument("--plan", required=True)
    p_serve.add_argument("--port", type=int, default=8377)
    p_serve.add_argument("--out", default="runs")
    p_serve.add_argument("--serve-ui", default=None, metavar="DIR",
                         help="also serve the web client from this directory")
    p_serve.set_defaults(func=_cmd_serve)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, PlanError, ContractViolation) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericFault as exc:
        print(f"numeric fault: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
