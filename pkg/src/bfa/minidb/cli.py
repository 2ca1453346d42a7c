"""Command line for the miniature engine.

    minidb --db DIR (--explain | --execute | --digest)
           (--query SQL | --query-file PATH) [--stats]

Reads the flip selection and coverage path from the environment (the same
variables the instrumentation shim uses), so a campaign can drive this
binary exactly like a compiled target. Exit codes: 0 success, 2 on SQL,
load, or usage errors.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

from ..errors import BfaError
from ..flipcore import CoverageSink, FlipEnv, resolve_flip_env
from .data import load_database
from .digest import result_digest
from .executor import execute_plan
from .planner import explain, plan
from .sql import parse_query

logger = logging.getLogger(__name__)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="minidb",
        description="Run one query against a CSV-backed database.",
    )
    parser.add_argument("--db", required=True, help="directory of <table>.csv files")
    mode = parser.add_mutually_exclusive_group(required=True)
    mode.add_argument("--explain", action="store_true", help="print the plan tree")
    mode.add_argument("--execute", action="store_true", help="print result rows")
    mode.add_argument(
        "--digest", action="store_true", help="print the order-insensitive digest"
    )
    source = parser.add_mutually_exclusive_group(required=True)
    source.add_argument("--query", help="SQL text")
    source.add_argument("--query-file", help="file containing the SQL text")
    parser.add_argument(
        "--stats",
        action="store_true",
        help="append one line: work_units= wall_ms= rows= digest=",
    )
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.stats and args.explain:
        parser.error("--stats requires --execute or --digest")

    env_names = FlipEnv()
    coverage = CoverageSink()
    coverage_path = os.environ.get(env_names.coverage_path_var_name)
    try:
        selection = resolve_flip_env(os.environ, env_names)
        if args.query_file is not None:
            sql_text = Path(args.query_file).read_text(encoding="utf-8").strip()
        else:
            sql_text = args.query
        db = load_database(args.db)
        ast = parse_query(sql_text)
        if args.explain:
            sys.stdout.write(explain(ast, db, selection, coverage))
        else:
            root = plan(ast, db, selection, coverage)
            rows, stats = execute_plan(root, db, selection, coverage)
            digest = result_digest(rows)
            if args.execute:
                for row in rows:
                    sys.stdout.write("\t".join(str(v) for v in row) + "\n")
            else:
                sys.stdout.write(
                    "digest=%s rows=%d\n" % (digest.hex(), digest.row_count)
                )
            if args.stats:
                sys.stdout.write(
                    "work_units=%d wall_ms=%.3f rows=%d digest=%s\n"
                    % (stats.work_units, stats.wall_ms, stats.rows_out, digest.hex())
                )
        return 0
    except OSError as exc:
        print("minidb: error: %s" % exc, file=sys.stderr)
        return 2
    except BfaError as exc:
        print("minidb: error: %s" % exc, file=sys.stderr)
        return 2
    finally:
        if coverage_path:
            coverage.write_to(coverage_path)


if __name__ == "__main__":
    sys.exit(main())
