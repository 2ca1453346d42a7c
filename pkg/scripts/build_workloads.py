#!/usr/bin/env python3
"""Regenerate the bundled workload trees from their sources of truth.

Reads workloads/W1/dataset.json and tests/queryspecs.py, then rewrites
the generated pieces: the CSV database, the per-query .sql files, the
campaign config, and the plan rules file. Everything written here is
committed, so running this script on a clean tree should be a no-op.
"""

from __future__ import annotations

import json
import logging
import sys
from pathlib import Path

REPO_ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO_ROOT / "src"))
sys.path.insert(0, str(REPO_ROOT / "tests"))

from bfa.minidb import DatasetSpec, generate_dataset  # noqa: E402
from queryspecs import VALIDATE_QUERIES, W1_QUERIES  # noqa: E402

logger = logging.getLogger("build_workloads")

CAMPAIGN_TOML = """\
# Campaign over the bundled W1 workload. Paths are relative to this file.
workload_dir = "queries"
validation_dir = "../validate"
metric = "work_units"
repeats = 3
gap_threshold = 0.10
cost_gate = true
plan_rules = "plan_rules.txt"

[target]
kind = "minidb"
db_dir = "db"
"""

PLAN_RULES = """\
# Structural checks applied to every flipped plan under consideration.
# A Limit node must sit directly on the projection, never on a bare join.
parent=Limit requires_child=Project
"""


def write_queries(queries, out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    for desc in queries:
        (out_dir / ("%s.sql" % desc.name)).write_text(desc.sql + "\n")
    logger.info("wrote %d queries to %s", len(queries), out_dir)


def main() -> int:
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    w1 = REPO_ROOT / "workloads" / "W1"
    spec_doc = json.loads((w1 / "dataset.json").read_text())
    spec = DatasetSpec.from_json_dict(spec_doc)
    written = generate_dataset(spec, w1 / "db")
    logger.info("generated %s", ", ".join(p.name for p in written))

    write_queries(W1_QUERIES, w1 / "queries")
    write_queries(VALIDATE_QUERIES, REPO_ROOT / "workloads" / "validate" / "queries")

    (w1 / "campaign.toml").write_text(CAMPAIGN_TOML)
    (w1 / "plan_rules.txt").write_text(PLAN_RULES)
    logger.info("wrote campaign.toml and plan_rules.txt")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
