#!/usr/bin/env python3
"""Freeze brute-force expectations for the bundled W1 workload.

Runs the independent reference executor in tests/bruteforce.py over
workloads/W1 and writes two files:

  tests/data/w1_golden.json    expected numbers for every query and flip
  workloads/W1/planted.json    documentation of the planted behaviors

The golden file is what the test suite holds the live engine to, so
regenerate it only after deliberately changing the workload or the
documented engine semantics, and re-review the printed matrix when you
do.
"""

from __future__ import annotations

import hashlib
import json
import sys
from pathlib import Path

REPO_ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO_ROOT / "tests"))

from bruteforce import (  # noqa: E402
    GAP_THRESHOLD,
    MANIFEST_IDS,
    expected_campaign,
    load_tables,
    run_query,
    _suite_check,
)
from queryspecs import VALIDATE_QUERIES, W1_QUERIES  # noqa: E402

PLANTED_KINDS = {
    1: ("performance", "join algorithm choice favors nested loops too eagerly"),
    2: ("performance", "predicate pushdown is skipped once a join has several predicates"),
    3: ("performance", "limit early termination is disabled above joins"),
    4: ("benign", "hash build side choice; both sides cost the same here"),
    5: ("correctness", "skipping the probe recheck emits rows from colliding keys"),
    6: ("benign", "pushed predicates run stacked instead of merged"),
}


def main() -> int:
    w1 = REPO_ROOT / "workloads" / "W1"
    db_dir = w1 / "db"
    tables = load_tables(db_dir)

    baselines, outcomes = expected_campaign(tables, W1_QUERIES, VALIDATE_QUERIES)
    _, open_outcomes = expected_campaign(
        tables, W1_QUERIES, VALIDATE_QUERIES, cost_gate=False
    )

    queries_doc = {}
    for desc in W1_QUERIES:
        base = baselines[desc.name]
        queries_doc[desc.name] = {
            "sql": desc.sql,
            "baseline": {
                "est_cost": base.est_cost,
                "work_units": base.work,
                "rows": base.row_count,
                "digest": base.digest,
                "coverage": sorted(base.coverage),
            },
            "flips": {},
        }
    for out in outcomes:
        queries_doc[out.query]["flips"][str(out.flip_id)] = {
            "est_cost": out.flipped_est,
            "gated": out.gated,
            "verdict": out.verdict,
            "ratio": out.ratio,
            "work_units": out.flipped_work,
            "rows": out.flipped_rows,
            "digest": out.flipped_digest,
            "coverage": sorted(out.flipped_coverage) if out.flipped_coverage else None,
            "failing_query": out.failing_query,
            "failing_kind": out.failing_kind,
        }

    issue_flips = sorted({o.flip_id for o in outcomes if o.verdict == "issue"})
    evaluated = sorted({o.flip_id for o in outcomes})
    baseline_union = set()
    for run in baselines.values():
        baseline_union.update(run.coverage)
    union_after = set(baseline_union)
    for out in outcomes:
        if out.flipped_coverage:
            union_after.update(out.flipped_coverage)
    increase_pct = (
        100.0 * (len(union_after) - len(baseline_union)) / max(1, len(baseline_union))
    )

    exemplars = {}
    affected = {}
    issue_queries = {}
    for flip_id in issue_flips:
        winners = [o for o in outcomes if o.flip_id == flip_id and o.verdict == "issue"]
        best = sorted(winners, key=lambda o: (-o.ratio, o.query))[0]
        exemplars[str(flip_id)] = {"query": best.query, "ratio": best.ratio}
        qualifying = [
            o
            for o in outcomes
            if o.flip_id == flip_id
            and o.ratio is not None
            and o.ratio >= 1.0 + GAP_THRESHOLD
        ]
        affected[str(flip_id)] = len(qualifying) - 1
        issue_queries[flip_id] = sorted(o.query for o in winners)

    suite_cache = {}
    validation_doc = {}
    for flip_id in sorted(MANIFEST_IDS):
        ok, failing, kind = _suite_check(tables, VALIDATE_QUERIES, flip_id, suite_cache)
        validation_doc[str(flip_id)] = {
            "passed": ok,
            "failing_query": failing,
            "kind": kind,
        }

    db_files = {
        p.name: hashlib.sha256(p.read_bytes()).hexdigest()
        for p in sorted(db_dir.glob("*.csv"))
    }

    golden = {
        "db_files": db_files,
        "gap_threshold": GAP_THRESHOLD,
        "manifest_size": len(MANIFEST_IDS),
        "queries": queries_doc,
        "summary": {
            "issue_flips": issue_flips,
            "evaluated_flips": evaluated,
            "baseline_union": sorted(baseline_union),
            "union_after_flips": sorted(union_after),
            "coverage_increase_pct": increase_pct,
            "exemplars": exemplars,
            "affected_beyond_exemplar": affected,
        },
        "gate_off": {
            "issue_flips": sorted(
                {o.flip_id for o in open_outcomes if o.verdict == "issue"}
            ),
        },
        "validation": validation_doc,
    }

    out_path = REPO_ROOT / "tests" / "data" / "w1_golden.json"
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_text(json.dumps(golden, indent=2, sort_keys=True) + "\n")
    print("wrote %s" % out_path)

    planted = {
        "workload": "W1",
        "note": (
            "Expectations below are computed by tests/bruteforce.py, the "
            "independent reference executor, over the committed dataset."
        ),
        "planted": [],
    }
    altering = {}
    for out in outcomes:
        if out.verdict == "functionality_altering":
            altering.setdefault(out.flip_id, []).append(out.query)
    for flip_id in sorted(MANIFEST_IDS):
        kind, summary = PLANTED_KINDS[flip_id]
        entry = {
            "flip_id": flip_id,
            "kind": kind,
            "summary": summary,
            "expected_issue_queries": issue_queries.get(flip_id, []),
            "expected_altering_queries": sorted(altering.get(flip_id, [])),
        }
        if str(flip_id) in exemplars:
            entry["exemplar_query"] = exemplars[str(flip_id)]["query"]
        planted["planted"].append(entry)
    planted_path = w1 / "planted.json"
    planted_path.write_text(json.dumps(planted, indent=2) + "\n")
    print("wrote %s" % planted_path)

    print("\nissue flips: %s  evaluated: %s" % (issue_flips, evaluated))
    print(
        "coverage %s -> %s (+%.1f%%)"
        % (sorted(baseline_union), sorted(union_after), increase_pct)
    )
    for flip_id, info in sorted(exemplars.items(), key=lambda kv: int(kv[0])):
        print(
            "flip %s exemplar %s ratio %.2f affected +%d"
            % (flip_id, info["query"], info["ratio"], affected[flip_id])
        )
    for flip_id, info in sorted(validation_doc.items(), key=lambda kv: int(kv[0])):
        state = "pass" if info["passed"] else (
            "fail(%s on %s)" % (info["kind"], info["failing_query"])
        )
        print("suite flip %s: %s" % (flip_id, state))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
