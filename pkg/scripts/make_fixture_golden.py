#!/usr/bin/env python3
"""Regenerate expected instrumented output for the C fixture corpus.

For every tests/fixtures/cases/NAME.c this writes NAME.expected.c, the
rewriter's output with ids starting at 1 per file. The expected files
are committed after review; the test suite holds the rewriter to them
byte for byte.
"""

from __future__ import annotations

import sys
from pathlib import Path

REPO_ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO_ROOT / "src"))

from bfa.instrument import rewrite_source, scan_branch_sites  # noqa: E402


def main() -> int:
    cases = REPO_ROOT / "tests" / "fixtures" / "cases"
    total_sites = 0
    for source_path in sorted(cases.glob("*.c")):
        if source_path.name.endswith(".expected.c"):
            continue
        text = source_path.read_text(encoding="utf-8")
        sites, _ = scan_branch_sites(text, source_path.name, start_id=1)
        rewritten = rewrite_source(text, sites)
        out_path = cases / (source_path.stem + ".expected.c")
        out_path.write_text(rewritten, encoding="utf-8")
        total_sites += len(sites)
        print("%-22s %2d sites" % (source_path.name, len(sites)))
    print("total: %d sites" % total_sites)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
