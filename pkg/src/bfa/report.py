"""Issue reports and coverage statistics from campaign outcomes.

Produces a human-readable report.txt and a machine-readable issues.json
that agree on issue count, flip ids, and ratios, plus a coverage summary.
All rendering is deterministic given identical inputs.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Optional, Set, Tuple

from .campaign import VERDICT_ISSUE, CampaignResult, FlipOutcome, metric_value
from .instrument import BranchSite
from .minidb import BUILTIN_FLIP_POINTS

logger = logging.getLogger(__name__)


@dataclass
class Issue:
    flip_id: int
    site: Optional[BranchSite]
    builtin_note: Optional[str]
    exemplar_query_id: str
    exemplar_query: str
    ratio: float
    baseline_metric: float
    flipped_metric: float
    baseline_explain: Optional[str]
    flipped_explain: Optional[str]
    affected_count: int


@dataclass
class CoverageStats:
    baseline_ids: Set[int]
    union_flip_ids: Set[int]
    manifest_size: int
    increase_pct: float


def build_issues(
    result: CampaignResult, sites: Optional[Mapping[int, BranchSite]] = None
) -> List[Issue]:
    """Group issue outcomes by flip id; the exemplar is the highest ratio,
    affected_count counts the other queries at or above threshold. Sorted
    by ratio descending, ties by ascending flip id."""
    sites = sites or {}
    threshold = 1 + result.gap_threshold
    by_flip: Dict[int, List[FlipOutcome]] = {}
    for outcome in result.outcomes:
        by_flip.setdefault(outcome.flip_id, []).append(outcome)

    issues: List[Issue] = []
    for flip_id, group in sorted(by_flip.items()):
        winners = [o for o in group if o.verdict == VERDICT_ISSUE]
        if not winners:
            continue
        exemplar = sorted(winners, key=lambda o: (-o.ratio, o.query_id))[0]
        qualifying = [
            o for o in group if o.ratio is not None and o.ratio >= threshold
        ]
        builtin_note = (
            BUILTIN_FLIP_POINTS.get(flip_id)
            if result.target_kind == "minidb"
            else None
        )
        issues.append(
            Issue(
                flip_id=flip_id,
                site=sites.get(flip_id),
                builtin_note=builtin_note,
                exemplar_query_id=exemplar.query_id,
                exemplar_query=result.queries.get(exemplar.query_id, ""),
                ratio=exemplar.ratio,
                baseline_metric=metric_value(exemplar.baseline, result.metric),
                flipped_metric=metric_value(exemplar.flipped, result.metric),
                baseline_explain=exemplar.baseline.explain_text,
                flipped_explain=exemplar.flipped.explain_text,
                affected_count=len(qualifying) - 1,
            )
        )
    issues.sort(key=lambda i: (-i.ratio, i.flip_id))
    return issues


def coverage_stats(
    baseline_coverage: Mapping[str, Iterable[int]],
    flipped_coverages: Iterable[Iterable[int]],
    manifest_size: int = 0,
) -> CoverageStats:
    baseline_ids: Set[int] = set()
    for ids in baseline_coverage.values():
        baseline_ids.update(ids)
    union_ids = set(baseline_ids)
    for ids in flipped_coverages:
        union_ids.update(ids)
    increase_pct = 100.0 * (len(union_ids) - len(baseline_ids)) / max(1, len(baseline_ids))
    return CoverageStats(
        baseline_ids=baseline_ids,
        union_flip_ids=union_ids,
        manifest_size=manifest_size,
        increase_pct=increase_pct,
    )


def format_issue_count(count: int) -> str:
    noun = "issue" if count == 1 else "issues"
    return "%d %s found" % (count, noun)


def _format_ratio(ratio: float) -> str:
    if math.isinf(ratio):
        return "inf"
    return "%.1f" % ratio


def _format_ids(ids: Iterable[int]) -> str:
    ordered = sorted(ids)
    return ", ".join(str(i) for i in ordered) if ordered else "(none)"


def _indent(text: str, prefix: str) -> str:
    return "\n".join(prefix + line for line in text.rstrip("\n").split("\n"))


def _site_line(issue: Issue) -> str:
    if issue.site is not None:
        return "site: %s:%d (flip-point %d)" % (
            issue.site.file,
            issue.site.line,
            issue.flip_id,
        )
    return "site: flip-point %d (built-in)" % issue.flip_id


def render_text(
    issues: List[Issue], stats: CoverageStats, result: CampaignResult
) -> str:
    lines: List[str] = []
    lines.append("Branch-flip campaign report")
    lines.append("===========================")
    lines.append("target: %s" % result.target_kind)
    lines.append("workload: %s" % result.workload_dir)
    lines.append(
        "metric: %s, repeats: %d, gap threshold: %d%%, cost gate: %s"
        % (
            result.metric,
            result.repeats,
            round(result.gap_threshold * 100),
            "on" if result.cost_gate else "off",
        )
    )
    lines.append("")
    lines.append(format_issue_count(len(issues)))
    for rank, issue in enumerate(issues, 1):
        lines.append("")
        lines.append(
            "Issue %d: flip %d (ratio %sx)"
            % (rank, issue.flip_id, _format_ratio(issue.ratio))
        )
        lines.append("  " + _site_line(issue))
        if issue.site is not None:
            lines.append("  condition: %s" % issue.site.condition_text)
        if issue.builtin_note:
            lines.append("  note: %s" % issue.builtin_note)
        lines.append("  exemplar query: %s" % issue.exemplar_query_id)
        lines.append(_indent(issue.exemplar_query, "    "))
        lines.append(
            "  %s: baseline %s, flipped %s"
            % (result.metric, _format_num(issue.baseline_metric), _format_num(issue.flipped_metric))
        )
        lines.append("  affected queries beyond the exemplar: %d" % issue.affected_count)
        if issue.baseline_explain:
            lines.append("  baseline plan:")
            lines.append(_indent(issue.baseline_explain, "    "))
        if issue.flipped_explain:
            lines.append("  flipped plan:")
            lines.append(_indent(issue.flipped_explain, "    "))
    if result.skipped:
        lines.append("")
        lines.append("Skipped queries")
        for entry in result.skipped:
            lines.append("  %s: %s" % (entry.query_id, entry.reason))
    lines.append("")
    lines.append("Coverage")
    lines.append("  baseline ids: %s" % _format_ids(stats.baseline_ids))
    lines.append("  after flips: %s" % _format_ids(stats.union_flip_ids))
    if stats.manifest_size:
        lines.append("  manifest size: %d" % stats.manifest_size)
    lines.append("  increase: %.1f%%" % stats.increase_pct)
    lines.append("")
    return "\n".join(lines)


def _format_num(value: float) -> str:
    return str(int(value)) if float(value).is_integer() else "%.3f" % value


def _issue_to_dict(issue: Issue) -> dict:
    site = None
    if issue.site is not None:
        site = {
            "id": issue.site.id,
            "file": issue.site.file,
            "line": issue.site.line,
            "column": issue.site.column,
            "condition": issue.site.condition_text,
        }
    return {
        "flip_id": issue.flip_id,
        "site": site,
        "builtin_note": issue.builtin_note,
        "exemplar_query_id": issue.exemplar_query_id,
        "exemplar_query": issue.exemplar_query,
        "ratio": issue.ratio,
        "baseline_metric": issue.baseline_metric,
        "flipped_metric": issue.flipped_metric,
        "affected_count": issue.affected_count,
        "baseline_explain": issue.baseline_explain,
        "flipped_explain": issue.flipped_explain,
    }


def issues_json_dict(issues: List[Issue], result: CampaignResult) -> dict:
    return {
        "metric": result.metric,
        "gap_threshold": result.gap_threshold,
        "issue_count": len(issues),
        "issues": [_issue_to_dict(i) for i in issues],
    }


def coverage_json_dict(
    stats: CoverageStats, baseline_coverage: Mapping[str, Iterable[int]]
) -> dict:
    return {
        "baseline_ids": sorted(stats.baseline_ids),
        "union_flip_ids": sorted(stats.union_flip_ids),
        "manifest_size": stats.manifest_size,
        "increase_pct": stats.increase_pct,
        "per_query_baseline": {
            q: list(ids) for q, ids in sorted(baseline_coverage.items())
        },
    }


def _write_json(path: Path, doc: dict) -> None:
    path.write_text(
        json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def render_report(
    issues: List[Issue],
    stats: CoverageStats,
    result: CampaignResult,
    out_dir,
) -> Dict[str, Path]:
    """Write report.txt and issues.json into out_dir; returns the paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    report_path = out_dir / "report.txt"
    issues_path = out_dir / "issues.json"
    report_path.write_text(render_text(issues, stats, result), encoding="utf-8")
    _write_json(issues_path, issues_json_dict(issues, result))
    logger.info("wrote %s and %s", report_path, issues_path)
    return {"report": report_path, "issues": issues_path}


def write_campaign_outputs(result: CampaignResult, out_dir, sites=None) -> Dict[str, Path]:
    """Full output directory: outcomes.json, issues.json, report.txt,
    coverage.json. Returns the path of each artifact."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    issues = build_issues(result, sites)
    stats = coverage_stats(
        result.baseline_coverage, result.flipped_coverages(), result.manifest_size
    )
    paths = render_report(issues, stats, result, out_dir)
    outcomes_path = out_dir / "outcomes.json"
    coverage_path = out_dir / "coverage.json"
    _write_json(outcomes_path, result.to_json_dict())
    _write_json(coverage_path, coverage_json_dict(stats, result.baseline_coverage))
    paths["outcomes"] = outcomes_path
    paths["coverage"] = coverage_path
    return paths
