"""Coverage-gated flip campaign.

For each workload query: measure the baseline (explain for the cost
estimate, repeated executes for the metric and the coverage record), then
for every flip id the baseline actually reached, explain the flipped plan,
apply the optional cost gate, execute with repeats, and classify the
outcome. Validation (differential suite plus optional plan-shape rules)
runs lazily, only for flips that cleared the performance threshold.
"""

from __future__ import annotations

import logging
import math
import re
import tempfile
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path
from statistics import median_low
from typing import Dict, List, Optional, Sequence, Tuple

try:
    import tomllib
except ImportError:  # Python 3.10
    import tomli as tomllib

from .adapter import (
    Measurement,
    ParseError,
    TargetConfig,
    Timeout,
    make_target,
    merge_measurements,
)
from .errors import BfaError, ConfigError, TargetError
from .flipcore import NO_FLIP, FlipSelection
from .instrument import load_manifest
from .minidb import BUILTIN_FLIP_POINTS

logger = logging.getLogger(__name__)

METRICS = ("work_units", "wall_ms")

VERDICT_ISSUE = "issue"
VERDICT_NO_GAIN = "no_gain"
VERDICT_ALTERING = "functionality_altering"
VERDICT_ERROR = "error"


class NondeterministicTarget(BfaError):
    """Repeated runs disagreed on work_units or digest."""


@dataclass(frozen=True)
class ValidationVerdict:
    passed: bool
    failing_query: Optional[str] = None
    kind: Optional[str] = None  # digest, rowcount, plan_rule, error

    def describe(self) -> str:
        if self.passed:
            return "pass"
        return "fail(%s on %s)" % (self.kind, self.failing_query)


VALIDATION_PASS = ValidationVerdict(True)


@dataclass(frozen=True)
class CampaignConfig:
    target: TargetConfig
    workload_dir: Path
    validation_dir: Path
    manifest_path: Optional[Path] = None
    cost_gate: bool = True
    metric: str = "work_units"
    repeats: int = 10
    gap_threshold: float = 0.10
    plan_rules: Optional[Path] = None

    def __post_init__(self):
        if self.metric not in METRICS:
            raise ConfigError("metric must be one of %s" % (METRICS,))
        if self.repeats < 1:
            raise ConfigError("repeats must be at least 1")
        if not 0 < self.gap_threshold < 1:
            raise ConfigError("gap_threshold must be a fraction between 0 and 1")


def load_campaign_config(path) -> CampaignConfig:
    """Read a TOML campaign config; relative paths resolve against the
    config file's directory."""
    path = Path(path)
    try:
        with open(path, "rb") as handle:
            doc = tomllib.load(handle)
    except FileNotFoundError:
        raise ConfigError("config file %s does not exist" % path) from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError("%s: %s" % (path, exc)) from exc
    base = path.parent

    def _path(value: Optional[str]) -> Optional[Path]:
        return None if value is None else (base / value)

    target_doc = doc.get("target")
    if not isinstance(target_doc, dict):
        raise ConfigError("%s: missing [target] table" % path)
    target_doc = dict(target_doc)
    if "db_dir" in target_doc:
        target_doc["db_dir"] = str(base / target_doc["db_dir"])
    if "workdir" in target_doc:
        target_doc["workdir"] = str(base / target_doc["workdir"])
    try:
        target = TargetConfig(**target_doc)
    except TypeError as exc:
        raise ConfigError("%s: bad [target] key: %s" % (path, exc)) from exc

    known = {
        "workload_dir",
        "validation_dir",
        "manifest_path",
        "cost_gate",
        "metric",
        "repeats",
        "gap_threshold",
        "plan_rules",
    }
    extras = set(doc) - known - {"target"}
    if extras:
        raise ConfigError("%s: unknown keys %s" % (path, ", ".join(sorted(extras))))
    for required in ("workload_dir", "validation_dir"):
        if required not in doc:
            raise ConfigError("%s: missing %s" % (path, required))
    return CampaignConfig(
        target=target,
        workload_dir=_path(doc["workload_dir"]),
        validation_dir=_path(doc["validation_dir"]),
        manifest_path=_path(doc.get("manifest_path")),
        cost_gate=doc.get("cost_gate", True),
        metric=doc.get("metric", "work_units"),
        repeats=doc.get("repeats", 10),
        gap_threshold=doc.get("gap_threshold", 0.10),
        plan_rules=_path(doc.get("plan_rules")),
    )


@dataclass
class FlipOutcome:
    query_id: str
    flip_id: int
    baseline: Measurement
    flipped: Measurement
    cost_gated_out: bool
    verdict: str
    ratio: Optional[float]
    error_kind: Optional[str] = None
    validation: Optional[ValidationVerdict] = None


@dataclass(frozen=True)
class SkippedQuery:
    query_id: str
    reason: str


@dataclass
class CampaignResult:
    metric: str
    gap_threshold: float
    repeats: int
    cost_gate: bool
    target_kind: str
    workload_dir: str
    started_at: str
    finished_at: str
    queries: Dict[str, str]
    skipped: List[SkippedQuery]
    baseline_coverage: Dict[str, List[int]]
    outcomes: List[FlipOutcome]
    manifest_size: int
    manifest_ids: Optional[List[int]]

    @property
    def issues(self) -> List[FlipOutcome]:
        return [o for o in self.outcomes if o.verdict == VERDICT_ISSUE]

    def evaluated_flip_ids(self) -> List[int]:
        return sorted({o.flip_id for o in self.outcomes})

    def flipped_coverages(self) -> List[List[int]]:
        return [list(o.flipped.coverage.ids) for o in self.outcomes]

    def to_json_dict(self) -> dict:
        return {
            "campaign": {
                "metric": self.metric,
                "gap_threshold": self.gap_threshold,
                "repeats": self.repeats,
                "cost_gate": self.cost_gate,
                "target_kind": self.target_kind,
                "workload_dir": self.workload_dir,
                "started_at": self.started_at,
                "finished_at": self.finished_at,
            },
            "queries": dict(sorted(self.queries.items())),
            "skipped": [
                {"query_id": s.query_id, "reason": s.reason} for s in self.skipped
            ],
            "baseline_coverage": {
                q: list(ids) for q, ids in sorted(self.baseline_coverage.items())
            },
            "manifest": {"size": self.manifest_size, "ids": self.manifest_ids},
            "outcomes": [_outcome_to_dict(o) for o in self.outcomes],
        }


def _measurement_to_dict(m: Measurement) -> dict:
    return {
        "est_cost": m.est_cost,
        "work_units": m.work_units,
        "wall_ms": m.wall_ms,
        "digest": m.digest.hex() if m.digest else None,
        "rows": m.digest.row_count if m.digest else None,
        "coverage": list(m.coverage.ids),
        "explain": m.explain_text,
    }


def _outcome_to_dict(o: FlipOutcome) -> dict:
    return {
        "query_id": o.query_id,
        "flip_id": o.flip_id,
        "cost_gated_out": o.cost_gated_out,
        "verdict": o.verdict,
        "error_kind": o.error_kind,
        "ratio": o.ratio,
        "validation": o.validation.describe() if o.validation else None,
        "baseline": _measurement_to_dict(o.baseline),
        "flipped": _measurement_to_dict(o.flipped),
    }


def _error_kind(exc: BfaError) -> str:
    if isinstance(exc, Timeout):
        return "timeout"
    if isinstance(exc, ParseError):
        return "parse"
    if isinstance(exc, NondeterministicTarget):
        return "nondeterministic"
    return "target"


def metric_value(measurement: Measurement, metric: str) -> float:
    if metric == "work_units":
        if measurement.work_units is None:
            raise ParseError("target reports no work_units; use metric=wall_ms")
        return float(measurement.work_units)
    return measurement.wall_ms


def measure_with_repeats(
    target,
    selection: FlipSelection,
    query: str,
    repeats: int,
    metric: str,
    coverage_path=None,
) -> Measurement:
    """Execute the query repeats times and fold the runs into one
    measurement: wall_ms is the low median, everything else must agree.

    Coverage is collected on the first run only; a deterministic target
    reaches the same flip points every run.
    """
    if repeats < 1:
        raise ConfigError("repeats must be at least 1")
    runs: List[Measurement] = []
    for attempt in range(repeats):
        path = coverage_path if attempt == 0 else None
        runs.append(target.execute(selection, query, path))
    first = runs[0]
    digests = {m.digest for m in runs}
    if len(digests) > 1:
        raise NondeterministicTarget(
            "digest varies across %d repeats (selection=%s)" % (repeats, selection)
        )
    if metric == "work_units":
        works = {m.work_units for m in runs}
        if len(works) > 1:
            raise NondeterministicTarget(
                "work_units varies across repeats: %s" % sorted(works)
            )
    wall = median_low([m.wall_ms for m in runs])
    return replace(first, wall_ms=wall)


def compute_ratio(baseline_value: float, flipped_value: float) -> float:
    if baseline_value == 0 and flipped_value == 0:
        return 1.0
    if flipped_value == 0:
        return math.inf
    return baseline_value / flipped_value


def decide_verdict(
    baseline: Measurement,
    flipped: Measurement,
    config: CampaignConfig,
    validation: Optional[ValidationVerdict] = None,
) -> Tuple[str, float]:
    """Classify one executed flip. validation may be None only when the
    ratio is below threshold (lazy validation never ran)."""
    ratio = compute_ratio(
        metric_value(baseline, config.metric), metric_value(flipped, config.metric)
    )
    if validation is not None and not validation.passed:
        return VERDICT_ALTERING, ratio
    if ratio >= 1 + config.gap_threshold:
        if validation is None:
            raise ValueError("a flip at or above threshold requires validation")
        return VERDICT_ISSUE, ratio
    return VERDICT_NO_GAIN, ratio


# ── Plan-shape rules ─────────────────────────────────────────────────────────

_RULE_RE = re.compile(r"^parent=(\w+)\s+requires_child=(\w+)$")
_NODE_RE = re.compile(r"^((?:  )*)([A-Za-z_][A-Za-z0-9_]*)\(")


@dataclass(frozen=True)
class PlanRule:
    parent: str
    requires_child: str
    raw: str


@dataclass(frozen=True)
class RuleViolation:
    line: int
    rule: str


def parse_plan_rules(path) -> List[PlanRule]:
    rules: List[PlanRule] = []
    for line_no, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        match = _RULE_RE.match(line)
        if not match:
            raise ConfigError("%s:%d: malformed rule %r" % (path, line_no, raw))
        rules.append(PlanRule(match.group(1), match.group(2), line))
    return rules


def check_plan_invariants(explain_text: str, rules_file) -> List[RuleViolation]:
    """Check parent/child kind rules against a rendered plan tree.

    Indentation (two spaces per depth) encodes the tree. Each node whose
    kind matches a rule's parent must have at least one direct child of
    the required kind.
    """
    rules = parse_plan_rules(rules_file)
    if not rules:
        return []

    @dataclass
    class _Node:
        kind: str
        line: int
        children: list = field(default_factory=list)

    roots: List[_Node] = []
    stack: List[Tuple[int, _Node]] = []
    for line_no, line in enumerate(explain_text.splitlines(), 1):
        match = _NODE_RE.match(line)
        if not match:
            continue
        depth = len(match.group(1)) // 2
        node = _Node(match.group(2), line_no)
        while stack and stack[-1][0] >= depth:
            stack.pop()
        if stack:
            stack[-1][1].children.append(node)
        else:
            roots.append(node)
        stack.append((depth, node))

    violations: List[RuleViolation] = []

    def walk(node: _Node) -> None:
        for rule in rules:
            if node.kind == rule.parent and not any(
                child.kind == rule.requires_child for child in node.children
            ):
                violations.append(RuleViolation(node.line, rule.raw))
        for child in node.children:
            walk(child)

    for root in roots:
        walk(root)
    return violations


# ── Functionality validation ─────────────────────────────────────────────────


def _queries_in(dir_path: Path) -> List[Tuple[str, str]]:
    if (dir_path / "queries").is_dir():
        dir_path = dir_path / "queries"
    return [
        (p.stem, p.read_text(encoding="utf-8").strip())
        for p in sorted(dir_path.glob("*.sql"))
    ]


class SuiteValidator:
    """Differential validation of one flip id over a query suite, with
    cached suite baselines and cached per-flip verdicts."""

    def __init__(self, target, validation_dir: Path):
        self.target = target
        if not Path(validation_dir).is_dir():
            raise ConfigError("validation_dir %s does not exist" % validation_dir)
        self.queries = _queries_in(Path(validation_dir))
        if not self.queries:
            logger.warning("validation suite at %s is empty", validation_dir)
        self._baselines: Dict[str, Measurement] = {}
        self._cache: Dict[int, ValidationVerdict] = {}

    def validate(self, flip_id: int) -> ValidationVerdict:
        if flip_id not in self._cache:
            self._cache[flip_id] = self._validate(flip_id)
        return self._cache[flip_id]

    def _validate(self, flip_id: int) -> ValidationVerdict:
        selection = FlipSelection(flip_id)
        for query_id, sql in self.queries:
            try:
                if query_id not in self._baselines:
                    self._baselines[query_id] = self.target.execute(NO_FLIP, sql)
                base = self._baselines[query_id]
                flip = self.target.execute(selection, sql)
            except (TargetError, ParseError, Timeout) as exc:
                logger.warning("validation of flip %d errored: %s", flip_id, exc)
                return ValidationVerdict(False, failing_query=query_id, kind="error")
            if base.digest.row_count != flip.digest.row_count:
                return ValidationVerdict(False, failing_query=query_id, kind="rowcount")
            if base.digest != flip.digest:
                return ValidationVerdict(False, failing_query=query_id, kind="digest")
        return VALIDATION_PASS


def validate_functionality(target, flip_id: int, validation_dir) -> ValidationVerdict:
    return SuiteValidator(target, Path(validation_dir)).validate(flip_id)


# ── The campaign proper ──────────────────────────────────────────────────────


def manifest_info(config: CampaignConfig):
    """(eligible ids or None, manifest size, site lookup for reports)."""
    if config.manifest_path is not None:
        manifest = load_manifest(config.manifest_path)
        sites = {s.id: s for s in manifest.sites}
        return set(sites), len(manifest.sites), sites
    if config.target.kind == "minidb":
        return set(BUILTIN_FLIP_POINTS), len(BUILTIN_FLIP_POINTS), {}
    return None, 0, {}


def run_campaign(config: CampaignConfig) -> CampaignResult:
    started_at = datetime.now(timezone.utc).isoformat()
    queries = _queries_in(Path(config.workload_dir))
    if not queries:
        raise ConfigError(
            "no queries under %s (expected queries/*.sql)" % config.workload_dir
        )
    target = make_target(config.target)
    validator = SuiteValidator(target, Path(config.validation_dir))
    manifest_ids, manifest_size, _sites = manifest_info(config)

    outcomes: List[FlipOutcome] = []
    skipped: List[SkippedQuery] = []
    baseline_coverage: Dict[str, List[int]] = {}

    with tempfile.TemporaryDirectory(prefix="bfa-campaign-") as tmp:
        coverage_path = str(Path(tmp) / "coverage.log")
        for query_id, sql in queries:
            try:
                base_explain = target.explain(NO_FLIP, sql)
                base_exec = measure_with_repeats(
                    target, NO_FLIP, sql, config.repeats, config.metric, coverage_path
                )
            except (TargetError, ParseError, Timeout, NondeterministicTarget) as exc:
                reason = "%s: %s" % (_error_kind(exc), exc)
                logger.warning("skipping %s: %s", query_id, reason)
                skipped.append(SkippedQuery(query_id, reason))
                continue
            baseline = merge_measurements(base_explain, base_exec)
            covered = set(baseline.coverage.as_set())
            baseline_coverage[query_id] = list(baseline.coverage.ids)
            flip_ids = sorted(
                covered & manifest_ids if manifest_ids is not None else covered
            )
            logger.info("%s: baseline done, %d flips to try", query_id, len(flip_ids))
            for flip_id in flip_ids:
                outcomes.append(
                    _evaluate_flip(
                        target,
                        config,
                        validator,
                        query_id,
                        sql,
                        flip_id,
                        baseline,
                        coverage_path,
                    )
                )

    finished_at = datetime.now(timezone.utc).isoformat()
    return CampaignResult(
        metric=config.metric,
        gap_threshold=config.gap_threshold,
        repeats=config.repeats,
        cost_gate=config.cost_gate,
        target_kind=config.target.kind,
        workload_dir=str(config.workload_dir),
        started_at=started_at,
        finished_at=finished_at,
        queries=dict(queries),
        skipped=skipped,
        baseline_coverage=baseline_coverage,
        outcomes=outcomes,
        manifest_size=manifest_size,
        manifest_ids=sorted(manifest_ids) if manifest_ids is not None else None,
    )


def _evaluate_flip(
    target,
    config: CampaignConfig,
    validator: SuiteValidator,
    query_id: str,
    sql: str,
    flip_id: int,
    baseline: Measurement,
    coverage_path: str,
) -> FlipOutcome:
    selection = FlipSelection(flip_id)
    try:
        flip_explain = target.explain(selection, sql)
        if (
            config.cost_gate
            and flip_explain.est_cost is not None
            and baseline.est_cost is not None
            and flip_explain.est_cost > baseline.est_cost
        ):
            # Estimated strictly worse: not worth executing. Ties run, so
            # executor-only flips (which never change the plan) still get
            # measured and validated.
            return FlipOutcome(
                query_id=query_id,
                flip_id=flip_id,
                baseline=baseline,
                flipped=flip_explain,
                cost_gated_out=True,
                verdict=VERDICT_NO_GAIN,
                ratio=None,
            )
        flip_exec = measure_with_repeats(
            target, selection, sql, config.repeats, config.metric, coverage_path
        )
        flipped = merge_measurements(flip_explain, flip_exec)
        ratio = compute_ratio(
            metric_value(baseline, config.metric),
            metric_value(flipped, config.metric),
        )
        validation: Optional[ValidationVerdict] = None
        if ratio >= 1 + config.gap_threshold:
            validation = _validate(
                target, config, validator, query_id, flip_id, baseline, flipped
            )
        verdict, ratio = decide_verdict(baseline, flipped, config, validation)
        return FlipOutcome(
            query_id=query_id,
            flip_id=flip_id,
            baseline=baseline,
            flipped=flipped,
            cost_gated_out=False,
            verdict=verdict,
            ratio=ratio,
            validation=validation,
        )
    except (TargetError, ParseError, Timeout, NondeterministicTarget) as exc:
        kind = _error_kind(exc)
        logger.warning("flip %d on %s errored (%s): %s", flip_id, query_id, kind, exc)
        return FlipOutcome(
            query_id=query_id,
            flip_id=flip_id,
            baseline=baseline,
            flipped=Measurement(wall_ms=0.0),
            cost_gated_out=False,
            verdict=VERDICT_ERROR,
            ratio=None,
            error_kind=kind,
        )


def _validate(
    target,
    config: CampaignConfig,
    validator: SuiteValidator,
    query_id: str,
    flip_id: int,
    baseline: Measurement,
    flipped: Measurement,
) -> ValidationVerdict:
    """Full functionality validation for one above-threshold flip: the
    campaign query itself (free, both digests are in hand), then optional
    plan-shape rules, then the cached differential suite."""
    if baseline.digest.row_count != flipped.digest.row_count:
        return ValidationVerdict(False, failing_query=query_id, kind="rowcount")
    if baseline.digest != flipped.digest:
        return ValidationVerdict(False, failing_query=query_id, kind="digest")
    if config.plan_rules is not None and flipped.explain_text:
        violations = check_plan_invariants(flipped.explain_text, config.plan_rules)
        if violations:
            logger.warning(
                "flip %d violates plan rules on %s: %s", flip_id, query_id, violations
            )
            return ValidationVerdict(False, failing_query=query_id, kind="plan_rule")
    return validator.validate(flip_id)
