"""Uniform target contract between the campaign and a system under test.

Two implementations: an in-process driver for the bundled engine, and a
generic external-process driver configured with command templates, env
injection, and output-extraction patterns, suitable for instrumented real
binaries. Query text always travels through a temp file substituted at the
{query_file} placeholder, never through shell interpolation.
"""

from __future__ import annotations

import logging
import os
import re
import shlex
import subprocess
import tempfile
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, Mapping, Optional, Tuple

from .errors import BfaError, ConfigError, TargetError
from .flipcore import (
    NO_FLIP,
    CoverageRecord,
    CoverageSink,
    FlipEnv,
    FlipSelection,
    read_coverage_log,
)
from .minidb import (
    LoadError,
    PlanError,
    ResultDigest,
    SqlError,
    execute_plan,
    load_database,
    parse_query,
    result_digest,
)
from .minidb.planner import plan as minidb_plan
from .minidb.planner import render_plan

logger = logging.getLogger(__name__)

DEFAULT_TIMEOUT_S = 60.0

QUERY_FILE_PLACEHOLDER = "{query_file}"


class ParseError(BfaError):
    """Target output did not match the configured extraction pattern."""


class Timeout(BfaError):
    """Target run exceeded the configured timeout."""


@dataclass
class Measurement:
    """One observation of the target.

    Explain measurements carry est_cost and explain_text and no digest;
    execute measurements carry a digest (plus work_units when the target
    reports them). The campaign merges the two shapes per run.
    """

    wall_ms: float
    est_cost: Optional[float] = None
    work_units: Optional[int] = None
    digest: Optional[ResultDigest] = None
    coverage: CoverageRecord = field(default_factory=lambda: CoverageRecord([]))
    explain_text: Optional[str] = None


@dataclass(frozen=True)
class TargetConfig:
    kind: str  # "minidb" or "external"
    # minidb
    db_dir: Optional[str] = None
    # external
    explain_cmd: Optional[str] = None
    execute_cmd: Optional[str] = None
    cost_pattern: Optional[str] = None
    digest_pattern: Optional[str] = None
    work_units_pattern: Optional[str] = None
    workdir: Optional[str] = None
    extra_env: Mapping[str, str] = field(default_factory=dict)
    timeout_s: float = DEFAULT_TIMEOUT_S
    restart_between_flips: bool = True  # both built-in drivers run one process per call
    env: FlipEnv = field(default_factory=FlipEnv)

    def __post_init__(self):
        if self.kind not in ("minidb", "external"):
            raise ConfigError("target kind must be minidb or external, not %r" % self.kind)
        if self.timeout_s <= 0:
            raise ConfigError("timeout_s must be positive")
        if self.kind == "minidb":
            if not self.db_dir:
                raise ConfigError("minidb target needs db_dir")
        else:
            for name, template in (
                ("explain_cmd", self.explain_cmd),
                ("execute_cmd", self.execute_cmd),
            ):
                if not template:
                    raise ConfigError("external target needs %s" % name)
                if QUERY_FILE_PLACEHOLDER not in template:
                    raise ConfigError(
                        "%s must contain the %s placeholder"
                        % (name, QUERY_FILE_PLACEHOLDER)
                    )
            if not self.cost_pattern:
                raise ConfigError("external target needs cost_pattern")
            for name, pattern in (
                ("cost_pattern", self.cost_pattern),
                ("digest_pattern", self.digest_pattern),
                ("work_units_pattern", self.work_units_pattern),
            ):
                if pattern is None:
                    continue
                try:
                    compiled = re.compile(pattern)
                except re.error as exc:
                    raise ConfigError("%s does not compile: %s" % (name, exc)) from exc
                if name != "digest_pattern" and compiled.groups != 1:
                    raise ConfigError("%s needs exactly one capture group" % name)


class MinidbTarget:
    """In-process driver for the bundled engine."""

    def __init__(self, config: TargetConfig):
        self.config = config
        try:
            self.db = load_database(config.db_dir)
        except LoadError as exc:
            raise TargetError("minidb database: %s" % exc) from exc

    def explain(self, selection: FlipSelection, query: str) -> Measurement:
        started = time.perf_counter()
        try:
            root = minidb_plan(parse_query(query), self.db, selection, coverage=None)
        except (SqlError, PlanError) as exc:
            raise TargetError("minidb: %s" % exc, stderr=str(exc)) from exc
        text = render_plan(root)
        wall_ms = (time.perf_counter() - started) * 1000.0
        return Measurement(
            wall_ms=wall_ms, est_cost=float(root.est_cost), explain_text=text
        )

    def execute(
        self, selection: FlipSelection, query: str, coverage_path=None
    ) -> Measurement:
        if coverage_path is not None:
            Path(coverage_path).write_text("", encoding="utf-8")
        sink = CoverageSink()
        try:
            ast = parse_query(query)
            root = minidb_plan(ast, self.db, selection, sink)
            rows, stats = execute_plan(root, self.db, selection, sink)
        except (SqlError, PlanError) as exc:
            raise TargetError("minidb: %s" % exc, stderr=str(exc)) from exc
        if coverage_path is not None:
            sink.write_to(coverage_path)
        return Measurement(
            wall_ms=stats.wall_ms,
            work_units=stats.work_units,
            digest=result_digest(rows),
            coverage=sink.snapshot(),
        )


class ExternalTarget:
    """Drives any target reachable via command templates.

    The child environment is a copy of the parent's with the flip variable
    set (or removed for a baseline run), the coverage variable set only
    when a coverage path is given, and extra_env applied verbatim; the
    parent environment is never touched.
    """

    def __init__(self, config: TargetConfig):
        self.config = config
        self._cost = re.compile(config.cost_pattern)
        self._digest = (
            re.compile(config.digest_pattern) if config.digest_pattern else None
        )
        self._work = (
            re.compile(config.work_units_pattern)
            if config.work_units_pattern
            else None
        )

    def _child_env(
        self, selection: FlipSelection, coverage_path: Optional[str]
    ) -> Dict[str, str]:
        env = dict(os.environ)
        names = self.config.env
        env.pop(names.flip_var_name, None)
        env.pop(names.coverage_path_var_name, None)
        if selection.selected is not None:
            env[names.flip_var_name] = str(selection.selected)
        if coverage_path is not None:
            env[names.coverage_path_var_name] = str(coverage_path)
        env.update(self.config.extra_env)
        return env

    def _run(
        self,
        template: str,
        selection: FlipSelection,
        query: str,
        coverage_path: Optional[str],
    ) -> Tuple[subprocess.CompletedProcess, float]:
        fd, query_file = tempfile.mkstemp(prefix="bfa-query-", suffix=".sql")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as handle:
                handle.write(query + "\n")
            argv = shlex.split(template.replace(QUERY_FILE_PLACEHOLDER, query_file))
            started = time.perf_counter()
            try:
                proc = subprocess.run(
                    argv,
                    cwd=self.config.workdir,
                    env=self._child_env(selection, coverage_path),
                    capture_output=True,
                    text=True,
                    timeout=self.config.timeout_s,
                )
            except subprocess.TimeoutExpired as exc:
                if coverage_path is not None:
                    Path(coverage_path).unlink(missing_ok=True)
                raise Timeout(
                    "target exceeded %.1fs: %s" % (self.config.timeout_s, argv[0])
                ) from exc
            except OSError as exc:
                raise TargetError("cannot run %r: %s" % (argv[0], exc)) from exc
            wall_ms = (time.perf_counter() - started) * 1000.0
        finally:
            try:
                os.unlink(query_file)
            except OSError:
                pass
        if proc.returncode != 0:
            raise TargetError(
                "target exited %d: %s" % (proc.returncode, proc.stderr.strip()),
                exit_code=proc.returncode,
                stderr=proc.stderr,
            )
        return proc, wall_ms

    def explain(self, selection: FlipSelection, query: str) -> Measurement:
        proc, wall_ms = self._run(self.config.explain_cmd, selection, query, None)
        match = self._cost.search(proc.stdout)
        if not match:
            raise ParseError(
                "cost_pattern %r matched nothing in explain output"
                % self.config.cost_pattern
            )
        try:
            est = float(match.group(1))
        except ValueError as exc:
            raise ParseError("cost capture %r is not a number" % match.group(1)) from exc
        return Measurement(wall_ms=wall_ms, est_cost=est, explain_text=proc.stdout)

    def execute(
        self, selection: FlipSelection, query: str, coverage_path=None
    ) -> Measurement:
        if coverage_path is not None:
            Path(coverage_path).write_text("", encoding="utf-8")
        proc, wall_ms = self._run(
            self.config.execute_cmd, selection, query, coverage_path
        )
        digest = self._extract_digest(proc.stdout)
        work_units: Optional[int] = None
        if self._work is not None:
            match = self._work.search(proc.stdout)
            if not match:
                raise ParseError(
                    "work_units_pattern %r matched nothing"
                    % self.config.work_units_pattern
                )
            work_units = int(match.group(1))
        coverage = (
            read_coverage_log(coverage_path)
            if coverage_path is not None
            else CoverageRecord([])
        )
        return Measurement(
            wall_ms=wall_ms,
            work_units=work_units,
            digest=digest,
            coverage=coverage,
        )

    def _extract_digest(self, stdout: str) -> ResultDigest:
        if self._digest is None:
            # No pattern: the target prints one row per line; digest the
            # printed lines as the row serializations.
            return result_digest((line,) for line in stdout.splitlines())
        match = self._digest.search(stdout)
        if not match:
            raise ParseError(
                "digest_pattern %r matched nothing" % self.config.digest_pattern
            )
        groups = match.groupdict()
        if "digest" in groups:
            hex_digest = groups["digest"]
            rows = int(groups["rows"]) if groups.get("rows") else 0
        else:
            hex_digest = match.group(1)
            rows = int(match.group(2)) if match.re.groups >= 2 else 0
        try:
            value = int(hex_digest, 16)
        except ValueError as exc:
            raise ParseError("digest capture %r is not hex" % hex_digest) from exc
        return ResultDigest(digest=value, row_count=rows)


def make_target(config: TargetConfig):
    if config.kind == "minidb":
        return MinidbTarget(config)
    return ExternalTarget(config)


def target_explain(
    config: TargetConfig, selection: FlipSelection, query: str
) -> Measurement:
    return make_target(config).explain(selection, query)


def target_execute(
    config: TargetConfig, selection: FlipSelection, query: str, coverage_path
) -> Measurement:
    return make_target(config).execute(selection, query, coverage_path)


def merge_measurements(explain_m: Measurement, exec_m: Measurement) -> Measurement:
    """Combine an explain and an execute observation of the same run pair."""
    return replace(
        exec_m, est_cost=explain_m.est_cost, explain_text=explain_m.explain_text
    )
