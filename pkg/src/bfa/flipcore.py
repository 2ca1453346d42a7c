"""Run-time flip protocol: selection, XOR flip points, coverage logs.

A run flips at most one branch, chosen through an environment variable.
Every flip point logs its id to a coverage sink whether or not it is the
selected one, then XORs the original condition with the match test, so an
unselected run behaves exactly like an uninstrumented one.

Usage from an engine:

    selection = resolve_flip_env(os.environ, FlipEnv())
    sink = CoverageSink()
    taken = flip_point(3, rows < limit, selection, sink)
"""

from __future__ import annotations

import logging
import threading
from dataclasses import dataclass, field
from typing import Iterable, List, Mapping, Optional

from .errors import ConfigError

logger = logging.getLogger(__name__)


class FlipConfigError(ConfigError):
    """The flip environment variable is set to something unusable."""


class CoverageLogError(ConfigError):
    """A coverage log line could not be parsed as a decimal id."""

    def __init__(self, path: str, line_no: int, content: str):
        super().__init__(
            "%s: line %d: expected a decimal branch id, got %r"
            % (path, line_no, content)
        )
        self.path = path
        self.line_no = line_no


@dataclass(frozen=True)
class FlipEnv:
    """Names of the environment variables the protocol uses."""

    flip_var_name: str = "BFA_FLIP"
    coverage_path_var_name: str = "BFA_COVERAGE_FILE"


@dataclass(frozen=True)
class FlipSelection:
    """The single branch id flipped this run, or None for a baseline run.

    Immutable on purpose: a selection is resolved once per run and shared.
    """

    selected: Optional[int] = None

    def __post_init__(self):
        if self.selected is not None and self.selected < 1:
            raise ValueError("flip ids start at 1; use None for no flip")


NO_FLIP = FlipSelection(None)


@dataclass
class CoverageRecord:
    """Unique branch ids in first-execution order."""

    ids: List[int] = field(default_factory=list)

    def __post_init__(self):
        seen = set()
        for i in self.ids:
            if i < 1:
                raise ValueError("coverage ids must be >= 1, got %r" % (i,))
            if i in seen:
                raise ValueError("duplicate coverage id %r" % (i,))
            seen.add(i)

    def __contains__(self, flip_id: int) -> bool:
        return flip_id in self.ids

    def __len__(self) -> int:
        return len(self.ids)

    def __iter__(self):
        return iter(self.ids)

    def as_set(self) -> set:
        return set(self.ids)


class CoverageSink:
    """In-process coverage collector.

    Buffers ids in memory (deduplicated, first-occurrence order) and writes
    them out once when the run finishes. Appends are thread safe and never
    raise; a failing flush is logged once and suppressed so the hot path
    stays infallible.
    """

    def __init__(self):
        self._lock = threading.Lock()
        self._ids: List[int] = []
        self._seen: set = set()
        self._write_failed = False

    def record(self, flip_id: int) -> None:
        try:
            with self._lock:
                if flip_id not in self._seen:
                    self._seen.add(flip_id)
                    self._ids.append(flip_id)
        except Exception:  # pragma: no cover - defensive, nothing here raises
            pass

    def snapshot(self) -> CoverageRecord:
        with self._lock:
            return CoverageRecord(list(self._ids))

    def write_to(self, path) -> None:
        """Append the buffered ids to `path`, one decimal per line.

        Failures are logged once and suppressed; coverage loss must never
        turn a successful run into a failed one.
        """
        record = self.snapshot()
        try:
            with open(path, "a", encoding="utf-8") as fh:
                for flip_id in record:
                    fh.write("%d\n" % flip_id)
        except OSError as exc:
            if not self._write_failed:
                self._write_failed = True
                logger.warning("could not write coverage log %s: %s", path, exc)


def resolve_flip_env(
    environment: Mapping[str, str], env_names: FlipEnv = FlipEnv()
) -> FlipSelection:
    """Parse the flip selection out of an environment mapping.

    Unset, empty, or "0" mean no flip. Anything that is not a plain decimal
    integer is a configuration error, raised here so it surfaces before any
    query runs.
    """
    raw = environment.get(env_names.flip_var_name)
    if raw is None:
        return NO_FLIP
    value = raw.strip()
    if value == "" or value == "0":
        return NO_FLIP
    if not (value.isascii() and value.isdigit()):
        raise FlipConfigError(
            "%s=%r is not a decimal branch id (or 0/empty for no flip)"
            % (env_names.flip_var_name, raw)
        )
    parsed = int(value)
    if parsed == 0:
        return NO_FLIP
    return FlipSelection(parsed)


def flip_point(
    flip_id: int,
    condition: bool,
    selection: FlipSelection,
    coverage: Optional[CoverageSink] = None,
) -> bool:
    """The instrumentation primitive: log the id, then maybe invert.

    The caller evaluates the original condition first, so its side effects
    are preserved; logging happens whether or not the id matches.
    """
    if coverage is not None:
        coverage.record(flip_id)
    return bool(condition) ^ (selection.selected == flip_id)


def read_coverage_log(path) -> CoverageRecord:
    """Read a coverage file: newline-delimited decimal ids, duplicates ok.

    A missing file yields an empty record with a warning (the run may simply
    have evaluated no flip points). A line that is not a decimal id is an
    error naming the 1-based line number. Interior blank lines are skipped;
    a trailing newline is tolerated by construction.
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            content = fh.read()
    except FileNotFoundError:
        logger.warning("coverage log %s not found; treating as empty", path)
        return CoverageRecord([])

    ids: List[int] = []
    seen = set()
    for line_no, line in enumerate(content.splitlines(), start=1):
        text = line.strip()
        if not text:
            continue
        if not (text.isascii() and text.isdigit()) or int(text) < 1:
            raise CoverageLogError(str(path), line_no, line)
        value = int(text)
        if value not in seen:
            seen.add(value)
            ids.append(value)
    return CoverageRecord(ids)


def coverage_from_ids(ids: Iterable[int]) -> CoverageRecord:
    """Build a record from a possibly-duplicated id sequence."""
    out: List[int] = []
    seen = set()
    for i in ids:
        if i not in seen:
            seen.add(i)
            out.append(i)
    return CoverageRecord(out)
