"""Source-to-source rewriter for C-like code.

Finds every `if (...)` statement with a lexical scan (comments, string and
character literals, and preprocessor directive lines are skipped; no real C
parsing), wraps each condition in the XOR flip guard with a unique id, and
emits a manifest plus a self-contained C runtime shim so the target compiles
once and every flip is reachable through the environment.

The emitted guard for site N is, byte for byte:

    ((C) ^ (__bfa_log(N) && (__bfa_flip_id() == N)))

where C is the verbatim original condition. `__bfa_log` always returns 1, so
an unselected run evaluates to exactly C.
"""

from __future__ import annotations

import json
import logging
import os
import shutil
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

from . import __version__ as TOOL_VERSION
from .errors import BfaError
from .flipcore import FlipEnv

logger = logging.getLogger(__name__)

BACKUP_DIR_NAME = ".bfa-backup"
MANIFEST_FILE_NAME = "bfa-manifest.json"
SHIM_FILE_NAME = "bfa_shim.c"

_IDENT_START = set("ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz_")
_IDENT_CHARS = _IDENT_START | set("0123456789")


class SourceScanError(BfaError):
    """Lexical trouble: unterminated literal/comment or unbalanced parens."""

    def __init__(self, file: str, line: int, message: str):
        super().__init__("%s:%d: %s" % (file, line, message))
        self.file = file
        self.line = line


class InstrumentError(BfaError):
    """Rewrite or tree-level instrumentation failure."""


@dataclass(frozen=True)
class BranchSite:
    """One instrumentable `if` condition."""

    id: int
    file: str
    line: int
    column: int
    condition_text: str


@dataclass
class Manifest:
    """Everything a campaign needs to know about an instrumented tree."""

    sites: List[BranchSite]
    env: FlipEnv
    instrumented_root: str
    tool_version: str
    shim_file: str

    def site_ids(self) -> set:
        return {s.id for s in self.sites}

    def to_json(self) -> str:
        doc = {
            "version": self.tool_version,
            "flip_var": self.env.flip_var_name,
            "coverage_var": self.env.coverage_path_var_name,
            "shim": self.shim_file,
            "sites": [
                {
                    "id": s.id,
                    "file": s.file,
                    "line": s.line,
                    "col": s.column,
                    "cond": s.condition_text,
                }
                for s in self.sites
            ],
        }
        return json.dumps(doc, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str, instrumented_root: str = "") -> "Manifest":
        doc = json.loads(text)
        sites = [
            BranchSite(
                id=entry["id"],
                file=entry["file"],
                line=entry["line"],
                column=entry["col"],
                condition_text=entry["cond"],
            )
            for entry in doc["sites"]
        ]
        env = FlipEnv(doc["flip_var"], doc["coverage_var"])
        return cls(sites, env, instrumented_root, doc["version"], doc["shim"])


def load_manifest(path) -> Manifest:
    path = Path(path)
    return Manifest.from_json(
        path.read_text(encoding="utf-8"), instrumented_root=str(path.parent)
    )


# ── Lexical scanner ──────────────────────────────────────────────────────────


@dataclass(frozen=True)
class _RawSite:
    line: int
    column: int
    cond_start: int
    cond_end: int


class _Scanner:
    """Character-level walk that understands just enough C lexing.

    All consumption goes through _advance so line bookkeeping stays correct
    even across escaped newlines inside string literals.
    """

    def __init__(self, text: str, file_label: str):
        self.text = text
        self.n = len(text)
        self.file = file_label
        self.i = 0
        self.line = 1
        self.line_start = 0
        self.head = True  # no non-blank byte seen on this line yet

    # -- cursor plumbing --

    def _error(self, message: str, line: Optional[int] = None):
        raise SourceScanError(self.file, self.line if line is None else line, message)

    def _advance(self) -> None:
        c = self.text[self.i]
        self.i += 1
        if c == "\n":
            self.line += 1
            self.line_start = self.i
            self.head = True
        elif self.head and c not in " \t":
            self.head = False

    def _mark(self) -> Tuple[int, int, int, bool]:
        return (self.i, self.line, self.line_start, self.head)

    def _restore(self, mark: Tuple[int, int, int, bool]) -> None:
        self.i, self.line, self.line_start, self.head = mark

    def _startswith(self, s: str) -> bool:
        return self.text.startswith(s, self.i)

    # -- skippers for non-code regions --

    def _skip_line_comment(self) -> None:
        self._advance()
        self._advance()
        while self.i < self.n and self.text[self.i] != "\n":
            self._advance()

    def _skip_block_comment(self) -> None:
        start_line = self.line
        self._advance()
        self._advance()
        while self.i < self.n:
            if self._startswith("*/"):
                self._advance()
                self._advance()
                return
            self._advance()
        self._error("unterminated block comment", start_line)

    def _skip_quoted(self, quote: str) -> None:
        start_line = self.line
        kind = "string" if quote == '"' else "character"
        self._advance()
        while self.i < self.n:
            c = self.text[self.i]
            if c == "\\":
                self._advance()
                if self.i < self.n:
                    self._advance()  # escaped char; may be a line continuation
                continue
            if c == quote:
                self._advance()
                return
            if c == "\n":
                self._error("unterminated %s literal" % kind, start_line)
            self._advance()
        self._error("unterminated %s literal" % kind, start_line)

    def _skip_directive(self) -> None:
        # Strictly line-based: tokens up to the newline are invisible.
        while self.i < self.n and self.text[self.i] != "\n":
            self._advance()

    def _try_skip_noncode(self) -> bool:
        c = self.text[self.i]
        if c == "/" and self._startswith("//"):
            self._skip_line_comment()
            return True
        if c == "/" and self._startswith("/*"):
            self._skip_block_comment()
            return True
        if c == '"' or c == "'":
            self._skip_quoted(c)
            return True
        if c == "#" and self.head:
            self._skip_directive()
            return True
        return False

    # -- the scan proper --

    def scan(self) -> List[_RawSite]:
        sites: List[_RawSite] = []
        while self.i < self.n:
            if self._try_skip_noncode():
                continue
            c = self.text[self.i]
            if c in _IDENT_START:
                kw_line = self.line
                kw_col = self.i - self.line_start + 1
                start = self.i
                while self.i < self.n and self.text[self.i] in _IDENT_CHARS:
                    self._advance()
                if self.text[start : self.i] == "if":
                    self._maybe_site(kw_line, kw_col, sites)
                continue
            self._advance()
        return sites

    def _maybe_site(self, kw_line: int, kw_col: int, sites: List[_RawSite]) -> None:
        mark = self._mark()
        while self.i < self.n:
            c = self.text[self.i]
            if c in " \t\r\n":
                self._advance()
                continue
            if c == "/" and (self._startswith("//") or self._startswith("/*")):
                self._try_skip_noncode()
                continue
            if c == "#" and self.head:
                self._skip_directive()
                continue
            break
        if self.i >= self.n or self.text[self.i] != "(":
            # `if` not followed by a parenthesized condition; not a site.
            self._restore(mark)
            return
        self._advance()  # consume '('
        inside = self._mark()
        cond_start = self.i
        depth = 1
        while self.i < self.n:
            if self._try_skip_noncode():
                continue
            c = self.text[self.i]
            if c == "(":
                depth += 1
            elif c == ")":
                depth -= 1
                if depth == 0:
                    sites.append(_RawSite(kw_line, kw_col, cond_start, self.i))
                    # Rescan the condition interior so any `if` hiding in a
                    # statement expression still gets its own site.
                    self._restore(inside)
                    return
            self._advance()
        self._error("unbalanced parentheses in if condition", kw_line)


# ── Public operations ────────────────────────────────────────────────────────


def scan_branch_sites(
    source_text: str, file, start_id: int = 1
) -> Tuple[List[BranchSite], int]:
    """Find every `if (...)` site in source order; ids run from start_id."""
    raw = _Scanner(source_text, str(file)).scan()
    sites = [
        BranchSite(
            id=start_id + k,
            file=str(file),
            line=r.line,
            column=r.column,
            condition_text=source_text[r.cond_start : r.cond_end],
        )
        for k, r in enumerate(raw)
    ]
    return sites, start_id + len(sites)


def _guard_suffix(site_id: int) -> str:
    return ") ^ (__bfa_log(%d) && (__bfa_flip_id() == %d)))" % (site_id, site_id)


def rewrite_source(source_text: str, sites: Sequence[BranchSite]) -> str:
    """Wrap each site's condition in the flip guard, all other bytes intact.

    The sites must come from scan_branch_sites on exactly this text; spans
    are re-derived by rescanning and cross-checked so a stale or foreign
    site list fails loudly instead of corrupting the file.
    """
    if "__bfa_log(" in source_text:
        raise InstrumentError(
            "refusing to rewrite: source already contains __bfa_log( "
            "(instrumenting twice would flip flips)"
        )
    if not sites:
        return source_text

    file_label = sites[0].file
    raw = _Scanner(source_text, file_label).scan()
    if len(raw) != len(sites):
        raise InstrumentError(
            "%s: site list does not match this text (%d sites given, %d found)"
            % (file_label, len(sites), len(raw))
        )
    first_id = sites[0].id
    edits: List[Tuple[int, str]] = []
    for k, (site, r) in enumerate(zip(sites, raw)):
        cond = source_text[r.cond_start : r.cond_end]
        if (
            site.id != first_id + k
            or site.line != r.line
            or site.column != r.column
            or site.condition_text != cond
        ):
            raise InstrumentError(
                "%s: site id=%d does not match this text at line %d"
                % (file_label, site.id, r.line)
            )
        edits.append((r.cond_start, "(("))
        edits.append((r.cond_end, _guard_suffix(site.id)))

    # Point insertions applied in ascending offset order; nested sites (a
    # condition inside a condition) interleave correctly because every
    # original byte keeps its position in the pieces list.
    edits.sort(key=lambda e: e[0])
    pieces: List[str] = []
    last = 0
    for pos, ins in edits:
        pieces.append(source_text[last:pos])
        pieces.append(ins)
        last = pos
    pieces.append(source_text[last:])
    return "".join(pieces)


_SHIM_TEMPLATE = """\
/*
 * Runtime support for branch-flip instrumentation.  C89, self-contained.
 *
 * __bfa_flip_id() parses the flip id from the environment once per process
 * and caches it; unset, empty, or unparseable values mean id 0, which is
 * never assigned to a real site, so nothing flips.  __bfa_log() appends the
 * evaluated site id to the coverage file named by the environment (if any)
 * and always returns 1 so the guard never changes the condition's value.
 */
#include <stdio.h>
#include <stdlib.h>

static long bfa_cached_flip = -1;
static FILE *bfa_cov_stream = NULL;
static int bfa_cov_opened = 0;

long __bfa_flip_id(void)
{
    if (bfa_cached_flip < 0) {
        const char *raw = getenv("%(flip_var)s");
        long parsed = 0;
        if (raw != NULL && raw[0] != '\\0') {
            char *end = NULL;
            parsed = strtol(raw, &end, 10);
            if (end == raw || parsed < 0) {
                parsed = 0;
            }
        }
        bfa_cached_flip = parsed;
    }
    return bfa_cached_flip;
}

int __bfa_log(long id)
{
    if (!bfa_cov_opened) {
        const char *path = getenv("%(cov_var)s");
        bfa_cov_opened = 1;
        if (path != NULL && path[0] != '\\0') {
            bfa_cov_stream = fopen(path, "a");
        }
    }
    if (bfa_cov_stream != NULL) {
        fprintf(bfa_cov_stream, "%%ld\\n", id);
        fflush(bfa_cov_stream);
    }
    return 1;
}
"""


def emit_runtime_shim(dir_path, env: FlipEnv = FlipEnv()) -> Path:
    """Write the C runtime shim into dir_path and return its path."""
    out = Path(dir_path) / SHIM_FILE_NAME
    source = _SHIM_TEMPLATE % {
        "flip_var": env.flip_var_name,
        "cov_var": env.coverage_path_var_name,
    }
    out.write_text(source, encoding="utf-8")
    return out


def instrument_tree(root, include_globs: Sequence[str], env: FlipEnv = FlipEnv()) -> Manifest:
    """Instrument every file matching the globs, in place, atomically.

    Files are processed in lexicographic relative-path order and ids are
    assigned globally 1..n across the tree. Originals go to
    <root>/.bfa-backup/ mirroring relative paths; the shim and manifest are
    written at the root. Any scan or rewrite error aborts before a single
    byte of the tree changes (all rewriting happens in memory first, and
    writes are staged to a temp dir then moved into place).
    """
    root = Path(root)
    if not root.is_dir():
        raise InstrumentError("root %s is not a directory" % root)
    backup_root = root / BACKUP_DIR_NAME
    if backup_root.exists():
        raise InstrumentError(
            "%s exists: tree looks instrumented already (restore from the "
            "backup directory before re-instrumenting)" % backup_root
        )

    matched = set()
    for pattern in include_globs:
        for p in root.glob(pattern):
            if p.is_file():
                rel = p.relative_to(root).as_posix()
                if not rel.startswith(BACKUP_DIR_NAME + "/"):
                    matched.add(rel)
    files = sorted(matched)
    if not files:
        raise InstrumentError("no files matched %r under %s" % (list(include_globs), root))

    # Phase 1: everything in memory; this is where all errors happen.
    next_id = 1
    all_sites: List[BranchSite] = []
    rewrites: List[Tuple[str, bytes, bytes]] = []
    for rel in files:
        raw = (root / rel).read_bytes()
        try:
            text = raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise InstrumentError("%s: not valid UTF-8: %s" % (rel, exc)) from exc
        sites, next_id = scan_branch_sites(text, rel, next_id)
        new_text = rewrite_source(text, sites)
        all_sites.extend(sites)
        if sites:
            rewrites.append((rel, raw, new_text.encode("utf-8")))

    manifest = Manifest(
        sites=all_sites,
        env=env,
        instrumented_root=str(root),
        tool_version=TOOL_VERSION,
        shim_file=SHIM_FILE_NAME,
    )

    # Phase 2: stage, back up, publish.
    stage = Path(tempfile.mkdtemp(prefix=".bfa-stage-", dir=root))
    try:
        staged: List[Tuple[Path, Path]] = []
        for rel, _old, new in rewrites:
            sp = stage / rel
            sp.parent.mkdir(parents=True, exist_ok=True)
            sp.write_bytes(new)
            staged.append((sp, root / rel))
        shim_stage = stage / SHIM_FILE_NAME
        shim_source = _SHIM_TEMPLATE % {
            "flip_var": env.flip_var_name,
            "cov_var": env.coverage_path_var_name,
        }
        shim_stage.write_text(shim_source, encoding="utf-8")
        manifest_stage = stage / MANIFEST_FILE_NAME
        manifest_stage.write_text(manifest.to_json(), encoding="utf-8")

        for rel, old, _new in rewrites:
            bp = backup_root / rel
            bp.parent.mkdir(parents=True, exist_ok=True)
            bp.write_bytes(old)

        for sp, target in staged:
            os.replace(sp, target)
        os.replace(shim_stage, root / SHIM_FILE_NAME)
        os.replace(manifest_stage, root / MANIFEST_FILE_NAME)
    finally:
        shutil.rmtree(stage, ignore_errors=True)

    logger.info(
        "instrumented %d files under %s (%d sites)", len(rewrites), root, len(all_sites)
    )
    return manifest
