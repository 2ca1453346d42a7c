"""Tests for the C source scanner, rewriter, and tree instrumentation."""

from __future__ import annotations

import json
import re
import time
from pathlib import Path

import pytest

from bfa.flipcore import FlipEnv
from bfa.instrument import (
    BACKUP_DIR_NAME,
    MANIFEST_FILE_NAME,
    SHIM_FILE_NAME,
    BranchSite,
    InstrumentError,
    Manifest,
    SourceScanError,
    emit_runtime_shim,
    instrument_tree,
    load_manifest,
    rewrite_source,
    scan_branch_sites,
)

CASES = Path(__file__).parent / "fixtures" / "cases"


def fixture_sources():
    return sorted(p for p in CASES.glob("*.c") if not p.name.endswith(".expected.c"))


def strip_wrappers(text: str, sites) -> str:
    """Undo the rewrite by exact reconstruction of each site's guard."""
    for site in sites:
        wrapped = "((%s) ^ (__bfa_log(%d) && (__bfa_flip_id() == %d)))" % (
            site.condition_text,
            site.id,
            site.id,
        )
        assert text.count(wrapped) == 1, "site %d guard not unique" % site.id
        text = text.replace(wrapped, site.condition_text, 1)
    return text


class TestScanner:
    def test_positions_and_conditions(self):
        source = 'int f(int x) {\n    if (x > 0) return 1;\n    return 0;\n}\n'
        sites, next_id = scan_branch_sites(source, "f.c")
        assert next_id == 2
        (site,) = sites
        assert site == BranchSite(
            id=1, file="f.c", line=2, column=5, condition_text="x > 0"
        )

    def test_start_id_continues_numbering(self):
        source = "void g(void) { if (a) { } if (b) { } }\n"
        sites, next_id = scan_branch_sites(source, "g.c", start_id=7)
        assert [s.id for s in sites] == [7, 8]
        assert next_id == 9

    def test_ignores_comments_strings_and_directives(self):
        source = (
            '#define IF_MACRO if (0) {}\n'
            '// if (one)\n'
            '/* if (two) */\n'
            'const char *s = "if (three)";\n'
            "char c = 'i';\n"
            "void h(void) { if (real) { } }\n"
        )
        sites, _ = scan_branch_sites(source, "h.c")
        assert [s.condition_text for s in sites] == ["real"]

    def test_if_with_no_paren_is_not_a_site(self):
        sites, _ = scan_branch_sites("int if_total = 3; // trailing if\n", "i.c")
        assert sites == []

    def test_unbalanced_condition_is_an_error(self):
        with pytest.raises(SourceScanError) as err:
            scan_branch_sites("void f(void) { if ((a && b) { } }\n", "bad.c")
        assert "bad.c" in str(err.value)
        assert "unbalanced" in str(err.value)

    def test_unterminated_block_comment_is_an_error(self):
        with pytest.raises(SourceScanError) as err:
            scan_branch_sites("/* if (x) never closes\n", "c.c")
        assert "unterminated block comment" in str(err.value)


class TestRewrite:
    def test_spec_shaped_wrapping(self):
        source = "if (x > 0) y = 1;\n"
        sites, _ = scan_branch_sites(source, "w.c", start_id=7)
        out = rewrite_source(source, sites)
        assert out == (
            "if (((x > 0) ^ (__bfa_log(7) && (__bfa_flip_id() == 7)))) y = 1;\n"
        )

    def test_refuses_already_instrumented_text(self):
        source = "if (((x) ^ (__bfa_log(1) && (__bfa_flip_id() == 1)))) { }\n"
        with pytest.raises(InstrumentError):
            rewrite_source(source, [])

    def test_refuses_stale_site_list(self):
        source = "void f(void) { if (a) { } }\n"
        sites, _ = scan_branch_sites(source, "f.c")
        tampered = [
            BranchSite(
                id=sites[0].id,
                file=sites[0].file,
                line=sites[0].line,
                column=sites[0].column,
                condition_text="b",
            )
        ]
        with pytest.raises(InstrumentError):
            rewrite_source(source, tampered)

    def test_noop_on_empty_site_list(self):
        assert rewrite_source("int x;\n", []) == "int x;\n"


class TestGoldenCorpus:
    def test_corpus_is_big_enough(self):
        assert len(fixture_sources()) >= 12

    def test_rewrites_match_expected_bytes(self):
        for source_path in fixture_sources():
            text = source_path.read_text(encoding="utf-8")
            sites, _ = scan_branch_sites(text, source_path.name)
            got = rewrite_source(text, sites)
            want = (CASES / (source_path.stem + ".expected.c")).read_text(
                encoding="utf-8"
            )
            assert got == want, "rewrite differs for %s" % source_path.name

    def test_strip_wrappers_recovers_original(self):
        for source_path in fixture_sources():
            text = source_path.read_text(encoding="utf-8")
            sites, _ = scan_branch_sites(text, source_path.name)
            assert strip_wrappers(rewrite_source(text, sites), sites) == text

    def test_naive_count_agrees_on_plain_fixtures(self):
        # These fixtures keep `if` out of strings, comments, and directives,
        # so a dumb textual count is an independent check on the scanner.
        plain = ["simple.c", "else_chain.c", "nested.c", "operators.c",
                 "pointers.c", "macro_args.c", "no_sites.c"]
        for name in plain:
            text = (CASES / name).read_text(encoding="utf-8")
            naive = len(re.findall(r"(?<![A-Za-z0-9_])if\s*\(", text))
            sites, _ = scan_branch_sites(text, name)
            assert len(sites) == naive, name


class TestInstrumentTree:
    def test_ids_run_across_files_in_path_order(self, fixture_tree):
        manifest = instrument_tree(fixture_tree, ["*.c"])
        ids = [s.id for s in manifest.sites]
        assert ids == list(range(1, len(ids) + 1))
        files = [s.file for s in manifest.sites]
        assert files == sorted(files)

    def test_backups_preserve_original_bytes(self, fixture_tree):
        originals = {
            p.name: p.read_bytes() for p in sorted(fixture_tree.glob("*.c"))
        }
        manifest = instrument_tree(fixture_tree, ["*.c"])
        files_with_sites = {s.file for s in manifest.sites}
        backup = fixture_tree / BACKUP_DIR_NAME
        for name, blob in originals.items():
            changed = (fixture_tree / name).read_bytes() != blob
            assert changed == (name in files_with_sites)
            if changed:
                assert (backup / name).read_bytes() == blob
            else:
                assert not (backup / name).exists()

    def test_writes_shim_and_manifest(self, fixture_tree):
        manifest = instrument_tree(fixture_tree, ["*.c"])
        assert (fixture_tree / SHIM_FILE_NAME).exists()
        manifest_path = fixture_tree / MANIFEST_FILE_NAME
        assert manifest_path.exists()
        loaded = load_manifest(manifest_path)
        assert loaded.sites == manifest.sites
        assert loaded.env == FlipEnv()
        doc = json.loads(manifest_path.read_text())
        assert doc["flip_var"] == "BFA_FLIP"
        assert doc["shim"] == SHIM_FILE_NAME

    def test_second_run_refuses(self, fixture_tree):
        instrument_tree(fixture_tree, ["*.c"])
        with pytest.raises(InstrumentError):
            instrument_tree(fixture_tree, ["*.c"])

    def test_scan_error_leaves_tree_untouched(self, tmp_path):
        tree = tmp_path / "tree"
        tree.mkdir()
        (tree / "ok.c").write_text("void f(void) { if (a) { } }\n")
        (tree / "zz_bad.c").write_text("void g(void) { if ((a { } }\n")
        before = {p.name: p.read_bytes() for p in tree.iterdir()}
        with pytest.raises(SourceScanError):
            instrument_tree(tree, ["*.c"])
        after = {p.name: p.read_bytes() for p in tree.iterdir()}
        assert after == before
        assert not (tree / BACKUP_DIR_NAME).exists()

    def test_custom_env_names_flow_to_shim_and_manifest(self, tmp_path):
        tree = tmp_path / "tree"
        tree.mkdir()
        (tree / "m.c").write_text("void f(void) { if (a) { } }\n")
        env = FlipEnv(flip_var_name="MY_FLIP", coverage_path_var_name="MY_COV")
        instrument_tree(tree, ["*.c"], env)
        shim = (tree / SHIM_FILE_NAME).read_text()
        assert 'getenv("MY_FLIP")' in shim
        assert 'getenv("MY_COV")' in shim
        assert load_manifest(tree / MANIFEST_FILE_NAME).env == env

    def test_missing_root_rejected(self, tmp_path):
        with pytest.raises(InstrumentError):
            instrument_tree(tmp_path / "nope", ["*.c"])


class TestManifestRoundTrip:
    def test_json_round_trip_preserves_sites(self, tmp_path):
        sites = [
            BranchSite(id=1, file="a.c", line=3, column=5, condition_text="x || y"),
            BranchSite(id=2, file="b/c.c", line=9, column=1, condition_text="n<2"),
        ]
        manifest = Manifest(
            sites=sites,
            env=FlipEnv(),
            instrumented_root=str(tmp_path),
            tool_version="0.1.0",
            shim_file=SHIM_FILE_NAME,
        )
        path = tmp_path / MANIFEST_FILE_NAME
        path.write_text(manifest.to_json())
        loaded = load_manifest(path)
        assert loaded.sites == sites
        assert loaded.shim_file == SHIM_FILE_NAME
        assert Path(loaded.instrumented_root) == tmp_path


def test_emit_runtime_shim_writes_c89_source(tmp_path):
    path = emit_runtime_shim(tmp_path)
    text = path.read_text()
    assert path.name == SHIM_FILE_NAME
    assert "__bfa_flip_id" in text and "__bfa_log" in text
    assert "//" not in text  # C89: block comments only


def test_golden_corpus_runs_fast():
    started = time.monotonic()
    for source_path in fixture_sources():
        text = source_path.read_text(encoding="utf-8")
        sites, _ = scan_branch_sites(text, source_path.name)
        rewrite_source(text, sites)
    assert time.monotonic() - started < 5.0
