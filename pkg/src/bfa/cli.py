"""The bfa command line.

Subcommands: instrument (rewrite a C-like tree and emit manifest + shim),
campaign (run the flip campaign from a config file), validate (differential
suite for one flip), gen (deterministic dataset generation), explain-diff
(baseline vs flipped plan diff).

Exit codes: 0 success or no issues, 1 issues found (campaign) or plans
differ (explain-diff) or validation failed (validate), 2 usage or config
error, 3 target or runtime error.
"""

from __future__ import annotations

import argparse
import difflib
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .adapter import make_target
from .campaign import (
    load_campaign_config,
    manifest_info,
    run_campaign,
    validate_functionality,
)
from .errors import BfaError, ConfigError
from .flipcore import NO_FLIP, FlipEnv, FlipSelection
from .instrument import instrument_tree
from .minidb import DatasetSpec, generate_dataset
from .report import build_issues, format_issue_count, write_campaign_outputs

logger = logging.getLogger(__name__)


def _setup_logging(verbosity: int) -> None:
    level = logging.WARNING
    if verbosity == 1:
        level = logging.INFO
    elif verbosity >= 2:
        level = logging.DEBUG
    logging.basicConfig(
        stream=sys.stderr, level=level, format="%(levelname)s %(name)s: %(message)s"
    )


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bfa", description="Branch-flip analysis toolkit."
    )
    parser.add_argument("--version", action="version", version="bfa %s" % __version__)
    parser.add_argument(
        "-v", "--verbose", action="count", default=0, help="log more (-vv for debug)"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_inst = sub.add_parser("instrument", help="rewrite if conditions under a tree")
    p_inst.add_argument("--root", required=True, help="directory to instrument in place")
    p_inst.add_argument(
        "--include",
        action="append",
        required=True,
        help="glob relative to root, repeatable (e.g. '**/*.c')",
    )
    p_inst.add_argument("--flip-var", default=None, help="override the flip env var name")
    p_inst.add_argument(
        "--coverage-var", default=None, help="override the coverage env var name"
    )
    p_inst.set_defaults(func=_cmd_instrument)

    p_camp = sub.add_parser("campaign", help="run a flip campaign")
    p_camp.add_argument("--config", required=True, help="campaign TOML file")
    p_camp.add_argument("--out", required=True, help="output directory")
    p_camp.set_defaults(func=_cmd_campaign)

    p_val = sub.add_parser("validate", help="differential-validate one flip id")
    p_val.add_argument("--config", required=True, help="campaign TOML file")
    p_val.add_argument("--flip", required=True, type=int, help="flip id to validate")
    p_val.set_defaults(func=_cmd_validate)

    p_gen = sub.add_parser("gen", help="generate a dataset from a spec file")
    p_gen.add_argument("--spec", required=True, help="dataset spec JSON")
    p_gen.add_argument("--out", required=True, help="directory for the CSV files")
    p_gen.set_defaults(func=_cmd_gen)

    p_diff = sub.add_parser(
        "explain-diff", help="diff baseline vs flipped plans for one query"
    )
    p_diff.add_argument("--config", required=True, help="campaign TOML file")
    p_diff.add_argument("--flip", required=True, type=int, help="flip id")
    source = p_diff.add_mutually_exclusive_group(required=True)
    source.add_argument("--query", help="SQL text")
    source.add_argument("--query-file", help="file containing the SQL text")
    p_diff.set_defaults(func=_cmd_explain_diff)

    return parser


def _cmd_instrument(args) -> int:
    root = Path(args.root)
    if not root.is_dir():
        raise ConfigError("--root %s is not a directory" % root)
    env = FlipEnv()
    if args.flip_var or args.coverage_var:
        env = FlipEnv(
            flip_var_name=args.flip_var or env.flip_var_name,
            coverage_path_var_name=args.coverage_var or env.coverage_path_var_name,
        )
    manifest = instrument_tree(root, args.include, env)
    file_count = len({s.file for s in manifest.sites})
    print(
        "instrumented %d sites across %d files" % (len(manifest.sites), file_count)
    )
    print("manifest: %s" % (root / "bfa-manifest.json"))
    print("shim: %s" % (root / manifest.shim_file))
    return 0


def _cmd_campaign(args) -> int:
    config = load_campaign_config(args.config)
    result = run_campaign(config)
    _ids, _size, sites = manifest_info(config)
    paths = write_campaign_outputs(result, args.out, sites)
    issue_count = len(build_issues(result, sites))
    print(format_issue_count(issue_count))
    print("report: %s" % paths["report"])
    return 1 if issue_count else 0


def _cmd_validate(args) -> int:
    config = load_campaign_config(args.config)
    if args.flip < 1:
        raise ConfigError("--flip must be a positive id")
    target = make_target(config.target)
    verdict = validate_functionality(target, args.flip, config.validation_dir)
    print("flip %d: %s" % (args.flip, verdict.describe()))
    return 0 if verdict.passed else 1


def _cmd_gen(args) -> int:
    spec_path = Path(args.spec)
    try:
        doc = json.loads(spec_path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError("spec file %s does not exist" % spec_path) from None
    except json.JSONDecodeError as exc:
        raise ConfigError("%s: %s" % (spec_path, exc)) from exc
    try:
        spec = DatasetSpec.from_json_dict(doc)
    except (KeyError, TypeError) as exc:
        raise ConfigError("%s: missing or bad field %s" % (spec_path, exc)) from exc
    written = generate_dataset(spec, args.out)
    for path in written:
        print(path)
    return 0


def _cmd_explain_diff(args) -> int:
    config = load_campaign_config(args.config)
    if args.flip < 1:
        raise ConfigError("--flip must be a positive id")
    if args.query_file is not None:
        sql = Path(args.query_file).read_text(encoding="utf-8").strip()
    else:
        sql = args.query
    target = make_target(config.target)
    baseline = target.explain(NO_FLIP, sql)
    flipped = target.explain(FlipSelection(args.flip), sql)
    base_text = baseline.explain_text or ""
    flip_text = flipped.explain_text or ""
    print("baseline plan:")
    print(base_text, end="" if base_text.endswith("\n") else "\n")
    print("flipped plan (flip %d):" % args.flip)
    print(flip_text, end="" if flip_text.endswith("\n") else "\n")
    if base_text == flip_text:
        print("plans identical")
        return 0
    print("diff:")
    for line in difflib.unified_diff(
        base_text.splitlines(),
        flip_text.splitlines(),
        fromfile="baseline",
        tofile="flip-%d" % args.flip,
        lineterm="",
    ):
        print(line)
    return 1


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    _setup_logging(args.verbose)
    try:
        return args.func(args)
    except ConfigError as exc:
        print("bfa: config error: %s" % exc, file=sys.stderr)
        return 2
    except (BfaError, OSError) as exc:
        print("bfa: error: %s" % exc, file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
