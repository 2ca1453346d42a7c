"""Shared fixtures: repo paths, the bundled workload, and golden data."""

from __future__ import annotations

import json
import shutil
import sys
from pathlib import Path

import pytest

REPO_ROOT = Path(__file__).resolve().parent.parent
SRC = REPO_ROOT / "src"
if str(SRC) not in sys.path:
    sys.path.insert(0, str(SRC))


@pytest.fixture(scope="session")
def repo_root() -> Path:
    return REPO_ROOT


@pytest.fixture(scope="session")
def w1_dir(repo_root) -> Path:
    return repo_root / "workloads" / "W1"


@pytest.fixture(scope="session")
def w1_config_path(w1_dir) -> Path:
    return w1_dir / "campaign.toml"


@pytest.fixture(scope="session")
def w1_db(w1_dir):
    from bfa.minidb import load_database

    return load_database(w1_dir / "db")


@pytest.fixture(scope="session")
def golden(repo_root) -> dict:
    path = repo_root / "tests" / "data" / "w1_golden.json"
    return json.loads(path.read_text())


@pytest.fixture(scope="session")
def oracle_tables(w1_dir):
    from bruteforce import load_tables

    return load_tables(w1_dir / "db")


@pytest.fixture()
def tiny_db_dir(tmp_path) -> Path:
    """A three-row, two-table database for hand-countable cases."""
    db = tmp_path / "tinydb"
    db.mkdir()
    (db / "x.csv").write_text(
        "id:int,v:int,tag:text\n1,10,red\n2,20,blue\n9,30,red\n"
    )
    (db / "y.csv").write_text("id:int,x_id:int\n1,1\n2,9\n3,5\n4,1\n")
    return db


@pytest.fixture()
def tiny_db(tiny_db_dir):
    from bfa.minidb import load_database

    return load_database(tiny_db_dir)


@pytest.fixture()
def fixture_tree(tmp_path) -> Path:
    """A copy of the C fixture corpus suitable for in-place instrumentation."""
    cases = REPO_ROOT / "tests" / "fixtures" / "cases"
    tree = tmp_path / "ctree"
    tree.mkdir()
    for path in sorted(cases.glob("*.c")):
        if path.name.endswith(".expected.c"):
            continue
        shutil.copy(path, tree / path.name)
    return tree
