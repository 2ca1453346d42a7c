"""A deterministic miniature relational engine used as the flip-analysis
verification target.

The planner and executor route every heuristic decision through
flipcore.flip_point with the fixed ids below, so a campaign can flip each
decision from the environment without recompiling anything. Several of the
heuristics are deliberately miscalibrated; the campaign exists to find them.
"""

from .data import (
    ColumnSpec,
    Database,
    DatasetSpec,
    LoadError,
    Table,
    TableSpec,
    generate_dataset,
    load_database,
)
from .digest import ResultDigest, fnv1a64, result_digest
from .executor import ExecStats, execute_plan
from .planner import PlanError, estimate_cost, explain, plan
from .sql import ColumnRef, JoinClause, Predicate, QueryAst, SqlError, parse_query

# Fixed flip-point ids baked into the planner and executor. The campaign
# treats this as the engine's site manifest.
BUILTIN_FLIP_POINTS = {
    1: "join algorithm: nested loop when the inner side estimate is small",
    2: "predicate pushdown: skipped when a join is present with several predicates",
    3: "limit early termination: disabled when a limit sits above a join",
    4: "hash join build side: build on the left when its estimate is not larger",
    5: "hash probe recheck: verify key equality after a bucket match",
    6: "pushed filter placement: merge pushed predicates into one filter",
}

__all__ = [
    "BUILTIN_FLIP_POINTS",
    "ColumnRef",
    "ColumnSpec",
    "Database",
    "DatasetSpec",
    "ExecStats",
    "JoinClause",
    "LoadError",
    "PlanError",
    "Predicate",
    "QueryAst",
    "ResultDigest",
    "SqlError",
    "Table",
    "TableSpec",
    "estimate_cost",
    "execute_plan",
    "explain",
    "fnv1a64",
    "generate_dataset",
    "load_database",
    "parse_query",
    "plan",
    "result_digest",
]
