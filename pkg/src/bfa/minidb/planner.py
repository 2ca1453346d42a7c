"""Heuristic planner with every decision routed through a flip point.

Flip ids are fixed: 1 join algorithm, 2 predicate pushdown, 3 limit early
termination, 4 hash build side, 6 pushed filter placement (5 lives in the
executor). Some of the heuristics are deliberately miscalibrated; see the
module docstring of bfa.minidb.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple, Union

from ..errors import BfaError
from ..flipcore import NO_FLIP, CoverageSink, FlipSelection, flip_point
from .data import Database
from .sql import ColumnRef, Predicate, QueryAst

NL_INNER_ROW_THRESHOLD = 1000  # deliberately loose; a calibrated engine uses ~100
FILTER_SELECTIVITY_DIVISOR = 10  # each predicate keeps about a tenth of its input


class PlanError(BfaError):
    """Semantic error: unknown or ambiguous tables/columns, bad join keys."""


@dataclass
class SeqScan:
    table: str
    est_rows: int = field(default=0, compare=False)
    est_cost: int = field(default=0, compare=False)


@dataclass
class Filter:
    child: "PlanNode"
    predicates: Tuple[Predicate, ...]
    est_rows: int = field(default=0, compare=False)
    est_cost: int = field(default=0, compare=False)


@dataclass
class NestedLoopJoin:
    left: "PlanNode"
    right: "PlanNode"
    left_key: ColumnRef
    right_key: ColumnRef
    est_rows: int = field(default=0, compare=False)
    est_cost: int = field(default=0, compare=False)


@dataclass
class HashJoin:
    left: "PlanNode"
    right: "PlanNode"
    left_key: ColumnRef
    right_key: ColumnRef
    build_side: str  # "left" or "right"
    est_rows: int = field(default=0, compare=False)
    est_cost: int = field(default=0, compare=False)


@dataclass
class Project:
    child: "PlanNode"
    star: bool
    columns: Tuple[ColumnRef, ...]
    est_rows: int = field(default=0, compare=False)
    est_cost: int = field(default=0, compare=False)


@dataclass
class Limit:
    child: "PlanNode"
    n: int
    early_stop: bool
    est_rows: int = field(default=0, compare=False)
    est_cost: int = field(default=0, compare=False)


PlanNode = Union[SeqScan, Filter, NestedLoopJoin, HashJoin, Project, Limit]


def _ceil_div(a: int, b: int) -> int:
    return -(-a // b)


def estimate_cost(node: PlanNode, stats: Dict[str, int]) -> Tuple[int, int]:
    """Annotate node (and its subtree) with est_rows/est_cost; return both.

    Integer arithmetic throughout; the per-predicate selectivity fold is an
    integer ceiling so estimates never drift with float rounding.
    """
    if isinstance(node, SeqScan):
        rows = stats[node.table]
        cost = rows
    elif isinstance(node, Filter):
        rows, child_cost = estimate_cost(node.child, stats)
        cost = child_cost + rows
        for _ in node.predicates:
            rows = _ceil_div(rows, FILTER_SELECTIVITY_DIVISOR)
    elif isinstance(node, NestedLoopJoin):
        l_rows, l_cost = estimate_cost(node.left, stats)
        r_rows, r_cost = estimate_cost(node.right, stats)
        rows = min(l_rows, r_rows)
        cost = l_cost + r_cost + l_rows * r_rows
    elif isinstance(node, HashJoin):
        l_rows, l_cost = estimate_cost(node.left, stats)
        r_rows, r_cost = estimate_cost(node.right, stats)
        rows = min(l_rows, r_rows)
        # build_rows + probe_rows is l_rows + r_rows whichever side builds
        cost = l_cost + r_cost + l_rows + r_rows + rows
    elif isinstance(node, Project):
        rows, cost = estimate_cost(node.child, stats)
    elif isinstance(node, Limit):
        child_rows, child_cost = estimate_cost(node.child, stats)
        rows = min(node.n, child_rows)
        if node.early_stop:
            # Early termination reads roughly rows/child_rows of the input.
            cost = _ceil_div(child_cost * rows, max(1, child_rows))
        else:
            cost = child_cost
    else:
        raise TypeError("not a plan node: %r" % (node,))
    node.est_rows = rows
    node.est_cost = cost
    return rows, cost


@dataclass
class _Scope:
    """Column resolution over the tables a query mentions."""

    db: Database
    tables: List[str]

    def resolve(self, ref: ColumnRef, among: Optional[List[str]] = None) -> ColumnRef:
        candidates = self.tables if among is None else among
        if ref.table is not None:
            if ref.table not in candidates:
                raise PlanError("unknown table %r in column %s" % (ref.table, ref))
            if not self._has_column(ref.table, ref.column):
                raise PlanError("unknown column %s" % ref)
            return ref
        owners = [t for t in candidates if self._has_column(t, ref.column)]
        if not owners:
            raise PlanError("unknown column %r" % ref.column)
        if len(owners) > 1:
            raise PlanError(
                "ambiguous column %r (in tables %s)" % (ref.column, ", ".join(owners))
            )
        return ColumnRef(owners[0], ref.column)

    def _has_column(self, table: str, column: str) -> bool:
        return any(c == column for c, _ in self.db.tables[table].schema)


def _make_scan(
    table: str,
    pushed: List[Predicate],
    merge_pushed: bool,
    stats: Dict[str, int],
) -> PlanNode:
    node: PlanNode = SeqScan(table)
    estimate_cost(node, stats)
    if pushed:
        if merge_pushed:
            node = Filter(node, tuple(pushed))
            estimate_cost(node, stats)
        else:
            for pred in pushed:
                node = Filter(node, (pred,))
                estimate_cost(node, stats)
    return node


def plan(
    ast: QueryAst,
    db: Database,
    selection: FlipSelection = NO_FLIP,
    coverage: Optional[CoverageSink] = None,
) -> PlanNode:
    """Build the left-deep plan for ast, in query order.

    Decision points run through flip_point, so the same ast and database
    yield different plans under different flip selections, and coverage
    records exactly the decisions this query reached.
    """
    stats = db.stats
    scope_tables = [ast.base] + [j.table for j in ast.joins]
    for t in scope_tables:
        if t not in db.tables:
            raise PlanError("unknown table %r" % t)
    if len(set(scope_tables)) != len(scope_tables):
        raise PlanError("a table appears more than once (self-joins unsupported)")
    scope = _Scope(db, scope_tables)

    predicates = [
        Predicate(scope.resolve(p.column), p.op, p.value) for p in ast.predicates
    ]
    projections = tuple(scope.resolve(c) for c in ast.projections)

    has_join = bool(ast.joins)
    num_preds = len(predicates)

    # FP2: planted over-conservatism; pushdown is skipped for exactly the
    # queries where it pays off most.
    skip_pushdown = flip_point(2, has_join and num_preds > 1, selection, coverage)

    pushed_by_table: Dict[str, List[Predicate]] = {}
    merge_pushed = True
    if not skip_pushdown and predicates:
        for pred in predicates:
            pushed_by_table.setdefault(pred.column.table, []).append(pred)
        if has_join:
            # FP6: one filter per scan, or a stack of single-predicate
            # filters. Work is identical; the stack only looks pricier.
            merge_pushed = flip_point(6, True, selection, coverage)

    node = _make_scan(
        ast.base, pushed_by_table.get(ast.base, []), merge_pushed, stats
    )
    joined = [ast.base]
    for join in ast.joins:
        right = _make_scan(
            join.table, pushed_by_table.get(join.table, []), merge_pushed, stats
        )
        left_key, right_key = _resolve_join_keys(scope, joined, join)
        # FP1: planted threshold; mid-size inner tables wrongly get nested
        # loops because 1000 is far above the calibrated crossover.
        use_nested = flip_point(
            1, right.est_rows < NL_INNER_ROW_THRESHOLD, selection, coverage
        )
        if use_nested:
            node = NestedLoopJoin(node, right, left_key, right_key)
        else:
            # FP4: benign either way on bundled data.
            build_left = flip_point(
                4, node.est_rows <= right.est_rows, selection, coverage
            )
            node = HashJoin(
                node, right, left_key, right_key,
                build_side="left" if build_left else "right",
            )
        estimate_cost(node, stats)
        joined.append(join.table)

    if skip_pushdown and predicates:
        node = Filter(node, tuple(predicates))
        estimate_cost(node, stats)

    node = Project(node, ast.star, projections)
    estimate_cost(node, stats)

    # FP3: planted pessimism; stopping after LIMIT is always safe here (no
    # ORDER BY in the grammar) yet is disabled exactly under joins.
    disable_early_stop = flip_point(
        3, ast.limit is not None and has_join, selection, coverage
    )
    if ast.limit is not None:
        node = Limit(node, ast.limit, early_stop=not disable_early_stop)
        estimate_cost(node, stats)
    return node


def _resolve_join_keys(
    scope: _Scope, joined: List[str], join
) -> Tuple[ColumnRef, ColumnRef]:
    """Normalize ON a = b so the first key binds to the accumulated left
    side and the second to the newly joined table."""
    new_table = [join.table]
    first, second = join.left, join.right
    try:
        left_key = scope.resolve(first, among=joined)
        right_key = scope.resolve(second, among=new_table)
    except PlanError:
        try:
            left_key = scope.resolve(second, among=joined)
            right_key = scope.resolve(first, among=new_table)
        except PlanError:
            raise PlanError(
                "join on %s = %s must relate the joined table %r to an "
                "earlier table" % (join.left, join.right, join.table)
            ) from None
    return left_key, right_key


# ── Rendering ────────────────────────────────────────────────────────────────


def _format_value(value: Union[int, str]) -> str:
    return "'%s'" % value if isinstance(value, str) else str(value)


def _format_predicate(pred: Predicate) -> str:
    return "%s %s %s" % (pred.column, pred.op, _format_value(pred.value))


def _node_detail(node: PlanNode) -> Tuple[str, str]:
    if isinstance(node, SeqScan):
        return "SeqScan", node.table
    if isinstance(node, Filter):
        return "Filter", " AND ".join(_format_predicate(p) for p in node.predicates)
    if isinstance(node, NestedLoopJoin):
        return "NestedLoopJoin", "%s = %s" % (node.left_key, node.right_key)
    if isinstance(node, HashJoin):
        return "HashJoin", "%s = %s, build=%s" % (
            node.left_key, node.right_key, node.build_side,
        )
    if isinstance(node, Project):
        detail = "*" if node.star else ", ".join(str(c) for c in node.columns)
        return "Project", detail
    if isinstance(node, Limit):
        return "Limit", "%d, early_stop=%s" % (node.n, "on" if node.early_stop else "off")
    raise TypeError("not a plan node: %r" % (node,))


def _children(node: PlanNode) -> Tuple[PlanNode, ...]:
    if isinstance(node, (Filter, Project, Limit)):
        return (node.child,)
    if isinstance(node, (NestedLoopJoin, HashJoin)):
        return (node.left, node.right)
    return ()


def render_plan(root: PlanNode) -> str:
    lines: List[str] = []

    def walk(node: PlanNode, depth: int) -> None:
        kind, detail = _node_detail(node)
        lines.append(
            "%s%s(%s) rows=%d cost=%d"
            % ("  " * depth, kind, detail, node.est_rows, node.est_cost)
        )
        for child in _children(node):
            walk(child, depth + 1)

    walk(root, 0)
    lines.append("Total cost: %d" % root.est_cost)
    return "\n".join(lines) + "\n"


def explain(
    ast: QueryAst,
    db: Database,
    selection: FlipSelection = NO_FLIP,
    coverage: Optional[CoverageSink] = None,
) -> str:
    """Plan under the given selection and render the tree, byte-stable."""
    return render_plan(plan(ast, db, selection, coverage))
