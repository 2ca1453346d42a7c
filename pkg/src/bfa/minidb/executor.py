"""Pull-based plan execution with deterministic work-unit accounting.

Work units, counted once each:
  one per base-table row scanned, one per predicate evaluated (conjunctions
  short-circuit), one per hash-table insert, one per probe comparison (a
  bucket entry actually compared), one per nested-loop inner comparison,
  one per row leaving the plan root.

The executor holds flip point 5: after a hash bucket matches, the key
equality recheck is guarded by flip_point(5, True). Flipping it emits rows
on bare bucket collisions, which is a planted correctness break (with 8
buckets, bundled data collides constantly).
"""

from __future__ import annotations

import operator
import time
from dataclasses import dataclass
from typing import Callable, Dict, Iterator, List, Optional, Tuple

from ..flipcore import NO_FLIP, CoverageSink, FlipSelection, flip_point
from .data import Database
from .digest import fnv1a64
from .planner import (
    Filter,
    HashJoin,
    Limit,
    NestedLoopJoin,
    PlanNode,
    Project,
    SeqScan,
)
from .sql import ColumnRef

HASH_BUCKET_COUNT = 8

_COMPARATORS: Dict[str, Callable] = {
    "=": operator.eq,
    "<": operator.lt,
    ">": operator.gt,
    "<=": operator.le,
    ">=": operator.ge,
    "<>": operator.ne,
}


@dataclass
class ExecStats:
    work_units: int
    rows_out: int
    wall_ms: float


class _Work:
    __slots__ = ("n",)

    def __init__(self):
        self.n = 0


def bucket_of(value) -> int:
    """Hash bucket for a join key: ints by value (as unsigned, which mod 8
    agrees with Python's %), text by FNV-1a 64 of its bytes."""
    if isinstance(value, int):
        return value % HASH_BUCKET_COUNT
    return fnv1a64(value.encode("utf-8")) % HASH_BUCKET_COUNT


def _layout(node: PlanNode, db: Database) -> List[Tuple[str, str]]:
    """Qualified column layout of the tuples a node yields."""
    if isinstance(node, SeqScan):
        return [(node.table, col) for col, _ in db.tables[node.table].schema]
    if isinstance(node, (Filter, Limit)):
        return _layout(node.child, db)
    if isinstance(node, (NestedLoopJoin, HashJoin)):
        return _layout(node.left, db) + _layout(node.right, db)
    if isinstance(node, Project):
        child = _layout(node.child, db)
        if node.star:
            return child
        return [(c.table, c.column) for c in node.columns]
    raise TypeError("not a plan node: %r" % (node,))


def _index_of(layout: List[Tuple[str, str]], ref: ColumnRef) -> int:
    return layout.index((ref.table, ref.column))


def _run(
    node: PlanNode,
    db: Database,
    work: _Work,
    selection: FlipSelection,
    coverage: Optional[CoverageSink],
) -> Iterator[tuple]:
    if isinstance(node, SeqScan):
        for row in db.tables[node.table].rows:
            work.n += 1
            yield row

    elif isinstance(node, Filter):
        layout = _layout(node.child, db)
        checks = [
            (_index_of(layout, p.column), _COMPARATORS[p.op], p.value)
            for p in node.predicates
        ]
        for row in _run(node.child, db, work, selection, coverage):
            passed = True
            for idx, compare, value in checks:
                work.n += 1
                if not compare(row[idx], value):
                    passed = False
                    break
            if passed:
                yield row

    elif isinstance(node, NestedLoopJoin):
        left_idx = _index_of(_layout(node.left, db), node.left_key)
        right_idx = _index_of(_layout(node.right, db), node.right_key)
        inner: Optional[List[tuple]] = None
        for left_row in _run(node.left, db, work, selection, coverage):
            if inner is None:
                inner = list(_run(node.right, db, work, selection, coverage))
            key = left_row[left_idx]
            for right_row in inner:
                work.n += 1
                if key == right_row[right_idx]:
                    yield left_row + right_row

    elif isinstance(node, HashJoin):
        left_idx = _index_of(_layout(node.left, db), node.left_key)
        right_idx = _index_of(_layout(node.right, db), node.right_key)
        if node.build_side == "left":
            build_node, build_idx = node.left, left_idx
            probe_node, probe_idx = node.right, right_idx
        else:
            build_node, build_idx = node.right, right_idx
            probe_node, probe_idx = node.left, left_idx
        buckets: Dict[int, List[tuple]] = {}
        for build_row in _run(build_node, db, work, selection, coverage):
            work.n += 1
            buckets.setdefault(bucket_of(build_row[build_idx]), []).append(build_row)
        build_is_left = node.build_side == "left"
        for probe_row in _run(probe_node, db, work, selection, coverage):
            key = probe_row[probe_idx]
            for entry in buckets.get(bucket_of(key), ()):
                # FP5: the recheck after a bucket match. Flipped, rows are
                # emitted on collision alone and the comparison is skipped.
                if flip_point(5, True, selection, coverage):
                    work.n += 1
                    if entry[build_idx] != key:
                        continue
                if build_is_left:
                    yield entry + probe_row
                else:
                    yield probe_row + entry

    elif isinstance(node, Project):
        child_iter = _run(node.child, db, work, selection, coverage)
        if node.star:
            yield from child_iter
        else:
            layout = _layout(node.child, db)
            idxs = [_index_of(layout, c) for c in node.columns]
            for row in child_iter:
                yield tuple(row[i] for i in idxs)

    elif isinstance(node, Limit):
        child_iter = _run(node.child, db, work, selection, coverage)
        if node.early_stop:
            produced = 0
            if node.n > 0:
                for row in child_iter:
                    yield row
                    produced += 1
                    if produced >= node.n:
                        break
        else:
            drained = list(child_iter)
            yield from drained[: node.n]

    else:
        raise TypeError("not a plan node: %r" % (node,))


def execute_plan(
    root: PlanNode,
    db: Database,
    selection: FlipSelection = NO_FLIP,
    coverage: Optional[CoverageSink] = None,
) -> Tuple[List[tuple], ExecStats]:
    """Run the plan, returning the result rows and the measured stats.

    work_units is a pure function of (plan, database, selection); wall_ms
    is the only nondeterministic field.
    """
    work = _Work()
    started = time.perf_counter()
    rows = []
    for row in _run(root, db, work, selection, coverage):
        work.n += 1
        rows.append(row)
    wall_ms = (time.perf_counter() - started) * 1000.0
    return rows, ExecStats(work_units=work.n, rows_out=len(rows), wall_ms=wall_ms)
