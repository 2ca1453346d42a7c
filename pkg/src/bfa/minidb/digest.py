"""Order-insensitive result fingerprints for differential comparison."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence, Tuple

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
_MASK64 = (1 << 64) - 1


def fnv1a64(data: bytes, state: int = FNV_OFFSET) -> int:
    """FNV-1a over data, 64-bit wraparound, continuing from state."""
    for byte in data:
        state = ((state ^ byte) * FNV_PRIME) & _MASK64
    return state


@dataclass(frozen=True)
class ResultDigest:
    digest: int
    row_count: int

    def hex(self) -> str:
        return "%016x" % self.digest


def canonical_row(row: Sequence) -> bytes:
    """Tab-joined canonical values plus newline: ints decimal, text raw."""
    return ("\t".join(str(value) for value in row) + "\n").encode("utf-8")


def result_digest(rows: Iterable[Sequence]) -> ResultDigest:
    """Digest a result multiset.

    Rows are serialized, sorted lexicographically by bytes, and hashed as
    one stream, so row order never matters but duplicates do.
    """
    serialized = sorted(canonical_row(r) for r in rows)
    state = FNV_OFFSET
    for blob in serialized:
        state = fnv1a64(blob, state)
    return ResultDigest(digest=state, row_count=len(serialized))
