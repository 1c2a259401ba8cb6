"""Vertex model and per-node DAG store.

The ledger DAG is organised in rows (one per node) and columns (protocol
time). A vertex at column c carries strong edges to at least 2f+1 vertices at
column c-1 and at most f weak edges to older columns. Insertion requires the
full causal closure to be present, so any vertex in a store always has its
entire history in the same store.
"""

from __future__ import annotations

import hashlib
from typing import Iterable, Iterator

Slot = tuple[int, int]  # (row, column)


class Vertex:
    """Immutable broadcast unit. Identity is (row, column); the digest binds
    edges and payload."""

    __slots__ = ("row", "column", "strong", "weak", "txs", "digest")

    def __init__(self, row: int, column: int, strong: tuple[Slot, ...],
                 weak: tuple[Slot, ...], txs: tuple[int, ...]):
        self.row = row
        self.column = column
        self.strong = strong
        self.weak = weak
        self.txs = txs
        self.digest = self._compute_digest()

    def _compute_digest(self) -> int:
        h = hashlib.sha256()
        h.update(b"vx")
        h.update(self.row.to_bytes(4, "big"))
        h.update(self.column.to_bytes(4, "big"))
        for tag, edges in ((b"s", self.strong), (b"w", self.weak)):
            h.update(tag)
            for r, c in sorted(edges):
                h.update(r.to_bytes(4, "big"))
                h.update(c.to_bytes(4, "big"))
        h.update(b"t")
        for tx in self.txs:
            h.update(tx.to_bytes(8, "big"))
        return int.from_bytes(h.digest(), "big")

    @property
    def slot(self) -> Slot:
        return (self.row, self.column)

    @property
    def edges(self) -> tuple[Slot, ...]:
        return self.strong + self.weak

    def hex(self) -> str:
        return f"{self.digest:064x}"

    def __repr__(self) -> str:
        return f"Vertex(r{self.row},c{self.column},#{len(self.txs)}tx)"


def genesis_vertices(n: int) -> list[Vertex]:
    """Column-0 vertices, one per row, empty payload, no edges."""
    return [Vertex(r, 0, (), (), ()) for r in range(n)]


def validate_vertex(v: Vertex, n: int, f: int) -> None:
    """Structural caps. Genesis (column 0) is the only edge-free shape."""
    if v.column == 0:
        if v.strong or v.weak or v.txs:
            raise ValueError(f"malformed genesis vertex {v!r}")
        return
    if not (2 * f + 1 <= len(v.strong) <= n):
        raise ValueError(f"{v!r}: {len(v.strong)} strong edges, need 2f+1..n")
    if len(v.weak) > f:
        raise ValueError(f"{v!r}: {len(v.weak)} weak edges exceed f={f}")
    for r, c in v.strong:
        if c != v.column - 1:
            raise ValueError(f"{v!r}: strong edge to column {c}")
    for r, c in v.weak:
        if c >= v.column - 1:
            raise ValueError(f"{v!r}: weak edge to column {c} not older than c-1")


class DagStore:
    """One node's view of the DAG.

    Delivered vertices wait in a buffer until every edge target is present,
    then insert; insertion can cascade through waiting descendants. The store
    is therefore causally closed at all times.
    """

    def __init__(self, n: int, f: int):
        self.n = n
        self.f = f
        self.by_slot: dict[Slot, Vertex] = {}
        self.rows_at: dict[int, list[int]] = {}  # column -> rows, insertion order
        self._buffer: dict[Slot, Vertex] = {}
        self._waiting: dict[Slot, list[Slot]] = {}  # missing slot -> buffered slots
        for g in genesis_vertices(n):
            self._insert(g)

    def __contains__(self, slot: Slot) -> bool:
        return slot in self.by_slot

    def __len__(self) -> int:
        return len(self.by_slot)

    def vertex(self, slot: Slot) -> Vertex:
        return self.by_slot[slot]

    def column_size(self, column: int) -> int:
        return len(self.rows_at.get(column, ()))

    def max_column(self) -> int:
        return max(self.rows_at)

    def vertices(self) -> Iterator[Vertex]:
        return iter(self.by_slot.values())

    def _insert(self, v: Vertex) -> None:
        self.by_slot[v.slot] = v
        self.rows_at.setdefault(v.column, []).append(v.row)

    def add(self, v: Vertex) -> list[Vertex]:
        """Buffer a delivered vertex; return all vertices inserted by the
        resulting cascade, in insertion order."""
        if v.slot in self.by_slot or v.slot in self._buffer:
            return []
        self._buffer[v.slot] = v
        for e in v.edges:
            if e not in self.by_slot:
                self._waiting.setdefault(e, []).append(v.slot)
        inserted: list[Vertex] = []
        self._try_insert_cascade(v.slot, inserted)
        return inserted

    def _ready(self, slot: Slot) -> bool:
        v = self._buffer[slot]
        return all(e in self.by_slot for e in v.edges)

    def _try_insert_cascade(self, start: Slot, inserted: list[Vertex]) -> None:
        stack = [start]
        while stack:
            slot = stack.pop()
            if slot not in self._buffer or not self._ready(slot):
                continue
            v = self._buffer.pop(slot)
            self._insert(v)
            inserted.append(v)
            for waiter in self._waiting.pop(slot, ()):  # descendants parked on us
                stack.append(waiter)

    # -- causal queries ----------------------------------------------------

    def causal_set(self, root: Slot) -> set[Slot]:
        """All slots reachable from root via strong and weak edges, inclusive."""
        seen = {root}
        stack = [root]
        while stack:
            v = self.by_slot[stack.pop()]
            for e in v.edges:
                if e not in seen:
                    seen.add(e)
                    stack.append(e)
        return seen

    def strong_reaches(self, start: Slot, target: Slot) -> bool:
        """Strong-edge-only path from start down to target."""
        tcol = target[1]
        frontier = {start}
        col = start[1]
        while col > tcol:
            nxt: set[Slot] = set()
            for s in frontier:
                nxt.update(self.by_slot[s].strong)
            frontier = nxt
            col -= 1
            if not frontier:
                return False
        return target in frontier

    def orphans(self, heads: Iterable[Slot], new_column: int) -> list[Slot]:
        """Vertices at columns < new_column-1 not causally covered by heads.

        These are the weak-edge candidates for a proposal at new_column whose
        strong edges are `heads`.
        """
        covered: set[Slot] = set()
        stack = list(heads)
        covered.update(stack)
        while stack:
            v = self.by_slot[stack.pop()]
            for e in v.edges:
                if e not in covered:
                    covered.add(e)
                    stack.append(e)
        out = [s for s in self.by_slot
               if s[1] < new_column - 1 and s not in covered]
        out.sort(key=lambda s: (s[1], s[0]))
        return out


def elect_leader(wave: int, n: int, salt: int = 0) -> int:
    """Row of wave w's leader vertex (at column 1+4w).

    Stand-in for a shared random coin: a PRNG keyed by (salt, wave), identical
    on every node, close to uniform over rows.
    """
    h = hashlib.sha256(b"coin" + salt.to_bytes(8, "big", signed=False)
                       + wave.to_bytes(8, "big")).digest()
    return int.from_bytes(h[:8], "big") % n


def leader_column(wave: int) -> int:
    return 1 + 4 * wave


def decision_column(wave: int) -> int:
    return 4 + 4 * wave
