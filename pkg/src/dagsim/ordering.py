"""Deterministic in-wave orders: FullShuffle, PerColumnShuffle, VoteCount.

VoteCount builds a vote table (earliest column at which each node's own
proposals causally cover each wave vertex), derives a majority precedence
relation, collapses its cycles (Condorcet cycles happen) into strongly
connected components, and emits vertices by descending topological rank so
that everything a vertex must precede comes after it.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

import numpy as np

from .dag import Vertex

INF = 1 << 30  # "never votes" sentinel, beyond any real column


@dataclass(frozen=True)
class Wave:
    """A formed wave: the leader's not-yet-ordered causal sub-graph."""
    index: int
    leader: Vertex
    members: tuple[Vertex, ...]

    @staticmethod
    def of(index: int, leader: Vertex, members) -> "Wave":
        ordered = tuple(sorted(members, key=lambda v: (v.column, v.row)))
        return Wave(index, leader, ordered)


@dataclass
class VoteTable:
    """cells[i][r]: earliest column of a row-r member whose causal sub-graph
    contains member i, INF if none inside this wave."""
    members: tuple[Vertex, ...]
    n: int
    cells: np.ndarray

    def cell(self, member_idx: int, row: int) -> int:
        return int(self.cells[member_idx, row])


@dataclass
class PrecedenceGraph:
    """Edge i -> j when a strict majority of first votes puts i before j."""
    members: tuple[Vertex, ...]
    succ: list[set[int]]


@dataclass
class RankedOrder:
    """Condensation components (reverse-topological emission order from
    Tarjan), their ranks, and the final vertex order."""
    components: list[tuple[int, ...]]
    ranks: list[int]
    order: list[Vertex]
    comp_of: list[int] = field(default_factory=list)


def _ancestor_masks(wave: Wave) -> list[int]:
    """Per member, bitmask of member indices inside its causal sub-graph
    (itself included). Edge targets outside the wave are already ordered and
    cannot lead back to a member, so they are skipped."""
    idx = {v.slot: i for i, v in enumerate(wave.members)}
    masks = [0] * len(wave.members)
    # Members are column-ascending, so edge targets are computed first.
    for i, v in enumerate(wave.members):
        m = 1 << i
        for e in v.edges:
            j = idx.get(e)
            if j is not None:
                m |= masks[j]
        masks[i] = m
    return masks


def build_vote_table(wave: Wave, n: int) -> VoteTable:
    members = wave.members
    cells = np.full((len(members), n), INF, dtype=np.int64)
    masks = _ancestor_masks(wave)
    for u_idx, u in enumerate(members):
        m = masks[u_idx]
        col, row = u.column, u.row
        while m:
            low = m & -m
            i = low.bit_length() - 1
            if col < cells[i, row]:
                cells[i, row] = col
            m ^= low
    return VoteTable(members, n, cells)


def build_precedence(table: VoteTable) -> PrecedenceGraph:
    cells = table.cells
    k = len(table.members)
    succ: list[set[int]] = [set() for _ in range(k)]
    if k > 1:
        # wins[i, j] = number of rows voting member i strictly before member j
        wins = (cells[:, None, :] < cells[None, :, :]).sum(axis=2)
        ahead = wins > wins.T
        for i, j in zip(*np.nonzero(ahead)):
            succ[int(i)].add(int(j))
    return PrecedenceGraph(table.members, succ)


def _tarjan(succ: list[set[int]]) -> list[tuple[int, ...]]:
    """Strongly connected components, emitted sinks-first (reverse
    topological order of the condensation). Iterative, waves can be large."""
    k = len(succ)
    index = [-1] * k
    low = [0] * k
    on_stack = [False] * k
    stack: list[int] = []
    comps: list[tuple[int, ...]] = []
    counter = 0
    for root in range(k):
        if index[root] != -1:
            continue
        work: list[tuple[int, list[int], int]] = [(root, sorted(succ[root]), 0)]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack[root] = True
        while work:
            v, children, ci = work.pop()
            advanced = False
            while ci < len(children):
                w = children[ci]
                ci += 1
                if index[w] == -1:
                    work.append((v, children, ci))
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack[w] = True
                    work.append((w, sorted(succ[w]), 0))
                    advanced = True
                    break
                if on_stack[w]:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp.append(w)
                    if w == v:
                        break
                comps.append(tuple(sorted(comp)))
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[v])
    return comps


def condense_and_rank(pg: PrecedenceGraph) -> RankedOrder:
    k = len(pg.members)
    comps = _tarjan(pg.succ)
    comp_of = [0] * k
    for ci, comp in enumerate(comps):
        for v in comp:
            comp_of[v] = ci
    # Sinks get rank 0; otherwise one past the highest-ranked successor.
    # Tarjan emits successor components first, so one pass suffices.
    ranks = [0] * len(comps)
    for ci, comp in enumerate(comps):
        r = -1
        for v in comp:
            for w in pg.succ[v]:
                cj = comp_of[w]
                if cj != ci and ranks[cj] > r:
                    r = ranks[cj]
        ranks[ci] = r + 1
    order = sorted(range(k),
                   key=lambda i: (-ranks[comp_of[i]], pg.members[i].digest))
    return RankedOrder(comps, ranks, [pg.members[i] for i in order], comp_of)


def order_vote_count(wave: Wave, n: int) -> list[Vertex]:
    table = build_vote_table(wave, n)
    return condense_and_rank(build_precedence(table)).order


def order_full_shuffle(wave: Wave) -> list[Vertex]:
    """Uniform shuffle of the whole wave, seeded by the leader's digest."""
    out = sorted(wave.members, key=lambda v: v.digest)
    random.Random(wave.leader.digest).shuffle(out)
    return out


def order_per_column_shuffle(wave: Wave) -> list[Vertex]:
    """Columns ascending; inside a column, a shuffle seeded by the xor-fold
    of that column's member digests."""
    by_col: dict[int, list[Vertex]] = {}
    for v in wave.members:
        by_col.setdefault(v.column, []).append(v)
    out: list[Vertex] = []
    for col in sorted(by_col):
        group = sorted(by_col[col], key=lambda v: v.digest)
        seed = 0
        for v in group:
            seed ^= v.digest
        random.Random(seed).shuffle(group)
        out.extend(group)
    return out


POLICIES = ("full-shuffle", "per-column-shuffle", "vote-count")


def order_wave(wave: Wave, policy: str, n: int) -> list[Vertex]:
    if policy == "full-shuffle":
        return order_full_shuffle(wave)
    if policy == "per-column-shuffle":
        return order_per_column_shuffle(wave)
    if policy == "vote-count":
        return order_vote_count(wave, n)
    raise ValueError(f"unknown ordering policy {policy!r}")
