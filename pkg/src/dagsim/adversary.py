"""Coordinated attack against one target client.

Ledger layer: infected proposers drop the target's transactions from their
payloads and pick strong edges that keep the target's traffic out of their
causal history for as long as possible (lexicographic rank over per-column
taint counts, nearest column first). Broadcast layer: infected nodes withhold
ECHO and READY for tainted vertices, slowing their delivery. Infected nodes
stay live otherwise, so with b = 0 runs are bit-identical to honest ones.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .dag import DagStore, Slot, Vertex


@dataclass(frozen=True)
class AdversaryConfig:
    target_client: int
    infected: frozenset[int]
    pariah_depth: int = 2

    @property
    def b(self) -> int:
        return len(self.infected)


class TaintIndex:
    """Shared adversary intel: which vertices carry the target's traffic in
    their causal history. A vertex's history is fixed at creation, so taint
    is memoised once per digest and never changes."""

    def __init__(self, target_txs: set[int]):
        self.target_txs = target_txs
        self._by_slot: dict[Slot, Vertex] = {}
        self._tainted: dict[Slot, bool] = {}

    def observe(self, v: Vertex) -> None:
        """Register a vertex at broadcast time. Edge targets were broadcast
        earlier, so taint always resolves."""
        if v.slot in self._by_slot:
            return
        self._by_slot[v.slot] = v
        self._tainted[v.slot] = (
            any(tx in self.target_txs for tx in v.txs)
            or any(self._tainted.get(e, False) for e in v.edges)
        )

    def is_tainted(self, slot: Slot) -> bool:
        return self._tainted.get(slot, False)

    def tainted_count(self) -> int:
        return sum(1 for t in self._tainted.values() if t)


def pariah_rank(dag: DagStore, candidate: Slot, target_txs: set[int],
                depth: int) -> tuple[int, ...]:
    """Per-column counts of target transactions in the candidate's causal
    sub-graph, nearest column first, `depth` columns deep.

    Sorting candidates ascending by this tuple prefers edges whose recent
    history carries none of the target's traffic.
    """
    top = candidate[1]
    floor = top - depth + 1
    counts = [0] * depth
    seen = {candidate}
    stack = [candidate]
    while stack:
        slot = stack.pop()
        v = dag.vertex(slot)
        counts[top - slot[1]] += sum(1 for tx in v.txs if tx in target_txs)
        for e in v.edges:
            # Edges only point to older columns; stop below the window.
            if e[1] >= floor and e not in seen:
                seen.add(e)
                stack.append(e)
    return tuple(counts)


def select_attack_strong_edges(dag: DagStore, column: int, quorum: int,
                               target_txs: set[int], depth: int) -> list[Slot]:
    """The 2f+1 lowest-rank candidates at column-1, rank ties by row."""
    candidates = [(r, column - 1) for r in dag.rows_at.get(column - 1, ())]
    ranked = sorted(candidates,
                    key=lambda s: (pariah_rank(dag, s, target_txs, depth), s[0]))
    return ranked[:quorum]


def analytic_echo_prob(n: int, f: int, b: int, x: float) -> float:
    """Probability a node reaches its ECHO quorum before the deadline when
    each honest message independently arrives in time with probability x and
    b infected nodes stay silent."""
    e_thresh = (n + f) // 2 + 1
    m = n - b
    return sum(math.comb(m, k) * x ** k * (1 - x) ** (m - k)
               for k in range(e_thresh, m + 1))


def analytic_delivery_prob(n: int, f: int, b: int, x: float) -> float:
    """Probability of delivery before the deadline under ECHO/READY
    suppression by b nodes: a binomial over READY senders, each itself
    gated by the ECHO-quorum binomial."""
    y = analytic_echo_prob(n, f, b, x)
    m = n - b
    return sum(math.comb(m, k) * y ** k * (1 - y) ** (m - k)
               for k in range(2 * f + 1, m + 1))
