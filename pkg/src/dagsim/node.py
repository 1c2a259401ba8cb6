"""Node actor: reliable broadcast, DAG growth, proposals, wave ordering.

Each node keeps its own DAG copy and broadcast state. A node proposes a
vertex at column c once it holds at least 2f+1 vertices at column c-1 and its
mempool is non-empty; the payload is a copy of the mempool (entries are
purged only when a vertex containing them is inserted, so the same
transaction can appear in several vertices).

Wave w has its leader at column 1+4w and is decided at column 4+4w: the wave
forms once 2f+1 vertices at the decision column strong-path to the leader
slot, and is skipped once f+1 such vertices provably miss it. Both tests look
only at each vertex's own causal history, so every node reaches the same
verdict no matter the arrival order, and 2f+1 + f+1 > n makes the two
verdicts mutually exclusive.
"""

from __future__ import annotations

from .adversary import AdversaryConfig, TaintIndex, select_attack_strong_edges
from .brb import BrbInstance, thresholds
from .dag import DagStore, Slot, Vertex, elect_leader, leader_column, validate_vertex
from .engine import DOM_NODE_NET, DOM_NODE_PROPOSE, DelaySampler, Scheduler, substream
from .metrics import (EventLog, K_BRB_DELIVER, K_BRB_INIT, K_FINALIZE,
                      K_RECV, K_WAVE_FORMED)
from .ordering import Wave, order_wave
from .workload import is_game_tx


class Node:
    """One honest or infected protocol participant."""

    def __init__(self, row: int, n: int, f: int, sched: Scheduler,
                 log: EventLog, profile, master_seed: int, policy: str,
                 adversary: AdversaryConfig | None = None,
                 taint: TaintIndex | None = None) -> None:
        self.row = row
        self.n = n
        self.f = f
        self.quorum = 2 * f + 1
        self.e_thresh, self.r_amp, self.d_quorum = thresholds(n, f)
        self.sched = sched
        self.log = log
        self.policy = policy
        self.salt = master_seed
        self.net = DelaySampler(profile.node_to_node,
                                substream(master_seed, DOM_NODE_NET, row))
        self.prng = substream(master_seed, DOM_NODE_PROPOSE, row)

        self.adversary = adversary
        self.taint = taint
        self.infected = adversary is not None and row in adversary.infected
        self.target_txs = taint.target_txs if taint is not None else frozenset()

        self.dag = DagStore(n, f)
        self.brb: dict[Slot, BrbInstance] = {}
        self.mempool: dict[int, None] = {}
        self.seen_in_dag: set[int] = set()
        self.next_column = 1

        # Slots covered by the causal closure of past own proposals; the
        # complement (uncovered) is the weak-edge candidate pool.
        self.cov: set[Slot] = set()
        self.uncovered: set[Slot] = set()

        self.wave_counts: dict[int, list[int]] = {}  # wave -> [reach, miss]
        self.wave_decided: dict[int, bool] = {}      # wave -> formed?
        self.leader_cursor = 0
        self.ordered: set[Slot] = set()
        self.ledger: list[int] = []
        self.finalized: set[int] = set()
        self.waves_formed = 0
        self.waves_skipped = 0
        self.wave_tx_counts: list[int] = []
        self.wave_log: list[tuple[int, Slot, tuple[Slot, ...]]] = []
        self.finalize_hook = None  # set on the reference node by the sim

        self.proposed: list[Vertex] = []
        self._propose_pending = False
        self.init_sent = 0
        self.echo_sent = 0
        self.ready_sent = 0
        self._ini_seen: set[int] = set()
        self._dlv_seen: set[int] = set()

        self._on_init: list = []
        self._on_echo: list = []
        self._on_ready: list = []

    def wire(self, nodes: list["Node"]) -> None:
        """Bind peer handler lists once all nodes exist."""
        self._on_init = [p.on_init for p in nodes]
        self._on_echo = [p.on_echo for p in nodes]
        self._on_ready = [p.on_ready for p in nodes]

    # -- client side ---------------------------------------------------------

    def receive_tx(self, tx: int) -> None:
        self.log.append(self.sched.now, K_RECV, self.row, tx, None)
        if self.infected and tx in self.target_txs:
            return  # never proposed by us; taint intel comes from broadcasts
        if tx not in self.seen_in_dag and tx not in self.mempool:
            self.mempool[tx] = None
            self._schedule_propose()

    # -- broadcast ------------------------------------------------------------

    def _inst(self, slot: Slot) -> BrbInstance:
        inst = self.brb.get(slot)
        if inst is None:
            inst = self.brb[slot] = BrbInstance()
        return inst

    def _suppress(self, slot: Slot) -> bool:
        return self.infected and self.taint.is_tainted(slot)

    def _mark_participation(self, v: Vertex) -> None:
        """First outbound INIT or ECHO mentioning a game transaction."""
        now = self.sched.now
        for tx in v.txs:
            if is_game_tx(tx) and tx not in self._ini_seen:
                self._ini_seen.add(tx)
                self.log.append(now, K_BRB_INIT, self.row, tx, None)

    def rbcast(self, v: Vertex) -> None:
        validate_vertex(v, self.n, self.f)
        if self.taint is not None:
            self.taint.observe(v)
        self._mark_participation(v)
        sched, now, nxt = self.sched, self.sched.now, self.net.next
        for fn in self._on_init:
            sched.at(now + nxt(), fn, v)
        self.init_sent += self.n

    def on_init(self, v: Vertex) -> None:
        inst = self._inst(v.slot)
        if inst.on_init(v):
            if not inst.sent_echo and not self._suppress(v.slot):
                inst.sent_echo = True
                self._mark_participation(v)
                msg = (v.slot, v.digest, self.row)
                sched, now, nxt = self.sched, self.sched.now, self.net.next
                for fn in self._on_echo:
                    sched.at(now + nxt(), fn, msg)
                self.echo_sent += self.n
            self._maybe_deliver(inst)

    def on_echo(self, msg: tuple[Slot, int, int]) -> None:
        slot, digest, sender = msg
        inst = self._inst(slot)
        inst.on_echo(sender, digest)
        self._maybe_ready(inst, slot)

    def on_ready(self, msg: tuple[Slot, int, int]) -> None:
        slot, digest, sender = msg
        inst = self._inst(slot)
        inst.on_ready(sender, digest)
        self._maybe_ready(inst, slot)
        self._maybe_deliver(inst)

    def _maybe_ready(self, inst: BrbInstance, slot: Slot) -> None:
        if inst.sent_ready:
            return
        if inst.echo_count() >= self.e_thresh or inst.ready_count() >= self.r_amp:
            if self._suppress(slot):
                return
            inst.sent_ready = True
            msg = (slot, inst.digest, self.row)
            sched, now, nxt = self.sched, self.sched.now, self.net.next
            for fn in self._on_ready:
                sched.at(now + nxt(), fn, msg)
            self.ready_sent += self.n

    def _maybe_deliver(self, inst: BrbInstance) -> None:
        if inst.delivered or inst.payload is None:
            return
        if inst.ready_count() >= self.d_quorum:
            inst.delivered = True
            self._deliver(inst.payload)

    # -- DAG and waves ---------------------------------------------------------

    def _deliver(self, v: Vertex) -> None:
        now = self.sched.now
        for tx in v.txs:
            if is_game_tx(tx) and tx not in self._dlv_seen:
                self._dlv_seen.add(tx)
                self.log.append(now, K_BRB_DELIVER, self.row, tx, None)
        inserted = self.dag.add(v)
        for ins in inserted:
            for tx in ins.txs:
                self.mempool.pop(tx, None)
                self.seen_in_dag.add(tx)
            if ins.slot not in self.cov:
                self.uncovered.add(ins.slot)
            col = ins.column
            if col >= 4 and col % 4 == 0:
                self._count_wave_vote(ins, col // 4 - 1)
        if inserted:
            self._process_waves()
            self._schedule_propose()

    def _count_wave_vote(self, v: Vertex, wave: int) -> None:
        if wave in self.wave_decided:
            return
        leader_slot = (elect_leader(wave, self.n, self.salt), leader_column(wave))
        counts = self.wave_counts.setdefault(wave, [0, 0])
        if self.dag.strong_reaches(v.slot, leader_slot):
            counts[0] += 1
            if counts[0] >= self.quorum:
                self.wave_decided[wave] = True
        else:
            counts[1] += 1
            if counts[1] >= self.f + 1:
                self.wave_decided[wave] = False

    def _process_waves(self) -> None:
        while self.leader_cursor in self.wave_decided:
            w = self.leader_cursor
            if self.wave_decided[w]:
                self._form_wave(w)
            else:
                self.waves_skipped += 1
            self.leader_cursor += 1

    def _form_wave(self, w: int) -> None:
        leader_slot = (elect_leader(w, self.n, self.salt), leader_column(w))
        leader = self.dag.vertex(leader_slot)
        # Ordered slots are causally closed, so pruning at them is exact.
        members = []
        seen = {leader_slot}
        stack = [leader_slot]
        while stack:
            v = self.dag.vertex(stack.pop())
            members.append(v)
            for e in v.edges:
                if e not in seen and e not in self.ordered:
                    seen.add(e)
                    stack.append(e)
        wave = Wave.of(w, leader, members)
        now = self.sched.now
        self.wave_log.append((w, leader_slot, tuple(sorted(seen))))
        self.log.append(now, K_WAVE_FORMED, self.row, leader.hex(), w)
        fresh = 0
        for v in order_wave(wave, self.policy, self.n):
            self.ordered.add(v.slot)
            for tx in v.txs:
                if tx in self.finalized:
                    continue
                self.finalized.add(tx)
                pos = len(self.ledger)
                self.ledger.append(tx)
                fresh += 1
                if is_game_tx(tx):
                    self.log.append(now, K_FINALIZE, self.row, tx, pos)
                    if self.finalize_hook is not None:
                        self.finalize_hook(tx)
        self.wave_tx_counts.append(fresh)
        self.waves_formed += 1

    # -- proposals --------------------------------------------------------------

    def _schedule_propose(self) -> None:
        """Proposal checks run after every arrival of the current tick, so
        a node never proposes on a half-ingested tick."""
        if not self._propose_pending:
            self._propose_pending = True
            self.sched.at(self.sched.now, self._propose_check, None)

    def _propose_check(self, _arg) -> None:
        self._propose_pending = False
        self.try_propose()

    def _extend_cover(self, roots) -> None:
        stack = []
        for s in roots:
            if s not in self.cov:
                self.cov.add(s)
                self.uncovered.discard(s)
                stack.append(s)
        while stack:
            v = self.dag.vertex(stack.pop())
            for e in v.edges:
                if e not in self.cov:
                    self.cov.add(e)
                    self.uncovered.discard(e)
                    stack.append(e)

    def _pick_weak(self, column: int) -> list[Slot]:
        """Up to f uncovered old vertices, whole lowest columns first, the
        boundary column sampled at random."""
        cands = [s for s in self.uncovered if s[1] < column - 1]
        if self.infected:
            cands = [s for s in cands if not self.taint.is_tainted(s)]
        if not cands:
            return []
        cands.sort(key=lambda s: (s[1], s[0]))
        picked: list[Slot] = []
        i = 0
        while i < len(cands) and len(picked) < self.f:
            j = i
            col = cands[i][1]
            while j < len(cands) and cands[j][1] == col:
                j += 1
            group = cands[i:j]
            room = self.f - len(picked)
            if len(group) <= room:
                picked.extend(group)
            else:
                idx = self.prng.choice(len(group), size=room, replace=False)
                picked.extend(group[k] for k in sorted(idx.tolist()))
            i = j
        return picked

    def try_propose(self) -> None:
        while True:
            c = self.next_column
            if self.dag.column_size(c - 1) < self.quorum:
                return
            if not self.mempool:
                return
            if self.infected:
                strong = select_attack_strong_edges(
                    self.dag, c, self.quorum, self.target_txs,
                    self.adversary.pariah_depth)
            else:
                strong = [(r, c - 1) for r in sorted(self.dag.rows_at[c - 1])]
            self._extend_cover(strong)
            weak = self._pick_weak(c)
            if weak:
                self._extend_cover(weak)
            v = Vertex(self.row, c, tuple(strong), tuple(weak),
                       tuple(self.mempool))
            self.next_column = c + 1
            self.proposed.append(v)
            self.rbcast(v)
