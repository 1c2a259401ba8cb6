"""Clients racing on periodically revealed puzzles, plus background traffic.

Every `puzzle_period` ticks a puzzle is revealed to all m clients at once.
Each client solves it after an independent Poisson-distributed work time and
submits its solution transaction to `fanout` distinct nodes, each copy under
an independent client-to-node delay. Third-party transactions arrive as a
Poisson process (exponential gaps) at a uniformly chosen node.

Transaction ids are plain ints: game ids are even, 2 * (puzzle * m + client);
third-party ids are odd, 2 * k + 1.
"""

from __future__ import annotations

from .engine import DOM_CLIENT, DOM_WORLD, DelaySampler, Scheduler, make_dist, substream
from .metrics import EventLog, K_SEND


def game_tx(puzzle: int, client: int, m: int) -> int:
    return 2 * (puzzle * m + client)


def is_game_tx(tx: int) -> bool:
    return tx % 2 == 0


def decode_game_tx(tx: int, m: int) -> tuple[int, int]:
    """(puzzle, client) of a game transaction id."""
    q = tx // 2
    return q // m, q % m


def tx_name(tx: int, m: int) -> str:
    if is_game_tx(tx):
        puzzle, client = decode_game_tx(tx, m)
        return f"{client}:{puzzle}"
    return f"tp:{tx // 2}"


class Client:
    """One contestant; solves each revealed puzzle and submits the solution."""

    __slots__ = ("index", "m", "fanout", "sched", "nodes", "log", "solve",
                 "net", "pick_rng", "target_txs")

    def __init__(self, index: int, m: int, fanout: int, sched: Scheduler,
                 nodes: list, log: EventLog, master_seed: int, profile,
                 target_txs: set | None) -> None:
        self.index = index
        self.m = m
        self.fanout = fanout
        self.sched = sched
        self.nodes = nodes
        self.log = log
        ss = substream(master_seed, DOM_CLIENT, index)
        children = ss.spawn(3)
        self.solve = DelaySampler(profile.solve_time, children[0])
        self.net = DelaySampler(profile.client_to_node, children[1])
        self.pick_rng = children[2]
        # Shared with the adversary's taint index; None when this client is
        # not the target.
        self.target_txs = target_txs

    def on_puzzle(self, puzzle: int) -> None:
        self.sched.after(self.solve.next(), self._submit, puzzle)

    def _submit(self, puzzle: int) -> None:
        tx = game_tx(puzzle, self.index, self.m)
        if self.target_txs is not None:
            self.target_txs.add(tx)
        self.log.append(self.sched.now, K_SEND, None, tx, None)
        picks = self.pick_rng.choice(len(self.nodes), size=self.fanout, replace=False)
        for idx in picks.tolist():
            self.sched.after(self.net.next(), self.nodes[idx].receive_tx, tx)


class World:
    """Puzzle reveals and third-party arrivals; both stop once halted."""

    __slots__ = ("sched", "clients", "nodes", "log", "period", "rate",
                 "gap", "node_rng", "halted", "revealed", "tp_count", "net")

    def __init__(self, sched: Scheduler, clients: list[Client], nodes: list,
                 log: EventLog, period: int, third_party_rate: float,
                 master_seed: int, profile) -> None:
        self.sched = sched
        self.clients = clients
        self.nodes = nodes
        self.log = log
        self.period = period
        self.rate = third_party_rate
        self.halted = False
        self.revealed = 0
        self.tp_count = 0
        ss = substream(master_seed, DOM_WORLD, 0)
        children = ss.spawn(3)
        if third_party_rate > 0:
            self.gap = DelaySampler(
                make_dist("exp", 1.0 / third_party_rate), children[0])
        else:
            self.gap = None
        self.node_rng = children[1]
        self.net = DelaySampler(profile.client_to_node, children[2])

    def start(self) -> None:
        self.sched.at(0, self._reveal, None)
        if self.gap is not None:
            self.sched.after(self.gap.next(), self._third_party, None)

    def halt(self) -> None:
        self.halted = True

    def _reveal(self, _arg) -> None:
        if self.halted:
            return
        puzzle = self.revealed
        self.revealed += 1
        for c in self.clients:
            c.on_puzzle(puzzle)
        self.sched.after(self.period, self._reveal, None)

    def _third_party(self, _arg) -> None:
        if self.halted:
            return
        tx = 2 * self.tp_count + 1
        self.tp_count += 1
        target = int(self.node_rng.integers(len(self.nodes)))
        self.sched.after(self.net.next(), self.nodes[target].receive_tx, tx)
        self.sched.after(self.gap.next(), self._third_party, None)
