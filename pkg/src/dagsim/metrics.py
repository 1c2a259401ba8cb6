"""Event log, order-fairness audit, scores, and the frozen CSV row schema.

The audit counts, per ordered pair of same-puzzle game transactions, whether
the order implied by one of four lifecycle instants (send, reception from
client, first broadcast participation, broadcast delivery) is contradicted by
the finalized order (position on the reference honest ledger) or by the wave
index. Instants other than send are per node and aggregated by strict
majority over all n nodes; a missing instant counts as plus-infinity.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Iterator

# Record kinds. A record is (tick, kind, node, tx, aux); node is None for
# SEND, tx holds the leader digest for WAVE_FORMED, aux holds the ledger
# position for FINALIZE and the wave index for WAVE_FORMED.
K_SEND = 0
K_RECV = 1
K_BRB_INIT = 2
K_BRB_DELIVER = 3
K_FINALIZE = 4
K_WAVE_FORMED = 5

KIND_NAMES = ("SEND", "RECV", "BRB_INIT", "BRB_DELIVER", "FINALIZE", "WAVE_FORMED")
KIND_IDS = {name: i for i, name in enumerate(KIND_NAMES)}

Record = tuple  # (tick, kind, node | None, tx, aux)

# The eight audited properties: alpha instant x beta check.
ALPHAS = ("snd", "rec", "ini", "dlv")
BETAS = ("fin", "wav")
OF_KEYS = tuple(f"of_{b}_{a}" for b in BETAS for a in ALPHAS)

INF_TICK = float("inf")


class EventLog:
    """Append-only run log; every record is replay-deterministic."""

    __slots__ = ("records",)

    def __init__(self) -> None:
        self.records: list[Record] = []

    def append(self, tick: int, kind: int, node: int | None, tx, aux) -> None:
        self.records.append((tick, kind, node, tx, aux))

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[Record]:
        return iter(self.records)


def write_jsonl(log: Iterable[Record], path: str, tx_name) -> None:
    """Line-delimited JSON with a fixed key order; tx ids are rendered by
    `tx_name` (WAVE_FORMED rows carry the leader digest hex instead)."""
    with open(path, "w") as fh:
        for tick, kind, node, tx, aux in log:
            rendered = tx if kind == K_WAVE_FORMED else tx_name(tx)
            fh.write(json.dumps(
                {"tick": tick, "kind": KIND_NAMES[kind], "node": node,
                 "tx": rendered, "aux": aux},
                separators=(",", ":")) + "\n")


def read_jsonl(path: str) -> list[Record]:
    out: list[Record] = []
    with open(path) as fh:
        for line in fh:
            d = json.loads(line)
            out.append((d["tick"], KIND_IDS[d["kind"]], d["node"], d["tx"], d["aux"]))
    return out


# ---------------------------------------------------------------------------
# Audit tables
# ---------------------------------------------------------------------------

@dataclass
class AuditTables:
    """Per-transaction instants extracted from a log, reference-ledger view."""
    n: int
    reference: int
    send_tick: dict = field(default_factory=dict)          # tx -> tick
    recv: dict = field(default_factory=dict)               # (node, tx) -> tick
    ini: dict = field(default_factory=dict)                # (node, tx) -> tick
    dlv: dict = field(default_factory=dict)                # (node, tx) -> tick
    fin_pos: dict = field(default_factory=dict)            # tx -> reference position
    fin_wave: dict = field(default_factory=dict)           # tx -> reference wave index
    waves_formed_ref: int = 0


def build_tables(log: Iterable[Record], n: int, reference: int) -> AuditTables:
    t = AuditTables(n, reference)
    cur_wave = [-1] * n
    for tick, kind, node, tx, aux in log:
        if kind == K_RECV:
            t.recv[(node, tx)] = tick
        elif kind == K_BRB_INIT:
            t.ini[(node, tx)] = tick
        elif kind == K_BRB_DELIVER:
            t.dlv[(node, tx)] = tick
        elif kind == K_FINALIZE:
            if node == reference:
                t.fin_pos[tx] = aux
                t.fin_wave[tx] = cur_wave[reference]
        elif kind == K_SEND:
            t.send_tick[tx] = tick
        elif kind == K_WAVE_FORMED:
            cur_wave[node] = aux
            if node == reference:
                t.waves_formed_ref += 1
    return t


def decide_winner(tables: AuditTables, tx_ids: list) -> int | None:
    """Index (into tx_ids) of the transaction finalized first on the
    reference ledger, None when no member finalized (game undecided)."""
    best = None
    best_pos = None
    for i, tx in enumerate(tx_ids):
        pos = tables.fin_pos.get(tx)
        if pos is not None and (best_pos is None or pos < best_pos):
            best, best_pos = i, pos
    return best


def scores(tables: AuditTables, games: list[list]) -> tuple[list[float], int]:
    """Per-client score m * wins / decided over the decided games.

    `games` lists, per puzzle, the m transaction ids in client order.
    """
    m = len(games[0]) if games else 0
    wins = [0] * m
    decided = 0
    for tx_ids in games:
        w = decide_winner(tables, tx_ids)
        if w is not None:
            decided += 1
            wins[w] += 1
    if decided == 0:
        return [0.0] * m, 0
    return [m * w / decided for w in wins], decided


def _majority_pairs(per_node_a: list[float], per_node_b: list[float], n: int) -> int:
    """-1 / 0 / +1: which side a strict majority of nodes puts first."""
    za = zb = 0
    for ia, ib in zip(per_node_a, per_node_b):
        if ia < ib:
            za += 1
        elif ib < ia:
            zb += 1
    if 2 * za > n:
        return -1
    if 2 * zb > n:
        return 1
    return 0


def count_violations(tables: AuditTables, games: list[list]) -> dict:
    """The eight OF counts plus the number of examined pairs.

    A pair is examined when both same-puzzle transactions finalized on the
    reference ledger; each such unordered pair can contribute at most one
    violation per property.
    """
    n = tables.n
    counts = {k: 0 for k in OF_KEYS}
    examined = 0
    instant_maps = {"rec": tables.recv, "ini": tables.ini, "dlv": tables.dlv}
    for tx_ids in games:
        m = len(tx_ids)
        for i in range(m):
            for j in range(i + 1, m):
                x, y = tx_ids[i], tx_ids[j]
                px, py = tables.fin_pos.get(x), tables.fin_pos.get(y)
                if px is None or py is None:
                    continue
                examined += 1
                fin_first = x if px < py else y
                wx, wy = tables.fin_wave[x], tables.fin_wave[y]
                for alpha in ALPHAS:
                    if alpha == "snd":
                        sx = tables.send_tick.get(x, INF_TICK)
                        sy = tables.send_tick.get(y, INF_TICK)
                        if sx < sy:
                            first = x
                        elif sy < sx:
                            first = y
                        else:
                            continue
                    else:
                        imap = instant_maps[alpha]
                        ax = [imap.get((nd, x), INF_TICK) for nd in range(n)]
                        ay = [imap.get((nd, y), INF_TICK) for nd in range(n)]
                        side = _majority_pairs(ax, ay, n)
                        if side == 0:
                            continue
                        first = x if side < 0 else y
                    if first != fin_first:
                        counts[f"of_fin_{alpha}"] += 1
                    wf, ws = (wx, wy) if first == x else (wy, wx)
                    if wf > ws:
                        counts[f"of_wav_{alpha}"] += 1
    counts["examined_pairs"] = examined
    return counts


def count_duplications(vertices) -> int:
    """Sum over transactions of (occurrences in the DAG - 1)."""
    seen: dict = {}
    for v in vertices:
        for tx in v.txs:
            seen[tx] = seen.get(tx, 0) + 1
    return sum(c - 1 for c in seen.values())


def quartiles(values: list[int]) -> tuple[float, float, float]:
    """Median-of-halves quartiles; (0, 0, 0) for an empty list."""
    if not values:
        return (0.0, 0.0, 0.0)
    xs = sorted(values)

    def med(lo: int, hi: int) -> float:
        k = hi - lo
        mid = lo + k // 2
        if k % 2:
            return float(xs[mid])
        return (xs[mid - 1] + xs[mid]) / 2.0

    half = len(xs) // 2
    q2 = med(0, len(xs))
    if half == 0:
        return (q2, q2, q2)
    q1 = med(0, half)
    q3 = med(len(xs) - half, len(xs))
    return (q1, q2, q3)


# ---------------------------------------------------------------------------
# CSV row schema (frozen; bump SCHEMA_VERSION on any change)
# ---------------------------------------------------------------------------

SCHEMA_VERSION = 1

CSV_COLUMNS = (
    "schema", "seed", "rep", "n", "f", "b", "m", "policy", "profile", "fanout",
    "puzzles", "puzzle_period", "third_party_rate", "pariah_depth",
    "target_client", "tick_ceiling", "ticks", "partial",
    "solved_puzzles", "score_target", "scores",
    "of_fin_snd", "of_fin_rec", "of_fin_ini", "of_fin_dlv",
    "of_wav_snd", "of_wav_rec", "of_wav_ini", "of_wav_dlv",
    "examined_pairs", "duplications", "waves_formed", "waves_skipped",
    "tx_wave_q1", "tx_wave_med", "tx_wave_q3",
    "vertices", "columns", "brb_init_sent", "brb_echo_sent", "brb_ready_sent",
    "events",
)


def format_cell(v) -> str:
    if isinstance(v, float):
        return f"{v:.6g}"
    if isinstance(v, bool):
        return str(int(v))
    return str(v)


def csv_line(row: dict) -> str:
    return ",".join(format_cell(row[c]) for c in CSV_COLUMNS)


def csv_header() -> str:
    return ",".join(CSV_COLUMNS)
