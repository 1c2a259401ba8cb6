"""Deterministic Graphviz export of a DAG view.

Rows are pinned as ranks, strong edges are solid red, weak edges dashed
blue, wave leaders get a double border, and wave membership picks the fill
color. Output is byte-stable for a given store and wave history.
"""

from __future__ import annotations

from .dag import DagStore, Slot

PALETTE = ("#cceeff", "#ffd9d9", "#d9f2d9", "#fff2cc",
           "#e6d9ff", "#ffe0f0", "#d9f2e6", "#f2e0cc")


def export_dot(dag: DagStore, waves=()) -> str:
    """DOT text; `waves` are (index, leader slot, member slots) triples as
    kept by a node's wave history."""
    wave_of: dict[Slot, int] = {}
    leaders: set[Slot] = set()
    for w, leader_slot, members in waves:
        leaders.add(leader_slot)
        for s in members:
            wave_of[s] = w
    lines = [
        "digraph dag {",
        "  rankdir=RL;",
        "  node [shape=box, style=filled, fillcolor=white];",
    ]
    rows = sorted({r for r, _ in dag.by_slot})
    for r in rows:
        cols = sorted(c for rr, c in dag.by_slot if rr == r)
        names = " ".join(f'"v{r}_{c}";' for c in cols)
        lines.append(f"  {{ rank=same; {names} }}")
    for r, c in sorted(dag.by_slot):
        attrs = [f'label="{r},{c}"']
        w = wave_of.get((r, c))
        if w is not None:
            attrs.append(f'fillcolor="{PALETTE[w % len(PALETTE)]}"')
        if (r, c) in leaders:
            attrs.append("peripheries=2")
        lines.append(f'  "v{r}_{c}" [{" ".join(attrs)}];')
    for r, c in sorted(dag.by_slot):
        v = dag.vertex((r, c))
        for tr, tc in sorted(v.strong):
            lines.append(f'  "v{r}_{c}" -> "v{tr}_{tc}" [color=red];')
        for tr, tc in sorted(v.weak):
            lines.append(f'  "v{r}_{c}" -> "v{tr}_{tc}" [color=blue style=dashed];')
    lines.append("}")
    return "\n".join(lines) + "\n"
