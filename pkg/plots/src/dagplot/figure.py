"""Rendering aggregated sweep curves with a stable visual code:
policy picks the color, profile picks the line style, fanout or n picks
the marker. The x axis is always the Byzantine proportion b/n."""

from __future__ import annotations

import logging

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .agg import (Group, aggregate, check_group_by, check_metric, read_rows,
                  write_table)

log = logging.getLogger(__name__)

COLORS = ("tab:blue", "tab:orange", "tab:green", "tab:red", "tab:purple",
          "tab:brown", "tab:pink", "tab:gray", "tab:olive", "tab:cyan")
LINESTYLES = {"perfect": "-", "quick": "--", "slow": ":"}
EXTRA_LINESTYLES = ("-", "--", ":", "-.")
MARKERS = ("o", "s", "^", "D", "v", "P", "X", "*")

RIBBON_PARTS = ("_q1", "_med", "_q3")


def _style_maps(groups: list[Group], group_by: list[str]):
    """Value -> color/linestyle/marker, assigned over sorted distinct values
    so the same CSV always renders the same way."""
    def distinct(col: str) -> list[str]:
        i = group_by.index(col)
        return sorted({g.key[i] for g in groups})

    colors: dict[str, str] = {}
    if "policy" in group_by:
        for i, v in enumerate(distinct("policy")):
            colors[v] = COLORS[i % len(COLORS)]
    styles: dict[str, str] = {}
    if "profile" in group_by:
        extras = 0
        for v in distinct("profile"):
            if v in LINESTYLES:
                styles[v] = LINESTYLES[v]
            else:
                styles[v] = EXTRA_LINESTYLES[extras % len(EXTRA_LINESTYLES)]
                extras += 1
    markers: dict[str, str] = {}
    marker_col = next((c for c in ("fanout", "n") if c in group_by), None)
    if marker_col is not None:
        for i, v in enumerate(distinct(marker_col)):
            markers[v] = MARKERS[i % len(MARKERS)]
    return colors, styles, markers, marker_col


def _curve_style(key: tuple[str, ...], group_by: list[str], idx: int,
                 colors, styles, markers, marker_col):
    color = COLORS[idx % len(COLORS)]
    style = "-"
    marker = "o"
    if "policy" in group_by:
        color = colors[key[group_by.index("policy")]]
    if "profile" in group_by:
        style = styles[key[group_by.index("profile")]]
    if marker_col is not None:
        marker = markers[key[group_by.index(marker_col)]]
    return color, style, marker


def plot_sweep(csv_path: str, metric: str, group_by: list[str],
               out_path: str, ribbon: bool = False,
               table_path: str | None = None) -> str:
    """Line plot of group-mean `metric` vs b/n, one curve per group key.
    With ribbon=True, `metric` names a quartile triple (e.g. tx_wave) and
    the band between the q1 and q3 means is shaded around the median."""
    check_group_by(group_by)
    if ribbon:
        metrics = [metric + part for part in RIBBON_PARTS]
        for m in metrics:
            check_metric(m)
    else:
        check_metric(metric)
        metrics = [metric]

    rows = read_rows(csv_path)
    if not rows:
        raise ValueError(f"{csv_path}: no data rows, nothing to plot")
    groups = aggregate(rows, metrics, group_by)

    curves: dict[tuple[str, ...], list[Group]] = {}
    for g in groups:
        curves.setdefault(g.key, []).append(g)

    colors, styles, markers, marker_col = _style_maps(groups, group_by)
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for idx, (key, pts) in enumerate(sorted(curves.items())):
        xs = [p.x for p in pts]
        color, style, marker = _curve_style(key, group_by, idx, colors,
                                            styles, markers, marker_col)
        label = " ".join(f"{c}={v}" for c, v in zip(group_by, key))
        if ribbon:
            q1 = [p.means[0] for p in pts]
            med = [p.means[1] for p in pts]
            q3 = [p.means[2] for p in pts]
            ax.plot(xs, med, color=color, linestyle=style, marker=marker,
                    label=label)
            ax.fill_between(xs, q1, q3, color=color, alpha=0.2, linewidth=0)
        else:
            ys = [p.means[0] for p in pts]
            ax.plot(xs, ys, color=color, linestyle=style, marker=marker,
                    label=label)
    ax.set_xlabel("b/n")
    ax.set_ylabel(metric)
    ax.grid(True, alpha=0.3)
    if curves:
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    log.info("wrote %s (%d curves)", out_path, len(curves))

    if table_path is not None:
        write_table(groups, metrics, group_by, table_path)
    return out_path
