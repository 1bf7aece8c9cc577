"""Matplotlib renderings of the report aggregates, written next to the
delimited exports by the CLI report path."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .report import (
    ERROR_PCT_COLUMNS,
    CampaignComparison,
    PhaseBreakdown,
    RateTable,
    RegisterHistogram,
)

_CLASS_COLORS = {"tolerable": "#4c72b0", "crash": "#dd8452", "critical": "#c44e52"}


def plot_layer_rates(table: RateTable, path: str) -> str:
    """Grouped bars: tolerable/crash/critical percentage per layer row."""
    rows = [r for r in table.rows if r.label != "total"]
    labels = [r.label for r in rows]
    x = range(len(rows))
    width = 0.25
    fig, ax = plt.subplots(figsize=(max(6, 1.2 * len(rows)), 4))
    for i, outcome in enumerate(ERROR_PCT_COLUMNS):
        ax.bar(
            [xi + (i - 1) * width for xi in x],
            [r.pct(outcome) for r in rows],
            width,
            label=outcome,
            color=_CLASS_COLORS[outcome],
        )
    ax.set_xticks(list(x))
    ax.set_xticklabels(labels)
    ax.set_ylabel("% of injected faults")
    ax.set_title("Fault outcomes per layer")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_phase_breakdown(breakdown: PhaseBreakdown, path: str) -> str:
    """One panel per error class: bars per phase, stacked by injected layer."""
    phases = sorted({c.phase for c in breakdown.cells})
    layers = sorted({c.layer for c in breakdown.cells})
    cmap = plt.get_cmap("tab10")
    fig, axes = plt.subplots(1, 3, figsize=(13, 4), sharex=True)
    for ax, outcome in zip(axes, ERROR_PCT_COLUMNS):
        bottoms = [0.0] * len(phases)
        for li, layer in enumerate(layers):
            vals = []
            for pi, ph in enumerate(phases):
                cell = next(
                    (c for c in breakdown.cells if c.phase == ph and c.layer == layer),
                    None,
                )
                if cell is None or cell.injected == 0:
                    vals.append(0.0)
                else:
                    vals.append(100.0 * cell.counts.get(outcome, 0) / cell.injected)
            ax.bar(
                phases,
                vals,
                bottom=bottoms,
                label=f"layer{layer}",
                color=cmap(li % 10),
            )
            bottoms = [b + v for b, v in zip(bottoms, vals)]
        ax.set_title(outcome)
        ax.set_xlabel("phase")
        ax.set_xticks(phases)
    axes[0].set_ylabel("% of faults in (phase, layer)")
    axes[0].legend(fontsize=8)
    fig.suptitle("Transient fault outcomes per phase")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_register_histogram(hist: RegisterHistogram, path: str) -> str:
    """One panel per error class: fault count per register, colored by layer."""
    reg_ids = sorted(hist.counts)
    layers = sorted(
        {hist.register_info.get(r, {}).get("layer", -1) for r in reg_ids}
    )
    cmap = plt.get_cmap("tab10")
    layer_color = {lay: cmap(i % 10) for i, lay in enumerate(layers)}
    fig, axes = plt.subplots(3, 1, figsize=(max(8, 0.12 * len(reg_ids)), 9), sharex=True)
    for ax, outcome in zip(axes, ERROR_PCT_COLUMNS):
        heights = [hist.counts[r].get(outcome, 0) for r in reg_ids]
        colors = [
            layer_color[hist.register_info.get(r, {}).get("layer", -1)] for r in reg_ids
        ]
        ax.bar(reg_ids, heights, color=colors, width=1.0)
        ax.set_ylabel(f"{outcome} faults")
    axes[-1].set_xlabel("register id")
    handles = [plt.Rectangle((0, 0), 1, 1, color=layer_color[lay]) for lay in layers]
    axes[0].legend(handles, [f"layer{lay}" for lay in layers], fontsize=8)
    fig.suptitle("Faults per register by outcome")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_comparison(cmp: CampaignComparison, path: str) -> str:
    """Statistical vs exhaustive per-class rates with the MoE band."""
    x = range(len(cmp.classes))
    width = 0.35
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.bar(
        [xi - width / 2 for xi in x],
        [cmp.statistical_pct[o] for o in cmp.classes],
        width,
        label="statistical",
    )
    ax.bar(
        [xi + width / 2 for xi in x],
        [cmp.exhaustive_pct[o] for o in cmp.classes],
        width,
        label="exhaustive",
    )
    for xi, o in zip(x, cmp.classes):
        e = cmp.exhaustive_pct[o]
        ax.plot(
            [xi - width, xi + width],
            [e + cmp.moe_pct] * 2,
            "k--",
            linewidth=0.8,
        )
        ax.plot(
            [xi - width, xi + width],
            [max(0.0, e - cmp.moe_pct)] * 2,
            "k--",
            linewidth=0.8,
        )
    ax.set_xticks(list(x))
    ax.set_xticklabels(cmp.classes, rotation=20)
    ax.set_ylabel("% of injected faults")
    ax.set_title("Statistical vs exhaustive rates (dashed: MoE band)")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
