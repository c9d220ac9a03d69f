"""Render dataset statistics as figures next to the serialized output."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .dataset import DatasetStats


def _bar_chart(labels: list[str], values: list[int], title: str, path: Path) -> None:
    fig, ax = plt.subplots(figsize=(max(6, 0.45 * len(labels)), 4))
    ax.bar(range(len(labels)), values, color="#4878a8")
    ax.set_xticks(range(len(labels)))
    ax.set_xticklabels(labels, rotation=60, ha="right", fontsize=8)
    ax.set_ylabel("examples")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def _split_chart(stats: DatasetStats, path: Path) -> None:
    splits = list(stats.per_split.keys())
    positives = [stats.per_split[s].get("positive", 0) for s in splits]
    negatives = [stats.per_split[s].get("negative", 0) for s in splits]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.bar(splits, negatives, label="negative (good)", color="#6aa84f")
    ax.bar(splits, positives, bottom=negatives, label="positive (bad)", color="#cc4125")
    ax.set_ylabel("examples")
    ax.set_title("Label balance per split")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_stats_figures(stats: DatasetStats, outdir: str | Path) -> list[Path]:
    """Write per-CWE, per-flow-variant and per-split figures; returns the paths."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    if stats.per_cwe:
        cwe_items = sorted(stats.per_cwe.items(), key=lambda kv: (-kv[1], kv[0]))
        path = outdir / "cwe_distribution.png"
        _bar_chart(
            [f"CWE-{cwe}" for cwe, _ in cwe_items],
            [count for _, count in cwe_items],
            "Examples per CWE",
            path,
        )
        written.append(path)

    if stats.per_flow_variant:
        flow_items = sorted(stats.per_flow_variant.items())
        path = outdir / "flow_variant_distribution.png"
        _bar_chart(
            [str(flow) for flow, _ in flow_items],
            [count for _, count in flow_items],
            "Examples per flow variant",
            path,
        )
        written.append(path)

    if stats.per_split:
        path = outdir / "split_label_balance.png"
        _split_chart(stats, path)
        written.append(path)

    return written
