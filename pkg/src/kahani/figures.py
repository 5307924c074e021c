"""Chart rendering for the evaluation tables; PNG files written next to the
CSV output."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .tables import AVERAGE_ROW, GroupStats, MetricRow

_BAR_COLORS = ("#4878a8", "#e49444", "#5aa469", "#b95554")


def _grouped_bars(
    table: dict[tuple[str, str], GroupStats],
    title: str,
    ylabel: str,
    path: Path,
    error_bars: bool = False,
) -> None:
    stories = sorted({story for story, _ in table if story != AVERAGE_ROW})
    if any(story == AVERAGE_ROW for story, _ in table):
        stories.append(AVERAGE_ROW)
    tools = sorted({tool for _, tool in table})
    width = 0.8 / max(len(tools), 1)

    fig, ax = plt.subplots(figsize=(max(6.0, 1.4 * len(stories)), 4.0))
    for t, tool in enumerate(tools):
        xs, ys, errs = [], [], []
        for s, story in enumerate(stories):
            stats = table.get((story, tool))
            if stats is None:
                continue
            xs.append(s + (t - (len(tools) - 1) / 2) * width)
            ys.append(stats.mean)
            errs.append(stats.std)
        ax.bar(
            xs,
            ys,
            width=width,
            label=tool,
            color=_BAR_COLORS[t % len(_BAR_COLORS)],
            yerr=errs if error_bars else None,
            capsize=3 if error_bars else 0,
        )
    ax.set_xticks(range(len(stories)))
    ax.set_xticklabels(stories, rotation=20, ha="right")
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.legend()
    ax.grid(axis="y", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def composite_figure(table: dict[tuple[str, str], GroupStats], path: Path) -> None:
    _grouped_bars(table, "Composite score by story and tool", "mean composite score", path, error_bars=True)


def refbased_figure(table: dict[tuple[str, str], GroupStats], path: Path) -> None:
    _grouped_bars(table, "Reference-based highlight score", "mean score", path)


def csi_figure(table: dict[tuple[str, str], GroupStats], path: Path) -> None:
    _grouped_bars(table, "Reference-free CSI severity score", "mean severity sum", path)


def wilcoxon_figure(rows: list[MetricRow], path: Path) -> None:
    labels = [row.label for row in rows]
    values = [row.result.p if row.result else 1.0 for row in rows]
    fig, ax = plt.subplots(figsize=(7.0, 4.0))
    ax.barh(range(len(labels)), values, color=_BAR_COLORS[0])
    ax.axvline(0.05, color="#b95554", linestyle="--", label="p = 0.05")
    ax.set_yticks(range(len(labels)))
    ax.set_yticklabels(labels)
    ax.invert_yaxis()
    ax.set_xlabel("two-sided p")
    ax.set_title("Signed-rank p-values per metric")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
