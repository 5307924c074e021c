"""Aggregation of annotation records into the four report tables, plus CSV
and plain-text rendering with fixed column orders."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

from .errors import AllZeroDifferences, EmptyGroup
from .evaluation import (
    AnnotationRecord,
    Dataset,
    composite_score,
    csi_score,
    participant_severity_sum,
    reference_based_score,
)
from .wilcoxon import WilcoxonResult, wilcoxon_signed_rank

# Display labels for the seven Likert metrics, in report order.
METRIC_LABELS = (
    ("cultural_nuance", "Cultural Nuances"),
    ("culture_specific_words", "Cultural Specific Words"),
    ("image_consistency", "Image Consistency"),
    ("cultural_accuracy", "Accuracy of cultural elements"),
    ("plot", "Plot of the story"),
    ("scene_selection", "Scenes selection"),
    ("character_depiction", "Character Descriptions"),
)

AVERAGE_ROW = "average"


@dataclass(frozen=True)
class GroupStats:
    count: int
    mean: float
    std: float


def _sample_std(values: list[float]) -> float:
    if len(values) < 2:
        return 0.0
    mean = sum(values) / len(values)
    return math.sqrt(sum((v - mean) ** 2 for v in values) / (len(values) - 1))


def aggregate_composite(records: list[AnnotationRecord]) -> dict[tuple[str, str], GroupStats]:
    """Per (story, tool): participant count, mean composite score, sample std."""
    if not records:
        raise EmptyGroup("no records to aggregate")
    cells: dict[tuple[str, str], list[float]] = {}
    for record in records:
        cells.setdefault((record.story_id, record.tool_id), []).append(
            composite_score(record.ratings)
        )
    return {
        key: GroupStats(count=len(scores), mean=sum(scores) / len(scores), std=_sample_std(scores))
        for key, scores in sorted(cells.items())
    }


def composite_cell(records: list[AnnotationRecord], story_id: str, tool_id: str) -> GroupStats:
    table = aggregate_composite(records)
    try:
        return table[(story_id, tool_id)]
    except KeyError:
        raise EmptyGroup(f"no records for story={story_id!r} tool={tool_id!r}") from None


@dataclass(frozen=True)
class MetricRow:
    metric: str
    label: str
    result: WilcoxonResult | None
    note: str = ""


def rating_table(
    records: list[AnnotationRecord],
    tool_a: str = "kahani",
    tool_b: str = "chatgpt",
) -> tuple[list[MetricRow], list[str]]:
    """Per-metric signed-rank comparison of two tools over paired ratings.

    Records pair on (participant_id, story_id); unpaired records are excluded
    with a warning rather than failing the whole table.
    """
    by_key: dict[tuple[str, str], dict[str, AnnotationRecord]] = {}
    for record in records:
        if record.tool_id not in (tool_a, tool_b):
            continue
        by_key.setdefault((record.participant_id, record.story_id), {})[record.tool_id] = record

    pairs: list[tuple[AnnotationRecord, AnnotationRecord]] = []
    warnings = []
    for key in sorted(by_key):
        tools = by_key[key]
        if tool_a in tools and tool_b in tools:
            pairs.append((tools[tool_a], tools[tool_b]))
        else:
            present = next(iter(tools))
            warnings.append(f"unpaired record: participant={key[0]} story={key[1]} tool={present}")

    rows = []
    for metric, label in METRIC_LABELS:
        values = [
            (float(getattr(a.ratings, metric)), float(getattr(b.ratings, metric)))
            for a, b in pairs
        ]
        try:
            result = wilcoxon_signed_rank(values)
            rows.append(MetricRow(metric=metric, label=label, result=result))
        except AllZeroDifferences:
            rows.append(MetricRow(metric=metric, label=label, result=None, note="all differences zero"))
    return rows, warnings


def refbased_table(
    dataset: Dataset, penalty_mode: str = "intended"
) -> dict[tuple[str, str], GroupStats]:
    """Per (story, tool) mean reference-based score, plus per-tool average rows."""
    cells: dict[tuple[str, str], list[float]] = {}
    for record in dataset.records:
        ref = dataset.references.get(record.story_id)
        if ref is None:
            continue
        breakdown = reference_based_score(
            [span.text for span in record.spans], ref, penalty_mode=penalty_mode
        )
        cells.setdefault((record.story_id, record.tool_id), []).append(breakdown.score)

    table = {
        key: GroupStats(count=len(scores), mean=sum(scores) / len(scores), std=_sample_std(scores))
        for key, scores in sorted(cells.items())
    }
    _append_average_rows(table)
    return table


def csi_table(dataset: Dataset) -> dict[tuple[str, str], GroupStats]:
    """Per (story, tool) mean severity sum, plus mean-of-story-means rows."""
    cells: dict[tuple[str, str], list[float]] = {}
    for record in dataset.records:
        cells.setdefault((record.story_id, record.tool_id), []).append(
            float(participant_severity_sum(record))
        )
    table = {}
    for (story, tool), sums in sorted(cells.items()):
        table[(story, tool)] = GroupStats(
            count=len(sums), mean=csi_score(dataset.records, story, tool), std=_sample_std(sums)
        )
    _append_average_rows(table)
    return table


def _append_average_rows(table: dict[tuple[str, str], GroupStats]) -> None:
    tools = sorted({tool for (_, tool) in table})
    for tool in tools:
        means = [stats.mean for (story, t), stats in table.items() if t == tool and story != AVERAGE_ROW]
        if means:
            table[(AVERAGE_ROW, tool)] = GroupStats(
                count=len(means), mean=sum(means) / len(means), std=_sample_std(means)
            )


# --- rendering ---------------------------------------------------------------


def _format(value: float | None) -> str:
    return "" if value is None else f"{value:.6f}"


def stats_csv(table: dict[tuple[str, str], GroupStats]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["story_id", "tool_id", "count", "mean", "std"])
    ordinary = [key for key in table if key[0] != AVERAGE_ROW]
    averages = [key for key in table if key[0] == AVERAGE_ROW]
    for story, tool in sorted(ordinary) + sorted(averages):
        stats = table[(story, tool)]
        writer.writerow([story, tool, stats.count, _format(stats.mean), _format(stats.std)])
    return out.getvalue()


def wilcoxon_csv(rows: list[MetricRow]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["metric", "n", "w_plus", "w_minus", "W", "Z", "p", "p_exact", "note"])
    for row in rows:
        r = row.result
        writer.writerow(
            [
                row.label,
                r.n_effective if r else 0,
                _format(r.w_plus if r else None),
                _format(r.w_minus if r else None),
                _format(r.W if r else None),
                _format(r.Z if r else None),
                _format(r.p if r else None),
                _format(r.p_exact if r else None),
                row.note,
            ]
        )
    return out.getvalue()


def stats_text(title: str, table: dict[tuple[str, str], GroupStats]) -> str:
    lines = [title, f"{'story':<12} {'tool':<10} {'count':>5} {'mean':>12} {'std':>12}"]
    ordinary = sorted(key for key in table if key[0] != AVERAGE_ROW)
    averages = sorted(key for key in table if key[0] == AVERAGE_ROW)
    for story, tool in ordinary + averages:
        stats = table[(story, tool)]
        lines.append(f"{story:<12} {tool:<10} {stats.count:>5} {stats.mean:>12.4f} {stats.std:>12.4f}")
    return "\n".join(lines) + "\n"


def wilcoxon_text(rows: list[MetricRow]) -> str:
    lines = [
        "Signed-rank comparison (paired by participant and story)",
        f"{'metric':<32} {'n':>3} {'W':>8} {'Z':>8} {'p':>8} {'p_exact':>8}",
    ]
    for row in rows:
        r = row.result
        if r is None:
            lines.append(f"{row.label:<32} {'-':>3} {'-':>8} {'-':>8} {'-':>8} {'-':>8}  {row.note}")
        else:
            exact = f"{r.p_exact:.4f}" if r.p_exact is not None else "-"
            lines.append(
                f"{row.label:<32} {r.n_effective:>3} {r.W:>8.2f} {r.Z:>8.3f} {r.p:>8.4f} {exact:>8}"
            )
    return "\n".join(lines) + "\n"
