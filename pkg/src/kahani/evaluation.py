"""Annotation data model and the quantitative cultural-evaluation metrics.

Covers the composite Likert index, the reference-based highlight score
(modified n-gram precision with an over-highlighting penalty), and the
reference-free severity score over culture-specific items (CSIs).
"""

from __future__ import annotations

import json
import math
import re
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from pathlib import Path

import jsonschema

from .errors import DatasetError, EmptyGroup, EmptyReference


class CsiCategory(Enum):
    ECOLOGY = "ecology"
    PUBLIC_LIFE = "public_life"
    SOCIAL_LIFE = "social_life"
    PERSONAL_LIFE = "personal_life"
    CUSTOMS_AND_PURSUITS = "customs_and_pursuits"
    PRIVATE_PASSIONS = "private_passions"
    PROPER_NOUNS = "proper_nouns"


@dataclass(frozen=True)
class AnnotationSpan:
    text: str
    category: CsiCategory
    severity: int
    comment: str | None = None

    def __post_init__(self):
        if not self.text:
            raise ValueError("span text is empty")
        if self.severity not in (-1, 0, 1):
            raise ValueError(f"severity {self.severity} outside {{-1, 0, 1}}")


LIKERT_FIELDS = (
    "cultural_nuance",
    "culture_specific_words",
    "plot",
    "scene_selection",
    "image_consistency",
    "character_depiction",
    "cultural_accuracy",
)

# Factors entering the composite index; plot and scene_selection are rated
# but excluded from the product.
COMPOSITE_FIELDS = (
    "cultural_nuance",
    "culture_specific_words",
    "image_consistency",
    "character_depiction",
    "cultural_accuracy",
)


@dataclass(frozen=True)
class LikertRating:
    cultural_nuance: int
    culture_specific_words: int
    plot: int
    scene_selection: int
    image_consistency: int
    character_depiction: int
    cultural_accuracy: int

    def __post_init__(self):
        for name in LIKERT_FIELDS:
            value = getattr(self, name)
            if not isinstance(value, int) or not 1 <= value <= 5:
                raise ValueError(f"rating {name}={value!r} outside 1..5")


@dataclass(frozen=True)
class AnnotationRecord:
    participant_id: str
    story_id: str
    tool_id: str
    ratings: LikertRating
    spans: tuple[AnnotationSpan, ...] = ()


@dataclass(frozen=True)
class ReferenceHighlights:
    story_id: str
    spans: tuple[tuple[str, CsiCategory], ...]

    def __post_init__(self):
        if not self.spans:
            raise ValueError(f"reference highlights for {self.story_id} are empty")


@dataclass
class Dataset:
    records: list[AnnotationRecord]
    references: dict[str, ReferenceHighlights] = field(default_factory=dict)


def composite_score(r: LikertRating) -> float:
    """Product of the five culture factors, each normalised by 5, times 100."""
    score = 100.0
    for name in COMPOSITE_FIELDS:
        score *= getattr(r, name) / 5.0
    return score


_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


def tokenize(text: str) -> list[str]:
    """Lowercase tokens split on any run of non-alphanumeric characters."""
    return _TOKEN_RE.findall(text.lower())


def _ngrams(tokens: list[str], n: int) -> list[tuple[str, ...]]:
    return [tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1)]


def ngram_precision(user_tokens: list[str], ref_tokens: list[str], n: int) -> float:
    """Modified n-gram precision: user n-grams matched against the reference
    multiset with clipping, over the total number of user n-grams."""
    user_grams = Counter(_ngrams(user_tokens, n))
    total = sum(user_grams.values())
    if total == 0:
        return 0.0
    ref_grams = Counter(_ngrams(ref_tokens, n))
    matched = sum(min(count, ref_grams[gram]) for gram, count in user_grams.items())
    return matched / total


@dataclass(frozen=True)
class RefScoreBreakdown:
    precisions: tuple[float, float, float, float]
    penalty: float
    score: float
    ref_len: int
    user_len: int


def reference_based_score(
    user_spans: list[str],
    ref: ReferenceHighlights,
    penalty_mode: str = "intended",
) -> RefScoreBreakdown:
    """Score participant highlights against expert reference highlights.

    Geometric mean of modified n-gram precisions (n = 1..4, no smoothing)
    multiplied by an over-highlighting penalty. The default penalty is
    min(1, e^(1 - |p|/|r|)); ``penalty_mode="literal"`` keeps the printed
    min(1, 1 - e^(|r|/|p|)) form for auditability.
    """
    ref_tokens: list[str] = []
    for text, _ in ref.spans:
        ref_tokens.extend(tokenize(text))
    if not ref_tokens:
        raise EmptyReference(f"reference for {ref.story_id} has no tokens")

    user_tokens: list[str] = []
    for text in user_spans:
        user_tokens.extend(tokenize(text))
    if not user_tokens:
        return RefScoreBreakdown(
            precisions=(0.0, 0.0, 0.0, 0.0),
            penalty=0.0,
            score=0.0,
            ref_len=len(ref_tokens),
            user_len=0,
        )

    precisions = tuple(ngram_precision(user_tokens, ref_tokens, n) for n in range(1, 5))
    if any(p == 0.0 for p in precisions):
        gm = 0.0
    else:
        gm = math.prod(precisions) ** 0.25

    r_len, p_len = len(ref_tokens), len(user_tokens)
    if penalty_mode == "literal":
        penalty = min(1.0, 1.0 - math.exp(r_len / p_len))
    elif penalty_mode == "intended":
        penalty = min(1.0, math.exp(1.0 - p_len / r_len))
    else:
        raise ValueError(f"unknown penalty mode: {penalty_mode}")
    return RefScoreBreakdown(
        precisions=precisions,
        penalty=penalty,
        score=penalty * gm,
        ref_len=r_len,
        user_len=p_len,
    )


def _matching(records: list[AnnotationRecord], story_id: str, tool_id: str) -> list[AnnotationRecord]:
    return [r for r in records if r.story_id == story_id and r.tool_id == tool_id]


def participant_severity_sum(record: AnnotationRecord) -> int:
    return sum(span.severity for span in record.spans)


def csi_score(records: list[AnnotationRecord], story_id: str, tool_id: str) -> float:
    """Mean over participants of their per-record severity sums."""
    matching = _matching(records, story_id, tool_id)
    if not matching:
        raise EmptyGroup(f"no records for story={story_id!r} tool={tool_id!r}")
    sums = [participant_severity_sum(r) for r in matching]
    return sum(sums) / len(sums)


def csi_overall_score(records: list[AnnotationRecord], tool_id: str) -> float:
    """Mean of per-story CSI scores for one tool."""
    stories = sorted({r.story_id for r in records if r.tool_id == tool_id})
    if not stories:
        raise EmptyGroup(f"no records for tool={tool_id!r}")
    return sum(csi_score(records, story, tool_id) for story in stories) / len(stories)


# --- dataset ingestion -------------------------------------------------------


def dataset_schema() -> dict:
    text = resources.files("kahani.schemas").joinpath("annotations.schema.json").read_text("utf-8")
    return json.loads(text)


def validate_dataset_document(data: object) -> list[str]:
    """Schema plus uniqueness checks; returns human-readable violations."""
    validator = jsonschema.Draft202012Validator(dataset_schema())
    problems = []
    for error in sorted(validator.iter_errors(data), key=lambda e: list(e.absolute_path)):
        where = "/".join(str(p) for p in error.absolute_path) or "<root>"
        problems.append(f"{where}: {error.message}")
    if isinstance(data, dict) and isinstance(data.get("records"), list):
        seen: set[tuple] = set()
        for i, rec in enumerate(data["records"]):
            if not isinstance(rec, dict):
                continue
            key = (rec.get("participant_id"), rec.get("story_id"), rec.get("tool_id"))
            if all(key):
                if key in seen:
                    problems.append(f"records/{i}: duplicate (participant, story, tool) triple {key}")
                seen.add(key)
    return problems


def load_dataset(path: Path | str) -> Dataset:
    data = json.loads(Path(path).read_text("utf-8"))
    problems = validate_dataset_document(data)
    if problems:
        raise DatasetError(problems)

    records = []
    for rec in data["records"]:
        spans = tuple(
            AnnotationSpan(
                text=s["text"],
                category=CsiCategory(s["category"]),
                severity=s["severity"],
                comment=s.get("comment"),
            )
            for s in rec.get("spans", [])
        )
        records.append(
            AnnotationRecord(
                participant_id=rec["participant_id"],
                story_id=rec["story_id"],
                tool_id=rec["tool_id"],
                ratings=LikertRating(**{k: rec["ratings"][k] for k in LIKERT_FIELDS}),
                spans=spans,
            )
        )
    references = {}
    for ref in data.get("references", []):
        references[ref["story_id"]] = ReferenceHighlights(
            story_id=ref["story_id"],
            spans=tuple((s["text"], CsiCategory(s["category"])) for s in ref["spans"]),
        )
    return Dataset(records=records, references=references)
