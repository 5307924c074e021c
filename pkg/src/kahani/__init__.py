"""Culturally grounded visual-storytelling pipeline and evaluation toolkit."""

from .constants import NEGATIVE_PROMPT, PROMPT_SUFFIX
from .domain import (
    ArcRole,
    CharacterProfile,
    CultureNotes,
    GenerationParams,
    SceneContext,
    ScenePlan,
    SceneRecord,
    Story,
    StoryBundle,
    StoryPrompt,
    T2IPrompt,
    count_words,
    validate_bundle,
)
from .bundle import load_bundle, save_bundle
from .evaluation import (
    AnnotationRecord,
    AnnotationSpan,
    CsiCategory,
    LikertRating,
    ReferenceHighlights,
    composite_score,
    csi_overall_score,
    csi_score,
    load_dataset,
    ngram_precision,
    reference_based_score,
    tokenize,
)
from .grammar import WeightedSegment, lint_prompt, parse_prompt, serialize_segments
from .pipeline import PipelineConfig, StageRecorder, run_pipeline
from .wilcoxon import WilcoxonResult, wilcoxon_signed_rank

__version__ = "0.1.0"

__all__ = [
    "ArcRole",
    "AnnotationRecord",
    "AnnotationSpan",
    "CharacterProfile",
    "CsiCategory",
    "CultureNotes",
    "GenerationParams",
    "LikertRating",
    "NEGATIVE_PROMPT",
    "PROMPT_SUFFIX",
    "PipelineConfig",
    "ReferenceHighlights",
    "SceneContext",
    "ScenePlan",
    "SceneRecord",
    "StageRecorder",
    "Story",
    "StoryBundle",
    "StoryPrompt",
    "T2IPrompt",
    "WeightedSegment",
    "WilcoxonResult",
    "composite_score",
    "count_words",
    "csi_overall_score",
    "csi_score",
    "lint_prompt",
    "load_bundle",
    "load_dataset",
    "ngram_precision",
    "parse_prompt",
    "reference_based_score",
    "run_pipeline",
    "save_bundle",
    "serialize_segments",
    "tokenize",
    "validate_bundle",
    "wilcoxon_signed_rank",
]
