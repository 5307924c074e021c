"""Typed domain model for a visual-storytelling run and its invariants."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from .constants import (
    CHARACTER_CAP,
    NEGATIVE_PROMPT,
    PROMPT_SUFFIX,
    SCENE_CHARACTER_CAP,
    SCENE_COUNT,
    WORD_LIMIT,
)
from .grammar import WeightedSegment, parse_prompt, serialize_segments
from .errors import KahaniError


def count_words(text: str) -> int:
    """Number of maximal runs of non-whitespace characters."""
    return len(text.split())


def _prompt_id(text: str) -> str:
    return "p" + hashlib.sha256(text.encode("utf-8")).hexdigest()[:12]


@dataclass(frozen=True)
class StoryPrompt:
    text: str
    id: str = ""

    def __post_init__(self):
        if not self.text.strip():
            raise KahaniError("story prompt text is empty")
        if not self.id:
            object.__setattr__(self, "id", _prompt_id(self.text.strip()))


@dataclass(frozen=True)
class CultureNotes:
    items: tuple[str, ...] = ()
    source_prompt_id: str = ""

    @classmethod
    def from_reply(cls, reply: str, prompt_id: str) -> "CultureNotes":
        """Split a model reply into one note per nonempty line, kept verbatim."""
        items = tuple(line for line in reply.splitlines() if line.strip())
        return cls(items=items, source_prompt_id=prompt_id)

    def as_text(self) -> str:
        return "\n".join(self.items)


@dataclass(frozen=True)
class Story:
    text: str
    word_count: int
    prompt_id: str
    length_ok: bool = True

    @classmethod
    def from_text(cls, text: str, prompt_id: str, word_limit: int = WORD_LIMIT) -> "Story":
        n = count_words(text)
        return cls(text=text, word_count=n, prompt_id=prompt_id, length_ok=n <= word_limit)


@dataclass(frozen=True)
class CharacterProfile:
    name: str
    description: str


class ArcRole(Enum):
    INTRODUCTION = "introduction"
    CONFLICT = "conflict"
    CLIMAX = "climax"
    CONCLUSION = "conclusion"


ARC_ORDER = tuple(ArcRole)


@dataclass(frozen=True)
class SceneContext:
    arc_role: ArcRole
    description: str


@dataclass(frozen=True)
class ScenePlan:
    narration: str
    backdrop: str
    characters: dict[str, str] = field(default_factory=dict)


@dataclass(frozen=True)
class T2IPrompt:
    positive: str
    segments: tuple[WeightedSegment, ...]
    negative: str
    scene_index: int

    @classmethod
    def from_positive(cls, positive: str, scene_index: int) -> "T2IPrompt":
        return cls(
            positive=positive,
            segments=tuple(parse_prompt(positive)),
            negative=NEGATIVE_PROMPT,
            scene_index=scene_index,
        )


@dataclass(frozen=True)
class GenerationParams:
    steps: int = 50
    sampler_name: str = "DPM++ 3M SDE Karras"
    refiner_denoise: float = 0.5
    width: int = 1024
    height: int = 1024
    seed: int | None = None
    two_pass: bool = False

    def __post_init__(self):
        if self.steps < 1:
            raise KahaniError("steps must be >= 1")
        if not 0.0 <= self.refiner_denoise <= 1.0:
            raise KahaniError("refiner denoise must be within [0, 1]")
        if self.width < 1 or self.height < 1:
            raise KahaniError("image dimensions must be positive")


@dataclass(frozen=True)
class SceneRecord:
    """One composed scene: its arc slot, plan, image prompt, and rendered file."""

    context: SceneContext
    plan: ScenePlan
    prompt: T2IPrompt
    image_ref: str | None = None


@dataclass(frozen=True)
class StageLogEntry:
    stage: str
    attempt: int
    request: dict
    reply: str


@dataclass
class StoryBundle:
    prompt: StoryPrompt
    culture: CultureNotes
    story: Story
    characters: list[CharacterProfile]
    scenes: list[SceneRecord]
    stage_log: list[StageLogEntry] = field(default_factory=list)
    word_limit: int = WORD_LIMIT
    root: Path | None = None
    incomplete: bool = False
    failure: dict | None = None


@dataclass(frozen=True)
class Violation:
    type_name: str
    field: str
    rule: str

    def __str__(self) -> str:
        return f"{self.type_name}.{self.field}: {self.rule}"


def _character_names(bundle: StoryBundle) -> set[str]:
    return {c.name.lower() for c in bundle.characters}


def validate_bundle(bundle: StoryBundle) -> list[Violation]:
    """Check every domain invariant; violations are data, not failures."""
    out: list[Violation] = []

    if not bundle.prompt.text.strip():
        out.append(Violation("StoryPrompt", "text", "empty after trimming"))
    for i, item in enumerate(bundle.culture.items):
        if not item.strip():
            out.append(Violation("CultureNotes", f"items[{i}]", "empty item"))

    if bundle.story.word_count != count_words(bundle.story.text):
        out.append(Violation("Story", "word_count", "does not match whitespace-token count"))
    if bundle.story.length_ok and bundle.story.word_count > bundle.word_limit:
        out.append(
            Violation("Story", "word_count", f"exceeds {bundle.word_limit} with length_ok set")
        )

    if not 1 <= len(bundle.characters) <= CHARACTER_CAP:
        out.append(Violation("StoryBundle", "characters", f"size {len(bundle.characters)} not in [1,{CHARACTER_CAP}]"))
    for c in bundle.characters:
        if not c.name or "\n" in c.name:
            out.append(Violation("CharacterProfile", "name", "empty or contains newline"))
        if not c.description:
            out.append(Violation("CharacterProfile", "description", "empty"))

    if len(bundle.scenes) != SCENE_COUNT:
        out.append(Violation("StoryBundle", "scenes", f"size {len(bundle.scenes)} != {SCENE_COUNT}"))
    known = _character_names(bundle)
    for i, scene in enumerate(bundle.scenes, start=1):
        if i <= len(ARC_ORDER) and scene.context.arc_role is not ARC_ORDER[i - 1]:
            out.append(
                Violation("SceneContext", f"scenes[{i}].arc_role", f"expected {ARC_ORDER[i - 1].value}")
            )
        if not scene.context.description.strip():
            out.append(Violation("SceneContext", f"scenes[{i}].description", "empty"))
        if not scene.plan.narration.strip():
            out.append(Violation("ScenePlan", f"scenes[{i}].narration", "empty"))
        if not scene.plan.backdrop.strip():
            out.append(Violation("ScenePlan", f"scenes[{i}].backdrop", "empty"))
        if len(scene.plan.characters) > SCENE_CHARACTER_CAP:
            out.append(
                Violation("ScenePlan", f"scenes[{i}].characters", f"more than {SCENE_CHARACTER_CAP} characters")
            )
        for name in scene.plan.characters:
            if name.lower() not in known:
                out.append(Violation("ScenePlan", f"scenes[{i}].characters", f"unknown name {name!r}"))
        out.extend(_validate_t2i(scene.prompt, i))
        if scene.image_ref is not None:
            if bundle.root is None:
                out.append(Violation("SceneRecord", f"scenes[{i}].image_ref", "set on unrooted bundle"))
            else:
                target = bundle.root / scene.image_ref
                if not target.is_file():
                    out.append(Violation("SceneRecord", f"scenes[{i}].image_ref", "image_ref missing"))

    if bundle.incomplete:
        out.append(Violation("StoryBundle", "incomplete", "bundle marked incomplete"))
    return out


def _validate_t2i(prompt: T2IPrompt, index: int) -> list[Violation]:
    out: list[Violation] = []
    if not 1 <= prompt.scene_index <= SCENE_COUNT:
        out.append(Violation("T2IPrompt", f"scenes[{index}].scene_index", "outside 1..4"))
    if not prompt.positive.endswith(PROMPT_SUFFIX):
        out.append(Violation("T2IPrompt", f"scenes[{index}].positive", "missing mandatory suffix"))
    if prompt.negative != NEGATIVE_PROMPT:
        out.append(Violation("T2IPrompt", f"scenes[{index}].negative", "differs from fixed negative prompt"))
    try:
        if serialize_segments(list(prompt.segments)) != prompt.positive:
            out.append(Violation("T2IPrompt", f"scenes[{index}].segments", "do not round-trip to positive"))
    except KahaniError as exc:
        out.append(Violation("T2IPrompt", f"scenes[{index}].segments", f"grammar error: {exc}"))
    return out
