"""Five-stage story pipeline: culture extraction, story writing, character
profiling, scene composition (segmentation + planning), and visual creation.

Each stage daisy-chains the previous stage's output into the next prompt.
Contract failures are retried with a one-line corrective instruction appended
to the user message, up to the configured retry budget; a stage that cannot
produce a valid artifact aborts the run and the partial bundle is persisted
with an ``incomplete`` marker.
"""

from __future__ import annotations

import hashlib
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

from .bundle import save_bundle
from .clients import (
    ChatBackend,
    ChatRequest,
    ImageBackend,
    Img2ImgRequest,
    Txt2ImgRequest,
    chat_complete,
    chat_payload,
    txt2img_payload,
)
from .constants import (
    CHARACTER_CAP,
    PROMPT_SUFFIX,
    SCENE_CHARACTER_CAP,
    SCENE_COUNT,
    WORD_LIMIT,
)
from .domain import (
    CharacterProfile,
    CultureNotes,
    GenerationParams,
    SceneContext,
    ScenePlan,
    SceneRecord,
    StageLogEntry,
    Story,
    StoryBundle,
    StoryPrompt,
    T2IPrompt,
)
from .errors import (
    BackendError,
    EmptyReply,
    FixtureMiss,
    KahaniError,
    StageFailed,
)
from .grammar import lint_prompt
from .llm_json import extract_json_payload, parse_characters, parse_scene_list, parse_scene_plan
from .prompts import render_stage


@dataclass(frozen=True)
class PipelineConfig:
    max_stage_retries: int = 2
    word_limit: int = WORD_LIMIT
    scene_count: int = SCENE_COUNT
    char_cap: int = CHARACTER_CAP
    scene_char_cap: int = SCENE_CHARACTER_CAP
    lint_strict: bool = True
    parallel_scenes: bool = False
    model: str = "gpt-4-turbo"
    temperature: float = 0.7
    seed: int | None = None
    generation: GenerationParams = field(default_factory=GenerationParams)
    allow_cap_override: bool = False

    def __post_init__(self):
        fixed = (self.scene_count, self.char_cap, self.scene_char_cap)
        if fixed != (SCENE_COUNT, CHARACTER_CAP, SCENE_CHARACTER_CAP) and not self.allow_cap_override:
            raise KahaniError("scene/character caps are fixed; set allow_cap_override to change them")
        if self.max_stage_retries < 0:
            raise KahaniError("max_stage_retries must be >= 0")


@dataclass(frozen=True)
class StageOutcome:
    stage_id: str
    attempts: int
    raw_reply: str
    parsed_ok: bool
    violations: tuple[str, ...] = ()

    def as_dict(self) -> dict:
        return {
            "stage": self.stage_id,
            "attempts": self.attempts,
            "parsed_ok": self.parsed_ok,
            "violations": list(self.violations),
        }


@dataclass
class StageRecorder:
    """Collects the raw request/reply log, stage outcomes, and wall times."""

    log: list[StageLogEntry] = field(default_factory=list)
    outcomes: list[StageOutcome] = field(default_factory=list)
    timings: dict[str, float] = field(default_factory=dict)

    def record(self, stage: str, attempt: int, request: dict, reply: str) -> None:
        self.log.append(StageLogEntry(stage=stage, attempt=attempt, request=request, reply=reply))

    def outcome(self, outcome: StageOutcome) -> None:
        self.outcomes.append(outcome)

    def timed(self, stage: str, started: float) -> None:
        self.timings[stage] = self.timings.get(stage, 0.0) + (time.monotonic() - started)

    def merge(self, other: "StageRecorder") -> None:
        self.log.extend(other.log)
        self.outcomes.extend(other.outcomes)
        for stage, seconds in other.timings.items():
            self.timings[stage] = self.timings.get(stage, 0.0) + seconds


_EMPTY_CORRECTIVE = "Your previous reply was empty. Please answer the instructions exactly."

_CORRECTIVES = {
    "character_extraction": (
        "Reminder: respond only with a valid JSON list of at most 3 characters, without backticks."
    ),
    "scene_segmentation": (
        "Reminder: respond only with a JSON list of exactly 4 scene description strings, without backticks."
    ),
    "scene_planning": (
        "Reminder: respond only with a JSON object with keys narration, backdrop and characters "
        "(at most 2, chosen from the provided cast), without backticks."
    ),
    "t2i_crafting": (
        "Reminder: output only the prompt text, use generic identifiers instead of character names, "
        "and end with: masterpiece, sharp focus, highly detailed, cartoon"
    ),
}


def _ask(
    stage: str,
    system: str,
    user: str,
    attempt: int,
    llm: ChatBackend,
    cfg: PipelineConfig,
    recorder: StageRecorder,
) -> str:
    req = ChatRequest(
        model=cfg.model, system=system, user=user, temperature=cfg.temperature, seed=cfg.seed
    )
    try:
        reply = chat_complete(req, llm)
    except FixtureMiss as exc:
        # A replay miss is not retryable: the same request would miss again.
        raise StageFailed(stage, str(exc)) from exc
    recorder.record(stage, attempt, chat_payload(req), reply)
    return reply


def _run_chat_stage(
    stage: str,
    template_stage: str,
    variables: dict[str, str],
    llm: ChatBackend,
    cfg: PipelineConfig,
    recorder: StageRecorder,
    validate,
):
    """Attempt loop shared by every parsing stage."""
    started = time.monotonic()
    rendered = render_stage(template_stage, variables)
    corrective = _CORRECTIVES.get(template_stage, "Please follow the instructions exactly.")
    violations: list[str] = []
    user = rendered.user
    reply = ""
    attempts = 0
    try:
        for attempt in range(1, cfg.max_stage_retries + 2):
            attempts = attempt
            reply = _ask(stage, rendered.system, user, attempt, llm, cfg, recorder)
            if not reply.strip():
                violations.append("empty reply")
                user = rendered.user + "\n\n" + _EMPTY_CORRECTIVE
                continue
            try:
                value = validate(reply)
            except KahaniError as exc:
                violations.append(str(exc))
                user = rendered.user + "\n\n" + corrective
                continue
            recorder.outcome(StageOutcome(stage, attempts, reply, True, tuple(violations)))
            return value
        recorder.outcome(StageOutcome(stage, attempts, reply, False, tuple(violations)))
        if violations and violations[-1] == "empty reply":
            raise EmptyReply(f"stage {stage}: model returned nothing after {attempts} attempts")
        raise StageFailed(stage, violations[-1] if violations else "no attempts made")
    finally:
        recorder.timed(stage, started)


def extract_culture(
    prompt: StoryPrompt,
    prior_notes: CultureNotes,
    llm: ChatBackend,
    cfg: PipelineConfig,
    recorder: StageRecorder,
) -> CultureNotes:
    def validate(reply: str) -> CultureNotes:
        return CultureNotes.from_reply(reply, prompt.id)

    return _run_chat_stage(
        "culture_extraction",
        "culture_extraction",
        {"cultural_context": prior_notes.as_text(), "user_input": prompt.text},
        llm,
        cfg,
        recorder,
        validate,
    )


def write_story(
    prompt: StoryPrompt,
    notes: CultureNotes,
    llm: ChatBackend,
    cfg: PipelineConfig,
    recorder: StageRecorder,
) -> Story:
    started = time.monotonic()
    rendered = render_stage(
        "story_writing",
        {"story": "", "cultural_context": notes.as_text(), "user_input": prompt.text},
    )
    brevity = f"Please rewrite the story in at most {cfg.word_limit} words."
    user = rendered.user
    brevity_retried = False
    empties = 0
    attempts = 0
    try:
        while True:
            attempts += 1
            reply = _ask("story_writing", rendered.system, user, attempts, llm, cfg, recorder)
            if not reply.strip():
                empties += 1
                if empties > cfg.max_stage_retries:
                    recorder.outcome(StageOutcome("story_writing", attempts, reply, False, ("empty reply",)))
                    raise EmptyReply(f"stage story_writing: model returned nothing after {attempts} attempts")
                user = rendered.user + "\n\n" + _EMPTY_CORRECTIVE
                continue
            story = Story.from_text(reply.strip(), prompt.id, cfg.word_limit)
            if story.length_ok or brevity_retried:
                violations = () if story.length_ok else (f"story exceeds {cfg.word_limit} words",)
                recorder.outcome(StageOutcome("story_writing", attempts, reply, True, violations))
                return story
            # The length limit is a soft contract: one corrective re-ask, then
            # accept the overrun with length_ok cleared.
            brevity_retried = True
            user = rendered.user + "\n\n" + brevity
    finally:
        recorder.timed("story_writing", started)


def profile_characters(
    story: Story, llm: ChatBackend, cfg: PipelineConfig, recorder: StageRecorder
) -> list[CharacterProfile]:
    if not story.text.strip():
        raise KahaniError("cannot profile characters of an empty story")

    def validate(reply: str) -> list[CharacterProfile]:
        return parse_characters(extract_json_payload(reply))

    return _run_chat_stage(
        "character_extraction",
        "character_extraction",
        {"story": story.text},
        llm,
        cfg,
        recorder,
        validate,
    )


def _cast_json(cast: list[CharacterProfile]) -> str:
    return json.dumps(
        [{"name": c.name, "description": c.description} for c in cast], ensure_ascii=False
    )


def segment_scenes(
    story: Story, cast: list[CharacterProfile], llm: ChatBackend, cfg: PipelineConfig, recorder: StageRecorder
) -> list[SceneContext]:
    def validate(reply: str) -> list[SceneContext]:
        return parse_scene_list(extract_json_payload(reply))

    return _run_chat_stage(
        "scene_segmentation",
        "scene_segmentation",
        {"story": story.text, "characters": _cast_json(cast)},
        llm,
        cfg,
        recorder,
        validate,
    )


def plan_scene(
    scene: SceneContext,
    story: Story,
    cast: list[CharacterProfile],
    llm: ChatBackend,
    cfg: PipelineConfig,
    recorder: StageRecorder,
    scene_index: int = 0,
) -> ScenePlan:
    def validate(reply: str) -> ScenePlan:
        return parse_scene_plan(extract_json_payload(reply), cast)

    stage = f"scene_planning_{scene_index}" if scene_index else "scene_planning"
    return _run_chat_stage(
        stage,
        "scene_planning",
        {"story": story.text, "characters": _cast_json(cast), "context": scene.description},
        llm,
        cfg,
        recorder,
        validate,
    )


def craft_t2i_prompt(
    plan: ScenePlan,
    cast: list[CharacterProfile],
    llm: ChatBackend,
    cfg: PipelineConfig,
    recorder: StageRecorder,
    scene_index: int = 1,
) -> T2IPrompt:
    cast_names = [c.name for c in cast]
    in_scene = [c for c in cast if c.name.lower() in {n.lower() for n in plan.characters}]
    described = in_scene or cast

    def validate(reply: str) -> T2IPrompt:
        positive = reply.strip()
        if cfg.lint_strict:
            problems = lint_prompt(positive, cast_names)
            if problems:
                kind, detail = problems[0]
                raise KahaniError(f"lint violation {kind}: {detail}")
        if not positive.endswith(PROMPT_SUFFIX):
            raise KahaniError("missing mandatory suffix")
        return T2IPrompt.from_positive(positive, scene_index)  # grammar check

    stage = f"t2i_crafting_{scene_index}" if scene_index else "t2i_crafting"
    return _run_chat_stage(
        stage,
        "t2i_crafting",
        {
            "backdrop": plan.backdrop,
            "action": json.dumps(plan.characters, ensure_ascii=False),
            "description": _cast_json(described),
            "narration": plan.narration,
        },
        llm,
        cfg,
        recorder,
        validate,
    )


def generate_visual(
    prompt: T2IPrompt,
    params: GenerationParams,
    t2i: ImageBackend,
    out_dir: Path,
    recorder: StageRecorder,
) -> Path:
    started = time.monotonic()
    stage = f"visual_generation_{prompt.scene_index}"
    req = Txt2ImgRequest(
        prompt=prompt.positive,
        negative_prompt=prompt.negative,
        steps=params.steps,
        sampler_name=params.sampler_name,
        width=params.width,
        height=params.height,
        denoising_strength=params.refiner_denoise,
        seed=params.seed,
    )
    try:
        png = t2i.txt2img(req)
        recorder.record(stage, 1, txt2img_payload(req), _png_note(png))
        if params.two_pass:
            second = Img2ImgRequest(
                prompt=prompt.positive,
                negative_prompt=prompt.negative,
                init_png=png,
                steps=params.steps,
                sampler_name=params.sampler_name,
                width=params.width,
                height=params.height,
                denoising_strength=params.refiner_denoise,
                seed=params.seed,
            )
            png = t2i.img2img(second)
            request = txt2img_payload(req) | {"init_images": ["<base64 png>"], "pass": 2}
            recorder.record(stage, 2, request, _png_note(png))
        out_dir.mkdir(parents=True, exist_ok=True)
        path = out_dir / f"scene_{prompt.scene_index}.png"
        path.write_bytes(png)
        recorder.outcome(StageOutcome(stage, 1, _png_note(png), True))
        return path
    finally:
        recorder.timed(stage, started)


def _png_note(png: bytes) -> str:
    return f"png bytes={len(png)} sha256={hashlib.sha256(png).hexdigest()}"


def _config_echo(cfg: PipelineConfig, text_only: bool) -> dict:
    gen = cfg.generation
    return {
        "word_limit": cfg.word_limit,
        "scene_count": cfg.scene_count,
        "char_cap": cfg.char_cap,
        "scene_char_cap": cfg.scene_char_cap,
        "caps_overridden": cfg.allow_cap_override,
        "lint_strict": cfg.lint_strict,
        "parallel_scenes": cfg.parallel_scenes,
        "model": cfg.model,
        "temperature": cfg.temperature,
        "seed": cfg.seed,
        "text_only": text_only,
        "generation": {
            "steps": gen.steps,
            "sampler_name": gen.sampler_name,
            "refiner_denoise": gen.refiner_denoise,
            "width": gen.width,
            "height": gen.height,
            "seed": gen.seed,
            "two_pass": gen.two_pass,
        },
    }


def run_pipeline(
    prompt: StoryPrompt,
    cfg: PipelineConfig,
    llm: ChatBackend,
    t2i: ImageBackend | None = None,
    out_dir: Path | str = "runs",
    recorder: StageRecorder | None = None,
) -> StoryBundle:
    """Execute all stages in order and persist the resulting bundle.

    With ``t2i`` absent the run is text-only and scenes carry no image_ref.
    On stage failure the partial bundle is saved with an ``incomplete``
    marker and the error re-raised.
    """
    recorder = recorder if recorder is not None else StageRecorder()
    root = Path(out_dir) / prompt.id

    culture = CultureNotes(items=(), source_prompt_id=prompt.id)
    story = Story.from_text("", prompt.id, cfg.word_limit)
    cast: list[CharacterProfile] = []
    scenes: list[SceneRecord] = []
    try:
        culture = extract_culture(prompt, CultureNotes(source_prompt_id=prompt.id), llm, cfg, recorder)
        story = write_story(prompt, culture, llm, cfg, recorder)
        cast = profile_characters(story, llm, cfg, recorder)
        contexts = segment_scenes(story, cast, llm, cfg, recorder)

        def compose(idx_context: tuple[int, SceneContext]) -> tuple[int, SceneRecord, StageRecorder]:
            index, context = idx_context
            local = StageRecorder()
            plan = plan_scene(context, story, cast, llm, cfg, local, scene_index=index)
            t2i_prompt = craft_t2i_prompt(plan, cast, llm, cfg, local, scene_index=index)
            return index, SceneRecord(context=context, plan=plan, prompt=t2i_prompt), local

        indexed = list(enumerate(contexts, start=1))
        if cfg.parallel_scenes:
            with ThreadPoolExecutor(max_workers=len(indexed)) as pool:
                futures = [pool.submit(compose, item) for item in indexed]
                # Consume in scene order so logs, outcomes, and partial
                # progress stay deterministic even under concurrency.
                for future in futures:
                    _, record, local = future.result()
                    recorder.merge(local)
                    scenes.append(record)
        else:
            for item in indexed:
                _, record, local = compose(item)
                recorder.merge(local)
                scenes.append(record)

        if t2i is not None:
            for i, record in enumerate(scenes):
                path = generate_visual(record.prompt, cfg.generation, t2i, root / "images", recorder)
                scenes[i] = replace(record, image_ref=f"images/{path.name}")

        bundle = StoryBundle(
            prompt=prompt,
            culture=culture,
            story=story,
            characters=cast,
            scenes=scenes,
            stage_log=list(recorder.log),
            word_limit=cfg.word_limit,
        )
        save_bundle(bundle, root, _config_echo(cfg, t2i is None), [o.as_dict() for o in recorder.outcomes])
        return bundle
    except (StageFailed, BackendError, EmptyReply) as exc:
        stage = getattr(exc, "stage", None) or (recorder.log[-1].stage if recorder.log else "startup")
        partial = StoryBundle(
            prompt=prompt,
            culture=culture,
            story=story,
            characters=cast,
            scenes=scenes,
            stage_log=list(recorder.log),
            word_limit=cfg.word_limit,
            incomplete=True,
            failure={"stage": stage, "error": str(exc)},
        )
        save_bundle(partial, root, _config_echo(cfg, t2i is None), [o.as_dict() for o in recorder.outcomes])
        raise
