"""On-disk layout for a pipeline run: manifest, story text, per-scene JSON,
images, and the raw stage log. Writes are deterministic so replayed runs
produce byte-identical manifests."""

from __future__ import annotations

import json
import shutil
from pathlib import Path

from .constants import MANIFEST_SCHEMA_VERSION, NEGATIVE_PROMPT
from .domain import (
    ARC_ORDER,
    CharacterProfile,
    CultureNotes,
    SceneRecord,
    SceneContext,
    ScenePlan,
    Story,
    StoryBundle,
    StoryPrompt,
    T2IPrompt,
)
from .errors import KahaniError

MANIFEST_NAME = "manifest.json"


def _dump(path: Path, payload: dict) -> None:
    path.write_text(
        json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False) + "\n", "utf-8"
    )


def _scene_payload(scene: SceneRecord, index: int) -> dict:
    return {
        "index": index,
        "arc_role": scene.context.arc_role.value,
        "context": scene.context.description,
        "plan": {
            "narration": scene.plan.narration,
            "backdrop": scene.plan.backdrop,
            "characters": scene.plan.characters,
        },
        "t2i": {
            "positive": scene.prompt.positive,
            "negative": scene.prompt.negative,
            "scene_index": scene.prompt.scene_index,
        },
        "image_ref": scene.image_ref,
    }


def manifest_payload(bundle: StoryBundle, config_echo: dict, stage_outcomes: list[dict]) -> dict:
    return {
        "schema_version": MANIFEST_SCHEMA_VERSION,
        "incomplete": bundle.incomplete,
        "failure": bundle.failure,
        "prompt": {"id": bundle.prompt.id, "text": bundle.prompt.text},
        "culture": {
            "items": list(bundle.culture.items),
            "source_prompt_id": bundle.culture.source_prompt_id,
        },
        "story": {
            "text": bundle.story.text,
            "word_count": bundle.story.word_count,
            "prompt_id": bundle.story.prompt_id,
            "length_ok": bundle.story.length_ok,
        },
        "characters": [{"name": c.name, "description": c.description} for c in bundle.characters],
        "scenes": [_scene_payload(s, i) for i, s in enumerate(bundle.scenes, start=1)],
        "config": config_echo,
        "stage_outcomes": stage_outcomes,
    }


def save_bundle(
    bundle: StoryBundle,
    root: Path,
    config_echo: dict | None = None,
    stage_outcomes: list[dict] | None = None,
) -> Path:
    root = Path(root)
    for sub in ("scenes", "log"):
        shutil.rmtree(root / sub, ignore_errors=True)
    root.mkdir(parents=True, exist_ok=True)
    (root / "scenes").mkdir()
    (root / "log").mkdir()

    _dump(root / MANIFEST_NAME, manifest_payload(bundle, config_echo or {}, stage_outcomes or []))
    (root / "story.txt").write_text(bundle.story.text, "utf-8")
    for i, scene in enumerate(bundle.scenes, start=1):
        _dump(root / "scenes" / f"scene_{i}.json", _scene_payload(scene, i))
    for k, entry in enumerate(bundle.stage_log, start=1):
        _dump(
            root / "log" / f"stage_{k:02d}_{entry.stage}.json",
            {
                "stage": entry.stage,
                "attempt": entry.attempt,
                "request": entry.request,
                "reply": entry.reply,
            },
        )
    bundle.root = root
    return root / MANIFEST_NAME


def _prompt_from_manifest(entry: dict) -> T2IPrompt:
    positive = entry["positive"]
    try:
        prompt = T2IPrompt.from_positive(positive, entry["scene_index"])
    except KahaniError:
        prompt = T2IPrompt(
            positive=positive,
            segments=(),
            negative=entry.get("negative", NEGATIVE_PROMPT),
            scene_index=entry["scene_index"],
        )
    if entry.get("negative", NEGATIVE_PROMPT) != NEGATIVE_PROMPT:
        prompt = T2IPrompt(
            positive=prompt.positive,
            segments=prompt.segments,
            negative=entry["negative"],
            scene_index=prompt.scene_index,
        )
    return prompt


def load_bundle(root: Path) -> StoryBundle:
    root = Path(root)
    manifest_path = root / MANIFEST_NAME
    if not manifest_path.is_file():
        raise KahaniError(f"no {MANIFEST_NAME} under {root}")
    data = json.loads(manifest_path.read_text("utf-8"))

    scenes = []
    for entry in data.get("scenes", []):
        role_value = entry.get("arc_role", "")
        try:
            role = next(r for r in ARC_ORDER if r.value == role_value)
        except StopIteration:
            role = ARC_ORDER[0]
        scenes.append(
            SceneRecord(
                context=SceneContext(arc_role=role, description=entry.get("context", "")),
                plan=ScenePlan(
                    narration=entry["plan"].get("narration", ""),
                    backdrop=entry["plan"].get("backdrop", ""),
                    characters=dict(entry["plan"].get("characters", {})),
                ),
                prompt=_prompt_from_manifest(entry["t2i"]),
                image_ref=entry.get("image_ref"),
            )
        )

    story = data["story"]
    return StoryBundle(
        prompt=StoryPrompt(text=data["prompt"]["text"], id=data["prompt"]["id"]),
        culture=CultureNotes(
            items=tuple(data["culture"].get("items", [])),
            source_prompt_id=data["culture"].get("source_prompt_id", ""),
        ),
        story=Story(
            text=story["text"],
            word_count=story["word_count"],
            prompt_id=story["prompt_id"],
            length_ok=story.get("length_ok", True),
        ),
        characters=[
            CharacterProfile(name=c["name"], description=c["description"])
            for c in data.get("characters", [])
        ],
        scenes=scenes,
        stage_log=[],
        word_limit=data.get("config", {}).get("word_limit", 500),
        root=root,
        incomplete=bool(data.get("incomplete", False)),
        failure=data.get("failure"),
    )
