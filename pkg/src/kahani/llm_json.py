"""Extraction and validation of structured payloads from raw LLM replies.

Stages ask for bare JSON, but real models wrap it in Markdown fences or
conversational prose. Extraction finds the first balanced JSON value that a
standard parser accepts; no repair of malformed payloads is attempted, the
pipeline retries instead.
"""

from __future__ import annotations

import json
import re

from .constants import CHARACTER_CAP, SCENE_CHARACTER_CAP, SCENE_COUNT
from .domain import ARC_ORDER, CharacterProfile, SceneContext, ScenePlan
from .errors import (
    NoJsonFound,
    SchemaMismatch,
    TooManyCharacters,
    TooManyInScene,
    UnknownCharacter,
)

_FENCE_RE = re.compile(r"^```[A-Za-z0-9_+-]*[ \t]*\n(.*?)\n?```\s*$", re.DOTALL)

_CLOSER = {"[": "]", "{": "}"}


def _strip_fences(raw: str) -> str:
    match = _FENCE_RE.match(raw.strip())
    return match.group(1) if match else raw


def _balanced_span(text: str, start: int) -> int | None:
    """Index one past the bracket matching ``text[start]``, or None."""
    opener = text[start]
    closer = _CLOSER[opener]
    depth = 0
    in_string = False
    escaped = False
    for i in range(start, len(text)):
        ch = text[i]
        if in_string:
            if escaped:
                escaped = False
            elif ch == "\\":
                escaped = True
            elif ch == '"':
                in_string = False
            continue
        if ch == '"':
            in_string = True
        elif ch == opener:
            depth += 1
        elif ch == closer:
            depth -= 1
            if depth == 0:
                return i + 1
    return None


def extract_json_payload(raw_reply: str) -> str:
    """Return the first balanced JSON object or array embedded in a reply."""
    text = _strip_fences(raw_reply)
    for i, ch in enumerate(text):
        if ch not in "[{":
            continue
        end = _balanced_span(text, i)
        if end is None:
            continue
        candidate = text[i:end]
        try:
            json.loads(candidate)
        except json.JSONDecodeError:
            continue
        return candidate
    raise NoJsonFound("no balanced JSON value in reply")


def parse_characters(json_text: str) -> list[CharacterProfile]:
    data = json.loads(json_text)
    if not isinstance(data, list) or not data:
        raise SchemaMismatch("expected a nonempty JSON list of characters")
    if len(data) > CHARACTER_CAP:
        raise TooManyCharacters(len(data))
    profiles = []
    for entry in data:
        if not isinstance(entry, dict):
            raise SchemaMismatch("character entry is not an object")
        name = entry.get("name")
        description = entry.get("description")
        if not isinstance(name, str) or not name.strip():
            raise SchemaMismatch("character name missing or empty")
        if not isinstance(description, str) or not description.strip():
            raise SchemaMismatch("character description missing or empty")
        profiles.append(CharacterProfile(name=name.strip(), description=description.strip()))
    return profiles


def parse_scene_list(json_text: str) -> list[SceneContext]:
    data = json.loads(json_text)
    if not isinstance(data, list):
        raise SchemaMismatch("expected a JSON list of scene descriptions")
    if len(data) != SCENE_COUNT:
        raise SchemaMismatch(f"expected {SCENE_COUNT} scenes, got {len(data)}")
    contexts = []
    for role, entry in zip(ARC_ORDER, data):
        if not isinstance(entry, str) or not entry.strip():
            raise SchemaMismatch("scene description is not a nonempty string")
        contexts.append(SceneContext(arc_role=role, description=entry))
    return contexts


def parse_scene_plan(json_text: str, cast: list[CharacterProfile]) -> ScenePlan:
    data = json.loads(json_text)
    if not isinstance(data, dict):
        raise SchemaMismatch("expected a JSON object for the scene plan")
    narration = data.get("narration")
    backdrop = data.get("backdrop")
    if not isinstance(narration, str) or not narration.strip():
        raise SchemaMismatch("narration missing or empty")
    if not isinstance(backdrop, str) or not backdrop.strip():
        raise SchemaMismatch("backdrop missing or empty")
    characters = data.get("characters", {})
    if not isinstance(characters, dict):
        raise SchemaMismatch("characters is not an object")
    if len(characters) > SCENE_CHARACTER_CAP:
        raise TooManyInScene(len(characters))
    known = {c.name.lower() for c in cast}
    plan_chars: dict[str, str] = {}
    for name, pose in characters.items():
        if name.lower() not in known:
            raise UnknownCharacter(name)
        if not isinstance(pose, str):
            raise SchemaMismatch(f"pose for {name!r} is not a string")
        plan_chars[name] = pose
    return ScenePlan(narration=narration, backdrop=backdrop, characters=plan_chars)
