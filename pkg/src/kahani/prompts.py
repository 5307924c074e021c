"""Prompt-template registry: loads stage templates from data files and renders them.

Each stage has one data file under ``templates/`` with ``---SYSTEM---`` and
``---USER---`` section markers. Placeholders are lowercase names in curly
braces; all other braces in a template are literal text and survive rendering.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

from .errors import KahaniError, MissingVariable

STAGE_IDS = (
    "culture_extraction",
    "story_writing",
    "character_extraction",
    "scene_segmentation",
    "scene_planning",
    "t2i_crafting",
)

_PLACEHOLDER_RE = re.compile(r"\{([a-z_]+)\}")


@dataclass(frozen=True)
class PromptTemplate:
    stage_id: str
    system_template: str
    user_template: str
    required_vars: frozenset[str]


@dataclass(frozen=True)
class RenderedPrompt:
    system: str
    user: str
    stage_id: str


def _placeholders(text: str) -> set[str]:
    return set(_PLACEHOLDER_RE.findall(text))


def _parse_template_file(stage_id: str, raw: str) -> PromptTemplate:
    lines = raw.split("\n")
    if not lines or lines[0] != "---SYSTEM---":
        raise KahaniError(f"template {stage_id}: missing ---SYSTEM--- header")
    try:
        split = lines.index("---USER---")
    except ValueError:
        raise KahaniError(f"template {stage_id}: missing ---USER--- marker") from None
    system = "\n".join(lines[1:split]).strip("\n")
    user = "\n".join(lines[split + 1 :]).strip("\n")
    return PromptTemplate(
        stage_id=stage_id,
        system_template=system,
        user_template=user,
        required_vars=frozenset(_placeholders(system) | _placeholders(user)),
    )


def template_text(stage_id: str) -> str:
    """Raw bytes of a stage's template data file, decoded as UTF-8."""
    return resources.files("kahani").joinpath("templates", f"{stage_id}.txt").read_text("utf-8")


@lru_cache(maxsize=1)
def load_templates() -> dict[str, PromptTemplate]:
    registry = {stage: _parse_template_file(stage, template_text(stage)) for stage in STAGE_IDS}
    return registry


def get_template(stage_id: str) -> PromptTemplate:
    try:
        return load_templates()[stage_id]
    except KeyError:
        raise KahaniError(f"unknown stage id: {stage_id}") from None


def _substitute(template: str, variables: dict[str, str], required: frozenset[str]) -> str:
    def repl(match: re.Match) -> str:
        name = match.group(1)
        if name not in required:
            return match.group(0)
        return variables[name]

    return _PLACEHOLDER_RE.sub(repl, template)


def render_template(template: PromptTemplate, variables: dict[str, str]) -> RenderedPrompt:
    """Substitute every placeholder in one pass; literal braces are untouched."""
    missing = template.required_vars - set(variables)
    if missing:
        raise MissingVariable(sorted(missing)[0])
    return RenderedPrompt(
        system=_substitute(template.system_template, variables, template.required_vars),
        user=_substitute(template.user_template, variables, template.required_vars),
        stage_id=template.stage_id,
    )


def render_stage(stage_id: str, variables: dict[str, str]) -> RenderedPrompt:
    return render_template(get_template(stage_id), variables)
