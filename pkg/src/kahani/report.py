"""Single-file HTML rendering of a story bundle.

The output embeds images as base64 and references no network resources, so a
report is one shareable file. Rendering is byte-deterministic for a fixed
bundle: no timestamps or absolute paths are embedded.
"""

from __future__ import annotations

import base64
import html
from pathlib import Path

from .domain import StoryBundle

_STYLE = """
body { font-family: Georgia, serif; max-width: 860px; margin: 2rem auto; padding: 0 1rem; color: #222; }
h1, h2 { font-family: Helvetica, Arial, sans-serif; }
.scene { border: 1px solid #ccc; border-radius: 8px; padding: 1rem; margin: 1.5rem 0; }
.scene img { max-width: 100%; border-radius: 4px; }
.placeholder { background: #eee; color: #777; text-align: center; padding: 4rem 0; border-radius: 4px; }
.narration { font-style: italic; }
details { margin-top: 0.75rem; }
pre { white-space: pre-wrap; background: #f7f7f7; padding: 0.5rem; border-radius: 4px; font-size: 0.85em; }
.arc { text-transform: uppercase; letter-spacing: 0.08em; font-size: 0.8em; color: #666; }
"""


def _paragraphs(text: str) -> str:
    blocks = [b.strip() for b in text.split("\n\n") if b.strip()]
    return "\n".join(f"<p>{html.escape(b)}</p>" for b in blocks)


def render_report(bundle: StoryBundle) -> str:
    parts = [
        "<!DOCTYPE html>",
        '<html lang="en"><head><meta charset="utf-8">',
        f"<title>Visual story {html.escape(bundle.prompt.id)}</title>",
        f"<style>{_STYLE}</style></head><body>",
        "<h1>Visual story</h1>",
        f"<p><strong>Prompt:</strong> {html.escape(bundle.prompt.text)}</p>",
        "<h2>Story</h2>",
        _paragraphs(bundle.story.text),
        f"<p class='arc'>word count {bundle.story.word_count}"
        + ("" if bundle.story.length_ok else " (over limit)")
        + "</p>",
        "<h2>Scenes</h2>",
    ]
    for i, scene in enumerate(bundle.scenes, start=1):
        parts.append('<div class="scene">')
        parts.append(f'<div class="arc">Scene {i} · {html.escape(scene.context.arc_role.value)}</div>')
        if scene.image_ref and bundle.root is not None:
            png = (bundle.root / scene.image_ref).read_bytes()
            encoded = base64.b64encode(png).decode("ascii")
            parts.append(f'<img alt="scene {i}" src="data:image/png;base64,{encoded}">')
        else:
            parts.append(f'<div class="placeholder">no image rendered for scene {i}</div>')
        parts.append(f'<p class="narration">{html.escape(scene.plan.narration)}</p>')
        parts.append("<details><summary>Image prompt</summary>")
        parts.append(f"<pre>{html.escape(scene.prompt.positive)}</pre>")
        parts.append(f"<pre>Negative: {html.escape(scene.prompt.negative)}</pre></details>")
        parts.append("</div>")

    parts.append("<h2>Culture notes</h2><ol>")
    for item in bundle.culture.items:
        parts.append(f"<li>{html.escape(item)}</li>")
    parts.append("</ol>")

    parts.append("<h2>Characters</h2><ul>")
    for character in bundle.characters:
        parts.append(
            f"<li><strong>{html.escape(character.name)}</strong>: {html.escape(character.description)}</li>"
        )
    parts.append("</ul></body></html>")
    return "\n".join(parts) + "\n"


def write_report(bundle: StoryBundle, out_path: Path) -> Path:
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_text(render_report(bundle), "utf-8")
    return out_path
