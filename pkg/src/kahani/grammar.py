"""Weighted-segment grammar for text-to-image prompts.

A prompt is a comma-joined sequence of segments. A segment is either plain
text or a parenthesised group; ``((...))`` style nesting raises the segment's
emphasis depth, and a group may carry an attention weight written as a
``:w`` suffix just inside its parentheses, e.g. ``(Kids illustration, Pixar
style:1.2)``. Commas inside groups do not split segments. Parsing keeps
enough surrounding whitespace and the raw weight token so that
``serialize(parse(s)) == s`` byte for byte.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .constants import PROMPT_SUFFIX
from .errors import BadWeight, KahaniError, UnbalancedParens

_WEIGHT_RE = re.compile(r"^\d+(?:\.\d+)?$")


@dataclass(frozen=True)
class WeightedSegment:
    """One prompt segment with its attention weight and emphasis depth."""

    text: str
    weight: float = 1.0
    emphasis_depth: int = 0
    # Round-trip bookkeeping: whitespace around the segment body and the
    # weight token exactly as written (None when the weight was implicit).
    lead: str = ""
    trail: str = ""
    weight_text: str | None = None


def _check_balance(raw: str) -> None:
    depth = 0
    last_open = -1
    for i, ch in enumerate(raw):
        if ch == "(":
            if depth == 0:
                last_open = i
            depth += 1
        elif ch == ")":
            depth -= 1
            if depth < 0:
                raise UnbalancedParens(i)
    if depth > 0:
        raise UnbalancedParens(last_open)


def _split_top_level(raw: str) -> list[str]:
    pieces = []
    depth = 0
    start = 0
    for i, ch in enumerate(raw):
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        elif ch == "," and depth == 0:
            pieces.append(raw[start:i])
            start = i + 1
    pieces.append(raw[start:])
    return pieces


def _is_balanced(inner: str) -> bool:
    depth = 0
    for ch in inner:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
            if depth < 0:
                return False
    return depth == 0


def _split_weight(inner: str) -> tuple[str, str | None]:
    """Split ``text:1.2`` at the last depth-0 colon whose suffix is numeric."""
    depth = 0
    colon = -1
    for i, ch in enumerate(inner):
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        elif ch == ":" and depth == 0:
            colon = i
    if colon < 0:
        return inner, None
    token = inner[colon + 1 :]
    if not _WEIGHT_RE.match(token):
        return inner, None
    value = float(token)
    if not 0.0 < value <= 2.0:
        raise BadWeight(token)
    return inner[:colon], token


def _parse_piece(piece: str) -> WeightedSegment:
    body = piece.strip()
    lead = piece[: len(piece) - len(piece.lstrip())]
    trail = piece[len(lead) + len(body) :]
    if not (body.startswith("(") and body.endswith(")")):
        return WeightedSegment(text=body, lead=lead, trail=trail)

    open_run = len(body) - len(body.lstrip("("))
    close_run = len(body) - len(body.rstrip(")"))
    # Prefer the deepest reading whose interior is still balanced.
    for k in range(min(open_run, close_run, (len(body)) // 2), 0, -1):
        inner = body[k : len(body) - k]
        if _is_balanced(inner):
            text, weight_text = _split_weight(inner)
            weight = float(weight_text) if weight_text is not None else 1.0
            return WeightedSegment(
                text=text,
                weight=weight,
                emphasis_depth=k,
                lead=lead,
                trail=trail,
                weight_text=weight_text,
            )
    return WeightedSegment(text=body, lead=lead, trail=trail)


def parse_prompt(raw: str) -> list[WeightedSegment]:
    """Parse a prompt into weighted segments.

    Raises UnbalancedParens or BadWeight on grammar violations.
    """
    if not raw:
        raise KahaniError("cannot parse an empty prompt")
    _check_balance(raw)
    return [_parse_piece(piece) for piece in _split_top_level(raw)]


def serialize_segments(segments: list[WeightedSegment]) -> str:
    parts = []
    for seg in segments:
        if seg.emphasis_depth == 0:
            parts.append(seg.lead + seg.text + seg.trail)
            continue
        if seg.weight_text is not None:
            weight = f":{seg.weight_text}"
        elif seg.weight != 1.0:
            weight = f":{seg.weight:g}"
        else:
            weight = ""
        parts.append(
            seg.lead
            + "(" * seg.emphasis_depth
            + seg.text
            + weight
            + ")" * seg.emphasis_depth
            + seg.trail
        )
    return ",".join(parts)


_LintViolation = tuple  # (kind, detail)


def lint_prompt(prompt: str, cast_names: list[str]) -> list[tuple[str, str]]:
    """Check a crafted prompt against the crafting guidelines.

    Returns (kind, detail) pairs: ``character_name`` for a whole-word cast
    name occurrence, ``missing_suffix`` when the mandatory quality suffix is
    absent, ``grammar`` for unbalanced parentheses, and ``bad_weight`` for a
    weight outside (0, 2].
    """
    violations: list[tuple[str, str]] = []
    for name in cast_names:
        if re.search(rf"\b{re.escape(name)}\b", prompt, re.IGNORECASE):
            violations.append(("character_name", name))
    if not prompt.endswith(PROMPT_SUFFIX):
        violations.append(("missing_suffix", PROMPT_SUFFIX))
    try:
        parse_prompt(prompt)
    except BadWeight as exc:
        violations.append(("bad_weight", exc.token))
    except KahaniError as exc:
        violations.append(("grammar", str(exc)))
    return violations
