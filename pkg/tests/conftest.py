"""Shared fixtures and scripted backends for the test suite."""

from __future__ import annotations

import random
import struct
import zlib
from pathlib import Path

import pytest

REPO_ROOT = Path(__file__).resolve().parent.parent
PREETI_FIXTURES = REPO_ROOT / "fixtures" / "preeti"
PREETI_PROMPT_FILE = REPO_ROOT / "data" / "preeti_prompt.txt"
PREETI_STORY_FILE = REPO_ROOT / "data" / "preeti_story.txt"
SYNTHETIC_DATASET = REPO_ROOT / "data" / "synthetic_annotations.json"


def tiny_png() -> bytes:
    """Minimal valid 1x1 RGBA PNG (67 bytes)."""

    def chunk(kind: bytes, data: bytes) -> bytes:
        return struct.pack(">I", len(data)) + kind + data + struct.pack(">I", zlib.crc32(kind + data))

    signature = b"\x89PNG\r\n\x1a\n"
    ihdr = chunk(b"IHDR", struct.pack(">IIBBBBB", 1, 1, 8, 6, 0, 0, 0))
    idat = chunk(b"IDAT", zlib.compress(b"\x00" * 5, 9))
    return signature + ihdr + idat + chunk(b"IEND", b"")


class ScriptedChat:
    """Chat backend answering from a reply queue; records every request."""

    def __init__(self, replies):
        self.replies = list(replies)
        self.requests = []

    def complete(self, req) -> str:
        self.requests.append(req)
        if not self.replies:
            raise AssertionError(f"scripted chat exhausted at request: {req.user[:80]!r}")
        reply = self.replies.pop(0)
        return reply(req) if callable(reply) else reply


class ScriptedImage:
    """Image backend returning a fixed PNG; records every request."""

    def __init__(self, png: bytes | None = None):
        self.png = png if png is not None else tiny_png()
        self.requests = []

    def txt2img(self, req) -> bytes:
        self.requests.append(("txt2img", req))
        return self.png

    def img2img(self, req) -> bytes:
        self.requests.append(("img2img", req))
        return self.png


_WORDS = (
    "boy", "girl", "dog", "market", "sunrise", "kite", "mountain", "temple",
    "mural", "lantern", "river", "paddy", "cap", "boots", "monkey", "ivy",
)

_WEIGHTS = ("0.5", "0.75", "0.8", "1", "1.0", "1.2", "1.35", "1.5", "2", "2.0")


def random_prompt(rng: random.Random) -> str:
    """A grammar-valid prompt with mixed plain/group segments and spacing."""
    parts = []
    for i in range(rng.randint(1, 6)):
        words = " ".join(rng.choice(_WORDS) for _ in range(rng.randint(1, 4)))
        if rng.random() < 0.1:
            words += ": note"  # depth-0 colon stays literal text
        if rng.random() < 0.45:
            segment = words
        else:
            depth = rng.randint(1, 3)
            inner = words
            if rng.random() < 0.6:
                inner += ":" + rng.choice(_WEIGHTS)
            segment = "(" * depth + inner + ")" * depth
        lead = rng.choice(("", " ", " ", "  ")) if i > 0 else ""
        trail = " " if rng.random() < 0.1 else ""
        parts.append(lead + segment + trail)
    return ",".join(parts)


@pytest.fixture
def scripted_image():
    return ScriptedImage()
