#!/usr/bin/env python3
"""Regenerate the shipped synthetic annotation dataset.

18 participants, 2 stories each, both tools per story: 72 records. Ratings
and highlight spans are drawn from a seeded generator with one tool biased
higher so the comparison tables have visible structure. Usage:

    python3 scripts/build_synthetic_dataset.py
"""

from __future__ import annotations

import json
import random
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
OUT = ROOT / "data" / "synthetic_annotations.json"

STORIES = ("nandu", "preeti", "ojas", "amrutha", "bala")

REFERENCES = {
    "nandu": [
        ("Rice paddies", "ecology"),
        ("Backwaters", "ecology"),
        ("Coconut shell", "ecology"),
        ("Palm leaf", "ecology"),
        ("Jackfruit chips", "personal_life"),
        ("Karuthamma", "proper_nouns"),
    ],
    "preeti": [
        ("Local market", "social_life"),
        ("Small family shops", "social_life"),
        ("Local street food", "social_life"),
        ("Legends and superstitions", "customs_and_pursuits"),
        ("Mural", "private_passions"),
    ],
    "ojas": [
        ("Boarding school", "social_life"),
        ("Cricket match", "customs_and_pursuits"),
        ("Students Playing cards", "private_passions"),
        ("Reading comic book", "private_passions"),
        ("Dehradun", "proper_nouns"),
    ],
    "amrutha": [
        ("Western Ghats", "ecology"),
        ("Jalebi", "personal_life"),
        ("Rice", "personal_life"),
        ("Community", "public_life"),
        ("Diwali", "private_passions"),
    ],
    "bala": [
        ("Barefeet", "customs_and_pursuits"),
        ("Kabbadi", "customs_and_pursuits"),
        ("Village", "public_life"),
        ("Mr. Kumar", "proper_nouns"),
    ],
}

DISTRACTORS = [
    ("school bus", "public_life"),
    ("sunny morning", "ecology"),
    ("pizza party", "personal_life"),
    ("shopping mall", "social_life"),
    ("video game", "private_passions"),
]


def clip(value: float) -> int:
    return max(1, min(5, round(value)))


def make_ratings(rng: random.Random, strong: bool) -> dict:
    center = 4.0 if strong else 2.8
    keys = (
        "cultural_nuance",
        "culture_specific_words",
        "plot",
        "scene_selection",
        "image_consistency",
        "character_depiction",
        "cultural_accuracy",
    )
    return {key: clip(rng.gauss(center, 0.9)) for key in keys}


def make_spans(rng: random.Random, story: str, strong: bool) -> list[dict]:
    pool = REFERENCES[story]
    n_hits = rng.randint(2, 4) if strong else rng.randint(1, 2)
    spans = []
    for text, category in rng.sample(pool, min(n_hits, len(pool))):
        severity = rng.choices((1, 0, -1), weights=(7, 2, 1) if strong else (4, 4, 2))[0]
        spans.append({"text": text, "category": category, "severity": severity})
    if rng.random() < 0.5:
        text, category = rng.choice(DISTRACTORS)
        spans.append({"text": text, "category": category, "severity": 0})
    return spans


def main() -> None:
    rng = random.Random(20240512)
    records = []
    for p in range(1, 19):
        participant = f"p{p:02d}"
        first = STORIES[(p - 1) % len(STORIES)]
        second = STORIES[(p + 1) % len(STORIES)]
        for story in (first, second):
            for tool in ("kahani", "chatgpt"):
                strong = tool == "kahani"
                records.append(
                    {
                        "participant_id": participant,
                        "story_id": story,
                        "tool_id": tool,
                        "ratings": make_ratings(rng, strong),
                        "spans": make_spans(rng, story, strong),
                    }
                )

    references = [
        {
            "story_id": story,
            "spans": [{"text": text, "category": category} for text, category in spans],
        }
        for story, spans in REFERENCES.items()
    ]
    document = {"schema_version": 1, "records": records, "references": references}
    OUT.write_text(json.dumps(document, indent=2, ensure_ascii=False) + "\n", "utf-8")
    print(f"wrote {len(records)} records to {OUT}")


if __name__ == "__main__":
    main()
