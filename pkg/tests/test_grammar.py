"""Weighted prompt grammar: parsing, round-trip identity, and lint rules."""

from __future__ import annotations

import random

import pytest

from kahani.errors import BadWeight, UnbalancedParens
from kahani.grammar import lint_prompt, parse_prompt, serialize_segments

from conftest import random_prompt

BOY_AND_DOG = (
    "Boy and dog, ((boy in a bright yellow cotton T-shirt and navy blue shorts, running "
    "excitedly, a big smile, short curly hair bouncing:1.2)), ((golden-furred dog with red "
    "collar, running with tongue out, tail wagging, alert ears:1.2)), (Marina Beach at "
    "sunrise, panoramic ocean view, Chennai cityscape, sand with colorful kites, iconic palm "
    "trees, South Indian stalls with architectural motifs), (Kids illustration, Pixar "
    "style:1.2), masterpiece, sharp focus, highly detailed, cartoon"
)

GIRL_AND_BOY = (
    "Girl and Boy, ((Girl 10 years old, red sweater, light brown skin, straight dark hair, "
    "carrying gold chalice:1.2)), ((Boy 11 years old, navy blue jacket, curly brown hair, "
    "carrying a gold box:1.2)), Twilight, aged building with peeling paint and overgrown ivy, "
    "warm hues of the setting sun, twinkling town lights in the distance, silhouette of "
    "mountains, (Kids illustration, Pixar style:1.2), masterpiece, sharp focus, highly "
    "detailed, cartoon"
)


def test_single_weighted_group():
    segments = parse_prompt("(Kids illustration, Pixar style:1.2)")
    assert len(segments) == 1
    seg = segments[0]
    assert seg.text == "Kids illustration, Pixar style"
    assert seg.weight == pytest.approx(1.2)
    assert seg.emphasis_depth == 1


def test_plain_default_weight():
    segments = parse_prompt("masterpiece")
    assert len(segments) == 1
    assert segments[0].weight == 1.0
    assert segments[0].emphasis_depth == 0
    assert segments[0].text == "masterpiece"


def test_mixed_depths_hand_parse():
    raw = "((boy running:1.2)), (beach), cartoon"
    segments = parse_prompt(raw)
    assert [s.emphasis_depth for s in segments] == [2, 1, 0]
    assert [s.weight for s in segments] == [pytest.approx(1.2), 1.0, 1.0]
    assert [s.text for s in segments] == ["boy running", "beach", "cartoon"]
    assert serialize_segments(segments) == raw


def test_commas_inside_groups_do_not_split():
    segments = parse_prompt("(a, b, c), d")
    assert len(segments) == 2
    assert segments[0].text == "a, b, c"


@pytest.mark.parametrize("raw", [BOY_AND_DOG, GIRL_AND_BOY])
def test_example_prompts_round_trip(raw):
    assert serialize_segments(parse_prompt(raw)) == raw


def test_round_trip_property_randomized():
    rng = random.Random(4821)
    for _ in range(300):
        raw = random_prompt(rng)
        segments = parse_prompt(raw)
        assert serialize_segments(segments) == raw


def test_reparse_preserves_structure():
    rng = random.Random(77)
    for _ in range(100):
        raw = random_prompt(rng)
        first = parse_prompt(raw)
        second = parse_prompt(serialize_segments(first))
        assert [(s.text, s.weight, s.emphasis_depth) for s in first] == [
            (s.text, s.weight, s.emphasis_depth) for s in second
        ]


def test_unbalanced_open():
    with pytest.raises(UnbalancedParens) as exc:
        parse_prompt("(boy running, beach")
    assert exc.value.position == 0


def test_unbalanced_close_reports_offset():
    with pytest.raises(UnbalancedParens) as exc:
        parse_prompt("boy) running")
    assert exc.value.position == 3


def test_weight_ceiling():
    with pytest.raises(BadWeight) as exc:
        parse_prompt("(boy:2.5)")
    assert exc.value.token == "2.5"


def test_weight_zero_rejected():
    with pytest.raises(BadWeight):
        parse_prompt("(boy:0)")


def test_weight_two_allowed():
    assert parse_prompt("(boy:2.0)")[0].weight == 2.0


def test_non_numeric_colon_suffix_is_literal():
    segments = parse_prompt("(note: bring water)")
    assert segments[0].text == "note: bring water"
    assert segments[0].weight == 1.0


def test_weight_format_preserved_in_round_trip():
    for raw in ["(x:1)", "(x:1.0)", "(x:0.80)", "((y:1.20))"]:
        assert serialize_segments(parse_prompt(raw)) == raw


SUFFIX = "masterpiece, sharp focus, highly detailed, cartoon"


def test_lint_clean_example_prompt():
    assert lint_prompt(BOY_AND_DOG, ["Bala", "Sheru"]) == []


def test_lint_flags_cast_name():
    out = lint_prompt(f"Preeti runs, {SUFFIX}", ["Preeti"])
    assert ("character_name", "Preeti") in out


def test_lint_cast_name_whole_word_only():
    # "Preetika" must not trigger a whole-word match for "Preeti"
    assert lint_prompt(f"Preetika runs, {SUFFIX}", ["Preeti"]) == []


def test_lint_cast_name_case_insensitive():
    out = lint_prompt(f"PREETI runs, {SUFFIX}", ["Preeti"])
    assert ("character_name", "Preeti") in out


def test_lint_flags_bad_weight():
    out = lint_prompt(f"((boy running:3.0)), {SUFFIX}", [])
    assert ("bad_weight", "3.0") in out


def test_lint_flags_missing_suffix():
    out = lint_prompt("(boy running:1.2)", [])
    assert any(kind == "missing_suffix" for kind, _ in out)


def test_lint_flags_grammar_error():
    out = lint_prompt(f"((boy running, {SUFFIX}", [])
    assert any(kind == "grammar" for kind, _ in out)
