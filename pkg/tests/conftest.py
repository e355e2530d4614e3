"""Shared fixtures and small builders for the test suite."""

from __future__ import annotations

import json
import random

import pytest

from stagescore.model import StagePlay, TaskBundle, parse_stage_play
from stagescore.synth import make_bundle


def play_text(*scenes, rooms: list[tuple[str | None, str | None]] | None = None) -> str:
    """Candidate JSON from lists of (quote_id, speaker, label) per scene."""
    obj = {}
    for i, quotes in enumerate(scenes, start=1):
        entry = {}
        if rooms is not None:
            dims, material = rooms[i - 1]
            if dims is not None:
                entry["room_dimensions"] = dims
            if material is not None:
                entry["room_material"] = material
        else:
            entry["room_dimensions"] = f"{10 + i} x 8 x 6"
            entry["room_material"] = f"material {i}"
        entry["play"] = {qid: [speaker, label] for qid, speaker, label in quotes}
        obj[f"scene_{i}"] = entry
    return json.dumps(obj)


def parse_ok(text: str) -> StagePlay:
    result = parse_stage_play(text)
    assert isinstance(result, StagePlay), f"expected valid play, got {result}"
    return result


def simple_bundle(quotes: list[tuple[str, str]], names: list[str] | None = None,
                  bundle_id: str = "b1") -> TaskBundle:
    """Bundle whose passage marks the given (quote_id, speaker) sequence."""
    if names is None:
        names = sorted({speaker for _, speaker in quotes})
    passage = " ".join(f'|{qid}| "..." ||{qid}||' for qid, _ in quotes)
    return TaskBundle(
        bundle_id=bundle_id,
        passage=passage,
        quote_ids=tuple(qid for qid, _ in quotes),
        canonical_names=frozenset(names),
        alias_map={},
        reference_speakers={qid: speaker for qid, speaker in quotes},
    )


def acceptance_bundle(seed: int) -> TaskBundle:
    """Bundle generation policy used by the acceptance suite: casts of one
    to six characters, five to forty quotes, long bundles capped to small
    casts so a maximal layout exists."""
    chars = seed % 6 + 1
    rng = random.Random(seed * 7 + 1)
    quotes = rng.randint(5, 40)
    if quotes > 30:
        chars = min(chars, 3)
    quotes = max(quotes, 2 * chars)
    return make_bundle(seed, n_characters=chars, n_quotes=quotes)


@pytest.fixture
def three_char_bundle() -> TaskBundle:
    return make_bundle(42, n_characters=3, n_quotes=12)
