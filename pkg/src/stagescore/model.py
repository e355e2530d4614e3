"""Domain types and strict parsing for candidate layouts and task bundles.

A candidate layout is a JSON object whose keys are ``scene_1 .. scene_K``
(contiguous from 1). Each scene holds optional ``room_dimensions`` /
``room_material`` strings and a ``play`` object mapping quote-id strings to
two-element ``[speaker, position-label]`` arrays. Parsing is strict and
total: any byte input yields either a StagePlay or a ValidityFailure, never
an exception, because downstream reward logic treats gate failures as
scored outcomes.

A task bundle is the evaluation unit: a passage with ``|id| ... ||id||``
quote markers, the ordered quote-id list, the canonical-name table with
aliases, and the reference speaker per quote.
"""

from __future__ import annotations

import enum
import json
import re
from dataclasses import dataclass, field

from .grid import POSITIONS, GridPosition

_SCENE_KEY = re.compile(r"^scene_([1-9][0-9]*)$")

# Opener |id| and closer ||id||; the double-bar alternative is listed first
# so a closer is never half-consumed as an opener.
_MARKER = re.compile(r"\|\|([^|\n]+)\|\||\|([^|\n]+)\|")


class FailureKind(str, enum.Enum):
    MALFORMED_SYNTAX = "malformed_syntax"
    SCHEMA_VIOLATION = "schema_violation"
    UNKNOWN_POSITION_LABEL = "unknown_position_label"
    DUPLICATE_QUOTE_ID = "duplicate_quote_id"
    EMPTY_PLAY = "empty_play"


@dataclass(frozen=True)
class ValidityFailure:
    """Why a candidate failed the gate. Any kind means reward zero."""

    kind: FailureKind
    detail: str


class BundleError(ValueError):
    """Raised for a malformed or inconsistent task bundle (a tool error,
    not a scored outcome)."""


@dataclass(frozen=True)
class Placement:
    quote_id: str
    speaker: str
    position: GridPosition


@dataclass(frozen=True)
class Scene:
    index: int
    room_dimensions: str | None
    room_material: str | None
    placements: tuple[Placement, ...]


@dataclass(frozen=True)
class StagePlay:
    scenes: tuple[Scene, ...]

    def placements(self) -> list[Placement]:
        return [p for scene in self.scenes for p in scene.placements]

    def quote_count(self) -> int:
        return sum(len(scene.placements) for scene in self.scenes)

    def quote_ids(self) -> list[str]:
        return [p.quote_id for p in self.placements()]


@dataclass(frozen=True)
class CharacterTimeline:
    """All placements of one character, in global quote order."""

    character: str
    steps: tuple[tuple[int, GridPosition], ...]


@dataclass(frozen=True)
class TaskBundle:
    bundle_id: str
    passage: str
    quote_ids: tuple[str, ...]
    canonical_names: frozenset[str]
    alias_map: dict[str, str] = field(default_factory=dict)
    reference_speakers: dict[str, str] = field(default_factory=dict)


# ---------------------------------------------------------------------------
# Candidate parsing


def _fail(kind: FailureKind, detail: str) -> ValidityFailure:
    return ValidityFailure(kind=kind, detail=detail)


class _Pairs(list):
    """Marks decoded JSON objects so they stay distinguishable from arrays."""


def _reject_constant(name: str):
    # NaN/Infinity are not part of strict JSON.
    raise ValueError(f"non-standard JSON constant: {name}")


def parse_stage_play(raw: bytes | str) -> StagePlay | ValidityFailure:
    """Parse candidate text into a StagePlay, or explain why it is invalid.

    Strictness rules: top-level keys must be exactly scene_1..scene_K; each
    scene needs a ``play`` object of ``[speaker, label]`` pairs; labels must
    be one of the nine cells; quote ids are unique across the whole play.
    Room fields are kept verbatim when present (their quality is scored, not
    gated). Unknown fields inside a scene are ignored; unknown top-level
    keys are rejected.
    """
    if isinstance(raw, bytes):
        try:
            raw = raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            return _fail(FailureKind.MALFORMED_SYNTAX, f"not valid UTF-8: {exc}")
    try:
        # object_pairs_hook keeps raw key/value pairs so duplicate keys are
        # detectable (dict building would silently keep the last one).
        root = json.loads(raw, object_pairs_hook=_Pairs, parse_constant=_reject_constant)
    except (ValueError, RecursionError) as exc:
        return _fail(FailureKind.MALFORMED_SYNTAX, str(exc))

    if not _is_pairs(root):
        return _fail(FailureKind.SCHEMA_VIOLATION, "top-level value must be a JSON object")

    scenes_by_index: dict[int, object] = {}
    for key, value in root:
        match = _SCENE_KEY.match(key)
        if match is None:
            return _fail(FailureKind.SCHEMA_VIOLATION, f"unexpected top-level key: {key!r}")
        index = int(match.group(1))
        if index in scenes_by_index:
            return _fail(FailureKind.SCHEMA_VIOLATION, f"duplicate scene key: {key!r}")
        scenes_by_index[index] = value

    if not scenes_by_index:
        return _fail(FailureKind.EMPTY_PLAY, "no scenes present")
    expected = set(range(1, len(scenes_by_index) + 1))
    if set(scenes_by_index) != expected:
        return _fail(
            FailureKind.SCHEMA_VIOLATION,
            f"scene keys must be contiguous scene_1..scene_{len(scenes_by_index)}; "
            f"got indices {sorted(scenes_by_index)}",
        )

    scenes: list[Scene] = []
    seen_quotes: set[str] = set()
    for index in sorted(scenes_by_index):
        result = _parse_scene(index, scenes_by_index[index], seen_quotes)
        if isinstance(result, ValidityFailure):
            return result
        scenes.append(result)

    for scene in scenes:
        if not scene.placements:
            return _fail(FailureKind.EMPTY_PLAY, f"scene_{scene.index} has no placements")
    return StagePlay(scenes=tuple(scenes))


def _is_pairs(value: object) -> bool:
    return isinstance(value, _Pairs)


def _parse_scene(index: int, value: object, seen_quotes: set[str]) -> Scene | ValidityFailure:
    if not _is_pairs(value):
        return _fail(FailureKind.SCHEMA_VIOLATION, f"scene_{index} must be a JSON object")

    seen_keys: set[str] = set()
    play_pairs = None
    room_dimensions = None
    room_material = None
    for key, val in value:
        if key in ("play", "room_dimensions", "room_material"):
            if key in seen_keys:
                return _fail(FailureKind.SCHEMA_VIOLATION, f"scene_{index} repeats key {key!r}")
            seen_keys.add(key)
        if key == "play":
            play_pairs = val
        elif key == "room_dimensions":
            if not isinstance(val, str):
                return _fail(FailureKind.SCHEMA_VIOLATION, f"scene_{index} room_dimensions must be a string")
            room_dimensions = val
        elif key == "room_material":
            if not isinstance(val, str):
                return _fail(FailureKind.SCHEMA_VIOLATION, f"scene_{index} room_material must be a string")
            room_material = val
        # other keys are ignored for forward compatibility

    if play_pairs is None:
        return _fail(FailureKind.SCHEMA_VIOLATION, f"scene_{index} is missing the play object")
    if not _is_pairs(play_pairs):
        return _fail(FailureKind.SCHEMA_VIOLATION, f"scene_{index} play must be a JSON object")

    placements: list[Placement] = []
    for quote_key, entry in play_pairs:
        quote_id = quote_key.strip()
        if not quote_id:
            return _fail(FailureKind.SCHEMA_VIOLATION, f"scene_{index} has an empty quote id")
        if quote_id in seen_quotes:
            return _fail(FailureKind.DUPLICATE_QUOTE_ID, f"quote id {quote_id!r} appears more than once")
        seen_quotes.add(quote_id)
        if not isinstance(entry, list) or len(entry) != 2:
            return _fail(
                FailureKind.SCHEMA_VIOLATION,
                f"quote {quote_id!r} must map to a [speaker, position] pair",
            )
        speaker_raw, label_raw = entry
        if not isinstance(speaker_raw, str) or not isinstance(label_raw, str):
            return _fail(
                FailureKind.SCHEMA_VIOLATION,
                f"quote {quote_id!r} speaker and position must be strings",
            )
        speaker = speaker_raw.strip()
        if not speaker:
            return _fail(FailureKind.SCHEMA_VIOLATION, f"quote {quote_id!r} has an empty speaker")
        position = POSITIONS.get(label_raw.strip())
        if position is None:
            return _fail(
                FailureKind.UNKNOWN_POSITION_LABEL,
                f"quote {quote_id!r} uses unknown position {label_raw!r}",
            )
        placements.append(Placement(quote_id=quote_id, speaker=speaker, position=position))

    return Scene(
        index=index,
        room_dimensions=room_dimensions,
        room_material=room_material,
        placements=tuple(placements),
    )


# ---------------------------------------------------------------------------
# Task bundles


def scan_quote_markers(text: str) -> list[tuple[str, int, int]]:
    """Return (quote_id, start, end) character spans of ``|id| ... ||id||``.

    Spans must be sequential and properly paired; raises BundleError on an
    unmatched opener/closer or interleaving.
    """
    spans: list[tuple[str, int, int]] = []
    open_id: str | None = None
    open_start = 0
    for match in _MARKER.finditer(text):
        closer_id, opener_id = match.group(1), match.group(2)
        if opener_id is not None:
            if open_id is not None:
                raise BundleError(
                    f"quote marker |{opener_id}| opened before ||{open_id}|| closed"
                )
            open_id = opener_id.strip()
            open_start = match.start()
        else:
            closer = closer_id.strip()
            if open_id is None:
                raise BundleError(f"unmatched quote closer ||{closer}||")
            if closer != open_id:
                raise BundleError(f"quote closer ||{closer}|| does not match opener |{open_id}|")
            spans.append((open_id, open_start, match.end()))
            open_id = None
    if open_id is not None:
        raise BundleError(f"quote marker |{open_id}| is never closed")
    return spans


def bundle_from_mapping(obj: dict) -> TaskBundle:
    """Validate a decoded bundle object and build a TaskBundle."""
    if not isinstance(obj, dict):
        raise BundleError("bundle must be a JSON object")
    try:
        bundle_id = obj["bundle_id"]
        passage = obj["passage"]
        quote_ids = obj["quote_ids"]
        canonical_names = obj["canonical_names"]
    except KeyError as exc:
        raise BundleError(f"bundle is missing field {exc.args[0]!r}") from None
    alias_map = obj.get("alias_map", {})
    reference_speakers = obj.get("reference_speakers", {})

    if not isinstance(bundle_id, str) or not bundle_id:
        raise BundleError("bundle_id must be a non-empty string")
    if not isinstance(passage, str):
        raise BundleError("passage must be a string")
    if not isinstance(quote_ids, list) or any(not isinstance(q, str) for q in quote_ids):
        raise BundleError("quote_ids must be a list of strings")
    if not isinstance(canonical_names, list) or any(not isinstance(n, str) for n in canonical_names):
        raise BundleError("canonical_names must be a list of strings")
    if not isinstance(alias_map, dict):
        raise BundleError("alias_map must be an object")
    if not isinstance(reference_speakers, dict):
        raise BundleError("reference_speakers must be an object")

    ids = tuple(q.strip() for q in quote_ids)
    if len(set(ids)) != len(ids):
        raise BundleError("quote_ids contains duplicates")
    names = frozenset(n.strip() for n in canonical_names)

    marked = [quote_id for quote_id, _, _ in scan_quote_markers(passage)]
    if marked != list(ids):
        raise BundleError(
            f"passage markers {marked} do not match declared quote_ids {list(ids)}"
        )

    aliases = {str(k).strip(): str(v).strip() for k, v in alias_map.items()}
    for alias, canonical in aliases.items():
        if canonical not in names:
            raise BundleError(f"alias {alias!r} maps to unknown canonical name {canonical!r}")

    references = {str(k).strip(): str(v).strip() for k, v in reference_speakers.items()}
    known = set(ids)
    for quote_id, speaker in references.items():
        if quote_id not in known:
            raise BundleError(f"reference speaker given for unknown quote id {quote_id!r}")
        if speaker not in names:
            raise BundleError(
                f"reference speaker {speaker!r} for quote {quote_id!r} is not a canonical name"
            )

    return TaskBundle(
        bundle_id=bundle_id,
        passage=passage,
        quote_ids=ids,
        canonical_names=names,
        alias_map=aliases,
        reference_speakers=references,
    )


def parse_task_bundle(raw: bytes | str) -> TaskBundle:
    """Parse bundle file text. Raises BundleError on any inconsistency."""
    if isinstance(raw, bytes):
        try:
            raw = raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise BundleError(f"bundle is not valid UTF-8: {exc}") from None
    try:
        obj = json.loads(raw)
    except ValueError as exc:
        raise BundleError(f"bundle is not valid JSON: {exc}") from None
    return bundle_from_mapping(obj)


def bundle_to_mapping(bundle: TaskBundle) -> dict:
    return {
        "bundle_id": bundle.bundle_id,
        "passage": bundle.passage,
        "quote_ids": list(bundle.quote_ids),
        "canonical_names": sorted(bundle.canonical_names),
        "alias_map": dict(sorted(bundle.alias_map.items())),
        "reference_speakers": {q: bundle.reference_speakers[q] for q in bundle.quote_ids if q in bundle.reference_speakers},
    }


# ---------------------------------------------------------------------------
# Derived views


def extract_timelines(play: StagePlay) -> list[CharacterTimeline]:
    """One timeline per distinct speaker, ordered by first appearance."""
    steps: dict[str, list[tuple[int, GridPosition]]] = {}
    for global_index, placement in enumerate(play.placements()):
        steps.setdefault(placement.speaker, []).append((global_index, placement.position))
    return [CharacterTimeline(character=name, steps=tuple(s)) for name, s in steps.items()]
