"""Scene structure and transition scores, 0-4 points.

Boundaries earn credit when the room metadata on both sides is well formed
and actually changes; characters new to a scene should enter from the back
row; characters continuing across a boundary should hold their position in
the same room (or re-enter upstage when the room changes); and scenes are
capped in length so a single scene does not drift on forever. Subchecks
with nothing to measure score full credit: the absence of a structure is
not a transition error.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .grid import GridPosition
from .model import Scene, StagePlay

DEFAULT_MAX_SCENE_QUOTES = 30

_DIM_PART = re.compile(r"^\s*([0-9]+(?:\.[0-9]+)?)\s*([A-Za-z]*)\s*$")


@dataclass(frozen=True)
class RoomSpec:
    width: float | None
    height: float | None
    depth: float | None
    material: str | None
    well_formed: bool

    @property
    def dimensions(self) -> tuple[float, float, float] | None:
        if self.width is None or self.height is None or self.depth is None:
            return None
        return (self.width, self.height, self.depth)


@dataclass(frozen=True)
class SceneTransitionScores:
    st: float
    subchecks: dict[str, float]
    per_boundary: list[dict]


def parse_room_spec(scene: Scene) -> RoomSpec:
    """Parse "W x H x D" room dimensions plus the material string.

    Separators are x or X with optional whitespace; each number may carry a
    unit suffix ("15ft x 12ft x 8ft"). Well formed means three positive
    numbers and a non-empty material; anything else is reported as not well
    formed rather than an error.
    """
    material = (scene.room_material or "").strip() or None

    numbers: list[float] = []
    if scene.room_dimensions is not None:
        parts = re.split(r"[xX]", scene.room_dimensions)
        if len(parts) == 3:
            for part in parts:
                match = _DIM_PART.match(part)
                if match is None:
                    numbers = []
                    break
                value = float(match.group(1))
                if value <= 0:
                    numbers = []
                    break
                numbers.append(value)

    if len(numbers) == 3 and material is not None:
        return RoomSpec(numbers[0], numbers[1], numbers[2], material, True)
    dims = numbers if len(numbers) == 3 else [None, None, None]
    return RoomSpec(dims[0], dims[1], dims[2], material, False)


def _first_positions(scene: Scene) -> dict[str, GridPosition]:
    first: dict[str, GridPosition] = {}
    for placement in scene.placements:
        first.setdefault(placement.speaker, placement.position)
    return first


def _last_positions(scene: Scene) -> dict[str, GridPosition]:
    last: dict[str, GridPosition] = {}
    for placement in scene.placements:
        last[placement.speaker] = placement.position
    return last


def scene_points(play: StagePlay, max_scene_quotes: int = DEFAULT_MAX_SCENE_QUOTES) -> SceneTransitionScores:
    """Transition scores.

    t1 boundary plausibility: both adjacent rooms well formed and different
       (parsed dimensions or material).
    t2 entrants upstage: characters absent from the previous scene first
       appear on the back row.
    t3 carry-over continuity: characters present on both sides keep their
       position when the raw room metadata is unchanged; when it changes
       they either re-enter on the back row or keep the old position.
    t4 length cap: mean over scenes of min(1, cap / scene length).
    """
    scenes = play.scenes
    specs = [parse_room_spec(s) for s in scenes]
    firsts = [_first_positions(s) for s in scenes]
    lasts = [_last_positions(s) for s in scenes]
    casts = [set(f) for f in firsts]

    boundaries = len(scenes) - 1
    per_boundary: list[dict] = []

    t1_good = 0
    entrants_total = 0
    entrants_good = 0
    carry_total = 0
    carry_good = 0

    for i in range(1, len(scenes)):
        prev_spec, spec = specs[i - 1], specs[i]
        plausible = (
            prev_spec.well_formed
            and spec.well_formed
            and (prev_spec.dimensions != spec.dimensions or prev_spec.material != spec.material)
        )
        if plausible:
            t1_good += 1

        raw_unchanged = (
            scenes[i - 1].room_dimensions == scenes[i].room_dimensions
            and scenes[i - 1].room_material == scenes[i].room_material
        )

        entrants = []
        for character in firsts[i]:
            if character in casts[i - 1]:
                continue
            entrants_total += 1
            upstage = firsts[i][character].depth == 2
            if upstage:
                entrants_good += 1
            entrants.append((character, upstage))

        carried = []
        for character in firsts[i]:
            if character not in casts[i - 1]:
                continue
            carry_total += 1
            old = lasts[i - 1][character]
            new = firsts[i][character]
            if raw_unchanged:
                ok = new.cell == old.cell
            else:
                ok = new.depth == 2 or new.cell == old.cell
            if ok:
                carry_good += 1
            carried.append((character, ok))

        per_boundary.append(
            {
                "boundary": i,
                "plausible": plausible,
                "room_unchanged": raw_unchanged,
                "entrants": entrants,
                "carry_over": carried,
            }
        )

    t1 = t1_good / boundaries if boundaries else 1.0
    t2 = entrants_good / entrants_total if entrants_total else 1.0
    t3 = carry_good / carry_total if carry_total else 1.0
    t4 = sum(min(1.0, max_scene_quotes / len(s.placements)) for s in scenes) / len(scenes)

    subchecks = {
        "boundary_plausibility": t1,
        "entrants_upstage": t2,
        "carry_over": t3,
        "length_cap": t4,
    }
    return SceneTransitionScores(st=t1 + t2 + t3 + t4, subchecks=subchecks, per_boundary=per_boundary)
