"""Movement coherence scores.

Movement is read off each character's placements within a scene:
consecutive position changes become events (cross-scene changes belong to
the transition scorer). Coherent blocking keeps steps small, prefers
lateral shifts over depth changes, avoids front-back thrash, moves
sparingly, and lets the two sides of a long exchange face each other.
"""

from __future__ import annotations

from dataclasses import dataclass

from .composition import faces
from .grid import GridPosition
from .model import StagePlay

DEFAULT_LATERAL_BONUS = 0.5
DEFAULT_FLIP_PENALTY = 0.5
DEFAULT_MAX_MOVE_RATE = 0.5
DEFAULT_RUN_LENGTH = 6


@dataclass(frozen=True)
class MoveEvent:
    character: str
    start: GridPosition
    end: GridPosition
    quote_index: int  # global index of the placement that triggered the move
    manhattan: int
    is_lateral: bool
    is_depth_flip: bool


@dataclass(frozen=True)
class MovementScores:
    mc: float
    subchecks: dict[str, float]
    s_move_diagnostic: float


def detect_moves(play: StagePlay) -> list[MoveEvent]:
    """Per-character position changes within scenes, in quote order.

    A depth flip is a depth step whose sign reverses the character's
    previous nonzero depth step; the tracking resets at scene boundaries,
    matching the rule that cross-scene changes are not events.
    """
    events: list[MoveEvent] = []
    global_index = 0
    for scene in play.scenes:
        last_position: dict[str, GridPosition] = {}
        last_depth_sign: dict[str, int] = {}
        for placement in scene.placements:
            speaker = placement.speaker
            previous = last_position.get(speaker)
            if previous is not None and previous.cell != placement.position.cell:
                dx = placement.position.lateral - previous.lateral
                dd = placement.position.depth - previous.depth
                depth_sign = (dd > 0) - (dd < 0)
                is_flip = depth_sign != 0 and depth_sign == -last_depth_sign.get(speaker, 0)
                events.append(
                    MoveEvent(
                        character=speaker,
                        start=previous,
                        end=placement.position,
                        quote_index=global_index,
                        manhattan=abs(dx) + abs(dd),
                        is_lateral=dd == 0 and dx != 0,
                        is_depth_flip=is_flip,
                    )
                )
                if depth_sign != 0:
                    last_depth_sign[speaker] = depth_sign
            last_position[speaker] = placement.position
            global_index += 1
    return events


def s_move(
    play: StagePlay,
    lateral_bonus: float = DEFAULT_LATERAL_BONUS,
    flip_penalty: float = DEFAULT_FLIP_PENALTY,
) -> float:
    """Diagnostic move-quality score.

    Mean over events of 1{manhattan <= 1} + bonus for lateral moves minus
    penalty for depth flips, with the mean clamped to [0, 1]. A play with
    no movement scores 1.
    """
    if lateral_bonus < 0 or flip_penalty < 0:
        raise ValueError("bonus and penalty must be >= 0")
    events = detect_moves(play)
    if not events:
        return 1.0
    total = sum(
        (1.0 if e.manhattan <= 1 else 0.0)
        + (lateral_bonus if e.is_lateral else 0.0)
        - (flip_penalty if e.is_depth_flip else 0.0)
        for e in events
    )
    return min(1.0, max(0.0, total / len(events)))


def _alternating_runs(speakers: list[str]) -> list[tuple[int, int]]:
    """Maximal segments [i, j] alternating between exactly two speakers."""
    runs = []
    n = len(speakers)
    i = 0
    while i < n - 1:
        if speakers[i] == speakers[i + 1]:
            i += 1
            continue
        j = i + 1
        while j + 1 < n and speakers[j + 1] == speakers[j - 1]:
            j += 1
        runs.append((i, j))
        i = j
    return runs


def movement_points(
    play: StagePlay,
    max_move_rate: float = DEFAULT_MAX_MOVE_RATE,
    run_length: int = DEFAULT_RUN_LENGTH,
    lateral_bonus: float = DEFAULT_LATERAL_BONUS,
    flip_penalty: float = DEFAULT_FLIP_PENALTY,
) -> MovementScores:
    """Movement coherence, 0-6 points: economy + 2 x lateral preference +
    anti-thrash + sparsity + extended-dialogue facing.

    With no events the first three subchecks are vacuously 1. Sparsity is
    full credit up to max_move_rate events per quote, then decays linearly
    to zero at rate 1. The facing subcheck looks at maximal runs of at
    least ``run_length`` quotes alternating between exactly two speakers
    and asks whether those two end the run facing each other.
    """
    events = detect_moves(play)
    total_quotes = play.quote_count()

    if events:
        economy = sum(1 for e in events if e.manhattan <= 1) / len(events)
        lateral = sum(1 for e in events if e.is_lateral) / len(events)
        anti_thrash = 1.0 - sum(1 for e in events if e.is_depth_flip) / len(events)
    else:
        economy = lateral = anti_thrash = 1.0

    rate = len(events) / total_quotes
    if rate <= max_move_rate:
        sparsity = 1.0
    else:
        sparsity = max(0.0, 1.0 - (rate - max_move_rate) / (1.0 - max_move_rate))

    qualifying_runs = 0
    facing_runs = 0
    for scene in play.scenes:
        speakers = [p.speaker for p in scene.placements]
        for start, end in _alternating_runs(speakers):
            if end - start + 1 < run_length:
                continue
            qualifying_runs += 1
            pair = {speakers[start], speakers[start + 1]}
            current: dict[str, GridPosition] = {}
            for placement in scene.placements[: end + 1]:
                if placement.speaker in pair:
                    current[placement.speaker] = placement.position
            a, b = (current[s] for s in sorted(pair))
            if faces(a, b):
                facing_runs += 1
    dialogue_facing = facing_runs / qualifying_runs if qualifying_runs else 1.0

    subchecks = {
        "economy": economy,
        "lateral_preference": lateral,
        "anti_thrash": anti_thrash,
        "sparsity": sparsity,
        "dialogue_facing": dialogue_facing,
    }
    mc = economy + 2.0 * lateral + anti_thrash + sparsity + dialogue_facing
    return MovementScores(
        mc=mc,
        subchecks=subchecks,
        s_move_diagnostic=s_move(play, lateral_bonus, flip_penalty),
    )
