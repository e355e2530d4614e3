"""Spatial composition scores.

Two point groups come out of this module:

* stage-position validity, 0-3 points: reference-quote coverage, a
  proxemics term that rewards keeping the most active speakers downstage,
  and a left-right balance term with a linear margin past the tolerance.
* character-positioning logic, 0-6 points: six subchecks in [0, 1] covering
  downstage dominance, facing, distinct primary cells, triangular
  composition, cell crowding, and colinear-stacking stability.

Scene state is the minimal persistence model: a character is "on stage"
from their first placement in the scene onward, holding their most recent
position. Activity ranking uses predicted-speaker quote counts within the
scene (ties broken by first appearance) so the scores stay reference-free.

One deliberate carve-out: a primary trio holding the downstage row is the
proxemics-optimal lineup, so the triangle subchecks treat it as out of
scope (full credit) instead of flagging it as degenerate stacking. Without
the carve-out no layout could satisfy downstage dominance and
triangularity at once, and the scale would have no attainable maximum.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass

from .grid import GridPosition
from .model import Scene, StagePlay, TaskBundle

A_MAX = 2.0  # largest triangle the 3x3 grid admits, e.g. (-1,0),(1,0),(0,2)

DEFAULT_TOP_K = 3
DEFAULT_BALANCE_DELTA = 0.4
DEFAULT_TRIANGLE_TAU = 0.5


@dataclass(frozen=True)
class CompositionScores:
    sv: float
    cp: float
    subchecks: dict[str, float]
    k_used: int
    delta_used: float
    tau_used: float


def triangle_area(p1: GridPosition, p2: GridPosition, p3: GridPosition) -> float:
    """Shoelace area of the triangle on (lateral, depth) coordinates."""
    doubled = abs(
        p1.lateral * (p2.depth - p3.depth)
        + p2.lateral * (p3.depth - p1.depth)
        + p3.lateral * (p1.depth - p2.depth)
    )
    return doubled / 2.0


def normalized_triangle(p1: GridPosition, p2: GridPosition, p3: GridPosition) -> float:
    return triangle_area(p1, p2, p3) / A_MAX


def _is_colinear(p1: GridPosition, p2: GridPosition, p3: GridPosition) -> bool:
    return (
        p1.lateral * (p2.depth - p3.depth)
        + p2.lateral * (p3.depth - p1.depth)
        + p3.lateral * (p1.depth - p2.depth)
    ) == 0


def faces(p: GridPosition, q: GridPosition) -> bool:
    """Facing rule: different lateral columns, or same column within one
    zone of each other (Chebyshev distance <= 1)."""
    return p.lateral != q.lateral or abs(p.depth - q.depth) <= 1


def _scene_ranking(scene: Scene) -> list[str]:
    """Speakers of a scene ordered by activity (quote count desc, first
    appearance as tie-break)."""
    counts: dict[str, int] = {}
    first_seen: dict[str, int] = {}
    for i, placement in enumerate(scene.placements):
        counts[placement.speaker] = counts.get(placement.speaker, 0) + 1
        first_seen.setdefault(placement.speaker, i)
    return sorted(counts, key=lambda s: (-counts[s], first_seen[s]))


def _mean_depths(scene: Scene) -> dict[str, float]:
    totals: dict[str, list[int]] = {}
    for placement in scene.placements:
        totals.setdefault(placement.speaker, []).append(placement.position.depth)
    return {speaker: sum(depths) / len(depths) for speaker, depths in totals.items()}


def proxemics_score(play: StagePlay, k: int = DEFAULT_TOP_K) -> float:
    """Mean downstage credit of each scene's top-k speakers.

    Per scene: take the k most active speakers (all of them when the scene
    has fewer), use each one's quote-weighted mean depth d, credit
    1 - d/2, and average. Scene scores are averaged uniformly.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    scene_scores = []
    for scene in play.scenes:
        top = _scene_ranking(scene)[:k]
        depths = _mean_depths(scene)
        scene_scores.append(sum(1.0 - depths[s] / 2.0 for s in top) / len(top))
    return sum(scene_scores) / len(scene_scores)


def balance_score(play: StagePlay, delta: float = DEFAULT_BALANCE_DELTA) -> float:
    """Left-right balance with a linear margin.

    Per scene, after each quote the signed lateral coordinates of everyone
    on stage are averaged; the scene imbalance b is the absolute mean of
    those per-quote values. Full credit while b <= delta, then linear decay
    to zero at b = 1.
    """
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must be in (0, 1)")
    scene_scores = []
    for scene in play.scenes:
        positions: dict[str, GridPosition] = {}
        x_sum = 0
        m_total = 0.0
        for placement in scene.placements:
            previous = positions.get(placement.speaker)
            if previous is not None:
                x_sum -= previous.lateral
            positions[placement.speaker] = placement.position
            x_sum += placement.position.lateral
            m_total += x_sum / len(positions)
        b = abs(m_total / len(scene.placements))
        if b <= delta:
            scene_scores.append(1.0)
        else:
            scene_scores.append(max(0.0, 1.0 - (b - delta) / (1.0 - delta)))
    return sum(scene_scores) / len(scene_scores)


def coverage_score(play: StagePlay, bundle: TaskBundle) -> float:
    """Fraction of the bundle's marked quote ids present in the play.

    The gate guarantees global uniqueness, so presence means exactly once.
    """
    if not bundle.quote_ids:
        return 1.0
    present = set(play.quote_ids())
    return sum(1 for q in bundle.quote_ids if q in present) / len(bundle.quote_ids)


def stage_validity_points(
    play: StagePlay,
    bundle: TaskBundle,
    k: int = DEFAULT_TOP_K,
    delta: float = DEFAULT_BALANCE_DELTA,
) -> float:
    return coverage_score(play, bundle) + proxemics_score(play, k) + balance_score(play, delta)


def _trio_positions_at_midpoint(scene: Scene, trio: list[str]) -> list[GridPosition]:
    """Positions of the trio at the scene's midpoint quote.

    A trio member who has not spoken by the midpoint is placed at their
    first subsequent placement so the snapshot is always defined.
    """
    midpoint = (len(scene.placements) - 1) // 2
    current: dict[str, GridPosition] = {}
    for placement in scene.placements[: midpoint + 1]:
        current[placement.speaker] = placement.position
    missing = [s for s in trio if s not in current]
    if missing:
        for placement in scene.placements[midpoint + 1 :]:
            if placement.speaker in missing:
                current[placement.speaker] = placement.position
                missing.remove(placement.speaker)
            if not missing:
                break
    return [current[s] for s in trio]


def character_points(
    play: StagePlay,
    k: int = DEFAULT_TOP_K,
    tau: float = DEFAULT_TRIANGLE_TAU,
) -> tuple[float, dict[str, float]]:
    """Character-positioning points and the six named subchecks.

    d1 downstage dominance: the proxemics term again.
    d2 facing: over consecutive same-scene quote pairs with distinct
       speakers, fraction whose positions satisfy the facing rule.
    d3 distinct primaries: fraction of quotes at which the top-k on-stage
       characters hold pairwise distinct cells.
    d4 triangularity: over scenes with >= 3 characters, fraction whose
       three most active characters form a triangle with normalized area
       >= tau at the scene midpoint; a trio entirely downstage counts as
       credited (see module note). No qualifying scene scores 1.
    d5 anti-crowding: fraction of quotes at which no cell holds three or
       more characters.
    d6 stability: 1 minus the fraction of quotes (with >= 3 on stage) at
       which the top-3 on-stage characters stand exactly colinear; the
       downstage row itself is exempt. No qualifying quote scores 1.
    """
    facing_pairs = 0
    facing_good = 0
    quotes_total = 0
    distinct_good = 0
    crowd_good = 0
    colinear_quotes = 0
    colinear_bad = 0
    triangle_scenes = 0
    triangle_good = 0

    for scene in play.scenes:
        ranking = _scene_ranking(scene)
        rank_of = {s: i for i, s in enumerate(ranking)}

        if len(ranking) >= 3:
            triangle_scenes += 1
            trio = ranking[:3]
            p1, p2, p3 = _trio_positions_at_midpoint(scene, trio)
            downstage_lineup = p1.depth == p2.depth == p3.depth == 0
            if downstage_lineup or normalized_triangle(p1, p2, p3) >= tau:
                triangle_good += 1

        positions: dict[str, GridPosition] = {}
        on_stage: list[str] = []  # sorted by activity rank
        cell_counts: dict[tuple[int, int], int] = {}
        crowded_cells = 0
        previous_placement = None

        for placement in scene.placements:
            speaker = placement.speaker
            old = positions.get(speaker)
            if old is None:
                bisect.insort(on_stage, speaker, key=lambda s: rank_of[s])
            else:
                cell_counts[old.cell] -= 1
                if cell_counts[old.cell] == 2:
                    crowded_cells -= 1
            positions[speaker] = placement.position
            new_count = cell_counts.get(placement.position.cell, 0) + 1
            cell_counts[placement.position.cell] = new_count
            if new_count == 3:
                crowded_cells += 1

            quotes_total += 1

            if previous_placement is not None and previous_placement.speaker != speaker:
                facing_pairs += 1
                if faces(previous_placement.position, placement.position):
                    facing_good += 1
            previous_placement = placement

            top = on_stage[:k]
            cells = [positions[s].cell for s in top]
            if len(set(cells)) == len(cells):
                distinct_good += 1

            if crowded_cells == 0:
                crowd_good += 1

            if len(on_stage) >= 3:
                colinear_quotes += 1
                t1, t2, t3 = (positions[s] for s in on_stage[:3])
                if _is_colinear(t1, t2, t3) and not (t1.depth == t2.depth == t3.depth == 0):
                    colinear_bad += 1

    d1 = proxemics_score(play, k)
    d2 = facing_good / facing_pairs if facing_pairs else 1.0
    d3 = distinct_good / quotes_total
    d4 = triangle_good / triangle_scenes if triangle_scenes else 1.0
    d5 = crowd_good / quotes_total
    d6 = 1.0 - (colinear_bad / colinear_quotes) if colinear_quotes else 1.0

    subchecks = {
        "downstage_dominance": d1,
        "facing": d2,
        "distinct_primaries": d3,
        "triangularity": d4,
        "anti_crowding": d5,
        "stability": d6,
    }
    return d1 + d2 + d3 + d4 + d5 + d6, subchecks


def score_composition(
    play: StagePlay,
    bundle: TaskBundle,
    k: int = DEFAULT_TOP_K,
    delta: float = DEFAULT_BALANCE_DELTA,
    tau: float = DEFAULT_TRIANGLE_TAU,
) -> CompositionScores:
    coverage = coverage_score(play, bundle)
    prox = proxemics_score(play, k)
    balance = balance_score(play, delta)
    cp, cp_subchecks = character_points(play, k, tau)
    subchecks = {"coverage": coverage, "proxemics": prox, "balance": balance}
    subchecks.update(cp_subchecks)
    return CompositionScores(
        sv=coverage + prox + balance,
        cp=cp,
        subchecks=subchecks,
        k_used=k,
        delta_used=delta,
        tau_used=tau,
    )
