import itertools
import json
import random

import pytest

from stagescore.composition import (
    A_MAX,
    balance_score,
    character_points,
    coverage_score,
    normalized_triangle,
    proxemics_score,
    score_composition,
    stage_validity_points,
    triangle_area,
)
from stagescore.grid import POSITIONS, label_of, position_from_label
from stagescore.model import extract_timelines, parse_stage_play

from conftest import parse_ok, play_text, simple_bundle

FRONT_L = "front stage left"
FRONT_C = "front stage center"
FRONT_R = "front stage right"
MID_L = "middle stage left"
MID_C = "middle stage center"
MID_R = "middle stage right"
BACK_C = "back stage center"
BACK_L = "back stage left"


def _random_play(rng, n_chars=4, n_quotes=24, n_scenes=2):
    labels = list(POSITIONS)
    scenes = []
    qid = 0
    for _ in range(n_scenes):
        quotes = []
        for _ in range(n_quotes // n_scenes):
            quotes.append((f"q{qid}", f"C{rng.randrange(n_chars)}", rng.choice(labels)))
            qid += 1
        scenes.append(quotes)
    return parse_ok(play_text(*scenes))


class TestTriangleOracle:
    def test_brute_force_extremes(self):
        # Independent oracle: enumerate all 84 unordered cell triples.
        cells = list(POSITIONS.values())
        areas = [triangle_area(a, b, c) for a, b, c in itertools.combinations(cells, 3)]
        assert len(areas) == 84
        assert max(areas) == 2.0 == A_MAX
        assert min(a for a in areas if a > 0) == 0.5
        for area in areas:
            assert 0.0 <= area / A_MAX <= 1.0

    def test_wide_triangle_is_maximal(self):
        a, b, c = (position_from_label(FRONT_L), position_from_label(FRONT_R),
                   position_from_label(BACK_C))
        assert triangle_area(a, b, c) == 2.0
        assert normalized_triangle(a, b, c) == 1.0

    def test_colinear_is_zero(self):
        a, b, c = (position_from_label(MID_L), position_from_label(MID_C),
                   position_from_label(MID_R))
        assert triangle_area(a, b, c) == 0.0

    def test_minimal_nonzero(self):
        a = position_from_label(FRONT_C)
        b = position_from_label(FRONT_R)
        c = position_from_label(MID_C)
        assert triangle_area(a, b, c) == 0.5
        assert normalized_triangle(a, b, c) == 0.25


class TestProxemics:
    def test_both_top_speakers_front(self):
        quotes = [(f"q{i}", "A" if i % 2 else "B", FRONT_L if i % 2 else FRONT_R) for i in range(8)]
        assert proxemics_score(parse_ok(play_text(quotes)), k=2) == 1.0

    def test_three_speakers_spread_depths(self):
        # mean depths {0, 1, 2} -> (1 + 0.5 + 0) / 3 = 0.5
        quotes = []
        for i in range(4):
            quotes.append((f"a{i}", "A", FRONT_C))
        for i in range(3):
            quotes.append((f"b{i}", "B", MID_C))
        for i in range(2):
            quotes.append((f"c{i}", "C", BACK_C))
        assert proxemics_score(parse_ok(play_text(quotes)), k=3) == 0.5

    def test_alternating_depth_weighted_mean(self):
        # Oracle: the character's quote-weighted mean depth from the timeline.
        quotes = [(f"q{i}", "A", FRONT_C if i % 2 == 0 else BACK_C) for i in range(6)]
        play = parse_ok(play_text(quotes))
        timeline = extract_timelines(play)[0]
        mean_depth = sum(p.depth for _, p in timeline.steps) / len(timeline.steps)
        assert mean_depth == 1.0
        assert proxemics_score(play, k=1) == pytest.approx(1.0 - mean_depth / 2.0)

    def test_fewer_speakers_than_k_uses_all(self):
        quotes = [("q0", "A", FRONT_C)]
        assert proxemics_score(parse_ok(play_text(quotes)), k=3) == 1.0

    def test_depth_monotonicity(self):
        # Moving a top-k character upstage never increases the score.
        rng = random.Random(11)
        for _ in range(40):
            play = _random_play(rng)
            base = proxemics_score(play, k=3)
            scenes = []
            moved = False
            for scene in play.scenes:
                quotes = []
                for p in scene.placements:
                    if not moved and p.position.depth < 2:
                        quotes.append((p.quote_id, p.speaker,
                                       label_of(p.position.lateral, p.position.depth + 1)))
                        moved = True
                    else:
                        quotes.append((p.quote_id, p.speaker, p.position.label))
                scenes.append(quotes)
            if not moved:
                continue
            assert proxemics_score(parse_ok(play_text(*scenes)), k=3) <= base + 1e-12


class TestBalance:
    def test_everyone_hard_right_scores_zero(self):
        quotes = [(f"q{i}", f"C{i % 3}", FRONT_R if i % 3 == 0 else (MID_R if i % 3 == 1 else "back stage right")) for i in range(9)]
        assert balance_score(parse_ok(play_text(quotes))) == 0.0

    def test_mirror_symmetric_scores_one(self):
        quotes = [(f"q{i}", "A" if i % 2 else "B", FRONT_L if i % 2 else FRONT_R) for i in range(8)]
        assert balance_score(parse_ok(play_text(quotes))) == 1.0

    def test_linear_margin_at_b_07(self):
        # Single character: 7 quotes at x=+1, 3 at x=0 -> b = 0.7 exactly.
        quotes = [(f"q{i}", "A", FRONT_R if i < 7 else FRONT_C) for i in range(10)]
        assert balance_score(parse_ok(play_text(quotes)), delta=0.4) == pytest.approx(0.5)

    def test_signed_mean_monotone_when_moving_inward(self):
        # Underlying per-scene signed mean never increases when one
        # character moves from +1 to 0; the absolute imbalance b can only
        # drop on right-heavy stages (checked here), though not in general.
        quotes = [(f"q{i}", "A" if i % 2 else "B", FRONT_R if i % 2 else MID_R) for i in range(10)]
        play = parse_ok(play_text(quotes))
        assert balance_score(play) == 0.0
        inward = [(qid, s, FRONT_C if s == "A" else lab) for qid, s, lab in quotes]
        assert balance_score(parse_ok(play_text(inward))) >= balance_score(play)


class TestStageValidity:
    def test_perfect_layout_scores_three(self):
        quotes = [(f"q{i}", "A" if i % 2 else "B", FRONT_L if i % 2 else FRONT_R) for i in range(8)]
        bundle = simple_bundle([(qid, s) for qid, s, _ in quotes])
        assert stage_validity_points(parse_ok(play_text(quotes)), bundle) == 3.0

    def test_component_sum(self):
        quotes = [(f"q{i}", "A", FRONT_C if i % 2 == 0 else BACK_C) for i in range(6)]
        bundle = simple_bundle([(qid, s) for qid, s, _ in quotes])
        play = parse_ok(play_text(quotes))
        total = stage_validity_points(play, bundle, k=1)
        assert total == pytest.approx(
            coverage_score(play, bundle) + proxemics_score(play, k=1) + balance_score(play)
        )
        assert total == pytest.approx(1.0 + 0.5 + 1.0)

    def test_half_coverage(self):
        refs = [(f"q{i}", "A") for i in range(4)]
        bundle = simple_bundle(refs)
        play = parse_ok(play_text([("q0", "A", FRONT_C), ("q1", "A", FRONT_C)]))
        assert coverage_score(play, bundle) == 0.5


class TestCharacterPoints:
    def test_two_hander_maximal(self):
        quotes = [(f"q{i}", "A" if i % 2 else "B", FRONT_L if i % 2 else FRONT_R) for i in range(8)]
        cp, subchecks = character_points(parse_ok(play_text(quotes)))
        assert cp == 6.0
        assert all(v == 1.0 for v in subchecks.values())

    def test_colinear_middle_row_kills_triangle_checks(self):
        order = [("A", MID_L), ("B", MID_C), ("C", MID_R)] * 2
        quotes = [(f"q{i}", s, lab) for i, (s, lab) in enumerate(order)]
        cp, subchecks = character_points(parse_ok(play_text(quotes)))
        assert subchecks["triangularity"] == 0.0
        assert subchecks["stability"] == 0.0
        assert cp <= 4.0

    def test_wide_triangle_gets_credit(self):
        order = [("A", FRONT_L), ("B", FRONT_R), ("C", BACK_C)] * 2
        quotes = [(f"q{i}", s, lab) for i, (s, lab) in enumerate(order)]
        cp, subchecks = character_points(parse_ok(play_text(quotes)), tau=0.5)
        assert subchecks["triangularity"] == 1.0
        assert subchecks["stability"] == 1.0

    def test_downstage_lineup_not_penalized(self):
        # A trio holding the front row is the proxemics-optimal picture and
        # is exempt from the triangle checks.
        order = [("A", FRONT_L), ("B", FRONT_C), ("C", FRONT_R)] * 3
        quotes = [(f"q{i}", s, lab) for i, (s, lab) in enumerate(order)]
        cp, subchecks = character_points(parse_ok(play_text(quotes)))
        assert subchecks["triangularity"] == 1.0
        assert subchecks["stability"] == 1.0
        assert cp == 6.0

    def test_duplicate_primary_cells_hit_distinctness(self):
        quotes = [(f"q{i}", "A" if i % 2 else "B", FRONT_C) for i in range(6)]
        cp, subchecks = character_points(parse_ok(play_text(quotes)))
        assert subchecks["distinct_primaries"] < 1.0

    def test_crowded_cell_detected(self):
        order = [("A", FRONT_C), ("B", FRONT_C), ("C", FRONT_C), ("A", FRONT_C)]
        quotes = [(f"q{i}", s, lab) for i, (s, lab) in enumerate(order)]
        cp, subchecks = character_points(parse_ok(play_text(quotes)))
        # the cell reaches three occupants at the third quote
        assert subchecks["anti_crowding"] == 0.5


class TestInvariants:
    def test_mirror_symmetry(self):
        rng = random.Random(23)
        for _ in range(30):
            play = _random_play(rng)
            bundle = simple_bundle([(p.quote_id, p.speaker) for p in play.placements()])
            mirrored_scenes = []
            for scene in play.scenes:
                mirrored_scenes.append(
                    [(p.quote_id, p.speaker, label_of(-p.position.lateral, p.position.depth))
                     for p in scene.placements]
                )
            mirrored = parse_ok(play_text(*mirrored_scenes))
            base = score_composition(play, bundle)
            flip = score_composition(mirrored, bundle)
            assert flip.sv == pytest.approx(base.sv, abs=1e-12)
            assert flip.cp == pytest.approx(base.cp, abs=1e-12)

    def test_bounds_on_random_plays(self):
        rng = random.Random(31)
        for _ in range(60):
            play = _random_play(rng, n_chars=rng.randint(1, 6),
                                n_quotes=rng.randint(2, 40), n_scenes=rng.randint(1, 3))
            bundle = simple_bundle([(p.quote_id, p.speaker) for p in play.placements()])
            comp = score_composition(play, bundle)
            assert 0.0 <= comp.sv <= 3.0
            assert 0.0 <= comp.cp <= 6.0
            assert all(0.0 <= v <= 1.0 for v in comp.subchecks.values())
