import math
import random

import pytest

from stagescore.reward import DEFAULT_CONFIG
from stagescore.selection import (
    CandidateSet,
    best_of_n,
    build_sft_dataset,
    group_advantages,
    rejection_filter,
)
from stagescore.synth import gen_greedy_oracle, gen_random, make_bundle

from conftest import acceptance_bundle


def _noisy_set(bundle, n, seed=0, p_correct=0.6):
    return CandidateSet(
        bundle_id=bundle.bundle_id,
        candidates=tuple(gen_random(bundle, seed * 1000 + i, p_correct) for i in range(n)),
    )


class TestBestOfN:
    def test_tie_breaks_to_lowest_index(self):
        bundle = make_bundle(3, n_characters=2, n_quotes=8)
        text = gen_random(bundle, 5, 0.8)
        candidate_set = CandidateSet(bundle.bundle_id, ("{broken", text, text))
        index, breakdown = best_of_n(candidate_set, bundle)
        assert index == 1
        assert breakdown.r > 0

    def test_all_invalid_returns_first(self):
        bundle = make_bundle(3, n_characters=2, n_quotes=8)
        candidate_set = CandidateSet(bundle.bundle_id, ("{", "[]", "nope"))
        index, breakdown = best_of_n(candidate_set, bundle)
        assert index == 0
        assert breakdown.r == 0.0

    def test_prefix_monotonicity(self):
        bundle = acceptance_bundle(21)
        full = _noisy_set(bundle, 20, seed=4)
        previous = -1.0
        for n in range(1, 21):
            prefix = CandidateSet(bundle.bundle_id, full.candidates[:n])
            _, breakdown = best_of_n(prefix, bundle)
            assert breakdown.r >= previous
            previous = breakdown.r

    def test_empty_set_rejected(self):
        bundle = make_bundle(3, n_characters=2, n_quotes=8)
        with pytest.raises(ValueError):
            best_of_n(CandidateSet(bundle.bundle_id, ()), bundle)


class TestRejectionFilter:
    def test_zero_threshold_keeps_everything_including_invalid(self):
        bundle = make_bundle(6, n_characters=2, n_quotes=8)
        candidate_set = CandidateSet(bundle.bundle_id, ("{broken", gen_random(bundle, 1)))
        kept = rejection_filter(candidate_set, bundle, threshold=0.0)
        assert [i for i, _ in kept] == [0, 1]

    def test_threshold_filters_and_preserves_order(self):
        bundle = acceptance_bundle(8)
        candidate_set = _noisy_set(bundle, 12, seed=2)
        kept = rejection_filter(candidate_set, bundle, threshold=0.8)
        indices = [i for i, _ in kept]
        assert indices == sorted(indices)
        for _, breakdown in kept:
            assert breakdown.r >= 0.8

    def test_impossible_threshold_empty(self):
        bundle = make_bundle(6, n_characters=2, n_quotes=8)
        candidate_set = CandidateSet(bundle.bundle_id, ("{broken", "[]"))
        assert rejection_filter(candidate_set, bundle, threshold=1.0) == []
        # exact 1.0 candidates do pass a threshold of 1.0
        oracle_set = CandidateSet(bundle.bundle_id, (gen_greedy_oracle(bundle),))
        assert len(rejection_filter(oracle_set, bundle, threshold=1.0)) == 1

    def test_winner_is_in_filter_output(self):
        bundle = acceptance_bundle(13)
        candidate_set = _noisy_set(bundle, 10, seed=3)
        index, breakdown = best_of_n(candidate_set, bundle)
        kept = rejection_filter(candidate_set, bundle, threshold=breakdown.r)
        assert index in [i for i, _ in kept]


class TestBuildSft:
    def test_one_good_among_garbage(self):
        bundle = make_bundle(9, n_characters=3, n_quotes=10)
        candidates = ["{broken"] * 5 + [gen_greedy_oracle(bundle)] + ["[]"] * 3
        sets = [CandidateSet(bundle.bundle_id, tuple(candidates))]
        records, summary = build_sft_dataset({bundle.bundle_id: bundle}, sets, n_use=64,
                                             threshold=0.8)
        assert summary == {"emitted": 1, "skipped": 0}
        assert records[0].candidate_index == 5
        assert records[0].reward == 1.0
        assert records[0].passage == bundle.passage

    def test_all_below_threshold_skipped(self):
        bundle = make_bundle(9, n_characters=3, n_quotes=10)
        sets = [CandidateSet(bundle.bundle_id, ("{broken", "[]"))]
        records, summary = build_sft_dataset({bundle.bundle_id: bundle}, sets, threshold=0.5)
        assert records == []
        assert summary == {"emitted": 0, "skipped": 1}

    def test_n_use_truncates(self):
        bundle = make_bundle(9, n_characters=3, n_quotes=10)
        candidates = ["{broken", gen_greedy_oracle(bundle)]
        sets = [CandidateSet(bundle.bundle_id, tuple(candidates))]
        _, summary = build_sft_dataset({bundle.bundle_id: bundle}, sets, n_use=1, threshold=0.0)
        assert summary == {"emitted": 0, "skipped": 1}  # gate still applies at threshold 0

    def test_best_of_one_is_plain_gate(self):
        bundle = make_bundle(9, n_characters=2, n_quotes=8)
        good = gen_random(bundle, 7)
        sets = [CandidateSet(bundle.bundle_id, (good,))]
        records, summary = build_sft_dataset({bundle.bundle_id: bundle}, sets, n_use=1,
                                             threshold=0.0)
        assert summary["emitted"] == 1
        assert records[0].candidate == good


class TestGroupAdvantages:
    def test_two_point_case(self):
        vector = group_advantages([1.0, 0.0])
        assert vector.advantages == (1.0, -1.0)

    def test_zero_variance_all_zero(self):
        vector = group_advantages([0.5, 0.5, 0.5])
        assert vector.advantages == (0.0, 0.0, 0.0)

    def test_three_point_derived(self):
        vector = group_advantages([0.2, 0.4, 0.6])
        assert vector.advantages[0] == pytest.approx(-1.2247, abs=1e-3)
        assert vector.advantages[1] == pytest.approx(0.0, abs=1e-9)
        assert vector.advantages[2] == pytest.approx(1.2247, abs=1e-3)

    def test_standardization_invariants(self):
        rng = random.Random(15)
        for _ in range(300):
            n = rng.randint(2, 16)
            rewards = [rng.random() for _ in range(n)]
            vector = group_advantages(rewards)
            if max(rewards) == min(rewards):
                assert all(a == 0.0 for a in vector.advantages)
                continue
            mean = sum(vector.advantages) / n
            std = math.sqrt(sum((a - mean) ** 2 for a in vector.advantages) / n)
            assert abs(mean) <= 1e-9
            assert abs(std - 1.0) <= 1e-6

    def test_shift_and_scale_invariance(self):
        rewards = [0.1, 0.5, 0.9, 0.3]
        base = group_advantages(rewards).advantages
        shifted = group_advantages([r + 0.05 for r in rewards]).advantages
        scaled = group_advantages([r * 3.0 for r in rewards]).advantages
        for a, b in zip(base, shifted):
            assert a == pytest.approx(b, abs=1e-9)
        for a, b in zip(base, scaled):
            assert a == pytest.approx(b, abs=1e-9)

    def test_input_validation(self):
        with pytest.raises(ValueError):
            group_advantages([])
        with pytest.raises(ValueError):
            group_advantages([1.0], epsilon=0.0)
