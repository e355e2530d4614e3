"""Verifier-driven selection over candidate sets.

Given N candidate layouts for one bundle, the evaluator acts as the
selector: keep the best (Best-of-N), keep everything above a threshold
(rejection filtering), build a fine-tuning dataset from the best surviving
candidate per bundle, or turn a group of rewards into the group-normalized
advantages an RL trainer consumes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .model import TaskBundle
from .reward import DEFAULT_CONFIG, RewardBreakdown, RewardConfig, score_candidate

DEFAULT_EPSILON = 1e-8


@dataclass(frozen=True)
class CandidateSet:
    """N raw candidate texts for one bundle, in generation order. Entries
    may be arbitrarily invalid; gate failures are representable."""

    bundle_id: str
    candidates: tuple[str, ...]


@dataclass(frozen=True)
class SftRecord:
    bundle_id: str
    passage: str
    candidate: str
    reward: float
    candidate_index: int


@dataclass(frozen=True)
class AdvantageVector:
    rewards: tuple[float, ...]
    advantages: tuple[float, ...]
    epsilon: float


def score_set(
    candidate_set: CandidateSet,
    bundle: TaskBundle,
    config: RewardConfig = DEFAULT_CONFIG,
) -> list[RewardBreakdown]:
    return [score_candidate(raw, bundle, config) for raw in candidate_set.candidates]


def best_of_n(
    candidate_set: CandidateSet,
    bundle: TaskBundle,
    config: RewardConfig = DEFAULT_CONFIG,
) -> tuple[int, RewardBreakdown]:
    """Index and breakdown of the highest-reward candidate; ties go to the
    lowest index, so an all-invalid set returns candidate 0 with r = 0."""
    if not candidate_set.candidates:
        raise ValueError("candidate set is empty")
    breakdowns = score_set(candidate_set, bundle, config)
    best_index = 0
    for i, breakdown in enumerate(breakdowns):
        if breakdown.r > breakdowns[best_index].r:
            best_index = i
    return best_index, breakdowns[best_index]


def rejection_filter(
    candidate_set: CandidateSet,
    bundle: TaskBundle,
    threshold: float,
    config: RewardConfig = DEFAULT_CONFIG,
) -> list[tuple[int, RewardBreakdown]]:
    """All candidates with r >= threshold, original order preserved.

    Note a threshold of 0.0 keeps gate-failed candidates too (r = 0 passes
    the comparison); any positive threshold removes them.
    """
    if not 0.0 <= threshold <= 1.0:
        raise ValueError("threshold must be in [0, 1]")
    breakdowns = score_set(candidate_set, bundle, config)
    return [(i, b) for i, b in enumerate(breakdowns) if b.r >= threshold]


def build_sft_dataset(
    bundles: dict[str, TaskBundle],
    candidate_sets: list[CandidateSet],
    config: RewardConfig = DEFAULT_CONFIG,
    n_use: int | None = None,
    threshold: float | None = None,
) -> tuple[list[SftRecord], dict[str, int]]:
    """Best surviving candidate per bundle, as supervised training pairs.

    Per set: truncate to the first ``n_use`` candidates, drop gate failures
    and anything below the threshold, and emit the best survivor. Bundles
    with no survivor are skipped and counted in the summary.
    """
    if threshold is None:
        threshold = config.reject_threshold
    records: list[SftRecord] = []
    skipped = 0
    for candidate_set in candidate_sets:
        bundle = bundles.get(candidate_set.bundle_id)
        if bundle is None:
            raise KeyError(f"no bundle loaded for candidate set {candidate_set.bundle_id!r}")
        pool = candidate_set.candidates if n_use is None else candidate_set.candidates[:n_use]
        best_index = None
        best: RewardBreakdown | None = None
        for i, raw in enumerate(pool):
            breakdown = score_candidate(raw, bundle, config)
            if not breakdown.valid or breakdown.r < threshold:
                continue
            if best is None or breakdown.r > best.r:
                best_index = i
                best = breakdown
        if best is None or best_index is None:
            skipped += 1
            continue
        records.append(
            SftRecord(
                bundle_id=candidate_set.bundle_id,
                passage=bundle.passage,
                candidate=pool[best_index],
                reward=best.r,
                candidate_index=best_index,
            )
        )
    return records, {"emitted": len(records), "skipped": skipped}


def group_advantages(rewards: list[float], epsilon: float = DEFAULT_EPSILON) -> AdvantageVector:
    """Group-normalized advantages: (r_i - mean) / population std.

    A zero-variance group maps to exact zeros. ``epsilon`` guards the
    degenerate-variance comparison; the division itself uses the exact
    population std so the output is exactly standardized (mean 0, std 1),
    which also makes the advantages invariant under shifting or positively
    scaling the rewards.
    """
    if not rewards:
        raise ValueError("rewards must be non-empty")
    if epsilon <= 0:
        raise ValueError("epsilon must be > 0")
    n = len(rewards)
    mean = sum(rewards) / n
    variance = sum((r - mean) ** 2 for r in rewards) / n
    std = math.sqrt(variance)
    if std <= epsilon:
        advantages = tuple(0.0 for _ in rewards)
    else:
        advantages = tuple((r - mean) / std for r in rewards)
    return AdvantageVector(rewards=tuple(rewards), advantages=advantages, epsilon=epsilon)
