"""Deterministic scoring engine for structured stage-play layouts.

The package scores candidate layouts (scenes, speaker attributions, grid
positions) against task bundles, gates structurally invalid candidates to
zero reward, and provides the verifier-driven tooling built on that score:
Best-of-N selection, rejection-filtered dataset construction,
group-normalized advantages, evaluator-validation statistics, synthetic
generators, a CLI, and a batch reward service.
"""

__version__ = "0.1.0"

from .grid import GridPosition, POSITION_LABELS, position_from_label
from .model import (
    BundleError,
    CharacterTimeline,
    FailureKind,
    Placement,
    Scene,
    StagePlay,
    TaskBundle,
    ValidityFailure,
    extract_timelines,
    parse_stage_play,
    parse_task_bundle,
)
from .reward import (
    ComponentScores,
    RewardBreakdown,
    RewardConfig,
    aggregate,
    report,
    score_candidate,
    score_play,
)
from .selection import (
    AdvantageVector,
    CandidateSet,
    SftRecord,
    best_of_n,
    build_sft_dataset,
    group_advantages,
    rejection_filter,
)
from .agreement import (
    CalibrationFit,
    PairwiseRecord,
    SystemRating,
    bradley_terry_fit,
    cohens_kappa,
    evaluate_agreement,
    fit_preference_logistic,
    pearson_r,
    rank_accuracy,
    spearman_rho,
)
from .synth import (
    GeneratorSpec,
    chunk_passage,
    gen_greedy_oracle,
    gen_perturbed,
    gen_random,
    make_bundle,
)

__all__ = [
    "__version__",
    "GridPosition",
    "POSITION_LABELS",
    "position_from_label",
    "BundleError",
    "CharacterTimeline",
    "FailureKind",
    "Placement",
    "Scene",
    "StagePlay",
    "TaskBundle",
    "ValidityFailure",
    "extract_timelines",
    "parse_stage_play",
    "parse_task_bundle",
    "ComponentScores",
    "RewardBreakdown",
    "RewardConfig",
    "aggregate",
    "report",
    "score_candidate",
    "score_play",
    "AdvantageVector",
    "CandidateSet",
    "SftRecord",
    "best_of_n",
    "build_sft_dataset",
    "group_advantages",
    "rejection_filter",
    "CalibrationFit",
    "PairwiseRecord",
    "SystemRating",
    "bradley_terry_fit",
    "cohens_kappa",
    "evaluate_agreement",
    "fit_preference_logistic",
    "pearson_r",
    "rank_accuracy",
    "spearman_rho",
    "GeneratorSpec",
    "chunk_passage",
    "gen_greedy_oracle",
    "gen_perturbed",
    "gen_random",
    "make_bundle",
]
