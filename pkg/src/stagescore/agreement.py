"""Statistics for validating the evaluator against pairwise preferences.

Inputs are A/B preference records: two systems, a four-way human label
(A better / same / B better / both bad), and the deterministic score each
side's layout received. From these we fit Bradley-Terry strengths (ELO on
the chess scale), correlate evaluator scores with human win rates, measure
pairwise agreement with Cohen's kappa, and calibrate a logistic model that
predicts the human choice from the score difference.

Tie handling: "same" counts as half a win for each side in Bradley-Terry
and in win rates; "both bad" records are dropped. Kappa and the logistic
fit use decisive records only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

HUMAN_LABELS = ("A_better", "same", "B_better", "both_bad")

ELO_SCALE = 400.0
ELO_OFFSET = 1500.0

PREDICTION_TIE_BAND = 1e-9
SLOPE_CAP = 30.0


class AgreementError(ValueError):
    """Raised for degenerate inputs (disconnected graphs, constant data)."""


@dataclass(frozen=True)
class PairwiseRecord:
    item_id: str
    system_a: str
    system_b: str
    human_label: str
    score_a: float
    score_b: float

    def __post_init__(self):
        if self.system_a == self.system_b:
            raise ValueError("a record must compare two distinct systems")
        if self.human_label not in HUMAN_LABELS:
            raise ValueError(f"unknown human label {self.human_label!r}")


@dataclass(frozen=True)
class SystemRating:
    system: str
    strength: float
    elo: float


@dataclass(frozen=True)
class CalibrationFit:
    intercept: float
    slope: float
    auc: float
    brier: float
    separated: bool = False


# ---------------------------------------------------------------------------
# Bradley-Terry / ELO


def _connected(systems: list[str], edges: set[tuple[str, str]]) -> bool:
    if not systems:
        return False
    adjacency: dict[str, set[str]] = {s: set() for s in systems}
    for a, b in edges:
        adjacency[a].add(b)
        adjacency[b].add(a)
    seen = {systems[0]}
    frontier = [systems[0]]
    while frontier:
        node = frontier.pop()
        for neighbor in adjacency[node]:
            if neighbor not in seen:
                seen.add(neighbor)
                frontier.append(neighbor)
    return len(seen) == len(systems)


def bradley_terry_fit(
    records: list[PairwiseRecord],
    tol: float = 1e-10,
    max_iterations: int = 10_000,
) -> list[SystemRating]:
    """Maximum-likelihood strengths via minorize-maximize updates.

    Strengths are normalized to geometric mean 1, so ELO values are
    centered at the 1500 offset. Requires the comparison graph over
    decisive records to be connected and at least one decisive record;
    if some system has zero wins, half a pseudo-win per observed directed
    pair is added to keep the MLE finite.
    """
    wins: dict[tuple[str, str], float] = {}
    systems_order: list[str] = []
    seen: set[str] = set()
    decisive_edges: set[tuple[str, str]] = set()

    def register(system: str):
        if system not in seen:
            seen.add(system)
            systems_order.append(system)

    n_decisive = 0
    for record in records:
        if record.human_label == "both_bad":
            continue
        register(record.system_a)
        register(record.system_b)
        a, b = record.system_a, record.system_b
        if record.human_label == "A_better":
            wins[(a, b)] = wins.get((a, b), 0.0) + 1.0
            decisive_edges.add((min(a, b), max(a, b)))
            n_decisive += 1
        elif record.human_label == "B_better":
            wins[(b, a)] = wins.get((b, a), 0.0) + 1.0
            decisive_edges.add((min(a, b), max(a, b)))
            n_decisive += 1
        else:  # same: half win each
            wins[(a, b)] = wins.get((a, b), 0.0) + 0.5
            wins[(b, a)] = wins.get((b, a), 0.0) + 0.5

    if n_decisive == 0:
        raise AgreementError("no decisive records; all comparisons are ties or both-bad")
    if len(systems_order) < 2:
        raise AgreementError("need at least two systems")
    if not _connected(systems_order, decisive_edges):
        raise AgreementError("comparison graph is not connected over decisive records")

    index = {s: i for i, s in enumerate(systems_order)}
    n = len(systems_order)
    win_matrix = np.zeros((n, n))
    for (a, b), count in wins.items():
        win_matrix[index[a], index[b]] += count

    totals = win_matrix.sum(axis=1)
    if np.any(totals == 0.0):
        observed = (win_matrix + win_matrix.T) > 0
        win_matrix = win_matrix + 0.5 * observed
        totals = win_matrix.sum(axis=1)

    games = win_matrix + win_matrix.T
    strengths = np.ones(n)
    for _ in range(max_iterations):
        denominator = (games / (strengths[:, None] + strengths[None, :])).sum(axis=1)
        updated = totals / denominator
        updated = updated / np.exp(np.mean(np.log(updated)))
        change = np.max(np.abs(updated - strengths) / strengths)
        strengths = updated
        if change < tol:
            break

    return [
        SystemRating(
            system=s,
            strength=float(strengths[index[s]]),
            elo=float(ELO_SCALE * math.log10(strengths[index[s]]) + ELO_OFFSET),
        )
        for s in systems_order
    ]


# ---------------------------------------------------------------------------
# Correlations and rank metrics


def _average_ranks(values: list[float]) -> np.ndarray:
    """1-based ranks with ties sharing their average rank."""
    array = np.asarray(values, dtype=float)
    order = np.argsort(array, kind="stable")
    ranks = np.empty(len(array), dtype=float)
    i = 0
    while i < len(array):
        j = i
        while j + 1 < len(array) and array[order[j + 1]] == array[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def pearson_r(xs: list[float], ys: list[float]) -> float:
    if len(xs) != len(ys):
        raise AgreementError("inputs must have equal length")
    if len(xs) < 2:
        raise AgreementError("need at least two points")
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    dx = x - x.mean()
    dy = y - y.mean()
    ssx = float(dx @ dx)
    ssy = float(dy @ dy)
    if ssx == 0.0 or ssy == 0.0:
        raise AgreementError("correlation is undefined for constant input")
    # single square root of the product keeps clean fixtures exact
    return float((dx @ dy) / math.sqrt(ssx * ssy))


def spearman_rho(xs: list[float], ys: list[float]) -> float:
    """Rank correlation with average ranks for ties."""
    if len(xs) != len(ys):
        raise AgreementError("inputs must have equal length")
    if len(xs) < 2:
        raise AgreementError("need at least two points")
    return pearson_r(list(_average_ranks(list(xs))), list(_average_ranks(list(ys))))


def rank_accuracy(system_scores: dict[str, float], human_winrates: dict[str, float]) -> float:
    """Fraction of unordered system pairs ordered the same way by both
    sides; a tie on either side contributes half."""
    if set(system_scores) != set(human_winrates):
        raise AgreementError("system sets must match")
    systems = sorted(system_scores)
    if len(systems) < 2:
        raise AgreementError("need at least two systems")
    credit = 0.0
    pairs = 0
    for i in range(len(systems)):
        for j in range(i + 1, len(systems)):
            a, b = systems[i], systems[j]
            pairs += 1
            evaluator = _sign(system_scores[a] - system_scores[b])
            human = _sign(human_winrates[a] - human_winrates[b])
            if evaluator == 0 or human == 0:
                credit += 0.5
            elif evaluator == human:
                credit += 1.0
    return credit / pairs


def _sign(x: float) -> int:
    return (x > 0) - (x < 0)


def cohens_kappa(pred: list[str], human: list[str]) -> float:
    """Chance-corrected agreement with marginal-product expected agreement."""
    if len(pred) != len(human):
        raise AgreementError("inputs must have equal length")
    if not pred:
        raise AgreementError("need at least one pair of labels")
    n = len(pred)
    observed = sum(1 for p, h in zip(pred, human) if p == h) / n
    labels = set(pred) | set(human)
    expected = 0.0
    for label in labels:
        expected += (sum(1 for p in pred if p == label) / n) * (
            sum(1 for h in human if h == label) / n
        )
    if expected == 1.0:
        raise AgreementError("expected agreement is 1; kappa undefined")
    return (observed - expected) / (1.0 - expected)


# ---------------------------------------------------------------------------
# Logistic calibration of score differences


def rank_auc(scores: list[float], outcomes: list[int]) -> float:
    """Mann-Whitney AUC with tie correction via average ranks."""
    if len(scores) != len(outcomes):
        raise AgreementError("inputs must have equal length")
    positives = sum(outcomes)
    negatives = len(outcomes) - positives
    if positives == 0 or negatives == 0:
        raise AgreementError("AUC needs both outcome classes")
    ranks = _average_ranks(list(scores))
    positive_rank_sum = float(sum(r for r, y in zip(ranks, outcomes) if y == 1))
    return (positive_rank_sum - positives * (positives + 1) / 2.0) / (positives * negatives)


def _logistic(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    positive = z >= 0
    out[positive] = 1.0 / (1.0 + np.exp(-z[positive]))
    expz = np.exp(z[~positive])
    out[~positive] = expz / (1.0 + expz)
    return out


def _log_likelihood(y: np.ndarray, z: np.ndarray) -> float:
    # log sigma(z) for y=1, log(1 - sigma(z)) for y=0, computed stably
    return float(-np.sum(np.logaddexp(0.0, np.where(y == 1, -z, z))))


def _fit_intercept(y: np.ndarray, slope_term: np.ndarray) -> float:
    intercept = 0.0
    for _ in range(100):
        p = _logistic(intercept + slope_term)
        gradient = float(np.sum(y - p))
        curvature = float(np.sum(p * (1.0 - p)))
        if curvature <= 0.0 or abs(gradient) < 1e-12:
            break
        intercept += gradient / curvature
    return intercept


def fit_preference_logistic(
    deltas: list[float],
    outcomes: list[int],
    slope_cap: float = SLOPE_CAP,
    tol: float = 1e-10,
    max_iterations: int = 200,
) -> CalibrationFit:
    """Single-feature logistic fit of P(A preferred) from the score
    difference, by damped Newton iterations.

    Perfect separation drives the slope unbounded; it is capped at
    ``slope_cap`` (with the intercept refit) and flagged. AUC is the rank
    statistic of the raw score differences, so it is invariant under any
    strictly increasing transform of them; Brier is the mean squared error
    of the fitted probabilities.
    """
    if len(deltas) != len(outcomes):
        raise AgreementError("inputs must have equal length")
    if len(deltas) < 2:
        raise AgreementError("need at least two decisive records")
    x = np.asarray(deltas, dtype=float)
    y = np.asarray(outcomes, dtype=float)
    if np.all(x == x[0]):
        raise AgreementError("score differences are constant; fit undefined")
    if y.min() == y.max():
        raise AgreementError("all outcomes identical; fit undefined")

    design = np.column_stack([np.ones_like(x), x])
    beta = np.zeros(2)
    separated = False
    ll = _log_likelihood(y, design @ beta)
    for _ in range(max_iterations):
        z = design @ beta
        p = _logistic(z)
        gradient = design.T @ (y - p)
        if np.max(np.abs(gradient)) < tol:
            break
        weights = p * (1.0 - p)
        hessian = design.T @ (design * weights[:, None])
        try:
            step = np.linalg.solve(hessian, gradient)
        except np.linalg.LinAlgError:
            separated = True
            break
        damping = 1.0
        for _ in range(40):
            candidate = beta + damping * step
            candidate_ll = _log_likelihood(y, design @ candidate)
            if candidate_ll >= ll:
                beta = candidate
                ll = candidate_ll
                break
            damping /= 2.0
        else:
            break
        if abs(beta[1]) > slope_cap:
            separated = True
            break

    if separated or abs(beta[1]) > slope_cap:
        separated = True
        slope = math.copysign(slope_cap, beta[1] if beta[1] != 0 else 1.0)
        intercept = _fit_intercept(y, slope * x)
        beta = np.array([intercept, slope])

    probabilities = _logistic(design @ beta)
    brier = float(np.mean((probabilities - y) ** 2))
    auc = rank_auc(list(x), [int(v) for v in y])
    return CalibrationFit(
        intercept=float(beta[0]),
        slope=float(beta[1]),
        auc=auc,
        brier=brier,
        separated=separated,
    )


# ---------------------------------------------------------------------------
# Full validation report


@dataclass(frozen=True)
class AgreementReport:
    ratings: list[SystemRating]
    evaluator_scores: dict[str, float]
    human_winrates: dict[str, float]
    spearman: float | None
    pearson: float | None
    rank_acc: float | None
    kappa: float | None
    calibration: CalibrationFit | None
    n_records: int
    n_decisive: int

    def to_mapping(self) -> dict:
        return {
            "systems": [
                {
                    "system": rating.system,
                    "strength": rating.strength,
                    "elo": rating.elo,
                    "evaluator_score": self.evaluator_scores[rating.system],
                    "human_winrate": self.human_winrates[rating.system],
                }
                for rating in sorted(self.ratings, key=lambda r: -r.elo)
            ],
            "spearman_rho": self.spearman,
            "pearson_r": self.pearson,
            "rank_accuracy": self.rank_acc,
            "cohens_kappa": self.kappa,
            "calibration": None
            if self.calibration is None
            else {
                "intercept": self.calibration.intercept,
                "slope": self.calibration.slope,
                "auc": self.calibration.auc,
                "brier": self.calibration.brier,
                "separated": self.calibration.separated,
            },
            "n_records": self.n_records,
            "n_decisive": self.n_decisive,
        }


def deterministic_prediction(record: PairwiseRecord, tie_band: float = PREDICTION_TIE_BAND) -> str:
    """The evaluator's pairwise call from the score difference, with a
    tie band mapped to "same"."""
    delta = record.score_a - record.score_b
    if abs(delta) < tie_band:
        return "same"
    return "A_better" if delta > 0 else "B_better"


def evaluate_agreement(records: list[PairwiseRecord]) -> AgreementReport:
    """Run the full evaluator-validation suite over preference records.

    Statistics that are undefined for the given data (constant vectors,
    no decisive pairs) are reported as None rather than failing the rest.
    """
    if not records:
        raise AgreementError("no records")

    ratings = bradley_terry_fit(records)

    score_sums: dict[str, float] = {}
    score_counts: dict[str, int] = {}
    win_credit: dict[str, float] = {}
    games: dict[str, int] = {}
    for record in records:
        for system, score in ((record.system_a, record.score_a), (record.system_b, record.score_b)):
            score_sums[system] = score_sums.get(system, 0.0) + score
            score_counts[system] = score_counts.get(system, 0) + 1
        if record.human_label == "both_bad":
            continue
        games[record.system_a] = games.get(record.system_a, 0) + 1
        games[record.system_b] = games.get(record.system_b, 0) + 1
        if record.human_label == "A_better":
            win_credit[record.system_a] = win_credit.get(record.system_a, 0.0) + 1.0
        elif record.human_label == "B_better":
            win_credit[record.system_b] = win_credit.get(record.system_b, 0.0) + 1.0
        else:
            win_credit[record.system_a] = win_credit.get(record.system_a, 0.0) + 0.5
            win_credit[record.system_b] = win_credit.get(record.system_b, 0.0) + 0.5

    systems = [rating.system for rating in ratings]
    evaluator_scores = {s: score_sums[s] / score_counts[s] for s in systems}
    human_winrates = {s: win_credit.get(s, 0.0) / games[s] for s in systems if s in games}

    aligned = [s for s in systems if s in human_winrates]
    xs = [evaluator_scores[s] for s in aligned]
    ys = [human_winrates[s] for s in aligned]

    def _try(fn, *args):
        try:
            return fn(*args)
        except AgreementError:
            return None

    spearman = _try(spearman_rho, xs, ys)
    pearson = _try(pearson_r, xs, ys)
    rank_acc = _try(
        rank_accuracy,
        {s: evaluator_scores[s] for s in aligned},
        {s: human_winrates[s] for s in aligned},
    )

    decisive = [r for r in records if r.human_label in ("A_better", "B_better")]
    kappa_pairs = [
        (deterministic_prediction(r), r.human_label)
        for r in decisive
        if deterministic_prediction(r) != "same"
    ]
    kappa = _try(cohens_kappa, [p for p, _ in kappa_pairs], [h for _, h in kappa_pairs])

    calibration = _try(
        fit_preference_logistic,
        [r.score_a - r.score_b for r in decisive],
        [1 if r.human_label == "A_better" else 0 for r in decisive],
    )

    return AgreementReport(
        ratings=ratings,
        evaluator_scores=evaluator_scores,
        human_winrates=human_winrates,
        spearman=spearman,
        pearson=pearson,
        rank_acc=rank_acc,
        kappa=kappa,
        calibration=calibration,
        n_records=len(records),
        n_decisive=len(decisive),
    )
