"""Validity-gated reward aggregation, configuration, and reporting.

The scalar reward is the mean of the enabled normalized components, gated
to zero for any candidate that fails to parse:

    r = gate * (qa + ar + sv/3 + cp/6 + mc/6 + st/4) / 6

with all components enabled. Disabling a component (for reward-shaping
ablations) removes its terms from both numerator and denominator; the
breakdown always carries the full component suite so evaluation stays
comparable across reward configurations.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace

from . import composition, movement, scenes
from .grounding import score_grounding
from .model import (
    FailureKind,
    StagePlay,
    TaskBundle,
    ValidityFailure,
    parse_stage_play,
)

COMPONENT_KEYS = ("qa", "ar", "sv", "cp", "mc", "st")
NORMALIZERS = {"qa": 1.0, "ar": 1.0, "sv": 3.0, "cp": 6.0, "mc": 6.0, "st": 4.0}

# Toggle groups: quote attribution and alias resolution switch together.
COMPONENT_GROUPS: dict[str, tuple[str, ...]] = {
    "grounding": ("qa", "ar"),
    "stage_validity": ("sv",),
    "character_positioning": ("cp",),
    "movement": ("mc",),
    "scene_transitions": ("st",),
}


class ConfigError(ValueError):
    """Raised for an invalid engine configuration."""


@dataclass(frozen=True)
class RewardConfig:
    """Engine tunables plus the set of reward components left enabled."""

    top_k: int = composition.DEFAULT_TOP_K
    balance_delta: float = composition.DEFAULT_BALANCE_DELTA
    triangle_tau: float = composition.DEFAULT_TRIANGLE_TAU
    lateral_bonus: float = movement.DEFAULT_LATERAL_BONUS
    flip_penalty: float = movement.DEFAULT_FLIP_PENALTY
    max_move_rate: float = movement.DEFAULT_MAX_MOVE_RATE
    dialogue_run_length: int = movement.DEFAULT_RUN_LENGTH
    max_scene_quotes: int = scenes.DEFAULT_MAX_SCENE_QUOTES
    reject_threshold: float = 0.8
    disabled_components: frozenset[str] = field(default_factory=frozenset)

    def __post_init__(self):
        unknown = set(self.disabled_components) - set(COMPONENT_GROUPS)
        if unknown:
            raise ConfigError(f"unknown component group(s): {sorted(unknown)}")
        if self.top_k < 1:
            raise ConfigError("top_k must be >= 1")
        if not 0.0 < self.balance_delta < 1.0:
            raise ConfigError("balance_delta must be in (0, 1)")
        if not 0.0 <= self.reject_threshold <= 1.0:
            raise ConfigError("reject_threshold must be in [0, 1]")

    def enabled_terms(self) -> tuple[str, ...]:
        terms = []
        for group, keys in COMPONENT_GROUPS.items():
            if group not in self.disabled_components:
                terms.extend(keys)
        return tuple(terms)

    def to_mapping(self) -> dict:
        return {
            "top_k": self.top_k,
            "balance_delta": self.balance_delta,
            "triangle_tau": self.triangle_tau,
            "lateral_bonus": self.lateral_bonus,
            "flip_penalty": self.flip_penalty,
            "max_move_rate": self.max_move_rate,
            "dialogue_run_length": self.dialogue_run_length,
            "max_scene_quotes": self.max_scene_quotes,
            "reject_threshold": self.reject_threshold,
            "disabled_components": sorted(self.disabled_components),
        }

    @property
    def config_id(self) -> str:
        canonical = json.dumps(self.to_mapping(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:12]

    def with_overrides(self, overrides: dict) -> "RewardConfig":
        if not overrides:
            return self
        fields = dict(self.to_mapping())
        for key, value in overrides.items():
            if key not in fields:
                raise ConfigError(f"unknown config field: {key!r}")
            fields[key] = value
        return config_from_mapping(fields)

    def disable(self, *groups: str) -> "RewardConfig":
        return replace(self, disabled_components=self.disabled_components | set(groups))


def config_from_mapping(obj: dict) -> RewardConfig:
    if not isinstance(obj, dict):
        raise ConfigError("config must be a JSON object")
    kwargs = dict(obj)
    disabled = kwargs.pop("disabled_components", [])
    if not isinstance(disabled, (list, tuple, set, frozenset)):
        raise ConfigError("disabled_components must be a list")
    try:
        return RewardConfig(disabled_components=frozenset(disabled), **kwargs)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def load_config(path: str) -> RewardConfig:
    with open(path, "r", encoding="utf-8") as handle:
        try:
            obj = json.load(handle)
        except ValueError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc}") from None
    return config_from_mapping(obj)


DEFAULT_CONFIG = RewardConfig()


@dataclass(frozen=True)
class ComponentScores:
    json_valid: bool
    qa: float = 0.0
    ar: float = 0.0
    sv: float = 0.0
    cp: float = 0.0
    mc: float = 0.0
    st: float = 0.0

    def as_dict(self) -> dict[str, float]:
        return {k: getattr(self, k) for k in COMPONENT_KEYS}


@dataclass(frozen=True)
class RewardBreakdown:
    valid: bool
    failure: ValidityFailure | None
    components: ComponentScores
    normalized: dict[str, float]
    macro_avg: float
    r: float
    config_id: str
    subchecks: dict[str, float] = field(default_factory=dict)


def normalize_components(components: ComponentScores) -> dict[str, float]:
    return {k: getattr(components, k) / NORMALIZERS[k] for k in COMPONENT_KEYS}


def aggregate(components: ComponentScores, config: RewardConfig = DEFAULT_CONFIG) -> float:
    """The gated scalar reward over the enabled components."""
    if not components.json_valid:
        return 0.0
    normalized = normalize_components(components)
    terms = config.enabled_terms()
    return sum(normalized[k] for k in terms) / len(terms)


def score_play(play: StagePlay, bundle: TaskBundle, config: RewardConfig = DEFAULT_CONFIG) -> RewardBreakdown:
    """Score an already-parsed play with the full suite."""
    grounding = score_grounding(play, bundle)
    comp = composition.score_composition(
        play, bundle, k=config.top_k, delta=config.balance_delta, tau=config.triangle_tau
    )
    moves = movement.movement_points(
        play,
        max_move_rate=config.max_move_rate,
        run_length=config.dialogue_run_length,
        lateral_bonus=config.lateral_bonus,
        flip_penalty=config.flip_penalty,
    )
    transitions = scenes.scene_points(play, max_scene_quotes=config.max_scene_quotes)

    components = ComponentScores(
        json_valid=True,
        qa=grounding.qa,
        ar=grounding.ar,
        sv=comp.sv,
        cp=comp.cp,
        mc=moves.mc,
        st=transitions.st,
    )
    normalized = normalize_components(components)
    subchecks = dict(comp.subchecks)
    subchecks.update({f"mc_{k}": v for k, v in moves.subchecks.items()})
    subchecks.update({f"st_{k}": v for k, v in transitions.subchecks.items()})
    subchecks["s_move"] = moves.s_move_diagnostic
    return RewardBreakdown(
        valid=True,
        failure=None,
        components=components,
        normalized=normalized,
        macro_avg=sum(normalized.values()) / len(normalized),
        r=aggregate(components, config),
        config_id=config.config_id,
        subchecks=subchecks,
    )


def gate_failure_breakdown(failure: ValidityFailure, config: RewardConfig = DEFAULT_CONFIG) -> RewardBreakdown:
    components = ComponentScores(json_valid=False)
    return RewardBreakdown(
        valid=False,
        failure=failure,
        components=components,
        normalized=normalize_components(components),
        macro_avg=0.0,
        r=0.0,
        config_id=config.config_id,
    )


def score_candidate(
    raw: bytes | str,
    bundle: TaskBundle,
    config: RewardConfig = DEFAULT_CONFIG,
) -> RewardBreakdown:
    """Parse, gate, and score one candidate. Never raises on bad input:
    gate failures come back as zero-reward breakdowns."""
    parsed = parse_stage_play(raw)
    if isinstance(parsed, ValidityFailure):
        return gate_failure_breakdown(parsed, config)
    return score_play(parsed, bundle, config)


def score_many(
    raws: list[str],
    bundle: TaskBundle,
    config: RewardConfig = DEFAULT_CONFIG,
    workers: int = 1,
) -> list[RewardBreakdown]:
    """Score a batch of candidates, optionally fanning out over processes.

    Output order always matches input order regardless of worker count.
    """
    if workers <= 1 or len(raws) < 2:
        return [score_candidate(raw, bundle, config) for raw in raws]
    import concurrent.futures
    import functools

    job = functools.partial(_score_job, bundle=bundle, config=config)
    chunk = max(1, len(raws) // (workers * 4))
    with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(job, raws, chunksize=chunk))


def _score_job(raw: str, bundle: TaskBundle, config: RewardConfig) -> RewardBreakdown:
    return score_candidate(raw, bundle, config)


# ---------------------------------------------------------------------------
# Table-style reporting


@dataclass(frozen=True)
class ReportRow:
    system: str
    count: int
    validity_rate: float
    component_means: dict[str, float]  # normalized means in [0, 1]
    avg: float


@dataclass(frozen=True)
class ReportTable:
    rows: tuple[ReportRow, ...]

    def to_records(self) -> list[dict]:
        records = []
        for row in self.rows:
            record = {
                "system": row.system,
                "count": row.count,
                "validity_rate": round(row.validity_rate * 100.0, 6),
                "avg": round(row.avg * 100.0, 6),
            }
            for key in COMPONENT_KEYS:
                record[key] = round(row.component_means[key] * 100.0, 6)
            records.append(record)
        return records

    def render_text(self) -> str:
        headers = [
            "System",
            "Quote Attr.",
            "Alias Res.",
            "Stage Pos.",
            "Char. Pos.",
            "Move. Coh.",
            "Scene Trans.",
            "AVG",
            "Valid %",
            "N",
        ]
        lines = ["  ".join(f"{h:>12}" for h in headers)]
        for row in self.rows:
            cells = [f"{row.system:>12}"]
            for key in COMPONENT_KEYS:
                cells.append(f"{row.component_means[key] * 100.0:>12.6f}")
            cells.append(f"{row.avg * 100.0:>12.6f}")
            cells.append(f"{row.validity_rate * 100.0:>12.6f}")
            cells.append(f"{row.count:>12}")
            lines.append("  ".join(cells))
        return "\n".join(lines) + "\n"


def report(entries: list[tuple[str, dict[str, float], bool]]) -> ReportTable:
    """Aggregate per-candidate results into a leaderboard-style table.

    ``entries`` are (system, normalized components, valid) triples.
    Gate-failed candidates contribute zeros to the component means (they
    are real failures, not missing data); the validity rate is reported as
    its own column. Rows are ordered by descending AVG, then system name.
    """
    if not entries:
        raise ValueError("report needs at least one scored candidate")
    by_system: dict[str, list[tuple[dict[str, float], bool]]] = {}
    for system, normalized, valid in entries:
        by_system.setdefault(system, []).append((normalized, valid))

    rows = []
    for system, items in by_system.items():
        n = len(items)
        means = {
            key: sum(normalized.get(key, 0.0) for normalized, _ in items) / n
            for key in COMPONENT_KEYS
        }
        avg = sum(means.values()) / len(COMPONENT_KEYS)
        validity = sum(1 for _, valid in items if valid) / n
        rows.append(
            ReportRow(system=system, count=n, validity_rate=validity, component_means=means, avg=avg)
        )
    rows.sort(key=lambda row: (-row.avg, row.system))
    return ReportTable(rows=tuple(rows))


def validity_failure_kind(breakdown: RewardBreakdown) -> str | None:
    if breakdown.failure is None:
        return None
    kind = breakdown.failure.kind
    return kind.value if isinstance(kind, FailureKind) else str(kind)
