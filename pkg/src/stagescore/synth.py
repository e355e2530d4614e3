"""Seeded, model-free candidate generation and passage chunking.

Everything here is deterministic given its seed (Python's Mersenne Twister
via ``random.Random``), so fixtures are reproducible byte for byte:

* ``make_bundle`` builds synthetic task bundles shaped like marked-up
  novel passages (conversation blocks, early cast introduction).
* ``gen_random`` emits gate-valid layouts with controllable attribution
  accuracy and uniform positions, the noise source for selection curves.
* ``gen_greedy_oracle`` constructs a layout intended to hit the maximum
  reward: correct speakers, the most active characters downstage, balanced
  static columns, scene splits only when the length cap demands them.
* ``gen_perturbed`` damages a play along one scoring axis at a time, for
  monotonicity checks and ablation fixtures.
"""

from __future__ import annotations

import itertools
import json
import random
import re
from dataclasses import dataclass, field

from .grid import POSITION_LABELS, label_of
from .model import (
    BundleError,
    StagePlay,
    TaskBundle,
    scan_quote_markers,
)
from .reward import DEFAULT_CONFIG, RewardConfig

PERTURBATION_KINDS = (
    "misattribute_quote",
    "upstage_primary",
    "inject_depth_thrash",
    "duplicate_primary_cell",
    "split_scene_same_room",
    "drop_quote",
)

_NAMES = (
    "Alice",
    "Edmund",
    "Harriet",
    "Jasper",
    "Beatrice",
    "Felix",
    "Clara",
    "George",
    "Isabel",
)

_MATERIALS = (
    "oak paneling",
    "brick walls with iron sconces",
    "whitewashed plaster",
    "velvet-draped stone",
    "painted timber boards",
    "papered walls over lath",
)

_FILLERS = (
    "said with a glance at the fire",
    "came the reply",
    "after a long pause",
    "in a lowered voice",
    "turning from the window",
    "with sudden warmth",
)


@dataclass(frozen=True)
class GeneratorSpec:
    """How to synthesize one candidate. Identical specs give identical bytes."""

    kind: str  # random | perturbed | greedy_oracle
    seed: int = 0
    p_correct: float = 0.7
    perturbation_kinds: tuple[str, ...] = PERTURBATION_KINDS
    perturbation_count: int = 1


@dataclass(frozen=True)
class PerturbationResult:
    text: str
    applied: tuple[str, ...]
    skipped: tuple[str, ...]


@dataclass(frozen=True)
class OraclePlan:
    text: str
    flagged: bool  # true when the construction had to fall back


# ---------------------------------------------------------------------------
# Serialization helpers


def play_mapping_to_json(scenes: list[dict]) -> str:
    """Serialize scene dicts ({room_dimensions?, room_material?, quotes}) in
    candidate-file form."""
    obj = {}
    for i, scene in enumerate(scenes, start=1):
        entry = {}
        if scene.get("room_dimensions") is not None:
            entry["room_dimensions"] = scene["room_dimensions"]
        if scene.get("room_material") is not None:
            entry["room_material"] = scene["room_material"]
        entry["play"] = {qid: [speaker, label] for qid, speaker, label in scene["quotes"]}
        obj[f"scene_{i}"] = entry
    return json.dumps(obj, ensure_ascii=False)


def play_to_scene_dicts(play: StagePlay) -> list[dict]:
    return [
        {
            "room_dimensions": scene.room_dimensions,
            "room_material": scene.room_material,
            "quotes": [(p.quote_id, p.speaker, p.position.label) for p in scene.placements],
        }
        for scene in play.scenes
    ]


def play_to_json(play: StagePlay) -> str:
    return play_mapping_to_json(play_to_scene_dicts(play))


# ---------------------------------------------------------------------------
# Bundle fixtures


def make_bundle(
    seed: int,
    n_characters: int | None = None,
    n_quotes: int | None = None,
    bundle_id: str | None = None,
) -> TaskBundle:
    """A synthetic marked-up passage bundle.

    Dialogue is built from alternating two-speaker blocks with the cast
    introduced up front and activity concentrated on the leading
    characters. Long bundles (past the scene length cap) keep casts of at
    most three so a maximal-reward layout remains constructible.
    """
    rng = random.Random(seed)
    if n_quotes is None:
        n_quotes = rng.randint(5, 40)
    if n_characters is None:
        limit = 3 if n_quotes > 30 else 6
        n_characters = rng.randint(1, limit)
    if n_characters < 1 or n_characters > len(_NAMES):
        raise ValueError(f"n_characters must be in 1..{len(_NAMES)}")
    if n_quotes < 1:
        raise ValueError("n_quotes must be >= 1")

    names = list(_NAMES[:n_characters])

    # Introduce the cast in activity order, then run weighted dialogue blocks.
    sequence: list[str] = []
    for i, name in enumerate(names):
        if len(sequence) >= n_quotes:
            break
        sequence.append(name)
        if i >= 1 and len(sequence) < n_quotes:
            sequence.append(names[i - 1])  # echo the previous speaker
    weights = [(n_characters - i) ** 2 for i in range(n_characters)]
    while len(sequence) < n_quotes:
        if n_characters == 1:
            sequence.append(names[0])
            continue
        a, b = rng.choices(names, weights=weights, k=2)
        while b == a:
            b = rng.choices(names, weights=weights, k=1)[0]
        block = rng.randint(4, 8)
        for t in range(block):
            if len(sequence) >= n_quotes:
                break
            sequence.append(a if t % 2 == 0 else b)
    sequence = sequence[:n_quotes]

    quote_ids = [str(2000 + i) for i in range(n_quotes)]
    parts = []
    for qid, speaker in zip(quote_ids, sequence):
        filler = rng.choice(_FILLERS)
        parts.append(f'|{qid}| "Well then, as I was saying." ||{qid}|| {speaker} {filler}.')
    passage = " ".join(parts)

    alias_map = {}
    for name in names[:: 2]:
        alias_map[f"Miss {name}"] = name

    return TaskBundle(
        bundle_id=bundle_id or f"bundle-{seed}",
        passage=passage,
        quote_ids=tuple(quote_ids),
        canonical_names=frozenset(names),
        alias_map=alias_map,
        reference_speakers=dict(zip(quote_ids, sequence)),
    )


# ---------------------------------------------------------------------------
# Random generator


def gen_random(bundle: TaskBundle, seed: int, p_correct: float = 0.7) -> str:
    """A gate-valid single-scene layout with noisy attribution.

    Each quote keeps its reference speaker with probability ``p_correct``,
    otherwise draws uniformly from the canonical names; positions are
    uniform over the nine cells.
    """
    if not 0.0 <= p_correct <= 1.0:
        raise ValueError("p_correct must be in [0, 1]")
    rng = random.Random(seed)
    names = sorted(bundle.canonical_names) or ["Narrator"]
    quotes = []
    for qid in bundle.quote_ids:
        reference = bundle.reference_speakers.get(qid)
        if reference is not None and rng.random() < p_correct:
            speaker = reference
        else:
            speaker = rng.choice(names)
        quotes.append((qid, speaker, rng.choice(POSITION_LABELS)))
    scene = {
        "room_dimensions": f"{rng.randint(8, 20)} x {rng.randint(6, 12)} x {rng.randint(4, 9)}",
        "room_material": rng.choice(_MATERIALS),
        "quotes": quotes,
    }
    return play_mapping_to_json([scene])


# ---------------------------------------------------------------------------
# Greedy oracle


def _activity_order(sequence: list[str]) -> list[str]:
    counts: dict[str, int] = {}
    first: dict[str, int] = {}
    for i, speaker in enumerate(sequence):
        counts[speaker] = counts.get(speaker, 0) + 1
        first.setdefault(speaker, i)
    return sorted(counts, key=lambda s: (-counts[s], first[s]))


def _scene_imbalance(sequence: list[str], columns: dict[str, int]) -> float:
    on_stage: dict[str, int] = {}
    x_sum = 0
    total = 0.0
    for speaker in sequence:
        if speaker not in on_stage:
            # overflow characters sit on the center-back fallback cell (x=0)
            column = columns.get(speaker, 0)
            on_stage[speaker] = column
            x_sum += column
        total += x_sum / len(on_stage)
    return abs(total / len(sequence))


def _optimize_columns(
    ranked: list[str],
    scene_sequences: list[list[str]],
) -> dict[str, int]:
    """Static column assignment minimizing the worst per-scene imbalance.

    Characters are pinned to depth rows by activity rank (three per row);
    within each row every injective column assignment is tried and the one
    with the smallest worst-case imbalance wins, ties broken by the
    lexicographically smallest column tuple in rank order.
    """
    rows: list[list[str]] = [ranked[i : i + 3] for i in range(0, len(ranked), 3)]
    per_row_options = [
        list(itertools.permutations((0, -1, 1), len(row_chars))) for row_chars in rows
    ]
    best: tuple[float, tuple[int, ...]] | None = None
    best_columns: dict[str, int] = {}
    for combo in itertools.product(*per_row_options):
        columns = {}
        for row_chars, cols in zip(rows, combo):
            for speaker, col in zip(row_chars, cols):
                columns[speaker] = col
        worst = max(_scene_imbalance(seq, columns) for seq in scene_sequences)
        key = (worst, tuple(columns[s] for s in ranked))
        if best is None or key < best:
            best = key
            best_columns = columns
    return best_columns


def plan_oracle(bundle: TaskBundle, config: RewardConfig = DEFAULT_CONFIG) -> OraclePlan:
    """Construct a layout aimed at the maximum reward.

    Speakers follow the references exactly. The top three characters by
    activity hold the front row, the next three the middle row, and the
    rest the back row; columns are chosen to keep every scene balanced.
    Scenes are split only when the length cap requires it, at a point
    after the whole cast has debuted, with room metadata changed across
    the boundary and every character holding position. Casts too large for
    distinct cells, or splits that cannot keep each scene's leads on the
    front row, fall back to a best-effort layout and are flagged.
    """
    if not bundle.quote_ids:
        raise ValueError("bundle has no quotes to lay out")
    names = sorted(bundle.canonical_names) or ["Narrator"]
    sequence = [bundle.reference_speakers.get(qid, names[0]) for qid in bundle.quote_ids]
    ranked = _activity_order(sequence)
    flagged = False
    if len(ranked) > 9:
        flagged = True
        ranked = ranked[:9]  # overflow characters reuse the back-row cells

    total = len(sequence)
    cap = config.max_scene_quotes
    last_debut = max(sequence.index(s) for s in set(sequence))
    scene_spans: list[tuple[int, int]] = []
    if total <= cap:
        scene_spans = [(0, total)]
    else:
        n_scenes = -(-total // cap)
        # Even-ish contiguous spans; the first boundary must fall after the
        # last debut so later scenes introduce nobody.
        boundaries = [round(total * i / n_scenes) for i in range(1, n_scenes)]
        boundaries = [max(b, last_debut + 1) for b in boundaries]
        boundaries = sorted(set(min(b, total - 1) for b in boundaries))
        spans = []
        start = 0
        for b in boundaries:
            spans.append((start, b))
            start = b
        spans.append((start, total))
        if any(end - start > cap for start, end in spans) or last_debut + 1 > spans[0][1]:
            flagged = True
        scene_spans = spans

    scene_sequences = [sequence[start:end] for start, end in scene_spans]

    # Every scene's leading speakers (up to top_k) must live on the front
    # row for the static assignment to be optimal; when that fails the
    # layout is still emitted, just flagged.
    front = set(ranked[: min(3, len(ranked))])
    for scene_sequence in scene_sequences:
        scene_ranked = _activity_order(scene_sequence)
        leads = scene_ranked[: min(config.top_k, 3, len(scene_ranked))]
        if not set(leads) <= front:
            flagged = True

    columns = _optimize_columns(ranked, scene_sequences)
    rows = {speaker: i // 3 for i, speaker in enumerate(ranked)}
    positions = {
        speaker: label_of(columns[speaker], rows[speaker]) for speaker in ranked
    }
    fallback_label = label_of(0, 2)

    scenes = []
    for i, (start, end) in enumerate(scene_spans):
        quotes = [
            (qid, speaker, positions.get(speaker, fallback_label))
            for qid, speaker in zip(bundle.quote_ids[start:end], sequence[start:end])
        ]
        scenes.append(
            {
                "room_dimensions": f"{12 + 2 * i} x 10 x 8",
                "room_material": _MATERIALS[i % len(_MATERIALS)],
                "quotes": quotes,
            }
        )
    return OraclePlan(text=play_mapping_to_json(scenes), flagged=flagged)


def gen_greedy_oracle(bundle: TaskBundle, config: RewardConfig = DEFAULT_CONFIG) -> str:
    return plan_oracle(bundle, config).text


# ---------------------------------------------------------------------------
# Perturbations


def _perturb_once(scenes: list[dict], kind: str, rng: random.Random) -> bool:
    """Apply one perturbation in place; False when inapplicable."""
    all_quotes = [(si, qi) for si, scene in enumerate(scenes) for qi in range(len(scene["quotes"]))]

    if kind == "misattribute_quote":
        if not all_quotes:
            return False
        speakers = sorted({q[1] for scene in scenes for q in scene["quotes"]})
        si, qi = all_quotes[rng.randrange(len(all_quotes))]
        qid, speaker, label = scenes[si]["quotes"][qi]
        others = [s for s in speakers if s != speaker]
        replacement = others[rng.randrange(len(others))] if others else speaker + " (unknown)"
        scenes[si]["quotes"][qi] = (qid, replacement, label)
        return True

    if kind == "upstage_primary":
        from .grid import position_from_label

        for si, scene in enumerate(scenes):
            order = _activity_order([q[1] for q in scene["quotes"]])
            for speaker in order[:3]:
                depths = [
                    position_from_label(q[2]).depth for q in scene["quotes"] if q[1] == speaker
                ]
                if depths and max(depths) <= 1:
                    scenes[si]["quotes"] = [
                        (
                            qid,
                            s,
                            label_of(
                                position_from_label(lab).lateral,
                                position_from_label(lab).depth + 1,
                            )
                            if s == speaker
                            else lab,
                        )
                        for qid, s, lab in scene["quotes"]
                    ]
                    return True
        return False

    if kind == "inject_depth_thrash":
        from .grid import position_from_label

        for si, scene in enumerate(scenes):
            by_speaker: dict[str, list[int]] = {}
            for qi, (qid, speaker, label) in enumerate(scene["quotes"]):
                by_speaker.setdefault(speaker, []).append(qi)
            for speaker, indices in by_speaker.items():
                if len(indices) < 3:
                    continue
                i1, i2, i3 = indices[0], indices[1], indices[2]
                p1 = position_from_label(scene["quotes"][i1][2])
                p3 = position_from_label(scene["quotes"][i3][2])
                if p1.cell != p3.cell:
                    continue
                target_depth = 2 if p1.depth < 2 else 0
                qid, s, _ = scene["quotes"][i2]
                scene["quotes"][i2] = (qid, s, label_of(p1.lateral, target_depth))
                return True
        return False

    if kind == "duplicate_primary_cell":
        for si, scene in enumerate(scenes):
            order = _activity_order([q[1] for q in scene["quotes"]])
            if len(order) < 2:
                continue
            primary, second = order[0], order[1]
            primary_label = next(q[2] for q in scene["quotes"] if q[1] == primary)
            scenes[si]["quotes"] = [
                (qid, s, primary_label if s == second else lab)
                for qid, s, lab in scene["quotes"]
            ]
            return True
        return False

    if kind == "split_scene_same_room":
        lengths = [len(scene["quotes"]) for scene in scenes]
        si = max(range(len(scenes)), key=lambda i: lengths[i])
        if lengths[si] < 2:
            return False
        scene = scenes[si]
        mid = lengths[si] // 2
        first = {
            "room_dimensions": scene.get("room_dimensions"),
            "room_material": scene.get("room_material"),
            "quotes": scene["quotes"][:mid],
        }
        second = {
            "room_dimensions": scene.get("room_dimensions"),
            "room_material": scene.get("room_material"),
            "quotes": scene["quotes"][mid:],
        }
        scenes[si : si + 1] = [first, second]
        return True

    if kind == "drop_quote":
        lengths = [len(scene["quotes"]) for scene in scenes]
        candidates = [i for i, n in enumerate(lengths) if n >= 2]
        if not candidates:
            return False
        si = max(candidates, key=lambda i: lengths[i])
        scenes[si]["quotes"] = scenes[si]["quotes"][:-1]
        return True

    raise ValueError(f"unknown perturbation kind: {kind!r}")


def gen_perturbed(
    base: StagePlay,
    kinds: tuple[str, ...] = PERTURBATION_KINDS,
    count: int = 1,
    seed: int = 0,
) -> PerturbationResult:
    """Apply ``count`` perturbations drawn from ``kinds`` to a play.

    Inapplicable draws are skipped and reported. The result stays
    gate-valid for every kind (drop_quote harms coverage, not the gate).
    """
    unknown = set(kinds) - set(PERTURBATION_KINDS)
    if unknown:
        raise ValueError(f"unknown perturbation kind(s): {sorted(unknown)}")
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = random.Random(seed)
    scenes = [
        {
            "room_dimensions": s["room_dimensions"],
            "room_material": s["room_material"],
            "quotes": list(s["quotes"]),
        }
        for s in play_to_scene_dicts(base)
    ]
    applied: list[str] = []
    skipped: list[str] = []
    for _ in range(count):
        kind = kinds[rng.randrange(len(kinds))] if len(kinds) > 1 else kinds[0]
        if _perturb_once(scenes, kind, rng):
            applied.append(kind)
        else:
            skipped.append(kind)
    return PerturbationResult(
        text=play_mapping_to_json(scenes),
        applied=tuple(applied),
        skipped=tuple(skipped),
    )


def generate(bundle: TaskBundle, spec: GeneratorSpec, config: RewardConfig = DEFAULT_CONFIG) -> str:
    """Dispatch on GeneratorSpec.kind."""
    if spec.kind == "random":
        return gen_random(bundle, spec.seed, spec.p_correct)
    if spec.kind == "greedy_oracle":
        return gen_greedy_oracle(bundle, config)
    if spec.kind == "perturbed":
        from .model import parse_stage_play

        base = parse_stage_play(gen_greedy_oracle(bundle, config))
        if not isinstance(base, StagePlay):
            raise RuntimeError("oracle produced an invalid play")
        return gen_perturbed(base, spec.perturbation_kinds, spec.perturbation_count, spec.seed).text
    raise ValueError(f"unknown generator kind: {spec.kind!r}")


# ---------------------------------------------------------------------------
# Passage chunking


_UNIT = re.compile(r"\S+")


def chunk_passage(text: str, max_units: int) -> list[str]:
    """Greedy contiguous split on whitespace units that never cuts inside a
    ``|id| ... ||id||`` span.

    Windows hold at most ``max_units`` units unless a single quote span by
    itself exceeds the budget. Concatenating the windows restores the
    original text exactly. Raises BundleError on unbalanced markers.
    """
    if max_units < 1:
        raise ValueError("max_units must be >= 1")
    if not text:
        return []
    spans = scan_quote_markers(text)
    units = [(m.start(), m.end()) for m in _UNIT.finditer(text)]
    if not units:
        return [text]

    # Group the units of each quote span into one atomic block.
    blocks: list[tuple[int, int]] = []  # [first_unit, last_unit] inclusive
    span_index = 0
    unit_index = 0
    while unit_index < len(units):
        start, end = units[unit_index]
        while span_index < len(spans) and spans[span_index][2] <= start:
            span_index += 1
        if span_index < len(spans) and start < spans[span_index][2] and end > spans[span_index][1]:
            last = unit_index
            while last + 1 < len(units) and units[last + 1][0] < spans[span_index][2]:
                last += 1
            blocks.append((unit_index, last))
            unit_index = last + 1
        else:
            blocks.append((unit_index, unit_index))
            unit_index += 1

    window_starts = [0]  # indices into units
    current = 0
    for first, last in blocks:
        size = last - first + 1
        if current > 0 and current + size > max_units:
            window_starts.append(first)
            current = 0
        current += size

    offsets = [units[u][0] for u in window_starts]
    offsets[0] = 0
    offsets.append(len(text))
    return [text[offsets[i] : offsets[i + 1]] for i in range(len(offsets) - 1)]
