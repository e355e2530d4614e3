"""Text-grounding scores: quote attribution (qa) and alias resolution (ar).

Both are fractions over the bundle's reference quote ids. Attribution is
exact string match (after trimming) against the reference canonical name;
alias resolution only asks whether the predicted speaker is a canonical
name at all, so the two columns separate "wrong speaker" from
"hallucinated or unnormalized name". A quote missing from the play counts
false for both. Quote ids present in the play but absent from the
references are ignored here.
"""

from __future__ import annotations

from dataclasses import dataclass

from .model import StagePlay, TaskBundle


@dataclass(frozen=True)
class GroundingScores:
    qa: float
    ar: float
    per_quote: dict[str, tuple[bool, bool]]


def score_grounding(play: StagePlay, bundle: TaskBundle) -> GroundingScores:
    """Score attribution and alias resolution against bundle references.

    A bundle with no reference speakers scores 1.0 on both (nothing to get
    wrong), keeping vacuous inputs consistent with the other scorers.
    """
    speakers = {p.quote_id: p.speaker for p in play.placements()}
    per_quote: dict[str, tuple[bool, bool]] = {}
    reference_ids = [q for q in bundle.quote_ids if q in bundle.reference_speakers]
    for quote_id in reference_ids:
        predicted = speakers.get(quote_id)
        if predicted is None:
            per_quote[quote_id] = (False, False)
            continue
        attributed = predicted == bundle.reference_speakers[quote_id]
        resolved = predicted in bundle.canonical_names
        per_quote[quote_id] = (attributed, resolved)

    if not reference_ids:
        return GroundingScores(qa=1.0, ar=1.0, per_quote={})
    n = len(reference_ids)
    qa = sum(1 for attributed, _ in per_quote.values() if attributed) / n
    ar = sum(1 for _, resolved in per_quote.values() if resolved) / n
    return GroundingScores(qa=qa, ar=ar, per_quote=per_quote)
