"""Static prompt templates paired with the scoring engine.

``generation`` is the full dramaturgy-constrained prompt for producing
candidate layouts, ``minimal`` keeps the same output schema with the
blocking guidance stripped (for prompt-sensitivity comparisons), and
``judge`` is the grading rubric whose point scales mirror the
deterministic component decomposition. Templates carry ``{PASSAGE}`` and
``{CANONICAL_NAMES}`` placeholders.
"""

from __future__ import annotations

import importlib.resources

TEMPLATE_NAMES = ("generation", "minimal", "judge")


def load_prompt(name: str) -> str:
    """Return a template's text by name ('generation', 'minimal', 'judge')."""
    if name not in TEMPLATE_NAMES:
        raise ValueError(f"unknown prompt template {name!r}; choose from {TEMPLATE_NAMES}")
    return (
        importlib.resources.files(__package__).joinpath(f"{name}.txt").read_text("utf-8")
    )


def render_prompt(name: str, passage: str, canonical_names: list[str]) -> str:
    """Fill a template's placeholders for one task bundle."""
    return (
        load_prompt(name)
        .replace("{PASSAGE}", passage)
        .replace("{CANONICAL_NAMES}", ", ".join(canonical_names))
    )
