"""Stage grid geometry: the nine canonical cells and their coordinates.

The stage is a 3x3 grid. Depth rows run front (downstage, closest to the
audience) to back (upstage); lateral columns are given from the audience
view, with stage left mapped to x = -1. Every scorer that needs geometry
works off the (lateral, depth) coordinates defined here.
"""

from __future__ import annotations

from dataclasses import dataclass

_DEPTH_WORDS = (("front", 0), ("middle", 1), ("back", 2))
_LATERAL_WORDS = (("left", -1), ("center", 0), ("right", 1))


class UnknownPositionError(ValueError):
    """Raised for a position label outside the nine-cell vocabulary."""


@dataclass(frozen=True)
class GridPosition:
    """One cell of the stage grid.

    lateral: -1 left, 0 center, +1 right (audience view).
    depth:    0 front, 1 middle, 2 back.
    """

    label: str
    lateral: int
    depth: int

    @property
    def cell(self) -> tuple[int, int]:
        return (self.lateral, self.depth)


def _build_positions() -> dict[str, GridPosition]:
    table = {}
    for depth_word, depth in _DEPTH_WORDS:
        for lateral_word, lateral in _LATERAL_WORDS:
            label = f"{depth_word} stage {lateral_word}"
            table[label] = GridPosition(label=label, lateral=lateral, depth=depth)
    return table


POSITIONS: dict[str, GridPosition] = _build_positions()
POSITION_LABELS: tuple[str, ...] = tuple(POSITIONS)

_BY_CELL: dict[tuple[int, int], GridPosition] = {p.cell: p for p in POSITIONS.values()}


def position_from_label(label: str) -> GridPosition:
    """Resolve a label to its grid cell.

    Matching is case-sensitive and exact after stripping surrounding
    whitespace; anything else raises UnknownPositionError.
    """
    position = POSITIONS.get(label.strip())
    if position is None:
        raise UnknownPositionError(f"unknown stage position label: {label!r}")
    return position


def position_at(lateral: int, depth: int) -> GridPosition:
    """Inverse of position_from_label over the nine valid coordinate pairs."""
    try:
        return _BY_CELL[(lateral, depth)]
    except KeyError:
        raise ValueError(f"no grid cell at lateral={lateral}, depth={depth}") from None


def label_of(lateral: int, depth: int) -> str:
    return position_at(lateral, depth).label
