"""Line-delimited record formats shared by the CLI, service, and tests.

All writers emit canonical JSON (sorted keys, fixed separators, floats
rounded to six decimals) so identical inputs produce identical bytes.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

from .agreement import PairwiseRecord
from .model import BundleError, TaskBundle, parse_task_bundle
from .reward import COMPONENT_KEYS, RewardBreakdown, validity_failure_kind
from .selection import CandidateSet, SftRecord


def fmt6(value: float) -> float:
    """Six-decimal canonical rounding used for every emitted number."""
    return round(float(value), 6)


def dumps_canonical(obj: dict) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


@dataclass(frozen=True)
class BreakdownRecord:
    bundle_id: str
    candidate_index: int
    r: float
    components: dict[str, float]  # normalized, in [0, 1]
    valid: bool
    config_id: str
    failure_kind: str | None = None
    system: str | None = None

    def to_mapping(self) -> dict:
        record = {
            "bundle_id": self.bundle_id,
            "candidate_index": self.candidate_index,
            "r": fmt6(self.r),
            "components": {k: fmt6(self.components[k]) for k in COMPONENT_KEYS},
            "valid": self.valid,
            "config_id": self.config_id,
        }
        if self.failure_kind is not None:
            record["failure_kind"] = self.failure_kind
        if self.system is not None:
            record["system"] = self.system
        return record


def breakdown_record(
    bundle_id: str,
    candidate_index: int,
    breakdown: RewardBreakdown,
    system: str | None = None,
) -> BreakdownRecord:
    return BreakdownRecord(
        bundle_id=bundle_id,
        candidate_index=candidate_index,
        r=breakdown.r,
        components=dict(breakdown.normalized),
        valid=breakdown.valid,
        config_id=breakdown.config_id,
        failure_kind=validity_failure_kind(breakdown),
        system=system,
    )


def parse_breakdown_record(obj: dict) -> BreakdownRecord:
    return BreakdownRecord(
        bundle_id=obj["bundle_id"],
        candidate_index=obj["candidate_index"],
        r=obj["r"],
        components={k: float(obj["components"][k]) for k in COMPONENT_KEYS},
        valid=obj["valid"],
        config_id=obj.get("config_id", ""),
        failure_kind=obj.get("failure_kind"),
        system=obj.get("system"),
    )


# ---------------------------------------------------------------------------
# Readers / writers


def read_ndjson(path: str) -> list[dict]:
    rows = []
    with open(path, "r", encoding="utf-8") as handle:
        for line_number, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rows.append(json.loads(line))
            except ValueError as exc:
                raise ValueError(f"{path}:{line_number}: invalid JSON record: {exc}") from None
    return rows


def write_ndjson(path: str, rows: list[dict]) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for row in rows:
            handle.write(dumps_canonical(row) + "\n")


def load_bundles(path: str) -> dict[str, TaskBundle]:
    """Bundles from a single JSON file or every ``*.json`` in a directory."""
    paths: list[str]
    if os.path.isdir(path):
        paths = sorted(
            os.path.join(path, name) for name in os.listdir(path) if name.endswith(".json")
        )
        if not paths:
            raise BundleError(f"no *.json bundle files in {path}")
    else:
        paths = [path]
    bundles: dict[str, TaskBundle] = {}
    for file_path in paths:
        with open(file_path, "rb") as handle:
            try:
                bundle = parse_task_bundle(handle.read())
            except BundleError as exc:
                raise BundleError(f"{file_path}: {exc}") from None
        if bundle.bundle_id in bundles:
            raise BundleError(f"{file_path}: duplicate bundle_id {bundle.bundle_id!r}")
        bundles[bundle.bundle_id] = bundle
    return bundles


def read_candidate_sets(path: str) -> list[CandidateSet]:
    """Candidate sets from ``{bundle_id, candidate_index, raw_candidate}``
    line records, grouped by bundle in first-seen order."""
    grouped: dict[str, list[tuple[int, str]]] = {}
    order: list[str] = []
    for i, obj in enumerate(read_ndjson(path)):
        try:
            bundle_id = obj["bundle_id"]
            index = obj["candidate_index"]
            raw = obj["raw_candidate"]
        except (KeyError, TypeError):
            raise ValueError(
                f"{path}: record {i} must have bundle_id, candidate_index, raw_candidate"
            ) from None
        if bundle_id not in grouped:
            grouped[bundle_id] = []
            order.append(bundle_id)
        grouped[bundle_id].append((int(index), str(raw)))
    sets = []
    for bundle_id in order:
        entries = sorted(grouped[bundle_id], key=lambda pair: pair[0])
        indices = [i for i, _ in entries]
        if indices != list(range(len(indices))):
            raise ValueError(
                f"{path}: candidate indices for {bundle_id!r} must be 0..{len(indices) - 1}"
            )
        sets.append(CandidateSet(bundle_id=bundle_id, candidates=tuple(raw for _, raw in entries)))
    return sets


def write_candidate_sets(path: str, sets: list[CandidateSet]) -> None:
    rows = []
    for candidate_set in sets:
        for i, raw in enumerate(candidate_set.candidates):
            rows.append(
                {"bundle_id": candidate_set.bundle_id, "candidate_index": i, "raw_candidate": raw}
            )
    write_ndjson(path, rows)


def write_breakdown_records(path: str, records: list[BreakdownRecord]) -> None:
    write_ndjson(path, [record.to_mapping() for record in records])


def read_breakdown_records(path: str) -> list[BreakdownRecord]:
    return [parse_breakdown_record(obj) for obj in read_ndjson(path)]


def write_sft_records(path: str, records: list[SftRecord]) -> None:
    write_ndjson(
        path,
        [
            {
                "bundle_id": record.bundle_id,
                "passage": record.passage,
                "candidate": record.candidate,
                "reward": fmt6(record.reward),
                "candidate_index": record.candidate_index,
            }
            for record in records
        ],
    )


def read_pairwise_records(path: str) -> list[PairwiseRecord]:
    records = []
    for i, obj in enumerate(read_ndjson(path)):
        try:
            records.append(
                PairwiseRecord(
                    item_id=str(obj["item_id"]),
                    system_a=obj["system_a"],
                    system_b=obj["system_b"],
                    human_label=obj["human_label"],
                    score_a=float(obj["score_a"]),
                    score_b=float(obj["score_b"]),
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"{path}: record {i}: {exc}") from None
    return records


def write_pairwise_records(path: str, records: list[PairwiseRecord]) -> None:
    write_ndjson(
        path,
        [
            {
                "item_id": record.item_id,
                "system_a": record.system_a,
                "system_b": record.system_b,
                "human_label": record.human_label,
                "score_a": fmt6(record.score_a),
                "score_b": fmt6(record.score_b),
            }
            for record in records
        ],
    )
