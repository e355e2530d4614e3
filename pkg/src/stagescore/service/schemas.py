"""Pydantic request/response models for the batch reward service."""

from __future__ import annotations

from pydantic import BaseModel, Field, model_validator


class BundlePayload(BaseModel):
    bundle_id: str
    passage: str
    quote_ids: list[str]
    canonical_names: list[str]
    alias_map: dict[str, str] = Field(default_factory=dict)
    reference_speakers: dict[str, str] = Field(default_factory=dict)


class ScoreRequest(BaseModel):
    """One scoring call: a preloaded bundle id or an inline bundle, plus the
    candidate texts to score as a group."""

    request_id: str = ""
    bundle_id: str | None = None
    bundle: BundlePayload | None = None
    candidates: list[str]
    with_advantages: bool = False
    config_overrides: dict | None = None

    @model_validator(mode="after")
    def _exactly_one_bundle(self):
        if (self.bundle_id is None) == (self.bundle is None):
            raise ValueError("provide exactly one of bundle_id or bundle")
        if not self.candidates:
            raise ValueError("candidates must be non-empty")
        return self


class BreakdownPayload(BaseModel):
    candidate_index: int
    r: float
    components: dict[str, float]
    valid: bool
    failure_kind: str | None = None


class AdvantagePayload(BaseModel):
    rewards: list[float]
    advantages: list[float]
    epsilon: float


class ScoreResponse(BaseModel):
    request_id: str
    bundle_id: str
    breakdowns: list[BreakdownPayload]
    advantages: AdvantagePayload | None = None
    config_id: str
    engine_version: str


class HealthResponse(BaseModel):
    status: str
    engine_version: str
    bundle_count: int


class ConfigResponse(BaseModel):
    config: dict
    config_id: str


class ErrorResponse(BaseModel):
    error: str
    detail: str
