"""Stateless batch reward service.

The scoring unit is a candidate list, matching how RL training loops score
groups of rollouts per prompt. Bundles are loaded read-only at startup
(failing fast on any bad file); handlers are pure over that shared state,
so identical requests always produce identical response bodies and
concurrent clients cannot interfere.

Invalid candidates are scored r = 0, never surfaced as server errors;
4xx-class responses are reserved for bad requests (unknown bundle ids,
oversized batches, malformed inline bundles).
"""

from __future__ import annotations

from fastapi import FastAPI
from fastapi.responses import JSONResponse

from .. import __version__
from ..model import BundleError, TaskBundle, bundle_from_mapping
from ..records import fmt6, load_bundles
from ..reward import COMPONENT_KEYS, ConfigError, DEFAULT_CONFIG, RewardConfig, score_candidate, validity_failure_kind
from ..selection import group_advantages
from .schemas import (
    AdvantagePayload,
    BreakdownPayload,
    ConfigResponse,
    HealthResponse,
    ScoreRequest,
    ScoreResponse,
)

DEFAULT_MAX_CANDIDATES = 1024


def _error(status: int, error: str, detail: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"error": error, "detail": detail})


def create_app(
    bundles: dict[str, TaskBundle],
    config: RewardConfig = DEFAULT_CONFIG,
    max_candidates: int = DEFAULT_MAX_CANDIDATES,
) -> FastAPI:
    app = FastAPI(title="stagescore reward service", version=__version__)

    @app.get("/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(status="ok", engine_version=__version__, bundle_count=len(bundles))

    @app.get("/config", response_model=ConfigResponse)
    def get_config() -> ConfigResponse:
        return ConfigResponse(config=config.to_mapping(), config_id=config.config_id)

    @app.post("/score", response_model=ScoreResponse)
    def score(request: ScoreRequest):
        if len(request.candidates) > max_candidates:
            return _error(
                413,
                "too_many_candidates",
                f"request has {len(request.candidates)} candidates; the limit is {max_candidates}",
            )
        if request.bundle_id is not None:
            bundle = bundles.get(request.bundle_id)
            if bundle is None:
                return _error(404, "unknown_bundle", f"no bundle loaded with id {request.bundle_id!r}")
        else:
            try:
                bundle = bundle_from_mapping(request.bundle.model_dump())
            except BundleError as exc:
                return _error(422, "invalid_bundle", str(exc))

        effective = config
        if request.config_overrides:
            try:
                effective = config.with_overrides(request.config_overrides)
            except ConfigError as exc:
                return _error(422, "invalid_config_override", str(exc))

        breakdowns = []
        rewards = []
        for i, raw in enumerate(request.candidates):
            breakdown = score_candidate(raw, bundle, effective)
            rewards.append(breakdown.r)
            breakdowns.append(
                BreakdownPayload(
                    candidate_index=i,
                    r=fmt6(breakdown.r),
                    components={k: fmt6(breakdown.normalized[k]) for k in COMPONENT_KEYS},
                    valid=breakdown.valid,
                    failure_kind=validity_failure_kind(breakdown),
                )
            )

        advantages = None
        if request.with_advantages:
            vector = group_advantages(rewards)
            advantages = AdvantagePayload(
                rewards=[fmt6(r) for r in vector.rewards],
                advantages=[fmt6(a) for a in vector.advantages],
                epsilon=vector.epsilon,
            )

        return ScoreResponse(
            request_id=request.request_id,
            bundle_id=bundle.bundle_id,
            breakdowns=breakdowns,
            advantages=advantages,
            config_id=effective.config_id,
            engine_version=__version__,
        )

    return app


def run_server(
    bundle_dir: str,
    config: RewardConfig = DEFAULT_CONFIG,
    host: str = "127.0.0.1",
    port: int = 8970,
    max_candidates: int = DEFAULT_MAX_CANDIDATES,
) -> None:
    """Load bundles (fail fast), then serve until interrupted."""
    import uvicorn

    bundles = load_bundles(bundle_dir)
    app = create_app(bundles, config, max_candidates)
    uvicorn.run(app, host=host, port=port, log_level="warning")
