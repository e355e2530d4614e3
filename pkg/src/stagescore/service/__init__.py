"""Batch reward service: FastAPI app wrapping the scoring engine."""

from .app import create_app, run_server

__all__ = ["create_app", "run_server"]
