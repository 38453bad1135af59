"""HTTP API over the orchestrator.

Long operations return 202 immediately; iteration progress is polled via the
status field. Concurrent requests are fine across sessions; per-session
commands are serialized by the engine's session lock.
"""

from __future__ import annotations

import threading

from fastapi import FastAPI, Query, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from ..errors import EngineError, NotReady
from ..orchestrator import Engine, Iteration
from ..providers.factory import build_providers, health, overall_status

_STATUS_BY_CODE = {
    "session_not_found": 404,
    "iteration_not_found": 404,
    "candidate_not_found": 404,
    "not_found": 404,
    "not_ready": 409,
    "version_mismatch": 409,
    "config_error": 400,
    "range_violation": 400,
    "bad_radii": 400,
    "unknown_metric": 400,
    "no_scored_candidates": 409,
    "insufficient_data": 400,
    "keyword_absent": 404,
}


class CreateSession(BaseModel):
    seed: int = 0
    config: dict | None = None  # {"engine": {...}, "providers": {...}}


class CreateIteration(BaseModel):
    prompt: str = Field(min_length=1)
    n: int | None = None
    branches: list[str] | None = None


class KeywordPost(BaseModel):
    keywords: list[str] = Field(min_length=1)


def _iteration_summary(it: Iteration) -> dict:
    return {
        "index": it.index,
        "status": it.status,
        "prompt": it.root_prompt.text,
        "candidate_count": len(it.candidates),
        "diagnostics": it.diagnostics,
    }


def create_app(engine: Engine, default_providers_config: dict | None = None) -> FastAPI:
    app = FastAPI(title="mvprompt", version="0.1.0")
    default_providers_config = default_providers_config or {}

    @app.exception_handler(EngineError)
    async def engine_error_handler(request: Request, exc: EngineError):
        status = _STATUS_BY_CODE.get(exc.code, 500)
        return JSONResponse(
            status_code=status,
            content={
                "code": exc.code,
                "message": str(exc),
                "stage": exc.stage,
                "retryable": exc.retryable,
            },
        )

    @app.get("/healthz")
    def healthz():
        configs = build_providers(default_providers_config, seed=0).configs
        report = health(configs)
        return {
            "status": overall_status(report),
            "providers": {
                name: {"status": h.status, "latency_ms": h.latency_ms, "detail": h.detail}
                for name, h in report.items()
            },
        }

    @app.post("/sessions", status_code=201)
    def create_session(body: CreateSession):
        config = body.config or {}
        providers_config = config.get("providers", default_providers_config)
        engine_config = config.get("engine", {})
        session = engine.create_session(
            seed=body.seed, providers_config=providers_config, engine_config=engine_config
        )
        return {"id": session.id, "seed": session.seed}

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str):
        session = engine.get_session(session_id)
        return {
            "id": session.id,
            "seed": session.seed,
            "current_prompt": session.current_prompt,
            "prompt_lineage": session.prompt_lineage,
            "iterations": [_iteration_summary(it) for it in session.iterations],
        }

    @app.post("/sessions/{session_id}/iterations", status_code=202)
    def post_iteration(session_id: str, body: CreateIteration):
        iteration = engine.begin_iteration(session_id, body.prompt, n=body.n, branches=body.branches)

        def worker():
            try:
                engine.run_iteration(session_id, body.prompt, iteration=iteration)
            except Exception:  # diagnostics captured on the iteration itself
                pass

        threading.Thread(target=worker, daemon=True).start()
        return {"iteration": iteration.index, "status": iteration.status}

    @app.get("/sessions/{session_id}/iterations/{index}")
    def get_iteration(session_id: str, index: int):
        iteration = engine.get_iteration(session_id, index)
        return iteration.to_doc()

    @app.get("/sessions/{session_id}/iterations/{index}/treemap")
    def get_treemap(session_id: str, index: int):
        iteration = engine.get_iteration(session_id, index)
        if iteration.status != "ready":
            raise NotReady(f"iteration {index} status is {iteration.status}")
        return {"treemap": iteration.treemap, "keyword_stats": iteration.keyword_stats}

    @app.get("/candidates/{candidate_id}")
    def get_candidate(candidate_id: str):
        _, _, candidate = engine.find_candidate(candidate_id)
        return candidate.to_doc()

    @app.get("/candidates/{candidate_id}/contribution")
    def get_contribution(
        candidate_id: str,
        keyword: str = Query(min_length=1),
        threshold: float = Query(0.0, ge=0.0, le=1.0),
    ):
        return engine.contribution(candidate_id, keyword, threshold)

    @app.post("/sessions/{session_id}/prompt/keywords")
    def post_keywords(session_id: str, body: KeywordPost):
        prompt = engine.apply_keyword(session_id, body.keywords)
        return {"prompt": prompt}

    @app.get("/sessions/{session_id}/recommendations")
    def get_recommendations(session_id: str, focus: str | None = Query(None)):
        focus_list = [f for f in (focus.split(",") if focus else []) if f] or None
        return {"recommendations": engine.recommendations(session_id, focus_list)}

    @app.get("/sessions/{session_id}/iterations/{index}/report")
    def get_report(session_id: str, index: int):
        return engine.export_report(session_id, index)

    @app.get("/blobs/{digest}.png")
    def get_blob(digest: str):
        from fastapi.responses import Response

        return Response(content=engine.store.blob_bytes(digest), media_type="image/png")

    return app
