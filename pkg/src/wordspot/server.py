"""HTTP service exposing search, feedback sessions, and admin operations.

All endpoints live under /v1. Errors come back as
``{"error": {"code": ..., "message": ...}}`` with a matching HTTP status.
Admin mutations (index load, subspace fit) are exclusive: they take a
writer gate, swap state atomically, and invalidate every live session.
"""

from __future__ import annotations

import hashlib
import io
import threading
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, Response
from fastapi.staticfiles import StaticFiles

from . import corpus as corpus_mod
from . import feedback, image_io, retrieval, subspace
from .errors import (
    DegenerateWordError,
    EmptyFeedbackError,
    JudgmentError,
    RangeError,
    WordspotError,
)

DEFAULT_IDLE_TIMEOUT = 30 * 60

_STATUS_BY_CODE = {
    "degenerate_word": 400,
    "dimension_error": 400,
    "range_error": 422,
    "judgment_error": 422,
    "empty_feedback": 422,
    "space_error": 409,
    "empty_index": 409,
}


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str):
        self.status = status
        self.code = code
        self.message = message
        super().__init__(message)


def _error_response(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse(
        status_code=status, content={"error": {"code": code, "message": message}}
    )


@dataclass
class ApiSession:
    session: feedback.FeedbackSession
    created_at: float
    last_active: float
    lock: threading.Lock = field(default_factory=threading.Lock)


class ServerState:
    def __init__(self, idle_timeout: float = DEFAULT_IDLE_TIMEOUT):
        self.index: corpus_mod.CorpusIndex | None = None
        self.index_path: str | None = None
        self.pages_dir: Path | None = None
        self.idle_timeout = idle_timeout
        self.sessions: dict[str, ApiSession] = {}
        self.admin_gate = threading.Lock()
        self.sessions_lock = threading.Lock()
        self.thumbnails: dict[str, tuple[int, corpus_mod.WordBox]] = {}
        self.page_cache: dict[int, object] = {}

    def require_index(self) -> corpus_mod.CorpusIndex:
        if self.index is None:
            raise ApiError(409, "no_index", "no index loaded")
        return self.index

    def swap_index(self, index, path=None):
        with self.sessions_lock:
            self.index = index
            self.index_path = path
            self.sessions.clear()
            self.thumbnails.clear()
            self.page_cache.clear()

    def get_session(self, session_id: str) -> ApiSession:
        with self.sessions_lock:
            wrapped = self.sessions.get(session_id)
            if wrapped is None:
                raise ApiError(404, "unknown_session", f"no session {session_id}")
            if time.monotonic() - wrapped.last_active > self.idle_timeout:
                del self.sessions[session_id]
                raise ApiError(404, "expired_session", f"session {session_id} expired")
            wrapped.last_active = time.monotonic()
            return wrapped

    def add_session(self, session: feedback.FeedbackSession) -> ApiSession:
        wrapped = ApiSession(
            session=session, created_at=time.monotonic(), last_active=time.monotonic()
        )
        with self.sessions_lock:
            self.sessions[session.session_id] = wrapped
        return wrapped

    def thumbnail_key(self, doc_id: int, box: corpus_mod.WordBox) -> str:
        raw = f"{doc_id}:{box.x}:{box.y}:{box.w}:{box.h}"
        key = hashlib.sha1(raw.encode()).hexdigest()[:16]
        self.thumbnails[key] = (doc_id, box)
        return key

    def page_for(self, doc_id: int):
        if self.pages_dir is None:
            return None
        if doc_id not in self.page_cache:
            path = self.pages_dir / f"page_{doc_id:04d}.pbm"
            self.page_cache[doc_id] = (
                image_io.read_page(path) if path.exists() else None
            )
        return self.page_cache[doc_id]


def _session_params(body: dict, default: feedback.RocchioParams) -> feedback.RocchioParams:
    override = body.get("params") or {}
    if not override:
        return default
    try:
        return replace(
            default,
            **{
                k: override[k]
                for k in ("alpha", "beta", "gamma", "strategy")
                if k in override
            },
        )
    except RangeError as exc:
        raise ApiError(422, exc.code, str(exc)) from exc


def _results_payload(state: ServerState, index, ranking, top: int) -> list[dict]:
    rows = []
    for row in ranking.top(top):
        entry = index.entry(row.word_id)
        key = state.thumbnail_key(entry.doc_id, entry.box)
        rows.append(
            {
                "word_id": row.word_id,
                "doc_id": entry.doc_id,
                "label": entry.label,
                "box": {
                    "x": entry.box.x,
                    "y": entry.box.y,
                    "w": entry.box.w,
                    "h": entry.box.h,
                },
                "distance": row.distance,
                "rate": row.rate,
                "thumbnail": f"/v1/thumbnails/{key}.png",
            }
        )
    return rows


def _session_response(state: ServerState, index, wrapped: ApiSession, top: int) -> dict:
    session = wrapped.session
    ranking = session.rounds[-1].ranking
    return {
        "session_id": session.session_id,
        "round": session.round_index,
        "space": session.space,
        "strategy": session.params.strategy,
        "params": {
            "alpha": session.params.alpha,
            "beta": session.params.beta,
            "gamma": session.params.gamma,
        },
        "total": len(ranking),
        "results": _results_payload(state, index, ranking, top),
    }


def create_app(
    index_path: str | None = None,
    pages_dir: str | None = None,
    idle_timeout: float = DEFAULT_IDLE_TIMEOUT,
    static_dir: str | None = None,
) -> FastAPI:
    app = FastAPI(title="wordspot", version="1.0")
    state = ServerState(idle_timeout=idle_timeout)
    app.state.engine = state
    if index_path:
        state.swap_index(corpus_mod.load_index(index_path), str(index_path))
    if pages_dir:
        state.pages_dir = Path(pages_dir)

    @app.exception_handler(ApiError)
    async def handle_api_error(request: Request, exc: ApiError):
        return _error_response(exc.status, exc.code, exc.message)

    @app.exception_handler(WordspotError)
    async def handle_engine_error(request: Request, exc: WordspotError):
        return _error_response(_STATUS_BY_CODE.get(exc.code, 400), exc.code, str(exc))

    async def _read_query_body(request: Request) -> dict:
        content_type = request.headers.get("content-type", "")
        if content_type.startswith("multipart/form-data"):
            form = await request.form()
            upload = form.get("image")
            if upload is None:
                raise ApiError(400, "missing_image", "multipart field 'image' required")
            body = {"image_bytes": await upload.read()}
            for key in ("top", "subspace", "strategy", "alpha", "beta", "gamma"):
                if key in form:
                    body[key] = form[key]
            return body
        try:
            return await request.json()
        except Exception:
            raise ApiError(400, "malformed_body", "expected JSON or multipart body")

    @app.post("/v1/search")
    async def search(request: Request):
        index = state.require_index()
        body = await _read_query_body(request)
        top = int(body.get("top", 10))
        use_subspace = str(body.get("subspace", "false")).lower() in ("1", "true")
        try:
            params = feedback.RocchioParams(
                alpha=float(body.get("alpha", 1.0)),
                beta=float(body.get("beta", 0.82)),
                gamma=float(body.get("gamma", 0.25)),
                strategy=str(body.get("strategy", "positive")),
            )
        except RangeError as exc:
            raise ApiError(422, exc.code, str(exc))

        if "image_bytes" in body:
            try:
                page = image_io.read_page_bytes(body["image_bytes"])
            except ValueError as exc:
                raise ApiError(400, "malformed_image", str(exc))
            descriptor = retrieval.descriptor_from_word_image(page)
        elif "word_id" in body:
            try:
                descriptor = index.entry(int(body["word_id"])).descriptor
            except KeyError:
                raise ApiError(404, "unknown_word", f"word_id {body['word_id']}")
        else:
            raise ApiError(400, "missing_query", "provide an image or a word_id")

        query = retrieval.query_from_descriptor(descriptor, index, use_subspace)
        session = feedback.create_session(
            index, query, params, shown_n=top, q0_original=descriptor
        )
        wrapped = state.add_session(session)
        return _session_response(state, index, wrapped, top)

    @app.post("/v1/sessions/{session_id}/feedback")
    async def apply_feedback(session_id: str, request: Request):
        index = state.require_index()
        try:
            body = await request.json()
        except Exception:
            raise ApiError(400, "malformed_body", "expected a JSON body")
        wrapped = state.get_session(session_id)
        with wrapped.lock:
            session = wrapped.session
            session.params = _session_params(body, session.params)
            judgments = [
                feedback.Judgment(int(j["word_id"]), bool(j["relevant"]))
                for j in body.get("judgments", [])
            ]
            try:
                feedback.run_feedback_round(session, judgments, index)
            except (JudgmentError, EmptyFeedbackError) as exc:
                raise ApiError(422, exc.code, str(exc))
            return _session_response(state, index, wrapped, session.shown_n)

    @app.get("/v1/sessions/{session_id}")
    async def session_view(session_id: str):
        index = state.require_index()
        wrapped = state.get_session(session_id)
        with wrapped.lock:
            payload = _session_response(state, index, wrapped, wrapped.session.shown_n)
            payload["history"] = [
                {
                    "round": i,
                    "judgments": [
                        {"word_id": j.word_id, "relevant": j.relevant}
                        for j in rec.judgments
                    ],
                    "top_word_ids": [
                        int(w) for w in rec.ranking.word_ids[: wrapped.session.shown_n]
                    ],
                }
                for i, rec in enumerate(wrapped.session.rounds)
            ]
            return payload

    @app.post("/v1/admin/index")
    async def admin_load_index(request: Request):
        body = await request.json()
        path = body.get("path")
        if not path:
            raise ApiError(400, "missing_path", "body must carry {'path': ...}")
        if not state.admin_gate.acquire(blocking=False):
            raise ApiError(409, "busy", "another admin mutation is in progress")
        try:
            index = corpus_mod.load_index(path)
            state.swap_index(index, str(path))
            if body.get("pages_dir"):
                state.pages_dir = Path(body["pages_dir"])
            return {"entries": len(index), "path": str(path)}
        finally:
            state.admin_gate.release()

    @app.post("/v1/admin/pca")
    async def admin_fit_pca(request: Request):
        index = state.require_index()
        try:
            body = await request.json()
        except Exception:
            body = {}
        if not state.admin_gate.acquire(blocking=False):
            raise ApiError(409, "busy", "another admin mutation is in progress")
        try:
            model = subspace.fit_pca(
                index.matrix,
                variance_target=float(body.get("variance", 0.95)),
                fixed_m=body.get("fixed_m"),
                whiten=bool(body.get("whiten", True)),
            )
            updated = index.with_pca(model)
            state.swap_index(updated, state.index_path)
            if body.get("save") and state.index_path:
                corpus_mod.save_index(updated, state.index_path)
            return {
                "m": model.m,
                "tail_error": subspace.reconstruction_error(model),
                "whiten": model.whiten,
            }
        finally:
            state.admin_gate.release()

    @app.get("/v1/admin/stats")
    async def admin_stats():
        index = state.index
        model = index.pca if index is not None else None
        return {
            "entries": len(index) if index is not None else 0,
            "index_path": state.index_path,
            "space_mode": "subspace" if model is not None else "original",
            "m": model.m if model is not None else None,
            "tail_error": (
                subspace.reconstruction_error(model) if model is not None else None
            ),
            "whiten": model.whiten if model is not None else None,
            "sessions": len(state.sessions),
        }

    @app.get("/v1/thumbnails/{key}.png")
    async def thumbnail(key: str):
        from PIL import Image

        entry = state.thumbnails.get(key)
        if entry is None:
            raise ApiError(404, "unknown_thumbnail", "no such thumbnail")
        doc_id, box = entry
        page = state.page_for(doc_id)
        if page is None:
            raise ApiError(404, "no_pages", "server has no page images")
        crop = box.crop(page)
        gray = np.where(crop, 0, 255).astype(np.uint8)
        image = Image.fromarray(gray, mode="L")
        out = io.BytesIO()
        image.save(out, format="PNG")
        return Response(content=out.getvalue(), media_type="image/png")

    if static_dir:
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")

    return app
