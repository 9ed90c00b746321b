"""HTTP service consumed by the review UI.

Binds to loopback by default: this is a single-researcher desktop tool.
Module errors map to 4xx responses carrying a stable machine-readable
error_code; 502 marks upstream provider failures; 500 is reserved for
actual bugs.
"""

from __future__ import annotations

import json
import logging
from dataclasses import replace
from typing import Optional

from fastapi import FastAPI, File, Form, Request, Response, UploadFile
from fastapi.responses import JSONResponse

from .. import agreement as agreement_mod
from ..coding_form import VariableKind, load_form, save_form, variable_slug
from ..errors import (
    AlreadyRecorded,
    AuthFailed,
    CapabilityMismatch,
    ContextOverflow,
    DuplicateHeader,
    EmptyColumn,
    EmptyFile,
    EmptySelection,
    EncryptedPdf,
    MissingCredentials,
    ModelRefused,
    NoDocument,
    NoProposal,
    NoSourceAvailable,
    NotAPdf,
    NoTextLayer,
    NothingToRecord,
    RaggedRow,
    RateLimitedExhausted,
    SchemaMismatch,
    SessionNotFound,
    StudyformError,
    TransportFailed,
    UnalignedStudies,
    UnknownProvider,
    UnknownVariable,
    UnrecordedCells,
)
from ..llm_gateway import RequestOptions, RetryPolicy, get_profile, resolve_api_key
from ..llm_gateway.core import AuthMode
from .config import ServiceConfig
from .schemas import (
    AdvanceRequest,
    AdvanceView,
    AnalyzeRequest,
    KeyRequest,
    ParseOutcomeView,
    ProviderView,
    RecordRequest,
    RecordView,
    SessionView,
    SourceView,
    TokenEstimateView,
)
from .store import SessionStore

logger = logging.getLogger(__name__)

_STATUS_BY_ERROR = {
    # input problems
    EmptyFile: 400,
    RaggedRow: 400,
    DuplicateHeader: 400,
    NotAPdf: 400,
    EncryptedPdf: 400,
    NoTextLayer: 400,
    SchemaMismatch: 400,
    UnalignedStudies: 400,
    CapabilityMismatch: 400,
    ContextOverflow: 400,
    UnknownProvider: 400,
    EmptyColumn: 400,
    EmptySelection: 400,
    # missing resources
    SessionNotFound: 404,
    UnknownVariable: 404,
    # state conflicts
    NoDocument: 409,
    AlreadyRecorded: 409,
    NothingToRecord: 409,
    UnrecordedCells: 409,
    NoProposal: 409,
    NoSourceAvailable: 409,
    # credentials the caller must supply
    MissingCredentials: 401,
    # upstream provider failures
    AuthFailed: 502,
    RateLimitedExhausted: 502,
    TransportFailed: 502,
    ModelRefused: 502,
}


def _status_for(exc: StudyformError) -> int:
    for klass, status in _STATUS_BY_ERROR.items():
        if isinstance(exc, klass):
            return status
    return 500


def create_app(config: Optional[ServiceConfig] = None) -> FastAPI:
    config = config or ServiceConfig()
    config.ensure_data_dir()
    store = SessionStore(config.data_dir)

    app = FastAPI(title="studyform review service", version="0.1.0")
    app.state.config = config
    app.state.store = store

    @app.exception_handler(StudyformError)
    async def studyform_error_handler(request: Request, exc: StudyformError):
        return JSONResponse(
            status_code=_status_for(exc),
            content={"error_code": exc.code, "message": exc.message},
        )

    def profile_for(name: str):
        profile = get_profile(name)
        override = config.provider_base_urls.get(name)
        if override:
            profile = replace(profile, base_url=override)
        return profile

    # -- providers --

    @app.get("/providers", response_model=list[ProviderView])
    def providers():
        views = []
        for profile in __import__(
            "studyform.llm_gateway", fromlist=["builtin_profiles"]
        ).builtin_profiles():
            views.append(
                ProviderView(
                    name=profile.name,
                    auth=profile.auth.value,
                    accepts_pdf_bytes=profile.capabilities.accepts_pdf_bytes,
                    accepts_text=profile.capabilities.accepts_text,
                    rate_limit=profile.rate_limit,
                    default_context_window=profile.default_context_window,
                    needs_key=profile.auth is not AuthMode.NONE,
                )
            )
        return views

    # -- session lifecycle --

    @app.post("/sessions", response_model=SessionView, status_code=201)
    async def create_session(form: UploadFile = File(...)):
        content = await form.read()
        session = store.create(content, form.filename or "coding_form.csv")
        return SessionView.from_session(session)

    @app.get("/sessions/{session_id}", response_model=SessionView)
    def get_session(session_id: str):
        return SessionView.from_session(store.get(session_id))

    @app.post("/sessions/{session_id}/document", response_model=TokenEstimateView)
    async def upload_document(
        session_id: str, document: UploadFile = File(...), force: bool = False
    ):
        session = store.get(session_id)
        content = await document.read()
        estimate = session.attach_document(
            content, document.filename or "document.pdf", force=force
        )
        return TokenEstimateView.from_estimate(estimate)

    @app.get("/sessions/{session_id}/document")
    def download_document(session_id: str):
        session = store.get(session_id)
        if session.document_bytes is None:
            raise NoDocument("no document attached to this session")
        return Response(
            content=session.document_bytes,
            media_type="application/pdf",
            headers={
                "Content-Disposition": f'inline; filename="{session.document.source_name}"'
            },
        )

    @app.post("/sessions/{session_id}/analyze", response_model=ParseOutcomeView)
    def analyze(session_id: str, body: AnalyzeRequest):
        session = store.get(session_id)
        profile = profile_for(body.provider)
        api_key = None
        if profile.auth is not AuthMode.NONE:
            api_key = resolve_api_key(profile, store.get_key(session_id, body.provider))
        # Context window applies to local models only; ignore it elsewhere.
        context_window = (
            body.context_window if profile.default_context_window else None
        )
        options = RequestOptions(
            temperature=body.temperature, context_window=context_window
        )
        outcome = session.analyze(
            profile,
            body.model,
            options,
            api_key=api_key,
            retry=RetryPolicy(max_retries=config.max_retries),
        )
        return ParseOutcomeView.from_outcome(outcome)

    @app.post("/sessions/{session_id}/record", response_model=RecordView)
    def record(session_id: str, body: RecordRequest):
        session = store.get(session_id)
        result = session.record(body.variable_id, body.value)
        recorded = sum(1 for c in session.current_study_row().cells if c.recorded)
        return RecordView(
            variable_id=result.variable_id,
            value=result.value,
            origin=result.origin.value,
            warning=result.warning,
            recorded_count=recorded,
        )

    @app.post("/sessions/{session_id}/record_all", response_model=list[RecordView])
    def record_all(session_id: str):
        session = store.get(session_id)
        results = session.record_all()
        recorded = sum(1 for c in session.current_study_row().cells if c.recorded)
        return [
            RecordView(
                variable_id=r.variable_id,
                value=r.value,
                origin=r.origin.value,
                warning=r.warning,
                recorded_count=recorded,
            )
            for r in results
        ]

    @app.post("/sessions/{session_id}/advance", response_model=AdvanceView)
    def advance(session_id: str, body: AdvanceRequest):
        session = store.get(session_id)
        return AdvanceView(row_index=session.advance(force=body.force))

    @app.get("/sessions/{session_id}/source/{variable_id}", response_model=SourceView)
    def get_source(session_id: str, variable_id: str):
        session = store.get(session_id)
        source = session.get_source(variable_id)
        return SourceView(page=source.page, rationale=source.rationale)

    @app.get("/sessions/{session_id}/export")
    def export_form(session_id: str):
        session = store.get(session_id)
        return Response(
            content=save_form(session.form),
            media_type="text/csv; charset=utf-8",
            headers={
                "Content-Disposition": f'attachment; filename="{session.form_path.name}"'
            },
        )

    @app.post("/sessions/{session_id}/key")
    def submit_key(session_id: str, body: KeyRequest):
        store.get(session_id)  # 404 on unknown session
        get_profile(body.provider)  # 400 on unknown provider
        store.set_key(session_id, body.provider, body.api_key)
        return {"ok": True}

    # -- agreement --

    @app.post("/agreement")
    async def agreement_endpoint(
        human: UploadFile = File(...),
        llm: UploadFile = File(...),
        overlay: Optional[UploadFile] = File(default=None),
        kinds: Optional[str] = Form(default=None),
    ):
        human_form = load_form(await human.read())
        llm_form = load_form(await llm.read())
        overlay_set = None
        if overlay is not None:
            overlay_set = agreement_mod.load_overlay(await overlay.read())
        kinds_map = None
        if kinds:
            kinds_map = {
                variable_slug(int(col["index"])): VariableKind(col["kind"])
                for col in json.loads(kinds).get("columns", [])
            }
        matrix = agreement_mod.compare_forms(human_form, llm_form, overlay=overlay_set)
        return {
            tier.value: agreement_mod.aggregate_report(
                matrix, tier, kinds=kinds_map
            ).to_json_dict()
            for tier in agreement_mod.Tier
        }

    # -- optional bundled UI --

    if config.ui_dir and config.ui_dir.is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=config.ui_dir, html=True), name="ui")

    return app
