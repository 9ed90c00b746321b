"""Pydantic request/response models for the HTTP API."""

from __future__ import annotations

from typing import Optional

from pydantic import BaseModel, Field

from ..coding_form import CodingForm
from ..pdf_ingest import TokenEstimate
from ..response_parser import FieldProposal, ParseOutcome
from ..review_session import ReviewSession


class ProviderView(BaseModel):
    name: str
    auth: str
    accepts_pdf_bytes: bool
    accepts_text: bool
    rate_limit: int
    default_context_window: Optional[int] = None
    needs_key: bool


class TokenEstimateView(BaseModel):
    estimated_tokens: int
    method: str
    document_tokens: int
    prompt_tokens: int

    @classmethod
    def from_estimate(cls, estimate: TokenEstimate) -> "TokenEstimateView":
        return cls(
            estimated_tokens=estimate.estimated_tokens,
            method=estimate.method,
            document_tokens=estimate.document_tokens,
            prompt_tokens=estimate.prompt_tokens,
        )


class VariableView(BaseModel):
    id: str
    column_index: int
    prompt: str
    kind: str
    category_set: Optional[list[str]] = None


class ProposalView(BaseModel):
    variable_id: str
    answer: str
    page: Optional[int] = None
    rationale: Optional[str] = None
    parse_status: str

    @classmethod
    def from_proposal(cls, p: FieldProposal) -> "ProposalView":
        return cls(
            variable_id=p.variable_id,
            answer=p.answer,
            page=p.page,
            rationale=p.rationale,
            parse_status=p.parse_status.value,
        )


class ParseOutcomeView(BaseModel):
    proposals: list[ProposalView]
    strict_fraction: float

    @classmethod
    def from_outcome(cls, outcome: ParseOutcome) -> "ParseOutcomeView":
        return cls(
            proposals=[ProposalView.from_proposal(p) for p in outcome.proposals],
            strict_fraction=outcome.strict_fraction,
        )


class CellView(BaseModel):
    variable_id: str
    value: str
    recorded: bool
    origin: str
    state: str


class DocumentView(BaseModel):
    source_name: str
    page_count: int
    total_chars: int
    content_hash: str


class AuditEventView(BaseModel):
    timestamp: float
    kind: str
    detail: str


class SessionView(BaseModel):
    session_id: str
    form_name: str
    current_row: int
    row_count: int
    study_label: str
    variables: list[VariableView]
    cells: list[CellView]
    proposals: Optional[ParseOutcomeView] = None
    document: Optional[DocumentView] = None
    recorded_count: int
    audit: list[AuditEventView]

    @classmethod
    def from_session(cls, session: ReviewSession) -> "SessionView":
        form: CodingForm = session.form
        states = session.cell_states()
        row = session.current_study_row()
        cells = []
        for variable in form.variables:
            cell = row.cells[variable.column_index]
            cells.append(
                CellView(
                    variable_id=variable.id,
                    value=cell.value,
                    recorded=cell.recorded,
                    origin=cell.origin.value,
                    state=states[variable.id].value,
                )
            )
        return cls(
            session_id=session.session_id,
            form_name=session.form_path.name,
            current_row=session.current_row,
            row_count=len(form.rows),
            study_label=row.study_label,
            variables=[
                VariableView(
                    id=v.id,
                    column_index=v.column_index,
                    prompt=v.prompt,
                    kind=v.kind.value,
                    category_set=list(v.category_set) if v.category_set else None,
                )
                for v in form.variables
            ],
            cells=cells,
            proposals=(
                ParseOutcomeView.from_outcome(session.proposals)
                if session.proposals
                else None
            ),
            document=(
                DocumentView(
                    source_name=session.document.source_name,
                    page_count=session.document.page_count,
                    total_chars=session.document.total_chars,
                    content_hash=session.document.content_hash,
                )
                if session.document
                else None
            ),
            recorded_count=sum(1 for c in cells if c.recorded),
            audit=[
                AuditEventView(timestamp=e.timestamp, kind=e.kind.value, detail=e.detail)
                for e in session.audit_log
            ],
        )


class AnalyzeRequest(BaseModel):
    provider: str
    model: str
    temperature: float = Field(default=0.0, ge=0.0, le=1.0)
    context_window: Optional[int] = Field(default=None, ge=1)


class RecordRequest(BaseModel):
    variable_id: str
    value: Optional[str] = None


class RecordView(BaseModel):
    variable_id: str
    value: str
    origin: str
    warning: Optional[str] = None
    recorded_count: int


class AdvanceRequest(BaseModel):
    force: bool = False


class AdvanceView(BaseModel):
    row_index: int


class SourceView(BaseModel):
    page: Optional[int] = None
    rationale: Optional[str] = None


class KeyRequest(BaseModel):
    provider: str
    api_key: str


class ErrorBody(BaseModel):
    error_code: str
    message: str
