"""Human-in-the-loop review state machine.

One session binds one coding form on disk, one current study row, and one
attached document. Every recorded value rewrites the form file through an
atomic temp-write-then-rename so a crash can never corrupt it, and every
state transition appends one audit event. A session directory survives
process restarts: the form file holds the recorded data, the session file
holds position, proposals, and audit trail.
"""

from __future__ import annotations

import json
import logging
import secrets
import threading
import time
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Callable, Optional

from .coding_form import (
    CellOrigin,
    CodingForm,
    load_form,
    metadata_path_for,
    next_open_row,
    save_form,
)
from .errors import (
    AlreadyRecorded,
    NoDocument,
    NoProposal,
    NoSourceAvailable,
    NothingToRecord,
    StudyformError,
    UnknownVariable,
    UnrecordedCells,
)
from .llm_gateway import (
    ProviderProfile,
    RequestOptions,
    RetryPolicy,
    Transport,
    build_request,
    execute,
)
from .pdf_ingest import PdfDocument, TokenEstimate, estimate_tokens, extract_text
from .persistence import atomic_write_bytes, atomic_write_text
from .response_parser import FieldProposal, ParseOutcome, ParseStatus, parse
from .wire import master_prompt

logger = logging.getLogger(__name__)

_USABLE = (ParseStatus.STRICT, ParseStatus.LENIENT)


class CellState(str, Enum):
    EMPTY = "empty"
    PROPOSED = "proposed"
    RECORDED = "recorded"


class AuditKind(str, Enum):
    FORM_LOADED = "form_loaded"
    DOC_ATTACHED = "doc_attached"
    ANALYZED = "analyzed"
    RECORDED = "recorded"
    EDITED_RECORDED = "edited_recorded"
    ADVANCED = "advanced"


@dataclass(frozen=True)
class AuditEvent:
    timestamp: float
    kind: AuditKind
    detail: str


@dataclass(frozen=True)
class RecordResult:
    variable_id: str
    value: str
    origin: CellOrigin
    warning: Optional[str] = None


@dataclass(frozen=True)
class SourceInfo:
    page: Optional[int]
    rationale: Optional[str]


def _proposal_to_dict(p: FieldProposal) -> dict:
    return {
        "variable_id": p.variable_id,
        "answer": p.answer,
        "page": p.page,
        "rationale": p.rationale,
        "parse_status": p.parse_status.value,
    }


def _proposal_from_dict(d: dict) -> FieldProposal:
    return FieldProposal(
        variable_id=d["variable_id"],
        answer=d["answer"],
        page=d.get("page"),
        rationale=d.get("rationale"),
        parse_status=ParseStatus(d["parse_status"]),
    )


class ReviewSession:
    """Single-writer session over one coding form file."""

    def __init__(self, form: CodingForm, form_path: Path, session_id: Optional[str] = None):
        self.session_id = session_id or secrets.token_hex(8)
        self.form = form
        self.form_path = Path(form_path)
        self.current_row = 0
        self.document: Optional[PdfDocument] = None
        self.document_bytes: Optional[bytes] = None
        self.proposals: Optional[ParseOutcome] = None
        self.audit_log: list[AuditEvent] = []
        self.crash_hook: Optional[Callable[[], None]] = None
        self._lock = threading.RLock()

    # -- paths --

    @property
    def session_path(self) -> Path:
        return self.form_path.with_name(self.form_path.stem + ".session.json")

    @property
    def document_path(self) -> Path:
        return self.form_path.with_name(self.form_path.stem + ".document.pdf")

    # -- derived state --

    def current_study_row(self):
        return self.form.rows[self.current_row]

    def cell_states(self) -> dict[str, CellState]:
        """Recorded mirrors the form row exactly; proposed overlays the rest."""
        proposal_by_id = {}
        if self.proposals is not None:
            proposal_by_id = {
                p.variable_id: p
                for p in self.proposals.proposals
                if p.parse_status in _USABLE
            }
        states = {}
        row = self.current_study_row()
        for variable in self.form.variables:
            cell = row.cells[variable.column_index]
            if cell.recorded:
                states[variable.id] = CellState.RECORDED
            elif variable.id in proposal_by_id:
                states[variable.id] = CellState.PROPOSED
            else:
                states[variable.id] = CellState.EMPTY
        return states

    def proposal_for(self, variable_id: str) -> Optional[FieldProposal]:
        if self.proposals is None:
            return None
        for p in self.proposals.proposals:
            if p.variable_id == variable_id:
                return p
        return None

    # -- audit --

    def _audit(self, kind: AuditKind, detail: str) -> None:
        now = time.time()
        if self.audit_log and now <= self.audit_log[-1].timestamp:
            now = self.audit_log[-1].timestamp + 1e-6
        self.audit_log.append(AuditEvent(timestamp=now, kind=kind, detail=detail))

    # -- persistence --

    def _persist_form(self) -> None:
        atomic_write_bytes(self.form_path, save_form(self.form), self.crash_hook)

    def _persist_session(self) -> None:
        state = {
            "session_id": self.session_id,
            "current_row": self.current_row,
            "document": (
                {
                    "source_name": self.document.source_name,
                    "content_hash": self.document.content_hash,
                    "page_count": self.document.page_count,
                }
                if self.document
                else None
            ),
            "proposals": (
                {
                    "raw_text": self.proposals.raw_text,
                    "strict_fraction": self.proposals.strict_fraction,
                    "proposals": [_proposal_to_dict(p) for p in self.proposals.proposals],
                }
                if self.proposals
                else None
            ),
            "audit": [
                {"timestamp": e.timestamp, "kind": e.kind.value, "detail": e.detail}
                for e in self.audit_log
            ],
            # The CSV interchange format carries values only; origins live here.
            "cell_origins": [
                [c.origin.value for c in row.cells] for row in self.form.rows
            ],
        }
        atomic_write_text(self.session_path, json.dumps(state, indent=2))

    def persist(self) -> None:
        with self._lock:
            self._persist_form()
            self._persist_session()

    # -- row lifecycle --

    def _ensure_open_row(self) -> None:
        index = next_open_row(self.form)
        if index is None:
            self.form.rows.append(self.form.new_row())
            index = len(self.form.rows) - 1
        self.current_row = index

    def _advance_row(self) -> int:
        for i in range(self.current_row + 1, len(self.form.rows)):
            if not self.form.rows[i].completed:
                self.current_row = i
                return i
        self.form.rows.append(self.form.new_row())
        self.current_row = len(self.form.rows) - 1
        return self.current_row

    # -- operations --

    def attach_document(
        self, pdf_bytes: bytes, filename: str, force: bool = False
    ) -> TokenEstimate:
        """Ingest a PDF into the current row (advancing first if needed).

        A second attachment requires the current row to be fully recorded,
        or an explicit force, in which case unrecorded cells persist empty.
        """
        with self._lock:
            doc = extract_text(pdf_bytes, source_name=filename)
            if self.document is not None:
                row = self.current_study_row()
                if not row.completed and not force:
                    missing = sum(1 for c in row.cells if not c.recorded)
                    raise UnrecordedCells(
                        f"current row still has {missing} unrecorded cells; "
                        "record them or pass force to leave them empty"
                    )
                self._advance_row()
                self._audit(AuditKind.ADVANCED, f"moved to row {self.current_row}")
            duplicates = [
                i for i, r in enumerate(self.form.rows)
                if r.study_label == filename and i != self.current_row
            ]
            if duplicates:
                logger.warning(
                    "study label %r duplicates row(s) %s", filename, duplicates
                )
            self.document = doc
            self.document_bytes = pdf_bytes
            self.proposals = None
            self.current_study_row().study_label = filename
            self._audit(
                AuditKind.DOC_ATTACHED,
                f"{filename} ({doc.page_count} pages, {doc.total_chars} chars)",
            )
            estimate = estimate_tokens(doc, self.form, master_prompt())
            atomic_write_bytes(self.document_path, pdf_bytes)
            self.persist()
            return estimate

    def analyze(
        self,
        profile: ProviderProfile,
        model: str,
        options: Optional[RequestOptions] = None,
        *,
        api_key: Optional[str] = None,
        transport: Optional[Transport] = None,
        retry: Optional[RetryPolicy] = None,
    ) -> ParseOutcome:
        """One consolidated request for every prompt, parsed into proposals.

        Gateway failures leave the session unchanged apart from the audit
        trail; re-running replaces proposals wholesale but never touches
        recorded cells.
        """
        with self._lock:
            if self.document is None or self.document_bytes is None:
                raise NoDocument("attach a PDF before analyzing")
            request = build_request(
                profile,
                self.form,
                self.document,
                self.document_bytes,
                options=options,
                model=model,
            )
            try:
                completion = execute(
                    profile,
                    request,
                    api_key=api_key,
                    transport=transport,
                    retry=retry or RetryPolicy(),
                )
            except StudyformError as exc:
                self._audit(AuditKind.ANALYZED, f"failed: {exc.code}: {exc.message}")
                self._persist_session()
                raise
            outcome = parse(completion.text, self.form)
            self.proposals = outcome
            usable = sum(1 for p in outcome.proposals if p.parse_status in _USABLE)
            self._audit(
                AuditKind.ANALYZED,
                f"{model}: {usable}/{len(outcome.proposals)} proposals usable, "
                f"{completion.attempt_count} attempt(s)",
            )
            self._persist_session()
            return outcome

    def record(self, variable_id: str, value: Optional[str] = None) -> RecordResult:
        """Commit one verified value into the form, atomically on disk.

        With no explicit value the proposal's answer is accepted; an
        explicit value that differs from the proposal records as an edit.
        """
        with self._lock:
            variable = self.form.variable_by_id(variable_id)
            if variable is None:
                raise UnknownVariable(f"no variable {variable_id!r} in this form")
            cell = self.current_study_row().cells[variable.column_index]
            if cell.recorded:
                raise AlreadyRecorded(f"{variable_id} is already recorded for this row")

            proposal = self.proposal_for(variable_id)
            usable = proposal is not None and proposal.parse_status in _USABLE
            if value is None or value == "":
                if not usable:
                    raise NothingToRecord(
                        f"{variable_id} has no usable proposal and no value was given"
                    )
                final = proposal.answer
                origin = CellOrigin.LLM_ACCEPTED
            elif usable:
                final = value
                origin = (
                    CellOrigin.LLM_EDITED
                    if value != proposal.answer
                    else CellOrigin.LLM_ACCEPTED
                )
            else:
                final = value
                origin = CellOrigin.HUMAN_MANUAL

            warning = None
            if variable.category_set and final not in variable.category_set:
                warning = (
                    f"value {final!r} is not one of the declared categories "
                    f"for {variable_id}"
                )

            cell.value = final
            cell.recorded = True
            cell.origin = origin
            self._persist_form()
            kind = (
                AuditKind.EDITED_RECORDED
                if origin is CellOrigin.LLM_EDITED
                else AuditKind.RECORDED
            )
            self._audit(kind, f"{variable_id} = {final[:80]!r} ({origin.value})")
            self._persist_session()
            return RecordResult(
                variable_id=variable_id, value=final, origin=origin, warning=warning
            )

    def record_all(self) -> list[RecordResult]:
        """Accept every remaining usable proposal in variable order."""
        with self._lock:
            results = []
            states = self.cell_states()
            for variable in self.form.variables:
                if states[variable.id] is CellState.PROPOSED:
                    results.append(self.record(variable.id))
            return results

    def advance(self, force: bool = False) -> int:
        """Move to the next open study row, appending a fresh one if needed."""
        with self._lock:
            row = self.current_study_row()
            if not row.completed and not force:
                missing = sum(1 for c in row.cells if not c.recorded)
                raise UnrecordedCells(
                    f"current row still has {missing} unrecorded cells"
                )
            index = self._advance_row()
            self.document = None
            self.document_bytes = None
            self.proposals = None
            self._audit(AuditKind.ADVANCED, f"moved to row {index}")
            self.persist()
            return index

    def get_source(self, variable_id: str) -> SourceInfo:
        """Page anchor (when plausible) and rationale for a proposal."""
        with self._lock:
            if self.form.variable_by_id(variable_id) is None:
                raise UnknownVariable(f"no variable {variable_id!r} in this form")
            proposal = self.proposal_for(variable_id)
            if proposal is None or proposal.parse_status is ParseStatus.MISSING:
                raise NoProposal(f"no proposal for {variable_id}")
            page = proposal.page
            if page is not None:
                # Without the document the anchor cannot be range-checked,
                # so it is withheld rather than trusted.
                if self.document is None or not (
                    1 <= page <= self.document.page_count
                ):
                    page = None
            if page is None and proposal.rationale is None:
                raise NoSourceAvailable(
                    f"proposal for {variable_id} carries neither page nor rationale"
                )
            return SourceInfo(page=page, rationale=proposal.rationale)


def start_session(form_bytes: bytes, form_path: Path | str) -> ReviewSession:
    """Create a session from uploaded form content, persisted at form_path."""
    form_path = Path(form_path)
    metadata = None
    meta_path = metadata_path_for(form_path)
    if meta_path.exists():
        metadata = json.loads(meta_path.read_text(encoding="utf-8"))
    form = load_form(form_bytes, metadata=metadata)
    form.source_path = form_path
    session = ReviewSession(form, form_path)
    session._ensure_open_row()
    session._audit(
        AuditKind.FORM_LOADED,
        f"{form_path.name}: {len(form.variables)} variables, "
        f"{len(form.rows)} rows, starting at row {session.current_row}",
    )
    session.persist()
    return session


def load_session(form_path: Path | str) -> ReviewSession:
    """Rebuild a session from its on-disk files after a restart.

    Recorded state comes from the form file itself; position, proposals
    and audit come from the session file. The attached document is
    restored from its saved bytes when still present.
    """
    form_path = Path(form_path)
    metadata = None
    meta_path = metadata_path_for(form_path)
    if meta_path.exists():
        metadata = json.loads(meta_path.read_text(encoding="utf-8"))
    form = load_form(form_path.read_bytes(), metadata=metadata)
    form.source_path = form_path

    session_path = form_path.with_name(form_path.stem + ".session.json")
    state = json.loads(session_path.read_text(encoding="utf-8"))
    session = ReviewSession(form, form_path, session_id=state["session_id"])
    session.audit_log = [
        AuditEvent(
            timestamp=e["timestamp"], kind=AuditKind(e["kind"]), detail=e["detail"]
        )
        for e in state.get("audit", [])
    ]
    row = int(state.get("current_row", 0))
    session.current_row = min(row, len(form.rows) - 1) if form.rows else 0
    if not form.rows:
        session._ensure_open_row()

    # A crash between the form write and the session write leaves the last
    # cell's origin stale; keep the loader's human_manual default then.
    for row_origins, study_row in zip(state.get("cell_origins", []), form.rows):
        for origin_value, cell in zip(row_origins, study_row.cells):
            if cell.recorded and origin_value != CellOrigin.ABSENT.value:
                cell.origin = CellOrigin(origin_value)

    doc_meta = state.get("document")
    if doc_meta and session.document_path.exists():
        pdf_bytes = session.document_path.read_bytes()
        doc = extract_text(pdf_bytes, source_name=doc_meta["source_name"])
        if doc.content_hash == doc_meta.get("content_hash"):
            session.document = doc
            session.document_bytes = pdf_bytes

    proposals_state = state.get("proposals")
    if proposals_state:
        session.proposals = ParseOutcome(
            proposals=tuple(
                _proposal_from_dict(d) for d in proposals_state["proposals"]
            ),
            raw_text=proposals_state["raw_text"],
            strict_fraction=proposals_state["strict_fraction"],
        )
    return session
