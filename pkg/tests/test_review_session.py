from __future__ import annotations

import hashlib
import json
import random

import pytest

from studyform.coding_form import CellOrigin, load_form
from studyform.errors import (
    AlreadyRecorded,
    EmptyFile,
    ModelRefused,
    NoDocument,
    NoProposal,
    NothingToRecord,
    RaggedRow,
    UnrecordedCells,
)
from studyform.llm_gateway import MockTransport, get_profile
from studyform.persistence import SimulatedCrash
from studyform.response_parser import ParseStatus
from studyform.review_session import (
    AuditKind,
    CellState,
    ReviewSession,
    load_session,
    start_session,
)

from .conftest import build_pdf, form_bytes

MOCK = get_profile("mock")


def default_form_bytes() -> bytes:
    from importlib import resources

    return resources.files("studyform.data").joinpath("default_coding_form.csv").read_bytes()


def six_var_form() -> bytes:
    return form_bytes([f"Question {i}" for i in range(1, 7)])


@pytest.fixture
def session(tmp_path):
    return start_session(six_var_form(), tmp_path / "form.csv")


@pytest.fixture
def analyzed(session):
    pdf = build_pdf([["alpha text"], ["beta text"], ["gamma text"]])
    session.attach_document(pdf, "study-a.pdf")
    session.analyze(MOCK, "mock-model", transport=MockTransport())
    return session


class TestStartSession:
    def test_default_form_starts_fresh(self, tmp_path):
        session = start_session(default_form_bytes(), tmp_path / "f.csv")
        assert session.current_row == 0
        states = session.cell_states()
        assert len(states) == 24
        assert all(s is CellState.EMPTY for s in states.values())
        assert (tmp_path / "f.session.json").exists()

    def test_completed_rows_skip_to_fresh(self, tmp_path):
        content = form_bytes(
            ["A", "B"], [["1", "2"], ["3", "4"]], labels=["x.pdf", "y.pdf"]
        )
        session = start_session(content, tmp_path / "f.csv")
        assert session.current_row == 2
        assert len(session.form.rows) == 3

    def test_malformed_form_propagates(self, tmp_path):
        with pytest.raises(RaggedRow):
            start_session(b"A,B\n1\n", tmp_path / "f.csv")
        with pytest.raises(EmptyFile):
            start_session(b"", tmp_path / "f.csv")

    def test_form_loaded_audited(self, session):
        assert session.audit_log[0].kind is AuditKind.FORM_LOADED


class TestAttachDocument:
    def test_estimate_and_label(self, session):
        pdf = build_pdf([["Hello world"]])
        estimate = session.attach_document(pdf, "paper.pdf")
        assert estimate.document_tokens == -(-11 // 4)
        assert session.current_study_row().study_label == "paper.pdf"
        assert session.document.page_count == 1

    def test_attach_after_complete_row_advances(self, analyzed):
        analyzed.record_all()
        for variable_id, state in analyzed.cell_states().items():
            if state is not CellState.RECORDED:
                analyzed.record(variable_id, "filled by hand")
        assert analyzed.current_study_row().completed
        row_before = analyzed.current_row
        analyzed.attach_document(build_pdf([["next study"]]), "study-b.pdf")
        assert analyzed.current_row == row_before + 1
        assert analyzed.current_study_row().study_label == "study-b.pdf"
        assert analyzed.proposals is None

    def test_attach_with_unrecorded_cells_blocked(self, analyzed):
        analyzed.record("q1")
        with pytest.raises(UnrecordedCells):
            analyzed.attach_document(build_pdf([["next"]]), "study-b.pdf")

    def test_force_attach_leaves_empties(self, analyzed):
        analyzed.record("q1")
        analyzed.attach_document(build_pdf([["next"]]), "study-b.pdf", force=True)
        first_row = analyzed.form.rows[0]
        assert first_row.cells[0].recorded
        assert not first_row.cells[1].recorded
        assert analyzed.current_row == 1


class TestAnalyze:
    def test_proposals_populate(self, analyzed):
        assert analyzed.proposals is not None
        assert len(analyzed.proposals.proposals) == 6
        states = analyzed.cell_states()
        proposed = [s for s in states.values() if s is CellState.PROPOSED]
        assert len(proposed) == 6

    def test_requires_document(self, session):
        with pytest.raises(NoDocument):
            session.analyze(MOCK, "m", transport=MockTransport())

    def test_refusal_leaves_session_unchanged_except_audit(self, tmp_path):
        session = start_session(six_var_form(), tmp_path / "form.csv")
        pdf = build_pdf([["doc body MOCK-FAIL-REFUSE"]])
        session.attach_document(pdf, "bad.pdf")
        audit_before = len(session.audit_log)
        with pytest.raises(ModelRefused):
            session.analyze(MOCK, "m", transport=MockTransport())
        assert session.proposals is None
        assert len(session.audit_log) == audit_before + 1
        assert session.audit_log[-1].kind is AuditKind.ANALYZED
        assert "model_refused" in session.audit_log[-1].detail

    def test_reanalyze_replaces_proposals_keeps_recorded(self, analyzed):
        analyzed.record("q1")
        value_before = analyzed.current_study_row().cells[0].value
        analyzed.analyze(MOCK, "mock-model", transport=MockTransport())
        assert analyzed.current_study_row().cells[0].value == value_before
        assert analyzed.cell_states()["q1"] is CellState.RECORDED


class TestRecord:
    def test_accept_proposal(self, analyzed):
        proposal = analyzed.proposal_for("q1")
        result = analyzed.record("q1")
        cell = analyzed.current_study_row().cells[0]
        assert cell.value == proposal.answer
        assert cell.origin is CellOrigin.LLM_ACCEPTED
        assert result.warning is None

    def test_edit_before_record(self, analyzed):
        result = analyzed.record("q2", "Austria")
        cell = analyzed.current_study_row().cells[1]
        assert cell.value == "Austria"
        assert cell.origin is CellOrigin.LLM_EDITED
        assert analyzed.audit_log[-1].kind is AuditKind.EDITED_RECORDED

    def test_same_value_counts_as_accepted(self, analyzed):
        proposal = analyzed.proposal_for("q3")
        analyzed.record("q3", proposal.answer)
        assert analyzed.current_study_row().cells[2].origin is CellOrigin.LLM_ACCEPTED

    def test_manual_value_without_proposal(self, session):
        session.attach_document(build_pdf([["text"]]), "s.pdf")
        result = session.record("q4", "hand-coded")
        assert session.current_study_row().cells[3].origin is CellOrigin.HUMAN_MANUAL
        assert result.value == "hand-coded"

    def test_nothing_to_record(self, session):
        session.attach_document(build_pdf([["text"]]), "s.pdf")
        with pytest.raises(NothingToRecord):
            session.record("q1")

    def test_already_recorded(self, analyzed):
        analyzed.record("q1")
        with pytest.raises(AlreadyRecorded):
            analyzed.record("q1")

    def test_category_warning_advisory(self, tmp_path):
        (tmp_path / "form.meta.json").write_text(
            json.dumps(
                {"columns": [{"index": 0, "kind": "derived", "categories": ["Male", "Female"]}]}
            )
        )
        session = start_session(form_bytes(["Gender?"]), tmp_path / "form.csv")
        session.attach_document(build_pdf([["text"]]), "s.pdf")
        result = session.record("q1", "Mixed")
        assert result.warning is not None
        assert session.current_study_row().cells[0].value == "Mixed"

    def test_record_persists_to_disk(self, analyzed):
        analyzed.record("q1")
        reloaded = load_form(analyzed.form_path.read_bytes())
        assert reloaded.rows[0].cells[0].value == analyzed.current_study_row().cells[0].value
        assert reloaded.rows[0].cells[0].recorded

    def test_recorded_count_monotone(self, analyzed):
        def count():
            return sum(
                1 for s in analyzed.cell_states().values() if s is CellState.RECORDED
            )

        last = count()
        for variable_id in ("q1", "q2", "q3"):
            analyzed.record(variable_id)
            now = count()
            assert now >= last
            last = now


class TestGetSource:
    def test_in_range_page(self, analyzed):
        source = analyzed.get_source("q3")
        assert source.page == 3
        assert source.rationale

    def test_out_of_range_page_omitted(self, analyzed):
        # Fabricate a proposal pointing past the 3-page document.
        from studyform.response_parser import FieldProposal, ParseOutcome

        proposals = list(analyzed.proposals.proposals)
        proposals[0] = FieldProposal(
            variable_id="q1",
            answer="x",
            page=40,
            rationale="claimed page 40",
            parse_status=ParseStatus.STRICT,
        )
        analyzed.proposals = ParseOutcome(
            proposals=tuple(proposals),
            raw_text=analyzed.proposals.raw_text,
            strict_fraction=analyzed.proposals.strict_fraction,
        )
        source = analyzed.get_source("q1")
        assert source.page is None
        assert source.rationale == "claimed page 40"

    def test_no_proposal(self, session):
        session.attach_document(build_pdf([["text"]]), "s.pdf")
        with pytest.raises(NoProposal):
            session.get_source("q1")


class TestAdvance:
    def test_advance_clears_and_appends(self, analyzed):
        analyzed.record_all()
        index = analyzed.advance()
        assert index == 1
        assert analyzed.proposals is None
        assert analyzed.document is None
        assert all(s is CellState.EMPTY for s in analyzed.cell_states().values())

    def test_advance_blocked_then_forced(self, analyzed):
        analyzed.record("q1")
        with pytest.raises(UnrecordedCells):
            analyzed.advance()
        index = analyzed.advance(force=True)
        assert index == 1
        assert analyzed.form.rows[0].cells[0].recorded

    def test_previously_recorded_rows_untouched(self, analyzed):
        analyzed.record_all()
        snapshot = [c.value for c in analyzed.form.rows[0].cells]
        analyzed.advance()
        analyzed.attach_document(build_pdf([["second doc"]]), "b.pdf")
        analyzed.analyze(MOCK, "m", transport=MockTransport())
        analyzed.record_all()
        assert [c.value for c in analyzed.form.rows[0].cells] == snapshot


class TestPersistenceAndResume:
    def test_resume_after_restart(self, analyzed):
        analyzed.record("q1")
        analyzed.record("q2")
        resumed = load_session(analyzed.form_path)
        assert resumed.session_id == analyzed.session_id
        assert resumed.current_row == analyzed.current_row
        states = resumed.cell_states()
        assert states["q1"] is CellState.RECORDED
        assert states["q2"] is CellState.RECORDED
        assert states["q3"] is CellState.PROPOSED
        assert resumed.document is not None
        assert len(resumed.audit_log) == len(analyzed.audit_log)

    def test_crash_between_temp_write_and_rename(self, analyzed):
        digest_before = hashlib.sha256(analyzed.form_path.read_bytes()).hexdigest()
        analyzed.crash_hook = lambda: (_ for _ in ()).throw(SimulatedCrash())
        with pytest.raises(SimulatedCrash):
            analyzed.record("q1")
        assert (
            hashlib.sha256(analyzed.form_path.read_bytes()).hexdigest()
            == digest_before
        )
        leftovers = [p for p in analyzed.form_path.parent.iterdir() if p.suffix == ".tmp"]
        assert leftovers == []

    def test_fault_injection_trials(self, tmp_path):
        """Kill at a random record; the file is always the pre- or
        post-record state and a restarted session resumes correctly."""
        rng = random.Random(20240811)
        pdf = build_pdf([["document body"]])
        for trial in range(12):
            base = tmp_path / f"t{trial}"
            base.mkdir()
            session = start_session(six_var_form(), base / "form.csv")
            session.attach_document(pdf, "study.pdf")
            session.analyze(MOCK, "m", transport=MockTransport())
            kill_at = rng.randrange(6)
            recorded = 0
            for i, variable_id in enumerate(f"q{k}" for k in range(1, 7)):
                if i == kill_at:
                    session.crash_hook = lambda: (_ for _ in ()).throw(SimulatedCrash())
                    snapshot = session.form_path.read_bytes()
                    with pytest.raises(SimulatedCrash):
                        session.record(variable_id)
                    assert session.form_path.read_bytes() == snapshot
                    break
                session.record(variable_id)
                recorded += 1
            resumed = load_session(base / "form.csv")
            states = resumed.cell_states()
            assert (
                sum(1 for s in states.values() if s is CellState.RECORDED) == recorded
            )
            # The next open cell is exactly the one the crash interrupted.
            open_cells = [v for v, s in states.items() if s is not CellState.RECORDED]
            assert open_cells[0] == f"q{kill_at + 1}"


class TestColumnStability:
    def test_recording_never_changes_header_or_column_count(self, analyzed):
        header_before = [v.prompt for v in analyzed.form.variables]
        for variable_id in ("q1", "q2", "q3", "q4"):
            analyzed.record(variable_id)
            on_disk = load_form(analyzed.form_path.read_bytes())
            assert [v.prompt for v in on_disk.variables] == header_before
            assert all(
                len(r.cells) == len(header_before) for r in on_disk.rows
            )


class TestSourceAfterLostDocument:
    def test_page_withheld_when_document_missing(self, analyzed):
        analyzed.record("q1")
        analyzed.document_path.unlink()
        resumed = load_session(analyzed.form_path)
        assert resumed.document is None
        source = resumed.get_source("q3")
        assert source.page is None
        assert source.rationale


class TestAudit:
    def test_every_transition_appends_one_event(self, tmp_path):
        session = start_session(six_var_form(), tmp_path / "form.csv")
        assert [e.kind for e in session.audit_log] == [AuditKind.FORM_LOADED]
        session.attach_document(build_pdf([["text"]]), "s.pdf")
        assert session.audit_log[-1].kind is AuditKind.DOC_ATTACHED
        session.analyze(MOCK, "m", transport=MockTransport())
        assert session.audit_log[-1].kind is AuditKind.ANALYZED
        n_before = len(session.audit_log)
        session.record("q1")
        assert len(session.audit_log) == n_before + 1

    def test_timestamps_strictly_ordered(self, analyzed):
        analyzed.record_all()
        stamps = [e.timestamp for e in analyzed.audit_log]
        assert all(a < b for a, b in zip(stamps, stamps[1:]))
