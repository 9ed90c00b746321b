from __future__ import annotations

import string

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from studyform.coding_form import (
    CellOrigin,
    CellValue,
    CodingForm,
    StudyRow,
    VariableKind,
    VariableSpec,
    load_form,
    next_open_row,
    save_form,
    variable_slug,
)
from studyform.errors import DuplicateHeader, EmptyFile, RaggedRow

from .conftest import form_bytes


def default_form_bytes() -> bytes:
    from importlib import resources

    return resources.files("studyform.data").joinpath("default_coding_form.csv").read_bytes()


def form_signature(form: CodingForm):
    return (
        tuple((v.prompt, v.kind, v.category_set) for v in form.variables),
        tuple((r.study_label, tuple(c.value for c in r.cells)) for r in form.rows),
    )


class TestLoadForm:
    def test_default_form_has_24_variables_no_rows(self):
        form = load_form(default_form_bytes())
        assert len(form.variables) == 24
        assert form.rows == []
        assert [v.id for v in form.variables] == [variable_slug(i) for i in range(24)]
        assert all(v.kind is VariableKind.UNSPECIFIED for v in form.variables)

    def test_minimal_form(self):
        form = load_form(b"Q1\nans\n")
        assert len(form.variables) == 1
        assert len(form.rows) == 1
        assert form.rows[0].cells[0].value == "ans"
        assert form.rows[0].cells[0].recorded

    def test_ragged_row_rejected(self):
        with pytest.raises(RaggedRow):
            load_form(b"A,B,C\nx,y\n")

    def test_empty_file_rejected(self):
        with pytest.raises(EmptyFile):
            load_form(b"")

    def test_duplicate_header_rejected(self):
        with pytest.raises(DuplicateHeader):
            load_form(b"Q1,Q2,Q1\n")

    def test_label_column_recognized(self):
        content = form_bytes(["A", "B"], [["1", "2"]], labels=["paper.pdf"])
        form = load_form(content)
        assert len(form.variables) == 2
        assert form.rows[0].study_label == "paper.pdf"
        assert [c.value for c in form.rows[0].cells] == ["1", "2"]

    def test_ordinal_labels_without_label_column(self):
        form = load_form(b"A,B\n1,2\n3,4\n")
        assert [r.study_label for r in form.rows] == ["study-1", "study-2"]

    def test_sidecar_metadata_attaches_kinds(self):
        metadata = {
            "columns": [
                {"index": 0, "kind": "explicit"},
                {"index": 1, "kind": "derived", "categories": ["Mixed", "Male"]},
            ]
        }
        form = load_form(b"A,B\n", metadata=metadata)
        assert form.variables[0].kind is VariableKind.EXPLICIT
        assert form.variables[1].kind is VariableKind.DERIVED
        assert form.variables[1].category_set == ("Mixed", "Male")


class TestSaveForm:
    def test_default_form_round_trips(self):
        form = load_form(default_form_bytes())
        assert form_signature(load_form(save_form(form))) == form_signature(form)

    def test_comma_and_quote_cells_escape(self):
        form = load_form(b"Q1,Q2\n")
        row = form.new_row("tricky.pdf")
        row.cells[0] = CellValue('say "hi", twice', True, CellOrigin.HUMAN_MANUAL)
        row.cells[1] = CellValue("line\nbreak", True, CellOrigin.HUMAN_MANUAL)
        form.rows.append(row)
        loaded = load_form(save_form(form))
        assert loaded.rows[0].cells[0].value == 'say "hi", twice'
        assert loaded.rows[0].cells[1].value == "line\nbreak"
        assert loaded.rows[0].study_label == "tricky.pdf"

    def test_112_row_form_writes_113_physical_rows(self):
        # Independent oracle: count records with the stdlib csv reader over
        # the raw bytes rather than through the form model.
        import csv
        import io

        form = load_form(b"A,B,C\n")
        for i in range(112):
            row = form.new_row(f"study-{i}.pdf")
            for cell in row.cells:
                cell.value = f"v{i}"
                cell.recorded = True
                cell.origin = CellOrigin.HUMAN_MANUAL
            form.rows.append(row)
        raw = save_form(form).decode("utf-8")
        records = [r for r in csv.reader(io.StringIO(raw))]
        assert len(records) == 113


class TestNextOpenRow:
    def _form_with_states(self, states: list[bool]) -> CodingForm:
        form = load_form(b"Q1\n")
        for done in states:
            row = form.new_row("s")
            if done:
                row.cells[0] = CellValue("v", True, CellOrigin.HUMAN_MANUAL)
            form.rows.append(row)
        return form

    def test_first_incomplete_row_wins(self):
        form = self._form_with_states([True, False, False])
        assert next_open_row(form) == 1

    def test_empty_form_returns_none(self):
        assert next_open_row(load_form(b"Q1\n")) is None

    def test_all_complete_returns_none(self):
        form = self._form_with_states([True, True])
        assert next_open_row(form) is None

    def test_monotone_under_completion(self):
        form = self._form_with_states([True, False, False])
        first = next_open_row(form)
        form.rows[1].cells[0] = CellValue("v", True, CellOrigin.HUMAN_MANUAL)
        assert next_open_row(form) >= first


csv_text = st.text(
    alphabet=string.ascii_letters + string.digits + ' ,"\n\'.-()',
    max_size=40,
)


@settings(max_examples=200)
@given(
    prompts=st.lists(
        st.text(
            alphabet=string.ascii_letters + string.digits + ",.\"'?()-",
            min_size=1,
            max_size=30,
        ),
        min_size=1,
        max_size=8,
        unique=True,
    ),
    rows=st.lists(st.lists(csv_text, min_size=1, max_size=8), max_size=5),
    labels=st.lists(
        st.text(alphabet=string.ascii_letters + string.digits + "._-", min_size=1, max_size=20),
        max_size=5,
    ),
)
def test_round_trip_property(prompts, rows, labels):
    variables = [
        VariableSpec(id=variable_slug(i), column_index=i, prompt=p)
        for i, p in enumerate(prompts)
    ]
    study_rows = []
    for k, row in enumerate(rows):
        cells = []
        for i in range(len(prompts)):
            value = row[i % len(row)]
            cells.append(
                CellValue(value, bool(value), CellOrigin.HUMAN_MANUAL if value else CellOrigin.ABSENT)
            )
        label = labels[k % len(labels)] if labels else f"s{k}"
        study_rows.append(StudyRow(study_label=label, cells=cells))
    form = CodingForm(variables=variables, rows=study_rows)
    assert form_signature(load_form(save_form(form))) == form_signature(form)
