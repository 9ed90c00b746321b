"""Coding form data model and on-disk format.

A coding form is a UTF-8 comma-delimited file: the first row holds one
extraction prompt per column, each following row holds one study's values.
A first column headed exactly ``study_label`` is reserved for the study
identifier (typically the PDF filename) and is not a variable; when the
column is absent, rows get ordinal labels. An optional sidecar
``<name>.meta.json`` tags columns as explicit/derived and lists allowed
categories.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Optional

from .errors import DuplicateHeader, EmptyFile, RaggedRow

NOT_REPORTED = "Not Reported"
STUDY_LABEL_HEADER = "study_label"


class VariableKind(str, Enum):
    EXPLICIT = "explicit"
    DERIVED = "derived"
    UNSPECIFIED = "unspecified"


class CellOrigin(str, Enum):
    HUMAN_MANUAL = "human_manual"
    LLM_ACCEPTED = "llm_accepted"
    LLM_EDITED = "llm_edited"
    ABSENT = "absent"


def variable_slug(column_index: int) -> str:
    """Stable variable id for a 0-based column index ("q1", "q2", ...)."""
    return f"q{column_index + 1}"


@dataclass(frozen=True)
class VariableSpec:
    id: str
    column_index: int
    prompt: str
    kind: VariableKind = VariableKind.UNSPECIFIED
    category_set: Optional[tuple[str, ...]] = None

    def __post_init__(self):
        if not self.prompt.strip():
            raise ValueError(f"variable {self.column_index}: prompt is blank")
        if self.category_set is not None:
            if not self.category_set:
                raise ValueError(f"variable {self.id}: empty category_set")
            if len(set(self.category_set)) != len(self.category_set):
                raise ValueError(f"variable {self.id}: duplicate categories")


@dataclass
class CellValue:
    value: str = ""
    recorded: bool = False
    origin: CellOrigin = CellOrigin.ABSENT

    def __post_init__(self):
        if self.recorded and self.origin is CellOrigin.ABSENT:
            raise ValueError("recorded cell must carry a non-absent origin")


@dataclass
class StudyRow:
    study_label: str
    cells: list[CellValue]

    @property
    def completed(self) -> bool:
        return bool(self.cells) and all(c.recorded for c in self.cells)


@dataclass
class CodingForm:
    variables: list[VariableSpec]
    rows: list[StudyRow] = field(default_factory=list)
    source_path: Optional[Path] = None

    def __post_init__(self):
        indices = [v.column_index for v in self.variables]
        if indices != list(range(len(self.variables))):
            raise ValueError("variable column indices must be contiguous from 0")
        for row in self.rows:
            if len(row.cells) != len(self.variables):
                raise ValueError(
                    f"row {row.study_label!r} has {len(row.cells)} cells, "
                    f"expected {len(self.variables)}"
                )

    @property
    def variable_count(self) -> int:
        return len(self.variables)

    def variable_by_id(self, variable_id: str) -> Optional[VariableSpec]:
        for v in self.variables:
            if v.id == variable_id:
                return v
        return None

    def new_row(self, study_label: str = "") -> StudyRow:
        return StudyRow(
            study_label=study_label,
            cells=[CellValue() for _ in self.variables],
        )


def _cell_from_text(value: str) -> CellValue:
    # The CSV stores values only; a nonempty cell loaded from disk counts
    # as recorded human data, an empty one as unrecorded.
    if value == "":
        return CellValue()
    return CellValue(value=value, recorded=True, origin=CellOrigin.HUMAN_MANUAL)


def load_form(content: bytes, metadata: Optional[dict] = None) -> CodingForm:
    """Parse coding-form file content.

    Row 1 becomes the variable prompts; each later row one study. A first
    header cell equal to ``study_label`` marks a reserved label column;
    otherwise rows get ordinal labels ("study-1", ...).

    Raises EmptyFile, RaggedRow or DuplicateHeader.
    """
    text = content.decode("utf-8-sig")
    rows = [r for r in csv.reader(io.StringIO(text))]
    # A trailing newline yields a phantom empty record; drop fully-empty rows
    # at the tail only, so blank interior rows still surface as ragged.
    while rows and rows[-1] == []:
        rows.pop()
    if not rows:
        raise EmptyFile("coding form has no rows")

    header = [h.strip() for h in rows[0]]
    if not header or all(h == "" for h in header):
        raise EmptyFile("coding form header row is empty")

    has_label_column = header[0] == STUDY_LABEL_HEADER
    prompts = header[1:] if has_label_column else header
    if not prompts:
        raise EmptyFile("coding form has a label column but no prompts")
    for i, prompt in enumerate(prompts):
        if prompt == "":
            raise RaggedRow(f"header prompt cell {i + 1} is blank")
    seen: dict[str, int] = {}
    for i, prompt in enumerate(prompts):
        if prompt in seen:
            raise DuplicateHeader(
                f"prompt in column {i + 1} duplicates column {seen[prompt] + 1}"
            )
        seen[prompt] = i

    meta_by_index: dict[int, dict] = {}
    if metadata:
        for col in metadata.get("columns", []):
            meta_by_index[int(col["index"])] = col

    variables = []
    for i, prompt in enumerate(prompts):
        col_meta = meta_by_index.get(i, {})
        kind = VariableKind(col_meta.get("kind", "unspecified"))
        categories = col_meta.get("categories")
        variables.append(
            VariableSpec(
                id=variable_slug(i),
                column_index=i,
                prompt=prompt,
                kind=kind,
                category_set=tuple(categories) if categories else None,
            )
        )

    study_rows = []
    for row_num, raw in enumerate(rows[1:], start=2):
        if len(raw) != len(header):
            raise RaggedRow(
                f"row {row_num} has {len(raw)} cells, header has {len(header)}"
            )
        if has_label_column:
            label, values = raw[0], raw[1:]
        else:
            label, values = f"study-{row_num - 1}", raw
        study_rows.append(
            StudyRow(
                study_label=label,
                cells=[_cell_from_text(v) for v in values],
            )
        )

    return CodingForm(variables=variables, rows=study_rows)


def save_form(form: CodingForm) -> bytes:
    """Serialize a form to RFC-4180 style CSV bytes (label column included)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow([STUDY_LABEL_HEADER] + [v.prompt for v in form.variables])
    for row in form.rows:
        writer.writerow([row.study_label] + [c.value for c in row.cells])
    return buf.getvalue().encode("utf-8")


def next_open_row(form: CodingForm) -> Optional[int]:
    """Smallest row index still missing recorded cells, or None."""
    for i, row in enumerate(form.rows):
        if not row.completed:
            return i
    return None


def metadata_path_for(form_path: Path) -> Path:
    return form_path.with_name(form_path.stem + ".meta.json")


def load_form_file(path: Path | str) -> CodingForm:
    """Load a form from disk, attaching the sidecar metadata if present."""
    path = Path(path)
    metadata = None
    meta_path = metadata_path_for(path)
    if meta_path.exists():
        metadata = json.loads(meta_path.read_text(encoding="utf-8"))
    form = load_form(path.read_bytes(), metadata=metadata)
    form.source_path = path
    return form


def save_metadata(form: CodingForm, path: Path) -> None:
    """Write the sidecar kinds/categories document next to the form."""
    columns = []
    for v in form.variables:
        entry: dict = {"index": v.column_index, "kind": v.kind.value}
        if v.category_set:
            entry["categories"] = list(v.category_set)
        columns.append(entry)
    metadata_path_for(path).write_text(
        json.dumps({"columns": columns}, indent=2), encoding="utf-8"
    )


def with_kinds(form: CodingForm, kinds: dict[str, VariableKind]) -> CodingForm:
    """Copy of the form with kinds reassigned by variable id."""
    variables = [
        replace(v, kind=kinds.get(v.id, v.kind)) for v in form.variables
    ]
    return CodingForm(variables=variables, rows=form.rows, source_path=form.source_path)
