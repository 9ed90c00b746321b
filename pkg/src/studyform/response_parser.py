"""Parse raw model output into one proposal per coding-form variable.

Parsing is total: whatever the model returned (well-formed blocks, loose
numbered lines, or garbage), the outcome carries exactly one proposal per
variable, with degradation encoded in parse statuses instead of errors.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from typing import Optional

from . import wire
from .coding_form import CodingForm
from .errors import NotSerializable

MAX_ANSWER_CHARS = 2000
TRUNCATION_MARK = "…"


class ParseStatus(str, Enum):
    STRICT = "strict"
    LENIENT = "lenient"
    MISSING = "missing"
    MALFORMED = "malformed"


@dataclass(frozen=True)
class FieldProposal:
    variable_id: str
    answer: str
    page: Optional[int] = None
    rationale: Optional[str] = None
    parse_status: ParseStatus = ParseStatus.MISSING


@dataclass(frozen=True)
class ParseOutcome:
    proposals: tuple[FieldProposal, ...]
    raw_text: str
    strict_fraction: float


def _parse_page(value: str) -> Optional[int]:
    value = value.strip()
    if re.fullmatch(r"\d+", value):
        page = int(value)
        if page >= 1:
            return page
    return None


def _clip_answer(answer: str) -> tuple[str, bool]:
    if len(answer) > MAX_ANSWER_CHARS:
        return answer[:MAX_ANSWER_CHARS] + TRUNCATION_MARK, True
    return answer, False


def _parse_block(variable_id: str, number: int, raw: str) -> Optional[FieldProposal]:
    match = wire.block_pattern(number).search(raw)
    if not match:
        return None
    body = match.group(1)
    answer_m = wire.ANSWER_LINE.search(body)
    answer = answer_m.group(1) if answer_m else ""
    if not answer:
        # Block present but unreadable: keep its raw fragment for audit.
        return FieldProposal(
            variable_id=variable_id,
            answer="",
            rationale=body.strip() or None,
            parse_status=ParseStatus.MALFORMED,
        )
    page_m = wire.PAGE_LINE.search(body)
    reason_m = wire.REASON_LINE.search(body)
    answer, truncated = _clip_answer(answer)
    return FieldProposal(
        variable_id=variable_id,
        answer=answer,
        page=_parse_page(page_m.group(1)) if page_m else None,
        rationale=(reason_m.group(1) or None) if reason_m else None,
        parse_status=ParseStatus.MALFORMED if truncated else ParseStatus.STRICT,
    )


def _parse_numbered_line(variable_id: str, number: int, raw: str) -> Optional[FieldProposal]:
    match = wire.numbered_line_pattern(number).search(raw)
    if not match:
        return None
    answer = match.group(1).strip()
    if not answer:
        return None
    answer, truncated = _clip_answer(answer)
    page = int(match.group(2)) if match.group(2) else None
    if page is not None and page < 1:
        page = None
    return FieldProposal(
        variable_id=variable_id,
        answer=answer,
        page=page,
        parse_status=ParseStatus.MALFORMED if truncated else ParseStatus.LENIENT,
    )


def parse(raw: str, form: CodingForm) -> ParseOutcome:
    """Two-tier parse of a completion against the form's variables.

    Tier 1 matches the [Qi] block grammar; tier 2 picks up loose numbered
    lines for variables tier 1 missed; everything else is missing.
    """
    proposals: list[FieldProposal] = []
    for variable in form.variables:
        number = variable.column_index + 1
        proposal = _parse_block(variable.id, number, raw)
        if proposal is None:
            proposal = _parse_numbered_line(variable.id, number, raw)
        if proposal is None:
            proposal = FieldProposal(variable_id=variable.id, answer="")
        proposals.append(proposal)
    strict = sum(1 for p in proposals if p.parse_status is ParseStatus.STRICT)
    return ParseOutcome(
        proposals=tuple(proposals),
        raw_text=raw,
        strict_fraction=strict / len(proposals) if proposals else 0.0,
    )


_UNSAFE_FIELD = re.compile(r"\[/?Q\d+\]|[\r\n]")


def _check_serializable_field(label: str, text: str) -> None:
    if _UNSAFE_FIELD.search(text):
        raise NotSerializable(
            f"{label} contains a newline or a block token and cannot round-trip"
        )


def serialize_proposals(proposals: list[FieldProposal] | tuple[FieldProposal, ...]) -> str:
    """Emit the exact block grammar for strict proposals.

    parse(serialize(P), form) reproduces P; proposals that did not parse
    strictly (or whose fields would break the grammar) are NotSerializable.
    """
    blocks = []
    for i, proposal in enumerate(proposals, start=1):
        if proposal.parse_status is not ParseStatus.STRICT:
            raise NotSerializable(
                f"proposal {proposal.variable_id} has status "
                f"{proposal.parse_status.value}; only strict proposals round-trip"
            )
        if not proposal.answer:
            raise NotSerializable(f"proposal {proposal.variable_id} has an empty answer")
        for label, text in (("answer", proposal.answer), ("rationale", proposal.rationale)):
            if text is None:
                continue
            _check_serializable_field(label, text)
            if text != text.strip(" \t") or text.strip(" \t") == "":
                raise NotSerializable(
                    f"{label} has surrounding whitespace the line grammar would drop"
                )
        if proposal.page is not None and proposal.page < 1:
            raise NotSerializable(f"page {proposal.page} is outside the grammar's range")
        lines = [wire.block_open(i), f"ANSWER: {proposal.answer}"]
        if proposal.page is not None:
            lines.append(f"PAGE: {proposal.page}")
        if proposal.rationale is not None:
            lines.append(f"REASON: {proposal.rationale}")
        lines.append(wire.block_close(i))
        blocks.append("\n".join(lines))
    return "\n".join(blocks)
