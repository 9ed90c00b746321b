"""Deterministic offline provider for tests and demos.

The completion is a pure function of the payload text and the question
list: identical form plus identical PDF bytes always yields a
byte-identical completion. Sentinel markers embedded in a document's text
script failure modes end to end (they travel through real fixtures).
"""

from __future__ import annotations

import hashlib
import re
import threading
from typing import Optional

from ..coding_form import NOT_REPORTED
from ..response_parser import FieldProposal, ParseStatus, serialize_proposals
from .core import ExtractionRequest, ProviderProfile, TransportReply, Usage

SENTINEL_REFUSE = "MOCK-FAIL-REFUSE"
SENTINEL_AUTH = "MOCK-FAIL-401"
SENTINEL_RATE_LIMIT = "MOCK-FAIL-429"
SENTINEL_SERVER = "MOCK-FAIL-503"
SENTINEL_FLAKY = "MOCK-FLAKY-429"

_PAGE_MARKER = re.compile(r"^--- PAGE (\d+) ---$", re.M)
# Every fifth question answers Not Reported so downstream flows exercise
# the absent-value convention.
_NOT_REPORTED_STRIDE = 5


def mock_answers(payload_text: str, question_count: int) -> list[FieldProposal]:
    digest = hashlib.sha256(payload_text.encode("utf-8")).hexdigest()[:8]
    markers = _PAGE_MARKER.findall(payload_text)
    page_count = max((int(m) for m in markers), default=1)
    proposals = []
    for i in range(1, question_count + 1):
        if i % _NOT_REPORTED_STRIDE == 0:
            proposals.append(
                FieldProposal(
                    variable_id=f"q{i}",
                    answer=NOT_REPORTED,
                    page=None,
                    rationale="no statement found in the document",
                    parse_status=ParseStatus.STRICT,
                )
            )
        else:
            page = (i - 1) % page_count + 1
            proposals.append(
                FieldProposal(
                    variable_id=f"q{i}",
                    answer=f"{digest}-a{i}",
                    page=page,
                    rationale=f"stated on page {page}",
                    parse_status=ParseStatus.STRICT,
                )
            )
    return proposals


class MockTransport:
    """Scripted by document content; stateful only for the flaky sentinel."""

    def __init__(self, flaky_failures: int = 2):
        self._flaky_failures = flaky_failures
        self._flaky_seen: dict[str, int] = {}
        self._lock = threading.Lock()

    def send(
        self,
        profile: ProviderProfile,
        request: ExtractionRequest,
        api_key: Optional[str],
    ) -> TransportReply:
        if request.payload_text is not None:
            payload = request.payload_text
        else:
            payload = hashlib.sha256(request.pdf_bytes or b"").hexdigest()

        if SENTINEL_AUTH in payload:
            return TransportReply(status=401, detail="scripted auth failure")
        if SENTINEL_RATE_LIMIT in payload:
            return TransportReply(status=429, detail="scripted rate limit")
        if SENTINEL_SERVER in payload:
            return TransportReply(status=503, detail="scripted server error")
        if SENTINEL_REFUSE in payload:
            return TransportReply(status=200, text="", detail="scripted refusal")
        if SENTINEL_FLAKY in payload:
            key = hashlib.sha256(payload.encode("utf-8")).hexdigest()
            with self._lock:
                seen = self._flaky_seen.get(key, 0)
                self._flaky_seen[key] = seen + 1
            if seen < self._flaky_failures:
                return TransportReply(status=429, detail="scripted transient limit")

        text = serialize_proposals(mock_answers(payload, len(request.question_prompts)))
        usage = Usage(
            input_tokens=-(-len(payload) // 4),
            output_tokens=-(-len(text) // 4),
        )
        return TransportReply(status=200, text=text, usage=usage)
