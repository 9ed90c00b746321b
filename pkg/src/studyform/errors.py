"""Exception hierarchy shared across the package.

Every error carries a stable machine-readable ``code`` so the HTTP layer
and the CLI can map failures without string matching.
"""

from __future__ import annotations


class StudyformError(Exception):
    """Base class for all package errors."""

    code = "internal_error"

    def __init__(self, message: str = ""):
        super().__init__(message or self.__class__.__name__)
        self.message = message or self.__class__.__name__


# --- coding form ---

class EmptyFile(StudyformError):
    code = "empty_file"


class RaggedRow(StudyformError):
    code = "ragged_row"


class DuplicateHeader(StudyformError):
    code = "duplicate_header"


# --- pdf ingest ---

class NotAPdf(StudyformError):
    code = "not_a_pdf"


class EncryptedPdf(StudyformError):
    code = "encrypted_pdf"


class NoTextLayer(StudyformError):
    code = "no_text_layer"


# --- llm gateway ---

class CapabilityMismatch(StudyformError):
    code = "capability_mismatch"


class AuthFailed(StudyformError):
    code = "auth_failed"


class RateLimitedExhausted(StudyformError):
    code = "rate_limited"


class TransportFailed(StudyformError):
    code = "transport_failed"


class ModelRefused(StudyformError):
    code = "model_refused"


class ContextOverflow(StudyformError):
    code = "context_overflow"


class UnknownProvider(StudyformError):
    code = "unknown_provider"


class MissingCredentials(StudyformError):
    code = "missing_credentials"


# --- response parser ---

class NotSerializable(StudyformError):
    code = "not_serializable"


# --- review session ---

class NothingToRecord(StudyformError):
    code = "nothing_to_record"


class AlreadyRecorded(StudyformError):
    code = "already_recorded"


class UnrecordedCells(StudyformError):
    code = "unrecorded_cells"


class NoDocument(StudyformError):
    code = "no_document"


class NoProposal(StudyformError):
    code = "no_proposal"


class NoSourceAvailable(StudyformError):
    code = "no_source"


class SessionNotFound(StudyformError):
    code = "session_not_found"


class UnknownVariable(StudyformError):
    code = "unknown_variable"


# --- agreement ---

class SchemaMismatch(StudyformError):
    code = "schema_mismatch"


class UnalignedStudies(StudyformError):
    code = "unaligned_studies"


class EmptyColumn(StudyformError):
    code = "empty_column"


class EmptySelection(StudyformError):
    code = "empty_selection"
