"""Provider-agnostic request assembly, execution with retries, batching."""

from __future__ import annotations

import random
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional, Protocol, Sequence

from .. import wire
from ..coding_form import CodingForm
from ..errors import (
    AuthFailed,
    CapabilityMismatch,
    ContextOverflow,
    ModelRefused,
    RateLimitedExhausted,
    StudyformError,
    TransportFailed,
)
from ..pdf_ingest import PdfDocument, page_delimited_text
from .rate_limit import RateLimiter


class AuthMode(str, Enum):
    BEARER_KEY = "bearer_key"
    QUERY_KEY = "query_key"
    NONE = "none"


class PayloadKind(str, Enum):
    PDF_BYTES = "pdf_bytes"
    TEXT = "page_delimited_text"


@dataclass(frozen=True)
class Capabilities:
    accepts_pdf_bytes: bool
    accepts_text: bool


@dataclass(frozen=True)
class ProviderProfile:
    name: str
    base_url: str
    auth: AuthMode
    capabilities: Capabilities
    rate_limit: int
    default_context_window: Optional[int] = None
    key_env_var: Optional[str] = None


def validate_profile(profile: ProviderProfile) -> ProviderProfile:
    """Applied at profile load; builders re-check capabilities later."""
    if not (profile.capabilities.accepts_pdf_bytes or profile.capabilities.accepts_text):
        raise ValueError(f"profile {profile.name}: accepts neither payload kind")
    if profile.rate_limit <= 0:
        raise ValueError(f"profile {profile.name}: rate_limit must be positive")
    return profile


@dataclass(frozen=True)
class RequestOptions:
    temperature: float = 0.0
    context_window: Optional[int] = None


@dataclass(frozen=True)
class ExtractionRequest:
    model: str
    master_prompt: str
    question_prompts: tuple[str, ...]
    payload_kind: PayloadKind
    pdf_bytes: Optional[bytes] = None
    payload_text: Optional[str] = None
    options: RequestOptions = field(default_factory=RequestOptions)

    def prompt_text(self) -> str:
        """Instruction plus numbered questions (document part excluded)."""
        return "\n\n".join(
            [
                self.master_prompt.rstrip("\n"),
                "Questions:\n" + wire.numbered_questions(list(self.question_prompts)),
            ]
        )

    def full_text(self) -> str:
        """Complete single-message prompt for text-only providers."""
        assert self.payload_text is not None
        return self.prompt_text() + "\n\nDocument:\n" + self.payload_text

    def estimated_tokens(self) -> int:
        chars = len(self.master_prompt) + sum(len(q) for q in self.question_prompts)
        if self.payload_text is not None:
            payload_chars = len(self.payload_text)
        else:
            payload_chars = len(self.pdf_bytes or b"")
        return -(-payload_chars // 4) + -(-chars // 4)


@dataclass(frozen=True)
class Usage:
    input_tokens: Optional[int] = None
    output_tokens: Optional[int] = None


@dataclass(frozen=True)
class RawCompletion:
    text: str
    usage: Optional[Usage]
    latency_ms: int
    attempt_count: int


@dataclass(frozen=True)
class TransportReply:
    """One attempt's outcome: HTTP-ish status plus body or error detail."""

    status: int  # 0 = connection/timeout level failure
    text: str = ""
    usage: Optional[Usage] = None
    detail: str = ""


class Transport(Protocol):
    def send(
        self, profile: ProviderProfile, request: ExtractionRequest, api_key: Optional[str]
    ) -> TransportReply: ...


@dataclass(frozen=True)
class RetryPolicy:
    max_retries: int = 3
    base_delay: float = 1.0
    jitter: float = 0.1


def build_request(
    profile: ProviderProfile,
    form: CodingForm,
    doc: PdfDocument,
    raw_pdf: bytes,
    options: Optional[RequestOptions] = None,
    model: str = "",
) -> ExtractionRequest:
    """One consolidated request carrying all of the form's prompts.

    PDF-capable profiles get the original bytes; text-only profiles get the
    page-delimited extraction so the model can still cite page numbers.
    """
    if not form.variables:
        raise ValueError("coding form has no variables")
    options = options or RequestOptions()
    prompts = tuple(v.prompt for v in form.variables)
    if profile.capabilities.accepts_pdf_bytes:
        return ExtractionRequest(
            model=model,
            master_prompt=wire.master_prompt(),
            question_prompts=prompts,
            payload_kind=PayloadKind.PDF_BYTES,
            pdf_bytes=raw_pdf,
            options=options,
        )
    if profile.capabilities.accepts_text:
        return ExtractionRequest(
            model=model,
            master_prompt=wire.master_prompt(),
            question_prompts=prompts,
            payload_kind=PayloadKind.TEXT,
            payload_text=page_delimited_text(doc),
            options=options,
        )
    raise CapabilityMismatch(f"profile {profile.name} accepts neither payload kind")


def _default_transport(profile: ProviderProfile) -> Transport:
    if profile.name == "mock":
        from .mock import MockTransport

        return MockTransport()
    from .providers import HttpTransport

    return HttpTransport()


def execute(
    profile: ProviderProfile,
    request: ExtractionRequest,
    *,
    api_key: Optional[str] = None,
    transport: Optional[Transport] = None,
    retry: RetryPolicy = RetryPolicy(),
    limiter: Optional[RateLimiter] = None,
    clock: Callable[[], float] = time.monotonic,
    sleep: Callable[[float], None] = time.sleep,
    rng: Optional[random.Random] = None,
) -> RawCompletion:
    """Send one request, retrying transient failures with backoff.

    429/5xx/connection failures retry up to the policy limit with
    exponential backoff (1 s, 2 s, 4 s plus jitter); auth rejections and
    refusals never retry.
    """
    if request.options.context_window is not None:
        estimate = request.estimated_tokens()
        if estimate > request.options.context_window:
            raise ContextOverflow(
                f"estimated {estimate} tokens exceed the "
                f"{request.options.context_window}-token context window"
            )
    transport = transport or _default_transport(profile)
    rng = rng or random.Random()
    started = clock()
    attempts = 0
    last_reply: Optional[TransportReply] = None
    while attempts <= retry.max_retries:
        if limiter is not None:
            limiter.acquire()
        attempts += 1
        reply = transport.send(profile, request, api_key)
        last_reply = reply
        if 200 <= reply.status < 300:
            if not reply.text.strip():
                raise ModelRefused(
                    f"empty or blocked output after attempt {attempts}"
                    + (f": {reply.detail}" if reply.detail else "")
                )
            latency_ms = int((clock() - started) * 1000)
            return RawCompletion(
                text=reply.text,
                usage=reply.usage,
                latency_ms=latency_ms,
                attempt_count=attempts,
            )
        if reply.status in (401, 403):
            raise AuthFailed(f"provider rejected credentials (HTTP {reply.status})")
        retryable = reply.status == 429 or reply.status >= 500 or reply.status == 0
        if not retryable:
            raise TransportFailed(
                f"HTTP {reply.status}: {reply.detail or reply.text[:200]}"
            )
        if attempts > retry.max_retries:
            break
        delay = retry.base_delay * (2 ** (attempts - 1))
        delay *= 1.0 + retry.jitter * rng.random()
        sleep(delay)

    assert last_reply is not None
    if last_reply.status == 429:
        raise RateLimitedExhausted(
            f"still rate-limited after {attempts} attempts"
        )
    raise TransportFailed(
        f"gave up after {attempts} attempts "
        f"(last status {last_reply.status}: {last_reply.detail})"
    )


@dataclass(frozen=True)
class BatchEntry:
    study_label: str
    completion: Optional[RawCompletion] = None
    failure_code: Optional[str] = None
    failure_reason: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.completion is not None


@dataclass(frozen=True)
class BatchOutcome:
    entries: tuple[BatchEntry, ...]

    @property
    def completed(self) -> list[BatchEntry]:
        return [e for e in self.entries if e.ok]

    @property
    def failed(self) -> list[BatchEntry]:
        return [e for e in self.entries if not e.ok]


def execute_batch(
    profile: ProviderProfile,
    labeled_requests: Sequence[tuple[str, ExtractionRequest]],
    parallelism: int = 1,
    *,
    api_key: Optional[str] = None,
    transport: Optional[Transport] = None,
    retry: RetryPolicy = RetryPolicy(),
    limiter: Optional[RateLimiter] = None,
    clock: Callable[[], float] = time.monotonic,
    sleep: Callable[[float], None] = time.sleep,
) -> BatchOutcome:
    """Run many extraction requests, one outcome per request, order kept.

    Failures stay in the outcome as data; pacing across workers goes
    through one shared limiter so the provider's requests-per-minute cap
    holds for the whole batch.
    """
    if parallelism < 1:
        raise ValueError("parallelism must be >= 1")
    transport = transport or _default_transport(profile)
    limiter = limiter or RateLimiter(profile.rate_limit, clock=clock, sleep=sleep)

    def run_one(item: tuple[str, ExtractionRequest]) -> BatchEntry:
        label, request = item
        try:
            completion = execute(
                profile,
                request,
                api_key=api_key,
                transport=transport,
                retry=retry,
                limiter=limiter,
                clock=clock,
                sleep=sleep,
            )
            return BatchEntry(study_label=label, completion=completion)
        except StudyformError as exc:
            return BatchEntry(
                study_label=label, failure_code=exc.code, failure_reason=exc.message
            )

    if parallelism == 1:
        entries = [run_one(item) for item in labeled_requests]
    else:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            entries = list(pool.map(run_one, labeled_requests))
    return BatchOutcome(entries=tuple(entries))
