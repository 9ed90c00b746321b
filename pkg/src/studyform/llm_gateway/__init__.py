"""Provider-agnostic LLM request assembly and execution."""

from .core import (
    AuthMode,
    BatchEntry,
    BatchOutcome,
    Capabilities,
    ExtractionRequest,
    PayloadKind,
    ProviderProfile,
    RawCompletion,
    RequestOptions,
    RetryPolicy,
    Transport,
    TransportReply,
    Usage,
    build_request,
    execute,
    execute_batch,
    validate_profile,
)
from .mock import MockTransport
from .profiles import builtin_profiles, get_profile, resolve_api_key
from .rate_limit import RateLimiter

__all__ = [
    "AuthMode",
    "BatchEntry",
    "BatchOutcome",
    "Capabilities",
    "ExtractionRequest",
    "MockTransport",
    "PayloadKind",
    "ProviderProfile",
    "RateLimiter",
    "RawCompletion",
    "RequestOptions",
    "RetryPolicy",
    "Transport",
    "TransportReply",
    "Usage",
    "build_request",
    "builtin_profiles",
    "execute",
    "execute_batch",
    "get_profile",
    "resolve_api_key",
    "validate_profile",
]
