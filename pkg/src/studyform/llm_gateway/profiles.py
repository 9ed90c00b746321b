"""Built-in provider profiles and credential resolution."""

from __future__ import annotations

import os
from typing import Optional

from ..errors import MissingCredentials, UnknownProvider
from .core import AuthMode, Capabilities, ProviderProfile, validate_profile

ENV_GOOGLE = "EXTRACT_API_KEY_GOOGLE"
ENV_MISTRAL = "EXTRACT_API_KEY_MISTRAL"
ENV_OPENROUTER = "EXTRACT_API_KEY_OPENROUTER"

_BUILTIN = [
    ProviderProfile(
        name="google_ai_studio",
        base_url="https://generativelanguage.googleapis.com/v1beta",
        auth=AuthMode.QUERY_KEY,
        capabilities=Capabilities(accepts_pdf_bytes=True, accepts_text=True),
        rate_limit=15,
        key_env_var=ENV_GOOGLE,
    ),
    ProviderProfile(
        name="mistral",
        base_url="https://api.mistral.ai/v1",
        auth=AuthMode.BEARER_KEY,
        capabilities=Capabilities(accepts_pdf_bytes=False, accepts_text=True),
        rate_limit=30,
        key_env_var=ENV_MISTRAL,
    ),
    ProviderProfile(
        name="ollama_local",
        base_url="http://127.0.0.1:11434",
        auth=AuthMode.NONE,
        capabilities=Capabilities(accepts_pdf_bytes=False, accepts_text=True),
        rate_limit=600,
        default_context_window=8192,
    ),
    ProviderProfile(
        name="open_router",
        base_url="https://openrouter.ai/api/v1",
        auth=AuthMode.BEARER_KEY,
        capabilities=Capabilities(accepts_pdf_bytes=False, accepts_text=True),
        rate_limit=20,
        key_env_var=ENV_OPENROUTER,
    ),
    ProviderProfile(
        name="mock",
        base_url="mock://",
        auth=AuthMode.NONE,
        capabilities=Capabilities(accepts_pdf_bytes=False, accepts_text=True),
        rate_limit=100000,
    ),
]

_REGISTRY = {p.name: validate_profile(p) for p in _BUILTIN}


def builtin_profiles() -> list[ProviderProfile]:
    return list(_REGISTRY.values())


def get_profile(name: str) -> ProviderProfile:
    try:
        return _REGISTRY[name]
    except KeyError:
        raise UnknownProvider(
            f"unknown provider {name!r}; known: {', '.join(sorted(_REGISTRY))}"
        ) from None


def resolve_api_key(profile: ProviderProfile, override: Optional[str] = None) -> Optional[str]:
    """Key from the in-memory override, else environment. Never persisted."""
    if profile.auth is AuthMode.NONE:
        return None
    if override:
        return override
    key = os.environ.get(profile.key_env_var or "", "")
    if not key:
        raise MissingCredentials(
            f"provider {profile.name} needs an API key "
            f"(set {profile.key_env_var} or submit one for the session)"
        )
    return key
