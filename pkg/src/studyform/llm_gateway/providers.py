"""HTTP bindings for the hosted and local providers.

Each binding maps one provider's public chat/generate endpoint onto the
shared TransportReply shape; adding a provider means adding a binding
plus a profile, nothing else changes.
"""

from __future__ import annotations

import base64
from typing import Optional

import httpx

from .core import ExtractionRequest, PayloadKind, ProviderProfile, TransportReply, Usage

_TIMEOUT_SECONDS = 300.0


class HttpTransport:
    def __init__(self, client: Optional[httpx.Client] = None):
        self._client = client or httpx.Client(timeout=_TIMEOUT_SECONDS)

    def send(
        self,
        profile: ProviderProfile,
        request: ExtractionRequest,
        api_key: Optional[str],
    ) -> TransportReply:
        try:
            if profile.name == "google_ai_studio":
                return self._send_google(profile, request, api_key)
            if profile.name == "ollama_local":
                return self._send_ollama(profile, request)
            return self._send_openai_style(profile, request, api_key)
        except httpx.TimeoutException as exc:
            return TransportReply(status=0, detail=f"timeout: {exc}")
        except httpx.HTTPError as exc:
            return TransportReply(status=0, detail=f"connection error: {exc}")

    # -- bindings --

    def _send_google(
        self, profile: ProviderProfile, request: ExtractionRequest, api_key: Optional[str]
    ) -> TransportReply:
        url = f"{profile.base_url}/models/{request.model}:generateContent"
        parts: list[dict] = [{"text": request.prompt_text()}]
        if request.payload_kind is PayloadKind.PDF_BYTES:
            parts.append(
                {
                    "inline_data": {
                        "mime_type": "application/pdf",
                        "data": base64.b64encode(request.pdf_bytes or b"").decode("ascii"),
                    }
                }
            )
        else:
            parts.append({"text": "Document:\n" + (request.payload_text or "")})
        body = {
            "contents": [{"parts": parts}],
            "generationConfig": {"temperature": request.options.temperature},
        }
        response = self._client.post(url, params={"key": api_key or ""}, json=body)
        if response.status_code != 200:
            return TransportReply(status=response.status_code, detail=response.text[:500])
        data = response.json()
        candidates = data.get("candidates") or []
        texts = []
        if candidates:
            for part in candidates[0].get("content", {}).get("parts", []):
                if "text" in part:
                    texts.append(part["text"])
        meta = data.get("usageMetadata", {})
        usage = Usage(
            input_tokens=meta.get("promptTokenCount"),
            output_tokens=meta.get("candidatesTokenCount"),
        )
        return TransportReply(status=200, text="".join(texts), usage=usage)

    def _send_ollama(
        self, profile: ProviderProfile, request: ExtractionRequest
    ) -> TransportReply:
        options: dict = {"temperature": request.options.temperature}
        if request.options.context_window:
            options["num_ctx"] = request.options.context_window
        body = {
            "model": request.model,
            "prompt": request.full_text(),
            "stream": False,
            "options": options,
        }
        response = self._client.post(f"{profile.base_url}/api/generate", json=body)
        if response.status_code != 200:
            return TransportReply(status=response.status_code, detail=response.text[:500])
        data = response.json()
        usage = Usage(
            input_tokens=data.get("prompt_eval_count"),
            output_tokens=data.get("eval_count"),
        )
        return TransportReply(status=200, text=data.get("response", ""), usage=usage)

    def _send_openai_style(
        self, profile: ProviderProfile, request: ExtractionRequest, api_key: Optional[str]
    ) -> TransportReply:
        headers = {}
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        body = {
            "model": request.model,
            "temperature": request.options.temperature,
            "messages": [{"role": "user", "content": request.full_text()}],
        }
        response = self._client.post(
            f"{profile.base_url}/chat/completions", headers=headers, json=body
        )
        if response.status_code != 200:
            return TransportReply(status=response.status_code, detail=response.text[:500])
        data = response.json()
        choices = data.get("choices") or []
        text = choices[0].get("message", {}).get("content", "") if choices else ""
        usage_data = data.get("usage", {})
        usage = Usage(
            input_tokens=usage_data.get("prompt_tokens"),
            output_tokens=usage_data.get("completion_tokens"),
        )
        return TransportReply(status=200, text=text, usage=usage)
