"""Session registry over the data directory.

Every session lives in its own subdirectory holding the coding form, the
session state file, and the attached document, so a service restart can
rebuild any session from disk alone. API keys submitted for a session are
held in process memory only and are gone after a restart by design.
"""

from __future__ import annotations

import re
import threading
from pathlib import Path
from typing import Optional

from ..errors import SessionNotFound
from ..review_session import ReviewSession, load_session, start_session

_SESSION_SUFFIX = ".session.json"
_RESERVED_SUFFIXES = (_SESSION_SUFFIX, ".document.pdf", ".meta.json")


def sanitize_filename(name: str, fallback: str) -> str:
    base = Path(name or "").name
    base = re.sub(r"[^-._A-Za-z0-9 ]", "_", base).strip()
    return base or fallback


class SessionStore:
    def __init__(self, data_dir: Path):
        self.sessions_dir = Path(data_dir) / "sessions"
        self.sessions_dir.mkdir(parents=True, exist_ok=True)
        self._live: dict[str, ReviewSession] = {}
        self._keys: dict[str, dict[str, str]] = {}
        self._lock = threading.Lock()

    def create(self, form_bytes: bytes, filename: str) -> ReviewSession:
        name = sanitize_filename(filename, "coding_form.csv")
        # Reserve the id first so the directory name matches the session.
        import secrets

        session_id = secrets.token_hex(8)
        session_dir = self.sessions_dir / session_id
        session_dir.mkdir(parents=True)
        session = start_session(form_bytes, session_dir / name)
        session.session_id = session_id
        session.persist()
        with self._lock:
            self._live[session_id] = session
        return session

    def _load_from_disk(self, session_id: str) -> Optional[ReviewSession]:
        session_dir = self.sessions_dir / session_id
        if not session_dir.is_dir():
            return None
        for state_file in session_dir.glob(f"*{_SESSION_SUFFIX}"):
            prefix = state_file.name[: -len(_SESSION_SUFFIX)]
            for candidate in session_dir.iterdir():
                if candidate.name.endswith(_RESERVED_SUFFIXES):
                    continue
                if candidate.stem == prefix or candidate.name == prefix:
                    return load_session(candidate)
        return None

    def get(self, session_id: str) -> ReviewSession:
        with self._lock:
            session = self._live.get(session_id)
        if session is not None:
            return session
        session = self._load_from_disk(session_id)
        if session is None:
            raise SessionNotFound(f"no session {session_id!r}")
        session.session_id = session_id
        with self._lock:
            self._live[session_id] = session
        return session

    # -- in-memory per-session API keys --

    def set_key(self, session_id: str, provider: str, api_key: str) -> None:
        with self._lock:
            self._keys.setdefault(session_id, {})[provider] = api_key

    def get_key(self, session_id: str, provider: str) -> Optional[str]:
        with self._lock:
            return self._keys.get(session_id, {}).get(provider)
