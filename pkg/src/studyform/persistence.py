"""Crash-safe file writes: temp file in the target directory, fsync, rename.

A kill point between the temp write and the rename is injectable so the
crash-consistency guarantee is testable rather than asserted.
"""

from __future__ import annotations

import os
import tempfile
from pathlib import Path
from typing import Callable, Optional


class SimulatedCrash(RuntimeError):
    """Raised by fault-injection hooks standing in for a process kill."""


def atomic_write_bytes(
    path: Path,
    content: bytes,
    crash_hook: Optional[Callable[[], None]] = None,
) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(content)
            f.flush()
            os.fsync(f.fileno())
        if crash_hook is not None:
            crash_hook()
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def atomic_write_text(
    path: Path,
    content: str,
    crash_hook: Optional[Callable[[], None]] = None,
) -> None:
    atomic_write_bytes(path, content.encode("utf-8"), crash_hook)
