"""Service configuration: loopback by default, durable state under data_dir."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional


@dataclass
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8272
    data_dir: Path = Path("./data")
    max_retries: int = 3
    parallelism: int = 2
    ui_dir: Optional[Path] = None
    provider_base_urls: dict[str, str] = field(default_factory=dict)

    def ensure_data_dir(self) -> Path:
        self.data_dir = Path(self.data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        probe = self.data_dir / ".write-probe"
        probe.write_text("")
        probe.unlink()
        return self.data_dir


def load_config(path: Path | str) -> ServiceConfig:
    """JSON key-value config file; unknown keys rejected loudly."""
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    known = {
        "host",
        "port",
        "data_dir",
        "max_retries",
        "parallelism",
        "ui_dir",
        "provider_base_urls",
    }
    unknown = set(raw) - known
    if unknown:
        raise ValueError(f"unknown config keys: {', '.join(sorted(unknown))}")
    config = ServiceConfig(**raw)
    config.data_dir = Path(config.data_dir)
    if config.ui_dir is not None:
        config.ui_dir = Path(config.ui_dir)
    return config
