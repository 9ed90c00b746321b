from .app import create_app
from .config import ServiceConfig, load_config
from .store import SessionStore

__all__ = ["ServiceConfig", "SessionStore", "create_app", "load_config"]
