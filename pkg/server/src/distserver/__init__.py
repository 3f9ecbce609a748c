"""Deterministic next-token distribution server."""

from .backend import ModelBackend, ServerConfig
from .app import create_app

__version__ = "0.1.0"

__all__ = ["ModelBackend", "ServerConfig", "create_app", "__version__"]
