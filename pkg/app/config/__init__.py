"""
Configuration loaded from DSL_* environment variables.
"""

from .settings import Settings, get_settings, settings

__all__ = ["Settings", "get_settings", "settings"]
