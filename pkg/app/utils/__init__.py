"""
Utility functions and helpers.
"""

from .logger import get_logger
from .parallel import ordered_map, worker_count

__all__ = ["get_logger", "ordered_map", "worker_count"]
