"""Extremes of a heavy-tailed observable maximised on a dynamically defined Cantor set."""

__version__ = "0.1.0"

from .map_core import TERNARY, MapSpec, load_map, validate_map  # noqa: E402,F401
from .observable import GapWord, Scales, default_scales  # noqa: E402,F401
