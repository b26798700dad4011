"""Solar-sail multi-asteroid mission planning.

Time-optimal sail transfers by costate shooting, a neural surrogate of the
transfer time, Monte Carlo tree search over visiting orders, and leg-by-leg
verification of planned sequences.
"""
from .config import TOOL_VERSION as __version__

__all__ = ["__version__"]
