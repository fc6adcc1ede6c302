"""工具模块"""

from .rng import Stream, make_rng

__all__ = ["Stream", "make_rng"]
