"""Embedding extractor: image folders -> AEPL binary embedding datasets."""

from .encoders import PatchStatsEncoder, get_encoder
from .extract import ExtractJob, extract
from .writer import write_aepl

__version__ = "0.1.0"

__all__ = ["ExtractJob", "PatchStatsEncoder", "extract", "get_encoder", "write_aepl"]
