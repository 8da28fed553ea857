"""Customizable ROI-based learned image compression."""

from .bitstream import Bitstream, BitstreamError
from .config import CodecConfig, LAMBDA_TABLE
from .model import CodecModel, load_checkpoint, save_checkpoint
from .tma import (BackendUnavailableError, BinarizationConfig, GroundTruthBackend,
                  PretrainedBackend, SyntheticBackend, adjustable_binarization,
                  similarity_generation)

__version__ = "0.1.0"

__all__ = [
    "Bitstream", "BitstreamError", "CodecConfig", "LAMBDA_TABLE",
    "CodecModel", "load_checkpoint", "save_checkpoint",
    "BackendUnavailableError", "BinarizationConfig", "GroundTruthBackend",
    "PretrainedBackend", "SyntheticBackend", "adjustable_binarization",
    "similarity_generation", "__version__",
]
