"""Sparse audio declipping with the analysis and synthesis SPADE algorithms."""

__version__ = "0.1.0"

from .audio_io import Signal, peak_normalize, read_wav, write_wav  # noqa: E402
from .clip_model import (  # noqa: E402
    Bounds,
    ClipMask,
    detect_mask,
    hard_clip,
    is_consistent,
    make_bounds,
    make_windowed_bounds,
)
from .errors import (  # noqa: E402
    AudioFormatError,
    ConvergenceError,
    CoverageError,
    DataError,
    NumericalError,
    SpadeError,
)
from .frames import FrameOperator, MatrixFrame, verify_tight  # noqa: E402
from .metrics import blockwise_sdr, delta_sdr, sdr, sdr_clipped_only  # noqa: E402
from .projections import proj_box, proj_oracle, proj_synthesis, proj_time  # noqa: E402
from .segmentation import (  # noqa: E402
    GaborFrame,
    TransformConfig,
    declip,
    declip_segmented,
    declip_whole,
)
from .spade import IterationStats, aspade, sspade  # noqa: E402
from .sparsity import SpadeParams, current_k, hard_threshold  # noqa: E402

__all__ = [
    "Signal",
    "peak_normalize",
    "read_wav",
    "write_wav",
    "Bounds",
    "ClipMask",
    "detect_mask",
    "hard_clip",
    "is_consistent",
    "make_bounds",
    "make_windowed_bounds",
    "AudioFormatError",
    "ConvergenceError",
    "CoverageError",
    "DataError",
    "NumericalError",
    "SpadeError",
    "FrameOperator",
    "MatrixFrame",
    "verify_tight",
    "blockwise_sdr",
    "delta_sdr",
    "sdr",
    "sdr_clipped_only",
    "proj_box",
    "proj_oracle",
    "proj_synthesis",
    "proj_time",
    "GaborFrame",
    "TransformConfig",
    "declip",
    "declip_segmented",
    "declip_whole",
    "IterationStats",
    "aspade",
    "sspade",
    "SpadeParams",
    "current_k",
    "hard_threshold",
]
