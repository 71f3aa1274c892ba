"""Signal-to-distortion ratios used to score restorations.

``sdr(u, v) = 10 log10(||u||^2 / ||u - v||^2)`` with ``u`` the reference.
A perfect match gives ``+inf``. Improvements are reported as
``delta_sdr = sdr(x, x_hat) - sdr(x, y)``.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from .audio_io import Signal
from .clip_model import ClipMask
from .errors import DataError


def _arr(s) -> np.ndarray:
    return s.samples if isinstance(s, Signal) else np.asarray(s, dtype=np.float64)


def sdr(u, v) -> float:
    u, v = _arr(u), _arr(v)
    if u.shape != v.shape:
        raise DataError(f"length mismatch: {u.size} vs {v.size}")
    ref = float(np.dot(u, u))
    if ref == 0:
        raise DataError("reference signal has zero energy")
    err = u - v
    dist = float(np.dot(err, err))
    if dist == 0:
        return math.inf
    return 10 * math.log10(ref / dist)


def delta_sdr(x, y, x_hat) -> float:
    before = sdr(x, y)
    if math.isinf(before):
        raise DataError("clipped signal equals the original; improvement is undefined")
    return sdr(x, x_hat) - before


def sdr_clipped_only(x, v, mask: ClipMask) -> float:
    """SDR restricted to the clipped samples."""
    idx = mask.clipped
    if not idx.any():
        raise DataError("mask has no clipped samples")
    return sdr(_arr(x)[idx], _arr(v)[idx])


def delta_sdr_clipped_only(x, y, x_hat, mask: ClipMask) -> float:
    idx = mask.clipped
    if not idx.any():
        raise DataError("mask has no clipped samples")
    return delta_sdr(_arr(x)[idx], _arr(y)[idx], _arr(x_hat)[idx])


def delta_sdr_invariance_check(x, y, x_hat, mask: ClipMask) -> tuple[float, float]:
    """Improvement on the whole signal and on clipped samples only.

    The two agree whenever the restoration keeps the reliable samples of
    ``y``; that precondition is enforced (exact equality).
    """
    y_arr, xh = _arr(y), _arr(x_hat)
    reliable = mask.reliable
    if not np.array_equal(xh[reliable], y_arr[reliable]):
        raise DataError("restoration differs from the observation on reliable samples")
    return delta_sdr(x, y, x_hat), delta_sdr_clipped_only(x, y, x_hat, mask)


class BlockSDR(NamedTuple):
    index: int
    start: int
    sdr: float
    skipped: bool


def blockwise_sdr(x, x_hat, block_len: int = 2048, hop: int | None = None) -> list[BlockSDR]:
    """SDR on rectangular sliding blocks (``hop`` defaults to ``block_len``).

    Blocks whose reference is silent are flagged ``skipped`` with ``sdr=nan``.
    """
    x, xh = _arr(x), _arr(x_hat)
    if x.shape != xh.shape:
        raise DataError(f"length mismatch: {x.size} vs {xh.size}")
    if not 1 <= block_len <= x.size:
        raise DataError(f"block length must lie in [1, {x.size}], got {block_len}")
    hop = block_len if hop is None else hop
    if hop < 1:
        raise DataError("hop must be positive")
    rows = []
    for i, start in enumerate(range(0, x.size - block_len + 1, hop)):
        ref = x[start : start + block_len]
        if not np.any(ref):
            rows.append(BlockSDR(i, start, math.nan, True))
            continue
        rows.append(BlockSDR(i, start, sdr(ref, xh[start : start + block_len]), False))
    return rows


def format_db(value: float) -> str:
    """Render a dB value for reports; infinities become ``inf``/``-inf``."""
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    if math.isnan(value):
        return "nan"
    return repr(float(value))
