"""Hard clipping, the reliable/high/low partition and the consistency box.

The consistency set of a clipped observation is the box ``lo <= x <= hi``:
reliable samples are pinned to the observation, samples clipped high must stay
at or above the threshold, samples clipped low at or below its negative.
Unbounded sides are stored as ``+/-inf`` so a plain clamp projects onto it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .audio_io import Signal
from .errors import DataError


def _as_samples(x) -> np.ndarray:
    if isinstance(x, Signal):
        return x.samples
    return np.asarray(x, dtype=np.float64)


@dataclass(frozen=True, eq=False)
class ClipMask:
    """Partition of sample indices into reliable, clipped-high and clipped-low.

    ``high`` and ``low`` are boolean arrays; reliable samples are the rest.
    """

    high: np.ndarray
    low: np.ndarray
    theta_c: float

    def __post_init__(self):
        high = np.asarray(self.high, dtype=bool)
        low = np.asarray(self.low, dtype=bool)
        if high.shape != low.shape or high.ndim != 1:
            raise DataError("high/low masks must be 1-D and of equal length")
        if np.any(high & low):
            raise DataError("a sample cannot be clipped both high and low")
        if not self.theta_c > 0:
            raise DataError(f"clipping threshold must be positive, got {self.theta_c}")
        high.setflags(write=False)
        low.setflags(write=False)
        object.__setattr__(self, "high", high)
        object.__setattr__(self, "low", low)
        object.__setattr__(self, "theta_c", float(self.theta_c))

    def __len__(self):
        return self.high.size

    def __eq__(self, other):
        if not isinstance(other, ClipMask):
            return NotImplemented
        return (
            self.theta_c == other.theta_c
            and np.array_equal(self.high, other.high)
            and np.array_equal(self.low, other.low)
        )

    @property
    def reliable(self) -> np.ndarray:
        return ~(self.high | self.low)

    @property
    def clipped(self) -> np.ndarray:
        return self.high | self.low

    @property
    def reliable_idx(self) -> np.ndarray:
        return np.flatnonzero(self.reliable)

    @property
    def high_idx(self) -> np.ndarray:
        return np.flatnonzero(self.high)

    @property
    def low_idx(self) -> np.ndarray:
        return np.flatnonzero(self.low)

    @classmethod
    def from_indices(cls, n, high=(), low=(), theta_c=1.0) -> "ClipMask":
        h = np.zeros(n, dtype=bool)
        lo = np.zeros(n, dtype=bool)
        h[np.asarray(high, dtype=int)] = True
        lo[np.asarray(low, dtype=int)] = True
        return cls(h, lo, theta_c)

    def slice(self, start: int, stop: int) -> "ClipMask":
        return ClipMask(self.high[start:stop], self.low[start:stop], self.theta_c)

    def pad(self, before: int, after: int) -> "ClipMask":
        """Extend with reliable samples on both sides."""
        return ClipMask(
            np.pad(self.high, (before, after)),
            np.pad(self.low, (before, after)),
            self.theta_c,
        )


@dataclass(frozen=True, eq=False)
class Bounds:
    """Per-sample interval ``[lo, hi]`` over the extended reals."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lo, dtype=np.float64)
        hi = np.asarray(self.hi, dtype=np.float64)
        if lo.shape != hi.shape:
            raise DataError("lower and upper bounds differ in shape")
        if np.any(np.isnan(lo)) or np.any(np.isnan(hi)):
            raise DataError("bounds contain NaN")
        if np.any(lo > hi):
            raise DataError("lower bound exceeds upper bound")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    def __len__(self):
        return self.lo.shape[-1]


def hard_clip(x, theta_c: float) -> tuple[Signal, ClipMask]:
    """Clip ``x`` to ``[-theta_c, theta_c]``; ``|x| == theta_c`` counts as clipped."""
    if not theta_c > 0:
        raise DataError(f"clipping threshold must be positive, got {theta_c}")
    samples = _as_samples(x)
    high = samples >= theta_c
    low = samples <= -theta_c
    y = samples.copy()
    y[high] = theta_c
    y[low] = -theta_c
    rate = x.sample_rate if isinstance(x, Signal) else 16000
    return Signal(y, rate), ClipMask(high, low, theta_c)


def detect_mask(y, theta_c: float) -> ClipMask:
    samples = _as_samples(y)
    return ClipMask(samples >= theta_c, samples <= -theta_c, theta_c)


def make_bounds(y, mask: ClipMask) -> Bounds:
    return make_windowed_bounds(y, mask, np.ones(len(mask)))


def make_windowed_bounds(y_block, mask_block: ClipMask, window) -> Bounds:
    """Consistency box for a block that gets multiplied by ``window``.

    ``y_block`` holds the raw (unwindowed) observation; reliable samples are
    pinned to ``w*y`` and the clipping threshold is scaled by ``w`` per sample.
    """
    y = _as_samples(y_block)
    w = np.asarray(window, dtype=np.float64)
    if not (y.shape == w.shape == mask_block.high.shape):
        raise DataError("block, mask and window lengths differ")
    return windowed_bounds(y, mask_block.high, mask_block.low, mask_block.theta_c, w)


def windowed_bounds(y, high, low, theta_c, window) -> Bounds:
    """Array form of :func:`make_windowed_bounds`; broadcasts over blocks."""
    w = np.asarray(window, dtype=np.float64)
    if np.any(w < 0):
        raise DataError("window gains must be non-negative")
    theta = w * theta_c
    wy = w * y
    lo = np.where(high, theta, np.where(low, -np.inf, wy))
    hi = np.where(high, np.inf, np.where(low, -theta, wy))
    return Bounds(lo, hi)


def violation(x, b: Bounds) -> float:
    """Largest distance of ``x`` from the box (0 when inside)."""
    x = _as_samples(x)
    below = np.max(b.lo - x, initial=0.0)
    above = np.max(x - b.hi, initial=0.0)
    return float(max(below, above, 0.0))


def is_consistent(x, b: Bounds, tol: float = 0.0) -> bool:
    x = _as_samples(x)
    if x.shape != b.lo.shape:
        raise DataError("signal and bounds differ in length")
    return bool(np.all(b.lo - tol <= x) and np.all(x <= b.hi + tol))
