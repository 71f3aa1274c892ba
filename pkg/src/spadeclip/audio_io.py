"""WAV input/output and peak normalization.

Internally every waveform is a float64 numpy array wrapped in :class:`Signal`.
Output files are always mono IEEE-float32 so that a write/read cycle is
bit-exact for float32-representable samples.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.io import wavfile

from .errors import AudioFormatError, DataError

log = logging.getLogger(__name__)

PCM16_SCALE = 32768.0


@dataclass(frozen=True)
class Signal:
    """Real mono waveform with its sample rate in Hz."""

    samples: np.ndarray
    sample_rate: int = 16000

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise DataError(f"samples must be one-dimensional, got shape {samples.shape}")
        if samples.size < 1:
            raise DataError("a signal needs at least one sample")
        if not np.all(np.isfinite(samples)):
            raise DataError("samples contain NaN or Inf")
        if int(self.sample_rate) <= 0:
            raise DataError(f"sample rate must be positive, got {self.sample_rate}")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    def __len__(self):
        return self.samples.size

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate

    def with_samples(self, samples) -> "Signal":
        return Signal(samples, self.sample_rate)


def read_wav(path) -> Signal:
    """Read a PCM16 or float32 WAV file.

    Multichannel files keep channel 0 only (a warning is issued); averaging
    would change which samples sit at the clipping level.
    """
    path = Path(path)
    try:
        rate, data = wavfile.read(path)
    except FileNotFoundError as exc:
        raise AudioFormatError(f"no such file: {path}") from exc
    except (ValueError, OSError) as exc:
        raise AudioFormatError(f"cannot read WAV {path}: {exc}") from exc

    if data.ndim == 2:
        warnings.warn(
            f"{path.name}: {data.shape[1]} channels, using channel 0 only",
            stacklevel=2,
        )
        data = data[:, 0]

    if data.dtype == np.int16:
        samples = data.astype(np.float64) / PCM16_SCALE
    elif data.dtype == np.float32:
        samples = data.astype(np.float64)
    else:
        raise AudioFormatError(
            f"{path.name}: unsupported sample format {data.dtype} "
            "(expected PCM16 or IEEE float32)"
        )
    if samples.size == 0:
        raise AudioFormatError(f"{path.name}: file holds no samples")
    log.debug("read %s: %d samples @ %d Hz", path, samples.size, rate)
    return Signal(samples, rate)


def write_wav(path, s: Signal) -> None:
    """Write ``s`` as a mono IEEE-float32 WAV file."""
    path = Path(path)
    data = np.asarray(s.samples, dtype=np.float32)
    try:
        wavfile.write(path, s.sample_rate, data)
    except OSError as exc:
        raise AudioFormatError(f"cannot write {path}: {exc}") from exc


def peak_normalize(s: Signal) -> Signal:
    peak = np.max(np.abs(s.samples))
    if peak == 0:
        raise DataError("cannot peak-normalize an all-zero signal")
    return s.with_samples(s.samples / peak)


def as_float32(s: Signal) -> Signal:
    """Round samples to float32 precision (what a WAV round-trip preserves)."""
    return s.with_samples(np.asarray(s.samples, dtype=np.float32).astype(np.float64))
