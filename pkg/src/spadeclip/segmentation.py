"""Block framing, overlap-add and the two signal-level declipping modes.

The signal is zero-padded by one window length on both sides (plus enough on
the right to land on a whole number of hops), cut into hop-spaced blocks and
multiplied by the analysis window. Reconstruction multiplies each block by
the dual window ``w / sum_j w(n - j*hop)**2`` and folds the blocks back, which
is an exact inverse for any window/hop pair whose squared shifts cover every
sample.

In whole-signal mode the same framing, with the canonical tight window
``w / sqrt(sum_j w(n - j*hop)**2)``, followed by an oversampled DFT per block
forms a Parseval tight Gabor frame of the entire signal.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .audio_io import Signal
from .clip_model import ClipMask, Bounds, make_bounds, windowed_bounds
from .errors import CoverageError, DataError
from .frames import FrameOperator
from .sparsity import SpadeParams, n_groups
from .spade import ALGORITHMS, IterationStats, run_batch

log = logging.getLogger(__name__)

WINDOWS = ("hann", "rect", "sqrt_hann")
MODES = ("segmented", "whole_signal")
COVERAGE_TOL = 1e-10
MAX_WHOLE_SAMPLES = 1_000_000

WHOLE_SIGNAL_PARAMS = SpadeParams(s=100, r=1, epsilon=0.1)


@dataclass(frozen=True)
class TransformConfig:
    win_len: int = 1024
    overlap_fraction: float = 0.75
    window_kind: str = "hann"
    redundancy: int = 1
    mode: str = "segmented"

    def __post_init__(self):
        if self.win_len < 2:
            raise DataError(f"window length must be >= 2, got {self.win_len}")
        if not 0 <= self.overlap_fraction < 1:
            raise DataError(f"overlap must lie in [0, 1), got {self.overlap_fraction}")
        if self.window_kind not in WINDOWS:
            raise DataError(f"unsupported window {self.window_kind!r}")
        if int(self.redundancy) != self.redundancy or self.redundancy < 1:
            raise DataError(f"redundancy must be a positive integer, got {self.redundancy}")
        if self.mode not in MODES:
            raise DataError(f"unknown mode {self.mode!r}")
        if self.hop < 1:
            raise DataError("overlap leaves a hop of zero samples")

    @property
    def hop(self) -> int:
        return int(round(self.win_len * (1 - self.overlap_fraction)))

    @property
    def channels(self) -> int:
        return int(self.redundancy) * self.win_len

    def frame(self) -> FrameOperator:
        return FrameOperator(self.win_len, self.channels)


@dataclass(frozen=True)
class Padding:
    """Where the original signal sits inside the padded, framed one."""

    n_samples: int
    win_len: int
    hop: int
    left: int
    right: int

    @classmethod
    def for_signal(cls, n_samples: int, win_len: int, hop: int) -> "Padding":
        right = win_len + (-(n_samples + win_len)) % hop
        return cls(n_samples, win_len, hop, win_len, right)

    @property
    def padded_len(self) -> int:
        return self.left + self.n_samples + self.right

    @property
    def n_blocks(self) -> int:
        return (self.padded_len - self.win_len) // self.hop + 1


def make_window(kind: str, L: int) -> np.ndarray:
    """Analysis window of length ``L`` (periodic Hann convention)."""
    if L < 2:
        raise DataError(f"window length must be >= 2, got {L}")
    if kind == "rect":
        return np.ones(L)
    hann = 0.5 * (1 - np.cos(2 * np.pi * np.arange(L) / L))
    if kind == "hann":
        return hann
    if kind == "sqrt_hann":
        return np.sqrt(hann)
    raise DataError(f"unsupported window {kind!r}")


def window_coverage(w, hop: int) -> np.ndarray:
    """``c[m] = sum_j w[m + j*hop]**2`` over all in-range shifts, per window sample."""
    w = np.asarray(w, dtype=np.float64)
    if not 1 <= hop <= w.size:
        raise DataError(f"hop must lie in [1, {w.size}], got {hop}")
    per_phase = np.bincount(np.arange(w.size) % hop, weights=w**2, minlength=hop)
    if per_phase.min() < COVERAGE_TOL:
        raise CoverageError(
            f"window of length {w.size} with hop {hop} leaves samples uncovered "
            f"(min squared coverage {per_phase.min():.3g})"
        )
    return per_phase[np.arange(w.size) % hop]


def dual_window(w, hop: int) -> np.ndarray:
    w = np.asarray(w, dtype=np.float64)
    return w / window_coverage(w, hop)


def tight_window(w, hop: int) -> np.ndarray:
    w = np.asarray(w, dtype=np.float64)
    return w / np.sqrt(window_coverage(w, hop))


def _frames(padded: np.ndarray, pad: Padding) -> np.ndarray:
    return sliding_window_view(padded, pad.win_len, axis=-1)[..., :: pad.hop, :]


def _fold(blocks: np.ndarray, pad: Padding) -> np.ndarray:
    out = np.zeros(blocks.shape[:-2] + (pad.padded_len,))
    for j in range(blocks.shape[-2]):
        start = j * pad.hop
        out[..., start : start + pad.win_len] += blocks[..., j, :]
    return out[..., pad.left : pad.left + pad.n_samples]


def _samples(x) -> np.ndarray:
    return x.samples if isinstance(x, Signal) else np.asarray(x, dtype=np.float64)


def segment(x, cfg: TransformConfig) -> tuple[np.ndarray, Padding]:
    """Cut ``x`` into windowed blocks of shape ``(n_blocks, win_len)``.

    With ``N`` samples the block count is ``ceil((N + L) / hop) + 1``.
    """
    samples = _samples(x)
    pad = Padding.for_signal(samples.size, cfg.win_len, cfg.hop)
    padded = np.pad(samples, (pad.left, pad.right))
    w = make_window(cfg.window_kind, cfg.win_len)
    return _frames(padded, pad) * w, pad


def overlap_add(blocks, cfg: TransformConfig, pad: Padding) -> np.ndarray:
    blocks = np.asarray(blocks, dtype=np.float64)
    if blocks.shape != (pad.n_blocks, pad.win_len) or pad.win_len != cfg.win_len:
        raise DataError(
            f"expected {pad.n_blocks} blocks of {pad.win_len} samples, got {blocks.shape}"
        )
    dual = dual_window(make_window(cfg.window_kind, cfg.win_len), cfg.hop)
    return _fold(blocks * dual, pad)


@dataclass(frozen=True, eq=False)
class GaborFrame:
    """Parseval tight frame of a whole signal: tight-windowed blocks + DFT.

    Coefficients have shape ``(..., n_blocks, channels)``.
    """

    n_samples: int
    win_len: int
    hop: int
    channels: int
    window_kind: str = "hann"

    @classmethod
    def from_config(cls, n_samples: int, cfg: TransformConfig) -> "GaborFrame":
        return cls(n_samples, cfg.win_len, cfg.hop, cfg.channels, cfg.window_kind)

    def __post_init__(self):
        w = make_window(self.window_kind, self.win_len)
        object.__setattr__(self, "_window", tight_window(w, self.hop))
        object.__setattr__(
            self, "_pad", Padding.for_signal(self.n_samples, self.win_len, self.hop)
        )
        object.__setattr__(self, "_block", FrameOperator(self.win_len, self.channels))

    @property
    def block_len(self) -> int:
        return self.n_samples

    @property
    def n_blocks(self) -> int:
        return self._pad.n_blocks

    @property
    def n_groups(self) -> int:
        return self.n_blocks * n_groups(self.channels)

    def analysis(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.n_samples:
            raise DataError(f"expected {self.n_samples} samples, got {x.shape[-1]}")
        widths = [(0, 0)] * (x.ndim - 1) + [(self._pad.left, self._pad.right)]
        blocks = _frames(np.pad(x, widths), self._pad) * self._window
        return self._block.analysis(blocks)

    def synthesis(self, z) -> np.ndarray:
        blocks = self._block.synthesis(z) * self._window
        return _fold(blocks, self._pad)


@dataclass
class DeclipStats:
    """Per-block (or single whole-signal) statistics of one declipping run."""

    algorithm: str
    mode: str
    blocks: list[IterationStats] = field(default_factory=list)
    clipped_violations: int = 0
    max_clipped_violation: float = 0.0

    @property
    def iterations(self) -> int:
        return sum(b.iterations for b in self.blocks)

    @property
    def mean_iterations(self) -> float:
        return self.iterations / len(self.blocks) if self.blocks else 0.0

    @property
    def analysis_calls(self) -> int:
        return sum(b.analysis_calls for b in self.blocks)

    @property
    def synthesis_calls(self) -> int:
        return sum(b.synthesis_calls for b in self.blocks)

    @property
    def max_gamma_residual(self) -> float:
        return max((b.gamma_residual for b in self.blocks), default=0.0)

    @property
    def max_call_gap(self) -> int:
        """Largest per-block ``|analysis_calls - synthesis_calls|``."""
        return max((abs(b.analysis_calls - b.synthesis_calls) for b in self.blocks), default=0)

    def terminations(self) -> dict:
        counts: dict[str, int] = {}
        for b in self.blocks:
            counts[b.terminated_by] = counts.get(b.terminated_by, 0) + 1
        return counts

    def to_dict(self, traces: bool = False) -> dict:
        return {
            "algorithm": self.algorithm,
            "mode": self.mode,
            "n_blocks": len(self.blocks),
            "iterations": self.iterations,
            "mean_iterations": self.mean_iterations,
            "analysis_calls": self.analysis_calls,
            "synthesis_calls": self.synthesis_calls,
            "max_call_gap": self.max_call_gap,
            "max_gamma_residual": self.max_gamma_residual,
            "clipped_violations": self.clipped_violations,
            "max_clipped_violation": self.max_clipped_violation,
            "terminations": self.terminations(),
            "blocks": [b.to_dict(trace=traces) for b in self.blocks],
        }


def _check_inputs(y, mask: ClipMask, algo: str) -> np.ndarray:
    samples = _samples(y)
    if samples.shape != mask.high.shape:
        raise DataError(f"signal has {samples.size} samples but mask has {len(mask)}")
    if algo not in ALGORITHMS:
        raise DataError(f"unknown algorithm {algo!r}; choose from {ALGORITHMS}")
    return samples


def _finish(y: np.ndarray, x: np.ndarray, mask: ClipMask, stats: DeclipStats) -> np.ndarray:
    x = x.copy()
    reliable = mask.reliable
    x[reliable] = y[reliable]
    theta = mask.theta_c
    gaps = np.concatenate([theta - x[mask.high], x[mask.low] + theta])
    bad = gaps > 0
    stats.clipped_violations = int(np.count_nonzero(bad))
    stats.max_clipped_violation = float(gaps.max(initial=0.0))
    return x


def declip_segmented(
    y, mask: ClipMask, cfg: TransformConfig = TransformConfig(), algo: str = "aspade",
    p: SpadeParams = SpadeParams(),
) -> tuple[Signal, DeclipStats]:
    """Declip block by block and overlap-add the restored blocks.

    Each block is solved against its windowed consistency box. Reliable
    samples of the result are finally overwritten with the observation, so
    they match ``y`` bit for bit; samples that land on the wrong side of the
    threshold after overlap-add are counted in the stats, not clamped.
    """
    samples = _check_inputs(y, mask, algo)
    rate = y.sample_rate if isinstance(y, Signal) else 16000
    w = make_window(cfg.window_kind, cfg.win_len)
    dual = dual_window(w, cfg.hop)

    pad = Padding.for_signal(samples.size, cfg.win_len, cfg.hop)
    raw = _frames(np.pad(samples, (pad.left, pad.right)), pad)
    high = _frames(np.pad(mask.high, (pad.left, pad.right)), pad)
    low = _frames(np.pad(mask.low, (pad.left, pad.right)), pad)
    bounds = windowed_bounds(raw, high, low, mask.theta_c, w)

    restored, block_stats = run_batch(algo, raw * w, bounds, cfg.frame(), p)
    stats = DeclipStats(algo, "segmented", block_stats)
    x = _finish(samples, _fold(restored * dual, pad), mask, stats)
    log.info(
        "%s segmented: %d blocks, %d iterations", algo, pad.n_blocks, stats.iterations
    )
    return Signal(x, rate), stats


def declip_whole(
    y, mask: ClipMask, cfg: TransformConfig = TransformConfig(mode="whole_signal"),
    algo: str = "aspade", p: SpadeParams = WHOLE_SIGNAL_PARAMS,
) -> tuple[Signal, DeclipStats]:
    """Declip with one global Gabor frame, thresholding all blocks jointly."""
    samples = _check_inputs(y, mask, algo)
    if samples.size > MAX_WHOLE_SAMPLES:
        raise DataError(
            f"whole-signal mode is limited to {MAX_WHOLE_SAMPLES} samples, got {samples.size}"
        )
    rate = y.sample_rate if isinstance(y, Signal) else 16000
    frame = GaborFrame.from_config(samples.size, cfg)
    b = make_bounds(samples, mask)
    restored, block_stats = run_batch(
        algo, samples[None], Bounds(b.lo[None], b.hi[None]), frame, p
    )
    stats = DeclipStats(algo, "whole_signal", block_stats)
    x = _finish(samples, restored[0], mask, stats)
    return Signal(x, rate), stats


def declip(y, mask: ClipMask, cfg: TransformConfig, algo: str = "aspade", p: SpadeParams | None = None):
    """Run the mode selected by ``cfg.mode`` with mode-appropriate defaults."""
    if cfg.mode == "whole_signal":
        return declip_whole(y, mask, cfg, algo, p or WHOLE_SIGNAL_PARAMS)
    return declip_segmented(y, mask, cfg, algo, p or SpadeParams())
