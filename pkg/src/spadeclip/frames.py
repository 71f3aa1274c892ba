"""Parseval tight frames built from the (oversampled) DFT.

``FrameOperator(L, M)`` maps a real block of ``L`` samples to ``M >= L``
complex coefficients by zero-padding to ``M`` and taking the unitary DFT.
Its adjoint, the synthesis operator, inverts the DFT, truncates to ``L``
samples and keeps the real part, so ``synthesis(analysis(x)) == x``.

All operators act on the last axis; leading axes are treated as a batch.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError


@dataclass(frozen=True)
class FrameOperator:
    """Oversampled DFT frame with ``channels`` bins for blocks of ``block_len``."""

    block_len: int
    channels: int

    def __post_init__(self):
        if self.block_len < 1 or self.channels < 1:
            raise DataError("block length and channel count must be positive")
        if self.channels < self.block_len:
            raise DataError(
                f"need channels >= block_len, got M={self.channels} < L={self.block_len}"
            )

    @classmethod
    def with_redundancy(cls, block_len: int, redundancy: int = 1) -> "FrameOperator":
        return cls(block_len, int(redundancy) * block_len)

    @property
    def redundancy(self) -> float:
        return self.channels / self.block_len

    @property
    def n_groups(self) -> int:
        """Number of conjugate-pair groups (DC, pairs, Nyquist if M is even)."""
        return self.channels // 2 + 1

    def analysis(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.block_len:
            raise DataError(f"expected blocks of {self.block_len} samples, got {x.shape[-1]}")
        return np.fft.fft(x, n=self.channels, axis=-1) / np.sqrt(self.channels)

    def synthesis(self, z) -> np.ndarray:
        z = np.asarray(z)
        if z.shape[-1] != self.channels:
            raise DataError(f"expected {self.channels} coefficients, got {z.shape[-1]}")
        full = np.fft.ifft(z, axis=-1) * np.sqrt(self.channels)
        return np.ascontiguousarray(full[..., : self.block_len].real)


@dataclass(frozen=True, eq=False)
class MatrixFrame:
    """Tight frame given by an explicit complex ``L x M`` matrix ``Q``.

    Synthesis is ``Re(Q z)`` and analysis ``Q^H x``; the pair is tight when
    ``Re(Q Q^H) = I``. Used to test projections on generic frames.
    """

    matrix: np.ndarray

    @property
    def block_len(self) -> int:
        return self.matrix.shape[0]

    @property
    def channels(self) -> int:
        return self.matrix.shape[1]

    def analysis(self, x) -> np.ndarray:
        return np.asarray(x, dtype=np.float64) @ self.matrix.conj()

    def synthesis(self, z) -> np.ndarray:
        return (np.asarray(z) @ self.matrix.T).real

    @classmethod
    def random(cls, block_len: int, channels: int, rng=None) -> "MatrixFrame":
        """Random complex matrix with orthonormal rows (so ``Q Q^H = I``)."""
        rng = np.random.default_rng(rng)
        g = rng.standard_normal((channels, block_len)) + 1j * rng.standard_normal(
            (channels, block_len)
        )
        q, _ = np.linalg.qr(g)
        return cls(np.ascontiguousarray(q.T))


def verify_tight(f, trials: int = 100, seed: int = 0) -> float:
    """Largest relative error of ``synthesis(analysis(x))`` over random blocks."""
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((trials, f.block_len))
    err = np.linalg.norm(f.synthesis(f.analysis(x)) - x, axis=-1)
    return float(np.max(err / np.linalg.norm(x, axis=-1)))


def conjugate_residual(z) -> float:
    """Max deviation of ``z`` from conjugate symmetry along the last axis."""
    z = np.asarray(z)
    mirrored = np.roll(z[..., ::-1], 1, axis=-1)
    return float(np.max(np.abs(z - mirrored.conj()), initial=0.0))
