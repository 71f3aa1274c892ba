"""Hard thresholding of conjugate-symmetric spectra and the sparsity schedule."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .frames import conjugate_residual

SYMMETRY_TOL = 1e-9


@dataclass(frozen=True)
class SpadeParams:
    """Sparsity relaxation settings.

    ``k`` starts at ``s`` and grows by ``s`` every ``r``-th iteration; the loop
    stops once the residual drops to ``epsilon`` (absolute l2 norm).
    """

    s: int = 1
    r: int = 1
    epsilon: float = 0.1
    max_iter: int = 3000

    def __post_init__(self):
        if self.s < 1 or self.r < 1:
            raise DataError(f"s and r must be >= 1, got s={self.s}, r={self.r}")
        if not self.epsilon > 0:
            raise DataError(f"epsilon must be positive, got {self.epsilon}")
        if self.max_iter < 1:
            raise DataError(f"max_iter must be >= 1, got {self.max_iter}")


def current_k(iteration: int, p: SpadeParams) -> int:
    """Sparsity level used in the given 1-based iteration.

    Mirrors the loop counter of the algorithm listing: after iteration ``i``
    the counter becomes ``i + 1`` and ``k`` grows by ``s`` whenever the new
    counter is a multiple of ``r``.
    """
    if iteration < 1:
        raise DataError("iterations are counted from 1")
    # multiples of r in 2..iteration
    bumps = iteration // p.r - (1 if p.r == 1 else 0)
    return p.s * (1 + bumps)


def group_index(channels: int) -> np.ndarray:
    """Map each bin to its conjugate-pair group (the lower bin of the pair)."""
    m = np.arange(channels)
    return np.minimum(m, (channels - m) % channels)


def n_groups(channels: int) -> int:
    return channels // 2 + 1


def hard_threshold(z, k: int, batch_ndim: int = 0, check: bool = True) -> np.ndarray:
    """Keep the ``k`` largest conjugate-pair groups, zero the rest.

    Groups ``{m, M-m}`` are ranked by the modulus of bin ``m``; ties go to the
    lower (flattened) index. Everything after the first ``batch_ndim`` axes of
    ``z`` is one problem, so a ``(J, M)`` array with ``batch_ndim=0`` is ranked
    jointly across all ``J`` spectra, while ``batch_ndim=1`` ranks each row
    independently.
    """
    z = np.asarray(z)
    if k < 0:
        raise DataError(f"k must be non-negative, got {k}")
    if check:
        scale = max(1.0, float(np.max(np.abs(z), initial=0.0)))
        if conjugate_residual(z) > SYMMETRY_TOL * scale:
            raise DataError("hard thresholding expects conjugate-symmetric coefficients")

    channels = z.shape[-1]
    half = n_groups(channels)
    batch_shape = z.shape[:batch_ndim]
    mags = np.abs(z[..., :half]).reshape(batch_shape + (-1,))
    total = mags.shape[-1]
    if k >= total:
        return z.copy()

    keep = _top_k(mags, k)
    keep = keep.reshape(z.shape[:-1] + (half,))[..., group_index(channels)]
    return np.where(keep, z, 0)


def _top_k(mags: np.ndarray, k: int) -> np.ndarray:
    """Boolean mask of the ``k`` largest entries per row, ties to lower index.

    Same selection as a stable descending sort, in linear time.
    """
    if k == 0:
        return np.zeros(mags.shape, dtype=bool)
    kth = -np.partition(-mags, k - 1, axis=-1)[..., k - 1 : k]
    above = mags > kth
    tied = mags == kth
    room = k - np.count_nonzero(above, axis=-1, keepdims=True)
    return above | (tied & (np.cumsum(tied, axis=-1) <= room))
