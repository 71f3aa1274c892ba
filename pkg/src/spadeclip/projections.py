"""Projections onto the consistency set.

``proj_time`` is the time-domain step of the analysis variant. ``proj_synthesis``
is the closed-form coefficient-domain projection of the synthesis variant,
valid whenever the synthesis operator ``D`` satisfies ``D D* = I``:

    proj(v) = v - D*(D v - clamp(D v))

``proj_oracle`` solves the same problem with Dykstra's algorithm over the
individual slab constraints. It needs nothing but the matrix of ``D`` and is
used to validate the closed form on small problems.
"""

from __future__ import annotations

import numpy as np

from .clip_model import Bounds
from .errors import ConvergenceError, DataError


def _check_len(n, b: Bounds):
    if n != b.lo.shape[-1]:
        raise DataError(f"vector of length {n} does not match bounds of length {len(b)}")


def proj_box(w, b: Bounds) -> np.ndarray:
    w = np.asarray(w, dtype=np.float64)
    _check_len(w.shape[-1], b)
    return np.minimum(np.maximum(b.lo, w), b.hi)


def proj_time(v, f, b: Bounds) -> np.ndarray:
    return proj_box(f.synthesis(v), b)


def proj_synthesis(v, f, b: Bounds) -> np.ndarray:
    v = np.asarray(v)
    dv = f.synthesis(v)
    return v - f.analysis(dv - proj_box(dv, b))


def synthesis_matrix(f) -> np.ndarray:
    """Real ``L x 2M`` matrix of ``z -> D z`` acting on ``[Re z, Im z]``."""
    eye = np.eye(f.channels)
    re_cols = f.synthesis(eye.astype(complex))
    im_cols = f.synthesis(1j * eye)
    return np.hstack([re_cols.T, im_cols.T])


def proj_oracle(v, f, b: Bounds, tol: float = 1e-12, max_iter: int = 100_000) -> np.ndarray:
    """Nearest ``z`` to ``v`` with ``D z`` inside ``b``, by Dykstra's algorithm.

    The feasible set is the intersection of one slab ``lo[n] <= <d_n, z> <= hi[n]``
    per output sample. Dykstra cycles through exact slab projections with
    correction terms, which converges to the Euclidean projection onto the
    intersection without using tightness of ``D``. Meant for small sizes only.
    """
    v = np.asarray(v, dtype=complex)
    channels = v.shape[-1]
    if channels != f.channels:
        raise DataError(f"expected {f.channels} coefficients, got {channels}")
    _check_len(f.block_len, b)

    K = synthesis_matrix(f)
    row_norm2 = np.einsum("ij,ij->i", K, K)
    x = np.concatenate([v.real, v.imag])
    corrections = np.zeros_like(K)

    for _ in range(max_iter):
        previous = x.copy()
        for n in range(K.shape[0]):
            y = x + corrections[n]
            a = K[n] @ y
            target = min(max(b.lo[n], a), b.hi[n])
            step = (a - target) / row_norm2[n] * K[n]
            x_new = y - step
            corrections[n] = y - x_new
            x = x_new
        if np.linalg.norm(x - previous) < tol:
            break
    else:
        raise ConvergenceError(f"Dykstra projection did not converge in {max_iter} sweeps")
    return x[:channels] + 1j * x[channels:]
