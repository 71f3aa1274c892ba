"""A-SPADE and S-SPADE declipping loops.

Both variants alternate hard thresholding with a projection onto the
consistency set, accumulating a dual variable ``u``. They are implemented for
a batch of independent problems that iterate in lockstep: every problem runs
the same iteration counter (hence the same ``k``) and drops out of the batch
once it terminates. A single block is a batch of one.

Operator calls are counted per problem. Both variants spend one analysis and
one synthesis per iteration plus one initial analysis.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .clip_model import Bounds, violation
from .errors import DataError, NumericalError
from .sparsity import SpadeParams, hard_threshold

log = logging.getLogger(__name__)

ALGORITHMS = ("aspade", "sspade")

EPSILON_REACHED = "epsilon_reached"
MAX_ITER = "max_iter"
K_SATURATED = "k_saturated"


@dataclass
class IterationStats:
    iterations: int = 0
    final_k: int = 0
    residual_trace: list = field(default_factory=list)
    analysis_calls: int = 0
    synthesis_calls: int = 0
    terminated_by: str = ""
    gamma_residual: float = 0.0

    def to_dict(self, trace: bool = True) -> dict:
        out = {
            "iterations": self.iterations,
            "final_k": self.final_k,
            "analysis_calls": self.analysis_calls,
            "synthesis_calls": self.synthesis_calls,
            "terminated_by": self.terminated_by,
            "gamma_residual": self.gamma_residual,
        }
        if trace:
            out["residual_trace"] = [float(r) for r in self.residual_trace]
        return out


def _problem_norm(a: np.ndarray) -> np.ndarray:
    axes = tuple(range(1, a.ndim))
    return np.sqrt(np.sum(np.abs(a) ** 2, axis=axes))


def _select(b: Bounds, idx) -> Bounds:
    return Bounds(b.lo[idx], b.hi[idx])


def _run(variant, Y, b: Bounds, op, p: SpadeParams):
    if variant not in ALGORITHMS:
        raise DataError(f"unknown algorithm {variant!r}")
    Y = np.asarray(Y, dtype=np.float64)
    if Y.shape != b.lo.shape:
        raise DataError(f"blocks of shape {Y.shape} do not match bounds {b.lo.shape}")
    if np.any(Y < b.lo) or np.any(Y > b.hi):
        raise DataError("observation lies outside its own consistency set")

    n = Y.shape[0]
    total_groups = op.n_groups
    saturation_limit = op.block_len

    X = Y.copy()
    C = op.analysis(Y)  # A x for A-SPADE, z-hat for S-SPADE
    n_analysis = np.ones(n, dtype=int)
    n_synthesis = np.zeros(n, dtype=int)
    stats = [IterationStats() for _ in range(n)]

    # working copies hold only the problems still iterating
    active = np.arange(n)
    coefs, u = C.copy(), np.zeros_like(C)
    lo, hi = b.lo, b.hi
    i, k = 1, p.s
    saturated_for = 0
    while active.size:
        k_eff = min(k, total_groups)
        if k >= total_groups:
            saturated_for += 1

        zbar = hard_threshold(coefs + u, k_eff, batch_ndim=1, check=False)
        v = zbar - u
        # proj_time / proj_synthesis inlined so both share the one synthesis
        dv = op.synthesis(v)
        x_new = np.minimum(np.maximum(lo, dv), hi)
        if variant == "aspade":
            coefs = op.analysis(x_new)
        else:
            coefs = v - op.analysis(dv - x_new)
        n_synthesis[active] += 1
        n_analysis[active] += 1

        diff = coefs - zbar
        res = _problem_norm(diff)
        if not np.all(np.isfinite(res)):
            raise NumericalError(f"non-finite residual in {variant} at iteration {i}")
        u = u + diff
        for j, r in zip(active, res):
            stats[j].residual_trace.append(float(r))

        done = res <= p.epsilon
        if saturated_for >= saturation_limit:
            reason = np.where(done, EPSILON_REACHED, K_SATURATED)
        elif i >= p.max_iter:
            reason = np.where(done, EPSILON_REACHED, MAX_ITER)
        else:
            reason = np.where(done, EPSILON_REACHED, "")
        finished = reason != ""
        if finished.any():
            rows = active[finished]
            X[rows] = x_new[finished]
            C[rows] = coefs[finished]
            for j, why in zip(rows, reason[finished]):
                st = stats[j]
                st.iterations = i
                st.final_k = k_eff
                st.terminated_by = str(why)
            keep = ~finished
            active = active[keep]
            coefs, u, lo, hi = coefs[keep], u[keep], lo[keep], hi[keep]

        i += 1
        if i % p.r == 0:
            k += p.s

    for j, st in enumerate(stats):
        st.analysis_calls = int(n_analysis[j])
        st.synthesis_calls = int(n_synthesis[j])
        st.gamma_residual = violation(X[j], _select(b, j))
    return X, C, stats


def _single(variant, y, b, f, p):
    y = np.asarray(y, dtype=np.float64)
    X, Z, stats = _run(variant, y[None], Bounds(b.lo[None], b.hi[None]), f, p)
    return X[0], Z[0], stats[0]


def aspade(y_block, b: Bounds, f, p: SpadeParams = SpadeParams()):
    """Analysis (cosparse) SPADE on one block.

    Returns the restored block, which always lies inside ``b`` because the
    last step of every iteration is a box projection, and its statistics.
    """
    x, _, st = _single("aspade", y_block, b, f, p)
    return x, st


def sspade(y_block, b: Bounds, f, p: SpadeParams = SpadeParams()):
    """Synthesis (sparse) SPADE on one block using the closed-form projection.

    Returns ``(x, z, stats)`` with ``x = D z``. ``x`` is taken from the clamp
    inside the final projection, which equals ``D z`` for a tight frame and
    lies inside ``b`` exactly.
    """
    return _single("sspade", y_block, b, f, p)


def aspade_batch(Y, b: Bounds, f, p: SpadeParams = SpadeParams()):
    X, _, stats = _run("aspade", Y, b, f, p)
    return X, stats


def sspade_batch(Y, b: Bounds, f, p: SpadeParams = SpadeParams()):
    return _run("sspade", Y, b, f, p)


def run_batch(algo: str, Y, b: Bounds, f, p: SpadeParams = SpadeParams()):
    """Dispatch by name; returns ``(X, stats)`` for either variant."""
    X, _, stats = _run(algo, Y, b, f, p)
    return X, stats
