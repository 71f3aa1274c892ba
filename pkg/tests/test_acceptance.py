"""Acceptance criteria, one test per criterion.

Each test records a PASS/FAIL (or WARN for the two trend checks) line that is
printed in the terminal summary. Declipping runs are produced once by
module-scoped fixtures and shared between criteria.
"""

import time
import warnings

import numpy as np
import pytest

from spadeclip.audio_io import Signal, as_float32, read_wav, write_wav
from spadeclip.clip_model import Bounds, hard_clip
from spadeclip.experiments import (
    TIMING_COLUMNS,
    ExperimentConfig,
    make_synthetic,
    run_experiment,
)
from spadeclip.frames import FrameOperator, MatrixFrame
from spadeclip.metrics import delta_sdr_invariance_check
from spadeclip.projections import proj_oracle, proj_synthesis
from spadeclip.segmentation import (
    TransformConfig,
    declip_segmented,
    declip_whole,
    overlap_add,
    segment,
)
from spadeclip.sparsity import hard_threshold, n_groups

pytestmark = pytest.mark.slow

REPORT = {}
RATE = 16000


def record(number, title, ok, detail, soft=False):
    status = "PASS" if ok else ("WARN" if soft else "FAIL")
    line = f"criterion {number:2d} {status}  {title}: {detail}"
    REPORT[number] = line
    print(line)
    if soft and not ok:
        warnings.warn(line)
        return
    assert ok, line


class Run:
    """One declipping run with everything needed for scoring."""

    def __init__(self, label, x, theta, cfg, algo, whole=False, **kw):
        self.label, self.algo = label, algo
        self.x = x
        self.y, self.mask = hard_clip(x, theta)
        start = time.perf_counter()
        fn = declip_whole if whole else declip_segmented
        self.x_hat, self.stats = fn(self.y, self.mask, cfg, algo, **kw)
        self.seconds = time.perf_counter() - start
        self.delta_whole, self.delta_clipped = delta_sdr_invariance_check(
            x, self.y, self.x_hat, self.mask
        )


def corpus(n, duration=5.0, seed=0, kinds=("sparse_sines",)):
    return [make_synthetic(kinds[i % len(kinds)], seed=[seed, i], duration=duration)
            for i in range(n)]


@pytest.fixture(scope="module")
def unitary_runs():
    """Twenty mixed signals, one second each, redundancy 1, both algorithms."""
    signals = corpus(20, 1.0, seed=11, kinds=("sparse_sines", "chirp", "noise_mix"))
    thetas = np.linspace(0.2, 0.8, 20)
    cfg = TransformConfig()
    return [(Run(f"u{i}", x, th, cfg, "aspade"), Run(f"u{i}", x, th, cfg, "sspade"))
            for i, (x, th) in enumerate(zip(signals, thetas))]


@pytest.fixture(scope="module")
def quality_runs():
    """Five 5 s sparse_sines signals under the default segmented settings."""
    start = time.perf_counter()
    runs = {}
    for th in (0.1, 0.3, 0.5, 0.9):
        for algo in ("aspade", "sspade"):
            runs[th, algo] = [Run(f"q{i}", x, th, TransformConfig(), algo)
                              for i, x in enumerate(corpus(5))]
    return runs, time.perf_counter() - start


@pytest.fixture(scope="module")
def redundancy2_runs():
    cfg = TransformConfig(redundancy=2)
    return {algo: [Run(f"r{i}", x, 0.3, cfg, algo) for i, x in enumerate(corpus(5))]
            for algo in ("aspade", "sspade")}


@pytest.fixture(scope="module")
def overlap_runs():
    runs = {}
    for overlap in (0.25, 0.5, 0.75):
        cfg = TransformConfig(overlap_fraction=overlap, redundancy=2)
        runs[overlap] = [Run(f"o{i}", x, th, cfg, "aspade")
                         for i, x in enumerate(corpus(5)) for th in (0.2, 0.4)]
    return runs


@pytest.fixture(scope="module")
def whole_runs():
    cfg = TransformConfig(512, mode="whole_signal")
    return [Run(f"w{i}", x, 0.4, cfg, algo, whole=True)
            for i, x in enumerate(corpus(2, 0.5, seed=5)) for algo in ("aspade", "sspade")]


@pytest.fixture(scope="module")
def all_runs(unitary_runs, quality_runs, redundancy2_runs, overlap_runs, whole_runs):
    runs = [r for pair in unitary_runs for r in pair]
    runs += [r for group in quality_runs[0].values() for r in group]
    runs += [r for group in redundancy2_runs.values() for r in group]
    runs += [r for group in overlap_runs.values() for r in group]
    return runs + whole_runs


def test_criterion_01_tight_frame_identity():
    rng = np.random.default_rng(0)
    start = time.perf_counter()
    worst = 0.0
    for L in (512, 1024, 2048, 4096):
        for red in (1, 2, 4):
            f = FrameOperator.with_redundancy(L, red)
            x = rng.standard_normal((100, L))
            err = np.linalg.norm(f.synthesis(f.analysis(x)) - x, axis=1) / np.linalg.norm(x, axis=1)
            worst = max(worst, err.max())
    elapsed = time.perf_counter() - start
    record(1, "tight-frame identity", worst <= 1e-10 and elapsed < 10,
           f"max rel. error {worst:.2e} (<= 1e-10), {elapsed:.2f} s (< 10 s)")


def _random_projection_instance(rng):
    L = int(rng.integers(1, 9))
    M = int(rng.integers(L, 17))
    f = MatrixFrame.random(L, M, rng)
    v = 2 * (rng.standard_normal(M) + 1j * rng.standard_normal(M))
    centre = rng.standard_normal(L)
    lo, hi = centre.copy(), centre.copy()
    kind = rng.integers(0, 4, L)
    hi[kind == 1] = np.inf
    lo[kind == 2] = -np.inf
    lo[kind == 3] -= rng.uniform(0, 1, np.count_nonzero(kind == 3))
    return f, v, Bounds(lo, hi)


def test_criterion_02_projection_lemma_vs_oracle():
    rng = np.random.default_rng(2)
    gap = infeasible = 0.0
    for _ in range(100):
        f, v, b = _random_projection_instance(rng)
        lemma = proj_synthesis(v, f, b)
        gap = max(gap, np.linalg.norm(lemma - proj_oracle(v, f, b)))
        dz = f.synthesis(lemma)
        infeasible = max(infeasible, np.max(np.maximum(b.lo - dz, 0) + np.maximum(dz - b.hi, 0)))
    record(2, "projection lemma vs oracle", gap <= 1e-6 and infeasible <= 1e-10,
           f"max distance {gap:.2e} (<= 1e-6), max violation {infeasible:.2e} (<= 1e-10)")


def test_criterion_03_unitary_equivalence(unitary_runs):
    diff = max(np.max(np.abs(a.x_hat.samples - s.x_hat.samples)) for a, s in unitary_runs)
    same_iters = all(
        [b.iterations for b in a.stats.blocks] == [b.iterations for b in s.stats.blocks]
        for a, s in unitary_runs
    )
    record(3, "unitary equivalence", diff <= 1e-8 and same_iters,
           f"{len(unitary_runs)} signals, max sample difference {diff:.2e} (<= 1e-8), "
           f"equal per-block iteration counts: {same_iters}")


def test_criterion_04_full_consistency(all_runs):
    reliable_equal = all(
        np.array_equal(r.x_hat.samples[r.mask.reliable], r.y.samples[r.mask.reliable])
        for r in all_runs
    )
    gamma = max(r.stats.max_gamma_residual for r in all_runs)
    record(4, "full consistency", reliable_equal and gamma <= 1e-9,
           f"{len(all_runs)} runs, reliable samples bit-equal: {reliable_equal}, "
           f"max windowed residual {gamma:.2e} (<= 1e-9)")


def test_criterion_05_delta_sdr_invariance(all_runs):
    gap = max(abs(r.delta_whole - r.delta_clipped) for r in all_runs)
    record(5, "delta-SDR invariance", gap <= 1e-9,
           f"{len(all_runs)} runs, max |whole - clipped-only| {gap:.2e} dB (<= 1e-9)")


def test_criterion_06_cost_parity(all_runs):
    gap = max(r.stats.max_call_gap for r in all_runs)
    record(6, "cost parity", gap <= 1,
           f"{len(all_runs)} runs, max per-block |analysis - synthesis| calls {gap} (<= 1)")


def test_criterion_07_restoration_quality(quality_runs):
    runs, elapsed = quality_runs
    means = {algo: np.mean([r.delta_whole for r in runs[0.3, algo]]) for algo in ("aspade", "sspade")}
    all_values = [r.delta_whole for group in runs.values() for r in group]
    at_09 = min(r.delta_whole for algo in ("aspade", "sspade") for r in runs[0.9, algo])
    ok = min(means.values()) >= 5 and at_09 >= 0 and min(all_values) >= 0 and elapsed < 300
    record(7, "restoration quality floor", ok,
           f"mean dSDR at 0.3: A {means['aspade']:.2f} / S {means['sspade']:.2f} dB (>= 5); "
           f"min at 0.9 {at_09:.2f} dB, min overall {min(all_values):.2f} dB (>= 0); "
           f"{elapsed:.0f} s (< 300 s)")


def test_criterion_08_iteration_trend(redundancy2_runs):
    mean = {a: np.mean([r.stats.mean_iterations for r in runs])
            for a, runs in redundancy2_runs.items()}
    record(8, "iteration-count trend", mean["sspade"] <= mean["aspade"],
           f"mean iterations per block S {mean['sspade']:.1f} <= A {mean['aspade']:.1f}", soft=True)


def test_criterion_09_overlap_trend(overlap_runs):
    mean = {ov: np.mean([r.delta_whole for r in runs]) for ov, runs in overlap_runs.items()}
    ok = mean[0.75] >= mean[0.5] >= mean[0.25]
    record(9, "overlap trend", ok,
           f"A-SPADE mean dSDR 75% {mean[0.75]:.2f} >= 50% {mean[0.5]:.2f} >= 25% {mean[0.25]:.2f} dB",
           soft=True)


def _csv_without_timing(path):
    lines = path.read_text().splitlines()
    header = lines[0].split(",")
    drop = {header.index(c) for c in TIMING_COLUMNS if c in header}
    return [[v for i, v in enumerate(line.split(",")) if i not in drop] for line in lines]


def test_criterion_10_pipeline_reconstruction(tmp_path):
    rng = np.random.default_rng(10)
    worst = 0.0
    for L in (512, 1024, 2048, 4096):
        x = rng.standard_normal(3 * L + 101)
        for kind in ("hann", "rect", "sqrt_hann"):
            for overlap in (0.25, 0.5, 0.75):
                cfg = TransformConfig(L, overlap, kind)
                blocks, pad = segment(x, cfg)
                err = np.linalg.norm(overlap_add(blocks, cfg, pad) - x) / np.linalg.norm(x)
                worst = max(worst, err)

    sig = as_float32(Signal(rng.uniform(-1, 1, 5 * RATE)))
    write_wav(tmp_path / "rt.wav", sig)
    wav_exact = np.array_equal(read_wav(tmp_path / "rt.wav").samples, sig.samples)

    cfg = dict(corpus=["sparse_sines", "chirp"], thresholds=[0.3, 0.6], win_lens=[512],
               redundancies=[1, 2], duration=0.5, seed=3, blockwise=True, blockwise_len=2048)
    first = run_experiment(ExperimentConfig(**cfg, output_dir=str(tmp_path / "a"))).files
    second = run_experiment(ExperimentConfig(**cfg, output_dir=str(tmp_path / "b"))).files
    deterministic = all(
        _csv_without_timing(first[k]) == _csv_without_timing(second[k])
        for k in ("results", "summary", "input_sdr", "blockwise")
    )
    record(10, "pipeline reconstruction", worst <= 1e-10 and wav_exact and deterministic,
           f"max segment/overlap-add rel. error {worst:.2e} (<= 1e-10), "
           f"WAV round trip bit-exact: {wav_exact}, identical CSVs: {deterministic}")


def test_criterion_11_threshold_realness():
    rng = np.random.default_rng(11)
    worst = 0.0
    for L, red in ((64, 2), (63, 1), (30, 4)):
        f = FrameOperator.with_redundancy(L, red)
        M = f.channels
        Z = f.analysis(rng.standard_normal((1000, L)))
        for k in range(n_groups(M) + 1):
            kept = hard_threshold(Z, k, batch_ndim=1)
            imag = (np.sqrt(M) * np.fft.ifft(kept, axis=-1)[:, :L]).imag
            worst = max(worst, np.abs(imag).max())
    record(11, "hard-threshold realness", worst <= 1e-12,
           f"1000 blocks x all k, max imaginary residual {worst:.2e} (<= 1e-12)")
