"""Batch experiments: synthetic corpora, clip masks on disk and sweep runners.

A run clips every corpus signal at every threshold, declips it with every
transform/algorithm combination and writes

* ``results.csv``  one row per (signal, threshold, transform, algorithm)
* ``summary.csv``  mean improvement per cell, averaged over signals in dB
* ``input_sdr.csv`` mean input SDR per threshold, whole signal vs clipped only
* ``blockwise.csv`` (optional) per-block SDR of both algorithms side by side
* ``run.json``     the resolved configuration

Everything except the ``wall_time_s`` column is a deterministic function of
the configuration.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .audio_io import Signal, peak_normalize, read_wav
from .clip_model import ClipMask, hard_clip
from .errors import DataError, SpadeError
from .metrics import blockwise_sdr, delta_sdr_invariance_check, format_db, sdr, sdr_clipped_only
from .segmentation import TransformConfig, declip
from .spade import ALGORITHMS
from .sparsity import SpadeParams

log = logging.getLogger(__name__)

THRESHOLD_GRID = tuple(round(0.1 * i, 1) for i in range(1, 10))
DEFAULT_RATE = 16000
GENERATORS = ("sparse_sines", "chirp", "noise_mix")


# synthetic signals ---------------------------------------------------------

def parse_synth_spec(text: str) -> dict:
    """Parse ``"name"`` or ``"name:key=value,key=value"`` into a spec dict."""
    name, _, rest = text.partition(":")
    spec: dict = {"kind": name.strip()}
    for item in filter(None, (part.strip() for part in rest.split(","))):
        key, eq, value = item.partition("=")
        if not eq:
            raise DataError(f"malformed generator option {item!r} (expected key=value)")
        spec[key.strip()] = float(value) if any(c in value for c in ".eE") else int(value)
    return spec


def make_synthetic(spec, seed=0, duration: float = 5.0, sample_rate: int = DEFAULT_RATE) -> Signal:
    """Deterministic, peak-normalized test signal.

    Generators:

    ``sparse_sines``  ``count`` stationary sinusoids (default 5) with random
        amplitudes and phases; frequencies lie on a grid of ``sample_rate/grid``
        Hz (``grid=1024``) between ``fmin`` and ``fmax``.
    ``chirp``  linear sweep from ``f0`` to ``f1`` with a decaying second harmonic.
    ``noise_mix``  ``sparse_sines`` plus white noise; ``sparsity`` in [0, 1] is
        the share of tonal energy.
    """
    if isinstance(spec, str):
        spec = parse_synth_spec(spec)
    spec = dict(spec)
    kind = spec.pop("kind", "sparse_sines")
    duration = float(spec.pop("duration", duration))
    sample_rate = int(spec.pop("sample_rate", sample_rate))
    rng = np.random.default_rng(seed)
    n = max(1, int(round(duration * sample_rate)))
    t = np.arange(n) / sample_rate

    if kind == "sparse_sines":
        x = _sparse_sines(rng, t, sample_rate, **spec)
    elif kind == "chirp":
        f0 = spec.get("f0", 200.0)
        f1 = spec.get("f1", 4000.0)
        phase = 2 * np.pi * (f0 * t + 0.5 * (f1 - f0) / max(duration, 1e-9) * t**2)
        phase += rng.uniform(0, 2 * np.pi)
        x = np.sin(phase) + 0.3 * np.exp(-t) * np.sin(2 * phase)
    elif kind == "noise_mix":
        sparsity = float(spec.pop("sparsity", 0.9))
        if not 0 <= sparsity <= 1:
            raise DataError(f"sparsity must lie in [0, 1], got {sparsity}")
        tonal = _sparse_sines(rng, t, sample_rate, **spec)
        noise = rng.standard_normal(n)
        tonal /= np.sqrt(np.mean(tonal**2))
        noise /= np.sqrt(np.mean(noise**2))
        x = np.sqrt(sparsity) * tonal + np.sqrt(1 - sparsity) * noise
    else:
        raise DataError(f"unknown generator {kind!r}; choose from {GENERATORS}")
    return peak_normalize(Signal(x, sample_rate))


def _sparse_sines(rng, t, sample_rate, count=5, fmin=100.0, fmax=4000.0, grid=1024):
    step = sample_rate / grid
    lo_bin = max(1, int(math.ceil(fmin / step)))
    hi_bin = max(lo_bin, int(math.floor(fmax / step)))
    bins = rng.choice(np.arange(lo_bin, hi_bin + 1), size=int(count), replace=False)
    amps = rng.uniform(0.2, 1.0, size=int(count))
    phases = rng.uniform(0, 2 * np.pi, size=int(count))
    x = np.zeros_like(t)
    for b, a, ph in zip(bins, amps, phases):
        x += a * np.sin(2 * np.pi * b * step * t + ph)
    return x


# mask sidecar --------------------------------------------------------------

def index_runs(flags) -> list[list[int]]:
    """Half-open ``[start, stop)`` runs of ``True`` entries."""
    flags = np.asarray(flags, dtype=bool)
    edges = np.diff(np.concatenate([[0], flags.astype(np.int8), [0]]))
    starts = np.flatnonzero(edges == 1)
    stops = np.flatnonzero(edges == -1)
    return [[int(a), int(b)] for a, b in zip(starts, stops)]


def _from_runs(runs, n) -> np.ndarray:
    flags = np.zeros(n, dtype=bool)
    for start, stop in runs:
        if not 0 <= start < stop <= n:
            raise DataError(f"run [{start}, {stop}) outside a signal of {n} samples")
        flags[start:stop] = True
    return flags


def mask_to_dict(mask: ClipMask) -> dict:
    return {
        "theta_c": mask.theta_c,
        "length": len(mask),
        "high": index_runs(mask.high),
        "low": index_runs(mask.low),
    }


def mask_from_dict(data: dict) -> ClipMask:
    try:
        n = int(data["length"])
        return ClipMask(
            _from_runs(data["high"], n), _from_runs(data["low"], n), float(data["theta_c"])
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"malformed mask sidecar: {exc}") from exc


def save_mask(path, mask: ClipMask) -> None:
    # one key per line, runs kept on a single line each
    data = mask_to_dict(mask)
    lines = [f"  {json.dumps(k)}: {json.dumps(v)}" for k, v in data.items()]
    Path(path).write_text("{\n" + ",\n".join(lines) + "\n}\n")


def load_mask(path) -> ClipMask:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot read mask sidecar {path}: {exc}") from exc
    return mask_from_dict(data)


# experiment runner ---------------------------------------------------------

@dataclass
class ExperimentConfig:
    corpus: list = field(default_factory=lambda: ["sparse_sines"] * 5)
    thresholds: list = field(default_factory=lambda: list(THRESHOLD_GRID))
    win_lens: list = field(default_factory=lambda: [1024])
    overlaps: list = field(default_factory=lambda: [0.75])
    redundancies: list = field(default_factory=lambda: [1])
    window: str = "hann"
    mode: str = "segmented"
    algorithms: list = field(default_factory=lambda: list(ALGORITHMS))
    params: SpadeParams | None = None
    output_dir: str | None = None
    seed: int = 0
    duration: float = 5.0
    sample_rate: int = DEFAULT_RATE
    blockwise: bool = False
    blockwise_len: int = 2048

    def __post_init__(self):
        if isinstance(self.params, dict):
            self.params = SpadeParams(**self.params)
        for name in ("corpus", "thresholds", "win_lens", "overlaps", "redundancies", "algorithms"):
            if not getattr(self, name):
                raise DataError(f"experiment grid {name!r} is empty")
        if any(not 0 < th < 1 for th in self.thresholds):
            raise DataError("clipping thresholds must lie strictly between 0 and 1")
        unknown = set(self.algorithms) - set(ALGORITHMS)
        if unknown:
            raise DataError(f"unknown algorithms {sorted(unknown)}")
        for cfg in self.transforms():  # validates every grid point up front
            cfg.frame()

    def transforms(self) -> list[TransformConfig]:
        return [
            TransformConfig(win, ov, self.window, red, self.mode)
            for win in self.win_lens
            for ov in self.overlaps
            for red in self.redundancies
        ]

    def to_dict(self) -> dict:
        out = asdict(self)
        out["params"] = None if self.params is None else asdict(self.params)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        return cls(**data)

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        try:
            return cls.from_dict(json.loads(Path(path).read_text()))
        except (OSError, json.JSONDecodeError, TypeError) as exc:
            raise DataError(f"cannot load experiment config {path}: {exc}") from exc


# sweeps along the axes studied in the evaluation
PRESETS = {
    "whole": dict(mode="whole_signal", redundancies=[1, 2, 4]),
    "segmented": dict(redundancies=[1, 2, 4]),
    "window_length": dict(redundancies=[2], win_lens=[512, 1024, 2048, 4096]),
    "overlap": dict(redundancies=[2], overlaps=[0.25, 0.5, 0.75]),
}


def preset(name: str, **overrides) -> ExperimentConfig:
    if name not in PRESETS:
        raise DataError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    return ExperimentConfig(**{**PRESETS[name], **overrides})


def load_corpus(cfg: ExperimentConfig) -> list[tuple[str, Signal]]:
    """Resolve corpus entries to ``(name, peak-normalized signal)`` pairs.

    WAV paths are read from disk; anything else is a generator spec. The
    generator for entry ``i`` is seeded with ``(cfg.seed, i)``.
    """
    signals = []
    for i, entry in enumerate(cfg.corpus):
        if isinstance(entry, str) and entry.lower().endswith(".wav"):
            signals.append((Path(entry).stem, peak_normalize(read_wav(entry))))
            continue
        spec = parse_synth_spec(entry) if isinstance(entry, str) else dict(entry)
        name = f"{spec.get('kind', 'sparse_sines')}_{i}"
        sig = make_synthetic(spec, seed=[cfg.seed, i], duration=cfg.duration,
                             sample_rate=cfg.sample_rate)
        signals.append((name, sig))
    return signals


RESULT_COLUMNS = [
    "signal", "theta_c", "mode", "window", "win_len", "overlap", "redundancy", "algorithm",
    "status", "sdr_in_whole", "sdr_in_clipped", "sdr_out_whole", "sdr_out_clipped",
    "delta_sdr_whole", "delta_sdr_clipped", "iterations", "mean_iterations",
    "analysis_calls", "synthesis_calls", "max_call_gap", "max_gamma_residual",
    "clipped_violations", "error", "wall_time_s",
]
TIMING_COLUMNS = ("wall_time_s",)
SUMMARY_COLUMNS = [
    "theta_c", "mode", "window", "win_len", "overlap", "redundancy", "algorithm",
    "n_signals", "mean_delta_sdr_whole", "mean_delta_sdr_clipped", "mean_iterations",
]
CELL_KEYS = ("theta_c", "mode", "window", "win_len", "overlap", "redundancy", "algorithm")


@dataclass
class ExperimentResult:
    rows: list[dict]
    summary: list[dict]
    input_sdr: dict
    blockwise: list[dict]
    files: dict


def _run_cell(name, x, y, mask, tcfg, algo, params) -> dict:
    row = {
        "signal": name, "theta_c": mask.theta_c, "mode": tcfg.mode,
        "window": tcfg.window_kind, "win_len": tcfg.win_len,
        "overlap": tcfg.overlap_fraction, "redundancy": tcfg.redundancy,
        "algorithm": algo, "status": "ok", "error": "",
    }
    if not mask.clipped.any():
        row["status"] = "skipped"
        row["error"] = "no clipped samples"
        return row
    start = time.perf_counter()
    try:
        x_hat, stats = declip(y, mask, tcfg, algo, params)
        whole, clipped = delta_sdr_invariance_check(x, y, x_hat, mask)
    except SpadeError as exc:
        row["status"] = "error"
        row["error"] = f"{type(exc).__name__}: {exc}"
        row["wall_time_s"] = time.perf_counter() - start
        log.warning("cell %s failed: %s", row, exc)
        return row
    row.update(
        sdr_in_whole=sdr(x, y), sdr_in_clipped=sdr_clipped_only(x, y, mask),
        sdr_out_whole=sdr(x, x_hat), sdr_out_clipped=sdr_clipped_only(x, x_hat, mask),
        delta_sdr_whole=whole, delta_sdr_clipped=clipped,
        iterations=stats.iterations, mean_iterations=stats.mean_iterations,
        analysis_calls=stats.analysis_calls, synthesis_calls=stats.synthesis_calls,
        max_call_gap=stats.max_call_gap, max_gamma_residual=stats.max_gamma_residual,
        clipped_violations=stats.clipped_violations,
        wall_time_s=time.perf_counter() - start,
    )
    row["_restored"] = x_hat
    return row


def _summarize(rows: list[dict]) -> list[dict]:
    cells: dict = {}
    for row in rows:
        if row["status"] != "ok":
            continue
        cells.setdefault(tuple(row[k] for k in CELL_KEYS), []).append(row)
    summary = []
    for key, members in cells.items():
        # infinite improvements (perfect restorations) are left out of the mean
        whole = [r["delta_sdr_whole"] for r in members if math.isfinite(r["delta_sdr_whole"])]
        clipped = [r["delta_sdr_clipped"] for r in members
                   if math.isfinite(r["delta_sdr_clipped"])]
        summary.append({
            **dict(zip(CELL_KEYS, key)),
            "n_signals": len(whole),
            "mean_delta_sdr_whole": float(np.mean(whole)) if whole else math.nan,
            "mean_delta_sdr_clipped": float(np.mean(clipped)) if clipped else math.nan,
            "mean_iterations": float(np.mean([r["mean_iterations"] for r in members])),
        })
    return summary


def input_sdr_table(signals, thresholds) -> dict:
    """Mean input SDR per threshold, on whole signals and on clipped samples."""
    table = {"whole signal": [], "clipped samples": []}
    for th in thresholds:
        whole, clipped = [], []
        for _, x in signals:
            y, mask = hard_clip(x, th)
            if not mask.clipped.any():
                continue
            whole.append(sdr(x, y))
            clipped.append(sdr_clipped_only(x, y, mask))
        table["whole signal"].append(float(np.mean(whole)) if whole else math.nan)
        table["clipped samples"].append(float(np.mean(clipped)) if clipped else math.nan)
    return table


def csv_cell(value) -> str:
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return format_db(value)
    return "" if value is None else str(value)


def _write_csv(path: Path, columns, rows) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([csv_cell(row.get(c)) for c in columns])


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    """Run the full grid described by ``cfg``; failures are recorded per row."""
    signals = load_corpus(cfg)
    transforms = cfg.transforms()
    rows, blockwise = [], []
    for name, x in signals:
        for th in cfg.thresholds:
            y, mask = hard_clip(x, th)
            for tcfg in transforms:
                restored = {}
                for algo in cfg.algorithms:
                    row = _run_cell(name, x, y, mask, tcfg, algo, cfg.params)
                    if "_restored" in row:
                        restored[algo] = row.pop("_restored")
                    rows.append(row)
                    log.info("%s theta=%.2f %s/%s/%d %s dSDR=%s", name, th, tcfg.mode,
                             tcfg.window_kind, tcfg.redundancy, algo,
                             csv_cell(row.get("delta_sdr_whole")))
                if cfg.blockwise and restored:
                    blockwise.extend(_blockwise_rows(name, x, th, tcfg, restored, cfg))

    summary = _summarize(rows)
    table = input_sdr_table(signals, cfg.thresholds)
    files = {}
    if cfg.output_dir:
        out = Path(cfg.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        files["results"] = out / "results.csv"
        files["summary"] = out / "summary.csv"
        files["input_sdr"] = out / "input_sdr.csv"
        files["run"] = out / "run.json"
        _write_csv(files["results"], RESULT_COLUMNS, rows)
        _write_csv(files["summary"], SUMMARY_COLUMNS, summary)
        _write_csv(
            files["input_sdr"], ["theta_c", *map(str, cfg.thresholds)],
            [{"theta_c": label, **{str(th): v for th, v in zip(cfg.thresholds, values)}}
             for label, values in table.items()],
        )
        if cfg.blockwise:
            files["blockwise"] = out / "blockwise.csv"
            cols = ["signal", "theta_c", "win_len", "overlap", "redundancy", "block", "start",
                    *(f"sdr_{a}" for a in cfg.algorithms)]
            _write_csv(files["blockwise"], cols, blockwise)
        meta = {"version": __version__, "config": cfg.to_dict(),
                "signals": [name for name, _ in signals], "n_rows": len(rows)}
        files["run"].write_text(json.dumps(meta, indent=2) + "\n")
    return ExperimentResult(rows, summary, table, blockwise, files)


def _blockwise_rows(name, x, theta, tcfg, restored, cfg) -> list[dict]:
    length = min(cfg.blockwise_len, len(x))
    series = {a: blockwise_sdr(x, xh, length) for a, xh in restored.items()}
    first = next(iter(series.values()))
    rows = []
    for i, blk in enumerate(first):
        if blk.skipped:
            continue
        row = {"signal": name, "theta_c": theta, "win_len": tcfg.win_len,
               "overlap": tcfg.overlap_fraction, "redundancy": tcfg.redundancy,
               "block": blk.index, "start": blk.start}
        for algo, values in series.items():
            row[f"sdr_{algo}"] = values[i].sdr
        rows.append(row)
    return rows


def read_results(path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))
