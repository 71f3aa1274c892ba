"""Command-line front end: ``spadeclip {clip,declip,eval,experiment,synth}``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__
from .audio_io import as_float32, peak_normalize, read_wav, write_wav
from .clip_model import detect_mask, hard_clip
from .errors import DataError, NumericalError, SpadeError
from .experiments import (
    ExperimentConfig,
    PRESETS,
    csv_cell,
    load_mask,
    make_synthetic,
    preset,
    run_experiment,
    save_mask,
)
from .metrics import blockwise_sdr, delta_sdr, format_db, sdr
from .segmentation import WHOLE_SIGNAL_PARAMS, TransformConfig, declip
from .spade import ALGORITHMS
from .sparsity import SpadeParams

log = logging.getLogger("spadeclip")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERICAL = 0, 1, 2, 3
MODE_NAMES = {"segmented": "segmented", "whole": "whole_signal"}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _float32(value: float) -> float:
    """Nearest float32 value; clipped WAV samples carry exactly this level."""
    return float(np.float32(value))


def _transform_args(p, multi=False):
    # sweeps leave unset flags as None so presets/config files keep their values
    nargs = "+" if multi else None
    p.add_argument("--win-len", type=int, nargs=nargs, default=None if multi else 1024)
    p.add_argument("--overlap", type=float, nargs=nargs, default=None if multi else 0.75,
                   help="window overlap as a fraction of the window length")
    p.add_argument("--window", choices=("hann", "rect", "sqrt_hann"),
                   default=None if multi else "hann")
    p.add_argument("--redundancy", type=int, nargs=nargs, default=None if multi else 1)
    p.add_argument("--mode", choices=tuple(MODE_NAMES), default=None if multi else "segmented")


def _param_args(p):
    p.add_argument("--s", type=int, default=None,
                   help="sparsity increment (default 1, or 100 in whole mode)")
    p.add_argument("--r", type=int, default=None, help="iterations between increments")
    p.add_argument("--epsilon", type=float, default=None, help="termination tolerance")
    p.add_argument("--max-iter", type=int, default=None)


def _params(args, mode: str) -> SpadeParams:
    base = WHOLE_SIGNAL_PARAMS if mode == "whole_signal" else SpadeParams()
    given = {k: getattr(args, a) for k, a in
             (("s", "s"), ("r", "r"), ("epsilon", "epsilon"), ("max_iter", "max_iter"))
             if getattr(args, a) is not None}
    return SpadeParams(**{**asdict(base), **given})


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="spadeclip", allow_abbrev=False,
                     description="Sparse audio declipping (A-SPADE / S-SPADE).")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("clip", allow_abbrev=False,
                       help="peak-normalize and hard-clip a WAV file")
    p.add_argument("input", type=Path)
    p.add_argument("--theta", type=float, required=True, help="clipping threshold in (0, 1)")
    p.add_argument("--out", type=Path, required=True, help="clipped WAV (float32)")
    p.add_argument("--mask", type=Path, help="mask sidecar (default: <out>.mask.json)")
    p.add_argument("--ref", type=Path, help="also write the normalized reference here")

    p = sub.add_parser("declip", allow_abbrev=False, help="restore a clipped WAV file")
    p.add_argument("input", type=Path)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--mask", type=Path, help="mask sidecar written by `clip`")
    src.add_argument("--theta", type=float, help="detect the mask from this threshold")
    p.add_argument("--algo", choices=ALGORITHMS, default="aspade")
    _transform_args(p)
    _param_args(p)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--stats", type=Path, help="statistics JSON (default: <out>.stats.json)")
    p.add_argument("--traces", action="store_true", help="include residual traces in stats")

    p = sub.add_parser("eval", allow_abbrev=False, help="score a restoration")
    p.add_argument("original", type=Path)
    p.add_argument("clipped", type=Path)
    p.add_argument("restored", type=Path)
    p.add_argument("--mask", type=Path, required=True)
    p.add_argument("--csv", type=Path, help="append the report row to this CSV")
    p.add_argument("--blockwise", type=int, metavar="LEN",
                   help="also print SDR on sliding blocks of LEN samples")

    p = sub.add_parser("experiment", allow_abbrev=False, help="run a parameter sweep")
    p.add_argument("--config", type=Path, help="JSON experiment configuration")
    p.add_argument("--preset", choices=sorted(PRESETS))
    p.add_argument("--corpus", nargs="+", help="WAV files and/or generator specs")
    p.add_argument("--synthetic", type=int, metavar="N",
                   help="use N sparse_sines signals as the corpus")
    p.add_argument("--theta", type=float, nargs="+")
    p.add_argument("--algo", choices=ALGORITHMS, nargs="+")
    _transform_args(p, multi=True)
    _param_args(p)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--duration", type=float, default=None, help="synthetic length in seconds")
    p.add_argument("--blockwise", action="store_true", help="write per-block SDR pairs")
    p.add_argument("--out", type=Path, required=True, help="output directory")

    p = sub.add_parser("synth", allow_abbrev=False, help="write a synthetic test signal")
    p.add_argument("spec", nargs="?", default="sparse_sines",
                   help='generator spec, e.g. "sparse_sines:count=5" or "chirp:f0=100"')
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--duration", type=float, default=5.0)
    p.add_argument("--rate", type=int, default=16000)
    p.add_argument("--out", type=Path, required=True)
    return parser


def cmd_clip(args) -> int:
    if not 0 < args.theta < 1:
        raise DataError(f"--theta must lie in (0, 1), got {args.theta}")
    x = as_float32(peak_normalize(read_wav(args.input)))
    y, mask = hard_clip(x, _float32(args.theta))
    write_wav(args.out, y)
    mask_path = args.mask or args.out.with_suffix(".mask.json")
    save_mask(mask_path, mask)
    if args.ref:
        write_wav(args.ref, x)
    print(f"clipped {mask.clipped.sum()} of {len(mask)} samples "
          f"({mask.high.sum()} high, {mask.low.sum()} low); mask -> {mask_path}")
    return EXIT_OK


def cmd_declip(args) -> int:
    y = read_wav(args.input)
    if args.mask:
        mask = load_mask(args.mask)
        if len(mask) != len(y):
            raise DataError(f"mask covers {len(mask)} samples, signal has {len(y)}")
    else:
        mask = detect_mask(y, _float32(args.theta))
    mode = MODE_NAMES[args.mode]
    tcfg = TransformConfig(args.win_len, args.overlap, args.window, args.redundancy, mode)
    params = _params(args, mode)

    start = time.perf_counter()
    x_hat, stats = declip(y, mask, tcfg, args.algo, params)
    elapsed = time.perf_counter() - start
    write_wav(args.out, x_hat)

    report = {
        "input": str(args.input),
        "algorithm": args.algo,
        "transform": asdict(tcfg),
        "params": asdict(params),
        "theta_c": mask.theta_c,
        "clipped_samples": int(mask.clipped.sum()),
        "wall_time_s": elapsed,
        **stats.to_dict(traces=args.traces),
    }
    stats_path = args.stats or args.out.with_suffix(".stats.json")
    stats_path.write_text(json.dumps(report, indent=1) + "\n")
    print(f"{args.algo}: {len(stats.blocks)} block(s), {stats.iterations} iterations, "
          f"{elapsed:.2f} s; stats -> {stats_path}")
    return EXIT_OK


EVAL_COLUMNS = ["original", "restored", "theta_c", "sdr_in_whole", "sdr_in_clipped",
                "sdr_out_whole", "sdr_out_clipped", "delta_sdr_whole", "delta_sdr_clipped",
                "consistent"]


def cmd_eval(args) -> int:
    x = as_float32(peak_normalize(read_wav(args.original)))
    y = read_wav(args.clipped)
    x_hat = read_wav(args.restored)
    mask = load_mask(args.mask)
    if not len(x) == len(y) == len(x_hat) == len(mask):
        raise DataError("original, clipped, restored and mask lengths differ")
    c = mask.clipped
    if not c.any():
        raise DataError("mask has no clipped samples")
    xs, ys, hs = x.samples, y.samples, x_hat.samples
    row = {
        "original": str(args.original), "restored": str(args.restored),
        "theta_c": mask.theta_c,
        "sdr_in_whole": sdr(xs, ys), "sdr_in_clipped": sdr(xs[c], ys[c]),
        "sdr_out_whole": sdr(xs, hs), "sdr_out_clipped": sdr(xs[c], hs[c]),
        "delta_sdr_whole": delta_sdr(xs, ys, hs),
        "delta_sdr_clipped": delta_sdr(xs[c], ys[c], hs[c]),
        "consistent": bool(np.array_equal(hs[~c], ys[~c])),
    }
    for key in EVAL_COLUMNS[2:]:
        value = row[key]
        print(f"{key:18s} {format_db(value) if isinstance(value, float) else value}")
    if args.blockwise:
        for blk in blockwise_sdr(xs, hs, min(args.blockwise, len(x))):
            print(f"block {blk.index:4d} @ {blk.start:8d}  "
                  f"{'skipped' if blk.skipped else format_db(blk.sdr)}")
    if args.csv:
        new = not args.csv.exists() or args.csv.stat().st_size == 0
        with args.csv.open("a", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            if new:
                writer.writerow(EVAL_COLUMNS)
            writer.writerow([csv_cell(row[k]) for k in EVAL_COLUMNS])
    return EXIT_OK


def _experiment_config(args) -> ExperimentConfig:
    if args.config and args.preset:
        raise DataError("--config and --preset are mutually exclusive")
    if args.config:
        base = ExperimentConfig.from_file(args.config).to_dict()
    elif args.preset:
        base = preset(args.preset).to_dict()
    else:
        base = ExperimentConfig().to_dict()
    if args.corpus:
        base["corpus"] = args.corpus
    elif args.synthetic:
        base["corpus"] = ["sparse_sines"] * args.synthetic
    if args.theta:
        base["thresholds"] = args.theta
    if args.algo:
        base["algorithms"] = args.algo
    for flag, key in (("win_len", "win_lens"), ("overlap", "overlaps"),
                      ("redundancy", "redundancies"), ("window", "window")):
        if getattr(args, flag) is not None:
            base[key] = getattr(args, flag)
    if args.mode is not None:
        base["mode"] = MODE_NAMES[args.mode]
    if args.seed is not None:
        base["seed"] = args.seed
    if args.duration is not None:
        base["duration"] = args.duration
    if args.blockwise:
        base["blockwise"] = True
    if any(getattr(args, a) is not None for a in ("s", "r", "epsilon", "max_iter")):
        base["params"] = asdict(_params(args, base["mode"]))
    base["output_dir"] = str(args.out)
    return ExperimentConfig.from_dict(base)


def cmd_experiment(args) -> int:
    cfg = _experiment_config(args)
    result = run_experiment(cfg)
    failed = sum(r["status"] == "error" for r in result.rows)
    print(f"{len(result.rows)} rows ({failed} failed) -> {result.files['results']}")
    for row in result.summary:
        print(f"theta={row['theta_c']:<4} R={row['redundancy']} L={row['win_len']} "
              f"ov={row['overlap']} {row['algorithm']:6s} "
              f"mean dSDR={format_db(row['mean_delta_sdr_whole'])}")
    return EXIT_OK


def cmd_synth(args) -> int:
    sig = make_synthetic(args.spec, seed=args.seed, duration=args.duration,
                         sample_rate=args.rate)
    write_wav(args.out, sig)
    print(f"wrote {len(sig)} samples @ {sig.sample_rate} Hz -> {args.out}")
    return EXIT_OK


COMMANDS = {"clip": cmd_clip, "declip": cmd_declip, "eval": cmd_eval,
            "experiment": cmd_experiment, "synth": cmd_synth}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except NumericalError as exc:
        print(f"spadeclip: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (SpadeError, OSError) as exc:
        print(f"spadeclip: error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
