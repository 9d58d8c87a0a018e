"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical degeneracy.
Failures print one JSON object on standard error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import raster_io
from .errors import DataError, DegenerateError, GipanError
from .fusion import Method
from .prior import PriorBox
from .response import existence_check
from .sampling import ReplicateUp
from .synth import (CSV_HEADER, SynthSpec, build_setup, generate_pair, random_cube,
                    render_composite, rows_to_csv, rows_to_table, run_ablation,
                    run_method, score)

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_DEGENERATE = 0, 1, 2, 3

log = logging.getLogger("gipan")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _box(text):
    try:
        return PriorBox.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _weights(text):
    if text == "equal":
        return "equal"
    try:
        return tuple(float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"weights must be 'equal' or a comma list of numbers, got {text!r}") from None


def _dims(text):
    try:
        h, w, b = (int(v) for v in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected HxWxBANDS, got {text!r}") from None
    return h, w, b


def _band_list(text):
    try:
        idx = [int(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bands must be a comma list of integers, got {text!r}") from None
    if len(idx) != 3 or min(idx) < 1:
        raise argparse.ArgumentTypeError("give three 1-based band numbers")
    return idx


def _write_csv(path, text):
    Path(path).write_text(text)


def cmd_synth(args):
    if args.input:
        X = raster_io.read_raster(args.input)
    else:
        h, w, b = args.random
        X = random_cube(h, w, b, seed=args.seed)
    spec = SynthSpec(scale=args.scale, pan_weights=args.weights, seed=args.seed)
    pan, ms, A = generate_pair(X, spec)
    raster_io.write_raster(pan, args.out_pan, args.dtype)
    raster_io.write_raster(ms, args.out_ms, args.dtype)
    if args.out_truth:
        raster_io.write_raster(X, args.out_truth, args.dtype)
    print(f"pan {pan.height}x{pan.width}, ms {ms.height}x{ms.width}x{ms.bands}, scale {spec.scale}")


def cmd_estimate(args):
    pan = raster_io.read_raster(args.pan)
    ms = raster_io.read_raster(args.ms)
    setup = build_setup(pan, ms, dse=args.dse, box=args.box)
    A = setup.A.A
    report = existence_check(setup.Y, setup.Z, A, setup.B, ReplicateUp(ms.shape, setup.bhat.r),
                             setup.prior.m)
    if args.out_A:
        np.savetxt(args.out_A, A, fmt="%.17g")
    print("A =")
    for v in A[:, 0]:
        print(f"  {v:.10g}")
    print(f"consistency_residual   {report.consistency_residual:.2f}")
    print(f"y_recoverable_residual {report.y_recoverable_residual:.2f}")
    print(f"z_recoverable_residual {report.z_recoverable_residual:.2f}")
    print(f"solvable               {str(report.solvable).lower()}")
    for note in setup.warnings:
        print(f"warning: {note}", file=sys.stderr)


def cmd_fuse(args):
    pan = raster_io.read_raster(args.pan)
    ms = raster_io.read_raster(args.ms)
    setup = build_setup(pan, ms, dse=args.dse, upsampler=args.upsampler, box=args.box)
    result = run_method(setup, args.method)
    raster_io.write_raster(result.X, args.out, args.dtype, clamp=args.clamp)
    for note in setup.warnings + result.warnings:
        print(f"warning: {note}", file=sys.stderr)


def cmd_metrics(args):
    pan = raster_io.read_raster(args.pan)
    ms = raster_io.read_raster(args.ms)
    fused = raster_io.read_raster(args.fused)
    truth = raster_io.read_raster(args.truth) if args.truth else None
    setup = build_setup(pan, ms, dse=args.dse, upsampler=args.upsampler, box=args.box)
    if fused.shape != pan.shape or fused.bands != ms.bands:
        raise DataError(f"fused cube {fused!r} does not match pan {pan.shape} / ms {ms.bands} bands")
    # rebuild the injection row the method used, then score the given cube
    ref = run_method(setup, args.method)
    report = score(setup, dataclasses.replace(ref, X=fused), truth)
    print(report.table())
    if args.csv:
        row = [args.method, "true" if args.dse else "false", *report.csv_values()]
        _write_csv(args.csv, ",".join(CSV_HEADER) + "\n" + ",".join(row) + "\n")


def cmd_ablate(args):
    pan = raster_io.read_raster(args.pan)
    ms = raster_io.read_raster(args.ms)
    truth = raster_io.read_raster(args.truth) if args.truth else None
    rows = run_ablation(pan, ms, upsampler=args.upsampler, box=args.box, truth=truth)
    print(rows_to_table(rows))
    if args.csv:
        _write_csv(args.csv, rows_to_csv(rows))


def cmd_render(args):
    X = raster_io.read_raster(args.cube)
    idx = [b - 1 for b in args.bands]
    if max(idx) >= X.bands:
        raise DataError(f"band {max(idx) + 1} requested from a {X.bands}-band cube")
    render_composite(X, idx, args.out)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="gipan", description="Generalized-inverse pan-sharpening toolkit.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def pair_args(sp, fusion=True):
        sp.add_argument("--pan", required=True, help="single-band pan raster")
        sp.add_argument("--ms", required=True, help="multispectral raster")
        sp.add_argument("--dse", action="store_true", help="use down-sampling enhancement")
        sp.add_argument("--box", type=_box, default=PriorBox(),
                        help="prior bounds on A_inv as 'lower,upper' (default 0.9,1.4)")
        if fusion:
            sp.add_argument("--upsampler", choices=("replicate", "bilinear"), default="replicate")

    sp = sub.add_parser("synth", help="degrade a reference cube into a pan/ms pair")
    src = sp.add_mutually_exclusive_group(required=True)
    src.add_argument("--input", help="reference cube raster")
    src.add_argument("--random", type=_dims, metavar="HxWxS", help="generate a seeded random cube")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--scale", type=int, default=2)
    sp.add_argument("--weights", type=_weights, default="equal")
    sp.add_argument("--out-pan", required=True)
    sp.add_argument("--out-ms", required=True)
    sp.add_argument("--out-truth", help="also write the reference cube")
    sp.add_argument("--dtype", choices=tuple(raster_io.DTYPES), default="f64")
    sp.set_defaults(func=cmd_synth)

    sp = sub.add_parser("estimate", help="estimate A and report solvability residuals")
    pair_args(sp, fusion=False)
    sp.add_argument("--out-A", help="write A, one value per line")
    sp.set_defaults(func=cmd_estimate)

    sp = sub.add_parser("fuse", help="run one fusion method")
    sp.add_argument("--method", choices=[m.value for m in Method], required=True)
    pair_args(sp)
    sp.add_argument("--out", required=True)
    sp.add_argument("--dtype", choices=tuple(raster_io.DTYPES), default="f64")
    sp.add_argument("--clamp", action="store_true", help="saturate values outside the dtype range")
    sp.set_defaults(func=cmd_fuse)

    sp = sub.add_parser("metrics", help="score a fused cube")
    sp.add_argument("--method", choices=[m.value for m in Method], default="pcs",
                    help="method whose injection row defines the inverse ability")
    pair_args(sp)
    sp.add_argument("--fused", required=True)
    sp.add_argument("--truth")
    sp.add_argument("--csv")
    sp.set_defaults(func=cmd_metrics)

    sp = sub.add_parser("ablate", help="all methods with and without DSE")
    sp.add_argument("--pan", required=True)
    sp.add_argument("--ms", required=True)
    sp.add_argument("--truth")
    sp.add_argument("--box", type=_box, default=PriorBox())
    sp.add_argument("--upsampler", choices=("replicate", "bilinear"), default="replicate")
    sp.add_argument("--csv")
    sp.set_defaults(func=cmd_ablate)

    sp = sub.add_parser("render", help="write an 8-bit 3-band preview")
    sp.add_argument("--cube", required=True)
    sp.add_argument("--bands", type=_band_list, default=[60, 40, 21],
                    help="three 1-based band numbers (default 60,40,21)")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_render)
    return p


def _fail(code, kind, message):
    print(json.dumps({"error": kind, "code": code, "message": message}), file=sys.stderr)
    return code


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        return _fail(EXIT_USAGE, "usage", str(exc))
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except DegenerateError as exc:
        return _fail(EXIT_DEGENERATE, exc.kind, str(exc))
    except GipanError as exc:
        return _fail(EXIT_DATA, exc.kind, str(exc))
    except OSError as exc:
        return _fail(EXIT_DATA, "io", str(exc))
    except ValueError as exc:
        return _fail(EXIT_DATA, "value", str(exc))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
