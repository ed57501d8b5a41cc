"""Command-line surface: synthesis, dataset builds, scoring, inspection.

Data goes to stdout as JSON; diagnostics go to stderr through logging, so
scripts can consume the output without filtering. Exit codes: 0 success,
1 runtime failure, 2 usage error.

The coefficient table is resolved from --coeffs, then the AQUA_COEFFS
environment variable, then the packaged default.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import img_io, metrics
from .ambient import ambient_light
from .errors import AquaSynthError
from .formation import SynthesisParams, synthesize_image
from .pipeline import DatasetConfig, generate_dataset, read_manifest, rescale_depth
from .water_optics import (
    WATER_TYPES,
    default_coefficient_path,
    load_coefficient_table,
)

logger = logging.getLogger(__name__)


def _resolve_coefficients(arg: str | None) -> Path:
    if arg:
        return Path(arg)
    env = os.environ.get("AQUA_COEFFS")
    if env:
        return Path(env)
    return default_coefficient_path()


def _emit(doc: dict) -> None:
    print(json.dumps(doc, indent=2, sort_keys=True))


def _ambient_dict(light) -> dict:
    return {
        "r": light.b_r,
        "g": light.b_g,
        "b": light.b_b,
        "clamped": light.clamped,
    }


def _cmd_ambient(args: argparse.Namespace) -> int:
    table = load_coefficient_table(_resolve_coefficients(args.coeffs))
    light = ambient_light(table[args.type], args.D, args.Bg)
    _emit({"water_type": args.type, "surface_depth": args.D, **_ambient_dict(light)})
    return 0


def _cmd_synth(args: argparse.Namespace) -> int:
    table = load_coefficient_table(_resolve_coefficients(args.coeffs))
    coeffs = table[args.type]

    clean = img_io.read_rgb(args.clean, size=args.size)
    raw_depth = img_io.read_depth(args.depth, size=args.size)
    depth_range = tuple(args.depth_range)
    depth = rescale_depth(raw_depth, *depth_range)

    # Missing parameters are drawn from the seed, in the order D then Bg.
    rng = np.random.default_rng(np.random.SeedSequence([args.seed]))
    surface_depth = args.D if args.D is not None else float(rng.uniform(0.0, 5.0))
    green = args.Bg if args.Bg is not None else float(rng.uniform(0.5, 1.0))

    params = SynthesisParams(
        water_type=args.type,
        surface_depth=surface_depth,
        ambient_green=green,
        depth_range=depth_range,
        seed=args.seed,
    )
    image = synthesize_image(clean, depth, coeffs, params)
    img_io.write_rgb(args.out, image)
    light = ambient_light(coeffs, surface_depth, green)
    _emit(
        {
            "out": str(args.out),
            "water_type": args.type,
            "surface_depth": surface_depth,
            "ambient_green": green,
            "ambient": _ambient_dict(light),
            "height": image.shape[0],
            "width": image.shape[1],
        }
    )
    return 0


def _cmd_dataset(args: argparse.Namespace) -> int:
    doc = json.loads(Path(args.config).read_text(encoding="utf-8"))
    if args.input is not None:
        doc["input_dir"] = args.input
    if args.output is not None:
        doc["output_dir"] = args.output
    if args.master_seed is not None:
        doc["master_seed"] = args.master_seed
    config = DatasetConfig.from_dict(doc)

    table = load_coefficient_table(_resolve_coefficients(args.coeffs))
    result = generate_dataset(config, table, workers=args.workers)
    _emit(
        {
            "records": len(result.records),
            "manifest": str(result.manifest_path),
            "failures": [
                {"source_id": f.source_id, "water_type": f.water_type, "message": f.message}
                for f in result.failures
            ],
        }
    )
    return 1 if result.failures else 0


def _cmd_eval(args: argparse.Namespace) -> int:
    report, failures = metrics.evaluate_directories(
        args.pred, args.ref, no_ref=args.no_ref, workers=args.workers
    )
    doc = report.to_dict()
    doc["failures"] = [{"name": f.name, "message": f.message} for f in failures]
    _emit(doc)
    if args.csv:
        with open(args.csv, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["name", "l1", "psnr", "ssim", "uiqm"])
            for s in report.images:
                writer.writerow([s.name, s.l1, s.psnr, s.ssim, s.uiqm])
    if failures:
        return 1
    if report.count == 0:
        logger.error("no image pairs found under %s", args.pred)
        return 1
    return 0


def _cmd_inspect(args: argparse.Namespace) -> int:
    manifest = read_manifest(args.manifest)
    by_type: dict[str, int] = {}
    by_split: dict[str, int] = {}
    for record in manifest.records:
        by_type[record.water_type] = by_type.get(record.water_type, 0) + 1
        by_split[record.split] = by_split.get(record.split, 0) + 1
    _emit(
        {
            "count": len(manifest.records),
            "by_water_type": by_type,
            "by_split": by_split,
            "config": manifest.config.to_dict() if manifest.config else None,
            "records": [r.to_dict() for r in manifest.records],
        }
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--coeffs", help="coefficient table JSON (default: AQUA_COEFFS, then packaged table)")
    common.add_argument("--seed", type=int, default=0, help="seed for sampled parameters")
    common.add_argument("--workers", type=int, default=1, help="parallel workers (never changes output bytes)")
    common.add_argument(
        "--log-level",
        default="warning",
        choices=("debug", "info", "warning", "error"),
        help="stderr logging threshold",
    )

    parser = argparse.ArgumentParser(
        prog="aquasynth",
        description="Physics-based underwater image synthesis and scoring.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ambient", parents=[common], help="compute the ambient light triple")
    p.add_argument("--type", required=True, choices=WATER_TYPES, help="water type")
    p.add_argument("--D", type=float, required=True, help="surface-object depth in meters")
    p.add_argument("--Bg", type=float, required=True, help="green-channel ambient intensity")
    p.set_defaults(func=_cmd_ambient)

    p = sub.add_parser("synth", parents=[common], help="synthesize one underwater image")
    p.add_argument("--clean", required=True, help="clean RGB image")
    p.add_argument("--depth", required=True, help="depth map (16-bit grayscale)")
    p.add_argument("--type", required=True, choices=WATER_TYPES, help="water type")
    p.add_argument("--out", default="synth.png", help="output PNG path")
    p.add_argument("--D", type=float, default=None, help="surface depth; sampled from --seed if omitted")
    p.add_argument("--Bg", type=float, default=None, help="green ambient; sampled from --seed if omitted")
    p.add_argument("--size", type=int, default=None, help="resize both inputs to SIZE x SIZE")
    p.add_argument(
        "--depth-range",
        type=float,
        nargs=2,
        default=(0.25, 20.0),
        metavar=("MIN", "MAX"),
        help="target range in meters for the rescaled depth map",
    )
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("dataset", parents=[common], help="generate a full dataset from a config")
    p.add_argument("--config", required=True, help="dataset config JSON")
    p.add_argument("--input", default=None, help="override input_dir")
    p.add_argument("--output", default=None, help="override output_dir")
    p.add_argument("--master-seed", type=int, default=None, help="override master_seed")
    p.set_defaults(func=_cmd_dataset)

    p = sub.add_parser("eval", parents=[common], help="score a directory against references")
    p.add_argument("--pred", required=True, help="directory of output PNGs")
    p.add_argument("--ref", required=True, help="directory of same-named reference PNGs")
    p.add_argument("--no-ref", action="store_true", help="also compute the no-reference score")
    p.add_argument("--csv", default=None, help="write per-image scores to this CSV file")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("inspect", parents=[common], help="summarize and dump a manifest")
    p.add_argument("manifest", help="manifest.json path")
    p.set_defaults(func=_cmd_inspect)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        stream=sys.stderr,
        level=getattr(logging, args.log_level.upper()),
        format="%(levelname)s %(name)s: %(message)s",
    )
    if args.workers < 1:
        parser.error("--workers must be >= 1")
    try:
        return args.func(args)
    except (AquaSynthError, OSError) as exc:
        logger.error("%s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
