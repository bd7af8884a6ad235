#!/usr/bin/env python3
"""Command-line entry point: python app.py <command> [options]

Exit codes: 0 ok, 1 error, 2 a qualitative claim failed.
"""
import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

from config import Config
from imaging.image_ops import enhance
from imaging.registration_fusion import register_pair
from optics.scene_model import materials_table
from optics.water_optics import band_presets, transmission_table, water_presets
from stages.analyze_stage import AnalyzeStage
from stages.base_stage import dump_json
from stages.fuse_stage import FuseStage
from stages.pipeline import run_pipeline
from stages.simulate_stage import SimulateStage
from utils.config_loader import load_config, with_overrides
from utils.errors import ArgumentError, ConfigValidationError, DualBandError, RegistrationError
from utils.pgm_io import read_pgm, write_pgm

# Configure logging
logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
logger = logging.getLogger(__name__)

DEFAULT_RANGES = "0,0.25,0.5,1,2,4"


def _board(text: str):
    try:
        cols, rows = (int(v) for v in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"board must look like 4x4, got {text!r}") from None
    return cols, rows


def _ranges(text: str) -> List[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"ranges must be comma-separated numbers, got {text!r}") from None


def _out_dir(args: argparse.Namespace, config) -> Path:
    return Path(args.out_dir or config.output_dir)


def _load(args: argparse.Namespace):
    config = load_config(args.config)
    return with_overrides(config, seed=getattr(args, "seed", None), out_dir=getattr(args, "out_dir", None))


def cmd_water_report(args: argparse.Namespace) -> int:
    if args.config:
        water = load_config(args.config).water
    else:
        water = water_presets()[args.preset]
    table = transmission_table(water, band_presets().values(), args.ranges)
    print(table.to_string(index=False))
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        table.to_csv(args.out, index=False)
        logger.info(f"transmission table written to {args.out}")
    return Config.EXIT_OK


def cmd_scene_materials(args: argparse.Namespace) -> int:
    table = materials_table()
    print(table.to_string(index=False))
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        table.to_csv(args.out, index=False)
    return Config.EXIT_OK


def cmd_simulate(args: argparse.Namespace) -> int:
    config = _load(args)
    SimulateStage(_out_dir(args, config)).run({"config": config})
    return Config.EXIT_OK


def cmd_analyze(args: argparse.Namespace) -> int:
    config = _load(args)
    out = _out_dir(args, config)
    context: Dict[str, Any] = {
        "config": config,
        "vis": read_pgm(args.vis or out / "vis.pgm"),
        "nir": read_pgm(args.nir or out / "nir.pgm"),
    }
    result = AnalyzeStage(out).run(context)
    print(dump_json(result.summary), end="")
    return Config.EXIT_OK


def cmd_enhance(args: argparse.Namespace) -> int:
    params: Dict[str, Any] = {}
    if args.method == "clahe":
        params = {"tile": args.tile, "clip_limit": args.clip_limit}
    elif args.method == "stretch":
        params = {"p_low": args.p_low, "p_high": args.p_high}
    elif args.method == "homomorphic":
        params = {"cutoff": args.cutoff, "gamma_low": args.gamma_low, "gamma_high": args.gamma_high}
    result = enhance(read_pgm(args.input), args.method, **params)
    write_pgm(result, args.output)
    logger.info(f"{args.method}: wrote {args.output}")
    return Config.EXIT_OK


def cmd_register(args: argparse.Namespace) -> int:
    board = args.board or (load_config(args.config).registration.board if args.config else Config.BOARD)
    out = Path(args.out_dir or Config.out_dir_override() or Config.DEFAULT_OUT_DIR)
    try:
        result = register_pair(read_pgm(args.vis), read_pgm(args.nir), board)
    except RegistrationError as e:
        for channel, message in sorted(e.diagnostics.items()):
            logger.error(f"{channel}: {message}")
        raise
    write_pgm(result.nir_registered, out / "nir_registered.pgm")
    (out / "H_est.json").write_text(dump_json(result.H_est.to_list()))
    print(dump_json(result.to_dict()), end="")
    return Config.EXIT_OK


def cmd_fuse(args: argparse.Namespace) -> int:
    config = _load(args)
    out = _out_dir(args, config)
    registered_default = out / "nir_registered.pgm"
    if args.nir:
        nir_path, aligned = Path(args.nir), args.registered
    elif registered_default.is_file():
        nir_path, aligned = registered_default, True
    else:
        nir_path, aligned = out / "nir.pgm", args.registered
    mask_flags = args.delta is not None or args.alpha is not None
    if args.weight_map and mask_flags:
        raise ArgumentError("--weight-map cannot be combined with --delta or --alpha")
    if args.weight_map:
        config.fusion.mode = "weight_map"
        config.fusion.weight_map_path = args.weight_map
    elif mask_flags:
        config.fusion.mode = "plant_mask"
        if args.delta is not None:
            config.fusion.delta = args.delta
        if args.alpha is not None:
            config.fusion.alpha = args.alpha
    context: Dict[str, Any] = {
        "config": config,
        "vis": read_pgm(args.vis or out / "vis.pgm"),
        "nir": read_pgm(nir_path),
        "true_H": config.acquisition.nir_misalignment,
        "aligned": aligned,
    }
    result = FuseStage(out).run(context)
    print(dump_json(result.summary), end="")
    return Config.EXIT_OK


def cmd_pipeline(args: argparse.Namespace) -> int:
    config = _load(args)
    report = run_pipeline(config)
    for claim in report.claims:
        print(f"{'PASS' if claim.passed else 'FAIL'}  {claim.claim}")
    if not report.passed:
        logger.warning(f"claims failed: {', '.join(report.failed_claims)}")
        return Config.EXIT_CLAIM_FAILED
    return Config.EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    version = f"%(prog)s {Config.VERSION}"
    parser = argparse.ArgumentParser(prog="app.py", description=Config.APP_TITLE)
    parser.add_argument("--version", action="version", version=version)
    parser.add_argument("--verbose", action="store_true", help="debug logging")
    commands = parser.add_subparsers(dest="command", required=True)

    def add(subparsers, name: str, help_text: str, handler=None) -> argparse.ArgumentParser:
        sub = subparsers.add_parser(name, help=help_text, description=help_text)
        sub.add_argument("--version", action="version", version=version)
        if handler is not None:
            sub.set_defaults(handler=handler)
        return sub

    water = add(commands, "water", "water optics tables")
    water_commands = water.add_subparsers(dest="water_command", required=True)
    report = add(water_commands, "report", "transmission T(r) per band", cmd_water_report)
    source = report.add_mutually_exclusive_group()
    source.add_argument("--preset", choices=sorted(water_presets()), default="natural")
    source.add_argument("--config", help="take the water body from a pipeline configuration")
    report.add_argument("--ranges", type=_ranges, default=_ranges(DEFAULT_RANGES), help="path lengths in m")
    report.add_argument("--out", help="write the table as CSV")

    scene = add(commands, "scene", "scene catalog")
    scene_commands = scene.add_subparsers(dest="scene_command", required=True)
    materials = add(scene_commands, "materials", "built-in material catalog", cmd_scene_materials)
    materials.add_argument("--out", help="write the table as CSV")

    def with_config(sub: argparse.ArgumentParser, seed: bool = False):
        sub.add_argument("--config", required=True, help="pipeline configuration (JSON)")
        sub.add_argument("--out-dir", help=f"output directory (env {Config.OUT_DIR_ENV} also works)")
        if seed:
            sub.add_argument("--seed", type=int, help="override the acquisition seed")

    simulate = add(commands, "simulate", "render vis.pgm, nir.pgm and truth.json", cmd_simulate)
    with_config(simulate, seed=True)

    analyze = add(commands, "analyze", "histograms, region stats and edge overlay", cmd_analyze)
    with_config(analyze)
    analyze.add_argument("--vis", help="VIS image (default <out-dir>/vis.pgm)")
    analyze.add_argument("--nir", help="NIR image (default <out-dir>/nir.pgm)")

    enhance_cmd = add(commands, "enhance", "software enhancement of one channel", cmd_enhance)
    enhance_cmd.add_argument("--input", required=True)
    enhance_cmd.add_argument("--output", required=True)
    enhance_cmd.add_argument("--method", choices=["equalize", "clahe", "stretch", "homomorphic"], required=True)
    enhance_cmd.add_argument("--tile", type=int, default=Config.CLAHE_TILE)
    enhance_cmd.add_argument("--clip-limit", type=float, default=Config.CLAHE_CLIP)
    enhance_cmd.add_argument("--p-low", type=float, default=Config.STRETCH_LOW)
    enhance_cmd.add_argument("--p-high", type=float, default=Config.STRETCH_HIGH)
    enhance_cmd.add_argument("--cutoff", type=float, default=Config.HOMOMORPHIC_CUTOFF)
    enhance_cmd.add_argument("--gamma-low", type=float, default=Config.HOMOMORPHIC_GAMMA_LOW)
    enhance_cmd.add_argument("--gamma-high", type=float, default=Config.HOMOMORPHIC_GAMMA_HIGH)

    register = add(commands, "register", "align NIR onto VIS on the chessboard marker", cmd_register)
    register.add_argument("--vis", required=True)
    register.add_argument("--nir", required=True)
    register.add_argument("--board", type=_board, help="inner corners as COLSxROWS (default 4x4)")
    register.add_argument("--config", help="take the board size from a pipeline configuration")
    register.add_argument("--out-dir")

    fuse = add(commands, "fuse", "weighted NIR->VIS fusion", cmd_fuse)
    with_config(fuse)
    fuse.add_argument("--vis", help="VIS image (default <out-dir>/vis.pgm)")
    fuse.add_argument("--nir", help="NIR image (default <out-dir>/nir_registered.pgm when present)")
    fuse.add_argument("--registered", action="store_true", help="the NIR input is already on the VIS grid")
    fuse.add_argument("--weight-map", help="weight map PGM (128 = 0, 0 = -1, 255 = +1)")
    fuse.add_argument("--delta", type=float, help="plant mask threshold on N - V (gray levels)")
    fuse.add_argument("--alpha", type=float, help="plant mask weight magnitude in [0, 1]")

    pipeline = add(commands, "pipeline", "simulate, analyze, register, fuse and check claims", cmd_pipeline)
    with_config(pipeline, seed=True)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.verbose:
        logging.getLogger().setLevel(logging.DEBUG)
    try:
        return args.handler(args)
    except ConfigValidationError as e:
        for path, message in e.errors:
            logger.error(f"{path}: {message}")
        return Config.EXIT_ERROR
    except (DualBandError, OSError, json.JSONDecodeError) as e:
        logger.error(str(e))
        return Config.EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
