"""Command line entry point: ``dro simulate | run | eval``."""

from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path

from . import io, metrics, pipeline, simulator

log = logging.getLogger("dro")


def _simulate(args) -> int:
    if args.scene in simulator.PRESETS:
        scene = simulator.make_scene(args.scene, seed=args.seed, duration=args.duration)
    else:
        path = Path(args.scene)
        if not path.is_file():
            raise SystemExit(f"unknown scene {args.scene!r}: not a preset {sorted(simulator.PRESETS)} or a file")
        scene = simulator.read_scene(path, seed=args.seed)
    scene = simulator.ensure_duration(scene, args.duration)
    out = simulator.emit_dataset(scene, args.duration, args.out)
    log.info("wrote dataset to %s", out)
    return 0


def _run(args) -> int:
    config_path = args.config
    if config_path is None and (Path(args.data) / "config.txt").is_file():
        config_path = Path(args.data) / "config.txt"
    config = io.read_config(config_path)
    result = pipeline.run(args.data, config, args.mode, args.out)
    log.info("wrote %d poses to %s", len(result.poses), args.out)
    return 0


def _eval(args) -> int:
    est, gt = io.read_poses(args.est), io.read_poses(args.gt)
    if args.metric == "kitti":
        res = metrics.kitti_errors(est, gt)
        header = ["segment_start", "length_m", "trans_err_pct", "rot_err_deg_per_100m"]
        rows = [(s.start, s.length, 100.0 * s.trans, 100.0 * math.degrees(s.rot)) for s in res.segments]
        rows.append(("mean", "all", res.trans, res.rot))
    else:
        res = metrics.rpe_se2(est, gt)
        header = ["segment_start", "length_m", "rpe_pct"]
        rows = [(s.start, s.length, 100.0 * s.trans) for s in res.segments]
        rows.append(("mean", "all", res.trans))
    io.write_table(args.out, header, rows)
    if res.flagged:
        log.warning("trajectory too short for the %s metric", args.metric)
    print(f"{args.metric}: trans={res.trans:.4f}%" + (f" rot={res.rot:.4f}deg/100m" if args.metric == "kitti" else ""))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dro", description="Direct Doppler-aware radar odometry")
    parser.add_argument("-v", "--verbose", action="store_true", help="log at debug level")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="write a synthetic dataset")
    p.add_argument("--scene", required=True, help=f"preset ({', '.join(sorted(simulator.PRESETS))}) or scene file")
    p.add_argument("--duration", type=float, required=True, help="seconds")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_simulate)

    p = sub.add_parser("run", help="estimate odometry over a dataset")
    p.add_argument("--data", required=True)
    p.add_argument("--config", default=None, help="key=value config (defaults to <data>/config.txt if present)")
    p.add_argument("--mode", choices=["gd", "g", "d"], default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_run)

    p = sub.add_parser("eval", help="compare an estimated trajectory with ground truth")
    p.add_argument("--est", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--metric", choices=["kitti", "rpe"], default="kitti")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_eval)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
