"""End-to-end runner: dataset directory in, pose/bias/diagnostic tables out."""

from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import io
from .estimator import DirectRadarOdometry
from .types import Config, Mode

log = logging.getLogger(__name__)

DIAG_HEADER = [
    "timestamp_s", "iterations", "score", "robust", "flagged", "degenerate",
    "gyro_fallback", "vx_mps", "vy_mps", "omega_rad_s",
]


@dataclass
class RunResult:
    poses: np.ndarray
    estimator: DirectRadarOdometry | None
    out_dir: Path | None


def run(data_dir: str | Path, config: Config, mode: str | Mode | None = None, out_dir: str | Path | None = None) -> RunResult:
    """Estimate the trajectory of a dataset; write ``poses.csv``, ``biases.csv`` and ``diag.csv``.

    ``mode`` overrides ``config.mode`` when given.  A dataset without scans
    yields empty tables and a warning.
    """
    data_dir = Path(data_dir)
    if not data_dir.is_dir():
        raise FileNotFoundError(f"dataset directory {data_dir} does not exist")
    if mode is not None:
        config = dataclasses.replace(config, mode=mode)
    gyro = io.read_gyro(data_dir / "gyro.csv")
    est = DirectRadarOdometry.from_config(config)
    stems = io.scan_stems(data_dir)
    if not stems:
        log.warning("no scans found in %s; writing empty outputs", data_dir)
    for scan in io.read_scans(data_dir):
        est.partial_fit(scan, gyro)
    fitted = hasattr(est, "config_")
    poses = est.trajectory_array() if fitted and est.poses_ else np.zeros((0, 4))
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        io.write_poses(est.poses_ if fitted else [], out_dir / "poses.csv")
        records = est.records_ if fitted else []
        io.write_table(
            out_dir / "biases.csv", ["timestamp_s", "gyro_bias", "vy_bias"],
            [(r.start_time, r.gyro_bias, r.vy_bias) for r in records],
        )
        io.write_table(out_dir / "diag.csv", DIAG_HEADER, [_diag_row(r) for r in records])
    return RunResult(poses, est if fitted else None, out_dir)


def _diag_row(record) -> tuple:
    s = record.state
    omega = float("nan") if s.omega is None else float(s.omega)
    return (
        record.start_time, record.iterations, record.score, int(record.robust), int(record.flagged),
        int(record.degenerate), int(record.fallback), float(s.v_body[0]), float(s.v_body[1]), omega,
    )
