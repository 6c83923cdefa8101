"""KITTI-style relative errors and SE(2) relative position error."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .types import wrap_angle

log = logging.getLogger(__name__)

KITTI_LENGTHS = tuple(float(x) for x in range(100, 801, 100))
RPE_LENGTHS = (50.0, 100.0, 150.0, 200.0)


@dataclass
class SegmentError:
    start: int
    length: float
    trans: float
    rot: float = 0.0


@dataclass
class MetricResult:
    """Averaged error plus the per-segment table it was computed from.

    ``trans`` is in percent; ``rot`` (KITTI only) in degrees per 100 m.
    ``flagged`` is set when no segment fits inside the trajectory.
    """

    trans: float
    rot: float
    segments: list = field(default_factory=list)
    flagged: bool = False

    @property
    def n_segments(self) -> int:
        return len(self.segments)


def interpolate_poses(traj: np.ndarray, times: np.ndarray) -> np.ndarray:
    """Linear position and shortest-arc heading interpolation of ``(t, x, y, theta)`` rows."""
    t, x, y, th = np.asarray(traj, dtype=float).T
    th = np.unwrap(th)
    return np.column_stack([np.interp(times, t, x), np.interp(times, t, y), np.interp(times, t, th)])


def associate(est: np.ndarray, gt: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Interpolate ``est`` onto the ``gt`` stamps it spans; both returned as ``(x, y, theta)``."""
    est, gt = np.asarray(est, dtype=float), np.asarray(gt, dtype=float)
    if est.ndim != 2 or est.shape[1] != 4 or gt.ndim != 2 or gt.shape[1] != 4:
        raise ValueError("trajectories must be (K, 4) arrays of t, x, y, theta")
    if len(est) == 0 or len(gt) == 0:
        return np.zeros((0, 3)), np.zeros((0, 3))
    tol = 1e-9
    keep = (gt[:, 0] >= est[0, 0] - tol) & (gt[:, 0] <= est[-1, 0] + tol)
    gt = gt[keep]
    return interpolate_poses(est, gt[:, 0]), gt[:, 1:]


def path_distances(xy: np.ndarray) -> np.ndarray:
    steps = np.linalg.norm(np.diff(xy, axis=0), axis=1)
    return np.concatenate([[0.0], np.cumsum(steps)])


def _segment_ends(dist: np.ndarray, starts, lengths):
    """Yield ``(start, length, end)`` with ``end`` the first pose at least ``length`` further along."""
    for i in starts:
        for length in lengths:
            j = int(np.searchsorted(dist, dist[i] + length, side="left"))
            if j < len(dist):
                yield i, length, j


def _relative(p: np.ndarray, i: int, j: int) -> tuple[np.ndarray, float]:
    """Pose ``j`` expressed in the frame of pose ``i`` for ``(x, y, theta)`` rows."""
    c, s = np.cos(p[i, 2]), np.sin(p[i, 2])
    d = p[j, :2] - p[i, :2]
    # inverse of R(theta) = [[c, s], [-s, c]] is its transpose
    return np.array([c * d[0] - s * d[1], s * d[0] + c * d[1]]), float(p[j, 2] - p[i, 2])


def kitti_errors(est: np.ndarray, gt: np.ndarray, lengths=KITTI_LENGTHS, stride: int = 5) -> MetricResult:
    """Mean relative translation (%) and rotation (deg/100 m) error over path segments."""
    e, g = associate(est, gt)
    if len(g) < 2:
        log.warning("trajectory too short for KITTI evaluation")
        return MetricResult(float("nan"), float("nan"), flagged=True)
    dist = path_distances(g[:, :2])
    segments = []
    for i, length, j in _segment_ends(dist, range(0, len(g), stride), lengths):
        dg, ag = _relative(g, i, j)
        de, ae = _relative(e, i, j)
        # error pose = (gt_i^-1 gt_j)^-1 (est_i^-1 est_j)
        c, s = np.cos(ag), np.sin(ag)
        diff = de - dg
        err_t = np.array([c * diff[0] - s * diff[1], s * diff[0] + c * diff[1]])
        err_r = abs(float(wrap_angle(ae - ag)))
        segments.append(SegmentError(i, length, float(np.linalg.norm(err_t)) / length, err_r / length))
    if not segments:
        log.warning("trajectory shorter than the smallest segment length %.0f m", min(lengths))
        return MetricResult(float("nan"), float("nan"), flagged=True)
    trans = 100.0 * float(np.mean([s.trans for s in segments]))
    rot = 100.0 * float(np.degrees(np.mean([s.rot for s in segments])))
    return MetricResult(trans, rot, segments)


def procrustes_2d(src: np.ndarray, dst: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Rotation ``A`` and translation ``b`` minimizing ``sum |A src + b - dst|^2``."""
    ms, md = src.mean(axis=0), dst.mean(axis=0)
    a, b = src - ms, dst - md
    h = a.T @ b
    phi = np.arctan2(h[0, 1] - h[1, 0], h[0, 0] + h[1, 1])
    rot = np.array([[np.cos(phi), -np.sin(phi)], [np.sin(phi), np.cos(phi)]])
    return rot, md - rot @ ms


def rpe_se2(est: np.ndarray, gt: np.ndarray, lengths=RPE_LENGTHS, stride: int = 5) -> MetricResult:
    """Mean position RMSE of rigidly aligned sub-segments, as % of segment length."""
    e, g = associate(est, gt)
    if len(g) < 2:
        log.warning("trajectory too short for RPE evaluation")
        return MetricResult(float("nan"), float("nan"), flagged=True)
    dist = path_distances(g[:, :2])
    segments = []
    for i, length, j in _segment_ends(dist, range(0, len(g), stride), lengths):
        src, dst = e[i:j + 1, :2], g[i:j + 1, :2]
        rot, shift = procrustes_2d(src, dst)
        res = src @ rot.T + shift - dst
        rmse = float(np.sqrt(np.mean(np.sum(res**2, axis=1))))
        segments.append(SegmentError(i, length, rmse / length))
    if not segments:
        log.warning("trajectory shorter than the smallest segment length %.0f m", min(lengths))
        return MetricResult(float("nan"), float("nan"), flagged=True)
    return MetricResult(100.0 * float(np.mean([s.trans for s in segments])), float("nan"), segments)


def final_drift(est: np.ndarray, gt: np.ndarray) -> float:
    """End-point position error of the start-aligned estimate, as % of distance travelled."""
    e, g = associate(est, gt)
    if len(g) < 2:
        return float("nan")
    de, _ = _relative(e, 0, len(e) - 1)
    dg, _ = _relative(g, 0, len(g) - 1)
    dist = path_distances(g[:, :2])[-1]
    return 100.0 * float(np.linalg.norm(de - dg)) / dist if dist > 0 else float("nan")
