"""Synthetic spinning FMCW radar: scenes, trajectories, scans and gyro streams.

The world is a set of point reflectors.  Each azimuth row is rendered at its
own timestamp from the trajectory pose at that instant, so scans carry the
same motion distortion a real spinning sensor sees.  Moving sensors shift
every return by half the up/down range difference, with the sign set by the
row's chirp direction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np
from scipy.integrate import solve_ivp
from scipy.ndimage import gaussian_filter1d

from . import io
from .types import TWO_PI, Chirp, Config, GyroSeries, Pose2, RadarScan


@dataclass(frozen=True)
class Trajectory:
    """Planar path driven by an axle speed profile and a yaw-rate law.

    The axle speed ramps from 0 to ``speed`` with a raised-cosine profile
    after ``static_time`` seconds (``ramp_time == 0`` starts at speed), with
    an optional ``speed_amp * sin(2 pi t / speed_period)`` variation scaled
    the same way.  The yaw rate ``yaw_rate + yaw_amp * sin(2 pi t / yaw_period)``
    is scaled by the same ramp fraction, so a stationary vehicle does not turn.
    The radar sits ``lever`` metres ahead of the rear axle, which never slips.
    """

    speed: float = 5.0
    static_time: float = 0.0
    ramp_time: float = 0.0
    yaw_rate: float = 0.0
    yaw_amp: float = 0.0
    yaw_period: float = 10.0
    speed_amp: float = 0.0
    speed_period: float = 10.0
    lever: float = 0.0
    x0: float = 0.0
    y0: float = 0.0
    theta0: float = 0.0
    t_end: float = 600.0

    def ramp_fraction(self, t):
        t = np.asarray(t, dtype=float)
        if self.ramp_time <= 0:
            return np.where(t >= self.static_time, 1.0, 0.0)
        x = np.clip((t - self.static_time) / self.ramp_time, 0.0, 1.0)
        return 0.5 - 0.5 * np.cos(np.pi * x)

    def speed_at(self, t):
        t = np.asarray(t, dtype=float)
        wave = self.speed_amp * np.sin(TWO_PI * t / self.speed_period) if self.speed_amp else 0.0
        return (self.speed + wave) * self.ramp_fraction(t)

    def yaw_rate_at(self, t):
        t = np.asarray(t, dtype=float)
        frac = self.ramp_fraction(t)
        wave = self.yaw_amp * np.sin(TWO_PI * t / self.yaw_period) if self.yaw_amp else 0.0
        return (self.yaw_rate + wave) * frac

    def body_velocity(self, t) -> np.ndarray:
        """Radar velocity in the radar frame, shape ``(..., 2)``."""
        t = np.asarray(t, dtype=float)
        v = self.speed_at(t)
        w = self.yaw_rate_at(t)
        return np.stack([v, -w * self.lever], axis=-1)

    def _rates(self, t: float) -> tuple[float, float, float]:
        """Scalar ``(yaw rate, v_x, v_y)`` for the integrator."""
        if self.ramp_time <= 0:
            frac = 1.0 if t >= self.static_time else 0.0
        else:
            x = min(max((t - self.static_time) / self.ramp_time, 0.0), 1.0)
            frac = 0.5 - 0.5 * math.cos(math.pi * x)
        speed = (self.speed + self.speed_amp * math.sin(TWO_PI * t / self.speed_period)) * frac
        w = (self.yaw_rate + self.yaw_amp * math.sin(TWO_PI * t / self.yaw_period)) * frac
        return w, speed, -w * self.lever

    def _rhs(self, t, y):
        w, vx, vy = self._rates(t)
        c, s = math.cos(y[0]), math.sin(y[0])
        return [w, c * vx + s * vy, -s * vx + c * vy]

    def _solution(self, t_max: float):
        """Dense solution covering ``[0, t_max]``, extended geometrically on demand."""
        sol = self.__dict__.get("_sol")
        if sol is None or sol.t[-1] < t_max:
            span = min(self.t_end, max(2.0 * t_max, 10.0))
            sol = solve_ivp(
                self._rhs, (0.0, span), [self.theta0, self.x0, self.y0],
                method="DOP853", rtol=1e-12, atol=1e-12, dense_output=True,
                max_step=0.05,
            )
            object.__setattr__(self, "_sol", sol)
        return sol

    def state_at(self, t) -> np.ndarray:
        """``(theta, x, y)`` rows at times ``t``."""
        t = np.asarray(t, dtype=float)
        if np.any(t < 0) or np.any(t > self.t_end):
            raise ValueError("time outside the trajectory span")
        return self._solution(float(np.max(t, initial=0.0))).sol(t).T

    def pose(self, t: float) -> Pose2:
        theta, x, y = self.state_at(float(t))
        return Pose2.from_angle(theta, (x, y), float(t))


@dataclass
class Scene:
    reflectors: np.ndarray
    trajectory: Trajectory = field(default_factory=Trajectory)
    n_azimuths: int = 400
    n_range_bins: int = 400
    range_resolution: float = 0.25
    scan_period: float = 0.25
    beam_width: float = 0.0157
    pattern: str = "triangular"
    beta: float = 0.15
    intensity_noise: float = 0.0
    range_psf: float = 1.0
    gyro_noise: float = 0.0
    gyro_bias: float = 0.0
    gyro_rate: float = 200.0
    doppler_bias_y: float = 0.0
    traffic_spacing: float = 0.0
    traffic_speed: float = 0.0
    traffic_offset: float = 0.0
    traffic_reflectivity: float = 1.0
    seed: int = 0

    def __post_init__(self):
        self.reflectors = np.asarray(self.reflectors, dtype=float).reshape(-1, 3)
        if not self.scan_period > 0:
            raise ValueError("scan_period must be positive")
        if self.pattern not in ("triangular", "sawtooth"):
            raise ValueError(f"unknown chirp pattern {self.pattern!r}")

    @property
    def max_range(self) -> float:
        return (self.n_range_bins - 1) * self.range_resolution

    def azimuths(self) -> np.ndarray:
        return np.arange(self.n_azimuths) * (TWO_PI / self.n_azimuths)

    def row_times(self, scan_start: float) -> np.ndarray:
        return scan_start + np.arange(self.n_azimuths) * (self.scan_period / self.n_azimuths)

    def traffic_at(self, t: float, x_min: float, x_max: float) -> np.ndarray:
        """``(x, y, reflectivity)`` of the lane vehicles between ``x_min`` and ``x_max`` at time ``t``.

        Vehicles are evenly spaced along the world x axis at
        ``y = traffic_offset`` and all move at ``traffic_speed`` along x
        (negative for oncoming traffic).  ``traffic_spacing == 0`` disables
        the lane.
        """
        if self.traffic_spacing <= 0:
            return np.zeros((0, 3))
        shift = self.traffic_speed * t
        k = np.arange(math.ceil((x_min - shift) / self.traffic_spacing), math.floor((x_max - shift) / self.traffic_spacing) + 1)
        xs = k * self.traffic_spacing + shift
        return np.column_stack([xs, np.full_like(xs, self.traffic_offset), np.full_like(xs, self.traffic_reflectivity)])

    def chirp_dir(self) -> np.ndarray:
        if self.pattern == "sawtooth":
            return np.full(self.n_azimuths, Chirp.UP, dtype=np.int8)
        return np.where(np.arange(self.n_azimuths) % 2 == 0, Chirp.UP, Chirp.DOWN).astype(np.int8)


def _row_rng(seed: int, scan_start: float) -> np.random.Generator:
    key = int(round(scan_start * 1e6))
    return np.random.default_rng(np.random.SeedSequence([int(seed) & 0xFFFFFFFF, key & 0xFFFFFFFF]))


def synth_scan(scene: Scene, scan_start: float) -> RadarScan:
    """Render one revolution starting at ``scan_start``."""
    n, m, res = scene.n_azimuths, scene.n_range_bins, scene.range_resolution
    az = scene.azimuths()
    times = scene.row_times(scan_start)
    chirp = scene.chirp_dir()
    traj = scene.trajectory
    poses = traj.state_at(times)
    v_app = traj.body_velocity(times) + np.array([0.0, scene.doppler_bias_y])
    img = np.zeros((n, m))
    refl = scene.reflectors

    # coarse range gate with the scan's centre position
    centre = poses[n // 2, 1:]
    sweep = np.linalg.norm(poses[-1, 1:] - poses[0, 1:])
    near = np.linalg.norm(refl[:, :2] - centre, axis=1) <= scene.max_range + sweep + 1.0
    refl = refl[near]
    half_sign = np.where(chirp == Chirp.UP, 0.5, -0.5)

    reach = scene.max_range + 1.0
    for i in range(n):
        theta, px, py = poses[i]
        c, s = math.cos(theta), math.sin(theta)
        radial = math.cos(az[i]) * v_app[i, 0] + math.sin(az[i]) * v_app[i, 1]
        cars = scene.traffic_at(times[i], px - reach, px + reach)
        pts = np.vstack([refl, cars]) if len(cars) else refl
        # sensor velocity relative to each reflector, projected on the beam; vehicles move along world x
        rel = np.full(len(pts), radial)
        rel[len(refl):] -= scene.traffic_speed * (math.cos(az[i]) * c + math.sin(az[i]) * s)
        dx, dy = pts[:, 0] - px, pts[:, 1] - py
        # body coordinates: R^T (x - p)
        bx = c * dx - s * dy
        by = s * dx + c * dy
        rng = np.hypot(bx, by)
        delta = (np.arctan2(by, bx) - az[i] + np.pi) % TWO_PI - np.pi
        gain = np.exp(-0.5 * (delta / scene.beam_width) ** 2)
        keep = (gain > 1e-4) & (rng <= scene.max_range)
        if not np.any(keep):
            continue
        measured = rng[keep] + half_sign[i] * scene.beta * rel[keep]
        f = measured / res
        j0 = np.floor(f).astype(np.intp)
        a = f - j0
        amp = pts[keep, 2] * gain[keep]
        for j, w in ((j0, 1.0 - a), (j0 + 1, a)):
            ok = (j >= 0) & (j < m)
            np.add.at(img[i], j[ok], (amp * w)[ok])

    if scene.range_psf > 0:
        img = gaussian_filter1d(img, scene.range_psf, axis=1, mode="constant")
    if scene.intensity_noise > 0:
        rng_gen = _row_rng(scene.seed, scan_start)
        img = img + scene.intensity_noise * np.abs(rng_gen.standard_normal(img.shape))
    img = np.maximum(img, 0.0).astype(np.float32).astype(np.float64)
    return RadarScan(az, times, res, img, chirp)


def synth_gyro(scene: Scene, t0: float, t1: float, rate_hz: float | None = None) -> GyroSeries:
    """Gyro samples ``true rate + bias + noise`` on a regular grid covering ``[t0, t1]``."""
    rate_hz = scene.gyro_rate if rate_hz is None else rate_hz
    count = int(math.ceil((t1 - t0) * rate_hz - 1e-9)) + 1
    ts = t0 + np.arange(count) / rate_hz
    rates = scene.trajectory.yaw_rate_at(ts) + scene.gyro_bias
    if scene.gyro_noise > 0:
        gen = np.random.default_rng(np.random.SeedSequence([int(scene.seed) & 0xFFFFFFFF, 0x6779]))
        rates = rates + scene.gyro_noise * gen.standard_normal(count)
    return GyroSeries(ts, rates)


def scan_starts(scene: Scene, duration: float) -> np.ndarray:
    count = int(math.floor(duration / scene.scan_period + 1e-9))
    return np.arange(count) * scene.scan_period


def true_velocity(scene: Scene, scan_start: float) -> np.ndarray:
    """Mean radar-frame velocity over the rows of the scan starting at ``scan_start``."""
    return scene.trajectory.body_velocity(scene.row_times(scan_start)).mean(axis=0)


def emit_dataset(scene: Scene, duration: float, out_dir: str | Path) -> Path:
    """Write scans, gyro and ground-truth poses at scan boundaries."""
    out = Path(out_dir)
    (out / "scans").mkdir(parents=True, exist_ok=True)
    starts = scan_starts(scene, duration)
    for k, t0 in enumerate(starts):
        io.write_scan(synth_scan(scene, float(t0)), out / "scans" / f"{k:06d}")
    t_last = (len(starts)) * scene.scan_period
    io.write_gyro(synth_gyro(scene, 0.0, t_last + 0.1), out / "gyro.csv")
    bounds = np.arange(len(starts) + 1) * scene.scan_period
    io.write_poses([scene.trajectory.pose(t) for t in bounds], out / "gt_poses.csv")
    io.write_config(Config(beta=scene.beta), out / "config.txt")
    write_scene(scene, out / "scene.txt")
    return out


# presets --------------------------------------------------------------------


def _clear_of_path(points: np.ndarray, traj: Trajectory, duration: float, margin: float) -> np.ndarray:
    ts = np.linspace(0.0, duration, int(duration * 4) + 2)
    path = traj.state_at(ts)[:, 1:]
    d = np.min(np.linalg.norm(points[:, None, :2] - path[None], axis=2), axis=1)
    return points[d > margin]


def suburb(seed: int = 0, duration: float = 60.0) -> Scene:
    """Feature-rich loop: 200 point reflectors scattered over 150 x 150 m."""
    traj = Trajectory(
        speed=6.0, static_time=1.0, ramp_time=3.0, yaw_rate=0.15, yaw_amp=0.05,
        yaw_period=12.0, x0=0.0, y0=40.0, t_end=duration + 2.0,
    )
    gen = np.random.default_rng(seed)
    pts = np.column_stack([
        gen.uniform(-75.0, 75.0, 400), gen.uniform(-75.0, 75.0, 400), gen.uniform(0.4, 1.0, 400),
    ])
    pts = _clear_of_path(pts, traj, duration, 3.0)[:200]
    return Scene(pts, traj, seed=seed)


def _lines(x0: float, x1: float, spacing: float, offsets, reflectivity: float) -> np.ndarray:
    xs = np.arange(x0, x1, spacing)
    return np.vstack([np.column_stack([xs, np.full_like(xs, y), np.full_like(xs, reflectivity)]) for y in offsets])


def tunnel(seed: int = 0, duration: float = 30.0) -> Scene:
    """Two continuous walls 8 m apart along a straight road (reflectors every 5 cm)."""
    traj = Trajectory(speed=12.0, static_time=1.0, ramp_time=5.0, t_end=duration + 2.0)
    length = traj.speed * duration
    return Scene(_lines(-110.0, length + 110.0, 0.05, (-4.0, 4.0), 0.8), traj, seed=seed)


def corridor_empty(seed: int = 0, duration: float = 30.0) -> Scene:
    """Straight road lined only by closely spaced guard-rail posts.

    Posts are 5 cm apart, well below the beam footprint at the rail
    distance, so the rails image as featureless lines and the scene carries
    no longitudinal structure.  The speed
    varies by +-3 m/s around 15 m/s, so holding the previous velocity is not
    enough to track it.
    """
    traj = Trajectory(
        speed=15.0, static_time=1.0, ramp_time=6.0, speed_amp=3.0, speed_period=8.0, t_end=duration + 2.0,
    )
    length = (traj.speed + traj.speed_amp) * duration
    return Scene(_lines(-110.0, length + 110.0, 0.05, (-7.0, 7.0), 0.6), traj, seed=seed)


PRESETS = {"suburb": suburb, "tunnel": tunnel, "corridor-empty": corridor_empty}


def make_scene(name: str, seed: int = 0, duration: float = 60.0) -> Scene:
    if name not in PRESETS:
        raise KeyError(f"unknown scene preset {name!r}; choose from {sorted(PRESETS)}")
    return PRESETS[name](seed=seed, duration=duration)


# scene files -----------------------------------------------------------------

_TRAJ_KEYS = {f.name: f for f in fields(Trajectory)}
_SCENE_KEYS = {f.name: f for f in fields(Scene) if f.name not in ("reflectors", "trajectory")}


def read_scene(path: str | Path, seed: int | None = None) -> Scene:
    """Parse ``key=value`` lines (``traj_*`` keys set the trajectory) and ``x,y,reflectivity`` lines."""
    traj_kw, scene_kw, refl = {}, {}, []
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" in line:
            key, value = (s.strip() for s in line.split("=", 1))
            if key.startswith("traj_") and key[5:] in _TRAJ_KEYS:
                traj_kw[key[5:]] = float(value)
            elif key in _SCENE_KEYS:
                kind = type(_SCENE_KEYS[key].default)
                scene_kw[key] = value if kind is str else kind(float(value)) if kind is int else kind(value)
            else:
                raise KeyError(f"{path}: unknown scene key {key!r}")
        else:
            refl.append([float(v) for v in line.split(",")])
    scene = Scene(np.array(refl).reshape(-1, 3), Trajectory(**traj_kw), **scene_kw)
    if seed is not None:
        scene = replace(scene, seed=seed)
    return scene


def write_scene(scene: Scene, path: str | Path) -> None:
    lines = [f"traj_{k}={getattr(scene.trajectory, k)!r}" for k in _TRAJ_KEYS]
    lines += [f"{k}={getattr(scene, k)}" for k in _SCENE_KEYS]
    lines += [f"{x!r},{y!r},{r!r}" for x, y, r in scene.reflectors.tolist()]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def ensure_duration(scene: Scene, duration: float) -> Scene:
    """Extend the trajectory integration span to cover ``duration`` plus margin."""
    if scene.trajectory.t_end >= duration + 1.0:
        return scene
    return replace(scene, trajectory=replace(scene.trajectory, t_end=duration + 2.0))
