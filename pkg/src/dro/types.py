"""Shared domain types and the planar rotation convention.

Rotations follow ``R(theta) = [[cos, sin], [-sin, cos]]`` throughout the
package: a pose maps body coordinates to world coordinates as
``x_world = R @ x_body + p``.  Angles are kept unnormalized; wrap only when
comparing.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, fields, replace

import numpy as np

TWO_PI = 2.0 * np.pi


class Chirp(enum.IntEnum):
    DOWN = 0
    UP = 1


class Mode(str, enum.Enum):
    GD = "gd"
    G = "g"
    D = "d"

    @property
    def uses_intensity(self) -> bool:
        return self in (Mode.GD, Mode.G)

    @property
    def uses_doppler(self) -> bool:
        return self in (Mode.GD, Mode.D)


def angle_to_rot(theta: float) -> np.ndarray:
    """Rotation matrix for ``theta`` with ``+sin`` in the top-right entry."""
    theta = float(theta)
    if not np.isfinite(theta):
        raise ValueError(f"angle must be finite, got {theta}")
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, s], [-s, c]])


def rot_to_angle(rot: np.ndarray) -> float:
    return float(np.arctan2(rot[0, 1], rot[0, 0]))


def d_rot(theta: float) -> np.ndarray:
    """Derivative of :func:`angle_to_rot` with respect to the angle."""
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[-s, c], [-c, -s]])


def wrap_angle(theta):
    return (np.asarray(theta) + np.pi) % TWO_PI - np.pi


def lever_velocity(v_body: np.ndarray, omega: float, lever: np.ndarray) -> np.ndarray:
    """Velocity of the body-fixed point at ``lever`` given the origin's velocity.

    Under this package's rotation convention a positive rate turns the body
    clockwise, so the rigid-body term is ``omega * (ly, -lx)``.
    """
    lever = np.asarray(lever, dtype=float)
    return np.asarray(v_body, dtype=float) + omega * np.array([lever[1], -lever[0]])


@dataclass(frozen=True)
class Pose2:
    rotation: np.ndarray
    position: np.ndarray
    timestamp: float = 0.0

    def __post_init__(self):
        rot = np.asarray(self.rotation, dtype=float)
        if rot.shape != (2, 2):
            raise ValueError("rotation must be 2x2")
        if abs(np.linalg.det(rot) - 1.0) > 1e-9:
            raise ValueError("rotation determinant must be 1")
        object.__setattr__(self, "rotation", rot)
        object.__setattr__(self, "position", np.asarray(self.position, dtype=float).reshape(2))

    @classmethod
    def from_angle(cls, theta: float, position=(0.0, 0.0), timestamp: float = 0.0) -> Pose2:
        return cls(angle_to_rot(theta), np.asarray(position, dtype=float), timestamp)

    @classmethod
    def identity(cls, timestamp: float = 0.0) -> Pose2:
        return cls(np.eye(2), np.zeros(2), timestamp)

    @property
    def angle(self) -> float:
        return rot_to_angle(self.rotation)

    def compose(self, other: Pose2) -> Pose2:
        return Pose2(
            self.rotation @ other.rotation,
            self.rotation @ other.position + self.position,
            other.timestamp,
        )

    def inverse(self) -> Pose2:
        rt = self.rotation.T
        return Pose2(rt, -rt @ self.position, self.timestamp)

    def apply(self, points: np.ndarray) -> np.ndarray:
        return np.asarray(points) @ self.rotation.T + self.position


@dataclass(frozen=True)
class RadarScan:
    """One revolution of polar intensity data.

    ``intensity[n, m]`` is the return of azimuth ``n`` at range ``m * range_resolution``.
    """

    azimuths: np.ndarray
    timestamps: np.ndarray
    range_resolution: float
    intensity: np.ndarray
    chirp_dir: np.ndarray

    def __post_init__(self):
        az = np.asarray(self.azimuths, dtype=float)
        ts = np.asarray(self.timestamps, dtype=float)
        img = np.asarray(self.intensity)
        chirp = np.asarray(self.chirp_dir, dtype=np.int8)
        if img.ndim != 2:
            raise ValueError("intensity must be an N x M matrix")
        n, m = img.shape
        if n < 2 or m < 2:
            raise ValueError(f"scan needs at least 2x2 bins, got {img.shape}")
        if az.shape != (n,) or ts.shape != (n,) or chirp.shape != (n,):
            raise ValueError("azimuths, timestamps and chirp_dir must have one entry per row")
        if np.any(np.diff(az) <= 0):
            raise ValueError("azimuths must be strictly increasing")
        if az[-1] - az[0] >= TWO_PI + 1e-9:
            raise ValueError("azimuths span more than one revolution")
        if np.any(np.diff(ts) <= 0):
            raise ValueError("timestamps must be strictly increasing")
        if not np.all(np.isfinite(img)) or np.any(img < 0):
            raise ValueError("intensities must be finite and non-negative")
        if not np.all((chirp == 0) | (chirp == 1)):
            raise ValueError("chirp_dir entries must be UP (1) or DOWN (0)")
        if not self.range_resolution > 0:
            raise ValueError("range_resolution must be positive")
        object.__setattr__(self, "azimuths", az)
        object.__setattr__(self, "timestamps", ts)
        object.__setattr__(self, "intensity", img)
        object.__setattr__(self, "chirp_dir", chirp)
        object.__setattr__(self, "range_resolution", float(self.range_resolution))

    @property
    def shape(self) -> tuple[int, int]:
        return self.intensity.shape

    @property
    def ranges(self) -> np.ndarray:
        return np.arange(self.intensity.shape[1]) * self.range_resolution

    @property
    def is_triangular(self) -> bool:
        return bool(np.all(np.diff(self.chirp_dir.astype(int)) != 0))

    @property
    def start_time(self) -> float:
        return float(self.timestamps[0])

    def end_time(self) -> float:
        """Estimated first timestamp of the following scan."""
        ts = self.timestamps
        return float(ts[-1] + (ts[-1] - ts[0]) / (len(ts) - 1))

    def with_intensity(self, intensity: np.ndarray) -> RadarScan:
        return replace(self, intensity=intensity)


@dataclass
class GyroSeries:
    timestamps: np.ndarray
    rates: np.ndarray
    bias: float = 0.0

    def __post_init__(self):
        self.timestamps = np.asarray(self.timestamps, dtype=float)
        self.rates = np.asarray(self.rates, dtype=float)
        if self.timestamps.shape != self.rates.shape or self.timestamps.ndim != 1:
            raise ValueError("timestamps and rates must be 1-D and of equal length")
        if np.any(np.diff(self.timestamps) <= 0):
            raise ValueError("gyro timestamps must be strictly increasing")

    def covers(self, t0: float, t1: float) -> bool:
        return len(self.timestamps) >= 2 and self.timestamps[0] <= t0 and self.timestamps[-1] >= t1

    def window(self, t0: float, t1: float) -> GyroSeries:
        """Samples bracketing ``[t0, t1]`` (one extra knot on each side when available)."""
        ts = self.timestamps
        i0 = max(int(np.searchsorted(ts, t0, side="right")) - 1, 0)
        i1 = min(int(np.searchsorted(ts, t1, side="left")) + 1, len(ts))
        return GyroSeries(ts[i0:i1], self.rates[i0:i1], self.bias)

    def has_gap(self, t0: float, t1: float, max_dt: float) -> bool:
        w = self.window(t0, t1)
        return len(w.timestamps) < 2 or bool(np.any(np.diff(w.timestamps) > max_dt))


@dataclass(frozen=True)
class ScanState:
    v_body: np.ndarray
    anchor: Pose2
    omega: float | None = None

    def __post_init__(self):
        v = np.asarray(self.v_body, dtype=float).reshape(2)
        if not np.all(np.isfinite(v)):
            raise ValueError("v_body must be finite")
        object.__setattr__(self, "v_body", v)

    @property
    def vector(self) -> np.ndarray:
        """Optimization variables: ``[omega, vx, vy]`` or ``[vx, vy]``."""
        if self.omega is None:
            return self.v_body.copy()
        return np.concatenate([[self.omega], self.v_body])

    def with_vector(self, x: np.ndarray) -> ScanState:
        x = np.asarray(x, dtype=float)
        if self.omega is None:
            return replace(self, v_body=x[:2])
        return replace(self, omega=float(x[0]), v_body=x[1:3])


@dataclass
class LocalMap:
    image: np.ndarray
    origin: np.ndarray
    resolution: float
    frame_time: float = 0.0

    def __post_init__(self):
        self.image = np.asarray(self.image, dtype=float)
        self.origin = np.asarray(self.origin, dtype=float).reshape(2)
        if not self.resolution > 0:
            raise ValueError("map resolution must be positive")
        if self.image.ndim != 2 or not np.all(np.isfinite(self.image)) or np.any(self.image < 0):
            raise ValueError("map image must be a finite, non-negative matrix")

    @classmethod
    def empty(cls, extent: float, resolution: float, frame_time: float = 0.0) -> LocalMap:
        size = int(round(extent / resolution)) + 1
        half = (size - 1) * resolution / 2.0
        return cls(np.zeros((size, size)), np.array([-half, -half]), resolution, frame_time)

    def pixel_centers(self) -> tuple[np.ndarray, np.ndarray]:
        h, w = self.image.shape
        xs = self.origin[0] + np.arange(w) * self.resolution
        ys = self.origin[1] + np.arange(h) * self.resolution
        return np.meshgrid(xs, ys)


@dataclass(frozen=True)
class Config:
    gamma: float = 0.1
    beta: float = 0.15
    map_resolution: float = 0.5
    map_extent: float = 200.0
    gp_lengthscales: tuple[float, float] = (1.0, 1.5)
    gp_noise: float = 0.1
    gp_neighborhood: tuple[int, int] = (5, 5)
    blur_sigma: float = 1.0
    doppler_interp: str = "cubic"
    step_init: float = 0.1
    step_min: float = 1e-4
    max_iters: int = 60
    accel_threshold: float = 15.0
    robust_outer_iters: int = 2
    static_vel_threshold: float = 0.05
    q_bias_samples: int = 100
    bias_lowpass_alpha: float = 0.05
    vy_bias_lowpass_alpha: float = 0.02
    vbias_iters: int = 10
    axle_offset: float = 0.0
    max_speed: float = 60.0
    gyro_max_gap: float = 0.05
    mode: Mode = Mode.GD

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(str(getattr(self.mode, "value", self.mode)).lower()))
        object.__setattr__(self, "gp_lengthscales", tuple(float(x) for x in self.gp_lengthscales))
        object.__setattr__(self, "gp_neighborhood", tuple(int(x) for x in self.gp_neighborhood))
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError("gamma must lie in [0, 1]")
        for name in ("beta", "map_resolution", "map_extent", "gp_noise", "step_init", "step_min"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if any(s <= 0 for s in self.gp_lengthscales):
            raise ValueError("gp_lengthscales must be positive")
        if any(k <= 0 or k % 2 == 0 for k in self.gp_neighborhood):
            raise ValueError("gp_neighborhood entries must be odd positive integers")
        if self.doppler_interp not in ("linear", "cubic"):
            raise ValueError("doppler_interp must be 'linear' or 'cubic'")
        for name in ("bias_lowpass_alpha", "vy_bias_lowpass_alpha"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")

    @classmethod
    def field_names(cls) -> list[str]:
        return [f.name for f in fields(cls)]
