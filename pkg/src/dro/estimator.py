"""Scikit-learn style front ends: the odometry estimator and the chirp infill transformer."""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError
from sklearn.utils.validation import check_is_fitted

from .bias import GyroBiasEstimator, LateralBiasFilter
from .gp_infill import ChirpImages, build_stencil, filter_rows, split_and_infill
from .metrics import interpolate_poses
from .motion import ConstantRateModel, GyroModel, pose_at
from .registration import update_map
from .solver import Problem, SolveResult, acceleration_exceeded, optimize, robust_reoptimize
from .types import Config, GyroSeries, LocalMap, Mode, Pose2, RadarScan, ScanState

log = logging.getLogger(__name__)


def check_scan(scan) -> RadarScan:
    if not isinstance(scan, RadarScan):
        raise TypeError(f"expected a RadarScan, got {type(scan).__name__}")
    return scan


class ChirpInfill(TransformerMixin, BaseEstimator):
    """Split triangular scans by chirp and infill the missing rows.

    ``transform`` maps a scan (or a list of scans) to :class:`ChirpImages`,
    filtered per row unless ``filter=False``.
    """

    def __init__(self, lengthscales=(1.0, 1.5), noise=0.1, neighborhood=(5, 5), normalize=True, filter=True, blur_sigma=1.0):
        self.lengthscales = lengthscales
        self.noise = noise
        self.neighborhood = neighborhood
        self.normalize = normalize
        self.filter = filter
        self.blur_sigma = blur_sigma

    def fit(self, X=None, y=None):
        self.stencil_ = build_stencil(self.lengthscales, self.neighborhood, self.noise)
        return self

    def _one(self, scan: RadarScan) -> ChirpImages:
        images = split_and_infill(check_scan(scan), self.stencil_, self.normalize)
        if not self.filter:
            return images
        return ChirpImages(
            filter_rows(images.up, self.blur_sigma),
            filter_rows(images.down, self.blur_sigma),
            images.azimuths, images.timestamps, images.range_resolution,
        )

    def transform(self, X):
        check_is_fitted(self, "stencil_")
        if isinstance(X, RadarScan):
            return self._one(X)
        return [self._one(s) for s in X]


@dataclass
class ScanRecord:
    """Per-scan outcome kept by the estimator."""

    start_time: float
    state: ScanState
    iterations: int
    score: float
    robust: bool
    flagged: bool
    degenerate: bool
    gyro_bias: float
    vy_bias: float
    fallback: bool = False


class DirectRadarOdometry(BaseEstimator):
    """Scan-to-local-map radar odometry with an optional Doppler velocity term.

    ``fit`` consumes a sequence of scans (and optionally a gyro series) and
    exposes the trajectory in ``poses_``: one pose per scan start plus the
    start of the scan that would follow the last one.  ``partial_fit`` feeds
    scans one at a time.  Parameters mirror :class:`dro.types.Config`.
    """

    def __init__(
        self,
        mode="gd",
        gamma=0.1,
        beta=0.15,
        map_resolution=0.5,
        map_extent=200.0,
        gp_lengthscales=(1.0, 1.5),
        gp_noise=0.1,
        gp_neighborhood=(5, 5),
        blur_sigma=1.0,
        doppler_interp="cubic",
        step_init=0.1,
        step_min=1e-4,
        max_iters=60,
        accel_threshold=15.0,
        robust_outer_iters=2,
        static_vel_threshold=0.05,
        q_bias_samples=100,
        bias_lowpass_alpha=0.05,
        vy_bias_lowpass_alpha=0.02,
        vbias_iters=10,
        axle_offset=0.0,
        max_speed=60.0,
        gyro_max_gap=0.05,
    ):
        self.mode = mode
        self.gamma = gamma
        self.beta = beta
        self.map_resolution = map_resolution
        self.map_extent = map_extent
        self.gp_lengthscales = gp_lengthscales
        self.gp_noise = gp_noise
        self.gp_neighborhood = gp_neighborhood
        self.blur_sigma = blur_sigma
        self.doppler_interp = doppler_interp
        self.step_init = step_init
        self.step_min = step_min
        self.max_iters = max_iters
        self.accel_threshold = accel_threshold
        self.robust_outer_iters = robust_outer_iters
        self.static_vel_threshold = static_vel_threshold
        self.q_bias_samples = q_bias_samples
        self.bias_lowpass_alpha = bias_lowpass_alpha
        self.vy_bias_lowpass_alpha = vy_bias_lowpass_alpha
        self.vbias_iters = vbias_iters
        self.axle_offset = axle_offset
        self.max_speed = max_speed
        self.gyro_max_gap = gyro_max_gap

    @classmethod
    def from_config(cls, config: Config) -> DirectRadarOdometry:
        params = {name: getattr(config, name) for name in Config.field_names()}
        params["mode"] = config.mode.value
        return cls(**params)

    def get_config(self) -> Config:
        return Config(**{name: getattr(self, name) for name in Config.field_names()})

    # fitting ------------------------------------------------------------------

    def _reset(self, gyro: GyroSeries | None):
        self.config_ = self.get_config()
        cfg = self.config_
        self.stencil_ = build_stencil(cfg.gp_lengthscales, cfg.gp_neighborhood, cfg.gp_noise)
        self.gyro_ = gyro
        self.gyro_bias_ = GyroBiasEstimator.from_config(cfg, bias=gyro.bias if gyro is not None else 0.0)
        self.vy_filter_ = LateralBiasFilter.from_config(cfg)
        self.local_map_ = None
        self.poses_ = []
        self.records_ = []
        self._prev = None

    def fit(self, X, y=None, gyro: GyroSeries | None = None):
        """Run odometry over the scans in ``X`` in order."""
        self._reset(gyro)
        for scan in X:
            self._step(check_scan(scan))
        return self

    def partial_fit(self, scan: RadarScan, gyro: GyroSeries | None = None):
        if not hasattr(self, "config_"):
            self._reset(gyro)
        elif gyro is not None:
            self.gyro_ = gyro
        self._step(check_scan(scan))
        return self

    def predict(self, times) -> np.ndarray:
        """Interpolated ``(x, y, theta)`` at ``times`` along the estimated poses."""
        if not getattr(self, "poses_", None):
            raise NotFittedError("DirectRadarOdometry has no poses yet; call fit first")
        return interpolate_poses(self.trajectory_array(), np.asarray(times, dtype=float))

    def trajectory_array(self) -> np.ndarray:
        return np.array([[p.timestamp, *p.position, p.angle] for p in self.poses_])

    @property
    def velocities_(self) -> np.ndarray:
        return np.array([r.state.v_body for r in self.records_])

    # one scan -----------------------------------------------------------------

    def _model(self, scan: RadarScan):
        t1, t_next = scan.start_time, scan.end_time()
        gyro = self.gyro_
        if gyro is None:
            return ConstantRateModel(t1), False
        if not gyro.covers(t1, t_next) or gyro.has_gap(t1, t_next, self.config_.gyro_max_gap):
            log.warning("gyro gap within scan at t=%.3f; using constant-rate model", t1)
            return ConstantRateModel(t1), True
        # the caller's series is left untouched; the running bias lives on a copy
        return GyroModel(replace(gyro, bias=self.gyro_bias_.bias), t1, t_next), False

    def _step(self, scan: RadarScan):
        cfg = self.config_
        mode = cfg.mode
        if mode.uses_doppler and not scan.is_triangular:
            raise ValueError(f"mode {mode.value!r} needs triangular chirp data")
        t1, t_next = scan.start_time, scan.end_time()
        model, fallback = self._model(scan)
        filtered = scan.with_intensity(filter_rows(scan.intensity, cfg.blur_sigma)) if mode.uses_intensity else None
        images = None
        if mode.uses_doppler:
            raw = split_and_infill(scan, self.stencil_)
            images = ChirpImages(
                filter_rows(raw.up, cfg.blur_sigma), filter_rows(raw.down, cfg.blur_sigma),
                raw.azimuths, raw.timestamps, raw.range_resolution,
            )

        anchor = self.poses_[-1] if self.poses_ else Pose2.identity(t1)
        anchor = Pose2(anchor.rotation, anchor.position, t1)
        prev = self._prev
        v0 = prev.v_body if prev is not None else np.zeros(2)
        omega0 = None
        if model.estimates_omega:
            omega0 = prev.omega if prev is not None and prev.omega is not None else 0.0
            if fallback and prev is None and self.gyro_ is not None:
                omega0 = 0.0
        init = ScanState(v0, anchor, omega0)
        vbias = self.vy_filter_.vector if mode.uses_doppler and self.vy_filter_.initialized else None

        if prev is None or (mode.uses_intensity and self.local_map_ is None):
            if mode.uses_doppler:
                result = optimize(Problem(model, cfg, images=images, use_intensity=False, vbias=vbias), init)
            else:
                result = SolveResult(init, 0.0, 0)
        else:
            problem = Problem(
                model, cfg, filtered, self.local_map_, images,
                use_intensity=mode.uses_intensity, use_doppler=mode.uses_doppler, vbias=vbias,
            )
            result = optimize(problem, init)
            dt = t1 - self._prev_time
            if acceleration_exceeded(result.state.v_body, prev.v_body, dt, cfg.accel_threshold):
                log.info("acceleration threshold exceeded at t=%.3f; robust re-run", t1)
                result = robust_reoptimize(problem, init, prev, dt)
        state = result.state

        self._update_biases(scan, state, model, images)
        if mode.uses_intensity:
            self.local_map_ = update_map(self.local_map_, filtered, state, model, cfg, vbias)

        if not self.poses_:
            self.poses_.append(anchor)
        self.poses_[-1] = anchor
        self.poses_.append(pose_at(state, model, t_next))
        self.records_.append(ScanRecord(
            t1, state, result.iterations, result.score, result.robust, result.flagged,
            result.degenerate, self.gyro_bias_.bias, self.vy_filter_.bias, fallback,
        ))
        self._prev = state
        self._prev_time = t1

    def _update_biases(self, scan: RadarScan, state: ScanState, model, images):
        cfg = self.config_
        speed = float(np.linalg.norm(state.v_body))
        if self.gyro_ is not None:
            ts = self.gyro_.timestamps
            sel = (ts >= scan.start_time) & (ts < scan.end_time())
            self.gyro_bias_.update(self.gyro_.rates[sel], speed)
        if cfg.mode.uses_doppler and cfg.vy_bias_lowpass_alpha > 0:
            doppler_only = optimize(
                Problem(model, cfg, images=images, use_intensity=False), state, max_iters=cfg.vbias_iters,
            ).state
            omega = state.omega if state.omega is not None else model.mean_rate()
            self.vy_filter_.update(doppler_only.v_body, omega)

