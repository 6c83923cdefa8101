"""Online gyro-bias and lateral Doppler-velocity-bias estimation."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .types import Config, lever_velocity


def lowpass(previous: float, observation: float, alpha: float) -> float:
    return (1.0 - alpha) * previous + alpha * observation


@dataclass
class GyroBiasEstimator:
    """Zero-velocity gyro bias heuristic.

    The bias is initialized with the mean of the first ``Q`` raw samples
    collected over consecutive static scans, then low-pass filtered with
    the mean of every further static window.
    """

    q_samples: int = 100
    alpha: float = 0.05
    static_threshold: float = 0.05
    bias: float = 0.0
    initialized: bool = False
    _buffer: list = field(default_factory=list, repr=False)

    @classmethod
    def from_config(cls, config: Config, bias: float = 0.0) -> GyroBiasEstimator:
        return cls(config.q_bias_samples, config.bias_lowpass_alpha, config.static_vel_threshold, bias)

    def update(self, raw_rates: np.ndarray, speed: float) -> float:
        raw_rates = np.asarray(raw_rates, dtype=float)
        if speed >= self.static_threshold:
            if not self.initialized:
                self._buffer.clear()
            return self.bias
        if raw_rates.size == 0:
            return self.bias
        if not self.initialized:
            self._buffer.extend(raw_rates.tolist())
            if len(self._buffer) >= self.q_samples:
                self.bias = float(np.mean(self._buffer[: self.q_samples]))
                self.initialized = True
                self._buffer.clear()
        else:
            self.bias = lowpass(self.bias, float(np.mean(raw_rates)), self.alpha)
        return self.bias


def gyro_bias_update(estimator: GyroBiasEstimator, gyro_window: np.ndarray, vel_estimate) -> float:
    return estimator.update(gyro_window, float(np.linalg.norm(vel_estimate)))


def axle_lateral_velocity(v_radar, omega: float, axle_offset: float) -> float:
    """Lateral velocity of the rear axle; the axle sits ``axle_offset`` behind the radar."""
    return float(lever_velocity(v_radar, omega, np.array([-axle_offset, 0.0]))[1])


@dataclass
class LateralBiasFilter:
    """Low-pass filter on the non-slip violation of the Doppler-only velocity.

    The first observation initializes the filter; ``alpha == 0`` freezes it.
    """

    alpha: float = 0.02
    axle_offset: float = 0.0
    bias: float = 0.0
    initialized: bool = False

    @classmethod
    def from_config(cls, config: Config) -> LateralBiasFilter:
        return cls(config.vy_bias_lowpass_alpha, config.axle_offset)

    def observe(self, v_doppler_only, omega: float) -> float:
        return axle_lateral_velocity(v_doppler_only, omega, self.axle_offset)

    def update(self, v_doppler_only, omega: float) -> float:
        if self.alpha == 0.0:
            return self.bias
        obs = self.observe(v_doppler_only, omega)
        if not self.initialized:
            self.bias, self.initialized = obs, True
        else:
            self.bias = lowpass(self.bias, obs, self.alpha)
        return self.bias

    @property
    def vector(self) -> np.ndarray:
        """Bias as a radar-frame velocity offset added to Doppler shift computations."""
        return np.array([0.0, self.bias])


def lateral_vbias_update(filt: LateralBiasFilter, v_doppler_only, omega: float) -> float:
    return filt.update(v_doppler_only, omega)
