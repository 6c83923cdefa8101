"""Continuous rotation and position over one scan interval.

Both models describe the motion relative to the radar frame at the scan's
first timestamp ``t1``: the heading offset ``theta(t)`` and the rotation
integral ``P(t) = int_{t1}^{t} R(theta(s)) ds`` so that the scan-relative
position is ``P(t) @ v_body``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .types import GyroSeries, Pose2, ScanState, angle_to_rot

_SMALL_RATE = 1e-6
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(6)


def theta_const(omega: float, t, t1: float):
    return omega * (np.asarray(t, dtype=float) - t1)


def _rot_stack(theta: np.ndarray) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.stack([np.stack([c, s], -1), np.stack([-s, c], -1)], -2)


def _d_rot_stack(theta: np.ndarray) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.stack([np.stack([-s, c], -1), np.stack([-c, -s], -1)], -2)


def rot_integral_const(omega: float, dt) -> tuple[np.ndarray, np.ndarray]:
    """``int_0^dt R(omega s) ds`` and its derivative w.r.t. ``omega``.

    Returns two ``(..., 2, 2)`` stacks.  Below ``|omega| < 1e-6`` the
    closed form is replaced by its Taylor expansion.
    """
    dt = np.asarray(dt, dtype=float)
    if abs(omega) < _SMALL_RATE:
        w = omega
        s_int = dt - w**2 * dt**3 / 6.0
        c_int = w * dt**2 / 2.0 - w**3 * dt**4 / 24.0
        ds = -w * dt**3 / 3.0
        dc = dt**2 / 2.0 - w**2 * dt**4 / 8.0
    else:
        a = omega * dt
        sa, ca = np.sin(a), np.cos(a)
        s_int = sa / omega
        c_int = (1.0 - ca) / omega
        ds = dt * ca / omega - sa / omega**2
        dc = dt * sa / omega - (1.0 - ca) / omega**2
    integral = np.stack([np.stack([s_int, c_int], -1), np.stack([-c_int, s_int], -1)], -2)
    d_integral = np.stack([np.stack([ds, dc], -1), np.stack([-dc, ds], -1)], -2)
    return integral, d_integral


@dataclass(frozen=True)
class PreintCache:
    """Gyro knots over a scan with cumulative heading and rotation integrals.

    Between knots the bias-corrected rate is linear, so the heading is an
    exact quadratic; the rotation integral over each segment uses
    Gauss-Legendre quadrature of that quadratic heading.
    """

    knot_times: np.ndarray
    knot_rates: np.ndarray
    knot_thetas: np.ndarray
    knot_pos_integrals: np.ndarray

    @classmethod
    def build(cls, gyro: GyroSeries, t1: float, t_end: float) -> PreintCache:
        if not gyro.covers(t1, t_end):
            raise ValueError(f"gyro data does not cover [{t1}, {t_end}]")
        ts, rates = gyro.timestamps, gyro.rates - gyro.bias
        inner = (ts > t1) & (ts < t_end)
        knots = np.concatenate([[t1], ts[inner], [t_end]])
        knot_rates = np.interp(knots, ts, rates)
        dt = np.diff(knots)
        thetas = np.concatenate([[0.0], np.cumsum(0.5 * (knot_rates[1:] + knot_rates[:-1]) * dt)])
        seg = _segment_integral(thetas[:-1], knot_rates[:-1], knot_rates[1:], dt, dt)
        integrals = np.concatenate([np.zeros((1, 2, 2)), np.cumsum(seg, axis=0)])
        return cls(knots, knot_rates, thetas, integrals)

    def _locate(self, t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        k = self.knot_times
        eps = 1e-9 * max(1.0, abs(k[-1]))
        if np.any(t < k[0] - eps) or np.any(t > k[-1] + eps):
            raise ValueError("query outside the preintegrated interval")
        i = np.clip(np.searchsorted(k, t, side="right") - 1, 0, len(k) - 2)
        return i, t - k[i]

    def theta(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        i, h = self._locate(t)
        span = self.knot_times[i + 1] - self.knot_times[i]
        w0, w1 = self.knot_rates[i], self.knot_rates[i + 1]
        return self.knot_thetas[i] + w0 * h + _half_slope(w0, w1, span) * h * h

    def rot_integral(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        i, h = self._locate(t)
        span = self.knot_times[i + 1] - self.knot_times[i]
        part = _segment_integral(
            self.knot_thetas[i], self.knot_rates[i], self.knot_rates[i + 1], span, h
        )
        return self.knot_pos_integrals[i] + part


def _half_slope(w0, w1, span):
    """``(w1 - w0) / (2 span)``, zero on degenerate zero-length segments."""
    w0, w1, span = np.broadcast_arrays(*(np.asarray(x, dtype=float) for x in (w0, w1, span)))
    return np.divide(w1 - w0, 2.0 * span, out=np.zeros(span.shape), where=span > 0)


def _segment_integral(theta0, w0, w1, span, h) -> np.ndarray:
    """``int_0^h R(theta0 + w0 s + (w1 - w0) s^2 / (2 span)) ds`` per segment."""
    theta0, w0, w1, span, h = np.broadcast_arrays(*(np.asarray(x, dtype=float) for x in (theta0, w0, w1, span, h)))
    s = 0.5 * h[..., None] * (_GL_NODES + 1.0)
    theta = theta0[..., None] + w0[..., None] * s + _half_slope(w0, w1, span)[..., None] * s * s
    rots = _rot_stack(theta)
    return 0.5 * h[..., None, None] * np.einsum("k,...kij->...ij", _GL_WEIGHTS, rots)


def theta_preint(gyro: GyroSeries, t, t1: float):
    """Integral of the bias-corrected, linearly interpolated gyro rate from ``t1``."""
    t_arr = np.asarray(t, dtype=float)
    cache = PreintCache.build(gyro, t1, float(np.max(t_arr)) if t_arr.size else t1)
    out = cache.theta(t_arr)
    return float(out) if np.ndim(t) == 0 else out


class ConstantRateModel:
    """Heading ``omega (t - t1)``; ``omega`` is a state variable."""

    estimates_omega = True

    def __init__(self, t1: float):
        self.t1 = float(t1)

    def kinematics(self, omega: float, t):
        """``theta, R, P, dR/domega, dP/domega`` at times ``t``."""
        dt = np.asarray(t, dtype=float) - self.t1
        theta = omega * dt
        integral, d_integral = rot_integral_const(omega, dt)
        d_rot = _d_rot_stack(theta) * dt[..., None, None]
        return theta, _rot_stack(theta), integral, d_rot, d_integral


class GyroModel:
    """Heading from preintegrated gyro rates; no rotational state variable."""

    estimates_omega = False

    def __init__(self, gyro: GyroSeries, t1: float, t_end: float):
        self.t1 = float(t1)
        self.cache = PreintCache.build(gyro, t1, t_end)

    def kinematics(self, omega, t):
        t = np.asarray(t, dtype=float)
        theta = self.cache.theta(t)
        zeros = np.zeros(t.shape + (2, 2))
        return theta, _rot_stack(theta), self.cache.rot_integral(t), zeros, zeros

    def mean_rate(self) -> float:
        k = self.cache
        return float(k.knot_thetas[-1] / (k.knot_times[-1] - k.knot_times[0]))


def relative_pose(state: ScanState, model, t: float) -> tuple[np.ndarray, np.ndarray]:
    """Pose at ``t`` expressed in the radar frame at the scan start."""
    _, rot, integral, _, _ = model.kinematics(_omega(state), np.asarray(t, dtype=float))
    return rot, integral @ state.v_body


def pos_at(state: ScanState, model, t) -> np.ndarray:
    _, _, integral, _, _ = model.kinematics(_omega(state), np.asarray(t, dtype=float))
    anchor = state.anchor
    return anchor.position + (integral @ state.v_body) @ anchor.rotation.T


def rot_at(state: ScanState, model, t) -> np.ndarray:
    _, rot, _, _, _ = model.kinematics(_omega(state), np.asarray(t, dtype=float))
    return state.anchor.rotation @ rot


def vel_world(state: ScanState, model, t) -> np.ndarray:
    return rot_at(state, model, t) @ state.v_body


def _omega(state: ScanState) -> float:
    return 0.0 if state.omega is None else state.omega


def pose_at(state: ScanState, model, t: float):
    _, rot, integral, _, _ = model.kinematics(_omega(state), np.asarray(float(t)))
    rel_p = integral @ state.v_body
    anchor = state.anchor
    return Pose2(anchor.rotation @ rot, anchor.position + anchor.rotation @ rel_p, float(t))


__all__ = [
    "ConstantRateModel",
    "GyroModel",
    "PreintCache",
    "angle_to_rot",
    "pos_at",
    "pose_at",
    "relative_pose",
    "rot_at",
    "rot_integral_const",
    "theta_const",
    "theta_preint",
    "vel_world",
]
