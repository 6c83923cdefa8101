"""Normalized gradient ascent on the combined objective, plus robust re-runs."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .doppler import doppler_objective, doppler_residuals
from .gp_infill import ChirpImages
from .registration import intensity_objective, intensity_residuals
from .types import Config, LocalMap, RadarScan, ScanState


def robust_weight(delta) -> np.ndarray:
    """``(|delta| - 1)^6``: 1 for identical intensities, 0 for a full mismatch."""
    d = np.minimum(np.abs(np.asarray(delta, dtype=float)), 1.0)
    return (d - 1.0) ** 6


@dataclass
class Problem:
    """Everything one scan's objective depends on.

    ``scan`` holds filtered intensities; ``local_map`` and ``images`` are
    only needed for the objectives that are switched on.
    """

    model: object
    config: Config
    scan: RadarScan | None = None
    local_map: LocalMap | None = None
    images: ChirpImages | None = None
    use_intensity: bool = True
    use_doppler: bool = True
    vbias: np.ndarray | None = None
    intensity_weights: np.ndarray | None = None
    doppler_weights: np.ndarray | None = None

    def __post_init__(self):
        if self.use_intensity and (self.scan is None or self.local_map is None):
            raise ValueError("intensity objective needs a scan and a local map")
        if self.use_doppler and self.images is None:
            raise ValueError("Doppler objective needs chirp images")
        if not (self.use_intensity or self.use_doppler):
            raise ValueError("at least one objective must be active")

    def evaluate(self, state: ScanState) -> tuple[float, np.ndarray]:
        n_vars = 3 if self.model.estimates_omega else 2
        score, grad = 0.0, np.zeros(n_vars)
        if self.use_intensity:
            s, g = intensity_objective(
                self.scan, self.local_map, state, self.model, self.config,
                weights=self.intensity_weights, vbias=self.vbias,
            )
            score, grad = score + s, grad + g
        if self.use_doppler:
            s, g = doppler_objective(
                self.images, state, self.model, self.config,
                weights=self.doppler_weights, vbias=self.vbias,
            )
            score, grad = score + s, grad + g
        return score, grad

    def with_robust_weights(self, state: ScanState) -> Problem:
        """Copy of the problem with weights frozen at ``state``."""
        iw = dw = None
        if self.use_intensity:
            res = intensity_residuals(self.scan, self.local_map, state, self.model, self.config, self.vbias)
            iw = robust_weight(res)
        if self.use_doppler:
            dw = robust_weight(doppler_residuals(self.images, state, self.config, self.vbias))
        return Problem(
            self.model, self.config, self.scan, self.local_map, self.images,
            self.use_intensity, self.use_doppler, self.vbias, iw, dw,
        )


@dataclass
class SolveResult:
    state: ScanState
    score: float
    iterations: int
    degenerate: bool = False
    robust: bool = False
    flagged: bool = False
    history: list = field(default_factory=list, repr=False)


def optimize(problem: Problem, init_state: ScanState, max_iters: int | None = None) -> SolveResult:
    """Normalized gradient ascent with step halving on rejection.

    Stops when the step falls below ``config.step_min`` or after
    ``max_iters`` trial steps.  Trial states whose speed exceeds
    ``config.max_speed`` count as non-ascending.
    """
    cfg = problem.config
    max_iters = cfg.max_iters if max_iters is None else max_iters
    state = init_state
    score, grad = problem.evaluate(state)
    history = [score]
    norm = float(np.linalg.norm(grad))
    if norm == 0.0 or not np.isfinite(norm):
        return SolveResult(state, score, 0, degenerate=True, history=history)
    step = cfg.step_init
    iters = 0
    while step >= cfg.step_min and iters < max_iters:
        iters += 1
        trial = state.with_vector(state.vector + step * grad / norm)
        if np.linalg.norm(trial.v_body) > cfg.max_speed:
            step *= 0.5
            continue
        t_score, t_grad = problem.evaluate(trial)
        if t_score > score:
            state, score, grad = trial, t_score, t_grad
            history.append(score)
            norm = float(np.linalg.norm(grad))
            if norm == 0.0:
                break
        else:
            step *= 0.5
    return SolveResult(state, score, iters, history=history)


def acceleration_exceeded(v_new: np.ndarray, v_prev: np.ndarray, dt: float, threshold: float) -> bool:
    return bool(np.linalg.norm(np.asarray(v_new) - np.asarray(v_prev)) / dt > threshold)


def robust_reoptimize(problem: Problem, init_state: ScanState, prev_state: ScanState, dt: float) -> SolveResult:
    """Re-run with robust weights frozen per descent, starting from the warm start.

    The weights of each outer pass are evaluated at the state that pass
    starts from; ``config.robust_outer_iters`` passes are made.
    """
    cfg = problem.config
    state = init_state
    total = 0
    result = None
    for _ in range(max(1, cfg.robust_outer_iters)):
        weighted = problem.with_robust_weights(state)
        result = optimize(weighted, state)
        total += result.iterations
        state = result.state
    result.iterations = total
    result.robust = True
    result.flagged = acceleration_exceeded(state.v_body, prev_state.v_body, dt, cfg.accel_threshold)
    return result
