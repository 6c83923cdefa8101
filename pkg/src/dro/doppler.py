"""Doppler velocity objective between infilled up- and down-chirp images."""

from __future__ import annotations

import numpy as np

from .gp_infill import ChirpImages
from .registration import beam_directions, doppler_shift
from .types import Config, ScanState


def row_query(image: np.ndarray, rows, r, range_resolution: float, with_grad: bool = False, kind: str = "linear"):
    """Interpolate ``image[rows]`` along range at metric ``r``; zero outside the row.

    ``kind="linear"`` blends the two nearest bins.  ``kind="cubic"`` uses the
    Catmull-Rom kernel over four bins (zero beyond the row ends), which keeps
    the slope continuous across bin boundaries.
    """
    image = np.asarray(image, dtype=float)
    m = image.shape[1]
    f = np.asarray(r, dtype=float) / range_resolution
    rows = np.asarray(rows)
    inside = (f >= 0) & (f <= m - 1)
    j0 = np.where(inside, np.clip(np.floor(f), 0, m - 2), 0).astype(np.intp)
    a = np.where(inside, f - j0, 0.0)
    p1 = image[rows, j0]
    p2 = image[rows, j0 + 1]
    if kind == "linear":
        val = p1 + a * (p2 - p1)
        slope = p2 - p1
    elif kind == "cubic":
        p0 = np.where(j0 >= 1, image[rows, np.maximum(j0 - 1, 0)], 0.0)
        p3 = np.where(j0 + 2 <= m - 1, image[rows, np.minimum(j0 + 2, m - 1)], 0.0)
        c1 = p2 - p0
        c2 = 2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3
        c3 = -p0 + 3.0 * p1 - 3.0 * p2 + p3
        val = p1 + 0.5 * a * (c1 + a * (c2 + a * c3))
        slope = 0.5 * (c1 + a * (2.0 * c2 + 3.0 * a * c3))
    else:
        raise ValueError(f"unknown interpolation kind {kind!r}")
    val = np.where(inside, val, 0.0)
    if not with_grad:
        return val
    return val, np.where(inside, slope / range_resolution, 0.0)


def doppler_objective(
    images: ChirpImages,
    state: ScanState,
    model,
    config: Config,
    weights: np.ndarray | None = None,
    vbias=None,
) -> tuple[float, np.ndarray]:
    """Correlation of the down image with the Doppler-rectified up image.

    Returns the score and its gradient w.r.t. :attr:`ScanState.vector`; the
    rotational entry, when present, is zero.
    """
    down = images.down if weights is None else images.down * weights
    n_vars = 3 if model.estimates_omega else 2
    rows, cols = np.nonzero(down)
    if rows.size == 0:
        return 0.0, np.zeros(n_vars)
    shift = doppler_shift(images.azimuths, state.v_body, config.beta, vbias)
    r = cols * images.range_resolution + shift[rows]
    val, slope = row_query(images.up, rows, r, images.range_resolution, with_grad=True, kind=config.doppler_interp)
    iota = down[rows, cols]
    score = float(np.dot(iota, val))
    dirs = beam_directions(images.azimuths)
    grad_v = config.beta * np.einsum("k,k,ki->i", iota, slope, dirs[rows])
    if n_vars == 3:
        return score, np.concatenate([[0.0], grad_v])
    return score, grad_v


def doppler_residuals(images: ChirpImages, state: ScanState, config: Config, vbias=None) -> np.ndarray:
    n, m = images.shape
    rows, cols = np.divmod(np.arange(n * m), m)
    shift = doppler_shift(images.azimuths, state.v_body, config.beta, vbias)
    val = row_query(
        images.up, rows, cols * images.range_resolution + shift[rows], images.range_resolution,
        kind=config.doppler_interp,
    )
    return np.abs(images.down - val.reshape(n, m))
