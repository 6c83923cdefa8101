"""Chirp splitting, Gaussian-process row infill and per-row intensity filtering.

A triangular-pattern scan alternates up and down chirps row by row.  Each
chirp image therefore observes every second azimuth; the missing rows are
inferred by GP regression restricted to a small neighbourhood.  Because the
observation grid is regular, the GP mean weights only depend on the
neighbourhood geometry and are computed once as a stencil.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve
from scipy.ndimage import gaussian_filter1d

from .types import Chirp, RadarScan


def se_kernel(a: np.ndarray, b: np.ndarray, lengthscales) -> np.ndarray:
    """Squared-exponential kernel between grid coordinates ``(row, col)``."""
    ls = np.asarray(lengthscales, dtype=float)
    d = (a[:, None, :] - b[None, :, :]) / ls
    return np.exp(-0.5 * np.sum(d * d, axis=-1))


def gp_mean_weights(x_obs: np.ndarray, x_star: np.ndarray, lengthscales, noise: float) -> np.ndarray:
    """Row vector ``k(x*, X) (K(X, X) + noise^2 I)^-1``."""
    x_obs = np.atleast_2d(np.asarray(x_obs, dtype=float))
    x_star = np.atleast_2d(np.asarray(x_star, dtype=float))
    gram = se_kernel(x_obs, x_obs, lengthscales) + noise**2 * np.eye(len(x_obs))
    k_star = se_kernel(x_star, x_obs, lengthscales)
    try:
        factor = cho_factor(gram)
    except LinAlgError as exc:
        raise np.linalg.LinAlgError("GP gram matrix is not positive definite") from exc
    weights = cho_solve(factor, k_star.T).T
    if not np.all(np.isfinite(weights)):
        raise np.linalg.LinAlgError("GP stencil solve produced non-finite weights")
    return weights[0]


@dataclass
class KernelStencil:
    """GP mean weights for a missing row given observed rows at odd offsets.

    ``weights[i, j]`` multiplies the sample at row offset ``i - U//2`` and
    column offset ``j - V//2``.  Rows at even offsets are unobserved and hold 0.
    Columns near the image border use truncated neighbourhoods, solved on
    demand and cached by their ``(lo, hi)`` column-offset range.
    """

    weights: np.ndarray
    neighborhood: tuple[int, int]
    lengthscales: tuple[float, float]
    noise: float
    _truncated: dict = field(default_factory=dict, repr=False)

    @property
    def row_offsets(self) -> np.ndarray:
        hu = self.neighborhood[0] // 2
        return np.array([d for d in range(-hu, hu + 1) if d % 2 != 0])

    def weights_for(self, lo: int, hi: int) -> np.ndarray:
        """Stencil restricted to column offsets ``lo..hi`` (inclusive)."""
        hv = self.neighborhood[1] // 2
        if (lo, hi) == (-hv, hv):
            return self.weights
        if (lo, hi) not in self._truncated:
            self._truncated[(lo, hi)] = _solve_stencil(
                self.neighborhood, self.lengthscales, self.noise, lo, hi
            )
        return self._truncated[(lo, hi)]


def _solve_stencil(neighborhood, lengthscales, noise, lo, hi) -> np.ndarray:
    u, v = neighborhood
    hu, hv = u // 2, v // 2
    rows = [d for d in range(-hu, hu + 1) if d % 2 != 0]
    cols = list(range(lo, hi + 1))
    x_obs = np.array([(r, c) for r in rows for c in cols], dtype=float)
    w = gp_mean_weights(x_obs, np.zeros(2), lengthscales, noise)
    out = np.zeros((u, v))
    for (r, c), wi in zip(x_obs.astype(int), w):
        out[r + hu, c + hv] = wi
    return out


def build_stencil(lengthscales=(1.0, 1.5), neighborhood=(5, 5), noise: float = 0.1) -> KernelStencil:
    u, v = (int(k) for k in neighborhood)
    if u <= 0 or v <= 0 or u % 2 == 0 or v % 2 == 0:
        raise ValueError(f"neighborhood must be odd, got {neighborhood}")
    if u < 3:
        raise ValueError("neighborhood must span at least one observed row on each side")
    if not noise > 0:
        raise ValueError("noise must be positive")
    lengthscales = tuple(float(x) for x in lengthscales)
    weights = _solve_stencil((u, v), lengthscales, noise, -(v // 2), v // 2)
    return KernelStencil(weights, (u, v), lengthscales, float(noise))


def infill_rows(
    image: np.ndarray, observed: np.ndarray, stencil: KernelStencil, normalize: bool = True
) -> np.ndarray:
    """Replace the rows where ``observed`` is False by the stencil response.

    Rows wrap cyclically.  Observed rows are copied untouched.  With
    ``normalize`` the response is divided by the stencil sum so constant
    inputs are reproduced exactly.
    """
    image = np.asarray(image, dtype=float)
    n, m = image.shape
    observed = np.asarray(observed, dtype=bool)
    u, v = stencil.neighborhood
    if n <= u:
        raise ValueError(f"need more than {u} rows for a {u}-row neighbourhood, got {n}")
    hu, hv = u // 2, v // 2
    missing = np.flatnonzero(~observed)
    out = image.copy()
    if missing.size == 0:
        return out

    padded = np.pad(image, ((0, 0), (hv, hv)))
    interior = np.zeros((missing.size, m))
    for du in stencil.row_offsets:
        src = padded[(missing + du) % n]
        for dv in range(-hv, hv + 1):
            w = stencil.weights[du + hu, dv + hv]
            interior += w * src[:, hv + dv : hv + dv + m]
    if normalize:
        interior /= stencil.weights.sum()

    # border columns with truncated neighbourhoods
    for col in list(range(min(hv, m))) + list(range(max(m - hv, hv), m)):
        lo, hi = max(-hv, -col), min(hv, m - 1 - col)
        w = stencil.weights_for(lo, hi)
        acc = np.zeros(missing.size)
        for du in stencil.row_offsets:
            rows = image[(missing + du) % n]
            for dv in range(lo, hi + 1):
                acc += w[du + hu, dv + hv] * rows[:, col + dv]
        interior[:, col] = acc / w.sum() if normalize else acc

    out[missing] = interior
    return out


@dataclass(frozen=True)
class ChirpImages:
    up: np.ndarray
    down: np.ndarray
    azimuths: np.ndarray
    timestamps: np.ndarray
    range_resolution: float

    def __post_init__(self):
        if self.up.shape != self.down.shape:
            raise ValueError("up and down images must have the same shape")

    @property
    def shape(self) -> tuple[int, int]:
        return self.up.shape


def split_and_infill(scan: RadarScan, stencil: KernelStencil, normalize: bool = True) -> ChirpImages:
    """Split a triangular scan by chirp direction and infill both halves."""
    if not scan.is_triangular:
        raise ValueError("chirp directions do not alternate; Doppler images need a triangular pattern")
    intensity, chirp = scan.intensity, scan.chirp_dir
    azimuths, timestamps = scan.azimuths, scan.timestamps
    if intensity.shape[0] % 2:
        warnings.warn("odd number of azimuths; dropping the last row", stacklevel=2)
        intensity, chirp = intensity[:-1], chirp[:-1]
        azimuths, timestamps = azimuths[:-1], timestamps[:-1]
    is_up = chirp == Chirp.UP
    up = infill_rows(intensity, is_up, stencil, normalize)
    down = infill_rows(intensity, ~is_up, stencil, normalize)
    return ChirpImages(up, down, azimuths, timestamps, scan.range_resolution)


def filter_rows(image: np.ndarray, blur_sigma: float = 1.0) -> np.ndarray:
    """Per-row denoising: threshold at 2 std, normalize, blur along range, cube.

    The row is normalized again after the blur so a lone return keeps a peak
    of exactly 1.  The result does not depend on a positive per-row scale.
    """
    img = np.array(image, dtype=float)
    if img.ndim == 1:
        return filter_rows(img[None, :], blur_sigma)[0]
    std = img.std(axis=1, keepdims=True)
    img[img < 2.0 * std] = 0.0
    img = _normalize_rows(img)
    if blur_sigma > 0:
        img = gaussian_filter1d(img, blur_sigma, axis=1, mode="constant")
        img = _normalize_rows(img)
    return img**3


def _normalize_rows(img: np.ndarray) -> np.ndarray:
    peak = img.max(axis=1, keepdims=True)
    scale = np.divide(1.0, peak, out=np.zeros_like(peak), where=peak > 0)
    return img * scale
