"""Direct intensity registration of a polar scan against a Cartesian local map."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .types import Chirp, Config, LocalMap, RadarScan, ScanState


def bilinear(local_map: LocalMap, x, y, with_grad: bool = False):
    """Bilinear map lookup at metric ``(x, y)``; zero (and zero slope) outside.

    Pixel ``(row i, col j)`` is centred at ``origin + (j, i) * resolution``.
    """
    img = local_map.image
    h, w = img.shape
    fx = (np.asarray(x, dtype=float) - local_map.origin[0]) / local_map.resolution
    fy = (np.asarray(y, dtype=float) - local_map.origin[1]) / local_map.resolution
    inside = (fx >= 0) & (fx <= w - 1) & (fy >= 0) & (fy <= h - 1)
    j0 = np.clip(np.floor(fx), 0, w - 2).astype(np.intp)
    i0 = np.clip(np.floor(fy), 0, h - 2).astype(np.intp)
    ax = np.where(inside, fx - j0, 0.0)
    ay = np.where(inside, fy - i0, 0.0)
    j0 = np.where(inside, j0, 0)
    i0 = np.where(inside, i0, 0)
    v00 = img[i0, j0]
    v01 = img[i0, j0 + 1]
    v10 = img[i0 + 1, j0]
    v11 = img[i0 + 1, j0 + 1]
    top = v00 + ax * (v01 - v00)
    bottom = v10 + ax * (v11 - v10)
    val = np.where(inside, top + ay * (bottom - top), 0.0)
    if not with_grad:
        return val
    scale = np.where(inside, 1.0 / local_map.resolution, 0.0)
    gx = ((1.0 - ay) * (v01 - v00) + ay * (v11 - v10)) * scale
    gy = (bottom - top) * scale
    return val, np.stack([gx, gy], axis=-1)


def chirp_signs(scan: RadarScan) -> np.ndarray:
    """-1 for up-chirp rows, +1 for down-chirp rows (sign of the half shift removed)."""
    return np.where(scan.chirp_dir == Chirp.UP, -1.0, 1.0)


def beam_directions(azimuths: np.ndarray) -> np.ndarray:
    return np.stack([np.cos(azimuths), np.sin(azimuths)], axis=-1)


def doppler_shift(azimuths: np.ndarray, v_body: np.ndarray, beta: float, vbias=None) -> np.ndarray:
    """Per-row up/down range difference ``beta * u_n . v`` for a body velocity."""
    v = np.asarray(v_body, dtype=float)
    if vbias is not None:
        v = v + np.asarray(vbias, dtype=float)
    return beta * beam_directions(azimuths) @ v


@dataclass
class Warp:
    """Warped coordinates of selected bins and their Jacobian w.r.t. the state vector."""

    points: np.ndarray
    jacobian: np.ndarray | None = None


def warp_points(
    scan: RadarScan,
    state: ScanState,
    model,
    config: Config,
    target_time: float | None = None,
    rows: np.ndarray | None = None,
    cols: np.ndarray | None = None,
    vbias=None,
    with_jacobian: bool = False,
) -> Warp:
    """Motion- and Doppler-corrected Cartesian coordinates of scan bins.

    Without ``rows``/``cols`` every bin is warped and ``points`` has shape
    ``(N, M, 2)``; otherwise the listed bins are warped, shape ``(K, 2)``.
    Coordinates are expressed in the radar frame at ``target_time``
    (the scan start when omitted).
    """
    n, m = scan.shape
    if rows is None:
        rows, cols = np.divmod(np.arange(n * m), m)
        out_shape = (n, m, 2)
    else:
        out_shape = (len(rows), 2)
    omega = 0.0 if state.omega is None else state.omega
    _, rot, integral, d_rot, d_integral = model.kinematics(omega, scan.timestamps)
    v = state.v_body
    dirs = beam_directions(scan.azimuths)
    half = 0.5 * chirp_signs(scan)
    shift = doppler_shift(scan.azimuths, v, config.beta, vbias)
    trans = integral @ v

    if target_time is not None and target_time != scan.timestamps[0]:
        _, rot_t, int_t, d_rot_t, d_int_t = model.kinematics(omega, np.asarray(float(target_time)))
        rt = rot_t.T
        rot = rt @ rot
        trans = (trans - int_t @ v) @ rt.T
        integral = rt @ (integral - int_t)
        # derivative of the re-expression w.r.t. omega
        d_rot = d_rot_t.T @ (rot_t @ rot) + rt @ d_rot
        d_integral = d_rot_t.T @ (rot_t @ integral) + rt @ (d_integral - d_int_t)

    rng = cols * scan.range_resolution + half[rows] * shift[rows]
    local = rng[:, None] * dirs[rows]
    pts = np.einsum("kij,kj->ki", rot[rows], local) + trans[rows]
    if not with_jacobian:
        return Warp(pts.reshape(out_shape))

    # d(range)/dv = half * beta * u_n
    d_rng_dv = (half[rows] * config.beta)[:, None] * dirs[rows]
    rot_dir = np.einsum("kij,kj->ki", rot[rows], dirs[rows])
    jac_v = rot_dir[:, :, None] * d_rng_dv[:, None, :] + integral[rows]
    if model.estimates_omega:
        jac_w = np.einsum("kij,kj->ki", d_rot[rows], local) + d_integral[rows] @ v
        jac = np.concatenate([jac_w[:, :, None], jac_v], axis=2)
    else:
        jac = jac_v
    return Warp(pts.reshape(out_shape), jac.reshape(out_shape + (jac.shape[-1],)))


def intensity_objective(
    scan: RadarScan,
    local_map: LocalMap,
    state: ScanState,
    model,
    config: Config,
    weights: np.ndarray | None = None,
    vbias=None,
    skip_zeros: bool = True,
) -> tuple[float, np.ndarray]:
    """Cross-correlation of the corrected scan with the map, and its gradient.

    ``scan.intensity`` is expected to be filtered already.  The gradient is
    taken w.r.t. :attr:`ScanState.vector`.
    """
    intensity = scan.intensity
    if weights is not None:
        intensity = intensity * weights
    n_vars = 3 if model.estimates_omega else 2
    if skip_zeros:
        rows, cols = np.nonzero(intensity)
    else:
        rows, cols = np.divmod(np.arange(intensity.size), intensity.shape[1])
    if rows.size == 0:
        return 0.0, np.zeros(n_vars)
    warp = warp_points(scan, state, model, config, rows=rows, cols=cols, vbias=vbias, with_jacobian=True)
    val, grad_xy = bilinear(local_map, warp.points[:, 0], warp.points[:, 1], with_grad=True)
    iota = intensity[rows, cols]
    score = float(np.dot(iota, val))
    grad = np.einsum("k,ki,kij->j", iota, grad_xy, warp.jacobian)
    return score, grad


def intensity_residuals(scan, local_map, state, model, config, vbias=None) -> np.ndarray:
    """``|iota - map(warped)|`` per bin, used by the robust weights."""
    warp = warp_points(scan, state, model, config, vbias=vbias)
    val = bilinear(local_map, warp.points[..., 0], warp.points[..., 1])
    return np.abs(scan.intensity - val)


def rasterize(points: np.ndarray, values: np.ndarray, like: LocalMap) -> np.ndarray:
    """Bilinear splat of ``values`` at ``points`` with per-pixel weight normalization."""
    h, w = like.image.shape
    fx = (points[:, 0] - like.origin[0]) / like.resolution
    fy = (points[:, 1] - like.origin[1]) / like.resolution
    ok = (fx >= 0) & (fx <= w - 1) & (fy >= 0) & (fy <= h - 1)
    fx, fy, values = fx[ok], fy[ok], values[ok]
    j0 = np.clip(np.floor(fx), 0, w - 2).astype(np.intp)
    i0 = np.clip(np.floor(fy), 0, h - 2).astype(np.intp)
    ax, ay = fx - j0, fy - i0
    acc = np.zeros(h * w)
    wsum = np.zeros(h * w)
    for di, dj, wt in (
        (0, 0, (1 - ax) * (1 - ay)),
        (0, 1, ax * (1 - ay)),
        (1, 0, (1 - ax) * ay),
        (1, 1, ax * ay),
    ):
        idx = (i0 + di) * w + (j0 + dj)
        acc += np.bincount(idx, weights=wt * values, minlength=h * w)
        wsum += np.bincount(idx, weights=wt, minlength=h * w)
    out = np.divide(acc, wsum, out=np.zeros_like(acc), where=wsum > 1e-12)
    return out.reshape(h, w)


def reexpress_map(local_map: LocalMap, rotation: np.ndarray, translation: np.ndarray, frame_time: float) -> LocalMap:
    """Resample the map into a frame whose pose in the current map frame is given."""
    xs, ys = local_map.pixel_centers()
    q = np.stack([xs.ravel(), ys.ravel()], axis=-1)
    old = q @ rotation.T + translation
    img = bilinear(local_map, old[:, 0], old[:, 1]).reshape(local_map.image.shape)
    return LocalMap(img, local_map.origin.copy(), local_map.resolution, frame_time)


def scan_image(scan: RadarScan, state: ScanState, model, config: Config, target_time: float, like: LocalMap, vbias=None) -> np.ndarray:
    warp = warp_points(scan, state, model, config, target_time=target_time, vbias=vbias)
    return rasterize(warp.points.reshape(-1, 2), scan.intensity.ravel(), like)


def update_map(
    local_map: LocalMap | None,
    scan: RadarScan,
    state: ScanState,
    model,
    config: Config,
    vbias=None,
) -> LocalMap:
    """Move the map to the next scan start, then blend in the corrected scan.

    ``local_map=None`` initializes the map directly from the scan.
    """
    t_next = scan.end_time()
    if local_map is None:
        template = LocalMap.empty(config.map_extent, config.map_resolution, t_next)
        template.image = scan_image(scan, state, model, config, t_next, template, vbias)
        return template
    omega = 0.0 if state.omega is None else state.omega
    _, rot, integral, _, _ = model.kinematics(omega, np.asarray(t_next))
    moved = reexpress_map(local_map, rot, integral @ state.v_body, t_next)
    fresh = scan_image(scan, state, model, config, t_next, moved, vbias)
    moved.image = (1.0 - config.gamma) * moved.image + config.gamma * fresh
    return moved
