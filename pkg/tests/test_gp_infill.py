import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dro import simulator as sim
from dro.gp_infill import build_stencil, filter_rows, gp_mean_weights, infill_rows, split_and_infill
from dro.types import RadarScan

from conftest import make_scan


def dense_gp_pixel(image, observed, n, m, neighborhood, ls, noise):
    """Eq.-2 style GP mean at (n, m) from the observed pixels of its neighbourhood, built from scratch."""
    rows_n, cols_m = image.shape
    hu, hv = neighborhood[0] // 2, neighborhood[1] // 2
    pts, vals = [], []
    for du in range(-hu, hu + 1):
        r = (n + du) % rows_n
        if not observed[r]:
            continue
        for dv in range(-hv, hv + 1):
            c = m + dv
            if 0 <= c < cols_m:
                pts.append((du, dv))
                vals.append(image[r, c])
    pts = np.array(pts, dtype=float)
    gram = np.empty((len(pts), len(pts)))
    for i, a in enumerate(pts):
        for j, b in enumerate(pts):
            gram[i, j] = np.exp(-0.5 * (((a[0] - b[0]) / ls[0]) ** 2 + ((a[1] - b[1]) / ls[1]) ** 2))
    k_star = np.exp(-0.5 * ((pts[:, 0] / ls[0]) ** 2 + (pts[:, 1] / ls[1]) ** 2))
    w = np.linalg.solve(gram + noise**2 * np.eye(len(pts)), k_star)
    return float(w @ np.array(vals)), float(w.sum())


@settings(max_examples=50, deadline=None)
@given(
    st.sampled_from([6, 8]),
    st.integers(2, 8),
    st.integers(0, 2**32 - 1),
    st.sampled_from([(3, 3), (5, 5), (3, 5), (5, 3)]),
    st.booleans(),
)
def test_stencil_matches_dense_gp(n, m, seed, neighborhood, normalize):
    gen = np.random.default_rng(seed)
    image = gen.uniform(0, 1, (n, m))
    observed = np.arange(n) % 2 == gen.integers(0, 2)
    ls, noise = (1.0, 1.5), 0.1
    stencil = build_stencil(ls, neighborhood, noise)
    out = infill_rows(image, observed, stencil, normalize=normalize)
    for r in np.flatnonzero(~observed):
        for c in range(m):
            val, wsum = dense_gp_pixel(image, observed, r, c, neighborhood, ls, noise)
            expected = val / wsum if normalize else val
            assert abs(out[r, c] - expected) < 1e-9
    assert np.array_equal(out[observed], image[observed])


def test_three_by_three_stencil_against_explicit_solve():
    st3 = build_stencil((1.0, 1.0), (3, 3), 0.1)
    pts = np.array([(r, c) for r in (-1, 1) for c in (-1, 0, 1)], dtype=float)
    d2 = ((pts[:, None, :] - pts[None, :, :]) ** 2).sum(-1)
    w = np.linalg.solve(np.exp(-0.5 * d2) + 0.01 * np.eye(6), np.exp(-0.5 * (pts**2).sum(1)))
    expected = np.zeros((3, 3))
    for (r, c), wi in zip(pts.astype(int), w):
        expected[r + 1, c + 1] = wi
    assert np.allclose(st3.weights, expected, atol=1e-12)
    assert np.all(st3.weights[1] == 0.0)


def test_scalar_gp_weight():
    d, sigma = 0.7, 0.3
    c = np.exp(-0.5 * d**2)
    w = gp_mean_weights(np.array([[0.0, d]]), np.zeros(2), (1.0, 1.0), sigma)
    assert w[0] == pytest.approx(c / (1.0 + sigma**2), abs=1e-14)


def test_large_noise_shrinks_weights_to_zero():
    assert np.abs(build_stencil(noise=1e4).weights).max() < 1e-6


@pytest.mark.parametrize("neighborhood", [(4, 5), (5, 4), (1, 5)])
def test_bad_neighborhood_rejected(neighborhood):
    with pytest.raises(ValueError):
        build_stencil(neighborhood=neighborhood)


def test_nonpositive_noise_rejected():
    with pytest.raises(ValueError):
        build_stencil(noise=0.0)


def _scan_from(img, chirp=None):
    n = img.shape[0]
    chirp = (np.arange(n) % 2 == 0).astype(np.int8) if chirp is None else chirp
    return RadarScan(np.arange(n) * 2 * np.pi / n, np.arange(n) * 1e-3, 0.5, img, chirp)


def test_constant_scan_gives_constant_images():
    images = split_and_infill(_scan_from(np.full((12, 9), 0.7)), build_stencil())
    assert np.allclose(images.up, 0.7, atol=1e-12) and np.allclose(images.down, 0.7, atol=1e-12)


def test_impulse_response_is_symmetric():
    img = np.zeros((12, 15))
    img[4, 7] = 1.0  # row 4 is an up-chirp row
    images = split_and_infill(_scan_from(img), build_stencil())
    assert images.up[4, 7] == 1.0
    # the inferred neighbours n +- 1 of the observing image carry a mirrored response
    assert images.up[3, 7] > 0
    assert np.allclose(images.up[3], images.up[5], atol=1e-15)
    assert np.allclose(images.up[3, :7], images.up[3, 8:][::-1], atol=1e-15)
    assert np.all(images.up[[1, 7, 9, 11]] == 0.0)
    # the other chirp never saw the return
    assert not images.down.any()


def test_observed_rows_preserved(scan):
    images = split_and_infill(scan, build_stencil())
    up = scan.chirp_dir == 1
    assert np.array_equal(images.up[up], scan.intensity[up])
    assert np.array_equal(images.down[~up], scan.intensity[~up])
    assert np.all(np.isfinite(images.up)) and np.all(np.isfinite(images.down))


def test_rows_wrap_across_seam():
    img = np.zeros((12, 6))
    img[0, 3] = 1.0  # up row at the seam; row 11 is down and should see it
    images = split_and_infill(_scan_from(img), build_stencil())
    assert images.up[11, 3] > 0 and images.up[11, 3] == pytest.approx(images.up[1, 3], rel=1e-12)


def test_non_alternating_rejected():
    with pytest.raises(ValueError):
        split_and_infill(make_scan(triangular=False), build_stencil())


def test_odd_row_count_drops_last_row_with_warning():
    img = np.random.default_rng(0).uniform(size=(13, 6))
    with pytest.warns(UserWarning):
        images = split_and_infill(_scan_from(img), build_stencil())
    assert images.shape == (12, 6) and len(images.azimuths) == 12


def test_static_scene_chirp_images_agree():
    # the half-rate row sampling of each chirp resolves beams of four azimuth steps or wider
    scene = dataclasses.replace(sim.suburb(), beam_width=4 * 2 * np.pi / 400)
    scan = sim.synth_scan(scene, 0.0)  # vehicle still at rest
    images = split_and_infill(scan, build_stencil())
    valid = (images.up > 0) | (images.down > 0)
    diff = np.abs(images.up - images.down)[valid].mean()
    assert diff < 0.05 * images.up[valid].mean()
    assert np.abs(images.up - images.down).sum() / np.abs(images.up).sum() < 0.05


def test_filter_all_zero_row():
    assert np.array_equal(filter_rows(np.zeros((2, 7))), np.zeros((2, 7)))


def test_filter_spike_row():
    row = np.zeros(21)
    row[10] = 5.0
    out = filter_rows(row)
    assert out.max() == pytest.approx(1.0) and np.argmax(out) == 10
    assert np.allclose(out[[10 - k for k in range(1, 3)]], out[[10 + k for k in range(1, 3)]])
    assert out[:5].max() < 1e-6


def test_filter_hand_computed_threshold():
    row = np.array([1.0, 1.0, 1.0, 10.0])
    std = np.sqrt(np.mean((row - row.mean()) ** 2))
    assert std == pytest.approx(3.897, abs=1e-3)
    out = filter_rows(row, blur_sigma=0.0)
    assert np.array_equal(out, [0.0, 0.0, 0.0, 1.0])


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(1e-3, 1e3))
def test_filter_scale_invariance(seed, c):
    img = np.random.default_rng(seed).uniform(0, 1, (3, 30)) ** 4
    assert np.allclose(filter_rows(c * img), filter_rows(img), atol=1e-12)

