import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dro.types import (
    Config,
    GyroSeries,
    LocalMap,
    Mode,
    Pose2,
    RadarScan,
    ScanState,
    angle_to_rot,
    lever_velocity,
    rot_to_angle,
    wrap_angle,
)

angles = st.floats(-20.0, 20.0, allow_nan=False)


def test_angle_to_rot_zero_is_identity():
    assert np.array_equal(angle_to_rot(0.0), np.eye(2))


def test_angle_to_rot_quarter_turn_layout():
    assert np.allclose(angle_to_rot(np.pi / 2), [[0.0, 1.0], [-1.0, 0.0]], atol=1e-15)


@pytest.mark.parametrize("bad", [np.nan, np.inf, -np.inf])
def test_angle_to_rot_rejects_non_finite(bad):
    with pytest.raises(ValueError):
        angle_to_rot(bad)


@given(angles)
def test_rotation_inverse_symmetry(theta):
    assert np.allclose(angle_to_rot(theta) @ angle_to_rot(-theta), np.eye(2), atol=1e-12)


@given(angles, angles)
def test_rotation_composition_adds_angles(a, b):
    assert np.allclose(angle_to_rot(a) @ angle_to_rot(b), angle_to_rot(a + b), atol=1e-12)


@given(angles)
def test_rotation_is_orthonormal_and_angle_round_trips(theta):
    rot = angle_to_rot(theta)
    assert abs(np.linalg.det(rot) - 1.0) < 1e-12
    assert np.allclose(rot @ rot.T, np.eye(2), atol=1e-12)
    assert abs(wrap_angle(rot_to_angle(rot) - theta)) < 1e-12


@given(angles, angles, st.floats(-5, 5), st.floats(-5, 5))
def test_pose_compose_inverse(a, b, x, y):
    p = Pose2.from_angle(a, (x, y))
    q = Pose2.from_angle(b, (y, x))
    ident = p.compose(q).compose(q.inverse()).compose(p.inverse())
    assert np.allclose(ident.rotation, np.eye(2), atol=1e-9)
    assert np.allclose(ident.position, 0.0, atol=1e-9)


def test_pose_rejects_reflection():
    with pytest.raises(ValueError):
        Pose2(np.diag([1.0, -1.0]), np.zeros(2))


def test_lever_velocity_convention():
    # positive rate turns clockwise: a point ahead of the origin moves to -y
    assert np.allclose(lever_velocity([0.0, 0.0], 1.0, [1.0, 0.0]), [0.0, -1.0])
    assert np.allclose(lever_velocity([2.0, 0.0], 0.0, [1.0, 3.0]), [2.0, 0.0])


def _scan_kwargs(**over):
    n, m = 4, 3
    kw = dict(
        azimuths=np.arange(n) * np.pi / 2, timestamps=np.arange(n) * 0.1, range_resolution=0.5,
        intensity=np.ones((n, m)), chirp_dir=np.array([1, 0, 1, 0]),
    )
    kw.update(over)
    return kw


def test_scan_valid_and_properties():
    scan = RadarScan(**_scan_kwargs())
    assert scan.shape == (4, 3)
    assert scan.is_triangular
    assert np.allclose(scan.ranges, [0.0, 0.5, 1.0])
    assert scan.end_time() == pytest.approx(0.4)


@pytest.mark.parametrize(
    "over",
    [
        {"intensity": np.ones((1, 3)), "azimuths": [0.0], "timestamps": [0.0], "chirp_dir": [1]},
        {"intensity": -np.ones((4, 3))},
        {"intensity": np.full((4, 3), np.nan)},
        {"azimuths": np.array([0.0, 1.0, 1.0, 2.0])},
        {"azimuths": np.array([0.0, 1.0, 2.0, 7.0])},
        {"timestamps": np.array([0.0, 0.2, 0.1, 0.3])},
        {"chirp_dir": np.array([1, 0, 2, 0])},
        {"range_resolution": 0.0},
    ],
)
def test_scan_invariants_rejected(over):
    with pytest.raises(ValueError):
        RadarScan(**_scan_kwargs(**over))


def test_sawtooth_is_not_triangular():
    assert not RadarScan(**_scan_kwargs(chirp_dir=np.ones(4))).is_triangular


def test_gyro_series_gap_and_coverage():
    g = GyroSeries(np.array([0.0, 0.01, 0.02, 0.2, 0.21]), np.zeros(5))
    assert g.covers(0.0, 0.2)
    assert not g.covers(0.0, 0.3)
    assert g.has_gap(0.0, 0.21, 0.05)
    assert not g.has_gap(0.0, 0.015, 0.05)
    with pytest.raises(ValueError):
        GyroSeries(np.array([0.0, 0.0]), np.zeros(2))


def test_scan_state_vector_round_trip():
    s = ScanState(np.array([1.0, 2.0]), Pose2.identity(), omega=0.3)
    assert np.allclose(s.vector, [0.3, 1.0, 2.0])
    t = s.with_vector([0.1, 4.0, 5.0])
    assert t.omega == pytest.approx(0.1) and np.allclose(t.v_body, [4.0, 5.0])
    g = ScanState(np.array([1.0, 2.0]), Pose2.identity())
    assert np.allclose(g.with_vector([3.0, 4.0]).v_body, [3.0, 4.0])
    with pytest.raises(ValueError):
        ScanState(np.array([np.inf, 0.0]), Pose2.identity())


def test_local_map_validation_and_centres():
    m = LocalMap.empty(10.0, 0.5)
    assert m.image.shape == (21, 21)
    xs, ys = m.pixel_centers()
    assert xs[0, 0] == pytest.approx(-5.0) and ys[-1, 0] == pytest.approx(5.0)
    with pytest.raises(ValueError):
        LocalMap(-np.ones((2, 2)), np.zeros(2), 0.5, 0.0)
    with pytest.raises(ValueError):
        LocalMap(np.ones((2, 2)), np.zeros(2), 0.0, 0.0)


def test_config_validation():
    assert Config().mode is Mode.GD
    assert Config(mode="G").mode is Mode.G
    for bad in ({"gamma": 1.5}, {"beta": 0.0}, {"gp_neighborhood": (4, 5)}, {"mode": "x"}, {"doppler_interp": "nearest"}):
        with pytest.raises(ValueError):
            Config(**bad)


def test_mode_objective_flags():
    assert Mode.GD.uses_intensity and Mode.GD.uses_doppler
    assert Mode.G.uses_intensity and not Mode.G.uses_doppler
    assert Mode.D.uses_doppler and not Mode.D.uses_intensity
