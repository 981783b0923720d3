"""Projection, unprojection and camera serialization.

The DERIVED expectations come from an explicit 4x4 homogeneous matrix
pipeline (tests/oracles.py), a different code path than the package's
direct rotate-translate-divide implementation.
"""

import numpy as np
import pytest

from fvcap.geometry import (CameraView, in_image, load_cameras,
                            look_at_camera, project, save_cameras, unproject)
from oracles import project_matrix_oracle


def _identity_cam(f=500.0, c=250.0, size=500):
    return CameraView(
        id=0,
        rotation=np.eye(3),
        translation=np.zeros(3),
        focal=(f, f),
        principal=(c, c),
        resolution=(size, size),
    )


def _random_cam(rng, cam_id=0):
    # random rotation via QR of a Gaussian matrix
    q, r = np.linalg.qr(rng.normal(size=(3, 3)))
    q *= np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] *= -1
    return CameraView(
        id=cam_id,
        rotation=q.T,
        translation=rng.normal(scale=0.5, size=3),
        focal=(400 + 200 * rng.random(), 400 + 200 * rng.random()),
        principal=(300 + rng.random(), 250 + rng.random()),
        resolution=(640, 512),
    )


def test_on_axis_point():
    cam = _identity_cam()
    pix, depth, valid = project(np.array([0.0, 0.0, 1.0]), cam)
    assert valid
    assert depth == pytest.approx(1.0)
    assert pix == pytest.approx([250.0, 250.0])


def test_off_axis_point():
    # u = fx * x / z + cx = 500 * 0.1 + 250
    cam = _identity_cam()
    pix, depth, valid = project(np.array([0.1, 0.0, 1.0]), cam)
    assert valid
    assert depth == pytest.approx(1.0)
    assert pix == pytest.approx([300.0, 250.0])


def test_point_behind_camera_flagged():
    cam = _identity_cam()
    _, depth, valid = project(np.array([0.0, 0.0, -1.0]), cam)
    assert not valid
    assert depth <= 0


def test_matches_matrix_pipeline_oracle():
    rng = np.random.default_rng(3)
    for _ in range(50):
        cam = _random_cam(rng)
        point = rng.normal(scale=2.0, size=3)
        pix, depth, valid = project(point, cam)
        if not valid:
            continue
        opix, odepth = project_matrix_oracle(point, cam)
        assert np.allclose(pix, opix, atol=1e-9)
        assert abs(depth - odepth) < 1e-9


def test_project_unproject_round_trip():
    rng = np.random.default_rng(11)
    for _ in range(30):
        cam = _random_cam(rng)
        pix = rng.random(2) * [640, 512]
        depth = 0.3 + 3.0 * rng.random()
        world = unproject(pix, depth, cam)
        pix2, depth2, valid = project(world, cam)
        assert valid
        assert np.allclose(pix2, pix, rtol=1e-9, atol=1e-9)
        assert depth2 == pytest.approx(depth, rel=1e-9)


def test_vectorized_matches_scalar():
    rng = np.random.default_rng(5)
    cam = _random_cam(rng)
    pts = rng.normal(scale=2.0, size=(40, 3))
    pix, z, valid = project(pts, cam)
    for i in range(len(pts)):
        p1, z1, v1 = project(pts[i], cam)
        assert np.allclose(pix[i], p1)
        assert z[i] == pytest.approx(z1)
        assert valid[i] == v1


def test_rotation_validation():
    bad = np.eye(3)
    bad[0, 0] = 2.0
    with pytest.raises(ValueError):
        CameraView(0, bad, np.zeros(3), (500, 500), (250, 250), (500, 500))
    refl = np.diag([1.0, 1.0, -1.0])
    with pytest.raises(ValueError):
        CameraView(0, refl, np.zeros(3), (500, 500), (250, 250), (500, 500))


def test_look_at_points_camera_at_target():
    cam = look_at_camera(0, center=(2.0, 0.0, 1.0), target=(0.0, 0.0, 1.0),
                         focal=300.0, resolution=(256, 256))
    pix, depth, valid = project(np.array([0.0, 0.0, 1.0]), cam)
    assert valid
    assert depth == pytest.approx(2.0)
    assert pix == pytest.approx([127.5, 127.5])
    # world up projects upward in the image (decreasing v)
    pix_up, _, _ = project(np.array([0.0, 0.0, 1.3]), cam)
    assert pix_up[1] < 127.5


def test_in_image_bounds():
    flags = in_image(np.array([[0.0, 0.0], [639.4, 511.4], [-1.0, 5.0], [640.0, 5.0]]),
                     (640, 512))
    assert flags.tolist() == [True, True, False, False]


def test_camera_json_round_trip(tmp_path):
    rng = np.random.default_rng(7)
    cams = [_random_cam(rng, cam_id=i) for i in range(3)]
    path = tmp_path / "cameras.json"
    save_cameras(path, cams)
    loaded = load_cameras(path)
    for a, b in zip(cams, loaded):
        assert a.id == b.id
        assert np.allclose(a.rotation, b.rotation)
        assert np.allclose(a.translation, b.translation)
        assert a.focal == b.focal
        assert a.resolution == b.resolution
