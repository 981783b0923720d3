"""Forward depth warping against a per-pixel splatting oracle."""

import numpy as np
import pytest

from fvcap.geometry import CameraView, DepthMap, look_at_camera, render_depth, warp_depth
from fvcap.synth.primitives import box_mesh
from oracles import warp_depth_oracle


def _cam(center, target=(0.0, 0.0, 0.0), size=48, focal=60.0, cam_id=0):
    return look_at_camera(cam_id, center, target, focal, (size, size))


def test_identity_warp_preserves_covered_pixels():
    cam = _cam((0.0, -2.0, 0.0))
    vals = np.zeros((48, 48))
    vals[10:30, 12:40] = 2.0
    src = DepthMap(vals)
    out = warp_depth(src, cam, cam)
    covered = src.mask
    assert np.allclose(out.values[covered], src.values[covered], atol=1e-9)


def test_plane_translation_along_axis():
    # fronto-parallel plane at 2 m; destination moves 0.1 m toward it
    cam = CameraView(0, np.eye(3), np.zeros(3), (60.0, 60.0), (23.5, 23.5), (48, 48))
    dst = CameraView(1, np.eye(3), np.array([0.0, 0.0, -0.1]), (60.0, 60.0),
                     (23.5, 23.5), (48, 48))
    src = DepthMap(np.full((48, 48), 2.0))
    out = warp_depth(src, cam, dst)
    covered = out.mask
    assert covered.sum() > 500
    assert np.allclose(out.values[covered], 1.9, atol=1e-6)


def test_two_box_scene_matches_point_splat_oracle():
    near = box_mesh((0.5, 0.5, 0.5)).transformed(np.eye(3), (-0.2, 0.0, 0.0))
    far = box_mesh((0.8, 0.8, 0.8)).transformed(np.eye(3), (0.3, 0.9, 0.1))
    from fvcap.geometry import merge_meshes

    scene = merge_meshes([near, far])
    src_cam = _cam((0.0, -2.5, 0.3), cam_id=0)
    dst_cam = _cam((0.8, -2.3, 0.1), cam_id=1)
    src = render_depth(scene, src_cam)
    got = warp_depth(src, src_cam, dst_cam)
    want = warp_depth_oracle(src, src_cam, dst_cam)
    covered = (got.values != 0) | (want != 0)
    agree = np.isclose(got.values, want, atol=1e-9) | ~covered
    frac = agree[covered].mean() if covered.any() else 1.0
    assert covered.sum() > 200
    assert frac >= 0.99


def test_resolution_mismatch_rejected():
    cam = _cam((0.0, -2.0, 0.0), size=48)
    with pytest.raises(ValueError):
        warp_depth(DepthMap(np.zeros((32, 32))), cam, cam)
