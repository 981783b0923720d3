"""Blend-input geometry and the convex blending arithmetic."""

import numpy as np
import pytest
import torch

from fvcap.geometry import (CameraView, DepthMap, TriangleMesh,
                            look_at_camera, render_color, render_depth)
from fvcap.blending import (BlendWeightNet, blend, build_blend_inputs,
                            prepare_branch_inputs, select_sources, swap_inputs)
from fvcap.synth import camera_ring


RIG = camera_ring(6, 64)


def test_select_sources_self_selection():
    got = select_sources(RIG[3], RIG)
    assert got[0].id == 3
    assert got[1].id in (2, 4)


def test_select_sources_bisector_symmetry():
    novel = camera_ring(1, 64, start_azimuth=np.pi / 6)[0]  # between cams 0, 1
    got = select_sources(novel, RIG)
    assert {got[0].id, got[1].id} == {0, 1}


def test_select_sources_matches_bruteforce():
    rng = np.random.default_rng(0)
    for _ in range(100):
        az = rng.uniform(0, 2 * np.pi)
        novel = camera_ring(1, 64, start_azimuth=az, id_offset=100)[0]
        got = select_sources(novel, RIG)
        axis = novel.optical_axis
        angles = [(float(np.arccos(np.clip(c.optical_axis @ axis, -1, 1))), c.id)
                  for c in RIG]
        want = [i for _, i in sorted(angles)[:2]]
        assert [got[0].id, got[1].id] == want


def _plane(z, half=3.0, colors=(0.2, 0.5, 0.8)):
    v = np.array([[-half, -half, z], [half, -half, z],
                  [half, half, z], [-half, half, z]])
    mesh = TriangleMesh(v, np.array([[0, 1, 2], [0, 2, 3]]))
    mesh.colors = np.tile(np.asarray(colors), (4, 1))
    return mesh


def test_identity_source_gives_zero_occlusion_unit_angle():
    cam = CameraView(0, np.eye(3), np.zeros(3), (48.0, 48.0), (23.5, 23.5),
                     (48, 48))
    plane = _plane(2.0)
    img, depth = render_color(plane, cam, shading="albedo")
    inputs = build_blend_inputs(cam, depth, [cam, cam], [depth, depth],
                                [img, img])
    valid = inputs.valid[0]
    assert valid.sum() > 1000
    assert np.allclose(inputs.occlusion[0][valid], 0.0, atol=1e-9)
    assert np.allclose(inputs.angles[0][valid], 1.0, atol=1e-9)
    assert np.allclose(inputs.images[0][valid], img[valid], atol=1e-7)


def test_two_plane_construction_occlusion_sign():
    # novel camera sees a small near plane; the source camera is aimed so
    # the near plane leaves its frustum while the far plane region behind
    # it stays in frame.  The source content splatting onto the near-plane
    # pixels is then farther than the novel surface:
    # O = D_n - D_src->novel < 0 where the novel surface is missing from
    # the source.
    near = _plane(1.5, half=0.28, colors=(0.9, 0.2, 0.2))
    far = _plane(4.0, half=2.5, colors=(0.2, 0.9, 0.2))
    from fvcap.geometry import merge_meshes

    scene = merge_meshes([near, far])
    novel = CameraView(0, np.eye(3), np.zeros(3), (64.0, 64.0), (31.5, 31.5),
                       (64, 64))
    src = look_at_camera(1, (3.0, 0.0, 2.75), (0.0, 0.0, 4.0), 64.0, (64, 64))

    novel_depth = render_depth(scene, novel)
    src_depth = render_depth(scene, src)
    src_img, _ = render_color(scene, src, shading="albedo")

    # the near plane must be invisible to the source
    near_only = render_depth(near, src)
    assert not near_only.mask.any()

    inputs = build_blend_inputs(novel, novel_depth, [src, src],
                                [src_depth, src_depth], [src_img, src_img])
    near_mask = render_depth(near, novel).mask
    occ = inputs.occlusion[0]
    covered = near_mask & (occ != 0.0)
    assert covered.sum() > 20
    assert (occ[covered] < 0).all()


def test_angle_map_45_degrees():
    # rays from the two camera centers to the origin point are 45 degrees
    # apart; with a 65-px image the principal ray passes exactly through
    # the origin, so the center pixel carries cos(45) exactly
    verts = np.array([[-0.05, 0.0, -0.05], [0.05, 0.0, -0.05],
                      [0.05, 0.0, 0.05], [-0.05, 0.0, 0.05]])
    patch = TriangleMesh(verts, np.array([[0, 1, 2], [0, 2, 3]]))
    patch.colors = np.full((4, 3), 0.5)
    novel = look_at_camera(0, (0.0, -2.0, 0.0), (0.0, 0.0, 0.0), 64.0, (65, 65))
    src = look_at_camera(
        1, (-2.0 * np.sin(np.pi / 4), -2.0 * np.cos(np.pi / 4), 0.0),
        (0.0, 0.0, 0.0), 64.0, (65, 65))
    d_n = render_depth(patch, novel)
    d_s = render_depth(patch, src)
    img, _ = render_color(patch, src, shading="albedo")
    inputs = build_blend_inputs(novel, d_n, [src, src], [d_s, d_s],
                                [img, img])
    assert d_n.values[32, 32] == pytest.approx(2.0)
    got = inputs.angles[0][32, 32]
    assert got == pytest.approx(np.sqrt(2) / 2, abs=1e-9)


def test_angle_map_rigid_invariance():
    from scipy.spatial.transform import Rotation

    patch = TriangleMesh(
        np.array([[-0.2, 0.0, -0.2], [0.2, 0.0, -0.2], [0.2, 0.0, 0.2],
                  [-0.2, 0.0, 0.2]]),
        np.array([[0, 1, 2], [0, 2, 3]]),
        colors=np.full((4, 3), 0.5))
    novel = look_at_camera(0, (0.3, -2.0, 0.1), (0.0, 0.0, 0.0), 64.0, (64, 64))
    src = look_at_camera(1, (-1.2, -1.5, -0.2), (0.0, 0.0, 0.0), 64.0, (64, 64))

    def angles_of(mesh, cams):
        d_n = render_depth(mesh, cams[0])
        d_s = render_depth(mesh, cams[1])
        img, _ = render_color(mesh, cams[1], shading="albedo")
        inp = build_blend_inputs(cams[0], d_n, [cams[1], cams[1]],
                                 [d_s, d_s], [img, img])
        return inp.angles[0], inp.valid[0]

    a1, v1 = angles_of(patch, [novel, src])

    R = Rotation.from_rotvec([0.4, -0.2, 0.7]).as_matrix()
    t = np.array([0.3, 1.2, -0.5])

    def move_cam(cam):
        R2 = cam.rotation @ R.T
        t2 = cam.translation - cam.rotation @ R.T @ t
        return CameraView(cam.id, R2, t2, cam.focal, cam.principal,
                          cam.resolution)

    moved = patch.transformed(R, t)
    a2, v2 = angles_of(moved, [move_cam(novel), move_cam(src)])
    both = v1 & v2
    assert both.sum() > 100
    assert np.abs(a1[both] - a2[both]).max() < 1e-9


# --- blending arithmetic ---

def _random_inputs(rng, H=16, W=16):
    from fvcap.blending.inputs import BlendInputs

    cam = CameraView(0, np.eye(3), np.zeros(3), (16.0, 16.0), (7.5, 7.5),
                     (16, 16))
    depth = DepthMap(np.full((H, W), 2.0))
    return BlendInputs(
        images=rng.random((2, H, W, 3)),
        occlusion=rng.normal(scale=0.1, size=(2, H, W)),
        angles=rng.uniform(-1, 1, size=(2, H, W)),
        valid=np.ones((2, H, W), dtype=bool),
        novel_depth=depth, novel_cam=cam, source_ids=(0, 1))


def test_blend_weight_one_returns_first_source():
    rng = np.random.default_rng(0)
    inputs = _random_inputs(rng)
    out, _ = blend(inputs, weights=np.ones((16, 16)))
    assert np.array_equal(out, inputs.images[0])


def test_blend_identical_sources_any_weight():
    rng = np.random.default_rng(1)
    inputs = _random_inputs(rng)
    inputs.images[1] = inputs.images[0]
    out, _ = blend(inputs, weights=rng.random((16, 16)))
    assert np.allclose(out, inputs.images[0], atol=1e-12)


def test_blend_matches_scalar_oracle():
    rng = np.random.default_rng(2)
    inputs = _random_inputs(rng)
    w = rng.random((16, 16))
    out, _ = blend(inputs, weights=w)
    for _ in range(50):
        i = rng.integers(16)
        j = rng.integers(16)
        c = rng.integers(3)
        want = w[i, j] * inputs.images[0][i, j, c] \
            + (1 - w[i, j]) * inputs.images[1][i, j, c]
        assert abs(out[i, j, c] - want) < 1e-7


def test_blend_output_stays_in_unit_interval():
    rng = np.random.default_rng(3)
    inputs = _random_inputs(rng)
    out, _ = blend(inputs, weights=rng.random((16, 16)))
    assert out.min() >= 0.0 and out.max() <= 1.0


def test_swap_with_complemented_weights_is_exact():
    rng = np.random.default_rng(4)
    inputs = _random_inputs(rng)
    w = rng.random((16, 16))
    a, _ = blend(inputs, weights=w)
    b, _ = blend(swap_inputs(inputs), weights=1.0 - w)
    assert np.allclose(a, b, atol=1e-12)


def test_weight_map_in_unit_interval_and_rejects_bad_weights():
    rng = np.random.default_rng(5)
    inputs = _random_inputs(rng)
    net = BlendWeightNet(base=8)
    from fvcap.blending import predict_weights

    w = predict_weights(net, inputs)
    assert (w >= 0).all() and (w <= 1).all()
    with pytest.raises(ValueError):
        blend(inputs, weights=np.full((16, 16), 1.5))


def test_branch_encoders_share_parameters():
    net = BlendWeightNet(base=8)
    rng = np.random.default_rng(6)
    inputs = _random_inputs(rng)
    x = prepare_branch_inputs(inputs)
    # identical branch contents produce identical encoder features
    x2 = torch.stack([x[0], x[0]])
    f_a = net.encode(x2[None, :][0][0:1])
    f_b = net.encode(x2[None, :][0][1:2])
    for a, b in zip(f_a, f_b):
        assert torch.equal(a, b)


def test_appearance_loss_l2_gradient():
    from fvcap.blending import appearance_loss

    class ZeroFeatures(torch.nn.Module):
        def forward(self, x):
            return x.new_zeros((x.shape[0], 1))

    rng = np.random.default_rng(7)
    rendered = torch.tensor(rng.random((3, 3, 8, 8)), requires_grad=True)
    target = torch.tensor(rng.random((3, 3, 8, 8)))
    loss = appearance_loss(rendered, target, ZeroFeatures())
    loss.backward()
    want = 2.0 * (rendered.detach() - target) / 3.0
    assert torch.allclose(rendered.grad, want, atol=1e-12)
