"""Soft silhouettes, the masked tracking loss, and pose recovery."""

import numpy as np
import pytest
import torch

from fvcap.errors import NotVisible
from fvcap.geometry import VoxelGrid, OccupancyField
from fvcap.synth import box_mesh, camera_ring, icosphere
from fvcap.tracking import (RigidPose, TrackConfig, align_first_frame,
                            hard_silhouette, soft_silhouette, track_frame,
                            tracking_loss)


def _cams(n=6, size=48):
    return camera_ring(n, size, focal_scale=1.0)


def _pose_tensors(pose):
    q = torch.as_tensor(pose.quaternion, dtype=torch.float64)
    t = torch.as_tensor(pose.translation, dtype=torch.float64)
    return q, t


CUBE = box_mesh((0.35, 0.35, 0.35))
POSE = RigidPose.from_axis_angle((0, 0, 1), 0.4, (0.0, 0.0, 0.95))


def test_sharp_limit_inside_value_one():
    cam = _cams()[0]
    q, t = _pose_tensors(POSE)
    sil = soft_silhouette(CUBE, q, t, cam, sharpness=1e-6)
    hard = hard_silhouette(CUBE, POSE, cam)
    # the hard mask's interior pixels saturate to 1
    from scipy.ndimage import binary_erosion

    interior = binary_erosion(hard, iterations=2)
    assert interior.any()
    assert sil.numpy()[interior].min() > 1.0 - 1e-9


def test_far_outside_value_zero():
    cam = _cams()[0]
    q, t = _pose_tensors(POSE)
    sil = soft_silhouette(CUBE, q, t, cam, sharpness=1e-3).numpy()
    assert sil[0, 0] < 1e-9
    assert sil[-1, -1] < 1e-9


def test_values_in_unit_interval_and_sharpness_monotone():
    cam = _cams()[0]
    q, t = _pose_tensors(POSE)
    hard = hard_silhouette(CUBE, POSE, cam).astype(float)
    prev = None
    for sharp in (2e-2, 1e-2, 5e-3, 2.5e-3, 1e-3):
        sil = soft_silhouette(CUBE, q, t, cam, sharpness=sharp).numpy()
        assert sil.min() >= 0.0 and sil.max() <= 1.0
        linf = np.abs(sil - hard).max()
        if prev is not None:
            assert linf <= prev + 1e-9
        prev = linf


def test_pose_gradients_match_finite_differences():
    cam = camera_ring(1, 32, focal_scale=1.0)[0]
    pose = RigidPose.from_axis_angle((0.3, 0.2, 0.9), 0.5, (0.05, -0.1, 1.0))
    masks_target = hard_silhouette(CUBE, pose, cam).astype(float)
    target = torch.as_tensor(masks_target)

    def loss_of(qv, tv):
        sil = soft_silhouette(CUBE, qv, tv, cam, sharpness=5e-3)
        return ((sil - target) ** 2).mean()

    q0 = torch.as_tensor(pose.quaternion * 0.97 + 0.01)  # off-manifold on purpose
    t0 = torch.as_tensor(pose.translation + 0.02)
    q = q0.clone().requires_grad_(True)
    t = t0.clone().requires_grad_(True)
    loss = loss_of(q, t)
    loss.backward()

    eps = 1e-5
    for tensor, grad in ((q0, q.grad), (t0, t.grad)):
        for k in range(tensor.numel()):
            dp = tensor.clone()
            dm = tensor.clone()
            dp[k] += eps
            dm[k] -= eps
            if tensor is q0:
                lp = loss_of(dp, t0)
                lm = loss_of(dm, t0)
            else:
                lp = loss_of(q0, dp)
                lm = loss_of(q0, dm)
            fd = float((lp - lm) / (2 * eps))
            an = float(grad[k])
            denom = max(abs(fd), abs(an), 1e-8)
            assert abs(fd - an) / denom < 1e-3, (k, fd, an)


# --- tracking loss semantics ---

def test_loss_zero_when_silhouettes_match_and_no_overlap():
    cams = _cams(4)
    masks = [hard_silhouette(CUBE, POSE, c) for c in cams]
    q, t = _pose_tensors(POSE)
    hmasks = [np.zeros_like(m) for m in masks]
    loss = tracking_loss(CUBE, q, t, cams, masks, hmasks, sharpness=1e-6)
    assert float(loss) < 1e-4


def test_full_human_mask_zeroes_silhouette_term():
    cams = _cams(4)
    masks = [hard_silhouette(CUBE, POSE, c) for c in cams]
    hmasks = [np.ones_like(m) for m in masks]
    wrong = RigidPose.from_axis_angle((0, 1, 0), 1.0, (0.4, 0.2, 0.6))
    q, t = _pose_tensors(wrong)
    loss = tracking_loss(CUBE, q, t, cams, masks, hmasks)
    assert float(loss) == 0.0


def test_interpenetration_quarter_per_buried_vertex():
    # occupancy field that is 1 on a large region around the origin
    grid = VoxelGrid(np.array([-1.0, -1.0, -1.0]), 0.25, np.ones((9, 9, 9)))
    field = OccupancyField(grid)
    tiny = icosphere(0.05, 1)
    q, t = _pose_tensors(RigidPose.identity())
    loss = tracking_loss(tiny, q, t, [], [], [], human_field=field,
                         lambda_interpenetration=1.0)
    want = 0.25 * len(tiny.vertices)
    assert float(loss) == pytest.approx(want, rel=1e-6)


def test_interpenetration_zero_outside():
    grid = VoxelGrid(np.array([-1.0, -1.0, -1.0]), 0.25, np.zeros((9, 9, 9)))
    field = OccupancyField(grid)
    q, t = _pose_tensors(POSE)
    loss = tracking_loss(CUBE, q, t, [], [], [], human_field=field)
    assert float(loss) == 0.0


def test_loss_invariant_under_compensated_template_transform():
    # moving the template frame while compensating in the pose leaves the
    # world-space mesh, hence the loss, unchanged
    cams = _cams(3)
    masks = [hard_silhouette(CUBE, POSE, c) for c in cams]
    hmasks = [np.zeros_like(m) for m in masks]
    q, t = _pose_tensors(POSE)
    base = float(tracking_loss(CUBE, q, t, cams, masks, hmasks))

    inner = RigidPose.from_axis_angle((1, 2, 0.5), 0.8, (0.1, -0.2, 0.3))
    template2 = CUBE.transformed(inner.inverse().rotation,
                                 inner.inverse().translation)
    pose2 = POSE.compose(inner)
    q2, t2 = _pose_tensors(pose2)
    moved = float(tracking_loss(template2, q2, t2, cams, masks, hmasks))
    assert moved == pytest.approx(base, rel=1e-6, abs=1e-10)


def test_rigid_recursion_composition():
    rng = np.random.default_rng(0)
    pose_prev = RigidPose.from_axis_angle(rng.normal(size=3), 0.7,
                                          rng.normal(size=3))
    delta = RigidPose.from_axis_angle(rng.normal(size=3), 0.3,
                                      rng.normal(scale=0.1, size=3))
    mesh_prev = CUBE.transformed(pose_prev.rotation, pose_prev.translation)
    direct = mesh_prev.transformed(delta.rotation, delta.translation)
    composed = delta.compose(pose_prev)
    via_pose = CUBE.transformed(composed.rotation, composed.translation)
    assert np.abs(direct.vertices - via_pose.vertices).max() < 1e-9


# --- optimization ---

def test_fixed_point_recovery():
    cams = _cams(6, 64)
    masks = [hard_silhouette(CUBE, POSE, c) for c in cams]
    hmasks = [np.zeros_like(m) for m in masks]
    res = track_frame(CUBE, POSE, cams, masks, hmasks, None,
                      TrackConfig(iterations=100))
    assert np.degrees(res.pose.rotation_angle_to(POSE)) < 0.1
    assert np.linalg.norm(res.pose.translation - POSE.translation) < 1e-3


def test_perturbed_recovery_within_tolerance():
    cams = _cams(6, 64)
    true_pose = RigidPose.from_axis_angle((0.2, 1.0, 0.1), 0.5, (0.1, -0.05, 0.95))
    masks = [hard_silhouette(CUBE, true_pose, c) for c in cams]
    hmasks = [np.zeros_like(m) for m in masks]
    rng = np.random.default_rng(1)
    axis = rng.normal(size=3)
    start = RigidPose.from_axis_angle(axis, np.radians(10)).compose(true_pose)
    start = RigidPose(start.quaternion,
                      start.translation + rng.normal(scale=0.05 / np.sqrt(3), size=3))
    res = track_frame(CUBE, start, cams, masks, hmasks, None,
                      TrackConfig(iterations=100))
    assert np.degrees(res.pose.rotation_angle_to(true_pose)) <= 2.0
    assert np.linalg.norm(res.pose.translation - true_pose.translation) <= 0.01


def test_divergence_guard_returns_initial_pose():
    cams = _cams(2, 32)
    masks = [hard_silhouette(CUBE, POSE, c) for c in cams]
    hmasks = [np.zeros_like(m) for m in masks]
    start = RigidPose.from_axis_angle((0, 0, 1), 0.4, (0.0, 0.0, 0.95))
    res = track_frame(CUBE, start, cams, masks, hmasks, None,
                      TrackConfig(iterations=0))
    assert not res.diverged
    assert res.loss <= res.initial_loss


# --- first-frame alignment ---

def test_align_recovers_known_pose():
    cams = _cams(6, 64)
    true_pose = RigidPose.from_axis_angle((0, 0, 1), np.radians(25),
                                          (0.15, -0.1, 0.9))
    masks = [hard_silhouette(CUBE, true_pose, c) for c in cams]
    hmasks = [np.zeros_like(m) for m in masks]
    res = align_first_frame(CUBE, cams, masks, hmasks, None,
                            TrackConfig(iterations=60))
    # cube symmetry: accept any rotation equivalent under the octahedral group
    assert np.linalg.norm(res.pose.translation - true_pose.translation) <= 0.02
    got = hard_silhouette(CUBE, res.pose, cams[0])
    iou = (got & masks[0]).sum() / max((got | masks[0]).sum(), 1)
    assert iou > 0.85


def test_align_sphere_translation_only():
    cams = _cams(6, 64)
    ball = icosphere(0.18, 2)
    true_pose = RigidPose.from_axis_angle((1, 0, 0), 1.0, (-0.1, 0.2, 1.1))
    masks = [hard_silhouette(ball, true_pose, c) for c in cams]
    hmasks = [np.zeros_like(m) for m in masks]
    res = align_first_frame(ball, cams, masks, hmasks, None,
                            TrackConfig(iterations=40))
    assert np.linalg.norm(res.pose.translation - true_pose.translation) <= 0.01


def test_align_not_visible():
    cams = _cams(3, 32)
    empty = [np.zeros((32, 32), bool)] * 3
    with pytest.raises(NotVisible):
        align_first_frame(CUBE, cams, empty, empty)
